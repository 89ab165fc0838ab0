"""
On-disk formats.

Tensor records (``.mtct``)::

    b"MTCT" | version u16 | order u16 | dims u64 * order | (re, im) f64 * prod(dims)

all little-endian, entries in first-index-fastest order. Several records
may be concatenated in one file.

Component dumps are a directory holding one ``.mtct`` file per component
(physical factors ``u_X, u_Y, u_K`` followed by the virtual factors, each an
order-1 record) and an ``index.json`` with ``r``, scale and ``sigma_r`` per
component.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .decomposition import Rank1Component
from .tensor import TensorizationPlan

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "encode_tensor",
    "decode_tensors",
    "write_tensor",
    "write_tensors",
    "read_tensor",
    "read_tensors",
    "write_components",
    "read_components",
    "dump_json",
]

MAGIC = b"MTCT"
FORMAT_VERSION = 1
_HEAD = struct.Struct("<4sHH")


def encode_tensor(t) -> bytes:
    t = np.asarray(t, dtype=np.complex128)
    if t.ndim == 0:
        t = t.reshape(1)
    head = _HEAD.pack(MAGIC, FORMAT_VERSION, t.ndim)
    dims = np.asarray(t.shape, dtype="<u8").tobytes()
    flat = t.ravel(order="F")
    data = np.empty(2 * flat.size, dtype="<f8")
    data[0::2] = flat.real
    data[1::2] = flat.imag
    return head + dims + data.tobytes()


def decode_tensors(buf: bytes) -> list:
    out, pos = [], 0
    while pos < len(buf):
        if len(buf) - pos < _HEAD.size:
            raise ValueError("truncated tensor header")
        magic, version, order = _HEAD.unpack_from(buf, pos)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported format version {version}")
        pos += _HEAD.size
        dims = tuple(int(d) for d in np.frombuffer(buf, dtype="<u8", count=order, offset=pos))
        pos += 8 * order
        count = int(np.prod(dims)) if dims else 1
        nbytes = 16 * count
        if len(buf) - pos < nbytes:
            raise ValueError("truncated tensor data")
        data = np.frombuffer(buf, dtype="<f8", count=2 * count, offset=pos)
        pos += nbytes
        out.append((data[0::2] + 1j * data[1::2]).reshape(dims, order="F"))
    return out


def write_tensors(path, tensors) -> None:
    with open(path, "wb") as fh:
        for t in tensors:
            fh.write(encode_tensor(t))


def write_tensor(path, t) -> None:
    write_tensors(path, [t])


def read_tensors(path) -> list:
    return decode_tensors(Path(path).read_bytes())


def read_tensor(path) -> np.ndarray:
    ts = read_tensors(path)
    if len(ts) != 1:
        raise ValueError(f"{path} holds {len(ts)} tensors, expected one")
    return ts[0]


def dump_json(path, obj) -> None:
    """Deterministic JSON (sorted keys, fixed separators, trailing newline)."""
    text = json.dumps(obj, sort_keys=True, indent=1, separators=(",", ": "))
    Path(path).write_text(text + "\n")


def _plan_dict(plan):
    return {
        "physical_dims": list(plan.physical_dims),
        "factors_x": list(plan.factors_x),
        "factors_y": list(plan.factors_y),
        "factors_k": list(plan.factors_k),
    }


def write_components(directory, components, plan: TensorizationPlan, meta=None) -> None:
    """Dump ``components`` (from one slice) into ``directory``."""
    directory = Path(directory)
    directory.mkdir(exist_ok=True)
    records = []
    for r, c in enumerate(components, start=1):
        name = f"component_{r:03d}.mtct"
        write_tensors(directory / name, list(c.physical_factors) + list(c.virtual_factors))
        scale = complex(c.scale)
        records.append({
            "r": r,
            "file": name,
            "scale_re": scale.real,
            "scale_im": scale.imag,
            "sigma_r": c.coherence,
            "collapsed": bool(c.collapsed),
            "iterations": int(c.iterations),
        })
    dump_json(directory / "index.json",
              {"plan": _plan_dict(plan), "components": records, "meta": meta or {}})


def read_components(directory):
    """Inverse of :func:`write_components`; returns ``(components, plan, meta)``."""
    directory = Path(directory)
    index = json.loads((directory / "index.json").read_text())
    plan = TensorizationPlan(**{k: tuple(v) for k, v in index["plan"].items()})
    comps = []
    for rec in index["components"]:
        ts = read_tensors(directory / rec["file"])
        comps.append(Rank1Component(
            virtual_factors=ts[3:],
            scale=complex(rec["scale_re"], rec["scale_im"]),
            physical_factors=tuple(ts[:3]),
            coherence=rec["sigma_r"],
            iterations=rec["iterations"],
            collapsed=rec["collapsed"],
        ))
    return comps, plan, index["meta"]


def ensure_dir(path) -> Path:
    """Create ``path`` if missing; its parent must already exist."""
    path = Path(path)
    if not path.exists():
        os.mkdir(path)
    elif not path.is_dir():
        raise NotADirectoryError(str(path))
    return path
