import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtcpd.channel import steering_vector
from mtcpd.decomposition import extract_components, make_binary_plan
from mtcpd.io import (
    decode_tensors,
    encode_tensor,
    ensure_dir,
    read_components,
    read_tensor,
    read_tensors,
    write_components,
    write_tensor,
    write_tensors,
)
from mtcpd.selection import component_coherence
from mtcpd.tensor import rank1_tensor


def test_header_layout():
    t = np.arange(6, dtype=complex).reshape(2, 3) * (1 + 2j)
    buf = encode_tensor(t)
    assert buf[:4] == b"MTCT"
    assert struct.unpack_from("<HH", buf, 4) == (1, 2)
    assert struct.unpack_from("<QQ", buf, 8) == (2, 3)
    assert len(buf) == 8 + 16 + 16 * 6


def test_first_index_fastest():
    t = np.array([[1, 2], [3, 4]], dtype=complex)
    data = np.frombuffer(encode_tensor(t), dtype="<f8", offset=8 + 16)
    np.testing.assert_array_equal(data[0::2], [1, 3, 2, 4])
    np.testing.assert_array_equal(data[1::2], 0)


@settings(max_examples=40, deadline=None)
@given(shape=st.lists(st.integers(1, 5), min_size=1, max_size=4), seed=st.integers(0, 2 ** 31))
def test_roundtrip_property(shape, seed):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    (back,) = decode_tensors(encode_tensor(t))
    np.testing.assert_array_equal(back, t)


def test_file_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    ts = [rng.standard_normal((3, 2, 4)) + 1j, steering_vector(5, 0.1)]
    write_tensors(tmp_path / "a.mtct", ts)
    back = read_tensors(tmp_path / "a.mtct")
    assert len(back) == 2
    for a, b in zip(ts, back):
        np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        read_tensor(tmp_path / "a.mtct")
    write_tensor(tmp_path / "b.mtct", ts[0])
    np.testing.assert_array_equal(read_tensor(tmp_path / "b.mtct"), ts[0])


@pytest.mark.parametrize("mutate", [
    lambda b: b"XXXX" + b[4:],
    lambda b: b[:4] + struct.pack("<H", 9) + b[6:],
    lambda b: b[:-1],
    lambda b: b + b"\x00",
])
def test_corrupt(mutate):
    with pytest.raises(ValueError):
        decode_tensors(mutate(encode_tensor(np.ones((2, 2)))))


def test_components_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    t = rank1_tensor([steering_vector(4, 0.1), steering_vector(4, 0.2), steering_vector(8, -0.3)])
    t = t + 0.1 * (rng.standard_normal(t.shape) + 1j * rng.standard_normal(t.shape))
    plan = make_binary_plan(4, 4, 8)
    comps = extract_components(t, plan, 3)
    for c in comps:
        component_coherence(c)
    write_components(tmp_path / "dump", comps, plan, {"note": "x"})
    back, plan2, meta = read_components(tmp_path / "dump")
    assert plan2 == plan and meta == {"note": "x"}
    assert len(back) == 3
    for a, b in zip(comps, back):
        assert complex(a.scale) == b.scale and a.coherence == b.coherence
        np.testing.assert_array_equal(a.tensor(), b.tensor())
        assert len(b.virtual_factors) == plan.order


def test_ensure_dir(tmp_path):
    assert ensure_dir(tmp_path / "new").is_dir()
    assert ensure_dir(tmp_path / "new").is_dir()
    with pytest.raises(FileNotFoundError):
        ensure_dir(tmp_path / "missing" / "child")
    (tmp_path / "file").write_text("")
    with pytest.raises(NotADirectoryError):
        ensure_dir(tmp_path / "file")
