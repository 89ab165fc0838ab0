"""
Dataset generation, SNR sweeps and report tables.

A sweep runs in two passes. The first pass is embarrassingly parallel over
``(realization, snr)`` tasks: add noise, split into UE slices, extract
``r_max`` components per slice and method, score them. The second pass
fixes the dataset-averaged rank per ``(snr, method)`` and then evaluates
every rank rule (plus the noisy and perfect-CSI references) per task.

Every random draw comes from a Philox substream keyed by
``(master_seed, realization, ...)`` so outputs do not depend on the worker
count or on task order.
"""

from __future__ import annotations

import csv
import io as _io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .channel import PropagationPath, add_awgn, generate_realization, make_rng
from .config import ExperimentConfig, config_from_dict
from .decomposition import cumulative_reconstructions, extract_components
from .io import dump_json, ensure_dir, read_tensor, write_components, write_tensor
from .link import evaluate_realization
from .selection import (
    SliceErrorTable,
    component_coherence,
    reconstruction_error,
    select_by_pcm,
    select_rank_avg,
)
from .tensor import reshape_ura, unreshape_ura

log = logging.getLogger(__name__)

__all__ = [
    "SweepFailed",
    "SweepResult",
    "cmd_generate",
    "cmd_sweep",
    "cmd_report",
    "noise_stream_key",
    "RECORD_FIELDS",
]

FAILURE_BUDGET = 0.10
REFERENCE_METHODS = ("noisy", "perfect")


class SweepFailed(RuntimeError):
    pass


def noise_stream_key(snr_db: float) -> int:
    """Non-negative integer identifying an SNR value inside RNG keys (milli-dB)."""
    if np.isposinf(snr_db):
        return 2 ** 32
    return int(round(snr_db * 1000)) + 2 ** 31


def _fmt(x) -> str:
    if isinstance(x, float):
        if np.isposinf(x):
            return "inf"
        return repr(x)
    return str(x)


# ---------------------------------------------------------------- generate

def _dataset_dir(out) -> Path:
    return Path(out) / "dataset"


def cmd_generate(cfg: ExperimentConfig, out=None) -> Path:
    """Write ``cfg.n_realizations`` clean channels plus ``metadata.json``."""
    root = ensure_dir(out or cfg.output_dir)
    ds = ensure_dir(_dataset_dir(root))
    sc = cfg.scenario
    entries = []
    for q in range(cfg.n_realizations):
        real = generate_realization(sc, cfg.master_seed, q)
        name = f"realization_{q:05d}.mtct"
        write_tensor(ds / name, real.clean)
        entries.append({"index": q, "file": name,
                        "paths": [p.to_dict() for p in real.paths]})
    dump_json(ds / "metadata.json", {
        "format_version": 1,
        "master_seed": cfg.master_seed,
        "scenario": sc.to_dict(),
        "config_digest": cfg.digest(),
        "code_version": __version__,
        "realizations": entries,
    })
    log.info("wrote %d realizations to %s", cfg.n_realizations, ds)
    return ds


def load_dataset(out):
    ds = _dataset_dir(out)
    meta_path = ds / "metadata.json"
    if not meta_path.exists():
        raise FileNotFoundError(f"no dataset at {ds}; run 'generate' first")
    meta = json.loads(meta_path.read_text())
    return ds, meta


def load_realization_paths(meta, q):
    return [PropagationPath.from_dict(p) for p in meta["realizations"][q]["paths"]]


# ---------------------------------------------------------------- sweep

@dataclass
class _MethodOutcome:
    components: list          # per UE slice, list of Rank1Component
    cum_errors: np.ndarray    # (N, r_max) slice errors for r = 1..r_max


@dataclass
class _TaskOutcome:
    realization: int
    snr_db: float
    methods: dict = field(default_factory=dict)
    error: str = ""


def _noisy_channel(cfg, clean, q, snr_db):
    rng = make_rng(cfg.master_seed, q, 1, noise_stream_key(snr_db))
    return add_awgn(clean, snr_db, rng)


def _slices(tensor, sc):
    return [reshape_ura(tensor[:, n, :], sc.x, sc.y) for n in range(sc.n)]


def _stack(slices):
    return np.stack([unreshape_ura(s) for s in slices], axis=1)


def _decompose_task(args):
    cfg, clean_path, q, snr_db = args
    out = _TaskOutcome(q, snr_db)
    try:
        clean = read_tensor(clean_path)
        noisy = _noisy_channel(cfg, clean, q, snr_db)
        sc = cfg.scenario
        truth_sl = _slices(clean, sc)
        noisy_sl = _slices(noisy, sc)
        for method in cfg.methods:
            plan = cfg.plan_for(method)
            comps_all = []
            errs = np.empty((sc.n, cfg.r_max))
            for n in range(sc.n):
                comps = extract_components(noisy_sl[n], plan, cfg.r_max, cfg.als)
                for c in comps:
                    component_coherence(c)
                    c.virtual_factors = list(c.virtual_factors)
                    c.fit_history = []
                e = [reconstruction_error(truth_sl[n], rec)
                     for rec in cumulative_reconstructions(comps)]
                # early stop on an exactly fitted residual: later ranks add nothing
                e += [e[-1]] * (cfg.r_max - len(e))
                errs[n] = e
                comps_all.append(comps)
            out.methods[method] = _MethodOutcome(comps_all, errs)
    except Exception as exc:  # recorded, counted against the failure budget
        log.warning("task (realization=%d, snr=%s) failed: %s", q, snr_db, exc)
        out.error = f"{type(exc).__name__}: {exc}"
    return out


def _estimate(slices_comps, picks, sc):
    est = []
    for comps, pick in zip(slices_comps, picks):
        acc = np.zeros((sc.x, sc.y, sc.k), dtype=np.complex128)
        for c in pick(comps):
            acc = acc + c.tensor()
        est.append(acc)
    return est


def _evaluate_task(args):
    cfg, clean_path, task, r_avg = args
    sc = cfg.scenario
    q, snr = task.realization, task.snr_db
    clean = read_tensor(clean_path)
    truth_sl = _slices(clean, sc)
    rows, se_rows = [], []

    def emit(method, rule, est_slices, ranks):
        est = _stack(est_slices)
        full = reconstruction_error(clean, est)
        se = {p: evaluate_realization(clean, est, p, cfg.snr_dl_db) for p in cfg.streams_p}
        for n in range(sc.n):
            rows.append({
                "realization": q, "ue_slice": n, "snr_db": snr, "method": method,
                "rank_rule": rule, "selected_rank": ranks[n],
                "slice_error": reconstruction_error(truth_sl[n], est_slices[n]),
                "full_error": full, **{f"se_p{p}": se[p] for p in cfg.streams_p},
                "status": "ok",
            })
        for p in cfg.streams_p:
            se_rows.append({"realization": q, "snr_db": snr, "method": method,
                            "rank_rule": rule, "p": p, "se_bps_hz": se[p]})

    for method in cfg.methods:
        outcome = task.methods[method]
        comps = outcome.components
        for rule in cfg.rank_rules:
            if rule == "fixed":
                picks = [lambda cs: cs] * sc.n
            elif rule == "avg":
                r = r_avg[(snr, method)]
                picks = [lambda cs, r=r: cs[:r]] * sc.n
            else:
                picks = [lambda cs: select_by_pcm(cs, cfg.pcm_threshold)] * sc.n
            est = _estimate(comps, picks, sc)
            ranks = [len(pk(cs)) for pk, cs in zip(picks, comps)]
            emit(method, rule, est, ranks)

    noisy = _noisy_channel(cfg, clean, q, snr)
    emit("noisy", "none", _slices(noisy, sc), [0] * sc.n)
    emit("perfect", "none", truth_sl, [0] * sc.n)
    return rows, se_rows


@dataclass
class SweepResult:
    records: list
    se_records: list
    component_records: list
    rank_avg: dict
    provenance: dict


def record_fields(cfg):
    return (["realization", "ue_slice", "snr_db", "method", "rank_rule", "selected_rank",
             "slice_error", "full_error"] + [f"se_p{p}" for p in cfg.streams_p] + ["status"])


RECORD_FIELDS = record_fields(ExperimentConfig())
COMPONENT_FIELDS = ["realization", "ue_slice", "snr_db", "method", "r", "sigma_r", "cum_error"]
SE_FIELDS = ["realization", "snr_db", "method", "rank_rule", "p", "se_bps_hz"]
RANK_FIELDS = ["snr_db", "method", "r_avg"]


def _write_csv(path, fieldnames, rows):
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: _fmt(row.get(k, "")) for k in fieldnames})
    Path(path).write_text(buf.getvalue())


def _map(fn, items, workers):
    if workers <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=1))


def cmd_sweep(cfg: ExperimentConfig, out=None, workers: int = 1) -> SweepResult:
    """Run every configured method and rank rule over the dataset and SNR grid."""
    root = Path(out or cfg.output_dir)
    ds, meta = load_dataset(root)
    n_avail = len(meta["realizations"])
    if n_avail < cfg.n_realizations:
        raise ValueError(f"dataset holds {n_avail} realizations, config needs {cfg.n_realizations}")
    files = [ds / meta["realizations"][q]["file"] for q in range(cfg.n_realizations)]

    tasks = [(cfg, files[q], q, snr) for q in range(cfg.n_realizations) for snr in cfg.snr_grid_db]
    log.info("sweep: %d decomposition tasks, %d worker(s)", len(tasks), workers)
    outcomes = _map(_decompose_task, tasks, workers)

    failed = [o for o in outcomes if o.error]
    if len(failed) > FAILURE_BUDGET * len(outcomes):
        raise SweepFailed(f"{len(failed)} of {len(outcomes)} tasks failed; first: {failed[0].error}")
    good = [o for o in outcomes if not o.error]

    comp_rows = []
    for o in good:
        for method, mo in o.methods.items():
            for n, comps in enumerate(mo.components):
                for r in range(cfg.r_max):
                    sigma = comps[r].coherence if r < len(comps) else ""
                    comp_rows.append({"realization": o.realization, "ue_slice": n,
                                      "snr_db": o.snr_db, "method": method, "r": r + 1,
                                      "sigma_r": sigma, "cum_error": float(mo.cum_errors[n, r])})

    r_avg = {}
    for snr in cfg.snr_grid_db:
        for method in cfg.methods:
            rows = [np.sqrt(np.sum(o.methods[method].cum_errors ** 2, axis=0))
                    for o in good if o.snr_db == snr]
            if rows:
                r_avg[(snr, method)] = select_rank_avg(SliceErrorTable(np.array(rows)))

    eval_args = [(cfg, files[o.realization], o, r_avg) for o in good]
    evaluated = _map(_evaluate_task, eval_args, workers)
    records, se_records = [], []
    for rows, se_rows in evaluated:
        records.extend(rows)
        se_records.extend(se_rows)
    fields_ = record_fields(cfg)
    for o in failed:
        for n in range(cfg.scenario.n):
            for method in cfg.methods:
                for rule in cfg.rank_rules:
                    records.append({"realization": o.realization, "ue_slice": n,
                                    "snr_db": o.snr_db, "method": method, "rank_rule": rule,
                                    "status": "error: " + o.error.replace("\n", " ")})
    records.sort(key=lambda r: (r["realization"], cfg.snr_grid_db.index(r["snr_db"]),
                                r["ue_slice"], r["method"], r["rank_rule"]))

    if cfg.dump_components:
        dump_root = ensure_dir(root / "components")
        for o in good:
            for method, mo in o.methods.items():
                for n, comps in enumerate(mo.components):
                    d = dump_root / f"q{o.realization:05d}_snr{_fmt(o.snr_db)}_{method}_n{n}"
                    write_components(d, comps, cfg.plan_for(method),
                                     {"realization": o.realization, "snr_db": _fmt(o.snr_db),
                                      "method": method, "ue_slice": n})

    provenance = {
        "config_digest": cfg.digest(),
        "master_seed": cfg.master_seed,
        "code_version": __version__,
        "dataset_digest": meta.get("config_digest", ""),
        "tasks": len(outcomes),
        "failed_tasks": len(failed),
        "config": {k: v for k, v in cfg.to_dict().items() if k != "output_dir"},
    }
    rank_rows = [{"snr_db": s, "method": m, "r_avg": r} for (s, m), r in r_avg.items()]

    _write_csv(root / "records.csv", fields_, records)
    _write_csv(root / "components.csv", COMPONENT_FIELDS, comp_rows)
    _write_csv(root / "se.csv", SE_FIELDS, se_records)
    _write_csv(root / "rank_avg.csv", RANK_FIELDS, rank_rows)
    dump_json(root / "provenance.json", provenance)
    return SweepResult(records, se_records, comp_rows, r_avg, provenance)


# ---------------------------------------------------------------- report

def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _snr_sort_key(s):
    return float("inf") if s == "inf" else float(s)


def _write_dat(path, header, rows):
    lines = [" ".join(header)]
    for row in rows:
        lines.append(" ".join(_fmt(v) if not isinstance(v, str) else v for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _median(values):
    return float(np.median(values)) if values else float("nan")


def cmd_report(out) -> dict:
    """Median tables versus SNR from a finished sweep; returns ``{name: path}``.

    * ``rank_avg.dat``: dataset-averaged rank per method.
    * ``slice_error_db.dat``: median per-slice error in dB (``10 log10``).
    * ``se_p<P>.dat``: median spectral efficiency per stream count.
    * ``full_error.dat``: median full-tensor error.

    Columns are named ``<method>_<rule>`` after the ``snr_db`` column.
    """
    root = Path(out)
    rec_path = root / "records.csv"
    if not rec_path.exists():
        raise FileNotFoundError(f"no results at {root}; run 'sweep' first")
    records = [r for r in _read_csv(rec_path) if r["status"] == "ok"]
    if not records:
        raise ValueError("results contain no successful records")
    ranks = _read_csv(root / "rank_avg.csv")
    rep = ensure_dir(root / "report")

    snrs = sorted({r["snr_db"] for r in records}, key=_snr_sort_key)
    series = []
    for r in records:
        key = f"{r['method']}_{r['rank_rule']}"
        if key not in series:
            series.append(key)
    p_cols = [c for c in records[0] if c.startswith("se_p")]

    def grouped(value, first_slice_only=False, transform=float):
        table = []
        for s in snrs:
            row = [s]
            for key in series:
                vals = [transform(float(r[value])) for r in records
                        if r["snr_db"] == s and f"{r['method']}_{r['rank_rule']}" == key
                        and (not first_slice_only or r["ue_slice"] == "0")]
                row.append(_median(vals))
            table.append(row)
        return table

    def to_db(v):
        return 10 * np.log10(v) if v > 0 else float("-inf")

    paths = {}
    methods = sorted({r["method"] for r in ranks})
    rank_rows = [[s] + [next((float(x["r_avg"]) for x in ranks
                              if x["snr_db"] == s and x["method"] == m), float("nan"))
                        for m in methods] for s in snrs]
    paths["rank_avg"] = rep / "rank_avg.dat"
    _write_dat(paths["rank_avg"], ["snr_db"] + methods, rank_rows)

    paths["slice_error_db"] = rep / "slice_error_db.dat"
    _write_dat(paths["slice_error_db"], ["snr_db"] + series,
               grouped("slice_error", transform=to_db))
    # full-tensor quantities repeat on every slice row; use slice 0 only
    for col in p_cols:
        paths[col] = rep / f"{col}.dat"
        _write_dat(paths[col], ["snr_db"] + series, grouped(col, first_slice_only=True))
    paths["full_error"] = rep / "full_error.dat"
    _write_dat(paths["full_error"], ["snr_db"] + series,
               grouped("full_error", first_slice_only=True))
    return paths


def load_sweep_config(out) -> ExperimentConfig:
    """Config of a finished sweep; ``output_dir`` is taken from ``out``."""
    prov = json.loads((Path(out) / "provenance.json").read_text())
    return replace(config_from_dict(prov["config"]), output_dir=str(out))
