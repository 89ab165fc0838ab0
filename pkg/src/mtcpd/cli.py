"""
Command line entry point: ``mtcpd {generate,sweep,report,selftest}``.

Set ``MTCPD_LOG`` (``DEBUG``, ``INFO``, ``WARNING``, ...) for log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace

import numpy as np

from .config import METHODS, desk_profile, load_config, full_profile, parse_snr

log = logging.getLogger("mtcpd")


def _list(text):
    return [s for s in (x.strip() for x in text.split(",")) if s]


def build_config(args):
    base = full_profile() if args.paper_scale else desk_profile()
    cfg = load_config(args.config, base) if args.config else base
    kw = {}
    if args.out:
        kw["output_dir"] = args.out
    if args.seed is not None:
        kw["master_seed"] = args.seed
    if args.methods:
        methods = tuple(_list(args.methods))
        bad = set(methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}; choose from {METHODS}")
        kw["methods"] = methods
    if args.snr:
        kw["snr_grid_db"] = tuple(parse_snr(s) for s in _list(args.snr))
    return replace(cfg, **kw) if kw else cfg


# ---------------------------------------------------------------- selftest

def _selftest_checks():
    from .channel import steering_vector
    from .decomposition import (
        extract_components, make_binary_plan, make_trivial_plan, parameter_count,
        rank1_als, dft_init, reconstruct,
    )
    from .selection import phase_coherence
    from .tensor import (
        TensorizationPlan, detensorize, kronecker_chain, steering_subfrequencies, tensorize,
        unfold,
    )

    rng = np.random.default_rng(7)

    def roundtrip():
        plan = make_binary_plan(4, 4, 8)
        for _ in range(50):
            t = rng.standard_normal((4, 4, 8)) + 1j * rng.standard_normal((4, 4, 8))
            if not np.array_equal(detensorize(tensorize(t, plan), plan), t):
                return False
        return True

    def steering_rank_one():
        for factors in [(2, 2, 2), (4, 2), (2, 2, 2, 2)]:
            k = int(np.prod(factors))
            plan = TensorizationPlan.from_factors((1,), (1,), factors)
            for a in np.linspace(-0.5, 0.5, 16, endpoint=False):
                v = tensorize(steering_vector(k, a).reshape(1, 1, k), plan)
                subs = [steering_vector(d, f)
                        for d, f in zip(factors, steering_subfrequencies(a, factors))]
                if np.max(np.abs(kronecker_chain(subs) - v.reshape(-1, order="F"))) > 1e-12:
                    return False
                for n in range(v.ndim):
                    if np.linalg.svd(unfold(v, n), compute_uv=False)[1:].max(initial=0) > 1e-12 * np.sqrt(k):
                        return False
        return True

    def steering_recovery():
        for plan in [make_trivial_plan(4, 4, 16), make_binary_plan(4, 4, 16)]:
            t = np.einsum("i,j,k->ijk", steering_vector(4, 0.13), steering_vector(4, -0.31),
                          steering_vector(16, 0.071))
            comps = extract_components(t, plan, 1)
            if np.linalg.norm(t - reconstruct(comps)) > 1e-8 * np.linalg.norm(t):
                return False
        return True

    def als_monotone():
        for _ in range(20):
            t = rng.standard_normal((4, 5, 6)) + 1j * rng.standard_normal((4, 5, 6))
            h = rank1_als(t, dft_init(t)).fit_history
            if np.any(np.diff(h) > 1e-12 * np.linalg.norm(t)):
                return False
        return True

    def pcm_zero():
        return all(phase_coherence(steering_vector(n, a)) <= 1e-12
                   for n in (2, 8, 64) for a in np.linspace(-0.5, 0.45, 8))

    def param_count():
        return (parameter_count(make_trivial_plan(8, 8, 512), 1) == 528
                and parameter_count(make_binary_plan(8, 8, 512), 1) == 30)

    return [
        ("tensorize/detensorize round-trip", roundtrip),
        ("tensorized steering vectors are rank-1", steering_rank_one),
        ("single-path exact recovery (CPD, MTCPD)", steering_recovery),
        ("rank-1 ALS residual non-increasing", als_monotone),
        ("phase coherence zero on steering vectors", pcm_zero),
        ("parameter counts 528 / 30", param_count),
    ]


def cmd_selftest(args=None, out=sys.stdout) -> int:
    """Run the fast invariant checks; exit code 0 iff all pass."""
    results = []
    if args is not None and (args.config or args.paper_scale):
        try:
            build_config(args)
            results.append(("configuration valid", True, ""))
        except (ValueError, TypeError, OSError) as exc:
            results.append(("configuration valid", False, str(exc)))
    for name, fn in _selftest_checks():
        t0 = time.perf_counter()
        try:
            ok, note = bool(fn()), ""
        except Exception as exc:
            ok, note = False, f"{type(exc).__name__}: {exc}"
        results.append((name, ok, note or f"{time.perf_counter() - t0:.2f}s"))
    width = max(len(r[0]) for r in results)
    for name, ok, note in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {note}", file=out)
    passed = sum(r[1] for r in results)
    print(f"{passed}/{len(results)} checks passed", file=out)
    return 0 if passed == len(results) else 1


# ---------------------------------------------------------------- main

def make_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML experiment config")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed")
    common.add_argument("--workers", type=int, default=1, metavar="N")
    common.add_argument("--methods", metavar="LIST", help="comma-separated, e.g. cpd,mtcpd")
    common.add_argument("--snr", metavar="LIST", help="comma-separated uplink SNRs in dB; write --snr=-10,0 when the list starts with a minus")
    common.add_argument("--paper-scale", action="store_true",
                        help="start from the full-size profile (slow)")
    parser = argparse.ArgumentParser(
        prog="mtcpd", description="Channel estimation experiments with (mode-tensorized) CPD.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write a channel dataset")
    sub.add_parser("sweep", parents=[common], help="run estimators over the SNR grid")
    sub.add_parser("report", parents=[common], help="median tables from sweep results")
    sub.add_parser("selftest", parents=[common], help="fast invariant checks")
    return parser


def main(argv=None) -> int:
    from .harness import SweepFailed, cmd_generate, cmd_report, cmd_sweep

    logging.basicConfig(level=os.environ.get("MTCPD_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = make_parser().parse_args(argv)
    if args.command == "selftest":
        return cmd_selftest(args)
    try:
        cfg = build_config(args)
        if args.command == "generate":
            print(cmd_generate(cfg))
        elif args.command == "sweep":
            res = cmd_sweep(cfg, workers=args.workers)
            for (snr, method), r in sorted(res.rank_avg.items()):
                print(f"snr={snr:g} dB  {method:6s} R_avg={r}")
        elif args.command == "report":
            for name, path in cmd_report(cfg.output_dir).items():
                print(f"{name}: {path}")
    except (ValueError, OSError, SweepFailed) as exc:
        print(f"mtcpd {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
