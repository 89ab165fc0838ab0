"""
Experiment configuration.

Configs are TOML files with the sections ``[scenario]``, ``[als]`` and
``[plans.<method>]``; any key left out takes its default. Two profiles are
built in: ``desk`` (the default, small enough for a laptop) and ``full``
(8x8 URA, N=2, K=512, R=40, 1200 realizations).

Example::

    snr_grid_db = [-20, -10, 0]
    n_realizations = 50
    methods = ["cpd", "mtcpd"]

    [scenario]
    x = 4
    y = 4
    k = 64

    [plans.mtcpd]
    kind = "binary"        # or "trivial", or explicit factors:
    # factors_x = [2, 2]
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .channel import ScenarioConfig
from .decomposition import AlsSettings, make_binary_plan, make_trivial_plan
from .tensor import TensorizationPlan

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

__all__ = [
    "ExperimentConfig",
    "desk_profile",
    "full_profile",
    "load_config",
    "config_from_dict",
    "resolve_plan",
    "parse_snr",
]

METHODS = ("cpd", "mtcpd")
RANK_RULES = ("fixed", "avg", "pcm")
DEFAULT_PLANS = {"cpd": {"kind": "trivial"}, "mtcpd": {"kind": "binary"}}


def parse_snr(value) -> float:
    """SNR in dB; ``"inf"`` / ``"noiseless"`` map to the noiseless sentinel."""
    if isinstance(value, str):
        v = value.strip().lower()
        if v in ("inf", "+inf", "noiseless", "none"):
            return float("inf")
        return float(v)
    return float(value)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    snr_grid_db: tuple = (-20.0, -10.0, 0.0)
    n_realizations: int = 50
    methods: tuple = METHODS
    plans: dict = field(default_factory=lambda: dict(DEFAULT_PLANS))
    r_max: int = 16
    als: AlsSettings = field(default_factory=AlsSettings)
    rank_rules: tuple = RANK_RULES
    pcm_threshold: float = 0.5
    streams_p: tuple = (1, 2)
    snr_dl_db: float = 10.0
    master_seed: int = 2026
    output_dir: str = "runs/desk"
    dump_components: bool = False

    def __post_init__(self):
        if int(self.n_realizations) < 1:
            raise ValueError("n_realizations must be >= 1")
        if not self.snr_grid_db:
            raise ValueError("snr_grid_db must not be empty")
        if int(self.r_max) < 1:
            raise ValueError("r_max must be >= 1")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ValueError(f"methods must be a non-empty subset of {METHODS}, got {self.methods}")
        bad = set(self.rank_rules) - set(RANK_RULES)
        if bad or not self.rank_rules:
            raise ValueError(f"rank_rules must be a non-empty subset of {RANK_RULES}")
        if not 0 < float(self.pcm_threshold):
            raise ValueError("pcm_threshold must be > 0")
        top = min(self.scenario.m, self.scenario.n)
        for p in self.streams_p:
            if not 1 <= int(p) <= top:
                raise ValueError(f"streams_p entry {p} outside [1, {top}]")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ValueError("master_seed must be a u64")
        for m in self.methods:
            resolve_plan(self, m)

    def plan_for(self, method: str) -> TensorizationPlan:
        return resolve_plan(self, method)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snr_grid_db"] = [_snr_out(s) for s in self.snr_grid_db]
        for key in ("methods", "rank_rules", "streams_p"):
            d[key] = list(d[key])
        return d

    def digest(self) -> str:
        """Hash of everything that influences results (not the output location)."""
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("dump_components")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _snr_out(s):
    return "inf" if np.isposinf(s) else float(s)


def resolve_plan(cfg: ExperimentConfig, method: str) -> TensorizationPlan:
    sc = cfg.scenario
    spec = dict(cfg.plans.get(method, DEFAULT_PLANS[method]))
    kind = spec.pop("kind", "explicit" if spec else DEFAULT_PLANS[method]["kind"])
    if kind == "trivial":
        return make_trivial_plan(sc.x, sc.y, sc.k)
    if kind == "binary":
        return make_binary_plan(sc.x, sc.y, sc.k)
    if kind == "explicit":
        return TensorizationPlan(
            (sc.x, sc.y, sc.k),
            tuple(spec.get("factors_x", (sc.x,))),
            tuple(spec.get("factors_y", (sc.y,))),
            tuple(spec.get("factors_k", (sc.k,))),
        )
    raise ValueError(f"unknown plan kind {kind!r} for method {method}")


def desk_profile() -> ExperimentConfig:
    return ExperimentConfig()


def full_profile() -> ExperimentConfig:
    return ExperimentConfig(
        scenario=ScenarioConfig(x=8, y=8, n=2, k=512, n_clusters=8, subpaths_per_cluster=10),
        snr_grid_db=tuple(float(s) for s in range(-24, 5, 2)),
        n_realizations=1200,
        r_max=40,
        output_dir="runs/full",
    )


def config_from_dict(d: dict, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    base = base or desk_profile()
    d = dict(d)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kw = {}
    if "scenario" in d:
        kw["scenario"] = replace(base.scenario, **d.pop("scenario"))
    if "als" in d:
        kw["als"] = replace(base.als, **d.pop("als"))
    if "plans" in d:
        plans = dict(base.plans)
        plans.update({k: dict(v) for k, v in d.pop("plans").items()})
        kw["plans"] = plans
    if "snr_grid_db" in d:
        kw["snr_grid_db"] = tuple(parse_snr(s) for s in d.pop("snr_grid_db"))
    for key in ("methods", "rank_rules", "streams_p"):
        if key in d:
            kw[key] = tuple(d.pop(key))
    kw.update(d)
    return replace(base, **kw)


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    with open(Path(path), "rb") as fh:
        return config_from_dict(tomllib.load(fh), base)
