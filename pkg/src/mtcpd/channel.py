"""
Synthetic multipath MIMO-OFDM channels.

A channel is a sum of plane-wave paths, each contributing a rank-1 term
``s_l * a_BS(alpha, beta) o a_UE(gamma) o g(tau)`` to an ``M x N x K`` tensor,
where ``a_BS = kron(a_X(alpha), a_Y(beta))`` for an ``X x Y`` URA.

Scenarios are drawn from a clustered geometric model: a few clusters placed
uniformly in the normalized frequency domain, each spawning closely spaced
subpaths.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .tensor import frobenius_norm

log = logging.getLogger(__name__)

__all__ = [
    "PropagationPath",
    "ScenarioConfig",
    "ChannelRealization",
    "make_rng",
    "wrap_frequency",
    "steering_vector",
    "synthesize_channel",
    "normalize_channel",
    "noise_variance",
    "add_awgn",
    "sample_scenario",
    "generate_realization",
]

NOISELESS = float("inf")


def wrap_frequency(f):
    """Reduce normalized frequencies modulo 1 into ``[-1/2, 1/2)``."""
    return (np.asarray(f, dtype=float) + 0.5) % 1.0 - 0.5


def make_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Counter-based (Philox) generator for the substream ``key`` of ``master_seed``.

    Keys are tuples of non-negative ints, e.g. ``(realization, stream_id)``;
    distinct keys give independent streams regardless of the order in which
    they are created.
    """
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class PropagationPath:
    gain: complex
    alpha: float
    beta: float
    gamma: float
    tau: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "tau"):
            v = float(getattr(self, name))
            if not -0.5 <= v < 0.5:
                raise ValueError(f"{name}={v} outside [-1/2, 1/2)")
            object.__setattr__(self, name, v)
        g = complex(self.gain)
        if not abs(g) > 0:
            raise ValueError("path gain must be nonzero")
        object.__setattr__(self, "gain", g)

    def to_dict(self) -> dict:
        return {
            "gain_re": self.gain.real,
            "gain_im": self.gain.imag,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "tau": self.tau,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PropagationPath":
        return cls(
            complex(d["gain_re"], d["gain_im"]),
            d["alpha"], d["beta"], d["gamma"], d["tau"],
        )


@dataclass(frozen=True)
class ScenarioConfig:
    """Array sizes and clustered-scenario statistics.

    ``angular_spread`` and ``delay_spread`` are standard deviations of the
    per-subpath offsets in normalized frequency units; ``power_decay_db`` is
    the power drop between consecutive clusters.
    """

    x: int = 4
    y: int = 4
    n: int = 2
    k: int = 64
    n_clusters: int = 4
    subpaths_per_cluster: int = 4
    angular_spread: float = 0.02
    delay_spread: float = 0.002
    power_decay_db: float = 3.0

    def __post_init__(self):
        for name in ("x", "y", "n", "k", "n_clusters", "subpaths_per_cluster"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"scenario.{name} must be >= 1")
        for name in ("angular_spread", "delay_spread"):
            if float(getattr(self, name)) < 0:
                raise ValueError(f"scenario.{name} must be >= 0")

    @property
    def m(self) -> int:
        return self.x * self.y

    @property
    def n_paths(self) -> int:
        return self.n_clusters * self.subpaths_per_cluster

    @property
    def dims(self) -> tuple:
        return (self.x, self.y, self.n, self.k)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ChannelRealization:
    paths: list
    clean: np.ndarray
    noisy: Optional[np.ndarray] = None
    snr_db: float = NOISELESS
    seed: int = 0
    index: int = 0
    extra: dict = field(default_factory=dict)


def steering_vector(length: int, freq: float, strict: bool = False) -> np.ndarray:
    """``[1, e^{j2pi f}, ..., e^{j2pi (length-1) f}]``.

    Frequencies outside ``[-1/2, 1/2)`` raise in ``strict`` mode and are
    wrapped with a warning otherwise.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if not -0.5 <= freq < 0.5:
        if strict:
            raise ValueError(f"frequency {freq} outside [-1/2, 1/2)")
        warnings.warn(f"frequency {freq} wrapped into [-1/2, 1/2)", stacklevel=2)
        freq = float(wrap_frequency(freq))
    return np.exp(2j * np.pi * freq * np.arange(length))


def _steering_matrix(length, freqs):
    return np.exp(2j * np.pi * np.outer(np.arange(length), freqs))


def synthesize_channel(paths, dims) -> np.ndarray:
    """Noiseless ``M x N x K`` channel tensor (not normalized)."""
    if not paths:
        raise ValueError("need at least one path")
    x, y, n, k = dims
    gains = np.array([p.gain for p in paths], dtype=np.complex128)
    ax = _steering_matrix(x, [p.alpha for p in paths])
    ay = _steering_matrix(y, [p.beta for p in paths])
    # kron(a_X, a_Y) column-wise
    abs_ = (ax[:, None, :] * ay[None, :, :]).reshape(x * y, len(paths))
    aue = _steering_matrix(n, [p.gamma for p in paths])
    g = _steering_matrix(k, [p.tau for p in paths])
    return np.einsum("ml,nl,kl,l->mnk", abs_, aue, g, gains, optimize=True)


def normalize_channel(h) -> np.ndarray:
    h = np.asarray(h, dtype=np.complex128)
    nrm = frobenius_norm(h)
    if nrm == 0:
        raise ValueError("cannot normalize a zero channel")
    return h / nrm


def noise_variance(snr_db: float, size: int) -> float:
    """Per-entry noise variance giving ``E||Z||_F^2 = 10^(-snr_db/10)``."""
    if np.isposinf(snr_db):
        return 0.0
    return 10.0 ** (-snr_db / 10.0) / size


def add_awgn(h, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise to a unit-norm tensor.

    ``snr_db = inf`` means noiseless and returns a copy of ``h``.
    """
    h = np.asarray(h, dtype=np.complex128)
    var = noise_variance(snr_db, h.size)
    if var == 0.0:
        return h.copy()
    z = rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape)
    return h + np.sqrt(var / 2.0) * z


def sample_scenario(cfg: ScenarioConfig, rng: np.random.Generator) -> list:
    """Draw a list of paths from the clustered geometric model."""
    c, s = cfg.n_clusters, cfg.subpaths_per_cluster
    centers = rng.uniform(-0.5, 0.5, size=(c, 4))
    powers = 10.0 ** (-cfg.power_decay_db * np.arange(c) / 10.0)
    powers /= powers.sum()
    spreads = np.array([cfg.angular_spread] * 3 + [cfg.delay_spread])
    offsets = rng.standard_normal((c, s, 4)) * spreads
    phases = rng.uniform(0.0, 2 * np.pi, size=(c, s))

    params = wrap_frequency(centers[:, None, :] + offsets)
    paths = []
    for ci in range(c):
        amp = np.sqrt(powers[ci] / s)
        for si in range(s):
            a, b, g, t = params[ci, si]
            paths.append(PropagationPath(amp * np.exp(1j * phases[ci, si]), a, b, g, t))
    return paths


def generate_realization(cfg: ScenarioConfig, master_seed: int, index: int) -> ChannelRealization:
    """Clean, unit-norm channel for realization ``index`` of ``master_seed``."""
    rng = make_rng(master_seed, index, 0)
    paths = sample_scenario(cfg, rng)
    clean = normalize_channel(synthesize_channel(paths, cfg.dims))
    return ChannelRealization(paths=paths, clean=clean, seed=master_seed, index=index)
