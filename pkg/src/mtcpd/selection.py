"""
Reconstruction errors, dataset-averaged rank selection and the
phase-coherence metric used to keep steering-like components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import frobenius_norm

__all__ = [
    "SliceErrorTable",
    "reconstruction_error",
    "select_rank_avg",
    "phase_ratios",
    "phase_coherence",
    "component_coherence",
    "select_by_pcm",
]

DEFAULT_PCM_THRESHOLD = 0.5


@dataclass
class SliceErrorTable:
    """Cumulative reconstruction errors, one row per realization.

    ``errors[q, R - 1]`` is the error of realization ``q`` when the first
    ``R`` components are kept.
    """

    errors: np.ndarray

    def __post_init__(self):
        self.errors = np.atleast_2d(np.asarray(self.errors, dtype=float))
        if self.errors.size == 0:
            raise ValueError("empty error table")
        if np.any(self.errors < 0):
            raise ValueError("errors must be non-negative")

    @property
    def r_max(self) -> int:
        return self.errors.shape[1]

    def mean_curve(self) -> np.ndarray:
        return self.errors.mean(axis=0)


def reconstruction_error(truth, estimate) -> float:
    """Absolute Frobenius error ``||truth - estimate||_F``."""
    truth, estimate = np.asarray(truth), np.asarray(estimate)
    if truth.shape != estimate.shape:
        raise ValueError(f"shape mismatch {truth.shape} vs {estimate.shape}")
    return frobenius_norm(truth - estimate)


def select_rank_avg(table) -> int:
    """Rank ``R >= 1`` minimizing the mean error over realizations (smallest on ties)."""
    if not isinstance(table, SliceErrorTable):
        table = SliceErrorTable(table)
    return int(np.argmin(table.mean_curve())) + 1


def phase_ratios(u) -> np.ndarray:
    """Unit-modulus ratios of adjacent normalized entries, ``u_{i+1}/u_i`` in phase.

    Ratios that involve a zero entry are dropped.
    """
    u = np.ravel(np.asarray(u, dtype=np.complex128))
    if u.size < 2:
        raise ValueError("need at least two entries")
    mag = np.abs(u)
    ok = (mag[1:] > 0) & (mag[:-1] > 0)
    a, b = u[:-1][ok], u[1:][ok]
    r = (b / np.abs(b)) * np.conj(a / np.abs(a))
    return r


def phase_coherence(u) -> float:
    """Deviation from a constant phase increment, ``sqrt(1 - |mean(delta)|^2)``.

    Zero for any steering vector, one when the phase ratios average out.
    A vector with no usable ratio (e.g. all zeros) scores 1.
    """
    d = phase_ratios(u)
    if d.size == 0:
        return 1.0
    # for unit-modulus ratios 1 - |mean|^2 equals their variance; the variance
    # form does not cancel catastrophically near zero
    var = np.mean(np.abs(d - d.mean()) ** 2)
    return float(min(1.0, np.sqrt(var)))


def component_coherence(component) -> float:
    """Mean phase coherence over the physical factors of ``component``.

    Length-1 modes carry no phase progression and are left out. The value is
    also stored on ``component.coherence``.
    """
    factors = [f for f in component.physical_factors if np.size(f) >= 2]
    if not factors:
        raise ValueError("component has no physical mode of length >= 2")
    sigma = float(np.mean([phase_coherence(f) for f in factors]))
    component.coherence = sigma
    return sigma


def select_by_pcm(components, threshold: float = DEFAULT_PCM_THRESHOLD) -> list:
    """Components with coherence below ``threshold``, in extraction order.

    If none qualifies, the single most coherent one is kept.
    """
    components = list(components)
    if not components:
        return []
    if any(c.coherence is None for c in components):
        raise ValueError("compute component_coherence first")
    kept = [c for c in components if c.coherence < threshold]
    if not kept:
        kept = [min(components, key=lambda c: c.coherence)]
    return kept
