"""
Greedy rank-by-rank CP-ALS on (optionally mode-tensorized) channel slices.

Each round tensorizes the current residual, initializes every virtual mode
with its dominant DFT column, fits one rank-1 term by alternating least
squares, recombines the virtual factors into physical-mode factors through
Kronecker chains and subtracts the resulting rank-1 tensor from the residual.
With the trivial plan ``(1, 1, 1)`` this is plain rank-1 deflation CPD.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .tensor import (
    TensorizationPlan,
    as_tensor,
    frobenius_norm,
    kronecker_chain,
    rank1_tensor,
    tensorize,
)

log = logging.getLogger(__name__)

__all__ = [
    "AlsSettings",
    "AlsResult",
    "Rank1Component",
    "dft_init",
    "random_init",
    "rank1_als",
    "make_trivial_plan",
    "make_binary_plan",
    "recombine_virtual_factors",
    "extract_components",
    "reconstruct",
    "cumulative_reconstructions",
    "parameter_count",
    "normalized_parameter_count",
]

COLLAPSE_RTOL = 1e-14
DFT_TIE_RTOL = 1e-12
INIT_METHODS = ("dft_dominant", "random")


@dataclass(frozen=True)
class AlsSettings:
    max_iterations: int = 1000
    tolerance: float = 1e-6
    init: str = "dft_dominant"
    seed: int = 0

    def __post_init__(self):
        if int(self.max_iterations) < 1:
            raise ValueError("als.max_iterations must be >= 1")
        if not float(self.tolerance) > 0:
            raise ValueError("als.tolerance must be > 0")
        if self.init not in INIT_METHODS:
            raise ValueError(f"als.init must be one of {INIT_METHODS}, got {self.init!r}")


class AlsResult(NamedTuple):
    factors: list
    scale: complex
    iterations: int
    fit_history: list
    collapsed: bool


@dataclass
class Rank1Component:
    """One extracted term ``scale * u_X o u_Y o u_K``.

    ``virtual_factors`` are unit-norm; ``physical_factors`` are their
    Kronecker recombinations (also unit-norm).
    """

    virtual_factors: list
    scale: complex
    physical_factors: tuple
    coherence: Optional[float] = None
    iterations: int = 0
    collapsed: bool = False
    fit_history: list = field(default_factory=list, repr=False)

    def tensor(self) -> np.ndarray:
        return self.scale * rank1_tensor(self.physical_factors)


def _dft_column(size, f):
    return np.exp(2j * np.pi * f * np.arange(size) / size) / np.sqrt(size)


def dft_init(t) -> list:
    """Dominant unit-norm DFT column of every mode.

    Column ``f`` of mode ``n`` is scored by ``||d_f^H X_(n)||_2``; the
    highest score wins, near-ties going to the lowest index.
    """
    t = as_tensor(t)
    if t.ndim < 2:
        raise ValueError("dft_init needs a tensor of order >= 2")
    init = []
    for n, size in enumerate(t.shape):
        spec = np.fft.fft(t, axis=n)
        other = tuple(a for a in range(t.ndim) if a != n)
        scores = np.sqrt(np.sum(np.abs(spec) ** 2, axis=other))
        best = scores.max()
        f = int(np.flatnonzero(scores >= best * (1 - DFT_TIE_RTOL))[0])
        init.append(_dft_column(size, f))
    return init


def random_init(t, rng: np.random.Generator) -> list:
    t = np.asarray(t)
    out = []
    for size in t.shape:
        v = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        out.append(v / np.linalg.norm(v))
    return out


def _contract_except(t, conj_factors, skip):
    """Contract ``t`` with ``conj_factors`` on every mode except ``skip``."""
    out = t
    for m in range(t.ndim - 1, -1, -1):
        if m != skip:
            out = np.tensordot(out, conj_factors[m], axes=([m], [0]))
    return out


def _residual_norm(t, factors, scale):
    return frobenius_norm(t - scale * rank1_tensor(factors))


def rank1_als(t, init, settings: AlsSettings = AlsSettings()) -> AlsResult:
    """Best rank-1 approximation of ``t`` by alternating least squares.

    Starting from ``init``, each sweep updates every mode in turn to the
    optimal unit-norm factor given the others. Iteration stops once the
    relative change of the residual norm between sweeps falls below
    ``settings.tolerance`` or after ``settings.max_iterations`` sweeps.

    A tensor whose best fit has ``|scale| < 1e-14 ||t||_F`` (including the
    zero tensor) is reported with ``collapsed=True`` and zero scale.
    """
    t = as_tensor(t)
    if len(init) != t.ndim:
        raise ValueError(f"need {t.ndim} init vectors, got {len(init)}")
    factors = []
    for n, v in enumerate(init):
        v = np.ravel(np.asarray(v, dtype=np.complex128))
        if v.size != t.shape[n]:
            raise ValueError(f"init vector {n} has length {v.size}, expected {t.shape[n]}")
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ValueError(f"init vector {n} is zero")
        factors.append(v / nrm)

    t_norm = frobenius_norm(t)
    floor = COLLAPSE_RTOL * t_norm
    if t_norm == 0:
        return AlsResult(factors, 0j, 0, [0.0], True)

    conj = [f.conj() for f in factors]
    scale = complex(np.vdot(factors[-1], _contract_except(t, conj, t.ndim - 1)))
    history = [_residual_norm(t, factors, scale)]

    iterations = 0
    for iterations in range(1, settings.max_iterations + 1):
        for n in range(t.ndim):
            c = _contract_except(t, conj, n)
            nrm = np.linalg.norm(c)
            if nrm <= floor:
                log.debug("rank-1 ALS collapsed at sweep %d mode %d", iterations, n)
                return AlsResult(factors, 0j, iterations, history, True)
            factors[n] = c / nrm
            conj[n] = factors[n].conj()
        # after the last mode update the optimal scale is the contraction norm
        scale = complex(nrm)
        res = _residual_norm(t, factors, scale)
        prev = history[-1]
        history.append(res)
        if abs(prev - res) <= settings.tolerance * prev or res <= floor:
            break
    return AlsResult(factors, scale, iterations, history, False)


def make_trivial_plan(x: int, y: int, k: int) -> TensorizationPlan:
    """The ``(A, B, C) = (1, 1, 1)`` plan, i.e. conventional CPD."""
    return TensorizationPlan.trivial(x, y, k)


def _twos(n):
    if n < 1 or n & (n - 1):
        raise ValueError(f"{n} is not a power of two")
    return (2,) * (n.bit_length() - 1) if n > 1 else (1,)


def make_binary_plan(x: int, y: int, k: int) -> TensorizationPlan:
    """Plan with every sub-dimension equal to 2 (all sizes must be powers of two)."""
    return TensorizationPlan((x, y, k), _twos(x), _twos(y), _twos(k))


def recombine_virtual_factors(virtual_factors, plan: TensorizationPlan) -> tuple:
    """Kronecker-recombine virtual-mode factors into ``(u_X, u_Y, u_K)``."""
    virtual_factors = list(virtual_factors)
    dims = plan.virtual_dims
    if len(virtual_factors) != len(dims):
        raise ValueError(f"expected {len(dims)} virtual factors, got {len(virtual_factors)}")
    for i, (v, d) in enumerate(zip(virtual_factors, dims)):
        if np.size(v) != d:
            raise ValueError(f"virtual factor {i} has length {np.size(v)}, expected {d}")
    out, start = [], 0
    for group in plan.mode_groups:
        out.append(kronecker_chain(virtual_factors[start:start + len(group)]))
        start += len(group)
    return tuple(out)


def extract_components(t, plan: TensorizationPlan, r_max: int,
                       settings: AlsSettings = AlsSettings()) -> list:
    """Greedy extraction of up to ``r_max`` rank-1 components from an ``X x Y x K`` slice.

    Returns the components in extraction order. Extraction ends early only
    when the residual drops below ``1e-14 ||t||_F``.
    """
    if r_max < 1:
        raise ValueError("r_max must be >= 1")
    t = as_tensor(t)
    if t.shape != plan.physical_dims:
        raise ValueError(f"tensor dims {t.shape} do not match plan {plan.physical_dims}")
    t_norm = frobenius_norm(t)
    residual = t.copy()
    comps = []
    for r in range(r_max):
        if frobenius_norm(residual) <= COLLAPSE_RTOL * t_norm:
            break
        v = tensorize(residual, plan)
        if settings.init == "random":
            init = random_init(v, np.random.default_rng([settings.seed, r]))
        else:
            init = dft_init(v)
        fit = rank1_als(v, init, settings)
        if fit.collapsed:
            log.debug("component %d collapsed, retrying from a random start", r + 1)
            fit = rank1_als(v, random_init(v, np.random.default_rng([settings.seed, r, 1])),
                            settings)
        physical = recombine_virtual_factors(fit.factors, plan)
        comp = Rank1Component(
            virtual_factors=fit.factors,
            scale=fit.scale,
            physical_factors=physical,
            iterations=fit.iterations,
            collapsed=fit.collapsed,
            fit_history=fit.fit_history,
        )
        comps.append(comp)
        if not fit.collapsed:
            residual = residual - comp.tensor()
    return comps


def reconstruct(components, up_to: Optional[int] = None) -> np.ndarray:
    """Sum of the first ``up_to`` components (all of them by default)."""
    if not components:
        raise ValueError("no components to reconstruct from")
    if up_to is None:
        up_to = len(components)
    if not 1 <= up_to <= len(components):
        raise ValueError(f"up_to={up_to} outside [1, {len(components)}]")
    out = components[0].tensor()
    for c in components[1:up_to]:
        out = out + c.tensor()
    return out


def cumulative_reconstructions(components):
    """Yield ``reconstruct(components, r)`` for ``r = 1, 2, ...`` incrementally."""
    acc = None
    for c in components:
        acc = c.tensor() if acc is None else acc + c.tensor()
        yield acc


def parameter_count(plan: TensorizationPlan, r: int) -> int:
    """Number of factor entries estimated by a rank-``r`` decomposition under ``plan``."""
    if r < 1:
        raise ValueError("r must be >= 1")
    return r * sum(plan.virtual_dims)


def normalized_parameter_count(plan: TensorizationPlan, r: int) -> int:
    """Free parameters once every factor is unit-norm and each term has one scale.

    A unit-norm factor of length ``d`` keeps ``d - 1`` degrees of freedom, so
    the all-2s plan gives ``r * (log2(X*Y*K) + 1)``.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    return r * (sum(d - 1 for d in plan.virtual_dims) + 1)
