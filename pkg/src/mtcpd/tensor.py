"""
Dense complex tensor algebra: URA reshaping, unfoldings, Kronecker chains,
mode tensorization and rank-1 outer products.

Tensors are plain ``numpy.ndarray`` objects of dtype ``complex128``. Two
index conventions are used and both are fixed here:

* Antenna index of a URA: ``m = i_x * Y + i_y`` (horizontal-major), which is
  what ``kron(a_x, a_y)`` produces.
* Mode tensorization splits a physical index little-endian: with
  sub-dimensions ``(K_1, ..., K_C)`` the index is
  ``k = sum_c k_c * prod_{c' < c} K_c'`` so ``k_1`` varies fastest. The whole
  tensor is linearized the same way (first index fastest, Fortran order).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from math import prod
from typing import Sequence

import numpy as np

__all__ = [
    "TensorizationPlan",
    "as_tensor",
    "reshape_ura",
    "unfold",
    "fold",
    "kronecker",
    "kronecker_chain",
    "tensorize",
    "detensorize",
    "rank1_tensor",
    "frobenius_norm",
    "steering_subfrequencies",
]


def as_tensor(t) -> np.ndarray:
    """Return ``t`` as a complex128 array with every mode size >= 1."""
    arr = np.asarray(t, dtype=np.complex128)
    if arr.ndim == 0:
        raise ValueError("tensor must have at least one mode")
    if any(d < 1 for d in arr.shape):
        raise ValueError(f"every mode size must be >= 1, got {arr.shape}")
    return arr


def _check_factor_list(name, factors, total):
    factors = tuple(int(f) for f in factors)
    if not factors:
        raise ValueError(f"{name} must contain at least one factor")
    if any(f < 1 for f in factors):
        raise ValueError(f"{name} factors must be positive, got {factors}")
    if len(factors) > 1 and any(f < 2 for f in factors):
        raise ValueError(f"{name} sub-dimensions must be >= 2, got {factors}")
    if prod(factors) != total:
        raise ValueError(
            f"{name} factors {factors} multiply to {prod(factors)}, expected {total}"
        )
    return factors


@dataclass(frozen=True)
class TensorizationPlan:
    """Factorization of the physical modes ``(X, Y, K)`` into virtual modes.

    Parameters
    ----------
    physical_dims : tuple of int
        ``(X, Y, K)``.
    factors_x, factors_y, factors_k : tuple of int
        Sub-dimensions whose products equal ``X``, ``Y`` and ``K``.
    """

    physical_dims: tuple
    factors_x: tuple
    factors_y: tuple
    factors_k: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.physical_dims)
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise ValueError(f"physical_dims must be three positive ints, got {dims}")
        object.__setattr__(self, "physical_dims", dims)
        for name, total in zip(("factors_x", "factors_y", "factors_k"), dims):
            object.__setattr__(
                self, name, _check_factor_list(name, getattr(self, name), total)
            )

    @classmethod
    def trivial(cls, x: int, y: int, k: int) -> "TensorizationPlan":
        return cls((x, y, k), (x,), (y,), (k,))

    @classmethod
    def from_factors(cls, factors_x, factors_y, factors_k) -> "TensorizationPlan":
        dims = (prod(factors_x), prod(factors_y), prod(factors_k))
        return cls(dims, tuple(factors_x), tuple(factors_y), tuple(factors_k))

    @property
    def mode_groups(self) -> tuple:
        return (self.factors_x, self.factors_y, self.factors_k)

    @property
    def virtual_dims(self) -> tuple:
        return self.factors_x + self.factors_y + self.factors_k

    @property
    def order(self) -> int:
        return len(self.virtual_dims)

    @property
    def mode_decomposition(self) -> tuple:
        """The ``(A, B, C)`` counts of virtual modes per physical mode."""
        return tuple(len(g) for g in self.mode_groups)

    @property
    def is_trivial(self) -> bool:
        return self.mode_decomposition == (1, 1, 1)


def reshape_ura(h_slice, x: int, y: int) -> np.ndarray:
    """Reshape an ``M x K`` antenna-by-subcarrier matrix into ``X x Y x K``.

    Element ``(i_x, i_y, k)`` of the output is ``h_slice[i_x * y + i_y, k]``.
    """
    h = np.asarray(h_slice, dtype=np.complex128)
    if h.ndim == 1:
        h = h[:, None]
    if h.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {h.shape}")
    if h.shape[0] != x * y:
        raise ValueError(f"antenna count {h.shape[0]} != x*y = {x * y}")
    return h.reshape(x, y, h.shape[1])


def unreshape_ura(t) -> np.ndarray:
    """Inverse of :func:`reshape_ura`."""
    t = np.asarray(t)
    return t.reshape(t.shape[0] * t.shape[1], t.shape[2])


def unfold(t, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding.

    Rows are indexed by ``mode``; columns run over the remaining modes with
    the lowest remaining mode varying fastest.
    """
    t = np.asarray(t)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for order-{t.ndim} tensor")
    return np.moveaxis(t, mode, 0).reshape(t.shape[mode], -1, order="F")


def fold(m, mode: int, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold`."""
    dims = tuple(dims)
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for order-{len(dims)} tensor")
    rest = dims[:mode] + dims[mode + 1:]
    full = np.asarray(m).reshape((dims[mode],) + rest, order="F")
    return np.moveaxis(full, 0, mode)


def kronecker(a, b) -> np.ndarray:
    """Kronecker product of two vectors; element ``i*len(b) + j`` is ``a[i]*b[j]``."""
    return np.kron(np.ravel(a), np.ravel(b))


def kronecker_chain(vectors) -> np.ndarray:
    """Recombine little-endian sub-factors into one physical-mode vector.

    ``vectors`` are given in virtual-mode order (fastest digit first); the
    Kronecker product is evaluated with the last (highest-stride) factor
    leftmost, so that ``kronecker_chain(tensorized factors)`` reproduces the
    original vector.
    """
    vectors = [np.ravel(np.asarray(v, dtype=np.complex128)) for v in vectors]
    if not vectors:
        raise ValueError("need at least one vector")
    return reduce(np.kron, reversed(vectors))


def _check_plan(dims, plan: TensorizationPlan):
    if tuple(dims) != plan.physical_dims:
        raise ValueError(
            f"tensor dims {tuple(dims)} do not match plan {plan.physical_dims}"
        )


def tensorize(t, plan: TensorizationPlan) -> np.ndarray:
    """Split each physical mode of an ``X x Y x K`` tensor into its virtual modes.

    Pure re-indexing; output modes are ``(X_1..X_A, Y_1..Y_B, K_1..K_C)``.
    """
    t = np.asarray(t)
    _check_plan(t.shape, plan)
    return t.reshape(plan.virtual_dims, order="F")


def detensorize(t, plan: TensorizationPlan) -> np.ndarray:
    """Exact inverse of :func:`tensorize`."""
    t = np.asarray(t)
    if tuple(t.shape) != plan.virtual_dims:
        raise ValueError(
            f"tensor dims {tuple(t.shape)} do not match plan {plan.virtual_dims}"
        )
    return t.reshape(plan.physical_dims, order="F")


def rank1_tensor(factors) -> np.ndarray:
    """Outer product ``u_1 o u_2 o ... o u_P``."""
    factors = [np.ravel(np.asarray(f, dtype=np.complex128)) for f in factors]
    if not factors:
        raise ValueError("need at least one factor")
    out = factors[0]
    for f in factors[1:]:
        out = np.multiply.outer(out, f)
    return out


def frobenius_norm(t) -> float:
    t = np.asarray(t)
    return float(np.linalg.norm(t.ravel()))


def steering_subfrequencies(freq: float, factors) -> np.ndarray:
    """Frequencies of the virtual steering factors for a tensorized steering vector.

    Sub-factor ``c`` carries ``freq * prod_{c' < c} K_c'`` wrapped into
    ``[-1/2, 1/2)``.
    """
    strides = np.concatenate(([1], np.cumprod(factors)[:-1]))
    scaled = freq * strides
    return (scaled + 0.5) % 1.0 - 0.5
