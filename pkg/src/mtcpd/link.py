"""
SVD precoding from estimated channels and log-det spectral efficiency on the
true channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Precoder",
    "svd_precoder",
    "fallback_precoder",
    "spectral_efficiency",
    "dl_noise_power",
    "evaluate_realization",
]

RANK_RTOL = 1e-13


@dataclass
class Precoder:
    """``M x P`` precoder whose columns are orthonormal scaled by ``1/sqrt(P)``."""

    w: np.ndarray
    subcarrier: int = 0
    streams: int = 1
    rank_deficient: bool = False


def _orthonormalize(u):
    # QR re-orthogonalization keeps column directions, fixes phases to R's diagonal
    q, r = np.linalg.qr(u)
    d = np.diag(r)
    ph = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1), 1)
    return q * ph


def svd_precoder(h_hat, p: int, subcarrier: int = 0) -> Precoder:
    """Top-``p`` left singular vectors of ``h_hat`` (``M x N``), scaled by ``1/sqrt(p)``.

    The singular vectors come from the eigendecomposition of the small
    ``N x N`` Gram matrix, ``u_i = h_hat v_i / s_i``. Missing directions of a
    rank-deficient ``h_hat`` are filled with an orthonormal complement and
    the precoder is flagged.
    """
    h = np.asarray(h_hat, dtype=np.complex128)
    if h.ndim == 1:
        h = h[:, None]
    m, n = h.shape
    if not 1 <= p <= min(m, n):
        raise ValueError(f"streams p={p} outside [1, {min(m, n)}]")
    if not np.all(np.isfinite(h)):
        raise ValueError("non-finite channel estimate")
    if not np.any(h):
        raise ValueError("all-zero channel estimate")

    lam, v = np.linalg.eigh(h.conj().T @ h)
    order = np.argsort(lam)[::-1]
    lam, v = lam[order], v[:, order]
    good = int(np.sum(lam[:p] > RANK_RTOL * lam[0]))
    u = (h @ v[:, :good]) / np.sqrt(lam[:good])
    deficient = good < p
    if deficient:
        basis = _orthonormalize(np.hstack([u, np.eye(m, dtype=np.complex128)]))
        u = np.hstack([u, basis[:, good:p]])
    u = _orthonormalize(u)
    return Precoder(u / np.sqrt(p), subcarrier, p, deficient)


def fallback_precoder(m: int, p: int, subcarrier: int = 0) -> Precoder:
    """First ``p`` canonical directions; used when the estimate carries nothing."""
    return Precoder(np.eye(m, p, dtype=np.complex128) / np.sqrt(p), subcarrier, p, True)


def spectral_efficiency(h_true, w, sigma_dl_sq: float) -> float:
    """``log2 det(I + W^H H H^H W / sigma^2)`` in bps/Hz."""
    h = np.asarray(h_true, dtype=np.complex128)
    if h.ndim == 1:
        h = h[:, None]
    w = np.asarray(w.w if isinstance(w, Precoder) else w, dtype=np.complex128)
    if w.ndim == 1:
        w = w[:, None]
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(w)) and np.isfinite(sigma_dl_sq)):
        raise ValueError("non-finite input")
    if not sigma_dl_sq > 0:
        raise ValueError("sigma_dl_sq must be > 0")
    if w.shape[0] != h.shape[0]:
        raise ValueError(f"precoder rows {w.shape[0]} != channel rows {h.shape[0]}")
    g = w.conj().T @ h
    gram = (g @ g.conj().T) / sigma_dl_sq
    lam = np.clip(np.linalg.eigvalsh((gram + gram.conj().T) / 2), 0.0, None)
    return float(np.sum(np.log2(1.0 + lam)))


def dl_noise_power(truth, snr_dl_db: float) -> float:
    """Downlink noise power referenced to the mean per-subcarrier channel power.

    ``sigma^2 = mean_k ||H_k||_F^2 * 10^(-snr_dl_db/10) / N`` for an
    ``M x N x K`` channel.
    """
    truth = np.asarray(truth)
    per_k = np.sum(np.abs(truth) ** 2, axis=(0, 1))
    return float(per_k.mean() * 10.0 ** (-snr_dl_db / 10.0) / truth.shape[1])


def evaluate_realization(truth, estimate, p: int, snr_dl_db: float = 10.0) -> float:
    """Mean spectral efficiency over subcarriers of precoders built from ``estimate``.

    Both tensors are ``M x N x K``. A subcarrier whose estimate is exactly
    zero gets :func:`fallback_precoder`.
    """
    truth = np.asarray(truth, dtype=np.complex128)
    estimate = np.asarray(estimate, dtype=np.complex128)
    if truth.shape != estimate.shape or truth.ndim != 3:
        raise ValueError(f"shape mismatch {truth.shape} vs {estimate.shape}")
    m, _, k = truth.shape
    sigma2 = dl_noise_power(truth, snr_dl_db)
    se = np.empty(k)
    for kk in range(k):
        h_hat = estimate[:, :, kk]
        if np.any(h_hat):
            w = svd_precoder(h_hat, p, kk)
        else:
            w = fallback_precoder(m, p, kk)
        se[kk] = spectral_efficiency(truth[:, :, kk], w, sigma2)
    return float(se.mean())
