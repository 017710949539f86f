"""Shannon quantities on finite probability tables, in bits."""
from __future__ import annotations

import numpy as np

from ..errors import DomainError, InvalidDistribution

MASS_TOL = 1e-12


def as_distribution(p, *, ndim: int | None = None, name: str = "distribution") -> np.ndarray:
    """Validate a probability table: finite, nonnegative, total mass 1 within ``MASS_TOL``."""
    try:
        arr = np.asarray(p, dtype=float)
    except (TypeError, ValueError):
        raise InvalidDistribution(f"{name}: not a numeric table") from None
    if ndim is not None and arr.ndim != ndim:
        raise InvalidDistribution(f"{name}: expected {ndim}-D table, got {arr.ndim}-D")
    if arr.size == 0:
        raise InvalidDistribution(f"{name}: empty table")
    if not np.all(np.isfinite(arr)):
        raise InvalidDistribution(f"{name}: non-finite entry")
    if np.any(arr < 0):
        raise InvalidDistribution(f"{name}: negative entry")
    total = arr.sum()
    if abs(total - 1.0) > MASS_TOL:
        raise InvalidDistribution(f"{name}: total mass {total!r} is not 1")
    return arr


def _plogp_ratio(p: np.ndarray, q: np.ndarray) -> float:
    """sum p log2(p/q) with 0 log(0/q) = 0."""
    mask = p > 0
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def entropy(p) -> float:
    p = as_distribution(p).ravel()
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def mutual_information(joint) -> float:
    pxy = as_distribution(joint, ndim=2, name="joint")
    px = pxy.sum(axis=1, keepdims=True)
    py = pxy.sum(axis=0, keepdims=True)
    return max(0.0, _plogp_ratio(pxy, px * py))


def conditional_entropy(joint) -> float:
    """H(X|Y) for a joint table indexed ``[x, y]``."""
    pxy = as_distribution(joint, ndim=2, name="joint")
    py = np.broadcast_to(pxy.sum(axis=0, keepdims=True), pxy.shape)
    return -_plogp_ratio(pxy, py)


def conditional_mi(joint3) -> float:
    """I(X;Y|Z) for a table indexed ``[x, y, z]``; empty z-slices contribute 0."""
    p = as_distribution(joint3, ndim=3, name="joint")
    pz = p.sum(axis=(0, 1), keepdims=True)
    pxz = p.sum(axis=1, keepdims=True)
    pyz = p.sum(axis=0, keepdims=True)
    # p(x,y|z) / (p(x|z) p(y|z)) = p(x,y,z) p(z) / (p(x,z) p(y,z))
    num = p * pz
    den = pxz * pyz
    mask = p > 0
    return max(0.0, float(np.sum(p[mask] * np.log2(num[mask] / den[mask]))))


def kl_divergence(p, q) -> float:
    """D(p || q) in bits.

    Raises :class:`DomainError` when p puts mass where q has none, instead of
    returning an infinite divergence.
    """
    p = as_distribution(p, name="p")
    q = as_distribution(q, name="q")
    if p.shape != q.shape:
        raise DomainError(f"shape mismatch {p.shape} vs {q.shape}")
    if np.any((p > 0) & (q <= 0)):
        raise DomainError("p is not absolutely continuous with respect to q")
    return _plogp_ratio(p, q)


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return float(-x * np.log2(x) - (1 - x) * np.log2(1 - x))
