"""Semantic information from truth functions T(y|x)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from .shannon import as_distribution


@dataclass(frozen=True, eq=False)
class TruthTable:
    """Truth values ``T[x, y]`` in [0, 1] plus a prior over X.

    Rows need not sum to one: a truth function is not a channel.
    """

    T: np.ndarray
    p_x: np.ndarray

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        if T.ndim != 2:
            raise DomainError("truth table must be 2-D")
        if not np.all(np.isfinite(T)) or np.any(T < 0) or np.any(T > 1):
            raise DomainError("truth values must lie in [0, 1]")
        p = as_distribution(self.p_x, ndim=1, name="p_x")
        if p.size != T.shape[0]:
            raise DomainError("prior length must match the truth table rows")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "p_x", p)

    def marginal(self) -> np.ndarray:
        """Logical probability T(y) = sum_x p(x) T(y|x)."""
        return self.p_x @ self.T


def semantic_distortion(tt: TruthTable) -> np.ndarray:
    """d(y|x) = -log2 T(y|x); infinite where the truth value is zero."""
    with np.errstate(divide="ignore"):
        return -np.log2(tt.T)


def semantic_mi(tt: TruthTable, joint) -> float:
    """sum_{x,y} p(x,y) log2(T(y|x) / T(y)) in bits."""
    pxy = as_distribution(joint, ndim=2, name="joint")
    if pxy.shape != tt.T.shape:
        raise DomainError(f"joint shape {pxy.shape} does not match truth table {tt.T.shape}")
    mass = pxy > 0
    if np.any(tt.T[mass] <= 0):
        raise DomainError("zero truth value under positive joint mass")
    ty = np.broadcast_to(tt.marginal()[None, :], pxy.shape)
    return float(np.sum(pxy[mass] * np.log2(tt.T[mass] / ty[mass])))
