"""Discrete Information Bottleneck by self-consistent iteration.

Minimizes ``I(X;T) - beta * I(T;Y)`` over stochastic encoders ``p(t|x)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import DomainError, NoConvergence
from .shannon import as_distribution

LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class IbResult:
    encoder: np.ndarray  # p(t|x), rows indexed by x
    I_xt: float  # bits
    I_ty: float  # bits
    lagrangian: float
    iterations: int
    restart: int


def _xlogy_ratio(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Elementwise p*ln(p/q) with the 0 ln 0 = 0 convention; +inf where p > 0 = q."""
    out = np.zeros(np.broadcast(p, q).shape)
    pb, qb = np.broadcast_arrays(p, q)
    pos = pb > 0
    with np.errstate(divide="ignore"):
        out[pos] = pb[pos] * (np.log(pb[pos]) - np.log(qb[pos]))
    return out


def ib_terms(joint, encoder) -> tuple[float, float]:
    """``(I(X;T), I(T;Y))`` in bits for an encoder ``p(t|x)``."""
    pxy = np.asarray(joint, dtype=float)
    enc = np.asarray(encoder, dtype=float)
    px = pxy.sum(axis=1)
    pxt = px[:, None] * enc
    pt = pxt.sum(axis=0)
    pty = enc.T @ pxy
    py = pxy.sum(axis=0)
    I_xt = _xlogy_ratio(pxt, px[:, None] * pt[None, :]).sum() / LN2
    I_ty = _xlogy_ratio(pty, pt[:, None] * py[None, :]).sum() / LN2
    return max(0.0, float(I_xt)), max(0.0, float(I_ty))


def ib_lagrangian(joint, encoder, beta: float) -> float:
    I_xt, I_ty = ib_terms(joint, encoder)
    return I_xt - beta * I_ty


def _iterate(pxy: np.ndarray, enc: np.ndarray, beta: float, tol: float, max_iter: int):
    px = pxy.sum(axis=1)
    support = px > 0
    py_x = np.where(support[:, None], pxy / np.where(support, px, 1.0)[:, None], 0.0)
    prev = ib_lagrangian(pxy, enc, beta)
    for it in range(1, max_iter + 1):
        pt = px @ enc
        with np.errstate(divide="ignore", invalid="ignore"):
            py_t = (enc * px[:, None]).T @ py_x / pt[:, None]
            log_pt = np.log(pt)
        py_t = np.where(pt[:, None] > 0, py_t, 0.0)
        if beta == 0:
            logits = np.broadcast_to(log_pt, enc.shape).copy()
        else:
            # KL(p(y|x) || p(y|t)) in nats, shape (|X|, |T|)
            kl = _xlogy_ratio(py_x[:, None, :], py_t[None, :, :]).sum(axis=2)
            logits = log_pt[None, :] - beta * kl
        enc = np.exp(logits - logsumexp(logits, axis=1, keepdims=True))
        cur = ib_lagrangian(pxy, enc, beta)
        if abs(cur - prev) < tol:
            return enc, it
        prev = cur
    raise NoConvergence(f"IB iteration did not converge in {max_iter} sweeps")


def ib_solve(joint, T_size: int, beta: float, tol: float = 1e-12, max_iter: int = 20_000,
             restarts: int = 10, rng: np.random.Generator | int | None = 0) -> IbResult:
    """Best-of-``restarts`` IB encoder with ``T_size`` clusters.

    Restart ``r`` starts from Dirichlet rows whose concentration cycles through
    1, 0.3 and 0.1, so later restarts begin closer to hard assignments.
    """
    pxy = as_distribution(joint, ndim=2, name="joint")
    if T_size < 1:
        raise DomainError("T_size must be >= 1")
    if beta < 0:
        raise DomainError("beta must be nonnegative")
    if restarts < 1:
        raise DomainError("restarts must be >= 1")
    rng = np.random.default_rng(rng)
    concentrations = (1.0, 0.3, 0.1)
    best: IbResult | None = None
    failures = 0
    for r in range(restarts):
        alpha = concentrations[r % len(concentrations)]
        enc0 = rng.dirichlet(np.full(T_size, alpha), size=pxy.shape[0])
        try:
            enc, iters = _iterate(pxy, enc0, beta, tol, max_iter)
        except NoConvergence:
            failures += 1
            continue
        I_xt, I_ty = ib_terms(pxy, enc)
        result = IbResult(encoder=enc, I_xt=I_xt, I_ty=I_ty, lagrangian=I_xt - beta * I_ty,
                          iterations=iters, restart=r)
        if best is None or result.lagrangian < best.lagrangian:
            best = result
    if best is None:
        raise NoConvergence(f"none of {restarts} IB restarts converged")
    return best
