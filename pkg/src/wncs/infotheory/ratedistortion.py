"""Rate-distortion solvers: Gaussian closed forms, Blahut-Arimoto and the
scalar indirect (semantic) Gaussian problem."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import DomainError, Infeasible, NoConvergence
from .shannon import as_distribution


@dataclass(frozen=True, eq=False)
class RdPoint:
    rate: float  # bits
    distortion: float
    encoder: np.ndarray  # p(xhat | x), rows indexed by x
    beta: float = float("nan")


def gaussian_rd(variance: float, D: float) -> float:
    if variance <= 0 or D <= 0:
        raise DomainError("variance and distortion must be positive")
    if D > variance:
        return 0.0
    return 0.5 * math.log2(variance / D)


def reverse_water_filling(variances, total_distortion: float, tol: float = 1e-12) -> tuple[float, np.ndarray]:
    """Independent Gaussian components under a sum-MSE budget.

    Finds the water level by bisection; component ``i`` gets distortion
    ``min(level, variances[i])``. Returns ``(rate_bits, per_component_distortion)``.
    """
    lam = np.asarray(variances, dtype=float)
    if np.any(lam <= 0) or total_distortion <= 0:
        raise DomainError("variances and distortion budget must be positive")
    if total_distortion >= lam.sum():
        return 0.0, lam.copy()
    lo, hi = 0.0, float(lam.max())
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if np.minimum(mid, lam).sum() > total_distortion:
            hi = mid
        else:
            lo = mid
    d = np.minimum(0.5 * (lo + hi), lam)
    return float(0.5 * np.sum(np.log2(lam / d))), d


def _check_rd_inputs(p_x, d):
    p = as_distribution(p_x, ndim=1, name="p_x")
    dist = np.asarray(d, dtype=float)
    if dist.ndim != 2 or dist.shape[0] != p.size:
        raise DomainError(f"distortion table must have {p.size} rows")
    if not np.all(np.isfinite(dist)):
        raise DomainError("distortion table must be finite")
    return p, dist


def _rd_point(p: np.ndarray, dist: np.ndarray, enc: np.ndarray, beta: float) -> RdPoint:
    r = p @ enc
    joint = p[:, None] * enc
    mask = joint > 0
    ratio = enc / np.where(r > 0, r, 1.0)[None, :]
    rate = float(np.sum(joint[mask] * np.log2(ratio[mask])))
    distortion = float(np.sum(joint * dist))
    return RdPoint(rate=max(rate, 0.0), distortion=distortion, encoder=enc, beta=beta)


def blahut_arimoto(p_x, d, beta: float, tol: float = 1e-12, max_iter: int = 100_000) -> RdPoint:
    """Point on the R(D) curve with slope parameter ``beta`` (nats per unit distortion).

    Alternates ``q(xhat|x) ~ r(xhat) exp(-beta d)`` and ``r = sum_x p(x) q``,
    stopping when the output marginal moves less than ``tol`` in L1.
    """
    if beta < 0:
        raise DomainError("beta must be nonnegative")
    p, dist = _check_rd_inputs(p_x, d)
    n_hat = dist.shape[1]
    if beta == 0:
        # no rate pressure: a single reproduction minimizing expected distortion
        best = int(np.argmin(p @ dist))
        enc = np.zeros((p.size, n_hat))
        enc[:, best] = 1.0
        return _rd_point(p, dist, enc, beta)

    log_r = np.full(n_hat, -math.log(n_hat))
    for _ in range(max_iter):
        logits = log_r[None, :] - beta * dist
        log_enc = logits - logsumexp(logits, axis=1, keepdims=True)
        enc = np.exp(log_enc)
        r = p @ enc
        with np.errstate(divide="ignore"):
            new_log_r = np.log(r)
        if np.sum(np.abs(r - np.exp(log_r))) < tol:
            return _rd_point(p, dist, enc, beta)
        log_r = new_log_r
    raise NoConvergence(f"Blahut-Arimoto did not converge in {max_iter} iterations (beta={beta})")


def rate_utility(p_x, u, beta: float, **kwargs) -> RdPoint:
    """Rate needed for a utility level: Blahut-Arimoto on the distortion ``-u``.

    The returned ``distortion`` is the negated expected utility.
    """
    return blahut_arimoto(p_x, -np.asarray(u, dtype=float), beta, **kwargs)


def rd_at_distortion(p_x, d, target: float, beta_max: float = 200.0, tol: float = 1e-10) -> RdPoint:
    """Bisect ``beta`` until Blahut-Arimoto hits expected distortion ``target``."""
    p, dist = _check_rd_inputs(p_x, d)
    hi_pt = blahut_arimoto(p, dist, beta_max)
    if target < hi_pt.distortion:
        raise Infeasible(f"distortion {target} below what beta={beta_max} reaches ({hi_pt.distortion})")
    lo_pt = blahut_arimoto(p, dist, 0.0)
    if target >= lo_pt.distortion:
        return lo_pt
    lo, hi = 0.0, beta_max
    point = hi_pt
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        point = blahut_arimoto(p, dist, mid)
        if abs(point.distortion - target) <= tol:
            break
        if point.distortion > target:
            lo = mid
        else:
            hi = mid
    return point


def _indirect_terms(sigma_s2: float, sigma_w2: float, a: float):
    sigma_x2 = a * a * sigma_s2 + sigma_w2
    gain = a * sigma_s2 / sigma_x2  # E[S|X] = gain * X
    mmse = sigma_s2 * sigma_w2 / sigma_x2
    return sigma_x2, gain, mmse


def indirect_rd_scalar(sigma_s2: float, sigma_w2: float, a: float, D_s: float, D_x: float) -> float:
    """Minimal rate for ``X = a S + W`` meeting both ``E(S-Shat)^2 <= D_s`` and ``E(X-Xhat)^2 <= D_x``.

    The encoder compresses X with a Gaussian test channel of error variance D;
    the semantic estimate is ``Shat = gain * Xhat`` with error ``mmse + gain^2 D``.
    Both constraints are upper bounds on D, so the rate is set by the tighter one.
    """
    if sigma_s2 <= 0 or sigma_w2 < 0 or D_s <= 0 or D_x <= 0:
        raise DomainError("need sigma_s2 > 0, sigma_w2 >= 0, D_s > 0, D_x > 0")
    if a == 0 and sigma_w2 == 0:
        raise DomainError("observation X = a S + W is degenerate (zero variance)")
    sigma_x2, gain, mmse = _indirect_terms(sigma_s2, sigma_w2, a)
    if D_s < mmse:
        raise Infeasible(f"D_s={D_s} is below the MMSE floor {mmse}")
    D = min(sigma_x2, D_x)
    if gain != 0.0:
        D = min(D, (D_s - mmse) / gain**2)
    if D <= 0.0:
        return math.inf
    return 0.5 * math.log2(sigma_x2 / D)
