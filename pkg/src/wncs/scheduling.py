"""Channel-access decisions: feasibility, max-weight assignment and baselines.

A decision is an N x M 0/1 matrix ``delta`` with at most one sensor per
channel and at most one channel per sensor.

Tie-breaking is shared by :func:`assign_max_weight` and
:func:`brute_force_schedule`: among decisions whose objective lies within
``TIE_RTOL`` of the optimum, pick the one with the most links, then the one
whose row-major sorted ``(sensor, channel)`` pair list is lexicographically
smallest.
"""
from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InfeasibleAlways, TooLarge
from .scenario import Policy

TIE_RTOL = 1e-12
BRUTE_FORCE_MAX = 4


def is_feasible(delta) -> bool:
    d = np.asarray(delta)
    if d.ndim != 2 or not np.all((d == 0) | (d == 1)):
        return False
    return bool(np.all(d.sum(axis=0) <= 1) and np.all(d.sum(axis=1) <= 1))


def objective(m, delta) -> float:
    """Sum of selected weights, accumulated in row-major order."""
    m = np.asarray(m, dtype=float)
    total = 0.0
    for i, j in zip(*np.nonzero(delta)):
        total += m[i, j]
    return total


def _to_delta(pairs, shape) -> np.ndarray:
    delta = np.zeros(shape, dtype=np.int8)
    for i, j in pairs:
        delta[i, j] = 1
    return delta


def _is_tie(value: float, best: float) -> bool:
    return value >= best - TIE_RTOL * max(1.0, abs(best))


def _best_value(m: np.ndarray, rows, cols) -> float:
    if len(rows) == 0 or len(cols) == 0:
        return 0.0
    sub = m[np.ix_(rows, cols)]
    r, c = linear_sum_assignment(sub, maximize=True)
    return float(sub[r, c].sum())


def assign_max_weight(m) -> np.ndarray:
    """Feasible decision maximizing ``sum m[i,j] delta[i,j]`` for nonnegative weights.

    The optimum comes from a rectangular assignment solve; the
    lexicographically smallest optimal full matching is then fixed pair by
    pair, re-solving the residual problem for each candidate.
    """
    m = np.asarray(m, dtype=float)
    N, M = m.shape
    if N == 0 or M == 0:
        return np.zeros((N, M), dtype=np.int8)
    if M == 1 or N == 1:
        return _assign_single(m)

    best = _best_value(m, list(range(N)), list(range(M)))
    size = min(N, M)
    chosen: list[tuple[int, int]] = []
    used_cols: set[int] = set()
    acc = 0.0
    next_row = 0
    while len(chosen) < size:
        need = size - len(chosen) - 1
        found = False
        for i in range(next_row, N):
            rows_left = list(range(i + 1, N))
            if len(rows_left) < need:
                break
            for j in range(M):
                if j in used_cols:
                    continue
                cols_left = [c for c in range(M) if c not in used_cols and c != j]
                if min(len(rows_left), len(cols_left)) != need:
                    continue
                value = acc + m[i, j] + _best_value(m, rows_left, cols_left)
                if _is_tie(value, best):
                    chosen.append((i, j))
                    used_cols.add(j)
                    acc += m[i, j]
                    next_row = i + 1
                    found = True
                    break
            if found:
                break
        if not found:  # only reachable through rounding at the tie threshold
            raise RuntimeError("max-weight tie-break failed to extend the matching")
    return _to_delta(chosen, m.shape)


def _assign_single(m: np.ndarray) -> np.ndarray:
    flat = m[:, 0] if m.shape[1] == 1 else m[0, :]
    best = float(flat.max())
    k = next(idx for idx, v in enumerate(flat) if _is_tie(float(v), best))
    delta = np.zeros(m.shape, dtype=np.int8)
    if m.shape[1] == 1:
        delta[k, 0] = 1
    else:
        delta[0, k] = 1
    return delta


def brute_force_schedule(m) -> np.ndarray:
    """Exhaustive search over all feasible decisions; test oracle for small N, M."""
    m = np.asarray(m, dtype=float)
    N, M = m.shape
    if N > BRUTE_FORCE_MAX or M > BRUTE_FORCE_MAX:
        raise TooLarge(f"brute force limited to N, M <= {BRUTE_FORCE_MAX}")
    candidates = []
    # each sensor picks a channel or stays silent (None)
    for choice in itertools.product([None, *range(M)], repeat=N):
        taken = [c for c in choice if c is not None]
        if len(taken) != len(set(taken)):
            continue
        pairs = [(i, c) for i, c in enumerate(choice) if c is not None]
        value = 0.0
        for i, j in pairs:
            value += m[i, j]
        candidates.append((value, pairs))
    best = max(v for v, _ in candidates)
    ties = [pairs for v, pairs in candidates if _is_tie(v, best)]
    top = max(len(p) for p in ties)
    pairs = min(p for p in ties if len(p) == top)
    return _to_delta(pairs, m.shape)


def assign_baseline(policy: Policy | str, k: int, N: int, M: int,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    policy = Policy.parse(policy)
    delta = np.zeros((N, M), dtype=np.int8)
    if policy is Policy.ROUND_ROBIN:
        seen: set[int] = set()
        for j in range(M):
            i = (k * M + j) % N
            if i in seen:
                continue
            seen.add(i)
            delta[i, j] = 1
    elif policy is Policy.RANDOM:
        if rng is None:
            raise ValueError("random policy needs an rng")
        r = min(N, M)
        sensors = rng.choice(N, size=r, replace=False)
        channels = rng.choice(M, size=r, replace=False)
        delta[sensors, channels] = 1
    elif policy is Policy.ALWAYS:
        if M < N:
            raise InfeasibleAlways(f"always-transmit needs M >= N (got N={N}, M={M})")
        delta[np.arange(N), np.arange(N)] = 1
    else:
        raise ValueError(f"{policy.value} is not a baseline policy")
    return delta
