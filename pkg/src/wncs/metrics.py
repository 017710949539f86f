"""Priority metrics for channel access: CoIL, VoI and age of information."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyTrace
from .scenario import LoopSpec
from .synthesis import LoopSynthesis, lyap_map


def coil(synth: LoopSynthesis, t_prev: int, loop: LoopSpec) -> float:
    """Expected one-step cost of losing the next packet after ``t_prev`` stale slots.

    tr(Gamma [h^{t_prev+1}(P_bar) - P_bar]); uses only timing and noise statistics.
    """
    if t_prev < 0:
        raise ValueError("t_prev must be nonnegative")
    X = synth.P_bar
    for _ in range(t_prev + 1):
        X = lyap_map(X, loop.A, loop.W)
    return float(np.trace(synth.Gamma_inf @ (X - synth.P_bar)))


class CoilTable:
    """Memoized CoIL values indexed by staleness, grown on demand.

    Entry ``t`` equals ``coil(synth, t, loop)``; the simulator hits this every slot.
    """

    def __init__(self, synth: LoopSynthesis, loop: LoopSpec):
        self._gamma = synth.Gamma_inf
        self._A = loop.A
        self._W = loop.W
        self._base = float(np.trace(synth.Gamma_inf @ synth.P_bar))
        self._cov = synth.P_bar
        self._values: list[float] = []

    def __call__(self, t_prev: int) -> float:
        while len(self._values) <= t_prev:
            self._cov = lyap_map(self._cov, self._A, self._W)
            self._values.append(float(np.trace(self._gamma @ self._cov)) - self._base)
        return self._values[t_prev]


def voi(synth: LoopSynthesis, e_check) -> float:
    """Measurement-dependent value of delivering now: e^T Gamma e."""
    e = np.asarray(e_check, dtype=float).reshape(-1)
    return max(0.0, float(e @ synth.Gamma_inf @ e))


@dataclass
class AoiTracker:
    """Per-loop age counter. ``aoi_update`` mutates it in place."""

    age: int = 0
    ages_trace: list[int] = field(default_factory=list)
    peaks: list[int] = field(default_factory=list)


def aoi_update(tracker: AoiTracker, received: bool) -> AoiTracker:
    if received:
        tracker.peaks.append(tracker.age)
        tracker.age = 0
    else:
        tracker.age += 1
    tracker.ages_trace.append(tracker.age)
    return tracker


def aoi_summary(tracker: AoiTracker) -> tuple[float, float | None]:
    """Average AoI over the trace and mean peak AoI (``None`` without any reception)."""
    if not tracker.ages_trace:
        raise EmptyTrace("no slots recorded")
    aaoi = float(np.mean(tracker.ages_trace))
    paoi = float(np.mean(tracker.peaks)) if tracker.peaks else None
    return aaoi, paoi


def sawtooth_area_aoi(ages_trace) -> float:
    """Average age from the sawtooth decomposition of a trace.

    The trace is cut at every reset into ramps ``a, a+1, ..., a+L-1``; each ramp
    contributes area ``L*a + L(L-1)/2`` and the total area is divided by the
    total length.
    """
    ages = list(ages_trace)
    if not ages:
        raise EmptyTrace("no slots recorded")
    area = 0
    start, length = ages[0], 0
    for prev, cur in zip(ages, ages[1:] + [None]):
        length += 1
        if cur is None or cur != prev + 1:
            area += length * start + length * (length - 1) // 2
            if cur is not None:
                start, length = cur, 0
    return area / len(ages)


def priority_matrix(metric_values, q_bar, weight_by_q: bool = True) -> np.ndarray:
    """Per-link weights ``metric_i * q_bar[i, j]``.

    With ``weight_by_q=False`` the metric is broadcast across channels unchanged.
    """
    metric = np.asarray(metric_values, dtype=float)
    q = np.asarray(q_bar, dtype=float)
    if weight_by_q:
        return metric[:, None] * q
    return np.repeat(metric[:, None], q.shape[1], axis=1)
