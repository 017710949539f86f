"""Slot-by-slot simulation of N LQG loops sharing M lossy channels.

Random streams
--------------
Every stream is a PCG64 generator seeded by
``SeedSequence(entropy=scenario.seed, spawn_key=(run, owner, stream))`` where
``owner`` is 0 for run-global streams and ``1 + i`` for loop ``i``:

====================  =====  ======
stream                owner  stream
====================  =====  ======
initial state         1+i    0
process noise         1+i    1
measurement noise     1+i    2
channel drops         0      0
random policy         0      1
====================  =====  ======

Noise streams do not depend on the policy, so episodes that share
``(seed, run)`` see identical disturbances (common random numbers).
"""
from __future__ import annotations

import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channel as chan
from .errors import EmptyTrace, InfeasibleAlways, NumericalOverflow, SynthesisMissing
from .estimation import (
    ControllerState,
    SensorFilterState,
    controller_on_miss,
    controller_on_receive,
    controller_time_update,
    init_controller,
    init_sensor,
    sensor_on_delivery,
    sensor_step,
)
from .metrics import AoiTracker, CoilTable, aoi_summary, aoi_update, priority_matrix, voi
from .scenario import Policy, Scenario
from .scheduling import assign_baseline, assign_max_weight
from .synthesis import LoopSynthesis, synthesize

STATE_LIMIT = 1e12
INIT_STREAM, PROCESS_STREAM, MEASUREMENT_STREAM = 0, 1, 2
CHANNEL_STREAM, POLICY_STREAM = 0, 1
METRIC_POLICIES = (Policy.COIL, Policy.VOI, Policy.AOI)
Z95 = statistics.NormalDist().inv_cdf(0.975)


def stream_rng(seed: int, run: int, owner: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(run, owner, stream))
    return np.random.Generator(np.random.PCG64(ss))


def psd_sqrt(X: np.ndarray) -> np.ndarray:
    """Symmetric square root with negative eigenvalues clamped to zero."""
    vals, vecs = np.linalg.eigh(0.5 * (X + X.T))
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


@dataclass
class WorldState:
    k: int
    x: list[np.ndarray]
    sensor: list[SensorFilterState]
    ctrl: list[ControllerState]
    aoi: list[AoiTracker]
    u_prev: list[np.ndarray | None]


@dataclass
class Trace:
    """Per-slot, per-loop records; arrays are indexed ``[k, loop]``."""

    policy: Policy
    t_since: np.ndarray
    metric: np.ndarray
    channel: np.ndarray  # -1 where the sensor was not scheduled
    received: np.ndarray
    stage_cost: np.ndarray

    @property
    def horizon(self) -> int:
        return self.stage_cost.shape[0]

    @property
    def num_loops(self) -> int:
        return self.stage_cost.shape[1]

    def __len__(self) -> int:
        return self.stage_cost.size

    def records(self):
        """Yield ``(k, loop, t_since, metric, channel, received, stage_cost)`` in slot order."""
        for k in range(self.horizon):
            for i in range(self.num_loops):
                ch = int(self.channel[k, i])
                yield (k, i, int(self.t_since[k, i]), float(self.metric[k, i]),
                       None if ch < 0 else ch, bool(self.received[k, i]), float(self.stage_cost[k, i]))


@dataclass
class EpisodeSummary:
    policy: Policy
    cost: float
    aaoi: list[float]
    paoi: list[float | None]
    receptions: list[int]


def empirical_cost(trace: Trace) -> float:
    """Horizon average of the summed stage costs."""
    if trace.stage_cost.size == 0:
        raise EmptyTrace("trace has no slots")
    return float(trace.stage_cost.sum(axis=1).sum() / trace.horizon)


def _check_synths(scenario: Scenario, synths) -> list[LoopSynthesis]:
    if synths is None or len(synths) != scenario.N or any(s is None for s in synths):
        raise SynthesisMissing("one converged LoopSynthesis per loop is required")
    return list(synths)


def run_episode(scenario: Scenario, synths, *, run: int = 0, policy: Policy | str | None = None,
                weight_voi_by_q: bool = True, on_slot=None) -> tuple[Trace, EpisodeSummary]:
    """Simulate ``scenario.horizon`` slots; deterministic given ``(scenario, run, policy)``.

    ``on_slot(world, delta, outcome)``, if given, is called once per slot after
    the controllers have processed the channel outcome and before the control
    input is applied. Raises :class:`NumericalOverflow` when any state norm
    exceeds ``STATE_LIMIT``.
    """
    synths = _check_synths(scenario, synths)
    policy = scenario.policy if policy is None else Policy.parse(policy)
    N, M, K = scenario.N, scenario.M, scenario.horizon
    q_bar = scenario.q_bar
    loops = scenario.loops
    if policy is Policy.ALWAYS and M < N:
        raise InfeasibleAlways(f"always-transmit needs M >= N (got N={N}, M={M})")

    seed = scenario.seed
    x, w_noise, v_noise = [], [], []
    for i, loop in enumerate(loops):
        z0 = stream_rng(seed, run, 1 + i, INIT_STREAM).standard_normal(loop.n)
        x.append(loop.x0_mean + psd_sqrt(loop.x0_cov) @ z0)
        w = stream_rng(seed, run, 1 + i, PROCESS_STREAM).standard_normal((K, loop.n))
        v = stream_rng(seed, run, 1 + i, MEASUREMENT_STREAM).standard_normal((K, loop.p))
        w_noise.append(w @ psd_sqrt(loop.W))
        v_noise.append(v @ psd_sqrt(loop.V))
    channel_rng = stream_rng(seed, run, 0, CHANNEL_STREAM)
    policy_rng = stream_rng(seed, run, 0, POLICY_STREAM)

    world = WorldState(
        k=0,
        x=x,
        sensor=[init_sensor(loop) for loop in loops],
        ctrl=[init_controller(loop) for loop in loops],
        aoi=[AoiTracker() for _ in loops],
        u_prev=[None] * N,
    )
    coil_tables = [CoilTable(s, loop) for s, loop in zip(synths, loops)]

    t_rec = np.zeros((K, N), dtype=np.int64)
    metric_rec = np.zeros((K, N))
    channel_rec = np.full((K, N), -1, dtype=np.int64)
    received_rec = np.zeros((K, N), dtype=bool)
    cost_rec = np.zeros((K, N))
    metric = np.zeros(N)

    for k in range(K):
        world.k = k
        for i, loop in enumerate(loops):
            y = loop.C @ world.x[i] + v_noise[i][k]
            world.sensor[i] = sensor_step(world.sensor[i], y, world.u_prev[i], synths[i], loop)
            if policy is Policy.VOI:
                metric[i] = voi(synths[i], world.sensor[i].e_check)
            elif policy is Policy.AOI:
                metric[i] = world.ctrl[i].t_since + 1
            else:
                metric[i] = coil_tables[i](world.ctrl[i].t_since)

        if policy in METRIC_POLICIES:
            weight_by_q = weight_voi_by_q if policy is Policy.VOI else True
            delta = assign_max_weight(priority_matrix(metric, q_bar, weight_by_q))
        else:
            delta = assign_baseline(policy, k, N, M, policy_rng)
        outcome = chan.realize(delta, q_bar, channel_rng)
        assigned = np.where(delta.any(axis=1), delta.argmax(axis=1), -1)

        for i in range(N):
            if outcome.theta[i]:
                world.ctrl[i] = controller_on_receive(world.ctrl[i], world.sensor[i].x_post)
                world.sensor[i] = sensor_on_delivery(world.sensor[i])
            else:
                world.ctrl[i] = controller_on_miss(world.ctrl[i])
            aoi_update(world.aoi[i], bool(outcome.theta[i]))
        if on_slot is not None:
            on_slot(world, delta, outcome)

        for i, loop in enumerate(loops):
            xi = world.x[i]
            u = synths[i].L_inf @ world.ctrl[i].x_hat
            cost_rec[k, i] = float(xi @ loop.Q @ xi + u @ loop.R @ u)
            x_next = loop.A @ xi + loop.B @ u + w_noise[i][k]
            if not float(x_next @ x_next) <= STATE_LIMIT**2:
                raise NumericalOverflow(f"loop {i} state norm exceeded {STATE_LIMIT:g} at slot {k}")
            world.x[i] = x_next
            world.ctrl[i] = controller_time_update(world.ctrl[i], u, loop)
            world.u_prev[i] = u
            t_rec[k, i] = world.ctrl[i].t_since
            received_rec[k, i] = outcome.theta[i]
        metric_rec[k] = metric
        channel_rec[k] = assigned

    trace = Trace(policy=policy, t_since=t_rec, metric=metric_rec, channel=channel_rec,
                  received=received_rec, stage_cost=cost_rec)
    aaoi, paoi = zip(*(aoi_summary(tr) for tr in world.aoi))
    summary = EpisodeSummary(
        policy=policy,
        cost=empirical_cost(trace),
        aaoi=list(aaoi),
        paoi=list(paoi),
        receptions=[int(c) for c in received_rec.sum(axis=0)],
    )
    return trace, summary


@dataclass
class PolicyReport:
    policy: Policy
    runs: int
    costs: list[float | None]  # None for diverged runs
    mean_cost: float | None
    std_cost: float | None
    ci95: tuple[float, float] | None
    diverged_runs: int
    aaoi: list[float | None]
    paoi: list[float | None]
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "policy": self.policy.value,
            "runs": self.runs,
            "mean_cost": self.mean_cost,
            "std_cost": self.std_cost,
            "ci95": None if self.ci95 is None else list(self.ci95),
            "diverged_runs": self.diverged_runs,
            "aaoi": self.aaoi,
            "paoi": self.paoi,
            "costs": self.costs,
        }


def _mean_or_none(values) -> float | None:
    vals = [v for v in values if v is not None]
    return math.fsum(vals) / len(vals) if vals else None


def summarize_runs(policy: Policy, outcomes: list[EpisodeSummary | str], num_loops: int) -> PolicyReport:
    """Fold per-run outcomes in run order; strings mark diverged runs."""
    ok = [o for o in outcomes if isinstance(o, EpisodeSummary)]
    costs = [o.cost if isinstance(o, EpisodeSummary) else None for o in outcomes]
    mean = std = ci = None
    if ok:
        mean = math.fsum(o.cost for o in ok) / len(ok)
    if len(ok) >= 2:
        std = statistics.stdev([o.cost for o in ok])
        half = Z95 * std / math.sqrt(len(ok))
        ci = (mean - half, mean + half)
    return PolicyReport(
        policy=policy,
        runs=len(outcomes),
        costs=costs,
        mean_cost=mean,
        std_cost=std,
        ci95=ci,
        diverged_runs=len(outcomes) - len(ok),
        aaoi=[_mean_or_none(o.aaoi[i] for o in ok) for i in range(num_loops)],
        paoi=[_mean_or_none(o.paoi[i] for o in ok) for i in range(num_loops)],
        errors=[o for o in outcomes if isinstance(o, str)],
    )


def _episode_or_error(scenario, synths, run, policy, weight_voi_by_q):
    try:
        return run_episode(scenario, synths, run=run, policy=policy, weight_voi_by_q=weight_voi_by_q)[1]
    except NumericalOverflow as exc:
        return f"run {run}: {exc}"


def monte_carlo_compare(scenario: Scenario, policies, runs: int, synths=None, *,
                        weight_voi_by_q: bool = True, workers: int | None = None) -> list[PolicyReport]:
    """Compare policies over ``runs`` common-random-number episodes.

    Run ``r`` of every policy uses the same noise streams. With ``workers > 1``
    episodes execute in a process pool; aggregation is still in run order.
    """
    if runs < 2:
        raise ValueError("at least two runs are needed for a confidence interval")
    policies = [Policy.parse(p) for p in policies]
    if synths is None:
        synths = [synthesize(loop) for loop in scenario.loops]
    synths = _check_synths(scenario, synths)
    if Policy.ALWAYS in policies and scenario.M < scenario.N:
        raise InfeasibleAlways(f"always-transmit needs M >= N (got N={scenario.N}, M={scenario.M})")

    jobs = [(p, r) for p in policies for r in range(runs)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_episode_or_error, scenario, synths, r, p, weight_voi_by_q) for p, r in jobs]
            results = [f.result() for f in futures]
    else:
        results = [_episode_or_error(scenario, synths, r, p, weight_voi_by_q) for p, r in jobs]

    reports = []
    for idx, policy in enumerate(policies):
        chunk = results[idx * runs:(idx + 1) * runs]
        reports.append(summarize_runs(policy, chunk, scenario.N))
    return reports


def episode_summary_dict(summary: EpisodeSummary) -> dict:
    return {
        "policy": summary.policy.value,
        "mean_cost": summary.cost,
        "std_cost": None,
        "ci95": None,
        "diverged_runs": 0,
        "aaoi": summary.aaoi,
        "paoi": summary.paoi,
    }
