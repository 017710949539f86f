"""Acceptance criteria 1-14, each at its stated tolerance.

Every test carries a ``criterion`` marker; the session summary prints one
PASS/FAIL line per criterion (see ``conftest.py``). Run on its own with
``pytest tests/test_acceptance.py``.
"""
import itertools
import math
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg

from wncs.channel import realize
from wncs.cli import main
from wncs.errors import Infeasible
from wncs.estimation import SensorFilterState, sensor_on_delivery, sensor_step
from wncs.infotheory import (
    TruthTable,
    binary_entropy,
    conditional_mi,
    gaussian_rd,
    ib_lagrangian,
    ib_solve,
    indirect_rd_scalar,
    mutual_information,
    rd_at_distortion,
    semantic_mi,
)
from wncs.metrics import AoiTracker, aoi_summary, aoi_update, coil, sawtooth_area_aoi, voi
from wncs.scenario import LoopSpec, dumps, load_scenario, make_scenario, scalar_loop
from wncs.scheduling import assign_max_weight, brute_force_schedule, objective
from wncs.simulator import monte_carlo_compare, run_episode
from wncs.synthesis import (
    LoopSynthesis,
    kalman_update_map,
    lyap_map,
    solve_control_dare,
    solve_filter_riccati,
    stationary_cost,
    synthesize,
)

from conftest import random_loop

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
PHI = (1 + math.sqrt(5)) / 2
HAMMING = np.array([[0.0, 1.0], [1.0, 0.0]])


def random_joint(rng, shape):
    p = rng.random(shape) ** 2
    return p / p.sum()


# 1 ---------------------------------------------------------------------------

@pytest.mark.criterion(1, "Riccati correctness")
def test_golden_riccati_roots():
    Pi, _ = solve_control_dare(1, 1, 1, 1)
    P, _ = solve_filter_riccati(1, 1, 1, 1)
    assert abs(Pi[0, 0] - PHI) <= 1e-8
    assert abs(P[0, 0] - (math.sqrt(5) - 1) / 2) <= 1e-8


@pytest.mark.criterion(1, "Riccati correctness")
def test_riccati_residuals_on_random_instances():
    rng = np.random.default_rng(1)
    for _ in range(50):
        loop = random_loop(rng)
        s = synthesize(loop)
        A, B, Q, R = loop.A, loop.B, loop.Q, loop.R
        M = B.T @ s.Pi_inf @ B + R
        residual = s.Pi_inf - (A.T @ s.Pi_inf @ A + Q - s.L_inf.T @ M @ s.L_inf)
        assert np.linalg.norm(residual) <= 1e-8 * (1 + np.linalg.norm(s.Pi_inf))
        fixed = kalman_update_map(lyap_map(s.P_bar, A, loop.W), loop.C, loop.V) - s.P_bar
        assert np.linalg.norm(fixed) <= 1e-8 * (1 + np.linalg.norm(s.P_bar))
        for X in (s.Pi_inf, s.Gamma_inf, s.P_bar):
            assert np.abs(X - X.T).max() <= 1e-9
            assert np.linalg.eigvalsh(X).min() >= -1e-9
        ref = scipy.linalg.solve_discrete_are(A, B, Q, R)
        assert np.linalg.norm(s.Pi_inf - ref) <= 1e-6 * np.linalg.norm(ref)


# 2 ---------------------------------------------------------------------------

@pytest.mark.criterion(2, "Gamma cross-validation by stationary cost")
def test_golden_stationary_cost():
    loop = scalar_loop(1.0)
    syn = synthesize(loop)
    target = stationary_cost(loop, syn)
    assert target == pytest.approx(math.sqrt(5), abs=1e-8)
    sc = make_scenario([loop], [[1.0]], horizon=100_000, seed=17, policy="always")
    trace, _ = run_episode(sc, [syn])
    assert abs(trace.stage_cost[:, 0].mean() / target - 1) <= 0.05


@pytest.mark.criterion(2, "Gamma cross-validation by stationary cost")
def test_random_loops_stationary_cost():
    rng = np.random.default_rng(2)
    loops = [random_loop(rng, n=n) for n in (1, 2, 3)]
    sc = make_scenario(loops, np.ones((3, 3)), horizon=100_000, seed=23, policy="always")
    synths = [synthesize(lp) for lp in loops]
    trace, _ = run_episode(sc, synths)
    for i, (lp, s) in enumerate(zip(loops, synths)):
        target = stationary_cost(lp, s)
        assert abs(trace.stage_cost[:, i].mean() / target - 1) <= 0.05


# 3 ---------------------------------------------------------------------------

@pytest.mark.criterion(3, "CoIL properties")
def test_coil_nonnegative_monotone():
    rng = np.random.default_rng(3)
    for _ in range(50):
        loop = random_loop(rng)
        syn = synthesize(loop)
        vals = [coil(syn, t, loop) for t in range(21)]
        assert min(vals) >= -1e-9
        assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


@pytest.mark.criterion(3, "CoIL properties")
def test_coil_stream_ignores_noise():
    sc = load_scenario(SCENARIOS / "contention.json").replace(horizon=2000)
    synths = [synthesize(lp) for lp in sc.loops]
    a, _ = run_episode(sc, synths, policy="coil")
    b, _ = run_episode(sc.replace(seed=sc.seed + 99), synths, policy="coil")
    assert np.array_equal(a.received, b.received)
    assert np.array_equal(a.metric, b.metric)


# 4 ---------------------------------------------------------------------------

def _fake_synth(K, n):
    Z = np.zeros((n, n))
    return LoopSynthesis(Pi_inf=Z, L_inf=np.zeros((n, n)), Gamma_inf=Z, P_bar=Z, K_gain=K)


@pytest.mark.criterion(4, "VoI properties")
def test_voi_telescoping_identity():
    rng = np.random.default_rng(4)
    for _ in range(300):
        n, p, length = int(rng.integers(1, 4)), int(rng.integers(1, 3)), int(rng.integers(1, 11))
        A, C, K = rng.normal(size=(n, n)), rng.normal(size=(p, n)), rng.normal(size=(n, p))
        loop = LoopSpec(A=A, B=np.eye(n), C=C, W=np.eye(n), V=np.eye(p), Q=np.eye(n), R=np.eye(n),
                        x0_mean=np.zeros(n), x0_cov=np.eye(n))
        syn = _fake_synth(K, n)
        state = sensor_on_delivery(SensorFilterState(rng.normal(size=n), rng.normal(size=n), rng.normal(size=n)))
        nus = []
        for _ in range(length):
            u, y = rng.normal(size=n), rng.normal(size=p)
            nus.append(y - C @ (A @ state.x_post + u))
            state = sensor_step(state, y, u, syn, loop)
        closed = sum(np.linalg.matrix_power(A, length - 1 - j) @ K @ nu for j, nu in enumerate(nus))
        assert np.abs(state.e_check - closed).max() <= 1e-10 * (1 + np.abs(closed).max())


@pytest.mark.criterion(4, "VoI properties")
def test_voi_nonnegative_and_zero_after_reception():
    rng = np.random.default_rng(44)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        F = rng.normal(size=(n, n))
        syn = LoopSynthesis(Pi_inf=F, L_inf=F, Gamma_inf=F @ F.T, P_bar=F, K_gain=F)
        assert voi(syn, rng.normal(size=n)) >= 0

    loops = [random_loop(rng, n=2), random_loop(rng, n=3), scalar_loop(1.2)]
    sc = make_scenario(loops, rng.uniform(0.3, 1.0, size=(3, 2)), horizon=3000, seed=4, policy="voi")
    synths = [synthesize(lp) for lp in loops]
    receptions = [0]

    def check(world, delta, outcome):
        for i in range(sc.N):
            value = voi(synths[i], world.sensor[i].e_check)
            assert value >= 0
            if outcome.theta[i]:
                receptions[0] += 1
                assert value == 0.0

    trace, _ = run_episode(sc, synths, on_slot=check)
    assert receptions[0] == trace.received.sum() > 0
    assert np.all(trace.metric >= 0)


# 5 ---------------------------------------------------------------------------

@pytest.mark.criterion(5, "Scheduling optimality")
def test_max_weight_matches_brute_force():
    rng = np.random.default_rng(5)
    for idx in range(500):
        N, M = (int(v) for v in rng.integers(1, 5, size=2))
        m = rng.random((N, M)) if idx % 2 else rng.integers(0, 4, size=(N, M)).astype(float)
        fast, slow = assign_max_weight(m), brute_force_schedule(m)
        assert objective(m, fast) == objective(m, slow)
        assert np.array_equal(fast, slow)
        scale = float(rng.uniform(1e-3, 1e3))
        assert np.array_equal(assign_max_weight(scale * m), fast)


# 6 ---------------------------------------------------------------------------

@pytest.mark.criterion(6, "Policy-comparison headline")
def test_reference_contention_comparison():
    sc = load_scenario(SCENARIOS / "contention.json")
    assert sc.N == 2 and sc.M == 1 and sc.horizon == 10_000
    assert all(lp.A[0, 0] == 1.2 for lp in sc.loops) and np.all(sc.q_bar == 1)
    reports = {r.policy.value: r for r in
               monte_carlo_compare(sc, ["coil", "voi", "aoi", "round_robin", "random"], runs=20)}
    for line in (f"{p:<12} mean={r.mean_cost:.4f} ci95=({r.ci95[0]:.4f}, {r.ci95[1]:.4f})"
                 for p, r in reports.items()):
        print(line)
    assert all(r.diverged_runs == 0 for r in reports.values())
    rand = reports["random"]
    assert reports["coil"].mean_cost < rand.mean_cost
    assert reports["coil"].ci95[1] < rand.ci95[0]
    for p in ("coil", "voi", "aoi", "round_robin"):
        assert reports[p].mean_cost < rand.mean_cost


# 7 ---------------------------------------------------------------------------

@pytest.mark.criterion(7, "Degenerate equivalence with ample perfect channels")
@pytest.mark.parametrize("M", [3, 4])
def test_coil_voi_always_identical(M):
    rng = np.random.default_rng(7 + M)
    loops = [random_loop(rng, n=n) for n in (1, 2, 3)]
    sc = make_scenario(loops, np.ones((3, M)), horizon=3000, seed=M)
    synths = [synthesize(lp) for lp in loops]
    costs = [run_episode(sc, synths, policy=p)[0].stage_cost for p in ("always", "coil", "voi")]
    assert np.array_equal(costs[0], costs[1]) and np.array_equal(costs[0], costs[2])
    reports = monte_carlo_compare(sc.replace(horizon=500), ["always", "coil", "voi"], runs=2, synths=synths)
    assert reports[0].mean_cost == reports[1].mean_cost == reports[2].mean_cost


# 8 ---------------------------------------------------------------------------

@pytest.mark.criterion(8, "AoI identities")
def test_period_four_delivery():
    tr = AoiTracker()
    for k in range(10_000):
        aoi_update(tr, k % 4 == 3)
    assert aoi_summary(tr) == (1.5, 3.0)


@pytest.mark.criterion(8, "AoI identities")
def test_sawtooth_area_identity():
    rng = np.random.default_rng(8)
    for rate in (0.02, 0.2, 0.5, 0.9):
        tr = AoiTracker()
        for rx in rng.random(10_000) < rate:
            aoi_update(tr, bool(rx))
        assert abs(sawtooth_area_aoi(tr.ages_trace) - aoi_summary(tr)[0]) <= 1e-12


# 9 ---------------------------------------------------------------------------

@pytest.mark.criterion(9, "Channel statistics")
def test_channel_statistics():
    rng = np.random.default_rng(9)
    single = np.array([realize([[1]], [[0.7]], rng).theta[0] for _ in range(100_000)])
    assert abs(single.mean() - 0.7) <= 0.006
    pair = np.array([realize(np.eye(2, dtype=int), [[0.7, 0.5], [0.5, 0.7]], rng).theta
                     for _ in range(100_000)], dtype=float)
    assert abs(np.corrcoef(pair.T)[0, 1]) <= 0.01


# 10 --------------------------------------------------------------------------

@pytest.mark.criterion(10, "Information theory oracles")
def test_information_theory_oracles():
    assert gaussian_rd(1.0, 0.25) == 1.0
    for D in (0.05, 0.11, 0.2, 0.3, 0.4):
        pt = rd_at_distortion([0.5, 0.5], HAMMING, D)
        assert abs(pt.rate - (1 - binary_entropy(D))) <= 1e-3
    bsc = 0.5 * np.array([[0.9, 0.1], [0.1, 0.9]])
    assert abs(mutual_information(bsc) - (1 - binary_entropy(0.1))) <= 1e-9
    xor = np.zeros((2, 2, 2))
    for x, y in itertools.product(range(2), repeat=2):
        xor[x, y, x ^ y] = 0.25
    assert abs(mutual_information(xor.sum(axis=2))) <= 1e-10
    assert abs(conditional_mi(xor) - 1.0) <= 1e-10


# 11 --------------------------------------------------------------------------

@pytest.mark.criterion(11, "Information Bottleneck suite")
def test_ib_basic_cases():
    rng = np.random.default_rng(11)
    assert ib_solve(random_joint(rng, (3, 3)), 2, 0.0).I_xt <= 1e-9
    res = ib_solve(np.diag([0.5, 0.5]), 2, 10.0)
    assert abs(res.I_xt - 1) <= 1e-6 and abs(res.I_ty - 1) <= 1e-6


@pytest.mark.criterion(11, "Information Bottleneck suite")
def test_ib_data_processing_inequality():
    rng = np.random.default_rng(111)
    for _ in range(100):
        p = random_joint(rng, (3, 3))
        res = ib_solve(p, 3, float(rng.uniform(0.5, 20)), restarts=3, rng=rng)
        assert res.I_ty <= mutual_information(p) + 1e-9


@pytest.mark.criterion(11, "Information Bottleneck suite")
def test_ib_beats_every_deterministic_encoder():
    rng = np.random.default_rng(1111)
    checked = 0
    for nx, nt, ny in itertools.product((2, 3, 4), (2, 3), (2, 3)):
        for beta in (0.5, 2.0, 10.0):
            p = random_joint(rng, (nx, ny))
            res = ib_solve(p, nt, beta, rng=rng)
            hard = min(ib_lagrangian(p, np.eye(nt)[list(f)], beta)
                       for f in itertools.product(range(nt), repeat=nx))
            assert res.lagrangian <= hard + 1e-6
            checked += 1
    assert checked == 36


# 12 --------------------------------------------------------------------------

@pytest.mark.criterion(12, "Semantic mutual information")
def test_semantic_mi():
    rng = np.random.default_rng(12)
    for _ in range(100):
        p = random_joint(rng, tuple(int(v) for v in rng.integers(2, 5, size=2)))
        px = p.sum(axis=1)
        assert abs(semantic_mi(TruthTable(p / px[:, None], px), p) - mutual_information(p)) <= 1e-12
    tt = TruthTable([[1.0, 0.5], [0.5, 1.0]], [0.5, 0.5])
    assert abs(semantic_mi(tt, np.diag([0.5, 0.5])) - math.log2(4 / 3)) <= 1e-12


# 13 --------------------------------------------------------------------------

def grid_oracle_rate(s2, w2, a, D_s, D_x, points=10_000):
    """Search the X test-channel error variance on a uniform grid.

    For each candidate error variance D the Gaussian test channel gives the
    joint covariance of (S, X, Xhat); the semantic error is the linear MMSE of
    S from Xhat and the rate is computed from the (X, Xhat) covariance.
    """
    x2 = a * a * s2 + w2
    best = math.inf
    for D in x2 * np.arange(1, points + 1) / points:
        v_hat = x2 - D
        c_xs = a * s2
        c_shat = c_xs * v_hat / x2
        err_s = s2 - (c_shat**2 / v_hat if v_hat > 0 else 0.0)
        if err_s > D_s + 1e-12 or D > D_x:
            continue
        cov = np.array([[x2, v_hat], [v_hat, v_hat]])
        rate = 0.0 if v_hat <= 0 else 0.5 * math.log2(x2 * v_hat / np.linalg.det(cov))
        best = min(best, rate)
    return best


@pytest.mark.criterion(13, "Indirect scalar semantic rate-distortion")
def test_indirect_rd():
    for D in (0.1, 0.25, 0.5, 0.9):
        assert abs(indirect_rd_scalar(1.0, 0.0, 1.0, D, 10.0) - gaussian_rd(1.0, D)) <= 1e-9
    for case in [(1.0, 1.0, 1.0, 0.6, 1e6), (2.0, 0.5, 1.5, 0.5, 1.0), (1.0, 0.2, 0.8, 0.9, 0.3)]:
        assert abs(indirect_rd_scalar(*case) - grid_oracle_rate(*case)) <= 1e-3
    with pytest.raises(Infeasible):
        indirect_rd_scalar(1.0, 1.0, 1.0, 0.49, 10.0)


# 14 --------------------------------------------------------------------------

@pytest.mark.criterion(14, "Reproducibility of CLI artifacts")
def test_cli_outputs_are_byte_identical(tmp_path):
    sc = load_scenario(SCENARIOS / "contention.json").replace(horizon=1000)
    path = tmp_path / "s.json"
    path.write_text(dumps(sc))
    commands = {
        "run": ["run", "--scenario", str(path), "--policy", "voi", "--seed", "5"],
        "compare": ["compare", "--scenario", str(path), "--policies", "coil,random,aoi", "--runs", "3"],
    }
    for name, argv in commands.items():
        outs = []
        for rep in range(2):
            out = tmp_path / f"{name}{rep}"
            assert main(argv + ["--out", str(out)]) == 0
            outs.append({f.name: f.read_bytes() for f in sorted(out.iterdir())})
        assert outs[0] == outs[1] and len(outs[0]) == 2
