import math

import numpy as np
import pytest

from csagg._validation import derive_seed
from csagg.calibration import (
    CalibrationConfig,
    QuantileEnvelope,
    calibrate,
    scalar_envelope,
)
from csagg.errors import EmptyRegionError, InvalidArgumentError, UndefinedMetricError
from csagg.flow import FlowProblem, shortest_path_lmo
from csagg.geometry import DirectionSet
from csagg.robust import (
    inner_max,
    robust_route,
    robust_value,
    suboptimality_gap,
)
from csagg.scores import SampleBank
from csagg.synth import SyntheticSpec, generate_synthetic, grid_flow_problem


def axis_envelope(thresholds, alpha=0.1):
    thresholds = np.asarray(thresholds, dtype=float)
    dirs = DirectionSet(np.eye(thresholds.size))
    return QuantileEnvelope(dirs=dirs, raw_thresholds=thresholds, t_hat=1.0,
                            final_thresholds=thresholds.copy(),
                            beta_star=alpha / thresholds.size, alpha=alpha,
                            n_stage1=0, n_stage2=0)


def make_envelope_2d(seed, n=400, m=16, alpha=0.1):
    data = generate_synthetic(SyntheticSpec(kind="gaussian_residual", k=2, n_cal=n,
                                            n_test=4, seed=seed))
    return calibrate(data.cal_scores, CalibrationConfig(alpha=alpha, epsilon=0.05,
                                                        m=m, seed=seed))


def test_inner_max_single_ball():
    bank = SampleBank((np.array([[0.0]]),))
    env = scalar_envelope(1.0, 0.1)
    result = inner_max(np.array([1.0]), bank, env, (0,))
    assert result.feasible
    assert result.value == pytest.approx(1.0, abs=1e-9)
    assert result.c_star[0] == pytest.approx(1.0, abs=1e-9)


def test_inner_max_two_interval_intersection():
    env = axis_envelope([1.0, 1.0])
    bank = SampleBank((np.array([[0.0]]), np.array([[1.0]])))
    result = inner_max(np.array([1.0]), bank, env, (0, 0))
    assert result.feasible
    assert result.value == pytest.approx(1.0, abs=1e-6)
    assert result.violation <= 1e-6


def test_inner_max_matches_grid_bruteforce():
    for trial in range(20):
        seed = derive_seed(11, "grid", trial)
        rng = np.random.default_rng(seed)
        env = make_envelope_2d(seed)
        samples1 = rng.normal(3.0, 0.7, (2, 2))
        samples2 = rng.normal(3.3, 0.7, (1, 2))
        bank = SampleBank((samples1, samples2))
        w = rng.uniform(0.5, 1.5, 2)
        lo = np.vstack([samples1, samples2]).min(axis=0) - 1.2 * env.final_thresholds.max() * np.sqrt(2)
        hi = np.vstack([samples1, samples2]).max(axis=0) + 1.2 * env.final_thresholds.max() * np.sqrt(2)
        xs = np.linspace(lo[0], hi[0], 400)
        ys = np.linspace(lo[1], hi[1], 400)
        grid = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
        for tup in ((0, 0), (1, 0)):
            result = inner_max(w, bank, env, tup)
            anchors = np.vstack([samples1[tup[0]], samples2[tup[1]]])
            dist = np.stack([np.linalg.norm(grid - anchors[0], axis=1),
                             np.linalg.norm(grid - anchors[1], axis=1)], axis=1)
            member = np.all(dist @ env.dirs.directions.T <= env.final_thresholds[None, :],
                            axis=1)
            if not member.any():
                continue
            brute = float(np.max(grid[member] @ w))
            if result.feasible:
                assert result.value == pytest.approx(brute, rel=1e-2)
                assert result.violation <= 1e-6
            else:
                # grid membership found a point the segment search missed
                assert member.mean() < 1e-3


def test_inner_max_infeasible_tuple():
    env = axis_envelope([0.5, 0.5])
    bank = SampleBank((np.array([[0.0]]), np.array([[10.0]])))
    result = inner_max(np.array([1.0]), bank, env, (0, 0))
    assert not result.feasible


def test_robust_value_single_tuple_equals_inner_max():
    env = scalar_envelope(1.5, 0.1)
    bank = SampleBank((np.array([[2.0, 1.0]]),))
    w = np.array([0.7, 0.3])
    value, c_star = robust_value(w, bank, env)
    single = inner_max(w, bank, env, (0,))
    assert value == pytest.approx(single.value, abs=1e-9)
    assert np.allclose(c_star, single.c_star, atol=1e-9)


def test_robust_value_skips_infeasible_tuple():
    env = axis_envelope([0.8, 0.8])
    bank = SampleBank((np.array([[0.0], [50.0]]), np.array([[0.5]])))
    w = np.array([1.0])
    value, _ = robust_value(w, bank, env)
    good = inner_max(w, bank, env, (0, 0))
    assert value == pytest.approx(good.value, abs=1e-9)
    bad = inner_max(w, bank, env, (1, 0))
    assert not bad.feasible


def test_robust_value_all_infeasible_raises():
    env = axis_envelope([0.5, 0.5])
    bank = SampleBank((np.array([[0.0]]), np.array([[10.0]])))
    with pytest.raises(EmptyRegionError):
        robust_value(np.array([1.0]), bank, env)


def test_robust_value_monotone_in_t_hat():
    rng = np.random.default_rng(21)
    for trial in range(10):
        seed = derive_seed(22, "mono", trial)
        env = make_envelope_2d(seed)
        grown = QuantileEnvelope(
            dirs=env.dirs, raw_thresholds=env.raw_thresholds, t_hat=env.t_hat * 1.5,
            final_thresholds=env.t_hat * 1.5 * env.raw_thresholds,
            beta_star=env.beta_star, alpha=env.alpha,
            n_stage1=env.n_stage1, n_stage2=env.n_stage2)
        bank = SampleBank((rng.normal(0, 1, (2, 3)), rng.normal(0, 1, (1, 3))))
        w = rng.uniform(0.1, 1.0, 3)
        try:
            small, _ = robust_value(w, bank, env)
        except EmptyRegionError:
            continue
        big, _ = robust_value(w, bank, grown)
        assert big >= small - 1e-5 * max(1.0, abs(small))


def test_danskin_lower_bound():
    rng = np.random.default_rng(30)
    seed = derive_seed(30, "danskin", 0)
    data = generate_synthetic(SyntheticSpec(kind="routing_toy", n_cal=200, n_test=4,
                                            seed=seed))
    env = calibrate(data.cal_score_matrix(),
                    CalibrationConfig(alpha=0.05, epsilon=0.05, split_fraction=0.2,
                                      m=16, seed=seed))
    problem = data.problem
    bank = data.test_banks[0]
    w = shortest_path_lmo(problem, problem.nominal_costs)
    value, c_star = robust_value(w, bank, env)
    for _ in range(5):
        other = shortest_path_lmo(problem, rng.uniform(0.5, 2.0, problem.n_edges))
        other_value, _ = robust_value(other, bank, env)
        assert other_value >= value + float(c_star @ (other - w)) - 1e-5


def test_robust_route_degenerate_bank_matches_dijkstra():
    problem = grid_flow_problem(3, 3, seed=4)
    c0 = np.random.default_rng(5).uniform(1.0, 2.0, problem.n_edges)
    bank = SampleBank((np.tile(c0, (1, 1)),))
    env = scalar_envelope(1e-4, 0.05)
    solution = robust_route(problem, bank, env, iters=100)
    opt_flow = shortest_path_lmo(problem, c0)
    opt_value = float(c0 @ opt_flow)
    assert solution.value == pytest.approx(opt_value, rel=0.01)


def test_robust_route_mixing_reduces_worst_case():
    # Two parallel edges, one sample at (2, 2), unit ball region: the pure
    # edges cost 3 in the worst case while the even mix costs 2 + 1/sqrt(2).
    problem = FlowProblem(2, ((0, 1), (0, 1)), np.array([1.0, 1.0]), 0, 1)
    bank = SampleBank((np.array([[2.0, 2.0]]),))
    env = scalar_envelope(1.0, 0.05)
    solution = robust_route(problem, bank, env, iters=120, gap_tol=1e-5)
    expected = 2.0 + 1.0 / np.sqrt(2.0)
    assert solution.value == pytest.approx(expected, rel=0.01)
    assert solution.value < 3.0 - 0.2


def test_robust_route_fw_gap_rate():
    # min_{tau<=t} g_tau <= C / t with C frozen from a pilot run (2x margin).
    C = 40.0
    for trial in range(3):
        seed = derive_seed(33, "fwgap", trial)
        data = generate_synthetic(SyntheticSpec(kind="routing_toy", n_cal=200, n_test=4,
                                                seed=seed))
        env = calibrate(data.cal_score_matrix(),
                        CalibrationConfig(alpha=0.05, epsilon=0.05, split_fraction=0.2,
                                          m=16, seed=seed))
        problem, bank = data.problem, data.test_banks[0]
        w = shortest_path_lmo(problem, problem.nominal_costs)
        running = math.inf
        for t in range(1, 21):
            value, c_star = robust_value(w, bank, env)
            vertex = shortest_path_lmo(problem, np.maximum(c_star, 0.0))
            running = min(running, float((w - vertex) @ c_star))
            assert running <= C / t
            w = w + (2.0 / (t + 1.0)) * (vertex - w)


def test_robust_route_pgd_mode():
    problem = FlowProblem(2, ((0, 1), (0, 1)), np.array([1.0, 1.0]), 0, 1)
    bank = SampleBank((np.array([[2.0, 2.0]]),))
    env = scalar_envelope(1.0, 0.05)
    with pytest.raises(InvalidArgumentError):
        robust_route(problem, bank, env, iters=5, mode="projected_subgradient")
    solution = robust_route(problem, bank, env, iters=200, mode="projected_subgradient",
                            eta=0.01)
    assert solution.value == pytest.approx(2.0 + 1.0 / np.sqrt(2.0), rel=0.02)
    a = problem.incidence_matrix()
    assert np.allclose(a @ solution.flow, problem.demand_vector(), atol=1e-7)


def test_flow_feasibility_every_iterate():
    data = generate_synthetic(SyntheticSpec(kind="routing_toy", n_cal=120, n_test=4,
                                            seed=77))
    env = calibrate(data.cal_score_matrix(),
                    CalibrationConfig(alpha=0.1, epsilon=0.1, split_fraction=0.2,
                                      m=8, seed=77))
    problem = data.problem
    solution = robust_route(problem, data.test_banks[0], env, iters=10)
    a = problem.incidence_matrix()
    assert np.allclose(a @ solution.flow, problem.demand_vector(), atol=1e-8)
    assert np.all(solution.flow >= -1e-12) and np.all(solution.flow <= 1 + 1e-12)


def test_suboptimality_gap_examples():
    problem = FlowProblem(2, ((0, 1), (0, 1)), np.array([1.0, 2.0]), 0, 1)
    costs = np.array([1.0, 2.0])
    opt = shortest_path_lmo(problem, costs)
    assert suboptimality_gap(costs, opt, problem) == 0.0
    worse = np.array([0.0, 1.0])  # twice the optimal cost, clamped to 1
    assert suboptimality_gap(costs, worse, problem) == 1.0
    with pytest.raises(UndefinedMetricError):
        suboptimality_gap(np.zeros(2), opt, problem)


def test_inner_max_k3_sanity():
    env = axis_envelope([1.2, 1.2, 1.2])
    bank = SampleBank((np.array([[0.0, 0.0]]), np.array([[0.5, 0.0]]),
                       np.array([[0.0, 0.5]])))
    w = np.array([1.0, 0.5])
    result = inner_max(w, bank, env, (0, 0, 0))
    assert result.feasible
    assert result.violation <= 1e-6
    # brute force over a grid
    xs = np.linspace(-2, 3, 300)
    grid = np.stack(np.meshgrid(xs, xs), axis=-1).reshape(-1, 2)
    anchors = np.array([[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]])
    dists = np.stack([np.linalg.norm(grid - a, axis=1) for a in anchors], axis=1)
    member = np.all(dists <= 1.2, axis=1)
    brute = float(np.max(grid[member] @ w))
    assert result.value == pytest.approx(brute, rel=2e-2)
