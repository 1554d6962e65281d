import numpy as np
import pytest

from csagg.errors import InfeasibleProblemError, InvalidArgumentError
from csagg.flow import FlowProblem, min_cost_flow_lp, shortest_path_lmo
from csagg.synth import grid_flow_problem


def test_parallel_edges_pick_cheaper():
    problem = FlowProblem(2, ((0, 1), (0, 1)), np.array([1.0, 2.0]), 0, 1)
    flow = shortest_path_lmo(problem, np.array([1.0, 2.0]))
    assert np.array_equal(flow, [1.0, 0.0])


def test_zero_costs_value_zero():
    problem = grid_flow_problem(3, 3, seed=0)
    flow = shortest_path_lmo(problem, np.zeros(problem.n_edges))
    assert float(np.zeros(problem.n_edges) @ flow) == 0.0
    # still a unit path
    a = problem.incidence_matrix()
    assert np.allclose(a @ flow, problem.demand_vector(), atol=1e-12)


def test_grid_path_matches_lp():
    rng = np.random.default_rng(1)
    problem = grid_flow_problem(5, 5, seed=2)
    for _ in range(20):
        costs = rng.uniform(0.1, 3.0, problem.n_edges)
        flow = shortest_path_lmo(problem, costs)
        _, lp_value = min_cost_flow_lp(problem, costs)
        assert float(costs @ flow) == pytest.approx(lp_value, abs=1e-9)


def test_unreachable_target_rejected():
    with pytest.raises(InvalidArgumentError):
        FlowProblem(3, ((0, 1),), np.array([1.0]), 0, 2)


def test_unreachable_under_costs():
    # reachability holds at build time; Dijkstra still guards internally
    problem = FlowProblem(3, ((0, 1), (1, 2)), np.array([1.0, 1.0]), 0, 2)
    flow = shortest_path_lmo(problem, np.array([5.0, 5.0]))
    assert np.array_equal(flow, [1.0, 1.0])


def test_incidence_structure():
    problem = grid_flow_problem(3, 3, seed=0)
    a = problem.incidence_matrix()
    assert np.all(np.sum(a == 1.0, axis=0) == 1)
    assert np.all(np.sum(a == -1.0, axis=0) == 1)
    b = problem.demand_vector()
    assert b[problem.source] == 1.0 and b[problem.target] == -1.0
    assert np.sum(b != 0) == 2


def test_problem_validation():
    with pytest.raises(InvalidArgumentError):
        FlowProblem(2, ((0, 0),), np.array([1.0]), 0, 1)  # self loop
    with pytest.raises(InvalidArgumentError):
        FlowProblem(2, ((0, 1),), np.array([-1.0]), 0, 1)  # negative cost
    with pytest.raises(InvalidArgumentError):
        FlowProblem(2, ((0, 1),), np.array([1.0]), 1, 1)  # source == target
