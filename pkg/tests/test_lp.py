import itertools

import numpy as np
import pytest

from csagg.errors import InvalidArgumentError
from csagg.lp import LinearProgram, LPStatus, simplex_solve


def brute_force_value(c, g_ub, h_ub, lower, upper, maximize):
    """Enumerate candidate vertices from all n-subsets of active constraints."""
    n = c.size
    rows = [(*g_ub[i], h_ub[i]) for i in range(g_ub.shape[0])]
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        rows.append((*e, upper[i]))
        rows.append((*(-e), -lower[i]))
    rows = np.asarray(rows)
    best = None
    for subset in itertools.combinations(range(rows.shape[0]), n):
        a = rows[list(subset), :n]
        b = rows[list(subset), n]
        try:
            x = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            continue
        if np.any(g_ub @ x > h_ub + 1e-9):
            continue
        if np.any(x < lower - 1e-9) or np.any(x > upper + 1e-9):
            continue
        value = float(c @ x)
        if best is None or (value > best if maximize else value < best):
            best = value
    return best


def test_box_maximum():
    lp = LinearProgram(objective=[1.0, 1.0], lower=[0.0, 0.0], upper=[1.0, 1.0], maximize=True)
    result = simplex_solve(lp)
    assert result.status is LPStatus.OPTIMAL
    assert result.value == pytest.approx(2.0, abs=1e-9)
    assert np.allclose(result.x, [1.0, 1.0], atol=1e-9)


def test_infeasible_system():
    lp = LinearProgram(objective=[1.0], g_ub=[[1.0]], h_ub=[-1.0], lower=[0.0])
    assert simplex_solve(lp).status is LPStatus.INFEASIBLE


def test_unbounded_detected():
    lp = LinearProgram(objective=[1.0], lower=[0.0], maximize=True)
    assert simplex_solve(lp).status is LPStatus.UNBOUNDED


def test_equality_constraint():
    lp = LinearProgram(objective=[1.0, 2.0], a_eq=[[1.0, 1.0]], b_eq=[1.0],
                       lower=[0.0, 0.0], upper=[1.0, 1.0], maximize=True)
    result = simplex_solve(lp)
    assert result.status is LPStatus.OPTIMAL
    assert result.value == pytest.approx(2.0, abs=1e-9)


def test_free_variable_split():
    lp = LinearProgram(objective=[1.0], g_ub=[[1.0], [-1.0]], h_ub=[3.0, 2.0])
    result = simplex_solve(lp)
    assert result.status is LPStatus.OPTIMAL
    assert result.value == pytest.approx(-2.0, abs=1e-9)


def test_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(7)
    for trial in range(50):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, 7))
        interior = rng.uniform(0.2, 0.8, n)
        g = rng.normal(size=(m, n))
        h = g @ interior + rng.uniform(0.05, 1.0, m)
        c = rng.normal(size=n)
        lower = np.zeros(n)
        upper = np.full(n, 1.5)
        maximize = bool(rng.integers(0, 2))
        lp = LinearProgram(objective=c, g_ub=g, h_ub=h, lower=lower, upper=upper,
                           maximize=maximize)
        result = simplex_solve(lp)
        assert result.status is LPStatus.OPTIMAL, f"trial {trial}"
        oracle = brute_force_value(c, g, h, lower, upper, maximize)
        assert result.value == pytest.approx(oracle, abs=1e-6), f"trial {trial}"
        # vertex solution feasibility
        assert np.all(g @ result.x <= h + 1e-8)
        assert np.all(result.x >= -1e-9) and np.all(result.x <= 1.5 + 1e-9)


def test_degenerate_ties_complete():
    # Many identical rows force degenerate pivots; Bland fallback must finish.
    g = np.ones((6, 2))
    h = np.ones(6)
    lp = LinearProgram(objective=[1.0, 1.0], g_ub=g, h_ub=h, lower=[0.0, 0.0],
                       maximize=True)
    result = simplex_solve(lp)
    assert result.status is LPStatus.OPTIMAL
    assert result.value == pytest.approx(1.0, abs=1e-9)


def test_dimension_validation():
    with pytest.raises(InvalidArgumentError):
        LinearProgram(objective=[1.0, 2.0], g_ub=[[1.0]], h_ub=[1.0])
    with pytest.raises(InvalidArgumentError):
        LinearProgram(objective=[1.0], lower=[2.0], upper=[1.0])
