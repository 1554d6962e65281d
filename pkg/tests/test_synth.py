import numpy as np
import pytest

from csagg.errors import InvalidArgumentError
from csagg.synth import (
    SyntheticSpec,
    generate_classification_ensemble,
    generate_synthetic,
    grid_flow_problem,
    routing_score_matrix,
)


def test_gaussian_residual_correlation():
    spec = SyntheticSpec(kind="gaussian_residual", k=2, rho=0.0, n_cal=10_000,
                         n_test=10, seed=1)
    data = generate_synthetic(spec)
    signed = data.cal_predictions - data.cal_targets[:, None]
    corr = np.corrcoef(signed.T)[0, 1]
    assert abs(corr) < 0.05
    assert np.array_equal(data.cal_scores, np.abs(signed))


def test_gaussian_residual_rho_applied():
    spec = SyntheticSpec(kind="gaussian_residual", k=2, rho=0.9, n_cal=10_000,
                         n_test=10, seed=2)
    data = generate_synthetic(spec)
    signed = data.cal_predictions - data.cal_targets[:, None]
    assert np.corrcoef(signed.T)[0, 1] == pytest.approx(0.9, abs=0.03)


def test_chi2_check_quantile():
    spec = SyntheticSpec(kind="chi2_check", k=1, rho=0.0, n_cal=10_000, n_test=10, seed=3)
    data = generate_synthetic(spec)
    q90 = np.quantile(data.cal_scores[:, 0], 0.9)
    assert q90 == pytest.approx(2.706, abs=0.1)


def test_lognormal_scores_heavy_tailed():
    spec = SyntheticSpec(kind="lognormal", k=2, rho=0.0, n_cal=5000, n_test=10, seed=4)
    data = generate_synthetic(spec)
    assert np.all(data.cal_scores > 0)
    assert np.mean(data.cal_scores) > np.median(data.cal_scores) * 2


def test_anisotropic_scales_second_component():
    spec = SyntheticSpec(kind="anisotropic", k=2, rho=0.0, n_cal=5000, n_test=10, seed=5)
    data = generate_synthetic(spec)
    assert np.std(data.cal_scores[:, 1]) > 5 * np.std(data.cal_scores[:, 0])


def test_same_seed_identical():
    spec = SyntheticSpec(kind="gaussian_residual", k=3, rho=0.2, n_cal=100, n_test=50, seed=6)
    a = generate_synthetic(spec)
    b = generate_synthetic(spec)
    assert np.array_equal(a.cal_scores, b.cal_scores)
    assert np.array_equal(a.test_predictions, b.test_predictions)


def test_invalid_kind_rejected():
    with pytest.raises(InvalidArgumentError):
        SyntheticSpec(kind="nope")


def test_routing_toy_structure():
    spec = SyntheticSpec(kind="routing_toy", n_cal=10, n_test=5, seed=7)
    data = generate_synthetic(spec)
    assert data.problem.n_vertices == 25
    assert len(data.cal_banks) == 10 and len(data.test_banks) == 5
    assert data.cal_banks[0].sizes == (4, 1)
    assert data.cal_truths.shape == (10, data.problem.n_edges)
    scores = data.cal_score_matrix()
    assert scores.shape == (10, 2)
    assert np.all(scores >= 0)


def test_routing_toy_deterministic():
    spec = SyntheticSpec(kind="routing_toy", n_cal=6, n_test=4, seed=8)
    a = generate_synthetic(spec)
    b = generate_synthetic(spec)
    assert np.array_equal(a.cal_truths, b.cal_truths)
    assert np.array_equal(a.test_banks[2].samples[0], b.test_banks[2].samples[0])


def test_routing_score_matrix_is_min_distance():
    spec = SyntheticSpec(kind="routing_toy", n_cal=4, n_test=4, seed=9)
    data = generate_synthetic(spec)
    scores = routing_score_matrix(data.cal_banks, data.cal_truths)
    bank, truth = data.cal_banks[0], data.cal_truths[0]
    expected = min(np.linalg.norm(s - truth) for s in bank.samples[0])
    assert scores[0, 0] == pytest.approx(expected, rel=1e-12)


def test_grid_flow_problem_shape():
    problem = grid_flow_problem(4, 3, seed=0)
    assert problem.n_vertices == 12
    assert problem.n_edges == 4 * 2 + 3 * 3  # rightward + downward edges
    assert problem.source == 0 and problem.target == 11
    assert np.all(problem.nominal_costs >= 1.0) and np.all(problem.nominal_costs <= 2.0)


def test_classification_ensemble_shapes_and_scores():
    data = generate_classification_ensemble(n_cal=200, n_test=100, n_labels=6, k=3, seed=1)
    assert data.cal_tensor.shape == (200, 6, 3)
    assert data.test_tensor.shape == (100, 6, 3)
    assert np.all(data.cal_tensor > 0) and np.all(data.cal_tensor <= 1 + 1e-9)
    # cumulative-mass scores: the top-ranked label's score equals its probability
    assert data.cal_ensemble_scores.shape == (200,)
    same = generate_classification_ensemble(n_cal=200, n_test=100, n_labels=6, k=3, seed=1)
    assert np.array_equal(same.test_tensor, data.test_tensor)
