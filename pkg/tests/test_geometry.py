import numpy as np
import pytest

from csagg.errors import DegenerateEnvelopeError, InvalidArgumentError
from csagg.geometry import DirectionSet, project_scores, sample_directions, t_score, t_scores

SQ2 = np.sqrt(2.0) / 2.0


def test_k2_exact_spacing():
    dirs = sample_directions(2, 3, seed=123)
    expected = np.array([[1.0, 0.0], [SQ2, SQ2], [0.0, 1.0]])
    assert np.allclose(dirs.directions, expected, atol=1e-12)


def test_k2_single_direction_is_diagonal():
    dirs = sample_directions(2, 1)
    assert np.allclose(dirs.directions, [[SQ2, SQ2]], atol=1e-15)


def test_k1_collapses_to_single_direction():
    dirs = sample_directions(1, 5, seed=9)
    assert dirs.directions.shape == (1, 1)
    assert dirs.directions[0, 0] == 1.0


def test_k3_invariants_and_uniform_mean():
    dirs = sample_directions(3, 200, seed=42)
    norms = np.linalg.norm(dirs.directions, axis=1)
    assert np.all(np.abs(norms - 1.0) <= 1e-9)
    assert np.all(dirs.directions >= 0)
    big = sample_directions(3, 100_000, seed=7)
    mean_dir = big.directions.mean(axis=0)
    mean_dir /= np.linalg.norm(mean_dir)
    assert np.all(np.abs(mean_dir - 1.0 / np.sqrt(3.0)) < 0.05)


def test_sample_directions_reproducible():
    a = sample_directions(4, 64, seed=11)
    b = sample_directions(4, 64, seed=11)
    assert np.array_equal(a.directions, b.directions)
    c = sample_directions(4, 64, seed=12)
    assert not np.array_equal(a.directions, c.directions)


def test_sample_directions_rejects_zero_counts():
    with pytest.raises(InvalidArgumentError):
        sample_directions(0, 4, seed=1)
    with pytest.raises(InvalidArgumentError):
        sample_directions(2, 0, seed=1)


def test_project_identity_directions():
    dirs = DirectionSet(np.array([[1.0, 0.0], [0.0, 1.0]]))
    out = project_scores(np.array([[1.0, 0.0], [0.0, 1.0]]), dirs)
    assert np.array_equal(out, np.eye(2))


def test_project_single_value():
    dirs = DirectionSet(np.array([[0.6, 0.8]]))
    out = project_scores(np.array([[3.0, 4.0]]), dirs)
    assert np.allclose(out, [[5.0]], atol=1e-12)


def test_project_matches_scalar_loop_oracle():
    rng = np.random.default_rng(0)
    scores = np.abs(rng.standard_normal((100, 4)))
    dirs = sample_directions(4, 64, seed=3)
    fast = project_scores(scores, dirs)
    slow = np.empty_like(fast)
    for i in range(scores.shape[0]):
        for m in range(dirs.n_directions):
            slow[i, m] = float(np.dot(scores[i], dirs.directions[m]))
    denom = np.maximum(np.abs(slow), 1e-300)
    assert np.max(np.abs(fast - slow) / denom) <= 1e-12


def test_project_dimension_mismatch():
    dirs = sample_directions(3, 8, seed=0)
    with pytest.raises(InvalidArgumentError):
        project_scores(np.ones((5, 2)), dirs)


def test_t_score_single_direction_ratio():
    dirs = DirectionSet(np.array([[1.0]]))
    assert t_score([1.0], dirs, [2.0]) == pytest.approx(0.5)


def test_t_score_origin_is_zero():
    dirs = sample_directions(2, 5, seed=1)
    assert t_score(np.zeros(2), dirs, np.ones(5)) == 0.0


def test_t_score_hand_example():
    dirs = DirectionSet(np.array([[1.0, 0.0], [0.0, 1.0], [SQ2, SQ2]]))
    value = t_score(np.array([2.0, 2.0]), dirs, np.ones(3))
    assert value == pytest.approx(2.0 * np.sqrt(2.0), rel=1e-12)


def test_t_score_rejects_nonpositive_thresholds():
    dirs = DirectionSet(np.array([[1.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(DegenerateEnvelopeError):
        t_score(np.ones(2), dirs, [1.0, 0.0])


def test_positive_homogeneity_many_cases():
    rng = np.random.default_rng(5)
    dirs = sample_directions(3, 16, seed=2)
    thresholds = rng.uniform(0.5, 2.0, 16)
    scores = np.abs(rng.standard_normal((10_000, 3)))
    lam = rng.uniform(0.0, 5.0, 10_000)
    base = t_scores(scores, dirs, thresholds)
    scaled = t_scores(scores * lam[:, None], dirs, thresholds)
    denom = np.maximum(np.abs(lam * base), 1e-300)
    assert np.max(np.abs(scaled - lam * base) / denom) <= 1e-12


def test_monotonicity_many_cases():
    rng = np.random.default_rng(6)
    dirs = sample_directions(3, 16, seed=2)
    thresholds = rng.uniform(0.5, 2.0, 16)
    hi = np.abs(rng.standard_normal((10_000, 3)))
    lo = hi * rng.uniform(0.0, 1.0, (10_000, 3))
    assert np.all(t_scores(lo, dirs, thresholds) <= t_scores(hi, dirs, thresholds) + 1e-15)


def test_t_scores_chunking_independent():
    rng = np.random.default_rng(7)
    dirs = sample_directions(2, 32, seed=4)
    thresholds = rng.uniform(0.5, 2.0, 32)
    scores = np.abs(rng.standard_normal((1000, 2)))
    assert np.array_equal(
        t_scores(scores, dirs, thresholds, chunk_elements=64 * 32),
        t_scores(scores, dirs, thresholds, chunk_elements=1 << 24),
    )


def test_directionset_validates_norms_and_signs():
    with pytest.raises(InvalidArgumentError):
        DirectionSet(np.array([[0.5, 0.5]]))
    with pytest.raises(InvalidArgumentError):
        DirectionSet(np.array([[-1.0, 0.0]]))
