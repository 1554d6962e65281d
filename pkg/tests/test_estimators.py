import numpy as np
import pytest
from sklearn.base import clone

from csagg.errors import InvalidArgumentError
from csagg.estimators import (
    BonferroniAggregator,
    ConformalScoreAggregator,
    SingleStageAggregator,
)


@pytest.fixture()
def scores():
    rng = np.random.default_rng(0)
    return np.abs(rng.standard_normal((600, 2)))


def test_fit_predict_surface(scores):
    est = ConformalScoreAggregator(alpha=0.1, n_directions=32, random_state=3)
    assert est.fit(scores) is est
    member = est.predict(scores)
    assert member.dtype == bool
    assert 0.85 <= member.mean() <= 1.0
    t = est.score_samples(scores)
    assert np.all(t >= 0)
    margin = est.decision_function(scores)
    assert np.array_equal(margin > 0, t < est.envelope_.t_hat)


def test_get_params_roundtrip_and_clone(scores):
    est = ConformalScoreAggregator(alpha=0.05, n_directions=16, split_fraction=0.3,
                                   epsilon=0.04, random_state=9)
    params = est.get_params()
    assert params["alpha"] == 0.05
    twin = clone(est)
    a = est.fit(scores).envelope_
    b = twin.fit(scores).envelope_
    assert np.array_equal(a.final_thresholds, b.final_thresholds)


def test_unfitted_predict_raises(scores):
    with pytest.raises(InvalidArgumentError):
        ConformalScoreAggregator().predict(scores)


def test_single_stage_estimator_flagged(scores):
    est = SingleStageAggregator(alpha=0.1, n_directions=16, random_state=1).fit(scores)
    assert "uncalibrated-ablation" in est.envelope_.flags


def test_bonferroni_estimator_conservative(scores):
    csa = ConformalScoreAggregator(alpha=0.1, n_directions=16, random_state=2).fit(scores)
    bonf = BonferroniAggregator(alpha=0.1, n_directions=16, random_state=2).fit(scores)
    rng = np.random.default_rng(5)
    fresh = np.abs(rng.standard_normal((2000, 2)))
    assert bonf.predict(fresh).mean() >= csa.predict(fresh).mean()


def test_default_direction_count_used(scores):
    est = ConformalScoreAggregator(alpha=0.2, random_state=0).fit(scores)
    assert est.envelope_.n_directions == 512
    assert est.n_features_in_ == 2
