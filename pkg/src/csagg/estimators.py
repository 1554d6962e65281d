"""Scikit-learn style estimators wrapping the calibration routines.

Each estimator consumes an (n_samples, n_predictors) matrix of nonnegative
scores in ``fit`` and afterwards exposes membership tests through
``predict`` / ``score_samples``, so the calibrators compose with sklearn
pipelines, cloning and parameter search.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_score_matrix
from .baselines import bonferroni_envelope
from .calibration import (
    CalibrationConfig,
    calibrate,
    default_direction_count,
    single_stage_calibrate,
)
from .errors import InvalidArgumentError
from .geometry import sample_directions


class _EnvelopeEstimator(BaseEstimator):
    """Shared post-fit surface: envelope_, predict, score_samples."""

    def _check_fitted(self):
        if not hasattr(self, "envelope_"):
            raise InvalidArgumentError("estimator is not fitted; call fit first")

    def score_samples(self, X) -> np.ndarray:
        """Envelope scale factor of each score row (lower is more conforming)."""
        self._check_fitted()
        return self.envelope_.t_scores(check_score_matrix(X))

    def predict(self, X) -> np.ndarray:
        """Boolean membership of each score row in the calibrated region."""
        self._check_fitted()
        return self.envelope_.contains(check_score_matrix(X))

    def decision_function(self, X) -> np.ndarray:
        """Signed margin: positive inside the region, negative outside."""
        self._check_fitted()
        if self.envelope_.is_vacuous:
            return np.full(check_score_matrix(X).shape[0], np.inf)
        return self.envelope_.t_hat - self.score_samples(X)


class ConformalScoreAggregator(_EnvelopeEstimator):
    """Two-stage multivariate conformal calibrator.

    Parameters mirror `CalibrationConfig`; ``n_directions=None`` selects the
    dimension-based default. ``fit`` ignores ``y`` (scores already encode the
    outcomes).
    """

    def __init__(self, alpha=0.1, n_directions=None, split_fraction=0.25,
                 epsilon=0.02, max_bisection_iters=50, random_state=0):
        self.alpha = alpha
        self.n_directions = n_directions
        self.split_fraction = split_fraction
        self.epsilon = epsilon
        self.max_bisection_iters = max_bisection_iters
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_score_matrix(X)
        config = CalibrationConfig(
            alpha=self.alpha,
            epsilon=self.epsilon,
            split_fraction=self.split_fraction,
            m=self.n_directions,
            seed=self.random_state,
            max_bisection_iters=self.max_bisection_iters,
        )
        self.envelope_ = calibrate(X, config)
        self.n_features_in_ = X.shape[1]
        return self


class SingleStageAggregator(_EnvelopeEstimator):
    """Ablation calibrator: per-direction quantiles on all rows, no rescale.

    Carries no coverage guarantee; kept for comparisons.
    """

    def __init__(self, alpha=0.1, n_directions=None, random_state=0):
        self.alpha = alpha
        self.n_directions = n_directions
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_score_matrix(X)
        m = self.n_directions or default_direction_count(X.shape[1])
        dirs = sample_directions(X.shape[1], m, self.random_state)
        self.envelope_ = single_stage_calibrate(X, dirs, self.alpha)
        self.n_features_in_ = X.shape[1]
        return self


class BonferroniAggregator(_EnvelopeEstimator):
    """Union-bound calibrator: per-direction conformal cuts at level 1 - alpha/M."""

    def __init__(self, alpha=0.1, n_directions=None, random_state=0):
        self.alpha = alpha
        self.n_directions = n_directions
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_score_matrix(X)
        m = self.n_directions or default_direction_count(X.shape[1])
        dirs = sample_directions(X.shape[1], m, self.random_state)
        self.envelope_ = bonferroni_envelope(X, dirs, self.alpha)
        self.n_features_in_ = X.shape[1]
        return self
