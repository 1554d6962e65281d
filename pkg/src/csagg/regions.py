"""Prediction sets, interval-length estimates and coverage reports built on an envelope."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._validation import as_float_array, check_score_matrix
from .calibration import QuantileEnvelope
from .errors import InvalidArgumentError

GRID_EXPANSION = 0.2


@dataclass(frozen=True)
class GridSpec:
    """Uniform scan grid over candidate regression outcomes."""

    y_min: float
    y_max: float
    step: float

    def __post_init__(self):
        if not self.y_min < self.y_max:
            raise InvalidArgumentError("grid requires y_min < y_max")
        if self.step <= 0:
            raise InvalidArgumentError("grid step must be positive")
        if self.n_points < 2:
            raise InvalidArgumentError("grid must contain at least 2 points")

    @property
    def n_points(self) -> int:
        return int(np.floor((self.y_max - self.y_min) / self.step + 0.5)) + 1

    def points(self) -> np.ndarray:
        return self.y_min + self.step * np.arange(self.n_points)


def grid_from_targets(targets, step: float) -> GridSpec:
    """Grid spanning the observed target range expanded by 20% on each side."""
    arr = as_float_array(targets, "targets").ravel()
    lo, hi = float(np.min(arr)), float(np.max(arr))
    span = max(hi - lo, step)
    return GridSpec(lo - GRID_EXPANSION * span, hi + GRID_EXPANSION * span, step)


@dataclass
class PredictionSet:
    """Labels accepted by the envelope, with per-label scale diagnostics."""

    included_labels: np.ndarray
    label_t_scores: np.ndarray
    threshold: float

    def __contains__(self, label) -> bool:
        return bool(np.isin(int(label), self.included_labels))

    @property
    def size(self) -> int:
        return int(self.included_labels.size)


def classification_set(label_scores, envelope: QuantileEnvelope) -> PredictionSet:
    """Labels whose stacked score vector lies inside the calibrated envelope.

    ``label_scores`` is an L x K matrix with one score row per candidate label.
    """
    arr = check_score_matrix(label_scores, "label_scores")
    if arr.shape[1] != envelope.dim:
        raise InvalidArgumentError(
            f"label scores have dimension {arr.shape[1]}, envelope expects {envelope.dim}"
        )
    scales = envelope.t_scores(arr)
    if envelope.is_vacuous:
        included = np.arange(arr.shape[0])
    else:
        included = np.nonzero(scales <= envelope.t_hat)[0]
    return PredictionSet(included, scales, envelope.t_hat)


def regression_interval_length(score_eval: Callable[[float], np.ndarray],
                               envelope: QuantileEnvelope, grid: GridSpec) -> float:
    """Grid estimate of the prediction-region measure: step times accepted count.

    ``score_eval`` maps a candidate outcome to its stacked K-vector of
    nonnegative scores.
    """
    points = grid.points()
    rows = np.empty((points.size, envelope.dim))
    for i, y in enumerate(points):
        vec = np.asarray(score_eval(float(y)), dtype=float).ravel()
        if vec.size != envelope.dim:
            raise InvalidArgumentError("score_eval returned a vector of the wrong dimension")
        if np.any(vec < 0) or not np.all(np.isfinite(vec)):
            raise InvalidArgumentError("score_eval must return finite nonnegative components")
        rows[i] = vec
    return grid.step * float(np.sum(envelope.contains(rows)))


def residual_grid_lengths(predictions, envelope: QuantileEnvelope, grid: GridSpec,
                          chunk_size: int = 131072) -> np.ndarray:
    """Interval lengths for a batch of test points under absolute-residual scores.

    ``predictions`` is an n x K matrix of per-predictor point forecasts; row i
    induces the score map y -> |predictions[i] - y|.
    """
    preds = as_float_array(predictions, "predictions")
    if preds.ndim != 2 or preds.shape[1] != envelope.dim:
        raise InvalidArgumentError("predictions must be n x K with K matching the envelope")
    points = grid.points()
    n, g = preds.shape[0], points.size
    if envelope.is_vacuous:
        return np.full(n, grid.step * g)
    counts = np.zeros(n)
    rows_per_chunk = max(1, chunk_size // g)
    for start in range(0, n, rows_per_chunk):
        block = preds[start : start + rows_per_chunk]
        scores = np.abs(block[:, None, :] - points[None, :, None])
        member = envelope.contains(scores.reshape(-1, envelope.dim))
        counts[start : start + rows_per_chunk] = member.reshape(block.shape[0], g).sum(axis=1)
    return grid.step * counts


@dataclass(frozen=True)
class ClassificationBatch:
    """Test rows for classification: per-label score tensors plus true labels."""

    label_scores: np.ndarray  # (n, L, K)
    labels: np.ndarray  # (n,)


@dataclass(frozen=True)
class RegressionBatch:
    """Test rows for regression: point forecasts, targets, and a scan grid."""

    predictions: np.ndarray  # (n, K)
    targets: np.ndarray  # (n,)
    grid: GridSpec | None = None


@dataclass
class RegionReport:
    """Per-trial empirical coverage and region-size summary."""

    coverage: float
    mean_size: float
    sizes: np.ndarray
    covered: np.ndarray


def coverage_and_length_report(test_rows, envelope: QuantileEnvelope,
                               task_kind: str | None = None) -> RegionReport:
    """Empirical coverage and mean region size over held-out test rows.

    Coverage is the fraction of rows whose true outcome falls in the region;
    size is the label-set cardinality (classification) or the grid-estimated
    interval length (regression). Cross-trial aggregation is the benchmark
    runner's job.
    """
    if task_kind is None:
        task_kind = "classification" if isinstance(test_rows, ClassificationBatch) else "regression"
    if task_kind == "classification":
        batch: ClassificationBatch = test_rows
        tensor = np.asarray(batch.label_scores, dtype=float)
        if tensor.ndim != 3:
            raise InvalidArgumentError("label_scores must be a 3-D (n, L, K) tensor")
        n, n_labels, k = tensor.shape
        if n < 1:
            raise InvalidArgumentError("test batch must be nonempty")
        member = envelope.contains(tensor.reshape(-1, k)).reshape(n, n_labels)
        labels = np.asarray(batch.labels, dtype=int)
        covered = member[np.arange(n), labels]
        sizes = member.sum(axis=1).astype(float)
        return RegionReport(float(covered.mean()), float(sizes.mean()), sizes, covered)
    if task_kind == "regression":
        rbatch: RegressionBatch = test_rows
        preds = as_float_array(rbatch.predictions, "predictions")
        targets = as_float_array(rbatch.targets, "targets").ravel()
        if preds.ndim != 2 or preds.shape[0] != targets.size or targets.size < 1:
            raise InvalidArgumentError("predictions and targets must align and be nonempty")
        residuals = np.abs(preds - targets[:, None])
        covered = envelope.contains(residuals)
        grid = rbatch.grid if rbatch.grid is not None else grid_from_targets(targets, 0.01)
        sizes = residual_grid_lengths(preds, envelope, grid)
        return RegionReport(float(covered.mean()), float(sizes.mean()), sizes, covered)
    raise InvalidArgumentError(f"unknown task kind {task_kind!r}")


def acceptance_region_area(envelope: QuantileEnvelope, upper, n_samples: int = 20000,
                           seed: int = 0) -> float:
    """Monte-Carlo measure of the acceptance region inside the box [0, upper]^K.

    Rejection sampling with a fixed seed; the same seed and box make paired
    comparisons between regions exact subset-consistent.
    """
    upper_arr = np.broadcast_to(np.asarray(upper, dtype=float), (envelope.dim,))
    if np.any(upper_arr <= 0):
        raise InvalidArgumentError("box upper bounds must be positive")
    rng = np.random.default_rng(int(seed))
    points = rng.uniform(0.0, upper_arr, size=(int(n_samples), envelope.dim))
    box_volume = float(np.prod(upper_arr))
    return box_volume * float(np.mean(envelope.contains(points)))
