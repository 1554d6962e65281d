"""Score functions: residual, ensemble-normalized, cumulative-probability,
nearest-sample distances for generative predictors, and score stacking."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._validation import as_float_array
from .errors import DegenerateScoreWarning, InvalidArgumentError

ENSEMBLE_SIGMA_FLOOR = 1e-12
ENSEMBLE_SCORE_CAP = 1e15
PROB_SUM_TOL = 1e-6


@dataclass(frozen=True)
class SampleBank:
    """Per-predictor lists of generated outcome samples, all sharing one dimension.

    ``samples[k]`` is a (J_k, D) array of draws from predictor k.
    """

    samples: tuple

    def __post_init__(self):
        if len(self.samples) < 1:
            raise InvalidArgumentError("sample bank needs at least one predictor")
        arrays = []
        dim = None
        for k, block in enumerate(self.samples):
            arr = np.asarray(block, dtype=float)
            if arr.ndim == 1:
                arr = arr[:, None]
            if arr.ndim != 2 or arr.shape[0] < 1:
                raise InvalidArgumentError(f"predictor {k} must supply a nonempty 2-D sample block")
            if not np.all(np.isfinite(arr)):
                raise InvalidArgumentError(f"predictor {k} samples contain NaN or inf")
            if dim is None:
                dim = arr.shape[1]
            elif arr.shape[1] != dim:
                raise InvalidArgumentError("all predictors must share the sample dimension")
            arrays.append(arr)
        object.__setattr__(self, "samples", tuple(arrays))

    @property
    def n_predictors(self) -> int:
        return len(self.samples)

    @property
    def dim(self) -> int:
        return self.samples[0].shape[1]

    @property
    def sizes(self) -> tuple:
        return tuple(block.shape[0] for block in self.samples)


def residual_score(prediction: float, y: float) -> float:
    """Absolute prediction error |f(x) - y|."""
    pred = float(prediction)
    target = float(y)
    if not (np.isfinite(pred) and np.isfinite(target)):
        raise InvalidArgumentError("residual_score requires finite inputs")
    return abs(pred - target)


def ensemble_score(predictions, y: float) -> float:
    """Spread-normalized ensemble error |mean - y| / std.

    Uses the population standard deviation of the member predictions. A
    zero-spread ensemble is a legitimate degenerate input: the denominator
    is floored and the (capped) result flagged with a warning rather than
    raising.
    """
    preds = as_float_array(predictions, "predictions").ravel()
    if preds.size < 2:
        raise InvalidArgumentError("ensemble_score needs at least 2 member predictions")
    mu = float(np.mean(preds))
    sigma = float(np.std(preds))
    err = abs(mu - float(y))
    if sigma < ENSEMBLE_SIGMA_FLOOR:
        warnings.warn("ensemble spread is zero; score floored and capped", DegenerateScoreWarning)
        return min(err / ENSEMBLE_SIGMA_FLOOR, ENSEMBLE_SCORE_CAP)
    return err / sigma


def aps_score(probs, label: int) -> float:
    """Cumulative sorted-probability mass down to (and including) the true label.

    Probabilities are ranked descending with ties broken by ascending label
    index, so the result is deterministic.
    """
    arr = as_float_array(probs, "probs").ravel()
    if arr.size < 2:
        raise InvalidArgumentError("probability vector needs at least 2 entries")
    if np.any(arr < 0):
        raise InvalidArgumentError("probabilities must be nonnegative")
    if abs(float(np.sum(arr)) - 1.0) > PROB_SUM_TOL:
        raise InvalidArgumentError("probabilities must sum to 1")
    label = int(label)
    if not 0 <= label < arr.size:
        raise InvalidArgumentError(f"label {label} outside [0, {arr.size})")
    order = np.argsort(-arr, kind="stable")
    position = int(np.nonzero(order == label)[0][0])
    return float(np.sum(arr[order[: position + 1]]))


def aps_score_matrix(prob_matrix) -> np.ndarray:
    """Vectorized `aps_score` for every (row, label) pair of an n x L matrix."""
    probs = as_float_array(prob_matrix, "probs")
    if probs.ndim != 2:
        raise InvalidArgumentError("prob_matrix must be 2-D")
    order = np.argsort(-probs, axis=1, kind="stable")
    sorted_probs = np.take_along_axis(probs, order, axis=1)
    cumulative = np.cumsum(sorted_probs, axis=1)
    out = np.empty_like(probs)
    np.put_along_axis(out, order, cumulative, axis=1)
    return out


def gpcp_score(bank: SampleBank, predictor_index: int, c) -> float:
    """Minimum Euclidean distance from candidate c to predictor k's samples."""
    k = int(predictor_index)
    if not 0 <= k < bank.n_predictors:
        raise InvalidArgumentError(f"predictor index {k} outside [0, {bank.n_predictors})")
    vec = as_float_array(c, "c").ravel()
    if vec.size != bank.dim:
        raise InvalidArgumentError(f"candidate has dimension {vec.size}, samples have {bank.dim}")
    # Per-sample norms so the result matches a pairwise-distance scan exactly.
    return min(float(np.linalg.norm(sample - vec)) for sample in bank.samples[k])


def stack_scores(component_scores) -> np.ndarray:
    """Stack per-predictor scalar scores into a score vector, in predictor order."""
    arr = as_float_array(component_scores, "component_scores").ravel()
    if np.any(arr < 0):
        raise InvalidArgumentError("component scores must be nonnegative")
    return arr
