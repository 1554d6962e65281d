"""Projection directions on the positive orthant and envelope score arithmetic.

A direction set is a collection of M unit vectors with nonnegative entries.
Projecting an N x K score matrix onto the directions yields the N x M matrix
of directional score values from which quantile envelopes are built; the
scaled-membership score of a point is the smallest factor by which the
envelope must be inflated to contain it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_positive_int, check_score_matrix, check_vector
from .errors import DegenerateEnvelopeError, InvalidArgumentError

UNIT_NORM_TOL = 1e-9

# Fitted directional thresholds at or below this are treated as degenerate:
# the calibration scores have no spread along the direction, and keeping it
# would make the scaled-membership score infinite for any mass along it.
DEGENERATE_THRESHOLD = 1e-12


@dataclass(frozen=True)
class DirectionSet:
    """M unit-norm, entrywise-nonnegative projection directions in R^K.

    Attributes
    ----------
    directions : ndarray of shape (M, K)
        One unit vector per row.
    seed : int or None
        Seed used for stochastic generation; None for the exact K<=2
        constructions.
    """

    directions: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        arr = np.asarray(self.directions, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidArgumentError(f"directions must be a nonempty 2-D array, got shape {arr.shape}")
        if np.any(arr < 0):
            raise InvalidArgumentError("direction entries must be nonnegative")
        norms = np.linalg.norm(arr, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
            raise InvalidArgumentError("every direction must have unit Euclidean norm")
        object.__setattr__(self, "directions", arr)

    @property
    def n_directions(self) -> int:
        return self.directions.shape[0]

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def subset(self, keep) -> "DirectionSet":
        """Return a new set restricted to the given row mask or indices."""
        return DirectionSet(self.directions[keep], seed=self.seed)


def sample_directions(k: int, m: int, seed: int | None = None) -> DirectionSet:
    """Sample M projection directions on the nonnegative part of the unit sphere.

    K = 1 collapses to the single direction (1,). K = 2 uses exact equal
    angular spacing over [0, pi/2] including both axes, so axis-aligned
    rectangles are representable. K >= 3 draws standard normal vectors from
    the seeded generator, takes entrywise absolute values and normalizes each
    row to unit norm. Deterministic given (k, m, seed).
    """
    k = check_positive_int(k, "k")
    m = check_positive_int(m, "m")
    if k == 1:
        return DirectionSet(np.ones((1, 1)), seed=None)
    if k == 2:
        if m == 1:
            theta = np.array([np.pi / 4.0])
        else:
            theta = np.arange(m) * (np.pi / 2.0) / (m - 1)
        return DirectionSet(np.column_stack([np.cos(theta), np.sin(theta)]), seed=None)
    if seed is None:
        raise InvalidArgumentError("seed is required for stochastic direction sampling (k >= 3)")
    rng = np.random.default_rng(int(seed))
    raw = np.abs(rng.standard_normal((m, k)))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    return DirectionSet(raw, seed=int(seed))


def project_scores(scores, dirs: DirectionSet) -> np.ndarray:
    """Project score rows onto every direction: entry (i, m) = <u_m, s_i>."""
    arr = check_score_matrix(scores)
    if arr.shape[1] != dirs.dim:
        raise InvalidArgumentError(
            f"score dimension {arr.shape[1]} does not match direction dimension {dirs.dim}"
        )
    return arr @ dirs.directions.T


def _check_thresholds(thresholds, m):
    thr = check_vector(thresholds, "thresholds")
    if thr.size != m:
        raise InvalidArgumentError(f"expected {m} thresholds, got {thr.size}")
    if np.any(thr <= 0):
        raise DegenerateEnvelopeError("thresholds must all be strictly positive")
    return thr


def t_score(s, dirs: DirectionSet, thresholds) -> float:
    """Smallest envelope scale factor t with s inside all halfplanes u_m.s <= t*q_m.

    Computed as max_m <u_m, s> / q_m. Membership of s in the envelope scaled
    by t is equivalent to ``t_score(s) <= t``.
    """
    vec = np.asarray(s, dtype=float).ravel()
    if vec.size != dirs.dim:
        raise InvalidArgumentError(f"score vector has dimension {vec.size}, expected {dirs.dim}")
    return float(t_scores(vec[None, :], dirs, thresholds)[0])


def t_scores(scores, dirs: DirectionSet, thresholds, chunk_elements: int = 1 << 22) -> np.ndarray:
    """Vectorized `t_score` over the rows of a score matrix.

    Rows are processed in chunks sized so the N x M projection block stays
    within the element budget; the result is independent of the chunking.
    """
    thr = _check_thresholds(thresholds, dirs.n_directions)
    arr = check_score_matrix(scores)
    if arr.shape[1] != dirs.dim:
        raise InvalidArgumentError(
            f"score dimension {arr.shape[1]} does not match direction dimension {dirs.dim}"
        )
    inv = 1.0 / thr
    rows_per_chunk = max(1, int(chunk_elements) // dirs.n_directions)
    out = np.empty(arr.shape[0])
    for start in range(0, arr.shape[0], rows_per_chunk):
        block = arr[start : start + rows_per_chunk]
        out[start : start + rows_per_chunk] = np.max((block @ dirs.directions.T) * inv, axis=1)
    return out
