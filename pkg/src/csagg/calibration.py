"""Two-stage conformal calibration of multivariate score envelopes.

The calibration scores are split into two disjoint stages. Stage one fixes
the *shape* of the acceptance region: an intersection of halfplanes at
per-direction empirical quantiles, with the common tail level found by
binary search so the region captures roughly the desired mass. Stage two
then rescales that fixed shape conformally, using the order statistics of
the per-row scale factors, which is what carries the finite-sample coverage
guarantee.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from ._validation import (
    check_alpha,
    check_fraction,
    check_positive_int,
    check_score_matrix,
    check_vector,
    derive_seed,
)
from .errors import (
    CalibrationWarning,
    DegenerateEnvelopeError,
    InsufficientDataError,
    InvalidArgumentError,
)
from .geometry import DEGENERATE_THRESHOLD, DirectionSet, sample_directions, t_scores

FLAG_VACUOUS = "vacuous"
FLAG_SINGLE_STAGE = "uncalibrated-ablation"
FLAG_BONFERRONI = "bonferroni"
FLAG_WINDOW_MISSED = "bisection-window-missed"
FLAG_DIRECTIONS_DROPPED = "degenerate-directions-dropped"


def default_direction_count(k: int) -> int:
    """Default number of projection directions: 512 up to K=4, else 128*K."""
    k = check_positive_int(k, "k")
    return 512 if k <= 4 else 128 * k


def conformal_rank(n: int, alpha: float) -> int:
    """The rank ceil((n+1)(1-alpha)), computed in exact rational arithmetic."""
    return math.ceil(Fraction(n + 1) * (1 - Fraction(alpha)))


@dataclass
class CalibrationConfig:
    """Knobs for two-stage calibration.

    ``m`` is the direction count (None picks the dimension-based default)
    and ``epsilon`` the width of the acceptable stage-one coverage window,
    which must respect the 1/N1 coverage granularity.
    """

    alpha: float = 0.1
    epsilon: float = 0.02
    split_fraction: float = 0.25
    m: int | None = None
    seed: int = 0
    max_bisection_iters: int = 50

    def __post_init__(self):
        self.alpha = check_alpha(self.alpha)
        if self.epsilon <= 0:
            raise InvalidArgumentError(f"epsilon must be > 0, got {self.epsilon}")
        self.split_fraction = check_fraction(self.split_fraction, "split_fraction")
        if self.m is not None:
            self.m = check_positive_int(self.m, "m")
        self.seed = int(self.seed)
        self.max_bisection_iters = check_positive_int(self.max_bisection_iters, "max_bisection_iters")


@dataclass
class QuantileEnvelope:
    """Calibrated acceptance region: directions, thresholds, and scale factor.

    ``raw_thresholds`` fix the frontier shape from stage one, ``t_hat`` the
    conformal scale from stage two, and ``final_thresholds`` their product
    (infinite for a vacuous envelope). Membership of a score vector s is
    ``max_m <u_m, s>/raw_m <= t_hat``.
    """

    dirs: DirectionSet
    raw_thresholds: np.ndarray
    t_hat: float
    final_thresholds: np.ndarray
    beta_star: float
    alpha: float
    n_stage1: int
    n_stage2: int
    flags: list[str] = field(default_factory=list)
    seed: int | None = None

    def __post_init__(self):
        self.raw_thresholds = check_vector(self.raw_thresholds, "raw_thresholds", positive=True)
        self.final_thresholds = np.asarray(self.final_thresholds, dtype=float).ravel()
        m = self.dirs.n_directions
        if self.raw_thresholds.size != m or self.final_thresholds.size != m:
            raise InvalidArgumentError("threshold lengths must match the direction count")
        if not self.is_vacuous:
            prod = self.t_hat * self.raw_thresholds
            rel = np.abs(self.final_thresholds - prod) / np.maximum(prod, 1e-300)
            if np.any(rel > 1e-12):
                raise InvalidArgumentError("final_thresholds must equal t_hat * raw_thresholds")
        if FLAG_DIRECTIONS_DROPPED not in self.flags:
            lo = self.alpha / m - 1e-12
            if not lo <= self.beta_star <= self.alpha + 1e-12:
                raise InvalidArgumentError(
                    f"beta_star {self.beta_star} outside [alpha/M, alpha] = [{self.alpha / m}, {self.alpha}]"
                )

    @property
    def is_vacuous(self) -> bool:
        return math.isinf(self.t_hat)

    @property
    def dim(self) -> int:
        return self.dirs.dim

    @property
    def n_directions(self) -> int:
        return self.dirs.n_directions

    def t_scores(self, scores) -> np.ndarray:
        """Per-row scale factors against the raw (shape) thresholds."""
        return t_scores(scores, self.dirs, self.raw_thresholds)

    def contains(self, scores) -> np.ndarray:
        """Boolean membership of each score row in the calibrated region."""
        arr = check_score_matrix(scores)
        if self.is_vacuous:
            return np.ones(arr.shape[0], dtype=bool)
        return self.t_scores(arr) <= self.t_hat


class FrontierFit(NamedTuple):
    raw_thresholds: np.ndarray
    beta_star: float
    coverage: float
    converged: bool


def split_scores(scores, fraction: float, seed: int):
    """Randomly partition score rows into disjoint stage-one / stage-two sets.

    Stage-one size is round(fraction * N) clamped to [1, N-1]; the
    permutation comes from the seeded generator, so the split is
    deterministic given the seed.
    """
    arr = check_score_matrix(scores)
    fraction = check_fraction(fraction, "fraction")
    n = arr.shape[0]
    if n < 2:
        raise InsufficientDataError(f"need at least 2 rows to split, got {n}")
    n1 = int(math.floor(fraction * n + 0.5))
    n1 = min(max(n1, 1), n - 1)
    perm = np.random.default_rng(int(seed)).permutation(n)
    return arr[perm[:n1]], arr[perm[n1:]]


def empirical_quantile(values, level: float) -> float:
    """The ceil(level * n)-th smallest value (level 0 returns the minimum)."""
    vals = check_vector(values, "values")
    level = float(level)
    if not 0.0 <= level <= 1.0:
        raise InvalidArgumentError(f"level must lie in [0, 1], got {level}")
    k = max(1, math.ceil(Fraction(level) * vals.size))
    return float(np.partition(vals, k - 1)[k - 1])


def _coverage_at(projections: np.ndarray, thresholds: np.ndarray) -> float:
    return float(np.mean(np.all(projections <= thresholds[None, :], axis=1)))


def fit_frontier(stage1, dirs: DirectionSet, alpha: float, epsilon: float,
                 max_iters: int = 50) -> FrontierFit:
    """Fit the frontier shape on stage-one rows by binary search on the tail level.

    The search runs over beta in [alpha/M, alpha]; at each iterate the
    per-direction thresholds are the (1-beta) empirical quantiles of the
    projected columns, and the iterate is accepted once the fraction of
    stage-one rows inside the intersection lands in [1-alpha, 1-alpha+epsilon].
    If the window is never hit within ``max_iters``, the thresholds from the
    smallest visited beta whose coverage is at least 1-alpha are returned
    (beta = alpha/M is always visited, and covers by a union bound), with a
    warning. The returned stage-one coverage is always >= 1-alpha.
    """
    arr = check_score_matrix(stage1)
    alpha = check_alpha(alpha)
    max_iters = check_positive_int(max_iters, "max_iters")
    n1 = arr.shape[0]
    if epsilon < 2.0 / n1:
        raise InvalidArgumentError(
            f"epsilon={epsilon} is below the stage-one coverage granularity bound 2/N1={2.0 / n1}"
        )
    projections = arr @ dirs.directions.T
    sorted_cols = np.sort(projections, axis=0)
    m = dirs.n_directions

    def thresholds_at(beta: float) -> np.ndarray:
        # Match empirical_quantile's rank at the float level 1 - beta.
        k = max(1, math.ceil(Fraction(1.0 - beta) * n1))
        return sorted_cols[min(k, n1) - 1, :]

    lo, hi = alpha / m, alpha
    target_lo, target_hi = 1.0 - alpha, 1.0 - alpha + epsilon

    visited = []  # (beta, coverage, thresholds)
    thr_lo = thresholds_at(lo)
    visited.append((lo, _coverage_at(projections, thr_lo), thr_lo))

    for _ in range(max_iters):
        beta = 0.5 * (lo + hi)
        thr = thresholds_at(beta)
        cov = _coverage_at(projections, thr)
        visited.append((beta, cov, thr))
        if target_lo <= cov <= target_hi:
            return FrontierFit(np.array(thr, copy=True), beta, cov, True)
        if cov > target_lo:
            lo = beta
        else:
            hi = beta

    warnings.warn(
        "bisection never hit the stage-one coverage window; falling back to the "
        "smallest visited beta with coverage >= 1-alpha",
        CalibrationWarning,
    )
    qualifying = [(b, c, t) for b, c, t in visited if c >= target_lo]
    beta, cov, thr = min(qualifying, key=lambda item: item[0])
    return FrontierFit(np.array(thr, copy=True), beta, cov, False)


def _t_hat_with_witness(stage2, dirs: DirectionSet, raw_thresholds, alpha: float):
    """Conformal scale plus the binding (direction, projection) realizing it."""
    arr = check_score_matrix(stage2)
    scores = t_scores(arr, dirs, raw_thresholds)
    n2 = scores.size
    k = conformal_rank(n2, alpha)
    if k > n2:
        return math.inf, None, None
    order = np.argsort(scores, kind="stable")
    row = int(order[k - 1])
    projections = arr[row] @ dirs.directions.T
    direction = int(np.argmax(projections / np.asarray(raw_thresholds, dtype=float)))
    return float(scores[row]), direction, float(projections[direction])


def compute_t_hat(stage2, dirs: DirectionSet, raw_thresholds, alpha: float) -> float:
    """Conformal scale factor: the ceil((N2+1)(1-alpha))-th smallest row scale.

    Rows are ranked ascending by their scale factor (ties broken by stable
    sort order); if the rank exceeds the stage-two size the envelope is
    vacuous and +inf is returned.
    """
    t_hat, _, _ = _t_hat_with_witness(stage2, dirs, raw_thresholds, alpha)
    return t_hat


def _drop_degenerate(dirs: DirectionSet, raw: np.ndarray):
    keep = raw > DEGENERATE_THRESHOLD
    if np.all(keep):
        return dirs, raw, False
    if not np.any(keep):
        raise DegenerateEnvelopeError(
            "all directions have degenerate thresholds; calibration scores have no spread"
        )
    warnings.warn(
        f"dropping {int(np.sum(~keep))} direction(s) with near-zero fitted thresholds",
        CalibrationWarning,
    )
    return dirs.subset(keep), raw[keep], True


def calibrate(scores, config: CalibrationConfig) -> QuantileEnvelope:
    """Run the full two-stage calibration and return the scaled envelope.

    Composes the split, direction sampling, frontier fit and conformal
    rescaling. All randomness is derived from ``config.seed``, so the result
    is bit-reproducible.
    """
    arr = check_score_matrix(scores)
    if arr.shape[0] < 4:
        raise InsufficientDataError(f"need at least 4 calibration rows, got {arr.shape[0]}")
    k_dim = arr.shape[1]
    m = config.m if config.m is not None else default_direction_count(k_dim)

    stage1, stage2 = split_scores(arr, config.split_fraction, derive_seed(config.seed, "split"))
    dirs = sample_directions(k_dim, m, derive_seed(config.seed, "directions"))

    fit = fit_frontier(stage1, dirs, config.alpha, config.epsilon, config.max_bisection_iters)
    dirs, raw, dropped = _drop_degenerate(dirs, fit.raw_thresholds)

    t_hat, direction, witness_projection = _t_hat_with_witness(stage2, dirs, raw, config.alpha)
    flags = []
    if not fit.converged:
        flags.append(FLAG_WINDOW_MISSED)
    if dropped:
        flags.append(FLAG_DIRECTIONS_DROPPED)
    if math.isinf(t_hat):
        flags.append(FLAG_VACUOUS)
        final = np.full(raw.size, math.inf)
    else:
        final = t_hat * raw
        # Pin the binding direction's threshold to the witness projection so
        # the boundary passes exactly through the rank-k stage-two point; in
        # particular the K=1 envelope cut reduces bit-for-bit to the stage-two
        # split-conformal quantile.
        final[direction] = witness_projection
    return QuantileEnvelope(
        dirs=dirs,
        raw_thresholds=raw,
        t_hat=t_hat,
        final_thresholds=final,
        beta_star=fit.beta_star,
        alpha=config.alpha,
        n_stage1=stage1.shape[0],
        n_stage2=stage2.shape[0],
        flags=flags,
        seed=config.seed,
    )


def scalar_envelope(threshold: float, alpha: float, n_cal: int = 0) -> QuantileEnvelope:
    """Wrap a scalar conformal cut as a one-direction envelope.

    Lets split-conformal baselines flow through envelope-based consumers
    (membership tests, robust routing). An infinite threshold yields the
    vacuous envelope.
    """
    dirs = DirectionSet(np.ones((1, 1)), seed=None)
    alpha = check_alpha(alpha)
    if math.isinf(threshold):
        return QuantileEnvelope(
            dirs=dirs, raw_thresholds=np.array([1.0]), t_hat=math.inf,
            final_thresholds=np.array([math.inf]), beta_star=alpha, alpha=alpha,
            n_stage1=0, n_stage2=n_cal, flags=[FLAG_VACUOUS, "split-conformal"],
        )
    if threshold <= 0:
        raise InvalidArgumentError("scalar threshold must be positive or infinite")
    return QuantileEnvelope(
        dirs=dirs, raw_thresholds=np.array([float(threshold)]), t_hat=1.0,
        final_thresholds=np.array([float(threshold)]), beta_star=alpha, alpha=alpha,
        n_stage1=0, n_stage2=n_cal, flags=["split-conformal"],
    )


def single_stage_calibrate(scores, dirs: DirectionSet, alpha: float) -> QuantileEnvelope:
    """Ablation: per-direction (1 - alpha) quantiles on all rows, no split and
    no conformal rescale.

    Intersecting per-direction level-(1 - alpha) halfplanes covers strictly
    less than 1 - alpha of the data, so this envelope carries no coverage
    guarantee and typically undercovers; it is flagged accordingly and kept
    for comparisons.
    """
    arr = check_score_matrix(scores)
    alpha = check_alpha(alpha)
    if arr.shape[1] != dirs.dim:
        raise InvalidArgumentError("score dimension does not match the direction set")
    n = arr.shape[0]
    k = max(1, math.ceil(Fraction(1.0 - alpha) * n))
    thresholds = np.sort(arr @ dirs.directions.T, axis=0)[min(k, n) - 1, :]
    dirs_kept, raw, dropped = _drop_degenerate(dirs, thresholds)
    flags = [FLAG_SINGLE_STAGE]
    if dropped:
        flags.append(FLAG_DIRECTIONS_DROPPED)
    return QuantileEnvelope(
        dirs=dirs_kept,
        raw_thresholds=raw,
        t_hat=1.0,
        final_thresholds=np.array(raw, copy=True),
        beta_star=alpha,
        alpha=alpha,
        n_stage1=n,
        n_stage2=0,
        flags=flags,
        seed=dirs.seed,
    )
