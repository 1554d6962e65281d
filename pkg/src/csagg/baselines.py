"""Comparison methods: scalar split conformal, the union-bound envelope,
vote-based region merging, best-single-projection conformal, and selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._validation import check_alpha, check_score_matrix, check_vector, derive_seed
from .calibration import (
    FLAG_BONFERRONI,
    FLAG_DIRECTIONS_DROPPED,
    FLAG_VACUOUS,
    QuantileEnvelope,
    _drop_degenerate,
    conformal_rank,
)
from .errors import InvalidArgumentError
from .geometry import DirectionSet

VOTE_VARIANTS = ("M", "R", "U")


def split_conformal(scalar_scores, alpha: float) -> float:
    """Scalar conformal threshold: the ceil((n+1)(1-alpha))-th smallest score.

    Returns +inf when the rank exceeds the sample size (the small-sample
    vacuous case).
    """
    vals = check_vector(scalar_scores, "scalar_scores")
    alpha = check_alpha(alpha)
    k = conformal_rank(vals.size, alpha)
    if k > vals.size:
        return math.inf
    return float(np.partition(vals, k - 1)[k - 1])


@dataclass
class VoteAggregate:
    """Weighted-vote merge of K member regions with a variant-specific cutoff.

    Variants: 'M' majority (> 1/2), 'R' partially randomized (> 1/2 + u/2),
    'U' fully randomized (> u), all with strict inequality. ``u_draw`` must
    be supplied once per evaluation batch for the randomized variants.
    """

    member_regions: Sequence[Callable]
    variant: str = "M"
    weights: np.ndarray | None = None
    u_draw: float | None = None

    def __post_init__(self):
        if self.variant not in VOTE_VARIANTS:
            raise InvalidArgumentError(f"variant must be one of {VOTE_VARIANTS}, got {self.variant!r}")
        k = len(self.member_regions)
        if k < 1:
            raise InvalidArgumentError("need at least one member region")
        if self.weights is None:
            self.weights = np.full(k, 1.0 / k)
        else:
            self.weights = check_vector(self.weights, "weights", nonneg=True)
            if self.weights.size != k:
                raise InvalidArgumentError("weights must match the member count")
            if abs(float(self.weights.sum()) - 1.0) > 1e-9:
                raise InvalidArgumentError("weights must sum to 1")
        if self.variant in ("R", "U"):
            if self.u_draw is None:
                raise InvalidArgumentError(f"variant {self.variant} requires a u_draw in [0, 1]")
            if not 0.0 <= self.u_draw <= 1.0:
                raise InvalidArgumentError("u_draw must lie in [0, 1]")

    @property
    def threshold(self) -> float:
        if self.variant == "M":
            return 0.5
        if self.variant == "R":
            return 0.5 + self.u_draw / 2.0
        return self.u_draw


def majority_vote_membership(agg: VoteAggregate, y) -> bool:
    """Strictly-above-threshold weighted inclusion vote for candidate y."""
    votes = np.array([1.0 if region(y) else 0.0 for region in agg.member_regions])
    return bool(float(agg.weights @ votes) > agg.threshold)


def bonferroni_envelope(scores, dirs: DirectionSet, alpha: float) -> QuantileEnvelope:
    """Union-bound envelope: per-direction conformal quantile at level 1 - alpha/M.

    Valid without a second stage (scale fixed to 1) but conservative. The
    conformal rank is common to all directions, so rank overflow makes the
    whole envelope vacuous (every threshold +inf).
    """
    arr = check_score_matrix(scores)
    alpha = check_alpha(alpha)
    if arr.shape[1] != dirs.dim:
        raise InvalidArgumentError("score dimension does not match the direction set")
    m = dirs.n_directions
    n = arr.shape[0]
    k = conformal_rank(n, alpha / m)
    flags = [FLAG_BONFERRONI]
    if k > n:
        return QuantileEnvelope(
            dirs=dirs,
            raw_thresholds=np.ones(m),
            t_hat=math.inf,
            final_thresholds=np.full(m, math.inf),
            beta_star=alpha / m,
            alpha=alpha,
            n_stage1=n,
            n_stage2=0,
            flags=flags + [FLAG_VACUOUS],
            seed=dirs.seed,
        )
    thresholds = np.sort(arr @ dirs.directions.T, axis=0)[k - 1, :]
    dirs_kept, raw, dropped = _drop_degenerate(dirs, thresholds)
    if dropped:
        flags.append(FLAG_DIRECTIONS_DROPPED)
    return QuantileEnvelope(
        dirs=dirs_kept,
        raw_thresholds=raw,
        t_hat=1.0,
        final_thresholds=np.array(raw, copy=True),
        beta_star=alpha / m,
        alpha=alpha,
        n_stage1=n,
        n_stage2=0,
        flags=flags,
        seed=dirs.seed,
    )


def best_single_direction(scores, dirs: DirectionSet, alpha: float,
                          size_oracle: Callable | None = None,
                          split_fraction: float = 0.25, seed: int = 0):
    """Single-projection baseline: pick the direction with the smallest
    estimated region on stage-one rows, then conformalize its scalar
    projection on stage-two rows.

    ``size_oracle(direction, stage1_indices) -> float`` estimates the
    expected region size of a candidate direction using only stage-one rows
    (indices refer to rows of ``scores``, so callers can consult side data).
    The default is the projected-residual interval proxy: twice the
    empirical (1 - alpha) quantile of the stage-one projections. Returns
    ``(direction, threshold)`` with the threshold from `split_conformal` at
    level alpha.
    """
    arr = check_score_matrix(scores)
    alpha = check_alpha(alpha)
    if arr.shape[0] < 2:
        raise InvalidArgumentError("need at least 2 rows to select and conformalize a direction")
    rng = np.random.default_rng(derive_seed(seed, "vfcp-split"))
    n = arr.shape[0]
    n1 = min(max(int(math.floor(split_fraction * n + 0.5)), 1), n - 1)
    perm = rng.permutation(n)
    stage1_idx, stage2_idx = perm[:n1], perm[n1:]

    if size_oracle is None:
        from .calibration import empirical_quantile

        def size_oracle(direction, idx):
            return 2.0 * empirical_quantile(arr[idx] @ direction, 1.0 - alpha)

    sizes = np.array([
        size_oracle(dirs.directions[m], stage1_idx) for m in range(dirs.n_directions)
    ])
    best = int(np.argmin(sizes))
    direction = dirs.directions[best]
    threshold = split_conformal(arr[stage2_idx] @ direction, alpha)
    return direction, threshold


def model_selection(member_sizes, member_regions=None) -> int:
    """Pick the member with the smallest held-out region size (ties to the
    smallest index)."""
    sizes = check_vector(member_sizes, "member_sizes")
    return int(np.argmin(sizes))
