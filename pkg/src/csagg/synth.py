"""Seeded synthetic data: correlated score/prediction draws at desk scale,
plus a toy routing instance with two generative cost predictors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive_int, derive_seed
from .errors import InvalidArgumentError
from .flow import FlowProblem
from .scores import SampleBank

SCORE_KINDS = ("gaussian_residual", "lognormal", "chi2_check", "anisotropic")
LOGNORMAL_SIGMA = 2.0
ANISOTROPIC_BASE = 10.0

# Routing generative model: edge costs are nominal times a lognormal factor
# driven by a shared scalar state plus per-edge noise; predictors observe a
# noisy state and emit sampled cost maps.
ROUTING_SIGMA = 0.3
ROUTING_STATE_WEIGHT = 1.0
ROUTING_EDGE_WEIGHT = 0.5
ROUTING_STATE_NOISE = (0.40, 0.25)
ROUTING_FIELD_NOISE = (0.20, 0.20)
ROUTING_SAMPLE_COUNTS = (4, 1)


@dataclass
class SyntheticSpec:
    """What to generate: kind, dimension, correlation, sizes and seed."""

    kind: str = "gaussian_residual"
    k: int = 2
    rho: float = 0.0
    n_cal: int = 2000
    n_test: int = 1000
    seed: int = 0
    grid_rows: int = 5
    grid_cols: int = 5

    def __post_init__(self):
        if self.kind not in SCORE_KINDS + ("routing_toy",):
            raise InvalidArgumentError(f"unknown synthetic kind {self.kind!r}")
        self.k = check_positive_int(self.k, "k")
        if not -1.0 <= self.rho <= 1.0:
            raise InvalidArgumentError(f"rho must lie in [-1, 1], got {self.rho}")
        if self.n_cal < 4 or self.n_test < 4:
            raise InvalidArgumentError("sample sizes must be at least 4")
        self.seed = int(self.seed)


@dataclass
class ScoreDataset:
    """Calibration/test scores plus the predictions and targets they came from."""

    cal_scores: np.ndarray
    test_scores: np.ndarray
    cal_predictions: np.ndarray
    cal_targets: np.ndarray
    test_predictions: np.ndarray
    test_targets: np.ndarray


@dataclass
class RoutingDataset:
    """A flow problem plus per-draw sample banks and realized cost vectors."""

    problem: FlowProblem
    cal_banks: list
    cal_truths: np.ndarray
    test_banks: list
    test_truths: np.ndarray

    def cal_score_matrix(self) -> np.ndarray:
        return routing_score_matrix(self.cal_banks, self.cal_truths)


def _correlation_cholesky(k: int, rho: float) -> np.ndarray:
    cov = np.full((k, k), rho, dtype=float)
    np.fill_diagonal(cov, 1.0)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise InvalidArgumentError(f"equicorrelation {rho} is not positive definite for K={k}") from None


def _correlated_normals(rng, n: int, k: int, rho: float) -> np.ndarray:
    return rng.standard_normal((n, k)) @ _correlation_cholesky(k, rho).T


def generate_synthetic(spec: SyntheticSpec):
    """Deterministic synthetic draw for the given spec.

    Score kinds return a `ScoreDataset` whose scores are consistent with the
    absolute-residual convention (score = |prediction - target|, except for
    the squared-residual sanity kind); ``routing_toy`` returns a
    `RoutingDataset`.
    """
    if spec.kind == "routing_toy":
        return _generate_routing(spec)
    rng = np.random.default_rng(spec.seed)
    n = spec.n_cal + spec.n_test

    residual_normals = _correlated_normals(rng, n, spec.k, spec.rho)
    targets = 2.0 * rng.standard_normal(n)
    if spec.kind == "gaussian_residual":
        residuals = residual_normals
    elif spec.kind == "lognormal":
        signs = rng.choice([-1.0, 1.0], size=(n, spec.k))
        residuals = signs * np.exp(LOGNORMAL_SIGMA * residual_normals)
    elif spec.kind == "anisotropic":
        scales = ANISOTROPIC_BASE ** np.arange(spec.k)
        residuals = residual_normals * scales[None, :]
    elif spec.kind == "chi2_check":
        residuals = residual_normals * np.abs(residual_normals)  # sign(z) * z^2
    else:  # pragma: no cover - guarded by SyntheticSpec
        raise InvalidArgumentError(f"unknown synthetic kind {spec.kind!r}")

    predictions = targets[:, None] + residuals
    # Recompute from the stored quantities so scores are bit-identical to
    # |predictions - targets| recovered from emitted files.
    scores = np.abs(predictions - targets[:, None])
    return ScoreDataset(
        cal_scores=scores[: spec.n_cal],
        test_scores=scores[spec.n_cal :],
        cal_predictions=predictions[: spec.n_cal],
        cal_targets=targets[: spec.n_cal],
        test_predictions=predictions[spec.n_cal :],
        test_targets=targets[spec.n_cal :],
    )


def grid_flow_problem(rows: int = 5, cols: int = 5, seed: int = 0) -> FlowProblem:
    """Directed grid DAG (right/down edges) with uniform nominal costs in [1, 2].

    Source is the top-left corner and target the bottom-right corner.
    """
    rows = check_positive_int(rows, "rows")
    cols = check_positive_int(cols, "cols")
    if rows * cols < 2:
        raise InvalidArgumentError("grid must contain at least 2 vertices")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    rng = np.random.default_rng(derive_seed(seed, "grid-costs"))
    costs = rng.uniform(1.0, 2.0, size=len(edges))
    return FlowProblem(rows * cols, tuple(edges), costs, source=0, target=rows * cols - 1)


def _routing_draw(rng, nominal: np.ndarray):
    n_edges = nominal.size
    state = rng.standard_normal()
    edge_field = rng.standard_normal(n_edges)
    truth = nominal * np.exp(
        ROUTING_SIGMA * (ROUTING_STATE_WEIGHT * state + ROUTING_EDGE_WEIGHT * edge_field)
    )
    blocks = []
    for tau, nu, n_samples in zip(ROUTING_STATE_NOISE, ROUTING_FIELD_NOISE, ROUTING_SAMPLE_COUNTS):
        samples = np.empty((n_samples, n_edges))
        for j in range(n_samples):
            noisy_state = state + tau * rng.standard_normal()
            noisy_field = edge_field + nu * rng.standard_normal(n_edges)
            samples[j] = nominal * np.exp(
                ROUTING_SIGMA * (ROUTING_STATE_WEIGHT * noisy_state + ROUTING_EDGE_WEIGHT * noisy_field)
            )
        blocks.append(samples)
    return SampleBank(tuple(blocks)), truth


def _generate_routing(spec: SyntheticSpec) -> RoutingDataset:
    problem = grid_flow_problem(spec.grid_rows, spec.grid_cols, seed=spec.seed)
    rng = np.random.default_rng(derive_seed(spec.seed, "routing-draws"))
    nominal = problem.nominal_costs
    cal_banks, test_banks = [], []
    cal_truths = np.empty((spec.n_cal, problem.n_edges))
    test_truths = np.empty((spec.n_test, problem.n_edges))
    for i in range(spec.n_cal):
        bank, truth = _routing_draw(rng, nominal)
        cal_banks.append(bank)
        cal_truths[i] = truth
    for i in range(spec.n_test):
        bank, truth = _routing_draw(rng, nominal)
        test_banks.append(bank)
        test_truths[i] = truth
    return RoutingDataset(problem, cal_banks, cal_truths, test_banks, test_truths)


@dataclass
class ClassificationDataset:
    """Per-label cumulative-probability scores for an ensemble of classifiers.

    Tensors have shape (n, L, K); ensemble fields carry the mean-probability
    scalar baseline (true-label scores for calibration, all-label matrices
    for test).
    """

    cal_tensor: np.ndarray
    cal_labels: np.ndarray
    test_tensor: np.ndarray
    test_labels: np.ndarray
    cal_ensemble_scores: np.ndarray
    test_ensemble_tensor: np.ndarray


def generate_classification_ensemble(n_cal: int, n_test: int, n_labels: int = 10,
                                     k: int = 3, seed: int = 0) -> ClassificationDataset:
    """Synthetic ensemble of probabilistic classifiers with varied sharpness.

    Each model emits softmax probabilities from a noisy one-hot logit; the
    per-model scores are cumulative sorted-probability masses evaluated for
    every candidate label.
    """
    from .scores import aps_score_matrix

    n_labels = check_positive_int(n_labels, "n_labels")
    k = check_positive_int(k, "k")
    if n_labels < 2:
        raise InvalidArgumentError("need at least 2 labels")
    rng = np.random.default_rng(seed)
    n = n_cal + n_test
    labels = rng.integers(0, n_labels, size=n)
    margins = 2.0 + 0.6 * np.arange(k)  # models get progressively sharper
    noise = 1.0 + 0.25 * np.arange(k)

    prob_blocks = []
    for kk in range(k):
        logits = noise[kk] * rng.standard_normal((n, n_labels))
        logits[np.arange(n), labels] += margins[kk]
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        prob_blocks.append(probs)

    tensor = np.stack([aps_score_matrix(p) for p in prob_blocks], axis=2)
    mean_probs = np.mean(np.stack(prob_blocks, axis=2), axis=2)
    ensemble_tensor = aps_score_matrix(mean_probs)

    return ClassificationDataset(
        cal_tensor=tensor[:n_cal],
        cal_labels=labels[:n_cal],
        test_tensor=tensor[n_cal:],
        test_labels=labels[n_cal:],
        cal_ensemble_scores=ensemble_tensor[np.arange(n_cal), labels[:n_cal]],
        test_ensemble_tensor=ensemble_tensor[n_cal:],
    )


def routing_score_matrix(banks, truths) -> np.ndarray:
    """Nearest-sample distance scores, one row per draw and one column per predictor."""
    truths = np.asarray(truths, dtype=float)
    if len(banks) != truths.shape[0]:
        raise InvalidArgumentError("bank list and truth rows must align")
    if not banks:
        raise InvalidArgumentError("need at least one draw")
    k = banks[0].n_predictors
    out = np.empty((len(banks), k))
    for i, (bank, truth) in enumerate(zip(banks, truths)):
        for kk in range(k):
            out[i, kk] = float(np.min(np.linalg.norm(bank.samples[kk] - truth[None, :], axis=1)))
    return out
