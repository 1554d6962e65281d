"""Seeded multi-trial benchmark runner and results emission.

Each trial re-draws data with a seed derived from the master seed and the
trial index, calibrates every requested method, and evaluates coverage and
region size on held-out rows. Methods whose mean coverage falls below
1 - alpha - 0.02 are flagged as insufficient for size comparisons.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from ._validation import check_alpha, check_positive_int, derive_seed
from .baselines import best_single_direction, bonferroni_envelope, split_conformal
from .calibration import (
    CalibrationConfig,
    calibrate,
    empirical_quantile,
    scalar_envelope,
    single_stage_calibrate,
)
from .errors import InvalidArgumentError
from .geometry import sample_directions
from .regions import grid_from_targets, residual_grid_lengths
from .robust import robust_route, suboptimality_gap
from .synth import (
    SyntheticSpec,
    generate_classification_ensemble,
    generate_synthetic,
)

COVERAGE_SLACK = 0.02  # exclusion rule for size comparisons
REGRESSION_METHODS = ("csa", "single_stage", "bonferroni", "vfcp", "ensemble", "split", "cm", "cr", "cu")
CLASSIFICATION_METHODS = REGRESSION_METHODS
TASKS = ("classification", "regression", "pto")


@dataclass
class BenchConfig:
    """Shared benchmark knobs; synthetic-data fields mirror `SyntheticSpec`."""

    alpha: float = 0.1
    seed: int = 0
    kind: str = "gaussian_residual"
    k: int = 2
    rho: float = 0.0
    n_cal: int = 2000
    n_test: int = 1000
    m: int | None = 64
    split_fraction: float = 0.25
    epsilon: float | None = None
    n_labels: int = 10
    grid_step: float = 0.05
    compute_size: bool = True
    route_iters: int = 25
    route_gap_tol: float = 1e-3

    def __post_init__(self):
        self.alpha = check_alpha(self.alpha)
        self.seed = int(self.seed)

    def stage1_size(self) -> int:
        n1 = int(math.floor(self.split_fraction * self.n_cal + 0.5))
        return min(max(n1, 1), self.n_cal - 1)

    def two_stage_epsilon(self) -> float:
        if self.epsilon is not None:
            return self.epsilon
        return max(0.02, 2.0 / self.stage1_size())


@dataclass
class BenchmarkResult:
    """Aggregated per-method outcome across trials."""

    method: str
    alpha: float
    coverages: np.ndarray
    sizes: np.ndarray
    seeds: list
    timings: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def coverage_mean(self) -> float:
        return float(np.mean(self.coverages))

    @property
    def coverage_std(self) -> float:
        return float(np.std(self.coverages, ddof=1)) if self.coverages.size > 1 else 0.0

    @property
    def size_mean(self) -> float:
        return float(np.mean(self.sizes)) if self.sizes.size else math.nan

    @property
    def size_std(self) -> float:
        if self.sizes.size > 1:
            return float(np.std(self.sizes, ddof=1))
        return 0.0

    @property
    def n_trials(self) -> int:
        return int(self.coverages.size)


def _vote_threshold(variant: str, u_draw: float) -> float:
    if variant == "cm":
        return 0.5
    if variant == "cr":
        return 0.5 + u_draw / 2.0
    return u_draw


def _calibration_config(config: BenchConfig, trial_seed: int) -> CalibrationConfig:
    return CalibrationConfig(
        alpha=config.alpha,
        epsilon=config.two_stage_epsilon(),
        split_fraction=config.split_fraction,
        m=config.m,
        seed=trial_seed,
        max_bisection_iters=50,
    )


def _regression_trial(config: BenchConfig, methods, trial_seed: int):
    spec = SyntheticSpec(kind=config.kind, k=config.k, rho=config.rho,
                         n_cal=config.n_cal, n_test=config.n_test, seed=trial_seed)
    data = generate_synthetic(spec)
    cal_scores, test_scores = data.cal_scores, data.test_scores
    test_preds, test_targets = data.test_predictions, data.test_targets
    residual_test = np.abs(test_preds - test_targets[:, None])
    grid = grid_from_targets(data.cal_targets, config.grid_step) if config.compute_size else None
    dirs = sample_directions(config.k, config.m or 64, derive_seed(trial_seed, "directions"))
    out = {}

    def grid_lengths_for(member_fn):
        # member_fn maps an (n, G, K) residual tensor to an (n, G) boolean mask
        points = grid.points()
        res = np.abs(test_preds[:, None, :] - points[None, :, None])
        return grid.step * member_fn(res).sum(axis=1).astype(float)

    for method in methods:
        if method == "csa":
            env = calibrate(cal_scores, _calibration_config(config, trial_seed))
            cov = float(np.mean(env.contains(residual_test)))
            sizes = residual_grid_lengths(test_preds, env, grid) if config.compute_size else None
        elif method == "single_stage":
            env = single_stage_calibrate(cal_scores, dirs, config.alpha)
            cov = float(np.mean(env.contains(residual_test)))
            sizes = residual_grid_lengths(test_preds, env, grid) if config.compute_size else None
        elif method == "bonferroni":
            env = bonferroni_envelope(cal_scores, dirs, config.alpha)
            cov = float(np.mean(env.contains(residual_test)))
            sizes = residual_grid_lengths(test_preds, env, grid) if config.compute_size else None
        elif method == "vfcp":
            direction, threshold = best_single_direction(
                cal_scores, dirs, config.alpha, split_fraction=config.split_fraction,
                seed=trial_seed)
            cov = float(np.mean(residual_test @ direction <= threshold))
            sizes = (grid_lengths_for(lambda res: (res @ direction) <= threshold)
                     if config.compute_size else None)
        elif method == "ensemble":
            mu_c = data.cal_predictions.mean(axis=1)
            sd_c = np.maximum(data.cal_predictions.std(axis=1), 1e-12)
            q_hat = split_conformal(np.abs(mu_c - data.cal_targets) / sd_c, config.alpha)
            mu_t = test_preds.mean(axis=1)
            sd_t = np.maximum(test_preds.std(axis=1), 1e-12)
            cov = float(np.mean(np.abs(mu_t - test_targets) / sd_t <= q_hat))
            if config.compute_size:
                points = grid.points()
                member = np.abs(mu_t[:, None] - points[None, :]) / sd_t[:, None] <= q_hat
                sizes = grid.step * member.sum(axis=1).astype(float)
            else:
                sizes = None
        elif method == "split":
            q_hat = split_conformal(cal_scores[:, 0], config.alpha)
            cov = float(np.mean(residual_test[:, 0] <= q_hat))
            sizes = (grid_lengths_for(lambda res: res[:, :, 0] <= q_hat)
                     if config.compute_size else None)
        elif method in ("cm", "cr", "cu"):
            member_q = np.array([split_conformal(cal_scores[:, kk], config.alpha)
                                 for kk in range(config.k)])
            u_draw = float(np.random.default_rng(derive_seed(trial_seed, "vote-u")).uniform())
            cutoff = _vote_threshold(method, u_draw)
            votes_true = np.mean(residual_test <= member_q[None, :], axis=1)
            cov = float(np.mean(votes_true > cutoff))
            sizes = (grid_lengths_for(
                lambda res: np.mean(res <= member_q[None, None, :], axis=2) > cutoff)
                if config.compute_size else None)
        else:
            raise InvalidArgumentError(f"unknown regression method {method!r}")
        out[method] = (cov, sizes)
    return out


def _classification_trial(config: BenchConfig, methods, trial_seed: int):
    data = generate_classification_ensemble(
        n_cal=config.n_cal, n_test=config.n_test, n_labels=config.n_labels,
        k=config.k, seed=trial_seed)
    cal_tensor, cal_labels = data.cal_tensor, data.cal_labels
    test_tensor, test_labels = data.test_tensor, data.test_labels
    n_cal, n_labels, k = cal_tensor.shape
    cal_scores = cal_tensor[np.arange(n_cal), cal_labels, :]
    n_test = test_tensor.shape[0]
    flat_test = test_tensor.reshape(-1, k)
    true_test = test_tensor[np.arange(n_test), test_labels, :]
    dirs = sample_directions(k, config.m or 64, derive_seed(trial_seed, "directions"))
    out = {}

    def envelope_eval(env):
        member = env.contains(flat_test).reshape(n_test, n_labels)
        cov = float(member[np.arange(n_test), test_labels].mean())
        return cov, member.sum(axis=1).astype(float)

    for method in methods:
        if method == "csa":
            env = calibrate(cal_scores, _calibration_config(config, trial_seed))
            cov, sizes = envelope_eval(env)
        elif method == "single_stage":
            env = single_stage_calibrate(cal_scores, dirs, config.alpha)
            cov, sizes = envelope_eval(env)
        elif method == "bonferroni":
            env = bonferroni_envelope(cal_scores, dirs, config.alpha)
            cov, sizes = envelope_eval(env)
        elif method == "vfcp":
            def set_size_oracle(direction, stage1_idx):
                # Mean prediction-set size over stage-one rows at the
                # direction's own stage-one quantile.
                q_u = empirical_quantile(cal_scores[stage1_idx] @ direction, 1.0 - config.alpha)
                projected = cal_tensor[stage1_idx] @ direction  # (n1, L)
                return float(np.mean(np.sum(projected <= q_u, axis=1)))

            direction, threshold = best_single_direction(
                cal_scores, dirs, config.alpha, size_oracle=set_size_oracle,
                split_fraction=config.split_fraction, seed=trial_seed)
            member = (flat_test @ direction <= threshold).reshape(n_test, n_labels)
            cov = float(member[np.arange(n_test), test_labels].mean())
            sizes = member.sum(axis=1).astype(float)
        elif method == "ensemble":
            q_hat = split_conformal(data.cal_ensemble_scores, config.alpha)
            member = data.test_ensemble_tensor <= q_hat
            cov = float(member[np.arange(n_test), test_labels].mean())
            sizes = member.sum(axis=1).astype(float)
        elif method == "split":
            q_hat = split_conformal(cal_scores[:, 0], config.alpha)
            member = test_tensor[:, :, 0] <= q_hat
            cov = float(member[np.arange(n_test), test_labels].mean())
            sizes = member.sum(axis=1).astype(float)
        elif method in ("cm", "cr", "cu"):
            member_q = np.array([split_conformal(cal_scores[:, kk], config.alpha)
                                 for kk in range(k)])
            u_draw = float(np.random.default_rng(derive_seed(trial_seed, "vote-u")).uniform())
            cutoff = _vote_threshold(method, u_draw)
            member = np.mean(test_tensor <= member_q[None, None, :], axis=2) > cutoff
            cov = float(member[np.arange(n_test), test_labels].mean())
            sizes = member.sum(axis=1).astype(float)
        else:
            raise InvalidArgumentError(f"unknown classification method {method!r}")
        out[method] = (cov, sizes)
    return out


def _pto_trial(config: BenchConfig, trial_seed: int):
    spec = SyntheticSpec(kind="routing_toy", k=2, n_cal=config.n_cal,
                         n_test=config.n_test, seed=trial_seed)
    data = generate_synthetic(spec)
    problem = data.problem
    cal_scores = data.cal_score_matrix()
    n_predictors = cal_scores.shape[1]

    cfg = CalibrationConfig(
        alpha=config.alpha,
        epsilon=config.epsilon if config.epsilon is not None else max(0.05, 2.0 / config.stage1_size()),
        split_fraction=config.split_fraction,
        m=config.m,
        seed=trial_seed,
    )
    envelopes = {"csa": calibrate(cal_scores, cfg)}
    for kk in range(n_predictors):
        q_hat = split_conformal(cal_scores[:, kk], config.alpha)
        envelopes[f"single_{kk}"] = scalar_envelope(q_hat, config.alpha, n_cal=config.n_cal)

    results = {name: {"gaps": [], "valid": []} for name in envelopes}
    for i, (bank, truth) in enumerate(zip(data.test_banks, data.test_truths)):
        for name, env in envelopes.items():
            if name == "csa":
                test_bank = bank
            else:
                kk = int(name.split("_")[1])
                test_bank = type(bank)((bank.samples[kk],))
            solution = robust_route(problem, test_bank, env, iters=config.route_iters,
                                    gap_tol=config.route_gap_tol)
            realized = float(truth @ solution.flow)
            results[name]["valid"].append(realized <= solution.value + 1e-9)
            results[name]["gaps"].append(suboptimality_gap(truth, solution.flow, problem))
    return results


def run_benchmark(task: str, methods, trials: int, config: BenchConfig):
    """Run a seeded multi-trial comparison; returns one result per method.

    Trial i uses a seed derived from (config.seed, i), so earlier trials are
    unchanged when the trial count grows. A warm-up trial is run first and
    discarded so timings exclude one-time setup costs.
    """
    trials = check_positive_int(trials, "trials")
    if task not in TASKS:
        raise InvalidArgumentError(f"unknown task {task!r}; expected one of {TASKS}")
    if task == "pto":
        methods = ["csa"] + [f"single_{k}" for k in range(2)]
    else:
        known = REGRESSION_METHODS if task == "regression" else CLASSIFICATION_METHODS
        for method in methods:
            if method not in known:
                raise InvalidArgumentError(f"unknown method {method!r} for task {task}")

    trial_seeds = [derive_seed(config.seed, "trial", i) for i in range(trials)]
    per_method_cov = {m: [] for m in methods}
    per_method_size = {m: [] for m in methods}
    per_method_extras = {m: {} for m in methods}
    timings = {m: 0.0 for m in methods}

    def run_trial(seed, record: bool):
        start = time.perf_counter()
        if task == "regression":
            outcome = _regression_trial(config, methods, seed)
        elif task == "classification":
            outcome = _classification_trial(config, methods, seed)
        else:
            outcome = None
        if task in ("regression", "classification"):
            elapsed = time.perf_counter() - start
            if record:
                for method, (cov, sizes) in outcome.items():
                    per_method_cov[method].append(cov)
                    if sizes is not None:
                        per_method_size[method].append(float(np.mean(sizes)))
                    timings[method] += elapsed / len(methods)
            return
        pto = _pto_trial(config, seed)
        elapsed = time.perf_counter() - start
        if record:
            for method, payload in pto.items():
                per_method_cov[method].append(float(np.mean(payload["valid"])))
                per_method_size[method].append(float(np.mean(payload["gaps"])))
                per_method_extras[method].setdefault("gap_series", []).append(payload["gaps"])
                timings[method] += elapsed / len(methods)

    # One discarded warm-up trial so timings exclude one-time setup costs;
    # skipped for the expensive routing task.
    if task != "pto":
        run_trial(derive_seed(config.seed, "warmup"), record=False)
    for seed in trial_seeds:
        run_trial(seed, record=True)

    results = []
    for method in methods:
        coverages = np.asarray(per_method_cov[method])
        sizes = np.asarray(per_method_size[method]) if per_method_size[method] else np.array([])
        flags = []
        if float(np.mean(coverages)) < 1.0 - config.alpha - COVERAGE_SLACK:
            flags.append("insufficient coverage")
        results.append(BenchmarkResult(
            method=method,
            alpha=config.alpha,
            coverages=coverages,
            sizes=sizes,
            seeds=trial_seeds,
            timings={"total_s": timings[method]},
            flags=flags,
            extras=per_method_extras[method],
        ))

    if task == "pto" and trials >= 1:
        csa = next(r for r in results if r.method == "csa")
        csa_gaps = np.concatenate([np.asarray(g) for g in csa.extras.get("gap_series", [])])
        for result in results:
            if result.method == "csa" or not result.extras.get("gap_series"):
                continue
            other = np.concatenate([np.asarray(g) for g in result.extras["gap_series"]])
            if csa_gaps.size == other.size and csa_gaps.size > 1:
                test = stats.ttest_rel(csa_gaps, other, alternative="less")
                result.extras["p_csa_less"] = float(test.pvalue)
    return results


def emit_results(results, fmt: str, path):
    """Write benchmark results as a stable-schema CSV or JSON file."""
    if not results:
        raise InvalidArgumentError("no results to emit")
    if fmt not in ("csv", "json"):
        raise InvalidArgumentError(f"unknown format {fmt!r}")
    path = Path(path)
    if fmt == "csv":
        lines = ["method,alpha,coverage_mean,coverage_std,size_mean,size_std,trials"]
        for r in results:
            lines.append(
                f"{r.method},{r.alpha:.6g},{r.coverage_mean:.6g},{r.coverage_std:.6g},"
                f"{r.size_mean:.6g},{r.size_std:.6g},{r.n_trials}"
            )
        path.write_text("\n".join(lines) + "\n")
        return
    payload = results_payload(results)
    path.write_text(json.dumps(payload, indent=2))


def results_payload(results) -> list:
    """JSON-ready representation of benchmark results (full float precision)."""
    payload = []
    for r in results:
        payload.append({
            "method": r.method,
            "alpha": r.alpha,
            "coverage_mean": r.coverage_mean,
            "coverage_std": r.coverage_std,
            "size_mean": r.size_mean,
            "size_std": r.size_std,
            "trials": r.n_trials,
            "coverages": [float(v) for v in r.coverages],
            "sizes": [float(v) for v in r.sizes],
            "flags": list(r.flags),
            "timings": dict(r.timings),
            "extras": {k: v for k, v in r.extras.items() if k == "p_csa_less"},
        })
    return payload


def load_results_json(path) -> list:
    """Reload a JSON results file emitted by `emit_results`."""
    return json.loads(Path(path).read_text())
