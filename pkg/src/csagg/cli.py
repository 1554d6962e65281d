"""Command-line interface.

Exit codes: 0 success, 2 validation/parse error, 3 numeric failure
(infeasible or iteration-limited optimization, degenerate calibration),
4 I/O error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import io as csio
from ._validation import derive_seed
from .baselines import best_single_direction, bonferroni_envelope, split_conformal
from .bench import BenchConfig, emit_results, run_benchmark
from .calibration import (
    CalibrationConfig,
    calibrate,
    scalar_envelope,
    single_stage_calibrate,
)
from .errors import (
    CsaggError,
    DegenerateEnvelopeError,
    EmptyRegionError,
    InfeasibleProblemError,
    InvalidArgumentError,
    ParseError,
    UndefinedMetricError,
)
from .flow import FlowProblem
from .geometry import sample_directions
from .regions import GridSpec, RegressionBatch, coverage_and_length_report
from .robust import robust_route
from .synth import SyntheticSpec, generate_synthetic

EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

_NUMERIC_ERRORS = (DegenerateEnvelopeError, EmptyRegionError, InfeasibleProblemError,
                   UndefinedMetricError)


@click.group()
def cli():
    """Multivariate conformal calibration and robust routing tools."""


@cli.command("calibrate")
@click.option("--scores", "scores_path", required=True, type=click.Path())
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--m", type=int, default=None, help="Direction count (default: dimension rule).")
@click.option("--split", type=float, default=0.25, show_default=True)
@click.option("--epsilon", type=float, default=0.02, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def calibrate_cmd(scores_path, alpha, m, split, epsilon, seed, out_path):
    """Fit a two-stage envelope from a score CSV and write it as JSON."""
    scores, _ = csio.load_scores_csv(scores_path)
    config = CalibrationConfig(alpha=alpha, epsilon=epsilon, split_fraction=split,
                               m=m, seed=seed)
    envelope = calibrate(scores, config)
    csio.save_envelope(out_path, envelope)
    click.echo(f"wrote envelope: K={envelope.dim} M={envelope.n_directions} "
               f"t_hat={envelope.t_hat:.6g} beta_star={envelope.beta_star:.6g}")


@cli.command("eval-class")
@click.option("--scores", "scores_path", required=True, type=click.Path(),
              help="CSV with columns point,label,s_1..s_K (one row per candidate label).")
@click.option("--labels", "labels_path", required=True, type=click.Path(),
              help="CSV with a single y column of true label indices, in point order.")
@click.option("--envelope", "envelope_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
def eval_class_cmd(scores_path, labels_path, envelope_path, out_path):
    """Evaluate classification coverage and mean set size."""
    tensor, n_points, n_labels = csio.load_labeled_scores_csv(scores_path)
    _, labels = csio.load_scores_csv(labels_path)
    if labels is None:
        raise InvalidArgumentError("labels CSV must contain a y column")
    labels = labels.astype(int)
    if labels.size != n_points:
        raise InvalidArgumentError("label count must match the number of points")
    envelope = csio.load_envelope(envelope_path)
    member = envelope.contains(tensor.reshape(-1, tensor.shape[2])).reshape(n_points, n_labels)
    coverage = float(member[np.arange(n_points), labels].mean())
    sizes = member.sum(axis=1)
    _write_report(out_path, {"coverage": coverage, "mean_set_size": float(sizes.mean()),
                             "set_sizes": sizes.tolist()})
    click.echo(f"coverage={coverage:.6g} mean_set_size={float(sizes.mean()):.6g}")


@cli.command("eval-reg")
@click.option("--predictions", "pred_path", required=True, type=click.Path(),
              help="CSV with columns f_1..f_K holding per-model point predictions.")
@click.option("--targets", "target_path", required=True, type=click.Path(),
              help="CSV with a single y column of true targets.")
@click.option("--envelope", "envelope_path", required=True, type=click.Path())
@click.option("--grid-min", type=float, required=True)
@click.option("--grid-max", type=float, required=True)
@click.option("--grid-step", type=float, required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def eval_reg_cmd(pred_path, target_path, envelope_path, grid_min, grid_max, grid_step, out_path):
    """Evaluate regression coverage and grid-estimated interval length
    under absolute-residual scores."""
    predictions, _ = csio.load_predictions_csv(pred_path)
    _, targets = csio.load_scores_csv(target_path)
    if targets is None:
        raise InvalidArgumentError("targets CSV must contain a y column")
    envelope = csio.load_envelope(envelope_path)
    grid = GridSpec(grid_min, grid_max, grid_step)
    report = coverage_and_length_report(
        RegressionBatch(predictions, targets, grid), envelope, "regression")
    _write_report(out_path, {"coverage": report.coverage, "mean_length": report.mean_size,
                             "lengths": report.sizes.tolist()})
    click.echo(f"coverage={report.coverage:.6g} mean_length={report.mean_size:.6g}")


@cli.command("baseline")
@click.option("--method", required=True,
              type=click.Choice(["csa", "single_stage", "bonferroni", "cm", "cr", "cu",
                                 "vfcp", "ensemble", "split"]))
@click.option("--scores", "scores_path", required=True, type=click.Path(),
              help="Score CSV; 'ensemble' expects prediction columns plus a y column.")
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--m", type=int, default=None)
@click.option("--split", type=float, default=0.25, show_default=True)
@click.option("--epsilon", type=float, default=0.02, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def baseline_cmd(method, scores_path, alpha, m, split, epsilon, seed, out_path):
    """Calibrate a comparison method and write its artifact as JSON."""
    scores, targets = csio.load_scores_csv(scores_path)
    k = scores.shape[1]
    m_eff = m if m is not None else (512 if k <= 4 else 128 * k)
    if method == "csa":
        envelope = calibrate(scores, CalibrationConfig(alpha=alpha, epsilon=epsilon,
                                                       split_fraction=split, m=m, seed=seed))
        csio.save_envelope(out_path, envelope)
    elif method == "single_stage":
        dirs = sample_directions(k, m_eff, derive_seed(seed, "directions"))
        csio.save_envelope(out_path, single_stage_calibrate(scores, dirs, alpha))
    elif method == "bonferroni":
        dirs = sample_directions(k, m_eff, derive_seed(seed, "directions"))
        csio.save_envelope(out_path, bonferroni_envelope(scores, dirs, alpha))
    elif method == "vfcp":
        dirs = sample_directions(k, m_eff, derive_seed(seed, "directions"))
        direction, threshold = best_single_direction(scores, dirs, alpha,
                                                     split_fraction=split, seed=seed)
        _write_report(out_path, {"method": "vfcp", "alpha": alpha,
                                 "direction": direction.tolist(), "threshold": threshold})
    elif method == "split":
        _write_report(out_path, {"method": "split", "alpha": alpha,
                                 "threshold": split_conformal(scores[:, 0], alpha)})
    elif method == "ensemble":
        if targets is None:
            raise InvalidArgumentError("ensemble baseline needs a y column of targets")
        mu = scores.mean(axis=1)
        sd = np.maximum(scores.std(axis=1), 1e-12)
        threshold = split_conformal(np.abs(mu - targets) / sd, alpha)
        _write_report(out_path, {"method": "ensemble", "alpha": alpha, "threshold": threshold})
    else:  # cm / cr / cu
        member_thresholds = [split_conformal(scores[:, kk], alpha) for kk in range(k)]
        u_draw = float(np.random.default_rng(derive_seed(seed, "vote-u")).uniform())
        _write_report(out_path, {
            "method": method, "alpha": alpha, "weights": [1.0 / k] * k,
            "member_thresholds": member_thresholds,
            "u_draw": u_draw if method in ("cr", "cu") else None,
        })
    click.echo(f"wrote {method} artifact to {out_path}")


@cli.command("pto")
@click.option("--graph", "graph_path", required=True, type=click.Path())
@click.option("--samples", "samples_path", required=True, type=click.Path())
@click.option("--envelope", "envelope_path", required=True, type=click.Path())
@click.option("--iters", type=int, default=50, show_default=True)
@click.option("--mode", type=click.Choice(["fw", "pgd"]), default="fw", show_default=True)
@click.option("--eta", type=float, default=None,
              help="Step size; required for --mode pgd.")
@click.option("--source", type=int, default=None, help="Source vertex (default: smallest id).")
@click.option("--target", type=int, default=None, help="Target vertex (default: largest id).")
@click.option("--out", "out_path", required=True, type=click.Path())
def pto_cmd(graph_path, samples_path, envelope_path, iters, mode, eta, source, target, out_path):
    """Robust routing: minimize the worst-case path cost over the envelope."""
    edges, costs, n_vertices = csio.load_graph_csv(graph_path)
    problem = FlowProblem(n_vertices, tuple(edges), costs,
                          source=source if source is not None else 0,
                          target=target if target is not None else n_vertices - 1)
    bank = csio.load_sample_bank(samples_path)
    envelope = csio.load_envelope(envelope_path)
    mode_name = "frank_wolfe" if mode == "fw" else "projected_subgradient"
    solution = robust_route(problem, bank, envelope, iters=iters, mode=mode_name, eta=eta)
    csio.save_solution(out_path, solution)
    click.echo(f"robust_value={solution.value:.6g} gap={solution.gap:.6g} "
               f"iters={solution.iterations} status={solution.status}")


@cli.command("synth")
@click.option("--kind", required=True,
              type=click.Choice(["gaussian_residual", "lognormal", "chi2_check",
                                 "anisotropic", "routing_toy"]))
@click.option("--k", type=int, default=2, show_default=True)
@click.option("--rho", type=float, default=0.0, show_default=True)
@click.option("--n-cal", type=int, default=2000, show_default=True)
@click.option("--n-test", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def synth_cmd(kind, k, rho, n_cal, n_test, seed, out_dir):
    """Generate a synthetic dataset into a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = SyntheticSpec(kind=kind, k=k, rho=rho, n_cal=n_cal, n_test=n_test, seed=seed)
    data = generate_synthetic(spec)
    if kind == "routing_toy":
        csio.save_graph_csv(out / "graph.csv", data.problem)
        for stem, banks, truths in (("cal", data.cal_banks, data.cal_truths),
                                    ("test", data.test_banks, data.test_truths)):
            for i, bank in enumerate(banks):
                csio.save_sample_bank(out / f"{stem}_samples_{i:04d}.json", bank)
            csio.save_scores_csv(out / f"{stem}_truths.csv", truths)
        click.echo(f"wrote routing instance with {len(data.cal_banks)} calibration draws to {out}")
        return
    csio.save_scores_csv(out / "cal_scores.csv", data.cal_scores)
    csio.save_scores_csv(out / "test_scores.csv", data.test_scores)
    csio.save_predictions_csv(out / "cal_predictions.csv", data.cal_predictions, data.cal_targets)
    csio.save_predictions_csv(out / "test_predictions.csv", data.test_predictions, data.test_targets)
    click.echo(f"wrote {kind} dataset to {out}")


@cli.command("bench")
@click.option("--task", required=True, type=click.Choice(["classification", "regression", "pto"]))
@click.option("--methods", default=None,
              help="Comma-separated method list (default: task-appropriate set).")
@click.option("--trials", type=int, default=10, show_default=True)
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--kind", default="gaussian_residual", show_default=True)
@click.option("--k", type=int, default=2, show_default=True)
@click.option("--rho", type=float, default=0.0, show_default=True)
@click.option("--n-cal", type=int, default=2000, show_default=True)
@click.option("--n-test", type=int, default=1000, show_default=True)
@click.option("--m", type=int, default=64, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def bench_cmd(task, methods, trials, alpha, seed, kind, k, rho, n_cal, n_test, m, fmt, out_path):
    """Run a seeded multi-trial benchmark and write a results table."""
    config = BenchConfig(alpha=alpha, seed=seed, kind=kind, k=k, rho=rho,
                         n_cal=n_cal, n_test=n_test, m=m)
    if methods is None:
        method_list = ["csa", "single_stage", "bonferroni"] if task != "pto" else []
    else:
        method_list = [m_.strip() for m_ in methods.split(",") if m_.strip()]
    results = run_benchmark(task, method_list, trials, config)
    emit_results(results, fmt, out_path)
    for r in results:
        flag = " [insufficient coverage]" if r.flags else ""
        click.echo(f"{r.method}: coverage={r.coverage_mean:.4f} size={r.size_mean:.4g}{flag}")


def _write_report(path, payload: dict):
    Path(path).write_text(json.dumps(payload, indent=2))


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.ClickException as exc:
        exc.show()
        sys.exit(EXIT_VALIDATION)
    except click.exceptions.Abort:
        sys.exit(EXIT_VALIDATION)
    except _NUMERIC_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)
    except (InvalidArgumentError, ParseError, CsaggError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        sys.exit(EXIT_IO)
    sys.exit(0)


if __name__ == "__main__":
    main()
