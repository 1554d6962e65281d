"""File formats: score CSVs, envelope JSON, graph and sample-bank files.

Floats in JSON use Python's shortest round-trip repr, so envelope and
solution files reload losslessly at full double precision. CSV score files
are written the same way; benchmark summary CSVs round to 6 significant
digits.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ._validation import check_score_matrix
from .calibration import QuantileEnvelope
from .errors import InvalidArgumentError, ParseError
from .flow import FlowProblem
from .geometry import DirectionSet
from .scores import SampleBank

ENVELOPE_SCHEMA_VERSION = 1


def _parse_float(token: str, line_no: int, allow_negative: bool, column: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"could not parse {column}={token!r} as a number", line=line_no) from None
    if math.isnan(value) or math.isinf(value):
        raise ParseError(f"{column} is NaN or infinite", line=line_no)
    if not allow_negative and value < 0:
        raise InvalidArgumentError(
            f"line {line_no}: negative score {value} in column {column}; scores must be nonnegative"
        )
    return value


def _load_matrix_csv(path, prefix: str, allow_negative: bool):
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        header = [h.strip() for h in header]
        k = len(header)
        has_labels = bool(header) and header[-1] == "y"
        n_value_cols = k - 1 if has_labels else k
        expected = [f"{prefix}_{i + 1}" for i in range(n_value_cols)] + (["y"] if has_labels else [])
        if header != expected or (n_value_cols < 1 and not has_labels):
            raise ParseError(
                f"expected header {prefix}_1,...,{prefix}_K[,y], got {','.join(header)}", line=1)
        rows, labels = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != k:
                raise ParseError(f"expected {k} fields, got {len(row)}", line=line_no)
            rows.append([
                _parse_float(tok, line_no, allow_negative, header[i])
                for i, tok in enumerate(row[:n_value_cols])
            ])
            if has_labels:
                labels.append(_parse_float(row[-1], line_no, True, "y"))
    if not rows:
        raise ParseError("no data rows", line=2)
    values = np.asarray(rows, dtype=float).reshape(len(rows), n_value_cols)
    return values, (np.asarray(labels) if has_labels else None)


def load_scores_csv(path):
    """Read a score matrix CSV with header ``s_1,...,s_K[,y]``.

    Returns ``(scores, labels)`` with labels None when no ``y`` column is
    present. Rejects negatives, NaN and inf; preserves row order. A file
    holding only a ``y`` column parses to a (n, 0) matrix plus labels.
    """
    return _load_matrix_csv(path, "s", allow_negative=False)


def load_predictions_csv(path):
    """Read point forecasts with header ``f_1,...,f_K[,y]`` (negatives allowed)."""
    return _load_matrix_csv(path, "f", allow_negative=True)


def _save_matrix_csv(path, values, labels, prefix: str):
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise InvalidArgumentError("values must be a 2-D matrix")
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        header = [f"{prefix}_{i + 1}" for i in range(values.shape[1])]
        if labels is not None:
            labels = np.asarray(labels, dtype=float).ravel()
            if labels.size != values.shape[0]:
                raise InvalidArgumentError("labels length must match the rows")
            header.append("y")
        writer.writerow(header)
        for i in range(values.shape[0]):
            row = [repr(float(v)) for v in values[i]]
            if labels is not None:
                row.append(repr(float(labels[i])))
            writer.writerow(row)


def save_scores_csv(path, scores, labels=None):
    """Write scores (and optionally a ``y`` column) with lossless float repr."""
    _save_matrix_csv(path, check_score_matrix(scores), labels, "s")


def save_predictions_csv(path, predictions, labels=None):
    """Write point forecasts f_1..f_K (and optionally ``y``) losslessly."""
    _save_matrix_csv(path, predictions, labels, "f")


def save_labels_csv(path, labels):
    """Write a bare ``y`` column."""
    _save_matrix_csv(path, np.empty((np.asarray(labels).size, 0)), labels, "s")


def envelope_to_dict(envelope: QuantileEnvelope) -> dict:
    return {
        "schema_version": ENVELOPE_SCHEMA_VERSION,
        "alpha": envelope.alpha,
        "K": envelope.dim,
        "M": envelope.n_directions,
        "seed": envelope.seed,
        "beta_star": envelope.beta_star,
        "t_hat": envelope.t_hat,
        "directions": envelope.dirs.directions.tolist(),
        "raw_thresholds": envelope.raw_thresholds.tolist(),
        "final_thresholds": envelope.final_thresholds.tolist(),
        "n_stage1": envelope.n_stage1,
        "n_stage2": envelope.n_stage2,
        "flags": list(envelope.flags),
    }


def envelope_from_dict(payload: dict) -> QuantileEnvelope:
    if payload.get("schema_version") != ENVELOPE_SCHEMA_VERSION:
        raise InvalidArgumentError(f"unsupported envelope schema {payload.get('schema_version')!r}")
    dirs = DirectionSet(np.asarray(payload["directions"], dtype=float), seed=payload.get("seed"))
    return QuantileEnvelope(
        dirs=dirs,
        raw_thresholds=np.asarray(payload["raw_thresholds"], dtype=float),
        t_hat=float(payload["t_hat"]),
        final_thresholds=np.asarray(payload["final_thresholds"], dtype=float),
        beta_star=float(payload["beta_star"]),
        alpha=float(payload["alpha"]),
        n_stage1=int(payload["n_stage1"]),
        n_stage2=int(payload["n_stage2"]),
        flags=list(payload.get("flags", [])),
        seed=payload.get("seed"),
    )


def save_envelope(path, envelope: QuantileEnvelope):
    Path(path).write_text(json.dumps(envelope_to_dict(envelope), indent=2))


def load_envelope(path) -> QuantileEnvelope:
    return envelope_from_dict(json.loads(Path(path).read_text()))


def load_graph_csv(path) -> tuple:
    """Read an edge-list CSV ``src,dst,nominal_cost`` with integer vertex ids.

    Returns ``(edges, costs, n_vertices)``; source/target are chosen by the
    caller when building a `FlowProblem`.
    """
    path = Path(path)
    edges, costs = [], []
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        if [h.strip() for h in header] != ["src", "dst", "nominal_cost"]:
            raise ParseError("expected header src,dst,nominal_cost", line=1)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", line=line_no)
            try:
                src, dst = int(row[0]), int(row[1])
            except ValueError:
                raise ParseError("vertex ids must be integers", line=line_no) from None
            edges.append((src, dst))
            costs.append(_parse_float(row[2], line_no, False, "nominal_cost"))
    if not edges:
        raise ParseError("no edges", line=2)
    n_vertices = max(max(a, b) for a, b in edges) + 1
    return edges, np.asarray(costs), n_vertices


def save_graph_csv(path, problem: FlowProblem):
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["src", "dst", "nominal_cost"])
        for (a, b), cost in zip(problem.edges, problem.nominal_costs):
            writer.writerow([a, b, repr(float(cost))])


def save_sample_bank(path, bank: SampleBank):
    payload = {
        "predictors": [
            {"J": block.shape[0], "samples": block.tolist()} for block in bank.samples
        ]
    }
    Path(path).write_text(json.dumps(payload))


def load_sample_bank(path) -> SampleBank:
    payload = json.loads(Path(path).read_text())
    if "predictors" not in payload or not payload["predictors"]:
        raise InvalidArgumentError("sample bank file must contain a nonempty 'predictors' list")
    blocks = []
    for entry in payload["predictors"]:
        samples = np.asarray(entry["samples"], dtype=float)
        if "J" in entry and int(entry["J"]) != samples.shape[0]:
            raise InvalidArgumentError("sample bank J field disagrees with the sample count")
        blocks.append(samples)
    return SampleBank(tuple(blocks))


def save_solution(path, solution):
    payload = {
        "flow": [float(v) for v in solution.flow],
        "robust_value": float(solution.value),
        "gap": float(solution.gap),
        "iters": int(solution.iterations),
        "status": solution.status,
    }
    Path(path).write_text(json.dumps(payload, indent=2))


def load_labeled_scores_csv(path):
    """Read per-(point, label) classification scores: ``point,label,s_1..s_K``.

    Returns ``(score_tensor, n_points, n_labels)`` with shape (n, L, K);
    every (point, label) pair must appear exactly once.
    """
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        header = [h.strip() for h in header]
        if len(header) < 3 or header[:2] != ["point", "label"]:
            raise ParseError("expected header point,label,s_1,...,s_K", line=1)
        k = len(header) - 2
        if header[2:] != [f"s_{i + 1}" for i in range(k)]:
            raise ParseError("expected score columns named s_1,...,s_K", line=1)
        entries = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != k + 2:
                raise ParseError(f"expected {k + 2} fields, got {len(row)}", line=line_no)
            try:
                point, label = int(row[0]), int(row[1])
            except ValueError:
                raise ParseError("point and label must be integers", line=line_no) from None
            entries[(point, label)] = [
                _parse_float(tok, line_no, False, header[i + 2]) for i, tok in enumerate(row[2:])
            ]
    if not entries:
        raise ParseError("no data rows", line=2)
    points = sorted({p for p, _ in entries})
    labels = sorted({l for _, l in entries})
    if points != list(range(len(points))) or labels != list(range(len(labels))):
        raise InvalidArgumentError("point and label ids must be dense 0-based ranges")
    tensor = np.empty((len(points), len(labels), k))
    for (p, l), values in entries.items():
        tensor[p, l, :] = values
    if len(entries) != len(points) * len(labels):
        raise InvalidArgumentError("every (point, label) pair must appear exactly once")
    return tensor, len(points), len(labels)
