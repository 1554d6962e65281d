import json
import math

import numpy as np
import pytest

from csagg.calibration import CalibrationConfig, calibrate, scalar_envelope
from csagg.errors import InvalidArgumentError, ParseError
from csagg.io import (
    envelope_from_dict,
    envelope_to_dict,
    load_envelope,
    load_graph_csv,
    load_labeled_scores_csv,
    load_sample_bank,
    load_scores_csv,
    save_envelope,
    save_graph_csv,
    save_sample_bank,
    save_scores_csv,
    save_solution,
)
from csagg.robust import RobustSolution
from csagg.scores import SampleBank
from csagg.synth import grid_flow_problem


def test_load_scores_minimal(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("s_1,s_2\n0.1,0.2\n")
    scores, labels = load_scores_csv(path)
    assert scores.shape == (1, 2)
    assert labels is None


def test_load_scores_rejects_negative(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("s_1,s_2\n-0.1,0.2\n")
    with pytest.raises(InvalidArgumentError, match="nonnegative"):
        load_scores_csv(path)


def test_load_scores_parse_error_carries_line(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("s_1\n0.5\nxyz\n")
    with pytest.raises(ParseError, match="line 3"):
        load_scores_csv(path)


def test_load_scores_bad_header(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("a,b\n0.1,0.2\n")
    with pytest.raises(ParseError):
        load_scores_csv(path)


def test_scores_roundtrip_bit_identical(tmp_path):
    rng = np.random.default_rng(0)
    scores = np.abs(rng.standard_normal((500, 3)))
    labels = rng.standard_normal(500)
    path = tmp_path / "scores.csv"
    save_scores_csv(path, scores, labels)
    loaded, loaded_labels = load_scores_csv(path)
    assert np.array_equal(loaded, scores)
    assert np.array_equal(loaded_labels, labels)


def test_envelope_roundtrip_lossless(tmp_path):
    rng = np.random.default_rng(1)
    scores = np.abs(rng.standard_normal((300, 2)))
    env = calibrate(scores, CalibrationConfig(alpha=0.1, epsilon=0.05, m=16, seed=5))
    path = tmp_path / "envelope.json"
    save_envelope(path, env)
    loaded = load_envelope(path)
    assert np.array_equal(loaded.dirs.directions, env.dirs.directions)
    assert np.array_equal(loaded.raw_thresholds, env.raw_thresholds)
    assert np.array_equal(loaded.final_thresholds, env.final_thresholds)
    assert loaded.t_hat == env.t_hat
    assert loaded.beta_star == env.beta_star
    assert loaded.alpha == env.alpha
    assert (loaded.n_stage1, loaded.n_stage2) == (env.n_stage1, env.n_stage2)
    assert loaded.flags == env.flags


def test_envelope_schema_fields():
    env = scalar_envelope(2.0, 0.1)
    payload = envelope_to_dict(env)
    assert set(payload) == {
        "schema_version", "alpha", "K", "M", "seed", "beta_star", "t_hat",
        "directions", "raw_thresholds", "final_thresholds", "n_stage1",
        "n_stage2", "flags",
    }
    assert payload["schema_version"] == 1


def test_envelope_vacuous_roundtrip(tmp_path):
    env = scalar_envelope(math.inf, 0.05)
    path = tmp_path / "vacuous.json"
    save_envelope(path, env)
    loaded = load_envelope(path)
    assert loaded.is_vacuous


def test_envelope_rejects_unknown_schema():
    env = scalar_envelope(1.0, 0.1)
    payload = envelope_to_dict(env)
    payload["schema_version"] = 99
    with pytest.raises(InvalidArgumentError):
        envelope_from_dict(payload)


def test_graph_roundtrip(tmp_path):
    problem = grid_flow_problem(3, 3, seed=2)
    path = tmp_path / "graph.csv"
    save_graph_csv(path, problem)
    edges, costs, n_vertices = load_graph_csv(path)
    assert tuple(edges) == problem.edges
    assert np.array_equal(costs, problem.nominal_costs)
    assert n_vertices == problem.n_vertices


def test_graph_header_validation(tmp_path):
    path = tmp_path / "graph.csv"
    path.write_text("a,b,c\n0,1,1.0\n")
    with pytest.raises(ParseError):
        load_graph_csv(path)


def test_sample_bank_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    bank = SampleBank((rng.uniform(1, 2, (4, 6)), rng.uniform(1, 2, (1, 6))))
    path = tmp_path / "bank.json"
    save_sample_bank(path, bank)
    loaded = load_sample_bank(path)
    assert loaded.sizes == bank.sizes
    for a, b in zip(loaded.samples, bank.samples):
        assert np.array_equal(a, b)
    payload = json.loads(path.read_text())
    assert payload["predictors"][0]["J"] == 4


def test_sample_bank_j_mismatch(tmp_path):
    path = tmp_path / "bank.json"
    path.write_text(json.dumps({"predictors": [{"J": 3, "samples": [[1.0, 2.0]]}]}))
    with pytest.raises(InvalidArgumentError):
        load_sample_bank(path)


def test_solution_schema(tmp_path):
    solution = RobustSolution(flow=np.array([1.0, 0.0]), value=3.5, gap=0.01,
                              iterations=7, status="converged")
    path = tmp_path / "solution.json"
    save_solution(path, solution)
    payload = json.loads(path.read_text())
    assert set(payload) == {"flow", "robust_value", "gap", "iters", "status"}
    assert payload["flow"] == [1.0, 0.0]
    assert payload["iters"] == 7


def test_labeled_scores_csv(tmp_path):
    path = tmp_path / "class.csv"
    lines = ["point,label,s_1,s_2"]
    for p in range(2):
        for l in range(3):
            lines.append(f"{p},{l},{0.1 * (p + 1)},{0.2 * (l + 1)}")
    path.write_text("\n".join(lines) + "\n")
    tensor, n_points, n_labels = load_labeled_scores_csv(path)
    assert tensor.shape == (2, 3, 2)
    assert tensor[1, 2, 1] == pytest.approx(0.6)


def test_labeled_scores_requires_dense_ids(tmp_path):
    path = tmp_path / "class.csv"
    path.write_text("point,label,s_1\n0,0,0.1\n0,2,0.2\n")
    with pytest.raises(InvalidArgumentError):
        load_labeled_scores_csv(path)
