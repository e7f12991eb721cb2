import csv
import io
import json

import numpy as np
import pytest

from gradfree import cli, harness
from gradfree.errors import ConfigError
from gradfree.geometry import Box
from gradfree.harness import ExperimentConfig, list_presets, run_experiment, run_preset
from gradfree.oracles import Levy2D, NoisyQuadratic, SyntheticVeryGood, spec_to_dict


def levy_config(**over):
    data = {
        "name": "levy",
        "objective": {"variant": "Levy2D", "params": {}},
        "solver": {"kind": "multibbs", "epsilon": 1e-3, "mu": 1.0, "big_l": 150.0, "alpha": 2.0},
        "box": {"lower": [-10, -10], "upper": [10, 10]},
        "seed": 3,
    }
    data.update(over)
    return data


def zogd_config(**over):
    spec = NoisyQuadratic(np.diag([1.0, 2.0, 4.0]), [0.0, 0.0, 0.0], sigma=1.0)
    data = {
        "name": "zq",
        "objective": spec_to_dict(spec),
        "solver": {"kind": "zogd", "steps": 400, "gamma": 0.01, "tau": 0.5},
        "x0": [1.0, 1.0, 1.0],
        "seed": 5,
        "repeats": 3,
    }
    data.update(over)
    return data


def write_json(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# -- registry ----------------------------------------------------------------


def test_preset_registry():
    names = [n for n, _ in list_presets()]
    assert len(names) >= 7
    assert len(set(names)) == len(names)
    assert {"fig3a", "fig3b", "fig4", "fig5a", "fig5b", "fig7", "theorem-suite"} <= set(names)
    (fig4,) = harness.PRESETS["fig4"].build(0)
    assert isinstance(fig4.objective, SyntheticVeryGood) and fig4.objective.dim == 2


# -- configs -----------------------------------------------------------------


def test_config_round_trip():
    cfg = ExperimentConfig.from_dict(levy_config())
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()


@pytest.mark.parametrize("bad", [
    {"solver": {"kind": "newton"}},
    {"solver": {"kind": "multibbs", "epsilon": 1e-3}},
    {"solver": {"kind": "zogd", "steps": 10}},
    {"solver": {"kind": "dirbbs", "epsilon": 1e-3}, "box": {"lower": [0], "upper": [1]},
     "objective": {"variant": "OscillatingParabola", "params": {}}},
    {"box": {"lower": [0, 0, 0], "upper": [1, 1, 1]}},
    {"repeats": 0},
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(levy_config(**bad))


def test_multibbs_refuses_high_dimension_without_force():
    data = {
        "name": "bowl4",
        "objective": spec_to_dict(NoisyQuadratic(np.eye(4), np.zeros(4))),
        "solver": {"kind": "multibbs", "epsilon": 0.5, "mu": 1.0, "big_l": 1.0},
        "box": {"lower": [-1] * 4, "upper": [1] * 4},
    }
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)
    cfg = ExperimentConfig.from_dict({**data, "force": True})
    assert cfg.force


# -- running -------------------------------------------------------------------


def test_run_writes_csv_and_versioned_json(tmp_path):
    summary = run_experiment(ExperimentConfig.from_dict(levy_config()), tmp_path)
    assert summary.csv_path.exists()
    payload = json.loads(summary.json_path.read_text())
    assert payload["schema"] == 1
    assert payload["total_oracle_calls"] == summary.total_oracle_calls
    rows = read_csv(summary.csv_path)
    assert len(rows) == summary.iterations
    assert int(rows[-1]["cumulative_calls"]) == summary.total_oracle_calls
    assert all(c.passed for c in summary.invariant_check_results)


@pytest.mark.parametrize("make", [levy_config, zogd_config])
def test_same_seed_gives_byte_identical_csv(tmp_path, make):
    a = run_experiment(ExperimentConfig.from_dict(make()), tmp_path / "a")
    b = run_experiment(ExperimentConfig.from_dict(make()), tmp_path / "b")
    assert a.csv_path.read_bytes() == b.csv_path.read_bytes()


def test_zogd_repeats_append_mean_column(tmp_path):
    summary = run_experiment(ExperimentConfig.from_dict(zogd_config()), tmp_path)
    rows = read_csv(summary.csv_path)
    assert list(rows[0]) == ["step", "distance_sq", "grad_norm", "cumulative_calls",
                             "mean_distance_sq"]
    assert len(rows) == 401
    mean = np.mean(summary.trace.distances_sq[:, -1])
    assert float(rows[-1]["mean_distance_sq"]) == pytest.approx(mean)
    assert summary.total_oracle_calls == 2 * 400 * 3


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("GRADFREE_OUT_DIR", str(tmp_path / "env"))
    summary = run_experiment(ExperimentConfig.from_dict(levy_config()))
    assert summary.csv_path.parent == tmp_path / "env"


def _max_edges(path):
    return np.array([float(r["max_edge"]) for r in read_csv(path)])


def test_fig3a_preset(tmp_path):
    result = run_preset("fig3a", tmp_path)
    assert len(result.summaries) == 4
    for alpha, s in zip((1.5, 2.0, 3.0, 4.0), result.summaries):
        edges = np.concatenate([[6.5], _max_edges(s.csv_path)])
        assert np.all(edges[:-1] / edges[1:] * (1 + 1e-12) >= alpha)
        failed = [c.name for c in s.invariant_check_results if not c.passed]
        assert failed == ["class_check"]  # documented: L = 600 is too small near x* = 2
    assert result.passed


@pytest.mark.slow
def test_fig5b_preset(tmp_path):
    result = run_preset("fig5b", tmp_path)
    (s,) = result.summaries
    edges = np.concatenate([[20.0], _max_edges(s.csv_path)])
    assert np.all(edges[:-1] / edges[1:] * (1 + 1e-12) >= 1.5)
    assert all(c.passed for c in s.invariant_check_results)


def test_unknown_preset(tmp_path):
    with pytest.raises(ConfigError):
        run_preset("fig99", tmp_path)


# -- CLI -------------------------------------------------------------------------


def run_cli(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


def test_cli_list_presets():
    code, text = run_cli("list-presets")
    assert code == 0
    assert "theorem-suite" in text and "fig7" in text


def test_cli_run_and_seed_override(tmp_path):
    cfg = write_json(tmp_path / "levy.json", levy_config())
    code, text = run_cli("run", cfg, "--out", str(tmp_path / "o"), "--seed", "11")
    assert code == 0
    assert "levy" in text
    payload = json.loads((tmp_path / "o" / "levy.json").read_text())
    assert payload["config"]["seed"] == 11


def test_cli_exit_code_for_config_errors(tmp_path):
    assert run_cli("run", str(tmp_path / "missing.json"))[0] == 2
    (tmp_path / "broken.json").write_text("{not json")
    assert run_cli("run", str(tmp_path / "broken.json"))[0] == 2
    assert run_cli("preset", "nope", "--out", str(tmp_path))[0] == 2
    assert run_cli("frobnicate")[0] == 2


def test_cli_exit_code_for_solver_errors(tmp_path):
    data = levy_config(solver={"kind": "multibbs", "epsilon": 1e-6, "mu": 1.0,
                               "big_l": 150.0, "max_calls": 100})
    code, _ = run_cli("run", write_json(tmp_path / "c.json", data), "--out", str(tmp_path))
    assert code == 1


def test_cli_force_flag(tmp_path):
    data = {
        "name": "bowl4",
        "objective": spec_to_dict(NoisyQuadratic(np.eye(4), np.full(4, 0.1))),
        "solver": {"kind": "multibbs", "epsilon": 0.5, "mu": 1.0, "big_l": 1.0},
        "box": {"lower": [-1] * 4, "upper": [1] * 4},
    }
    cfg = write_json(tmp_path / "c.json", data)
    assert run_cli("run", cfg, "--out", str(tmp_path))[0] == 2
    assert run_cli("run", cfg, "--out", str(tmp_path), "--force")[0] == 0


def verify_doc(objective, box, cls, **extra):
    return {"objective": objective, "box": box, "class": cls, **extra}


def test_cli_verify_class_quadratic_holds(tmp_path):
    doc = verify_doc(spec_to_dict(NoisyQuadratic(2 * np.eye(2), [0.5, 0.5])),
                     {"lower": [-1, -1], "upper": [1, 1]}, {"kind": "good", "mu": 2, "big_l": 2})
    code, text = run_cli("verify-class", write_json(tmp_path / "v.json", doc), "--json")
    assert code == 0
    report = json.loads(text.splitlines()[-1])
    assert report["holds"] is True


def test_cli_verify_class_reports_L600_violations(tmp_path):
    doc = verify_doc({"variant": "OscillatingParabola", "params": {}},
                     {"lower": [0], "upper": [6.5]}, {"kind": "good", "mu": 10, "big_l": 600},
                     grid_n=1000)
    code, text = run_cli("verify-class", write_json(tmp_path / "v.json", doc), "--json")
    assert code == 0
    report = json.loads(text.splitlines()[-1])
    assert report["holds"] is False
    assert all(abs(v["point"][0] - 2.0) < 0.25 for v in report["violations"])


def test_cli_verify_class_synthetic_self_check(tmp_path):
    spec = SyntheticVeryGood(20.0, [1.43, 3.69], seed=1)
    doc = verify_doc(spec_to_dict(spec), {"lower": [-10, -10], "upper": [10, 10]},
                     {"kind": "very_good", "big_m": 20.0, "delta_bound": spec.delta_bound},
                     grid_n=60)
    code, text = run_cli("verify-class", write_json(tmp_path / "v.json", doc), "--json")
    assert code == 0
    assert json.loads(text.splitlines()[-1])["holds"] is True


def test_cli_verify_class_bad_kind(tmp_path):
    doc = verify_doc({"variant": "Levy2D", "params": {}}, {"lower": [0, 0], "upper": [1, 1]},
                     {"kind": "excellent"})
    assert run_cli("verify-class", write_json(tmp_path / "v.json", doc))[0] == 2
