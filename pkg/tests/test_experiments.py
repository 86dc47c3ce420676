import json

import pytest
import yaml

from core.experiments import (
    analyze_trajectory,
    game_info,
    load_experiment_config,
    parse_experiment_config,
    run_experiment,
)
from modules.YA_Common.utils.errors import CatalogException, ConfigException, UsageException


def _document(**overrides):
    doc = {
        "experiment": {"name": "mp_small", "game": "matching_pennies"},
        "dynamics": {"dynamics": "stochastic", "strategy_1": "rm", "horizon": 300, "runs": 2, "seed": 5},
        "analysis": {"analyses": "hannan, identities"},
    }
    for key, value in overrides.items():
        for section in doc.values():
            if key in section:
                section[key] = value
                break
        else:
            doc["dynamics"][key] = value
    return doc


def _write(tmp_path, doc, name="exp.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc, allow_unicode=True), encoding="utf-8")
    return path


def test_sections_are_flattened():
    cfg = parse_experiment_config(_document())
    assert cfg.name == "mp_small"
    assert cfg.horizon == 300
    assert cfg.analyses == ["hannan", "identities"]
    assert cfg.strategies[1].descriptor == "rm"
    assert cfg.fallbacks[0].descriptor == "const:0"


def test_seed_override(monkeypatch):
    monkeypatch.setenv("REGRETLAB_SEED", "42")
    assert parse_experiment_config(_document()).seed == 42
    monkeypatch.setenv("REGRETLAB_SEED", "forty-two")
    with pytest.raises(ConfigException):
        parse_experiment_config(_document())


@pytest.mark.parametrize(
    "overrides",
    [
        {"horizon": 0},
        {"strategy_1": "lp:1"},
        {"fallback_1": "const:x"},
        {"analyses": "hannan, nonsense"},
        {"dynamics": "chaotic"},
    ],
)
def test_invalid_configs(overrides):
    with pytest.raises(ConfigException):
        parse_experiment_config(_document(**overrides))


def test_nested_and_duplicate_keys():
    doc = _document()
    doc["dynamics"]["extra"] = {"deep": 1}
    with pytest.raises(ConfigException):
        parse_experiment_config(doc)
    doc = _document()
    doc["analysis"]["seed"] = 3
    with pytest.raises(ConfigException):
        parse_experiment_config(doc)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigException):
        load_experiment_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("experiment: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigException):
        load_experiment_config(bad)


def test_run_writes_artifacts(tmp_path):
    path = _write(tmp_path, _document())
    result = run_experiment(path, output_dir=tmp_path / "out", workers=1)
    assert result["status"] == 0
    root = tmp_path / "out" / "mp_small"
    for run in ("0000", "0001"):
        assert (root / run / "trajectory.csv").exists()
        summary = json.loads((root / run / "summary.json").read_text(encoding="utf-8"))
        assert summary["hannan"]["classification"] in ("Outside", "InteriorH", "ReducedHR")
        assert summary["identities"]["sign_persistence_violations"] == [0, 0]
    manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    assert len(manifest["artifacts"]) == 5
    assert all(len(a["sha256"]) == 64 for a in manifest["artifacts"])
    aggregate = json.loads((root / "summary.json").read_text(encoding="utf-8"))
    assert aggregate["aggregate"]["runs"] == 2
    assert "generated_at" in aggregate


def test_reruns_are_byte_identical(tmp_path):
    path = _write(tmp_path, _document())
    run_experiment(path, output_dir=tmp_path / "a", workers=1)
    run_experiment(path, output_dir=tmp_path / "b", workers=1)
    for run in ("0000", "0001"):
        a = (tmp_path / "a" / "mp_small" / run / "trajectory.csv").read_bytes()
        b = (tmp_path / "b" / "mp_small" / run / "trajectory.csv").read_bytes()
        assert a == b
    first = (tmp_path / "a" / "mp_small" / "0000" / "trajectory.csv").read_bytes()
    second = (tmp_path / "a" / "mp_small" / "0001" / "trajectory.csv").read_bytes()
    assert first != second


def test_dfp_experiment_from_profile(tmp_path):
    doc = _document(dynamics="dfp", horizon=500, runs=1, analyses="dfp_floor")
    doc["dynamics"]["initial"] = "profile:L,R"
    doc["experiment"]["game"] = "fig1"
    result = run_experiment(parse_experiment_config(doc), output_dir=tmp_path, workers=1)
    assert result["aggregate"]["dfp_floor_min"] >= 0.58


def test_continuous_experiments(tmp_path):
    doc = _document(dynamics="cfp", horizon=50, runs=1, analyses="conservation")
    result = run_experiment(parse_experiment_config(doc), output_dir=tmp_path / "cfp", workers=1)
    assert result["aggregate"]["conservation_residual_max"] <= 1e-6
    doc = _document(dynamics="cont_noregret", horizon=50, runs=1, analyses="conservation")
    doc["dynamics"]["x0_1"] = "0.7, 0.3"
    doc["dynamics"]["x0_2"] = "0.3, 0.7"
    result = run_experiment(parse_experiment_config(doc), output_dir=tmp_path / "cnr", workers=1)
    assert result["aggregate"]["conservation_residual_max"] <= 1e-4


def test_unknown_game_is_catalog_error(tmp_path):
    doc = _document()
    doc["experiment"]["game"] = "no_such_game"
    with pytest.raises(CatalogException):
        run_experiment(parse_experiment_config(doc), output_dir=tmp_path, workers=1)


def test_game_info():
    info = game_info("fig3i")
    assert info["shape"] == [3, 3]
    assert info["payoff_bound"] == 4.0
    assert info["dominance"]["survivors"] == [["A"], ["A"]]
    assert len(info["nash_equilibria"]) == 1
    assert not info["zero_sum"]
    assert game_info("matching_pennies")["zero_sum"]


def test_analyze_exported_trajectory(tmp_path):
    doc = _document(runs=1, analyses="")
    doc["dynamics"]["schedule"] = "every"
    run_experiment(parse_experiment_config(doc), output_dir=tmp_path, workers=1)
    csv_path = tmp_path / "mp_small" / "0000" / "trajectory.csv"
    perturbation = analyze_trajectory("matching_pennies", csv_path, "perturbation")
    assert perturbation["perturbation_bound"]["violations"] == 0
    interp = analyze_trajectory("matching_pennies", csv_path, "interpolate")
    assert interp["max_bound_ratio"] <= 1.0 + 1e-9
    hannan = analyze_trajectory("matching_pennies", csv_path, "hannan")
    assert hannan["t"] == 300.0
    with pytest.raises(UsageException):
        analyze_trajectory("matching_pennies", csv_path, "fourier")
