"""Tests for experiment configuration and run headers."""

from __future__ import annotations

from pathlib import Path

import pytest

from acstab.config import apply_overrides, dump, from_dict, load, read_json, to_dict
from acstab.const import CheckKey, DisorderFamily, ExitCode
from acstab.diagnostics import REDACTED, config_from_header, header_lines, redact_data, run_header
from acstab.exceptions import ConfigError
from acstab.helpers import auto_type, flatten, unflatten
from acstab.models import LadderSettings

CONFIG_DIR = Path(__file__).parents[1] / "config"


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda path: path.stem)
def test_shipped_configs_load(path: Path):
    config = load(path)
    assert config.experiment
    assert from_dict(to_dict(config)) == config


def test_density_config():
    config = load(CONFIG_DIR / "density.json")
    assert config.experiment == "free-band"
    assert config.grid.lambdas == (0.0, 0.3)
    assert config.grid.ladder == LadderSettings(eta0=0.1, eta_min=0.001, tol=1e-6)
    assert config.grid.energies[0] == -3.5
    assert len(config.grid.energies) == 400


def test_defaults(raw_config):
    config = from_dict(raw_config)
    assert config.topology.branching == 2
    assert config.disorder.family == DisorderFamily.UNIFORM
    assert config.wire.coupling == 1.0
    assert config.output.figure_size == (6.4, 4.8)
    assert config.checks == ()


def test_dump_and_load(tmp_path, raw_config):
    config = from_dict(raw_config | {"checks": ["harmonicity"], "grid": {"interval": [-1, 1]}})
    assert config.checks == (CheckKey.HARMONICITY,)
    assert config.grid.interval == (-1.0, 1.0)
    dump(config, tmp_path / "copy.json")
    assert load(tmp_path / "copy.json") == config


@pytest.mark.parametrize(
    ("change", "field"),
    [
        ({"grid": {"lambdas": []}}, "grid.lambdas"),
        ({"grid": {"e_min": 1.0, "e_max": 0.0}}, "grid.e_max"),
        ({"pool": {"size": 10}}, "pool.size"),
        ({"checks": ["no-such-check"]}, "checks.0"),
        ({"topology": {"branching": 1}}, "topology.branching"),
        ({"colour": "red"}, "colour"),
    ],
)
def test_invalid_fields(raw_config, change, field):
    with pytest.raises(ConfigError) as err:
        from_dict(raw_config | change)
    assert err.value.translation_key == "config_invalid"
    assert err.value.translation_placeholders["field"] == field
    assert err.value.exit_code == ExitCode.CONFIG_ERROR


def test_json_syntax_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"experiment": "x",\n  "seed": }', encoding="utf-8")
    with pytest.raises(ConfigError) as err:
        read_json(path)
    assert err.value.translation_key == "config_syntax"
    assert err.value.translation_placeholders["line"] == 2


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError) as err:
        read_json(tmp_path / "missing.json")
    assert err.value.translation_key == "config_unreadable"


def test_non_object_document(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_json(path)


def test_overrides(raw_config):
    data = apply_overrides(
        raw_config,
        seed=99,
        workers=2,
        out="elsewhere",
        sets=["grid.points=7", "grid.lambdas=0,0.1", "disorder.family=two-point"],
    )
    config = from_dict(data)
    assert config.seed == 99
    assert config.workers == 2
    assert config.output.directory == "elsewhere"
    assert config.grid.points == 7
    assert config.grid.lambdas == (0.0, 0.1)
    assert config.disorder.family == DisorderFamily.TWO_POINT
    with pytest.raises(ConfigError):
        apply_overrides(raw_config, sets=["grid.points"])


def test_overrides_replace_whole_sections(raw_config):
    raw_config["grid"]["ladder"] = {"eta0": 0.2, "eta_min": 1e-4}
    data = apply_overrides(raw_config, sets=["grid.ladder=null"])
    assert data["grid"]["ladder"] is None
    assert from_dict(data).grid.ladder is None
    data = apply_overrides(raw_config, sets=["grid.ladder=null", "grid.ladder.eta0=0.1"])
    assert data["grid"]["ladder"] == {"eta0": 0.1}
    assert from_dict(data).grid.ladder == LadderSettings(eta0=0.1)


def test_unflatten_rejects_clashing_keys():
    with pytest.raises(ConfigError) as err:
        unflatten({"grid": 1, "grid.points": 2})
    assert err.value.translation_key == "config_invalid"
    with pytest.raises(ConfigError):
        unflatten({"grid.ladder.eta0": 0.1, "grid.ladder": None})


def test_workers_from_environment(monkeypatch, raw_config):
    monkeypatch.setenv("ACSTAB_WORKERS", "3")
    assert from_dict(raw_config).workers == 3
    assert from_dict(raw_config | {"workers": 1}).workers == 1
    monkeypatch.setenv("ACSTAB_WORKERS", "many")
    with pytest.raises(ConfigError):
        from_dict(raw_config)


def test_flatten_round_trip():
    data = {"grid": {"points": 5, "ladder": {"eta0": 0.1}}, "seed": 1, "topology": {}}
    flat = flatten(data)
    assert flat == {"grid.points": 5, "grid.ladder.eta0": 0.1, "seed": 1, "topology": {}}
    assert unflatten(flat) == data


@pytest.mark.parametrize(
    ("text", "value"),
    [("7", 7), ("-3", -3), ("0.5", 0.5), ("true", True), ("none", None), ("a,b", ["a", "b"])],
)
def test_auto_type(text, value):
    assert auto_type(text) == value


def test_run_header_redacts_local_settings(raw_config):
    config = from_dict(raw_config | {"workers": 4, "output": {"directory": "/tmp/mine"}})
    header = run_header(config, "density")
    assert header["library"] == "acstab"
    assert header["command"] == "density"
    assert header["config"]["workers"] == REDACTED
    assert header["config"]["output"]["directory"] == REDACTED
    assert header["config"]["seed"] == 7
    assert redact_data({"a": {"b": 1}}, ["a.c"]) == {"a": {"b": 1}}


def test_config_from_csv_header(tmp_path, raw_config):
    config = from_dict(raw_config)
    path = tmp_path / "run.csv"
    lines = header_lines(run_header(config, "density"))
    path.write_text("\n".join([*lines, "E,lambda", "0.0,0.0"]) + "\n", encoding="utf-8")
    recovered = from_dict(config_from_header(path))
    assert recovered == config


def test_config_from_header_needs_a_config(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("E,lambda\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        config_from_header(path)
