"""Tests for the acstab command line runner."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest

from acstab import checks
from acstab.checks import AcstabCheckDescription
from acstab.cli import main
from acstab.const import CheckKey, ExitCode
from acstab.models import CheckReport


def _rows(path: Path) -> list[dict[str, str]]:
    """Table rows of a CSV artifact, header comments skipped."""
    with open(path, encoding="utf-8") as file:
        lines = [line for line in file if not line.startswith("# ")]
    return list(csv.DictReader(lines))


def _run(command: str, config: Path, out: Path, *extra: str) -> int:
    return main([command, "--config", str(config), "--out", str(out), "-q", *extra])


def test_density_writes_table_and_figure(tmp_path, config_file):
    assert _run("density", config_file, tmp_path / "a") == ExitCode.SUCCESS
    table = tmp_path / "a" / "unit_density.csv"
    figure = tmp_path / "a" / "unit_density.svg"
    rows = _rows(table)
    assert len(rows) == 5
    assert list(rows[0]) == ["E", "lambda", "eta", "density", "stderr", "mean_im_gamma"]
    assert float(rows[2]["density"]) == pytest.approx(0.225, abs=0.01)
    assert 'width="460.8pt"' in figure.read_text(encoding="utf-8")
    assert table.read_text(encoding="utf-8").startswith("# library: \"acstab\"")


def test_density_is_reproducible(tmp_path, config_file):
    _run("density", config_file, tmp_path / "a")
    _run("density", config_file, tmp_path / "b", "--workers", "1")
    first = tmp_path / "a" / "unit_density.csv"
    assert first.read_bytes() == (tmp_path / "b" / "unit_density.csv").read_bytes()
    assert (tmp_path / "a" / "unit_density.svg").read_bytes() == (
        tmp_path / "b" / "unit_density.svg"
    ).read_bytes()
    # The header alone is enough to rerun
    assert _run("density", first, tmp_path / "c") == ExitCode.SUCCESS
    assert first.read_bytes() == (tmp_path / "c" / "unit_density.csv").read_bytes()


def test_seed_changes_disordered_results(tmp_path, config_file):
    _run("density", config_file, tmp_path / "a", "--set", "grid.lambdas=0.5")
    _run("density", config_file, tmp_path / "b", "--set", "grid.lambdas=0.5", "--seed", "8")
    assert _rows(tmp_path / "a" / "unit_density.csv") != _rows(tmp_path / "b" / "unit_density.csv")


def test_phase_sweep(tmp_path, config_file):
    code = _run("phase-sweep", config_file, tmp_path, "--set", "grid.lambdas=0,0.5")
    assert code == ExitCode.SUCCESS
    rows = _rows(tmp_path / "unit_phase_sweep.csv")
    assert len(rows) == 10
    assert {row["lambda"] for row in rows} == {"0.0", "0.5"}
    assert (tmp_path / "unit_phase_sweep.svg").exists()


def test_svg_can_be_disabled(tmp_path, config_file):
    _run("density", config_file, tmp_path, "--set", "output.svg=false")
    assert (tmp_path / "unit_density.csv").exists()
    assert not (tmp_path / "unit_density.svg").exists()


def test_verify_writes_report(tmp_path, config_file):
    code = _run("verify", config_file, tmp_path, "--set", "checks=harmonicity,free-fixed-point")
    assert code == ExitCode.SUCCESS
    report = json.loads((tmp_path / "unit_verify.json").read_text(encoding="utf-8"))
    assert report["header"]["command"] == "verify"
    assert [item["check"] for item in report["reports"]] == ["harmonicity", "free-fixed-point"]
    assert all(item["pass"] for item in report["reports"])


def test_verify_failure_exit_code(tmp_path, config_file, monkeypatch):
    failing = AcstabCheckDescription(
        key=CheckKey.HARMONICITY,
        run_fn=lambda context: [CheckReport("harmonicity", 1.0, 0.0, -1.0, 0.0, False)],
        summary="always fails",
    )
    monkeypatch.setattr(checks, "CHECKS", (failing,))
    code = _run("verify", config_file, tmp_path, "--set", "checks=harmonicity")
    assert code == ExitCode.CHECK_FAILURE
    report = json.loads((tmp_path / "unit_verify.json").read_text(encoding="utf-8"))
    assert report["reports"][0]["pass"] is False


@pytest.mark.parametrize(
    "extra",
    [("--set", "checks=no-such-check"), ("--set", "grid.points=1"), ("--set", "pool.size")],
)
def test_config_errors(tmp_path, config_file, extra):
    assert _run("verify", config_file, tmp_path, *extra) == ExitCode.CONFIG_ERROR


def test_missing_and_broken_configs(tmp_path):
    assert _run("density", tmp_path / "missing.json", tmp_path) == ExitCode.CONFIG_ERROR
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    assert _run("density", broken, tmp_path) == ExitCode.CONFIG_ERROR


def test_qgraph(tmp_path, config_file):
    window = ("--set", "grid.e_min=0.2", "--set", "grid.e_max=7.6")
    code = _run("qgraph", config_file, tmp_path, *window)
    assert code == ExitCode.SUCCESS
    bands = _rows(tmp_path / "unit_qgraph_bands.csv")
    assert [row["n"] for row in bands] == ["0", "1", "2"]
    assert float(bands[0]["E_lo"]) == pytest.approx(0.115489, abs=1e-6)
    (measure,) = _rows(tmp_path / "unit_qgraph_measures.csv")
    assert float(measure["measure"]) == pytest.approx(7.4)


def test_scatter(tmp_path, config_file):
    assert _run("scatter", config_file, tmp_path) == ExitCode.SUCCESS
    rows = _rows(tmp_path / "unit_scatter.csv")
    assert len(rows) == 5
    assert all(float(row["abs_r"]) < 1 for row in rows)
    assert float(rows[0]["k"]) == pytest.approx(1.5707963)


def test_version(capsys):
    with pytest.raises(SystemExit) as err:
        main(["--version"])
    assert err.value.code == 0
    assert capsys.readouterr().out.startswith("acstab ")


@pytest.mark.slow
def test_parallel_run_matches_serial(tmp_path, config_file):
    extra = ("--set", "grid.lambdas=0.3")
    _run("density", config_file, tmp_path / "a", *extra)
    _run("density", config_file, tmp_path / "b", "--workers", "2", *extra)
    assert (tmp_path / "a" / "unit_density.csv").read_bytes() == (
        tmp_path / "b" / "unit_density.csv"
    ).read_bytes()
