"""Tests for CSV, JSON and SVG artifacts."""

from __future__ import annotations

import json
import math

import numpy as np

from acstab.artifacts import heatmap, line_plot, spectrum_ticks, write_csv, write_json
from acstab.diagnostics import config_from_header

HEADER = {"library": "acstab", "version": "1.0.0", "command": "density", "config": {"seed": 1}}


def test_csv_cells(tmp_path):
    path = write_csv(
        tmp_path / "deep" / "table.csv",
        HEADER,
        ("E", "n", "flag", "name"),
        [(np.float64(0.1), np.int64(3), np.bool_(True), "x"), (1 / 3, 4, False, "y")],
    )
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == '# library: "acstab"'
    assert lines[4:] == ["E,n,flag,name", "0.1,3,true,x", "0.3333333333333333,4,false,y"]
    assert config_from_header(path) == {"seed": 1}


def test_json_report(tmp_path):
    path = write_json(tmp_path / "report.json", HEADER, [{"check": "flu1", "pass": True}])
    data = json.loads(path.read_text(encoding="utf-8"))
    assert data["reports"] == [{"check": "flu1", "pass": True}]
    assert config_from_header(path) == {"seed": 1}


def test_spectrum_ticks():
    ticks, labels = spectrum_ticks(2)
    assert ticks == [-3, -2 * math.sqrt(2), 2 * math.sqrt(2), 3]
    assert len(labels) == 4


def test_figures_are_deterministic(tmp_path):
    energies = np.linspace(-3, 3, 7)
    curves = {"λ=0": np.abs(energies), "λ=1": energies**2}
    first = line_plot(tmp_path / "a.svg", HEADER, energies, curves, "density", (4.0, 3.0))
    second = line_plot(tmp_path / "b.svg", HEADER, energies, curves, "density", (4.0, 3.0))
    assert first.read_bytes() == second.read_bytes()
    assert 'width="288pt"' in first.read_text(encoding="utf-8")


def test_heatmap(tmp_path):
    energies = np.linspace(-3.5, 3.5, 8)
    values = np.vstack([np.linspace(0, 1, 8), np.zeros(8)])
    path = heatmap(tmp_path / "map.svg", HEADER, energies, np.array([0.0, 1.0]), values, 2, (5, 4))
    text = path.read_text(encoding="utf-8")
    assert text.startswith("<?xml")
    assert "density" in text
