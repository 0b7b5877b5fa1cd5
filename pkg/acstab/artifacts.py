"""CSV, JSON and SVG artifacts."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
import csv
import json
import math
from pathlib import Path
from typing import Any

from matplotlib import rc_context
from matplotlib.figure import Figure
import numpy as np

from .const import DOMAIN, LOGGER
from .diagnostics import header_lines


def _cell(value: Any) -> str:
    """Text of one CSV cell; floats use the shortest round-trip form."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(
    path: Path,
    header: dict[str, Any],
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
) -> Path:
    """Write a table preceded by the run header as comment lines."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as file:
        for line in header_lines(header):
            file.write(line + "\n")
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(columns)
        count = 0
        for row in rows:
            writer.writerow([_cell(value) for value in row])
            count += 1
    LOGGER.info("Wrote %d rows to %s", count, path)
    return path


def write_json(path: Path, header: dict[str, Any], reports: list[dict[str, Any]]) -> Path:
    """Write a machine readable report."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps({"header": header, "reports": reports}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    LOGGER.info("Wrote %d reports to %s", len(reports), path)
    return path


def _save(figure: Figure, path: Path, header: dict[str, Any]) -> Path:
    """Save a self-contained SVG without timestamps or random ids."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with rc_context({"svg.hashsalt": DOMAIN, "svg.fonttype": "path"}):
        figure.savefig(
            path,
            format="svg",
            metadata={"Date": None, "Description": json.dumps(header, sort_keys=True)},
        )
    LOGGER.info("Wrote %s", path)
    return path


def spectrum_ticks(K: int) -> tuple[list[float], list[str]]:
    """Ticks at the free band edges and at the edges of the spectrum."""
    edge = 2 * math.sqrt(K)
    return [-(K + 1), -edge, edge, K + 1], ["-(K+1)", "-2√K", "2√K", "K+1"]


def line_plot(
    path: Path,
    header: dict[str, Any],
    energies: np.ndarray,
    curves: dict[str, np.ndarray],
    ylabel: str,
    size: tuple[float, float],
) -> Path:
    """One line per labelled curve over a common energy grid."""
    figure = Figure(figsize=size)
    axes = figure.add_subplot()
    for label, values in curves.items():
        axes.plot(energies, values, label=label, linewidth=1)
    axes.set_xlabel("E")
    axes.set_ylabel(ylabel)
    axes.set_xlim(float(energies[0]), float(energies[-1]))
    axes.legend(loc="upper right", fontsize="small")
    return _save(figure, path, header)


def heatmap(
    path: Path,
    header: dict[str, Any],
    energies: np.ndarray,
    lambdas: np.ndarray,
    values: np.ndarray,
    K: int,
    size: tuple[float, float],
) -> Path:
    """Mean Im Gamma over the (E, lambda) plane, clipped at the free peak 1/sqrt(K)."""
    figure = Figure(figsize=size)
    axes = figure.add_subplot()
    peak = 1 / math.sqrt(K)
    mesh = axes.pcolormesh(
        energies,
        lambdas,
        np.clip(values, 0.0, peak),
        shading="nearest",
        vmin=0.0,
        vmax=peak,
        cmap="viridis",
    )
    figure.colorbar(mesh, ax=axes, label="mean Im Γ")
    ticks, labels = spectrum_ticks(K)
    inside = [
        (tick, label)
        for tick, label in zip(ticks, labels, strict=True)
        if energies[0] <= tick <= energies[-1]
    ]
    axes.set_xticks([tick for tick, _ in inside], [label for _, label in inside])
    axes.set_xlabel("E")
    axes.set_ylabel("λ")
    return _save(figure, path, header)
