"""Command line runner for acstab experiments."""

from __future__ import annotations

import argparse
from collections.abc import Callable, Sequence
from dataclasses import replace
import logging
from pathlib import Path

import colorlog
import numpy as np

from .artifacts import heatmap, line_plot, write_csv, write_json
from .checks import run_checks
from .config import apply_overrides, from_dict, read_json
from .const import LOGGER, ExitCode
from .diagnostics import config_from_header, run_header, version
from .exceptions import AcstabError, CheckFailed
from .helpers import log_summary
from .models import ExperimentConfig, PoolSummary
from .qgraph import qg_ac_measure, regular_bands
from .scattering import choose_wire, equivalence_scan, reflection, root_gammas
from .spectral import default_threshold, pool_sweep

_LOGGER = logging.getLogger(__name__)


def _setup_logging(verbosity: int) -> None:
    """Attach a coloured stream handler to the package logger."""
    handler = colorlog.StreamHandler()
    handler.setFormatter(
        colorlog.ColoredFormatter(
            "%(log_color)s%(levelname)-8s%(reset)s %(name)s: %(message)s",
            log_colors={
                "DEBUG": "cyan",
                "INFO": "green",
                "WARNING": "yellow",
                "ERROR": "red",
                "CRITICAL": "red,bg_white",
            },
        )
    )
    LOGGER.handlers[:] = [handler]
    LOGGER.propagate = False
    LOGGER.setLevel({-1: logging.WARNING, 0: logging.INFO}.get(verbosity, logging.DEBUG))


def _artifact(config: ExperimentConfig, command: str, suffix: str) -> Path:
    """Path of one output file."""
    stem = config.output.prefix or config.experiment
    return Path(config.output.directory) / f"{stem}_{command.replace('-', '_')}{suffix}"


def _sweep(config: ExperimentConfig, workers: int) -> list[list[PoolSummary]]:
    """Pooled summaries, one row per disorder strength."""
    return [
        pool_sweep(
            config.grid.energies,
            config.topology.branching,
            replace(config.disorder, strength=lam),
            config.potential,
            config.grid.eta,
            config.pool,
            config.seed,
            config.grid.ladder,
            workers,
            offset=row,
        )
        for row, lam in enumerate(config.grid.lambdas)
    ]


def cmd_density(config: ExperimentConfig, workers: int) -> None:
    """Root density of states per (E, lambda)."""
    header = run_header(config, "density")
    rows = _sweep(config, workers)
    write_csv(
        _artifact(config, "density", ".csv"),
        header,
        ("E", "lambda", "eta", "density", "stderr", "mean_im_gamma"),
        (
            (
                summary.energy,
                lam,
                summary.eta,
                max(summary.mean_im, 0.0) / np.pi,
                summary.stderr / np.pi,
                summary.mean_im,
            )
            for lam, summaries in zip(config.grid.lambdas, rows, strict=True)
            for summary in summaries
        ),
    )
    if config.output.svg:
        line_plot(
            _artifact(config, "density", ".svg"),
            header,
            config.grid.energies,
            {
                f"λ={lam:g}": np.array([max(s.mean_im, 0.0) / np.pi for s in summaries])
                for lam, summaries in zip(config.grid.lambdas, rows, strict=True)
            },
            "density",
            config.output.figure_size,
        )


def cmd_phase_sweep(config: ExperimentConfig, workers: int) -> None:
    """Mean Im Gamma over the (E, lambda) plane."""
    header = run_header(config, "phase-sweep")
    rows = _sweep(config, workers)
    write_csv(
        _artifact(config, "phase-sweep", ".csv"),
        header,
        ("E", "lambda", "eta", "mean_im_gamma", "stderr"),
        (
            (summary.energy, lam, summary.eta, summary.mean_im, summary.stderr)
            for lam, summaries in zip(config.grid.lambdas, rows, strict=True)
            for summary in summaries
        ),
    )
    if config.output.svg:
        heatmap(
            _artifact(config, "phase-sweep", ".svg"),
            header,
            config.grid.energies,
            np.asarray(config.grid.lambdas, dtype=float),
            np.array([[summary.mean_im for summary in summaries] for summaries in rows]),
            config.topology.branching,
            config.output.figure_size,
        )


def cmd_verify(config: ExperimentConfig, workers: int) -> None:
    """Run the configured checks and write the JSON report."""
    reports = run_checks(config, workers)
    write_json(
        _artifact(config, "verify", ".json"),
        run_header(config, "verify"),
        [report.as_dict() for report in reports],
    )
    failed = [report.check for report in reports if not report.passed]
    log_summary("verify", checks=len(reports), failed=len(failed))
    if failed:
        raise CheckFailed(failed)


def cmd_qgraph(config: ExperimentConfig, workers: int) -> None:
    """Regular quantum tree bands and the ac measure along the lambda list."""
    settings = config.qgraph
    K = config.topology.branching
    header = run_header(config, "qgraph")
    bands = regular_bands(K, settings.length, settings.n_max)
    write_csv(
        _artifact(config, "qgraph-bands", ".csv"),
        header,
        ("n", "k_lo", "k_hi", "E_lo", "E_hi"),
        ((band.n, band.k_lo, band.k_hi, band.e_lo, band.e_hi) for band in bands),
    )
    measures = qg_ac_measure(
        K,
        settings.length,
        config.grid.lambdas,
        config.grid.energies,
        config.grid.eta,
        config.grid.threshold or default_threshold(K),
        config.pool,
        config.seed,
        dis=replace(config.disorder, correlation=settings.correlation),
        alpha_root=settings.alpha_root,
        workers=workers,
    )
    write_csv(
        _artifact(config, "qgraph-measures", ".csv"),
        header,
        ("lambda", "measure", "stderr"),
        ((measure.strength, measure.measure, measure.stderr) for measure in measures),
    )
    log_summary(
        "qgraph",
        bands=len(bands),
        band_measure=bands.measure_in(config.grid.e_min, config.grid.e_max),
    )


def cmd_scatter(config: ExperimentConfig, workers: int) -> None:
    """Reflection coefficient of the attached wire per (E, lambda)."""
    energies = config.grid.energies
    rows = []
    for row, lam in enumerate(config.grid.lambdas):
        gammas = root_gammas(
            energies,
            config.topology.branching,
            replace(config.disorder, strength=lam),
            config.potential,
            config.grid.eta,
            config.pool,
            config.seed,
            config.grid.ladder,
            workers,
            offset=row,
        )
        scan = equivalence_scan(energies, gammas, config.wire.k, config.wire.coupling)
        log_summary(
            "scatter",
            strength=lam,
            disagreements=len(scan.disagreements),
            max_abs_r=scan.max_abs_r,
        )
        for energy, gamma in zip(energies, gammas, strict=True):
            wire = choose_wire(float(energy), config.wire.k, config.wire.coupling)
            r = reflection(gamma, wire)
            rows.append(
                (energy, lam, wire.k, wire.potential, r.real, r.imag, abs(r), gamma.imag)
            )
    write_csv(
        _artifact(config, "scatter", ".csv"),
        run_header(config, "scatter"),
        ("E", "lambda", "k", "C", "re_r", "im_r", "abs_r", "im_gamma"),
        rows,
    )


COMMANDS: dict[str, tuple[Callable[[ExperimentConfig, int], None], str]] = {
    "density": (cmd_density, "Root density of states curves"),
    "phase-sweep": (cmd_phase_sweep, "Heatmap of mean Im Gamma over (E, lambda)"),
    "verify": (cmd_verify, "Run named checks and write a JSON report"),
    "qgraph": (cmd_qgraph, "Quantum tree bands and ac measures"),
    "scatter": (cmd_scatter, "Reflection coefficient of an attached wire"),
}


def build_parser() -> argparse.ArgumentParser:
    """The argument parser of the acstab command."""
    parser = argparse.ArgumentParser(
        prog="acstab", description="Absolutely continuous spectrum on trees."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {version()}")
    commands = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        command = commands.add_parser(name, help=help_text)
        command.add_argument(
            "--config",
            required=True,
            type=Path,
            help="experiment JSON, or a CSV/JSON artifact to re-run from its header",
        )
        command.add_argument("--seed", type=int, help="override the master seed")
        command.add_argument("--workers", type=int, help="worker processes")
        command.add_argument("--out", help="output directory")
        command.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a dotted config key, for example grid.points=200",
        )
        verbosity = command.add_mutually_exclusive_group()
        verbosity.add_argument("-v", "--verbose", action="store_true")
        verbosity.add_argument("-q", "--quiet", action="store_true")
    return parser


def read_config(path: Path) -> dict:
    """Raw config from an experiment file or from an artifact header."""
    if path.suffix == ".csv":
        return config_from_header(path)
    data = read_json(path)
    if "header" in data:
        return config_from_header(path)
    return data


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    _setup_logging(1 if args.verbose else -1 if args.quiet else 0)
    run, _ = COMMANDS[args.command]
    try:
        data = apply_overrides(
            read_config(args.config),
            seed=args.seed,
            workers=args.workers,
            out=args.out,
            sets=args.set,
        )
        config = from_dict(data)
        _LOGGER.debug("Running %s for %s", args.command, config.experiment)
        run(config, config.workers)
    except AcstabError as err:
        _LOGGER.error("%s failed: %s", args.command, err)
        return int(err.exit_code)
    return int(ExitCode.SUCCESS)
