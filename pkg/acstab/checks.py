"""Named verification checks run by the verify command."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, replace
import math

import numpy as np
from propcache.api import cached_property

from .const import LOGGER, CheckKey, Correlation, DisorderFamily, PotentialKind
from .coordinator import SweepCoordinator
from .exceptions import ConfigError
from .green import (
    free_fixed_point,
    halfline_lyapunov,
    halfline_m,
    qp_cocycle_iterate,
    radial_recursion,
    recurse_finite,
    resolvent_column,
)
from .helpers import point_seed, side_stream
from .models import (
    CheckReport,
    DensityCurve,
    DisorderSpec,
    ExperimentConfig,
    LadderSettings,
    PoolSummary,
    PotentialSpec,
    TreeTopology,
)
from .qgraph import (
    band_angle,
    build_qgraph,
    qg_ac_measure,
    qg_recursion,
    regular_bands,
    root_m,
    scan_band_edges,
    wavenumber,
)
from .scattering import equivalence_scan, root_gammas, spectrum_disagreements
from .spectral import (
    PoolTask,
    ac_measure,
    bound_report,
    current_deficit,
    default_threshold,
    energy_averaged_lyapunov,
    equilibrated_pool,
    fluctuation_bound_check,
    free_density_curve,
    harmonic_mean_value,
    jensen_boost_check,
    l1_density_distance,
    log_current_check,
    pool_sweep,
    typical_im_gamma,
)
from .tree import build_instance, draw_disorder

# Disorder ladder shared by the L1 and energy averaged Lyapunov checks
JOINT_LAMBDAS = (0.4, 0.2, 0.1, 0.05)
JOINT_INTERVAL = (-1.0, 1.0)
CURRENT_ETAS = (1e-2, 1e-3, 1e-4)
RADIAL_STRENGTH = 0.5
QGRAPH_LAMBDAS = (0.2, 0.1, 0.05, 0.025)
SCATTER_LAMBDAS = (0.0, 0.1)
SCATTER_POINTS = 200
SCATTER_WINDOW = (-4.0, 4.0)
SCATTER_R_TOL = 1e-3
STABILITY_TOLERANCE = 0.05
MIN_BAND_WIDTH = 1e-2
ROOT_ANGLES = (0.0, math.pi / 4, math.pi / 2)
# Spawn keys of auxiliary random streams
TUPLE_STREAM = 1
RADIAL_STREAM = 2


def _within(check: str, value: float, limit: float) -> CheckReport:
    """Exact comparison value < limit."""
    return CheckReport(
        check=check,
        lhs=float(value),
        rhs=float(limit),
        slack=float(limit - value),
        stderr=0.0,
        passed=bool(value < limit),
    )


def _combine(check: str, reports: list[CheckReport]) -> CheckReport:
    """Worst of several reports; passes only when every report passes."""
    failing = [report for report in reports if not report.passed]
    worst = min(failing or reports, key=lambda report: report.slack)
    return replace(worst, check=check, passed=not failing)


@dataclass(frozen=True)
class PoolCheckTask:
    """One (energy, lambda) point of the pool based checks."""

    point: PoolTask
    alpha: float


def pool_checks(task: PoolCheckTask) -> dict[str, CheckReport]:
    """Worker: Jensen, fluctuation and log-current reports on one live pool."""
    point = task.point
    pool, eta = equilibrated_pool(point)
    K = point.branching
    rng = side_stream(point.seed, TUPLE_STREAM)
    tuples = pool.samples.imag[rng.integers(0, pool.size, (pool.size, K))]
    flu1, flu2 = fluctuation_bound_check(pool, task.alpha, point.disorder.kappa, K)
    return {
        CheckKey.JENSEN_BOOST: jensen_boost_check(tuples, task.alpha, point.disorder.kappa),
        CheckKey.FLU1: flu1,
        CheckKey.FLU2: flu2,
        CheckKey.LOG_CURRENT: log_current_check(
            pool, K, point.disorder, complex(point.energy, eta), point.potential
        ),
    }


class VerifyContext:
    """Shared state of one verify run.

    Sweeps needed by several checks are computed once and cached.
    """

    def __init__(self, config: ExperimentConfig, workers: int = 1) -> None:
        """Initialize the context."""
        self.config = config
        self.workers = workers

    @property
    def branching(self) -> int:
        """Branching number of the configured tree."""
        return self.config.topology.branching

    @property
    def ladder(self) -> LadderSettings:
        """The configured eta ladder, or the default one."""
        return self.config.grid.ladder or LadderSettings()

    @property
    def centre_energy(self) -> float:
        """Centre of the configured energy window."""
        return (self.config.grid.e_min + self.config.grid.e_max) / 2

    def disorder(self, strength: float, **changes) -> DisorderSpec:
        """The configured disorder family at another strength."""
        return replace(self.config.disorder, strength=strength, **changes)

    @cached_property
    def pool_reports(self) -> list[dict[str, CheckReport]]:
        """Per-point reports of the pool based checks over the grid."""
        config = self.config
        tasks = [
            PoolCheckTask(
                point=PoolTask(
                    branching=self.branching,
                    disorder=self.disorder(lam),
                    potential=config.potential,
                    energy=float(energy),
                    eta=config.grid.eta,
                    pool=config.pool,
                    seed=point_seed(config.seed, row, column),
                    ladder=config.grid.ladder,
                ),
                alpha=config.alpha,
            )
            for row, lam in enumerate(config.grid.lambdas)
            for column, energy in enumerate(config.grid.energies)
        ]
        return SweepCoordinator(pool_checks, "pool checks", self.workers).run(tasks)

    @cached_property
    def joint_summaries(self) -> dict[float, list[PoolSummary]]:
        """Pooled summaries inside the joint interval along the lambda ladder."""
        energies = self.joint_energies
        return {
            lam: pool_sweep(
                energies,
                self.branching,
                self.disorder(lam),
                self.config.potential,
                max(1e-3, lam**2),
                self.config.pool,
                self.config.seed,
                workers=self.workers,
                offset=row + 1,
            )
            for row, lam in enumerate(JOINT_LAMBDAS)
        }

    @property
    def joint_energies(self) -> np.ndarray:
        """Grid points inside the joint interval."""
        energies = self.config.grid.energies
        lower, upper = JOINT_INTERVAL
        inside = energies[(energies >= lower) & (energies <= upper)]
        if len(inside) < 2:
            return np.linspace(lower, upper, 41)
        return inside


def _pool_check(key: CheckKey) -> Callable[[VerifyContext], list[CheckReport]]:
    """Select one check from the shared pool reports."""

    def run(context: VerifyContext) -> list[CheckReport]:
        return [reports[key] for reports in context.pool_reports]

    return run


def _free_fixed_point(context: VerifyContext) -> list[CheckReport]:
    rng = np.random.default_rng(context.config.seed)
    K = context.branching
    reports = []
    for energy, log_eta in zip(rng.uniform(-4, 4, 100), rng.uniform(-3, 0, 100), strict=True):
        z = complex(energy, 10**log_eta)
        gamma = free_fixed_point(K, z)
        residual = abs(K * gamma**2 + z * gamma + 1)
        reports.append(_within(CheckKey.FREE_FIXED_POINT, residual, 1e-13))
        reports.append(_within(CheckKey.FREE_FIXED_POINT, -gamma.imag, 0.0))
    return reports


def _radial_identity(context: VerifyContext) -> list[CheckReport]:
    rng = np.random.default_rng(context.config.seed)
    depth = 1000
    lam = context.config.disorder.strength or RADIAL_STRENGTH
    family = context.disorder(1.0, correlation=Correlation.RADIAL)
    reports = []
    for index in range(100):
        K = (2, 3)[index % 2]
        U = rng.uniform(-1, 1, depth)
        xi = draw_disorder(family, rng, depth)
        z = complex(rng.uniform(-3, 3), 10 ** rng.uniform(-2, 0))
        gamma = radial_recursion(U, xi, lam, K, z, depth)
        scale = math.sqrt(K)
        m = halfline_m((U + lam * xi) / scale, z / scale, depth)
        reports.append(_within(CheckKey.RADIAL_IDENTITY, abs(gamma - m / scale), 1e-12))
    return reports


def _qp_radial_identity(context: VerifyContext) -> list[CheckReport]:
    potential = context.config.potential
    if potential.kind != PotentialKind.QUASI_PERIODIC:
        potential = PotentialSpec(kind=PotentialKind.QUASI_PERIODIC, amplitude=1.0, phase=0.3)
    topology = TreeTopology(context.branching, min(context.config.topology.depth, 10))
    instance = build_instance(topology, DisorderSpec(), potential, context.config.seed)
    reports = []
    for energy in np.linspace(-2.5, 2.5, 11):
        z = complex(energy, 1e-2)
        gamma = recurse_finite(instance, z)[0]
        cocycle = qp_cocycle_iterate(
            potential.amplitude,
            potential.frequency,
            potential.phase,
            context.branching,
            z,
            topology.depth + 1,
        )
        reports.append(_within(CheckKey.QP_RADIAL_IDENTITY, abs(gamma - cocycle), 1e-12))
    return reports


def _current_deficit(context: VerifyContext) -> list[CheckReport]:
    config = context.config
    instance = build_instance(config.topology, config.disorder, config.potential, config.seed)
    reports = []
    for eta in CURRENT_ETAS:
        z = complex(context.centre_energy, eta)
        gammas = recurse_finite(instance, z, leaf_init=0j)
        report = current_deficit(resolvent_column(instance, z), gammas, z, leaf_init=0j)
        reports.append(
            CheckReport(
                check=CheckKey.CURRENT_DEFICIT,
                lhs=report.max_error,
                rhs=1e-10 * report.scale,
                slack=1e-10 * report.scale - report.max_error,
                stderr=0.0,
                passed=report.passed,
            )
        )
    return reports


def _radial_instability(context: VerifyContext) -> list[CheckReport]:
    config = context.config
    K = context.branching
    energy = context.centre_energy
    disorder = DisorderSpec(
        family=DisorderFamily.TWO_POINT, strength=RADIAL_STRENGTH, correlation=Correlation.RADIAL
    )
    rng = side_stream(config.seed, RADIAL_STREAM)
    xi = draw_disorder(disorder, rng, 100_000)
    scale = math.sqrt(K)
    gamma = halfline_lyapunov(RADIAL_STRENGTH * xi / scale, complex(energy, 1e-12) / scale)
    pool, _ = equilibrated_pool(
        PoolTask(
            branching=K,
            disorder=disorder,
            potential=PotentialSpec(),
            energy=energy,
            eta=context.ladder.eta_min,
            pool=config.pool,
            seed=point_seed(config.seed, 3),
            ladder=context.ladder,
        )
    )
    ratio = typical_im_gamma(pool) / free_fixed_point(K, energy).imag
    return [
        bound_report(CheckKey.RADIAL_INSTABILITY, gamma, 0.01, 0.0, lower=False),
        _within(CheckKey.RADIAL_INSTABILITY, ratio, 1e-2),
    ]


def _curve(summaries: list[PoolSummary], energies: np.ndarray, lam: float) -> DensityCurve:
    return DensityCurve(
        energies=energies,
        eta=summaries[0].eta,
        strength=lam,
        mean_im=np.array([summary.mean_im for summary in summaries]),
        stderr=np.array([summary.stderr for summary in summaries]),
    )


def _l1_convergence(context: VerifyContext) -> list[CheckReport]:
    energies = context.joint_energies
    free = free_density_curve(context.branching, energies)
    distances = [
        l1_density_distance(_curve(summaries, energies, lam), free, JOINT_INTERVAL)
        for lam, summaries in context.joint_summaries.items()
    ]
    LOGGER.info("L1 distances along the ladder: %s", distances)
    reports = [
        _within(CheckKey.L1_CONVERGENCE, current, previous)
        for previous, current in zip(distances, distances[1:], strict=False)
    ]
    reports.append(_within(CheckKey.L1_CONVERGENCE, distances[-1], distances[0] / 2))
    return reports


def _ac_measure_stability(context: VerifyContext) -> list[CheckReport]:
    config = context.config
    K = context.branching
    energies = config.grid.energies
    threshold = config.grid.threshold or default_threshold(K)
    interval = config.grid.interval
    reference = ac_measure(free_density_curve(K, energies), threshold, interval)
    lam = min(config.grid.lambdas)
    summaries = pool_sweep(
        energies,
        K,
        context.disorder(lam),
        config.potential,
        config.grid.eta,
        config.pool,
        config.seed,
        config.grid.ladder,
        context.workers,
        offset=len(JOINT_LAMBDAS) + 1,
    )
    measure = ac_measure(_curve(summaries, energies, lam), threshold, interval)
    return [
        _within(
            CheckKey.AC_MEASURE_STABILITY,
            abs(measure - reference),
            STABILITY_TOLERANCE * reference,
        )
    ]


def _lyapunov_free(context: VerifyContext) -> list[CheckReport]:
    K = context.branching
    summaries = pool_sweep(
        (0.0, 1.0, 2.0, 3.0),
        K,
        DisorderSpec(),
        PotentialSpec(),
        context.ladder.eta_min,
        context.config.pool,
        context.config.seed,
        context.ladder,
        context.workers,
    )
    outside = -math.log(math.sqrt(K) * abs(free_fixed_point(K, 3.0)))
    reports = [
        _within(CheckKey.LYAPUNOV_FREE, abs(summary.lyapunov.gamma), 1e-3)
        for summary in summaries[:3]
    ]
    reports.append(
        _within(CheckKey.LYAPUNOV_FREE, abs(summaries[3].lyapunov.gamma - outside), 1e-3)
    )
    return reports


def _harmonicity(context: VerifyContext) -> list[CheckReport]:
    K = context.branching

    def exponent(z: complex) -> float:
        return -math.log(math.sqrt(K) * abs(free_fixed_point(K, z)))

    circle, centre = harmonic_mean_value(exponent, 0.5 + 0.5j, 0.25)
    return [_within(CheckKey.HARMONICITY, abs(circle - centre), 1e-6)]


def _energy_averaged_lyapunov(context: VerifyContext) -> list[CheckReport]:
    energies = context.joint_energies
    values = []
    for summaries in context.joint_summaries.values():
        gammas = [summary.lyapunov.gamma for summary in summaries]
        errors = [summary.lyapunov.stderr for summary in summaries]
        values.append(
            (
                energy_averaged_lyapunov(energies, gammas, JOINT_INTERVAL),
                energy_averaged_lyapunov(energies, errors, JOINT_INTERVAL),
            )
        )
    return [
        bound_report(
            CheckKey.ENERGY_AVERAGED_LYAPUNOV,
            current,
            previous,
            math.hypot(current_error, previous_error),
        )
        for (previous, previous_error), (current, current_error) in zip(
            values, values[1:], strict=False
        )
    ]


def _qgraph_bands(context: VerifyContext) -> list[CheckReport]:
    settings = context.config.qgraph
    K = context.branching
    L = settings.length
    theta = band_angle(K)
    reports = [
        _within(CheckKey.QGRAPH_BANDS, abs(math.cos(theta) - 2 * math.sqrt(K) / (K + 1)), 1e-12)
    ]
    bands = regular_bands(K, L, settings.n_max)
    topology = TreeTopology(K, min(settings.depth, 6))
    instance = build_qgraph(topology, L, DisorderSpec(), context.config.seed)
    detected = {}
    for alpha in ROOT_ANGLES:

        def indicator(k: float, alpha: float = alpha) -> float:
            return root_m(1, qg_recursion(instance, wavenumber(k * k, 1e-10)), alpha).imag

        edges = scan_band_edges(indicator, 1e-3, settings.n_max * math.pi / L, 2000, 1e-6)
        # Eigenvalues of the root condition show up as isolated narrow peaks
        detected[alpha] = [(lo, hi) for lo, hi in edges if hi - lo > MIN_BAND_WIDTH / L]
    for edges in detected.values():
        if len(edges) != len(bands):
            reports.append(_within(CheckKey.QGRAPH_BANDS, abs(len(edges) - len(bands)), 0.5))
            continue
        for band, (k_lo, k_hi) in zip(bands, edges, strict=True):
            error = max(abs(band.k_lo - k_lo), abs(band.k_hi - k_hi))
            reports.append(_within(CheckKey.QGRAPH_BANDS, error, 1e-4))
    reference = detected[ROOT_ANGLES[0]]
    for alpha in ROOT_ANGLES[1:]:
        edges = detected[alpha]
        if len(edges) != len(reference):
            reports.append(_within(CheckKey.QGRAPH_BANDS, abs(len(edges) - len(reference)), 0.5))
            continue
        for (lo, hi), (k_lo, k_hi) in zip(reference, edges, strict=True):
            error = max(abs(lo - k_lo), abs(hi - k_hi))
            reports.append(_within(CheckKey.QGRAPH_BANDS, error, 1e-4))
    return reports


def _qgraph_stability(context: VerifyContext) -> list[CheckReport]:
    config = context.config
    settings = config.qgraph
    K = context.branching
    band = regular_bands(K, settings.length, 1)[0]
    margin = 0.1 * (band.e_hi - band.e_lo)
    energies = np.linspace(max(0.0, band.e_lo - margin), band.e_hi + margin, 181)
    measures = qg_ac_measure(
        K,
        settings.length,
        (0.0, *QGRAPH_LAMBDAS),
        energies,
        config.grid.eta,
        config.grid.threshold or default_threshold(K),
        config.pool,
        config.seed,
        dis=context.disorder(0.0, correlation=settings.correlation),
        alpha_root=settings.alpha_root,
        workers=context.workers,
    )
    reference = measures[0]
    cell = energies[1] - energies[0]
    reports = [
        _within(
            CheckKey.QGRAPH_STABILITY, abs(reference.measure - (band.e_hi - band.e_lo)), 2 * cell
        )
    ]
    gaps = [abs(measure.measure - reference.measure) for measure in measures[1:]]
    reports.extend(
        bound_report(
            CheckKey.QGRAPH_STABILITY,
            current,
            previous,
            math.hypot(measures[index].stderr, measures[index + 1].stderr),
        )
        for index, (previous, current) in enumerate(zip(gaps, gaps[1:], strict=False), start=1)
    )
    reports.append(
        _within(CheckKey.QGRAPH_STABILITY, gaps[-1], STABILITY_TOLERANCE * reference.measure)
    )
    return reports


def _equivalence(context: VerifyContext) -> list[CheckReport]:
    config = context.config
    K = context.branching
    lower, upper = SCATTER_WINDOW
    energies = np.linspace(lower, upper, SCATTER_POINTS)
    cell = energies[1] - energies[0]
    reports = []
    for row, lam in enumerate(SCATTER_LAMBDAS):
        disorder = context.disorder(lam)
        # Free rows use the closed form at eta = 0, disordered rows the eta -> 0 ladder
        gammas = root_gammas(
            energies,
            K,
            disorder,
            PotentialSpec(),
            context.ladder.eta_min if lam else 0.0,
            config.pool,
            config.seed,
            context.ladder if lam else None,
            context.workers,
            offset=100 + row,
        )
        scan = equivalence_scan(energies, gammas, config.wire.k, config.wire.coupling)
        mismatches = spectrum_disagreements(
            scan, 2 * math.sqrt(K), lam * disorder.support + cell, SCATTER_R_TOL
        )
        reports.append(_within(CheckKey.EQUIVALENCE, len(scan.disagreements), 0.5))
        reports.append(_within(CheckKey.EQUIVALENCE, len(mismatches), 0.5))
        reports.append(_within(CheckKey.EQUIVALENCE, scan.max_abs_r, 1 + 1e-12))
    return reports


@dataclass(frozen=True, kw_only=True)
class AcstabCheckDescription:
    """Describes one verify check."""

    key: CheckKey
    run_fn: Callable[[VerifyContext], list[CheckReport]]
    summary: str


CHECKS: tuple[AcstabCheckDescription, ...] = (
    AcstabCheckDescription(
        key=CheckKey.FREE_FIXED_POINT,
        run_fn=_free_fixed_point,
        summary="Closed-form Gamma solves K G^2 + z G + 1 = 0 to 1e-13 at 100 random z",
    ),
    AcstabCheckDescription(
        key=CheckKey.RADIAL_IDENTITY,
        run_fn=_radial_identity,
        summary="Radial tree equals the rescaled half line to 1e-12, K in {2, 3}, depth 1000",
    ),
    AcstabCheckDescription(
        key=CheckKey.QP_RADIAL_IDENTITY,
        run_fn=_qp_radial_identity,
        summary="Quasi-periodic finite tree equals the cocycle iteration to 1e-12",
    ),
    AcstabCheckDescription(
        key=CheckKey.JENSEN_BOOST,
        run_fn=_pool_check(CheckKey.JENSEN_BOOST),
        summary="Jensen improvement margin is non-negative on live pools",
    ),
    AcstabCheckDescription(
        key=CheckKey.FLU1,
        run_fn=_pool_check(CheckKey.FLU1),
        summary="Width of Im Gamma is bounded by the Lyapunov exponent",
    ),
    AcstabCheckDescription(
        key=CheckKey.FLU2,
        run_fn=_pool_check(CheckKey.FLU2),
        summary="Width of |Gamma|^2 is bounded by the Lyapunov exponent",
    ),
    AcstabCheckDescription(
        key=CheckKey.LOG_CURRENT,
        run_fn=_pool_check(CheckKey.LOG_CURRENT),
        summary="Log current gain lies between 0 and twice the Lyapunov exponent",
    ),
    AcstabCheckDescription(
        key=CheckKey.CURRENT_DEFICIT,
        run_fn=_current_deficit,
        summary="Current lost at each vertex equals eta |psi|^2 for eta in {1e-2, 1e-3, 1e-4}",
    ),
    AcstabCheckDescription(
        key=CheckKey.RADIAL_INSTABILITY,
        run_fn=_radial_instability,
        summary="Two-point radial disorder 0.5 localises: half line exponent > 0.01, typical "
        "Im Gamma below 1% of the free value",
    ),
    AcstabCheckDescription(
        key=CheckKey.L1_CONVERGENCE,
        run_fn=_l1_convergence,
        summary="L1 distance to the free density on [-1, 1] decreases along the lambda ladder",
    ),
    AcstabCheckDescription(
        key=CheckKey.AC_MEASURE_STABILITY,
        run_fn=_ac_measure_stability,
        summary="Detected ac measure at the smallest lambda is within 5% of the free one",
    ),
    AcstabCheckDescription(
        key=CheckKey.LYAPUNOV_FREE,
        run_fn=_lyapunov_free,
        summary="Free Lyapunov exponent vanishes in the band and equals log(2)/2 at E=3",
    ),
    AcstabCheckDescription(
        key=CheckKey.HARMONICITY,
        run_fn=_harmonicity,
        summary="Lyapunov exponent has the mean value property on a circle",
    ),
    AcstabCheckDescription(
        key=CheckKey.ENERGY_AVERAGED_LYAPUNOV,
        run_fn=_energy_averaged_lyapunov,
        summary="Energy averaged Lyapunov exponent decreases along the joint ladder",
    ),
    AcstabCheckDescription(
        key=CheckKey.QGRAPH_BANDS,
        run_fn=_qgraph_bands,
        summary="Quantum tree band edges match the band condition to 1e-4 for root angles "
        "0, pi/4 and pi/2",
    ),
    AcstabCheckDescription(
        key=CheckKey.QGRAPH_STABILITY,
        run_fn=_qgraph_stability,
        summary="Quantum tree ac measure equals the regular band at lambda=0 and converges "
        "monotonically to it",
    ),
    AcstabCheckDescription(
        key=CheckKey.EQUIVALENCE,
        run_fn=_equivalence,
        summary="|r| < 1 exactly where Im Gamma > 0 and, as eta -> 0, inside the free band; "
        "|r| <= 1 everywhere",
    ),
)


def resolve_checks(names) -> list[AcstabCheckDescription]:
    """Descriptions for the named checks, in the given order."""
    known = {description.key: description for description in CHECKS}
    descriptions = []
    for name in names:
        if name not in known:
            raise ConfigError("unknown_check", {"check": name})
        descriptions.append(known[name])
    return descriptions


def run_checks(config: ExperimentConfig, workers: int = 1, names=None) -> list[CheckReport]:
    """Run the named checks, one combined report each."""
    descriptions = resolve_checks(config.checks if names is None else names)
    context = VerifyContext(config, workers)
    results = []
    for description in descriptions:
        LOGGER.info("Running check %s", description.key)
        report = _combine(description.key, description.run_fn(context))
        LOGGER.info(
            "Check %s %s with slack %.3e",
            report.check,
            "passed" if report.passed else "FAILED",
            report.slack,
        )
        results.append(report)
    return results
