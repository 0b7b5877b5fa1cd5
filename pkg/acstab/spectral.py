"""Spectral observables built from Gamma samples."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
import math

import numpy as np
from scipy.integrate import trapezoid

from .const import LOGGER, VIOLATION_SIGMAS, CheckKey, Correlation, PotentialKind
from .coordinator import SweepCoordinator
from .exceptions import ConfigError, DomainError
from .green import equilibrate, free_fixed_point, init_pool, limit_schedule
from .helpers import (
    cell_widths,
    jackknife,
    point_seed,
    require_positive_eta,
    spectral_parameter,
)
from .models import (
    CheckReport,
    CurrentReport,
    DensityCurve,
    DisorderSpec,
    GammaPool,
    LadderSettings,
    LyapunovEstimate,
    PoolSettings,
    PoolSummary,
    PotentialSpec,
    PsiColumn,
    QuantileWidth,
    SpectralPoint,
)
from .tree import draw_disorder, potential_profile

# Absolute floor for comparisons that are exact in exact arithmetic
ROUNDING_SLACK = 1e-12


def bound_report(
    check: str, lhs: float, rhs: float, stderr: float, lower: bool = True
) -> CheckReport:
    """Build a report for lhs <= rhs, or lhs >= rhs when lower is False."""
    slack = rhs - lhs if lower else lhs - rhs
    return CheckReport(
        check=check,
        lhs=float(lhs),
        rhs=float(rhs),
        slack=float(slack),
        stderr=float(stderr),
        passed=bool(slack >= -(VIOLATION_SIGMAS * stderr + ROUNDING_SLACK)),
    )


def alpha_width(samples: Sequence[float] | np.ndarray, alpha: float) -> QuantileWidth:
    """Relative alpha-width (xi_plus - xi_minus) / xi_plus of a positive sample."""
    if not 0 < alpha <= 0.5:
        raise DomainError("alpha", f"{alpha} outside (0, 1/2]")
    ordered = np.sort(np.asarray(samples, dtype=float).ravel())
    count = len(ordered)
    if count == 0:
        raise DomainError("samples", "empty sample")
    if not ordered[0] > 0:
        raise DomainError("samples", f"non-positive sample {ordered[0]}")
    position = alpha * count
    k = int(math.floor(position))
    if k == position and 0 < k < count:
        # Ties between order statistics split at the midpoint
        xi_minus = (ordered[k - 1] + ordered[k]) / 2
        xi_plus = (ordered[count - k - 1] + ordered[count - k]) / 2
    else:
        xi_minus = ordered[min(k, count - 1)]
        xi_plus = ordered[max(count - k - 1, 0)]
    return QuantileWidth(
        alpha=alpha,
        xi_minus=float(xi_minus),
        xi_plus=float(xi_plus),
        delta=float((xi_plus - xi_minus) / xi_plus),
    )


def _log_decay(values: np.ndarray, K: int) -> np.ndarray:
    """Per-sample -log(sqrt(K)*|Gamma|)."""
    modulus = np.abs(np.asarray(values).ravel())
    if np.any(modulus == 0):
        raise DomainError("lyapunov", "a sample has zero modulus")
    return -np.log(math.sqrt(K) * modulus)


def lyapunov(pool: GammaPool, K: int) -> LyapunovEstimate:
    """Lyapunov exponent -E[log sqrt(K)|Gamma|] with jackknife error."""
    gamma, stderr = jackknife(_log_decay(pool.layers, K))
    return LyapunovEstimate(gamma=gamma, stderr=stderr)


def ac_density(pool: GammaPool) -> float:
    """Mean Im Gamma / pi of the root layer."""
    return float(max(pool.samples.imag.mean(), 0.0) / math.pi)


def typical_im_gamma(pool: GammaPool) -> float:
    """Median Im Gamma of the root layer."""
    return float(np.median(pool.samples.imag))


def jensen_boost_check(
    tuples: Sequence[Sequence[float]] | np.ndarray, alpha: float, kappa: float
) -> CheckReport:
    """Margin of E[log mean X_j] over E[log X_1] + (alpha^2 kappa / 4) delta^2."""
    values = np.asarray(tuples, dtype=float)
    if values.size == 0:
        raise DomainError("tuples", "empty input")
    if values.ndim != 2:
        raise DomainError("tuples", f"expected K-tuples, got shape {values.shape}")
    if not 0 < kappa <= 1:
        raise DomainError("kappa", f"{kappa} outside (0, 1]")
    width = alpha_width(values, alpha)
    log_mean = np.log(values.mean(axis=1))
    lhs = float(log_mean.mean())
    rhs = float(np.log(values).mean() + alpha**2 * kappa / 4 * width.delta**2)
    per_tuple = log_mean - np.log(values).mean(axis=1)
    stderr = 0.0
    if len(per_tuple) > 1:
        stderr = float(per_tuple.std(ddof=1) / math.sqrt(len(per_tuple)))
    return bound_report(CheckKey.JENSEN_BOOST, lhs, rhs, stderr, lower=False)


def fluctuation_bound_check(
    pool: GammaPool, alpha: float, kappa: float, K: int
) -> tuple[CheckReport, CheckReport]:
    """Compare alpha-widths of Im Gamma and |Gamma|^2 with the Lyapunov exponent."""
    gamma = lyapunov(pool, K)
    scale = 1 / (kappa * alpha**2)
    reports = []
    for key, values, factor in (
        (CheckKey.FLU1, pool.samples.imag, 8 * scale),
        (CheckKey.FLU2, np.abs(pool.samples) ** 2, 32 * (K + 1) ** 2 * scale),
    ):
        lhs, lhs_error = jackknife(
            values, lambda sample: alpha_width(sample, alpha).delta ** 2, blocks=16
        )
        stderr = math.hypot(lhs_error, factor * gamma.stderr)
        reports.append(bound_report(key, lhs, factor * gamma.gamma, stderr))
    return reports[0], reports[1]


def log_current_check(
    pool: GammaPool,
    K: int,
    dis: DisorderSpec,
    z: SpectralPoint | complex,
    pot: PotentialSpec | None = None,
    samples: int | None = None,
) -> CheckReport:
    """Check 0 <= E[log mean Im Gamma_y] - E[log Im Gamma_x] <= 2*gamma on fresh parents."""
    z = spectral_parameter(z)
    require_positive_eta(z, "log_current_check")
    pot = pot or PotentialSpec()
    count = samples or pool.size
    rng = np.random.default_rng([pool.seed, pool.generation, 1])
    source = pool.layers[1 % pool.period]
    if dis.correlation == Correlation.RADIAL:
        children = np.repeat(source[rng.integers(0, pool.size, (count, 1))], K, axis=1)
    else:
        children = source[rng.integers(0, pool.size, (count, K))]
    background = float(potential_profile(pot, 1)[0])
    omega = draw_disorder(dis, rng, count)
    parents = 1 / (dis.strength * omega + background - z - children.sum(axis=1))
    current = np.log(children.imag.mean(axis=1)) - np.log(parents.imag)
    decay = _log_decay(parents, K)
    lhs, lhs_error = jackknife(current)
    _, gap_error = jackknife(2 * decay - current)
    report = bound_report(CheckKey.LOG_CURRENT, lhs, 2 * float(decay.mean()), gap_error)
    jensen_holds = lhs >= -(VIOLATION_SIGMAS * lhs_error + ROUNDING_SLACK)
    if not jensen_holds:
        LOGGER.warning("Log-current left side %.3e is negative beyond noise", lhs)
    return replace(report, passed=report.passed and bool(jensen_holds))


def current_deficit(
    column: PsiColumn,
    gammas: np.ndarray,
    z: SpectralPoint | complex | None = None,
    leaf_init: complex = 0j,
) -> CurrentReport:
    """Current lost at each vertex, J_in - sum J_out, against eta*|psi|^2."""
    z = column.z if z is None else spectral_parameter(z)
    require_positive_eta(z, "current_deficit")
    topology = column.instance.topology
    branching = topology.branching
    parents = topology.parents
    weight = np.abs(column.psi) ** 2
    im = np.asarray(gammas).imag
    incoming = np.empty_like(weight)
    # The root is fed by a unit source, psi at its virtual parent is -1
    incoming[0] = im[0]
    incoming[1:] = weight[parents[1:]] * im[1:]
    internal = int(topology.offsets[topology.depth])
    child_sum = np.full_like(weight, branching * complex(leaf_init).imag)
    child_sum[:internal] = im[1:].reshape(-1, branching).sum(axis=1)
    deficits = incoming - weight * child_sum
    expected = z.imag * weight
    keep = np.ones(len(weight), dtype=bool)
    keep[1:] = column.psi[parents[1:]] != 0
    skipped = tuple(int(index) for index in np.flatnonzero(~keep))
    if skipped:
        LOGGER.warning("Skipped %d vertices with a vanishing parent amplitude", len(skipped))
    return CurrentReport(
        deficits=deficits,
        expected=expected,
        max_error=float(np.max(np.abs(deficits - expected)[keep])),
        scale=float(weight.max()),
        min_deficit=float(deficits[keep].min()),
        skipped=skipped,
    )


def _interval_mask(energies: np.ndarray, interval: tuple[float, float] | None) -> np.ndarray:
    """Grid points inside a closed interval."""
    if interval is None:
        return np.ones(len(energies), dtype=bool)
    lower, upper = interval
    return (energies >= lower - 1e-12) & (energies <= upper + 1e-12)


def l1_density_distance(
    curve_lam: DensityCurve, curve_0: DensityCurve, interval: tuple[float, float]
) -> float:
    """Trapezoid integral of |density_lambda - density_0| over the interval."""
    if curve_lam.energies.shape != curve_0.energies.shape or not np.allclose(
        curve_lam.energies, curve_0.energies, rtol=0, atol=1e-12
    ):
        raise ConfigError("mismatched_grids", {"detail": "density curves use different grids"})
    mask = _interval_mask(curve_lam.energies, interval)
    if mask.sum() < 2:
        raise DomainError("interval", f"{interval} holds fewer than two grid points")
    difference = np.abs(curve_lam.density - curve_0.density)[mask]
    return float(trapezoid(difference, curve_lam.energies[mask]))


def default_threshold(K: int) -> float:
    """One percent of the peak free density 1/(pi*sqrt(K))."""
    return 1e-2 / (math.pi * math.sqrt(K))


def ac_measure(
    curve: DensityCurve, threshold: float, interval: tuple[float, float] | None = None
) -> float:
    """Grid-cell Lebesgue measure of the set where the density exceeds threshold."""
    if threshold <= 0:
        raise DomainError("threshold", f"{threshold} must be positive")
    mask = _interval_mask(curve.energies, interval)
    energies = curve.energies[mask]
    above = curve.density[mask] > threshold
    return float(cell_widths(energies)[above].sum())


def free_density_curve(K: int, energies: np.ndarray, eta: float = 0.0) -> DensityCurve:
    """Density of the disorder-free tree from the closed form."""
    energies = np.asarray(energies, dtype=float)
    mean_im = np.array([free_fixed_point(K, complex(energy, eta)).imag for energy in energies])
    return DensityCurve(
        energies=energies,
        eta=eta,
        strength=0.0,
        mean_im=mean_im,
        stderr=np.zeros_like(mean_im),
    )


@dataclass(frozen=True)
class PoolTask:
    """One spectral point of a pooled sweep."""

    branching: int
    disorder: DisorderSpec
    potential: PotentialSpec
    energy: float
    eta: float
    pool: PoolSettings
    seed: int
    ladder: LadderSettings | None = None


def summarize_pool(pool: GammaPool, K: int, energy: float, eta: float) -> PoolSummary:
    """Observables of an equilibrated pool."""
    mean_im, stderr = jackknife(pool.samples.imag)
    return PoolSummary(
        energy=energy,
        eta=eta,
        mean_gamma=complex(pool.samples.mean()),
        mean_im=mean_im,
        stderr=stderr,
        typical_im=typical_im_gamma(pool),
        lyapunov=lyapunov(pool, K),
    )


def equilibrated_pool(task: PoolTask) -> tuple[GammaPool, float]:
    """Equilibrate a pool at the task's point, following the ladder when given."""
    period = task.potential.period if task.potential.kind == PotentialKind.RADIAL_PERIODIC else 1
    settings = task.pool

    def run(eta: float, pool: GammaPool | None = None) -> GammaPool:
        z = complex(task.energy, eta)
        if pool is None:
            pool = init_pool(task.branching, z, settings.size, task.seed, period)
        pool, _ = equilibrate(
            pool,
            task.branching,
            task.disorder,
            task.potential,
            z,
            settings.burn_in,
            settings.sweeps,
        )
        return pool

    if task.ladder is None:
        return run(task.eta), task.eta
    state: dict[str, GammaPool] = {}

    def rung(eta: float) -> float:
        state["pool"] = run(eta, state.get("pool"))
        return float(state["pool"].samples.imag.mean())

    _, eta = limit_schedule(
        rung, task.ladder.eta0, task.ladder.tol, max(task.ladder.eta_min, task.eta)
    )
    return state["pool"], eta


def pool_point(task: PoolTask) -> PoolSummary:
    """Worker: equilibrate and summarise one point."""
    pool, eta = equilibrated_pool(task)
    return summarize_pool(pool, task.branching, task.energy, eta)


def pool_sweep(
    energies: Sequence[float],
    K: int,
    dis: DisorderSpec,
    pot: PotentialSpec,
    eta: float,
    pool: PoolSettings,
    seed: int,
    ladder: LadderSettings | None = None,
    workers: int = 1,
    offset: int = 0,
) -> list[PoolSummary]:
    """Pooled summaries over an energy grid, one seed per point."""
    tasks = [
        PoolTask(
            branching=K,
            disorder=dis,
            potential=pot,
            energy=float(energy),
            eta=eta,
            pool=pool,
            seed=point_seed(seed, offset, index),
            ladder=ladder,
        )
        for index, energy in enumerate(energies)
    ]
    return SweepCoordinator(pool_point, f"pool sweep lambda={dis.strength}", workers).run(tasks)


def density_curve(
    energies: Sequence[float],
    K: int,
    dis: DisorderSpec,
    pot: PotentialSpec,
    eta: float,
    pool: PoolSettings,
    seed: int,
    ladder: LadderSettings | None = None,
    workers: int = 1,
    offset: int = 0,
) -> DensityCurve:
    """Pooled density curve over an energy grid."""
    summaries = pool_sweep(energies, K, dis, pot, eta, pool, seed, ladder, workers, offset)
    return DensityCurve(
        energies=np.asarray(energies, dtype=float),
        eta=eta,
        strength=dis.strength,
        mean_im=np.array([summary.mean_im for summary in summaries]),
        stderr=np.array([summary.stderr for summary in summaries]),
    )


def harmonic_mean_value(
    fn: Callable[[complex], float], z0: complex, radius: float, points: int = 64
) -> tuple[float, float]:
    """Average of fn on a circle around z0, and fn(z0)."""
    z0 = complex(z0)
    if not z0.imag > radius > 0:
        raise DomainError("circle", f"radius {radius} must lie in (0, Im z0 = {z0.imag})")
    angles = 2 * math.pi * np.arange(points) / points
    circle = [fn(z0 + radius * complex(math.cos(angle), math.sin(angle))) for angle in angles]
    return float(np.mean(circle)), float(fn(z0))


def energy_averaged_lyapunov(
    energies: Sequence[float], gammas: Sequence[float], interval: tuple[float, float]
) -> float:
    """Trapezoid integral of the Lyapunov exponent over an energy interval."""
    energies = np.asarray(energies, dtype=float)
    mask = _interval_mask(energies, interval)
    if mask.sum() < 2:
        raise DomainError("interval", f"{interval} holds fewer than two grid points")
    return float(trapezoid(np.asarray(gammas, dtype=float)[mask], energies[mask]))
