"""Quantum tree graphs with Kirchhoff vertex conditions."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass
import cmath
import math

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .const import (
    LOGGER,
    MIN_POOL_SIZE,
    POOL_BATCHES,
    QG_ETA_STEP,
    QG_RETENTION,
    Correlation,
)
from .coordinator import SweepCoordinator
from .exceptions import DomainError, InvalidTopology, NumericError, PoolTooSmall, SingularPointError
from .green import init_pool
from .helpers import cell_widths, point_seed
from .models import (
    Band,
    BandList,
    DisorderSpec,
    GammaPool,
    PoolSettings,
    QGraphInstance,
    QGraphMeasure,
    TreeTopology,
)
from .tree import draw_disorder


def wavenumber(energy: float, eta: float = 0.0) -> complex:
    """Principal square root k of E + i*eta."""
    return cmath.sqrt(complex(energy, eta))


def _require_upper(k: complex, quantity: str) -> None:
    """Reject k with Im k^2 <= 0."""
    if not (k * k).imag > 0:
        raise DomainError(quantity, f"needs Im k^2 > 0, got k = {k}")


def _edge_coefficients(k: complex, lengths) -> tuple:
    """cos kL, sin(kL)/k and k sin kL for arrays of lengths."""
    phase = k * np.asarray(lengths)
    return np.cos(phase), np.asarray(lengths) * np.sinc(phase / np.pi), k * np.sin(phase)


def interval_transfer(L_e: float, k: complex) -> np.ndarray:
    """Matrix M with (psi(0), psi'(0)) = M (psi(L), psi'(L)) for -psi'' = k^2 psi."""
    cos, sin_over_k, k_sin = _edge_coefficients(complex(k), L_e)
    return np.array([[cos, -sin_over_k], [k_sin, cos]], dtype=complex)


def build_qgraph(
    topology: TreeTopology,
    length: float,
    dis: DisorderSpec,
    seed: int,
    alpha_root: float = 0.0,
) -> QGraphInstance:
    """Random edge lengths L*exp(lambda*omega_e); edge e_x ends at vertex x."""
    rng = np.random.default_rng(seed)
    if dis.correlation == Correlation.RADIAL:
        omega = draw_disorder(dis, rng, topology.depth + 1)[topology.generations]
    else:
        omega = draw_disorder(dis, rng, topology.vertex_count)
    omega.setflags(write=False)
    return QGraphInstance(
        topology=topology,
        length=length,
        strength=dis.strength,
        omega=omega,
        alpha_root=alpha_root,
        seed=seed,
        correlation=dis.correlation,
    )


def _vertex_pairs(a: np.ndarray, b: np.ndarray, k: complex) -> tuple[np.ndarray, np.ndarray]:
    """Projective (psi, psi') at vertices from the K outgoing edge pairs.

    Continuity and Kirchhoff give psi'/psi = sum of the child ratios; the pair
    is stored in the chart (1, R) or (1/R, 1), whichever stays bounded.
    """
    pole = np.any(a == 0, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        total = (b / a).sum(axis=1)
        inverse = 1 / total
    if np.any(np.isnan(total) & ~pole):
        raise NumericError("degenerate_chart", {"edge": int(np.argmax(np.isnan(total))), "k": k})
    large = pole | ~(np.abs(total) <= 1)
    first = np.where(pole, 0, np.where(large, inverse, 1))
    second = np.where(large, 1, total)
    return first, second


def _transport(
    first: np.ndarray, second: np.ndarray, k: complex, lengths: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Carry end-of-edge pairs to the start of the edge and normalise."""
    cos, sin_over_k, k_sin = _edge_coefficients(k, lengths)
    a = cos * first - sin_over_k * second
    b = k_sin * first + cos * second
    norm = np.maximum(np.abs(a), np.abs(b))
    if np.any(~(norm > 0)) or not np.all(np.isfinite(norm)):
        raise NumericError("degenerate_chart", {"edge": int(np.argmin(norm)), "k": k})
    return a / norm, b / norm


def _check_pairs(a: np.ndarray, b: np.ndarray, k: complex, quantity: str) -> None:
    """Im(psi' * conj(psi)) > 0 is the Herglotz property of the ratio."""
    flux = np.imag(b * np.conj(a))
    if np.any(~(flux > 0)):
        index = int(np.argmin(flux))
        raise NumericError(
            "herglotz_violation",
            {"quantity": quantity, "value": complex(b[index] / a[index]), "z": k * k},
        )


def root_m(a: complex, b: complex, alpha: float) -> complex:
    """Root Weyl function for the root condition cos(alpha) psi(0) = sin(alpha) psi'(0)."""
    cos, sin = math.cos(alpha), math.sin(alpha)
    return (cos * b + sin * a) / (cos * a - sin * b)


def qg_fixed_point(K: int, L: float, k: complex) -> complex:
    """Depth limit of the ratio recursion on the regular quantum tree."""
    k = complex(k)
    phase = k * L
    cos, sin = cmath.cos(phase), cmath.sin(phase)
    if sin == 0:
        raise SingularPointError(k * k)
    linear = cos / sin * (K - 1)
    root = cmath.sqrt(linear * linear - 4 * K)
    candidates = [k * (-linear + root) / (2 * K), k * (-linear - root) / (2 * K)]

    def denominator(ratio: complex) -> float:
        return abs(cos - sin / k * K * ratio)

    if (k * k).imag > 0:
        # The attracting fixed point has the larger transport denominator
        best = max(candidates, key=denominator)
        if not best.imag > 0:
            raise NumericError("no_upper_root", {"k": K, "z": k * k})
        return best
    return max(candidates, key=lambda ratio: (ratio.imag > 0, denominator(ratio)))


def qg_recursion(
    instance: QGraphInstance, k: complex, leaf_init: complex | None = None
) -> complex:
    """Root Weyl function m(k^2) of a finite quantum tree."""
    k = complex(k)
    _require_upper(k, "qg_recursion")
    topology = instance.topology
    branching = topology.branching
    if leaf_init is None:
        leaf_init = qg_fixed_point(branching, instance.length, k)
    lengths = instance.lengths
    a = np.ones((branching**topology.depth, branching), dtype=complex)
    b = np.full((branching**topology.depth, branching), complex(leaf_init))
    for generation in range(topology.depth, -1, -1):
        first, second = _vertex_pairs(a, b, k)
        start, slope = _transport(
            first, second, k, lengths[topology.generation_slice(generation)]
        )
        _check_pairs(start, slope, k, "qg_recursion")
        if generation:
            a, b = start.reshape(-1, branching), slope.reshape(-1, branching)
    return root_m(complex(start[0]), complex(slope[0]), instance.alpha_root)


def qg_radial_recursion(
    lengths_by_generation: Sequence[float],
    K: int,
    k: complex,
    leaf_init: complex | None = None,
    alpha_root: float = 0.0,
) -> complex:
    """Root Weyl function when every generation shares one edge length."""
    k = complex(k)
    _require_upper(k, "qg_radial_recursion")
    if K < 2:
        raise InvalidTopology(f"branching K={K} must be at least 2")
    lengths = np.asarray(lengths_by_generation, dtype=float)
    if leaf_init is None:
        leaf_init = qg_fixed_point(K, float(lengths[-1]), k)
    a = np.ones((1, K), dtype=complex)
    b = np.full((1, K), complex(leaf_init))
    for length in lengths[::-1]:
        first, second = _vertex_pairs(a, b, k)
        start, stop = _transport(first, second, k, np.array([length]))
        _check_pairs(start, stop, k, "qg_radial_recursion")
        a, b = np.repeat(start, K).reshape(1, K), np.repeat(stop, K).reshape(1, K)
    return root_m(complex(a[0, 0]), complex(b[0, 0]), alpha_root)


def band_angle(K: int) -> float:
    """theta = arctan((K-1)/(2 sqrt K)), with cos(theta) = 2 sqrt(K)/(K+1)."""
    return math.atan((K - 1) / (2 * math.sqrt(K)))


def regular_bands(K: int, L: float, n_max: int) -> BandList:
    """Bands |cos kL| <= 2 sqrt(K)/(K+1) of the regular quantum tree."""
    if K < 2:
        raise InvalidTopology(f"branching K={K} must be at least 2")
    if L <= 0:
        raise InvalidTopology(f"edge length L={L} must be positive")
    if n_max < 1:
        raise DomainError("n_max", f"{n_max} must be at least 1")
    theta = band_angle(K)
    bands = []
    for n in range(n_max):
        k_lo = (n * math.pi + theta) / L
        k_hi = ((n + 1) * math.pi - theta) / L
        bands.append(Band(n=n, k_lo=k_lo, k_hi=k_hi, e_lo=k_lo**2, e_hi=k_hi**2))
    return BandList(tuple(bands))


def regular_im_m(K: int, L: float, k: float, eta: float, alpha: float = 0.0) -> float:
    """Im m of the infinite regular tree at energy k^2 + i*eta."""
    wave = wavenumber(k * k, eta)
    return root_m(1, qg_fixed_point(K, L, wave), alpha).imag


def scan_band_edges(
    indicator: Callable[[float], float],
    k_min: float,
    k_max: float,
    points: int,
    threshold: float,
    iterations: int = 60,
) -> list[tuple[float, float]]:
    """Intervals in k where indicator exceeds threshold, edges refined by bisection."""
    grid = np.linspace(k_min, k_max, points)
    inside = [indicator(float(k)) > threshold for k in grid]
    edges = []
    for index in range(points - 1):
        if inside[index] == inside[index + 1]:
            continue
        lower, upper = float(grid[index]), float(grid[index + 1])
        for _ in range(iterations):
            middle = (lower + upper) / 2
            if (indicator(middle) > threshold) == inside[index]:
                lower = middle
            else:
                upper = middle
        edges.append((lower + upper) / 2)
    if inside[0]:
        edges.insert(0, float(grid[0]))
    if inside[-1]:
        edges.append(float(grid[-1]))
    return list(zip(edges[::2], edges[1::2], strict=True))


def qg_pool_iterate(
    pool: GammaPool,
    K: int,
    length: float,
    dis: DisorderSpec,
    k: complex,
    sweeps: int,
) -> GammaPool:
    """Population dynamics for the edge ratio psi'(0)/psi(0) with random lengths."""
    k = complex(k)
    _require_upper(k, "qg_pool_iterate")
    if pool.size < MIN_POOL_SIZE:
        raise PoolTooSmall(pool.size, MIN_POOL_SIZE)
    samples = pool.samples.copy()
    size = len(samples)
    batch = -(-size // POOL_BATCHES)
    rng = np.random.default_rng([pool.seed, pool.generation])
    for _ in range(sweeps):
        for start in range(0, size, batch):
            count = min(batch, size - start)
            if dis.correlation == Correlation.RADIAL:
                total = K * samples[rng.integers(0, size, count)]
            else:
                total = samples[rng.integers(0, size, (count, K))].sum(axis=1)
            lengths = length * np.exp(dis.strength * draw_disorder(dis, rng, count))
            cos, sin_over_k, k_sin = _edge_coefficients(k, lengths)
            slots = rng.integers(0, size, count)
            samples[slots] = (k_sin + cos * total) / (cos - sin_over_k * total)
    _check_pairs(np.ones_like(samples), samples, k, "qg_pool_iterate")
    return GammaPool(layers=samples[None, :], generation=pool.generation + sweeps, seed=pool.seed)


def finite_difference_root_ratio(
    instance: QGraphInstance,
    energy: complex,
    h: float | None = None,
    leaf_init: complex | None = None,
) -> complex:
    """Root ratio psi'(0)/psi(0) from a second-order discretisation of the tree."""
    energy = complex(energy)
    topology = instance.topology
    branching = topology.branching
    if h is None:
        h = instance.length / 200
    if leaf_init is None:
        leaf_init = qg_fixed_point(branching, instance.length, cmath.sqrt(energy))
    robin = branching * complex(leaf_init)
    vertices = topology.vertex_count
    lengths = instance.lengths
    intervals = np.maximum(2, np.ceil(lengths / h)).astype(int)
    steps = lengths / intervals
    rows: list[int] = []
    cols: list[int] = []
    values: list[complex] = []
    rhs: dict[int, complex] = {}
    first_node = np.empty(vertices, dtype=int)
    next_index = vertices

    def add(row: int, col: int, value: complex) -> None:
        rows.append(row)
        cols.append(col)
        values.append(value)

    for vertex in range(vertices):
        step = steps[vertex]
        interior = list(range(next_index, next_index + intervals[vertex] - 1))
        next_index += len(interior)
        first_node[vertex] = interior[0]
        start = int(topology.parents[vertex])
        nodes = [start, *interior, vertex]
        for position, node in enumerate(interior, start=1):
            add(node, node, 2 / step**2 - energy)
            for neighbour in (nodes[position - 1], nodes[position + 1]):
                if neighbour < 0:
                    # Root point carries psi = 1
                    rhs[node] = rhs.get(node, 0) + 1 / step**2
                else:
                    add(node, neighbour, -1 / step**2)
        # Incoming end of edge e_x at vertex x
        add(vertex, vertex, 1 / step - step / 2 * energy)
        add(vertex, interior[-1], -1 / step)
        if topology.generations[vertex] == topology.depth:
            add(vertex, vertex, -robin)
        else:
            for child in range(branching * vertex + 1, branching * vertex + branching + 1):
                child_step = lengths[child] / intervals[child]
                add(vertex, vertex, 1 / child_step - child_step / 2 * energy)

    # Outgoing starts of child edges need their first interior node
    for vertex in range(vertices):
        if topology.generations[vertex] == topology.depth:
            continue
        for child in range(branching * vertex + 1, branching * vertex + branching + 1):
            add(vertex, int(first_node[child]), -1 / steps[child])

    size = next_index
    matrix = sparse.coo_array((values, (rows, cols)), shape=(size, size)).tocsc()
    vector = np.zeros(size, dtype=complex)
    for node, value in rhs.items():
        vector[node] = value
    psi = spsolve(matrix, vector)
    step = steps[0]
    ratio = (psi[first_node[0]] - 1) / step + step / 2 * energy
    LOGGER.debug("Finite difference tree with %d nodes, root ratio %s", size, ratio)
    return complex(ratio)


@dataclass(frozen=True)
class QGraphTask:
    """One (energy, lambda) point of a quantum graph measure sweep."""

    branching: int
    length: float
    disorder: DisorderSpec
    energy: float
    eta: float
    pool: PoolSettings
    seed: int
    alpha_root: float = 0.0
    blocks: int = 16


def qg_point(task: QGraphTask) -> np.ndarray:
    """Worker: block means of Im m over an equilibrated ratio pool."""
    k = wavenumber(task.energy, task.eta)
    pool = init_pool(
        task.branching,
        k * k,
        task.pool.size,
        task.seed,
        initial=qg_fixed_point(task.branching, task.length, k),
    )
    pool = qg_pool_iterate(
        pool, task.branching, task.length, task.disorder, k, task.pool.burn_in + task.pool.sweeps
    )
    m = root_m(1, pool.samples, task.alpha_root)
    return np.array([block.imag.mean() for block in np.array_split(m, task.blocks)])


def ac_cells(coarse: np.ndarray, fine: np.ndarray, threshold: float) -> np.ndarray:
    """Cells whose Im m stays above threshold and settles as eta shrinks.

    Gap tails of a Lorentzian scale with eta and eigenvalue peaks grow like 1/eta,
    so both move by about QG_ETA_STEP between the two evaluations.
    """
    ratio = fine / np.where(coarse > 0, coarse, np.inf)
    return (fine > threshold) & (ratio > QG_RETENTION) & (ratio < 1 / QG_RETENTION)


def qg_ac_measure(
    K: int,
    L: float,
    lambdas: Sequence[float],
    energies: Sequence[float],
    eta: float,
    threshold: float,
    pool: PoolSettings,
    seed: int,
    dis: DisorderSpec | None = None,
    alpha_root: float = 0.0,
    workers: int = 1,
) -> list[QGraphMeasure]:
    """Measure of {E : Im m(E + i*eta') > threshold} for each disorder strength.

    Im m is read at eta' = eta / QG_ETA_STEP and compared with its value at eta on
    the same pool seed; cells where it has not settled are not counted.
    """
    if threshold <= 0:
        raise DomainError("threshold", f"{threshold} must be positive")
    if eta <= 0:
        raise DomainError("eta", f"{eta} must be positive")
    dis = dis or DisorderSpec()
    energies = np.asarray(energies, dtype=float)
    widths = cell_widths(energies)
    tasks = [
        QGraphTask(
            branching=K,
            length=L,
            disorder=DisorderSpec(
                family=dis.family,
                strength=lam,
                correlation=dis.correlation,
                sigma=dis.sigma,
                cutoff=dis.cutoff,
            ),
            energy=float(energy),
            eta=point_eta,
            pool=pool,
            seed=point_seed(seed, row, column),
            alpha_root=alpha_root,
        )
        for point_eta in (eta, eta / QG_ETA_STEP)
        for row, lam in enumerate(lambdas)
        for column, energy in enumerate(energies)
    ]
    blocks = SweepCoordinator(qg_point, "quantum graph measure", workers).run(tasks)
    size = len(lambdas) * len(energies)
    coarse_blocks, fine_blocks = np.array(blocks[:size]), np.array(blocks[size:])
    measures = []
    for row, lam in enumerate(lambdas):
        rows = slice(row * len(energies), (row + 1) * len(energies))
        coarse, fine = coarse_blocks[rows], fine_blocks[rows]
        measure = float(widths[ac_cells(coarse.mean(axis=1), fine.mean(axis=1), threshold)].sum())
        per_block = (widths[:, None] * ac_cells(coarse, fine, threshold)).sum(axis=0)
        stderr = float(per_block.std(ddof=1) / math.sqrt(fine.shape[1]))
        measures.append(QGraphMeasure(strength=float(lam), measure=measure, stderr=stderr))
        LOGGER.debug("Quantum graph lambda=%g measure %.6g +- %.2g", lam, measure, stderr)
    return measures
