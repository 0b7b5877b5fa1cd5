"""Weyl-Titchmarsh function Gamma on regular trees."""

from __future__ import annotations

from collections.abc import Callable, Sequence
import cmath
import math
from typing import TypeVar

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .const import (
    DEFAULT_POOL_SIZE,
    LOGGER,
    MAX_SOLVE_VERTICES,
    MIN_POOL_SIZE,
    POOL_BATCHES,
    RESIDUAL_TOLERANCE,
    Correlation,
    PotentialKind,
)
from .exceptions import (
    DomainError,
    InvalidPotential,
    InvalidTopology,
    NumericError,
    PoolTooSmall,
    SingularPointError,
    UnsupportedPotential,
)
from .helpers import (
    assert_herglotz,
    cauchy_gap,
    eta_ladder,
    require_positive_eta,
    spectral_parameter,
)
from .models import (
    DisorderSpec,
    GammaPool,
    PotentialSpec,
    PsiColumn,
    SpectralPoint,
    TreeInstance,
)
from .tree import draw_disorder, potential_profile, torus_orbit

T = TypeVar("T")


def _herglotz_root(branching: int, z: complex) -> complex:
    """Root of K*G^2 + z*G + 1 = 0 on the Herglotz branch, limits included."""
    if z.imag > 0:
        s = cmath.sqrt(z * z - 4 * branching)
        if (z.conjugate() * s).real < 0:
            s = -s
        # r1 carries the large modulus, r2 follows from r1*r2 = 1/K
        first = -(z + s) / (2 * branching)
        second = 1 / (branching * first)
        for root in (first, second):
            if root.imag > 0:
                return root
        raise NumericError("no_upper_root", {"k": branching, "z": z})
    energy = z.real
    discriminant = energy * energy - 4 * branching
    if discriminant < 0:
        return complex(-energy, math.sqrt(-discriminant)) / (2 * branching)
    if discriminant == 0:
        return complex(-energy / (2 * branching))
    first = (-energy - math.copysign(math.sqrt(discriminant), energy)) / (2 * branching)
    return complex(1 / (branching * first))


def free_fixed_point(K: int, z: SpectralPoint | complex) -> complex:
    """Gamma of the disorder-free tree, the fixed point of G = 1/(-z - K*G)."""
    if K < 2:
        raise InvalidTopology(f"branching K={K} must be at least 2")
    return _herglotz_root(K, spectral_parameter(z))


def _backward_cf(
    diagonal: Sequence[float], z: complex, branching: int, boundary: complex
) -> list[complex]:
    """Backward continued fraction G_n = 1/(a_n - z - K*G_{n+1}), all levels."""
    values = [0j] * (len(diagonal) + 1)
    values[-1] = current = boundary
    for n in range(len(diagonal) - 1, -1, -1):
        denominator = diagonal[n] - z - branching * current
        if denominator == 0:
            raise SingularPointError(z)
        current = 1 / denominator
        values[n] = current
    return values


def _leaf_value(K: int, z: complex, leaf_init: complex | None) -> complex:
    if leaf_init is None:
        return free_fixed_point(K, z)
    if complex(leaf_init).imag < 0:
        raise DomainError("leaf_init", f"{leaf_init} is not in the closed upper half plane")
    return complex(leaf_init)


def recurse_generations(
    instance: TreeInstance,
    z: SpectralPoint | complex,
    leaf_init: complex | None = None,
) -> np.ndarray:
    """Gamma of every generation of a radial instance, root first."""
    z = spectral_parameter(z)
    topology = instance.topology
    branching = topology.branching
    diagonal = instance.generation_diagonal
    gammas = np.empty(topology.depth + 1, dtype=complex)
    child_sum = branching * _leaf_value(branching, z, leaf_init)
    for generation in range(topology.depth, -1, -1):
        denominator = diagonal[generation] - z - child_sum
        if denominator == 0:
            raise SingularPointError(z)
        gammas[generation] = 1 / denominator
        child_sum = branching * gammas[generation]
    assert_herglotz(gammas, z, "recurse_generations")
    return gammas


def recurse_finite(
    instance: TreeInstance,
    z: SpectralPoint | complex,
    leaf_init: complex | None = None,
) -> np.ndarray:
    """Gamma at every vertex of a finite tree, in breadth-first order.

    leaf_init is the value carried by each of the K absent children of the
    deepest generation; 0 is the Dirichlet truncation and the default is the
    free fixed point.
    """
    z = spectral_parameter(z)
    topology = instance.topology
    branching = topology.branching
    if instance.radial:
        return recurse_generations(instance, z, leaf_init)[topology.generations]
    diagonal = instance.diagonal
    gammas = np.empty(topology.vertex_count, dtype=complex)
    child_sum = np.full(branching**topology.depth, branching * _leaf_value(branching, z, leaf_init))
    for generation in range(topology.depth, -1, -1):
        part = topology.generation_slice(generation)
        denominator = diagonal[part] - z - child_sum
        if np.any(denominator == 0):
            raise SingularPointError(z)
        gammas[part] = 1 / denominator
        if generation:
            child_sum = gammas[part].reshape(-1, branching).sum(axis=1)
    assert_herglotz(gammas, z, "recurse_finite")
    return gammas


def radial_recursion(
    U_seq: Sequence[float],
    xi_seq: Sequence[float],
    lam: float,
    K: int,
    z: SpectralPoint | complex,
    depth: int,
) -> complex:
    """Root Gamma of a tree whose values depend on the generation only."""
    z = spectral_parameter(z)
    if len(U_seq) < depth or len(xi_seq) < depth:
        raise DomainError("radial data", f"sequences shorter than depth {depth}")
    diagonal = (
        np.asarray(U_seq[:depth], dtype=float) + lam * np.asarray(xi_seq[:depth], dtype=float)
    ).tolist()
    gamma = _backward_cf(diagonal, z, K, free_fixed_point(K, z))[0]
    assert_herglotz(gamma, z, "radial_recursion")
    return gamma


def halfline_orbit(
    V_seq: Sequence[float], z_prime: SpectralPoint | complex, depth: int
) -> list[complex]:
    """All m_n of the half-line continued fraction, m_depth the free value."""
    z_prime = spectral_parameter(z_prime)
    if len(V_seq) < depth:
        raise DomainError("halfline potential", f"sequence shorter than depth {depth}")
    diagonal = np.asarray(V_seq[:depth], dtype=float).tolist()
    return _backward_cf(diagonal, z_prime, 1, _herglotz_root(1, z_prime))


def halfline_m(V_seq: Sequence[float], z_prime: SpectralPoint | complex, depth: int) -> complex:
    """Weyl function m_0 of the half-line operator T + V at z'."""
    m = halfline_orbit(V_seq, z_prime, depth)[0]
    assert_herglotz(m, spectral_parameter(z_prime), "halfline_m")
    return m


def halfline_lyapunov(V_seq: Sequence[float], z_prime: SpectralPoint | complex) -> float:
    """Lyapunov exponent -mean log|m_n| along the half line."""
    orbit = halfline_orbit(V_seq, z_prime, len(V_seq))
    return float(-np.mean(np.log(np.abs(np.asarray(orbit[:-1])))))


def qp_cocycle_orbit(
    u0: float,
    alpha_freq: float,
    theta: float,
    K: int,
    z: SpectralPoint | complex,
    depth: int,
) -> list[complex]:
    """Gamma_n(theta) for n = 0..depth under u(theta) = u0*cos(theta)."""
    z = spectral_parameter(z)
    diagonal = (u0 * np.cos(np.asarray(torus_orbit(theta, alpha_freq, depth)))).tolist()
    return _backward_cf(diagonal, z, K, free_fixed_point(K, z))


def qp_cocycle_iterate(
    u0: float,
    alpha_freq: float,
    theta: float,
    K: int,
    z: SpectralPoint | complex,
    depth: int,
) -> complex:
    """Solve G(theta) = 1/(u(theta) - z - K*G(S theta)) by backward iteration."""
    gamma = qp_cocycle_orbit(u0, alpha_freq, theta, K, z, depth)[0]
    assert_herglotz(gamma, spectral_parameter(z), "qp_cocycle_iterate")
    return gamma


def resolvent_column(instance: TreeInstance, z: SpectralPoint | complex) -> PsiColumn:
    """Solve (H - z) psi = delta_0 on the truncated tree."""
    z = spectral_parameter(z)
    require_positive_eta(z, "resolvent_column")
    topology = instance.topology
    size = topology.vertex_count
    if size > MAX_SOLVE_VERTICES:
        raise DomainError(
            "tree size", f"{size} vertices exceed the direct solve limit {MAX_SOLVE_VERTICES}"
        )
    child = np.arange(1, size)
    parent = topology.parents[1:]
    adjacency = sparse.coo_array(
        (
            np.ones(2 * (size - 1)),
            (np.concatenate((child, parent)), np.concatenate((parent, child))),
        ),
        shape=(size, size),
    )
    matrix = (adjacency + sparse.diags_array(instance.diagonal - z)).tocsc()
    rhs = np.zeros(size, dtype=complex)
    rhs[0] = 1.0
    psi = np.atleast_1d(spsolve(matrix, rhs))
    residual = float(np.linalg.norm(matrix @ psi - rhs))
    if not np.all(np.isfinite(psi)) or residual > RESIDUAL_TOLERANCE * np.linalg.norm(psi):
        raise NumericError(
            "solver_failed", {"residual": residual, "tolerance": RESIDUAL_TOLERANCE}
        )
    LOGGER.debug("Resolvent column on %d vertices, residual %.3e", size, residual)
    return PsiColumn(instance=instance, z=z, psi=psi, residual=residual)


def _layer_count(pot: PotentialSpec) -> int:
    """Number of pool layers required by a potential."""
    if pot.kind == PotentialKind.QUASI_PERIODIC:
        raise UnsupportedPotential("pool_iterate", pot.kind)
    if pot.kind == PotentialKind.RADIAL_PERIODIC:
        return pot.period
    return 1


def init_pool(
    K: int,
    z: SpectralPoint | complex,
    size: int = DEFAULT_POOL_SIZE,
    seed: int = 0,
    period: int = 1,
    initial: complex | None = None,
) -> GammaPool:
    """A pool whose samples all start at the free fixed point."""
    if size < MIN_POOL_SIZE:
        raise PoolTooSmall(size, MIN_POOL_SIZE)
    value = free_fixed_point(K, z) if initial is None else complex(initial)
    return GammaPool(layers=np.full((period, size), value), generation=0, seed=seed)


def _update_layer(
    target: np.ndarray,
    source: np.ndarray,
    branching: int,
    dis: DisorderSpec,
    background: float,
    z: complex,
    rng: np.random.Generator,
) -> None:
    """One sweep of elementary updates of target fed from source.

    Updates are applied in POOL_BATCHES vectorised batches; within a batch the
    children are read before any slot of the batch is overwritten.
    """
    size = target.shape[0]
    batch = -(-size // POOL_BATCHES)
    for start in range(0, size, batch):
        count = min(batch, size - start)
        if dis.correlation == Correlation.RADIAL:
            children = branching * source[rng.integers(0, size, count)]
        else:
            children = source[rng.integers(0, size, (count, branching))].sum(axis=1)
        omega = draw_disorder(dis, rng, count)
        slots = rng.integers(0, size, count)
        target[slots] = 1 / (dis.strength * omega + background - z - children)


def pool_iterate(
    pool: GammaPool,
    K: int,
    dis: DisorderSpec,
    pot: PotentialSpec,
    z: SpectralPoint | complex,
    sweeps: int,
) -> GammaPool:
    """Population dynamics for the law of Gamma; a pure function of its inputs."""
    z = spectral_parameter(z)
    require_positive_eta(z, "pool_iterate")
    period = _layer_count(pot)
    if pool.size < MIN_POOL_SIZE:
        raise PoolTooSmall(pool.size, MIN_POOL_SIZE)
    layers = pool.layers
    if layers.shape[0] != period:
        if layers.shape[0] != 1:
            raise InvalidPotential(f"pool has {layers.shape[0]} layers for period {period}")
        layers = np.repeat(layers, period, axis=0)
    layers = layers.copy()
    background = potential_profile(pot, period)
    rng = np.random.default_rng([pool.seed, pool.generation])
    for _ in range(sweeps):
        # Layer j is fed by generation j+1, layer period-1 by layer 0
        for layer in reversed(range(period)):
            _update_layer(
                layers[layer],
                layers[(layer + 1) % period],
                K,
                dis,
                float(background[layer]),
                z,
                rng,
            )
    assert_herglotz(layers, z, "pool_iterate")
    return GammaPool(layers=layers, generation=pool.generation + sweeps, seed=pool.seed)


def equilibrate(
    pool: GammaPool,
    K: int,
    dis: DisorderSpec,
    pot: PotentialSpec,
    z: SpectralPoint | complex,
    burn_in: int,
    sweeps: int,
) -> tuple[GammaPool, np.ndarray]:
    """Burn in, then measure; returns the pool and the per-sweep mean Im Gamma."""
    if burn_in:
        pool = pool_iterate(pool, K, dis, pot, z, burn_in)
    trace = np.empty(sweeps)
    for sweep in range(sweeps):
        pool = pool_iterate(pool, K, dis, pot, z, 1)
        trace[sweep] = pool.samples.imag.mean()
    LOGGER.debug(
        "Pool at z=%s after %d sweeps: mean Im Gamma %.6g",
        spectral_parameter(z),
        pool.generation,
        trace[-1] if sweeps else pool.samples.imag.mean(),
    )
    return pool, trace


def limit_schedule(
    fn: Callable[[float], T],
    eta0: float,
    tol: float,
    eta_min: float,
) -> tuple[T, float]:
    """Follow eta_j = eta0 * 2^-j until two rungs agree to tol."""
    previous = None
    value = None
    eta = eta0
    for eta in eta_ladder(eta0, eta_min):
        value = fn(eta)
        if previous is not None and cauchy_gap(previous, value) < tol:
            return value, eta
        previous = value
    LOGGER.warning("Ladder reached eta=%g without settling below %g", eta, tol)
    return value, eta
