"""Regular rooted trees with disorder and background potentials."""

from __future__ import annotations

from itertools import accumulate, repeat
import math

import numpy as np
from scipy.stats import truncnorm

from .const import LOGGER, Correlation, DisorderFamily, PotentialKind
from .exceptions import InvalidPotential
from .models import DisorderSpec, PotentialSpec, TreeInstance, TreeTopology, VertexId

TAU = 2 * math.pi


def draw_disorder(spec: DisorderSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw independent single-site values from the disorder family."""
    if spec.family == DisorderFamily.UNIFORM:
        return rng.uniform(-1.0, 1.0, size)
    if spec.family == DisorderFamily.TWO_POINT:
        return np.where(rng.random(size) < 0.5, -1.0, 1.0)
    bound = spec.cutoff / spec.sigma
    return np.atleast_1d(
        truncnorm.rvs(-bound, bound, scale=spec.sigma, size=size, random_state=rng)
    )


def disorder_std(spec: DisorderSpec) -> float:
    """Standard deviation of the single-site law."""
    if spec.family == DisorderFamily.UNIFORM:
        return 1 / math.sqrt(3)
    if spec.family == DisorderFamily.TWO_POINT:
        return 1.0
    bound = spec.cutoff / spec.sigma
    return float(truncnorm.std(-bound, bound, scale=spec.sigma))


def torus_orbit(theta: float, frequency: float, count: int) -> list[float]:
    """Phases theta, S(theta), S^2(theta), ... of the rotation S by 2*pi*frequency."""
    shift = TAU * frequency
    return list(
        accumulate(
            repeat(shift, max(count - 1, 0)),
            lambda phase, step: (phase + step) % TAU,
            initial=theta % TAU,
        )
    )[:count]


def validate_potential(spec: PotentialSpec) -> None:
    """Raise for potentials that cannot be evaluated."""
    if spec.kind != PotentialKind.RADIAL_PERIODIC:
        return
    if spec.period < 1 or not spec.values:
        raise InvalidPotential(f"radial-periodic needs a period >= 1 and values, got {spec.period}")
    if len(spec.values) != spec.period:
        raise InvalidPotential(
            f"{len(spec.values)} values given for period {spec.period}"
        )


def potential_profile(spec: PotentialSpec, generations: int) -> np.ndarray:
    """Background values U_n for generations n = 0..generations-1."""
    validate_potential(spec)
    if spec.kind == PotentialKind.ZERO:
        return np.zeros(generations)
    if spec.kind == PotentialKind.RADIAL_PERIODIC:
        return np.asarray(spec.values, dtype=float)[np.arange(generations) % spec.period]
    phases = torus_orbit(spec.phase, spec.frequency, generations)
    return spec.amplitude * np.cos(np.asarray(phases))


def build_instance(
    topology: TreeTopology, dis: DisorderSpec, pot: PotentialSpec, seed: int
) -> TreeInstance:
    """Build a tree instance; the result is a pure function of its arguments.

    Radial or disorder-free instances draw one value per generation, so their
    size does not grow with the vertex count.
    """
    rng = np.random.default_rng(seed)
    radial = dis.correlation == Correlation.RADIAL or dis.strength == 0
    draws = draw_disorder(dis, rng, topology.depth + 1 if radial else topology.vertex_count)
    profile = potential_profile(pot, topology.depth + 1)
    for array in (draws, profile):
        array.setflags(write=False)
    LOGGER.debug(
        "Built tree K=%d D=%d with %d vertices and %d draws",
        topology.branching,
        topology.depth,
        topology.vertex_count,
        len(draws),
    )
    return TreeInstance(
        topology=topology,
        disorder=dis,
        potential=pot,
        seed=seed,
        draws=draws,
        profile=profile,
    )


def forward_neighbors(topology: TreeTopology, v: VertexId) -> list[VertexId]:
    """The K children of a vertex in index order, empty at the leaves."""
    topology.index_of(v)
    if v.generation >= topology.depth:
        return []
    return [v.child(index) for index in range(topology.branching)]


def radial_data(instance: TreeInstance) -> tuple[np.ndarray, np.ndarray]:
    """Per-generation (U_n, xi_n) of an instance whose values are radial."""
    if instance.radial:
        return instance.profile, instance.draws
    return instance.profile, instance.omega[instance.topology.offsets[:-1]]
