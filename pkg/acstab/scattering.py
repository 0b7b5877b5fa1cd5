"""A discrete wire attached to the root of the tree.

Wire sites are n = -1, -2, ... with the operator 2 - shift - shift^-1 + C
and the incoming wave psi_n = e^{ikn} + r e^{-ikn}. Site -1 hops to the
root with amplitude -t, the tree keeps its own adjacency. The decaying
tree solution is psi_y = -Gamma_y psi_root on forward neighbours, so the
root equation reduces to psi_root = t Gamma_root psi_-1 and the wire
equation at site -1 to t psi_root = 1 + r.
"""

from __future__ import annotations

from collections.abc import Sequence
import cmath
import math

import numpy as np

from .const import LOGGER, PotentialKind
from .exceptions import SingularJunctionError
from .green import free_fixed_point
from .models import (
    DisorderSpec,
    EquivalenceReport,
    JunctionCurrents,
    LadderSettings,
    PoolSettings,
    PotentialSpec,
    WireSpec,
)
from .spectral import pool_sweep


def choose_wire(energy: float, k: float = math.pi / 2, coupling: float = 1.0) -> WireSpec:
    """Wire whose band places the energy at momentum k."""
    return WireSpec(potential=energy - 4 * math.sin(k / 2) ** 2, k=k, coupling=coupling)


def _denominator(gamma_root: complex, wire: WireSpec) -> complex:
    denominator = 1 - wire.coupling**2 * gamma_root * cmath.exp(1j * wire.k)
    if denominator == 0:
        raise SingularJunctionError(wire.k, gamma_root)
    return denominator


def reflection(gamma_root: complex, wire: WireSpec) -> complex:
    """Reflection coefficient of the wave sent down the wire."""
    gamma_root = complex(gamma_root)
    loaded = wire.coupling**2 * gamma_root
    return (loaded * cmath.exp(-1j * wire.k) - 1) / _denominator(gamma_root, wire)


def junction_currents(gamma_root: complex, wire: WireSpec, eta: float = 0.0) -> JunctionCurrents:
    """Flux balance at the junction.

    The incoming minus reflected flux equals the current into the root, which
    splits into the loss eta*|psi_root|^2 and the current into the children.
    """
    gamma_root = complex(gamma_root)
    sin = math.sin(wire.k)
    r = reflection(gamma_root, wire)
    last_site = -2j * sin / _denominator(gamma_root, wire)
    into_tree = abs(wire.coupling * last_site) ** 2 * gamma_root.imag
    weight = abs(wire.coupling * gamma_root * last_site) ** 2
    absorbed = eta * weight
    return JunctionCurrents(
        incoming=sin,
        reflected=sin * abs(r) ** 2,
        into_tree=into_tree,
        absorbed_at_root=absorbed,
        into_children=into_tree - absorbed,
    )


def root_gammas(
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
) -> np.ndarray:
    """Root Gamma per energy, closed form for the free tree and pool means otherwise."""
    if dis.strength == 0 and pot.kind == PotentialKind.ZERO:
        return np.array([free_fixed_point(K, complex(energy, eta)) for energy in energies])
    summaries = pool_sweep(energies, K, dis, pot, eta, pool, seed, ladder, workers, offset)
    return np.array([summary.mean_gamma for summary in summaries])


def equivalence_scan(
    energies: Sequence[float],
    gammas: Sequence[complex],
    k: float = math.pi / 2,
    coupling: float = 1.0,
    threshold: float = 1e-9,
    r_tol: float = 1e-12,
) -> EquivalenceReport:
    """Compare |r| < 1 with Im Gamma_root > threshold point by point.

    Both neighbours of every flip of the Im Gamma indicator are band edge
    cells and are left out of the comparison.
    """
    energies = np.asarray(energies, dtype=float)
    gammas = np.asarray(gammas, dtype=complex)
    reflections = np.array(
        [
            reflection(gamma, choose_wire(float(energy), k, coupling))
            for energy, gamma in zip(energies, gammas, strict=True)
        ]
    )
    conducting = gammas.imag > threshold
    absorbing = np.abs(reflections) < 1 - r_tol
    flips = np.flatnonzero(conducting[1:] != conducting[:-1])
    excluded = sorted({int(index) for flip in flips for index in (flip, flip + 1)})
    mask = np.ones(len(energies), dtype=bool)
    mask[excluded] = False
    disagreements = tuple(int(index) for index in np.flatnonzero((conducting != absorbing) & mask))
    if disagreements:
        LOGGER.warning(
            "Reflection and Im Gamma disagree at %d energies, first E=%g",
            len(disagreements),
            energies[disagreements[0]],
        )
    return EquivalenceReport(
        energies=energies,
        reflections=reflections,
        im_gamma=gammas.imag,
        excluded=tuple(excluded),
        disagreements=disagreements,
    )


def spectrum_disagreements(
    report: EquivalenceReport, edge: float, spread: float, r_tol: float = 1e-3
) -> tuple[int, ...]:
    """Energies where |r| < 1 - r_tol disagrees with |E| < edge.

    Energies within spread of +-edge are not compared. The reflections must come
    from the eta -> 0 limit for the comparison to see the spectrum.
    """
    distance = np.abs(np.abs(report.energies) - edge)
    inside = np.abs(report.energies) < edge
    absorbing = np.abs(report.reflections) < 1 - r_tol
    disagreements = tuple(
        int(index) for index in np.flatnonzero((inside != absorbing) & (distance > spread))
    )
    if disagreements:
        LOGGER.warning(
            "Reflection disagrees with the band |E| < %g at %d energies, first E=%g",
            edge,
            len(disagreements),
            report.energies[disagreements[0]],
        )
    return disagreements
