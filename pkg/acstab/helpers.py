"""acstab helper functions."""

from __future__ import annotations

from collections.abc import Callable, Iterator
from typing import Any

import numpy as np

from .const import LOGGER
from .exceptions import ConfigError, DomainError, NumericError
from .models import SpectralPoint


def flatten(
    data: dict[str, Any], parent: str | None = None, exceptions: tuple[str, ...] = ()
) -> dict[str, Any]:
    """Flatten a nested mapping into dotted keys."""
    result = {}
    for key, value in data.items():
        exception = key in exceptions
        if parent:
            key = f"{parent}.{key}"
        if isinstance(value, dict) and value and not exception:
            result.update(flatten(value, key, exceptions))
        else:
            result[key] = value
    return result


def unflatten(data: dict[str, Any]) -> dict[str, Any]:
    """Rebuild a nested mapping from dotted keys."""
    result: dict[str, Any] = {}
    for key, value in data.items():
        *parents, leaf = key.split(".")
        node = result
        for depth, parent in enumerate(parents, start=1):
            node = node.setdefault(parent, {})
            if not isinstance(node, dict):
                path = ".".join(parents[:depth])
                raise ConfigError(
                    "config_invalid", {"field": key, "error": f"{path} is not a section"}
                )
        if isinstance(node.get(leaf), dict):
            raise ConfigError("config_invalid", {"field": key, "error": "is a section"})
        node[leaf] = value
    return result


def auto_type(value) -> int | float | bool | str | list:
    """Automatically cast a string to a type."""

    if not isinstance(value, str):
        return value

    if "," in value:
        return [auto_type(item.strip()) for item in value.split(",") if item.strip()]

    if value.lstrip("-").isdigit():
        return int(value)
    try:
        return float(value)
    except ValueError:
        pass

    if value.lower() in ["true", "false"]:
        return value.lower() == "true"

    if value.lower() in ["null", "none"]:
        return None

    return value


def spectral_parameter(z: SpectralPoint | complex | float) -> complex:
    """Return z as a complex number in the closed upper half plane."""
    if isinstance(z, SpectralPoint):
        return z.z
    z = complex(z)
    if z.imag < 0:
        raise DomainError("eta", f"Im z = {z.imag} < 0")
    return z


def require_positive_eta(z: complex, quantity: str) -> None:
    """Reject spectral parameters on the real axis."""
    if z.imag <= 0:
        raise DomainError(quantity, f"needs eta > 0, got z = {z}")


def assert_herglotz(values, z: complex, quantity: str) -> None:
    """Raise when a Green quantity left the upper half plane for eta > 0."""
    if z.imag <= 0:
        return
    imag = np.imag(np.asarray(values))
    if np.any(~(imag > 0)):
        worst = complex(np.ravel(values)[int(np.argmin(np.ravel(imag)))])
        raise NumericError(
            "herglotz_violation", {"quantity": quantity, "value": worst, "z": z}
        )


def point_seed(master: int, *index: int) -> int:
    """Derive an independent 63 bit seed for one grid point."""
    sequence = np.random.SeedSequence([master, *index])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def side_stream(seed: int, tag: int) -> np.random.Generator:
    """Generator for auxiliary draws, disjoint from the pool streams [seed, generation]."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tag,)))


def jackknife(
    values: np.ndarray,
    statistic: Callable[[np.ndarray], float] = np.mean,
    blocks: int = 32,
) -> tuple[float, float]:
    """Blocked jackknife estimate and standard error of a statistic."""
    values = np.asarray(values)
    estimate = float(statistic(values))
    count = min(blocks, len(values))
    if count < 2:
        return estimate, 0.0
    chunks = np.array_split(values, count)
    if statistic is np.mean:
        # Leave-one-out means without re-concatenating
        total = values.sum()
        partial = np.array(
            [(total - chunk.sum()) / (len(values) - len(chunk)) for chunk in chunks]
        )
    else:
        partial = np.array(
            [
                statistic(np.concatenate(chunks[:i] + chunks[i + 1 :]))
                for i in range(count)
            ]
        )
    spread = ((count - 1) / count * np.sum((partial - partial.mean()) ** 2)) ** 0.5
    return estimate, float(spread)


def eta_ladder(eta0: float, eta_min: float) -> Iterator[float]:
    """Yield eta0 * 2^-j down to and including the first rung at or below eta_min."""
    if eta0 <= 0 or eta_min <= 0:
        raise DomainError("eta ladder", f"eta0={eta0}, eta_min={eta_min} must be positive")
    eta = eta0
    while True:
        yield eta
        if eta <= eta_min:
            return
        eta = max(eta / 2, eta_min)


def cauchy_gap(previous, current) -> float:
    """Largest absolute change between two rungs of a ladder."""
    return float(np.max(np.abs(np.asarray(current) - np.asarray(previous))))


def cell_widths(energies: np.ndarray) -> np.ndarray:
    """Width of the grid cell represented by each point."""
    energies = np.asarray(energies, dtype=float)
    if len(energies) < 2:
        return np.zeros_like(energies)
    edges = np.concatenate(
        ([energies[0]], (energies[1:] + energies[:-1]) / 2, [energies[-1]])
    )
    return np.diff(edges)


def log_summary(name: str, **values: Any) -> None:
    """Log a one line summary of a computation."""
    LOGGER.info(
        "%s: %s", name, ", ".join(f"{key}={value}" for key, value in values.items())
    )
