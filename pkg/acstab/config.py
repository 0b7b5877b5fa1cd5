"""Experiment configuration files."""

from __future__ import annotations

from dataclasses import asdict
from enum import Enum
import json
import math
import os
from pathlib import Path
from typing import Any

import voluptuous as vol
from voluptuous import All, Any as AnyOf, Coerce, Length, Range

from .const import (
    DEFAULT_BURN_IN,
    DEFAULT_ETA0,
    DEFAULT_ETA_MIN,
    DEFAULT_LADDER_TOL,
    DEFAULT_POOL_SIZE,
    DEFAULT_SWEEPS,
    ENV_WORKERS,
    GOLDEN_FREQUENCY,
    LOGGER,
    MIN_POOL_SIZE,
    SCHEMA_VERSION,
    CheckKey,
    Correlation,
    DisorderFamily,
    ModelKind,
    PotentialKind,
)
from .exceptions import ConfigError
from .helpers import auto_type, flatten, unflatten
from .models import (
    DisorderSpec,
    ExperimentConfig,
    GridSettings,
    LadderSettings,
    OutputSettings,
    PoolSettings,
    PotentialSpec,
    QGraphSettings,
    TreeTopology,
    WireSettings,
)


def _as_list(value: Any) -> list:
    """Wrap a scalar in a list."""
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def _check_name(value: Any) -> CheckKey:
    """Validate a check name."""
    try:
        return CheckKey(value)
    except ValueError as err:
        raise vol.Invalid(f"unknown check '{value}'") from err


real = Coerce(float)
positive = All(real, Range(min=0, min_included=False))
non_negative = All(real, Range(min=0))
count = All(int, Range(min=1))

LADDER_SCHEMA = vol.Schema(
    {
        vol.Optional("eta0", default=DEFAULT_ETA0): positive,
        vol.Optional("eta_min", default=DEFAULT_ETA_MIN): positive,
        vol.Optional("tol", default=DEFAULT_LADDER_TOL): positive,
    }
)

CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional("schema_version", default=SCHEMA_VERSION): vol.In([SCHEMA_VERSION]),
        vol.Required("experiment"): All(str, Length(min=1)),
        vol.Optional("model", default=ModelKind.TREE.value): Coerce(ModelKind),
        vol.Optional("seed", default=0): All(int, Range(min=0)),
        vol.Optional("workers"): count,
        vol.Optional("alpha", default=0.25): All(real, Range(min=0, max=0.5, min_included=False)),
        vol.Optional("checks", default=[]): All(_as_list, [_check_name]),
        vol.Optional("topology", default={}): {
            vol.Optional("branching", default=2): All(int, Range(min=2)),
            vol.Optional("depth", default=16): All(int, Range(min=0)),
        },
        vol.Optional("disorder", default={}): {
            vol.Optional("family", default=DisorderFamily.UNIFORM.value): Coerce(DisorderFamily),
            vol.Optional("strength", default=0.0): non_negative,
            vol.Optional("correlation", default=Correlation.IID.value): Coerce(Correlation),
            vol.Optional("kappa", default=1.0): All(real, Range(min=0, max=1, min_included=False)),
            vol.Optional("sigma", default=1.0): positive,
            vol.Optional("cutoff", default=2.0): positive,
        },
        vol.Optional("potential", default={}): {
            vol.Optional("kind", default=PotentialKind.ZERO.value): Coerce(PotentialKind),
            vol.Optional("period", default=1): count,
            vol.Optional("values", default=[]): All(_as_list, [real]),
            vol.Optional("amplitude", default=0.0): real,
            vol.Optional("frequency", default=GOLDEN_FREQUENCY): real,
            vol.Optional("phase", default=0.0): real,
        },
        vol.Optional("grid", default={}): {
            vol.Optional("e_min", default=-3.5): real,
            vol.Optional("e_max", default=3.5): real,
            vol.Optional("points", default=141): All(int, Range(min=2)),
            vol.Optional("eta", default=1e-3): non_negative,
            vol.Optional("lambdas", default=[0.0]): All(_as_list, [non_negative], Length(min=1)),
            vol.Optional("interval", default=None): AnyOf(
                None, All([real], Length(min=2, max=2))
            ),
            vol.Optional("threshold", default=None): AnyOf(None, positive),
            vol.Optional("ladder", default=None): AnyOf(None, LADDER_SCHEMA),
        },
        vol.Optional("pool", default={}): {
            vol.Optional("size", default=DEFAULT_POOL_SIZE): All(int, Range(min=MIN_POOL_SIZE)),
            vol.Optional("burn_in", default=DEFAULT_BURN_IN): All(int, Range(min=0)),
            vol.Optional("sweeps", default=DEFAULT_SWEEPS): count,
        },
        vol.Optional("qgraph", default={}): {
            vol.Optional("length", default=1.0): positive,
            vol.Optional("depth", default=10): All(int, Range(min=0)),
            vol.Optional("alpha_root", default=0.0): All(
                real, Range(min=0, max=math.pi, max_included=False)
            ),
            vol.Optional("n_max", default=3): count,
            vol.Optional("correlation", default=Correlation.IID.value): Coerce(Correlation),
        },
        vol.Optional("wire", default={}): {
            vol.Optional("k", default=math.pi / 2): All(
                real, Range(min=0, max=math.pi, min_included=False, max_included=False)
            ),
            vol.Optional("coupling", default=1.0): All(real, vol.NotIn([0.0])),
        },
        vol.Optional("output", default={}): {
            vol.Optional("directory", default="out"): str,
            vol.Optional("prefix", default=""): str,
            vol.Optional("svg", default=True): bool,
            vol.Optional("figure_size", default=[6.4, 4.8]): All([positive], Length(min=2, max=2)),
        },
    }
)


def validate(data: dict[str, Any]) -> dict[str, Any]:
    """Validate a raw config mapping and fill in defaults."""
    try:
        return CONFIG_SCHEMA(data)
    except vol.MultipleInvalid as err:
        error = err.errors[0]
        field = ".".join(str(part) for part in error.path) or "<root>"
        raise ConfigError("config_invalid", {"field": field, "error": error.msg}) from err


def _env_workers() -> int:
    """Default worker count from the environment."""
    value = os.environ.get(ENV_WORKERS, "")
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError as err:
        raise ConfigError("config_invalid", {"field": ENV_WORKERS, "error": str(err)}) from err


def from_dict(data: dict[str, Any]) -> ExperimentConfig:
    """Build an ExperimentConfig from a raw mapping."""
    data = validate(data)
    grid = dict(data["grid"])
    if grid["e_min"] >= grid["e_max"]:
        raise ConfigError(
            "config_invalid", {"field": "grid.e_max", "error": "must exceed grid.e_min"}
        )
    if grid["interval"] is not None:
        grid["interval"] = tuple(grid["interval"])
    if grid["ladder"] is not None:
        grid["ladder"] = LadderSettings(**grid["ladder"])
    grid["lambdas"] = tuple(grid["lambdas"])
    potential = dict(data["potential"], values=tuple(data["potential"]["values"]))
    output = dict(data["output"], figure_size=tuple(data["output"]["figure_size"]))
    workers = data.get("workers") or _env_workers()
    return ExperimentConfig(
        experiment=data["experiment"],
        model=data["model"],
        topology=TreeTopology(**data["topology"]),
        disorder=DisorderSpec(**data["disorder"]),
        potential=PotentialSpec(**potential),
        grid=GridSettings(**grid),
        pool=PoolSettings(**data["pool"]),
        qgraph=QGraphSettings(**data["qgraph"]),
        wire=WireSettings(**data["wire"]),
        checks=tuple(data["checks"]),
        alpha=data["alpha"],
        seed=data["seed"],
        workers=max(1, workers),
        output=OutputSettings(**output),
        schema_version=data["schema_version"],
    )


def _plain(value: Any) -> Any:
    """JSON-ready copy of a dataclass dump."""
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, Enum):
        return value.value
    return value


def to_dict(config: ExperimentConfig) -> dict[str, Any]:
    """Serialise a config; from_dict(to_dict(config)) == config."""
    return _plain(asdict(config))


def read_json(path: str | Path) -> dict[str, Any]:
    """Read a JSON document with line and column diagnostics."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError("config_unreadable", {"path": str(path), "error": err}) from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(
            "config_syntax", {"line": err.lineno, "column": err.colno, "error": err.msg}
        ) from err
    if not isinstance(data, dict):
        raise ConfigError("config_invalid", {"field": "<root>", "error": "expected an object"})
    return data


def apply_overrides(
    data: dict[str, Any],
    seed: int | None = None,
    workers: int | None = None,
    out: str | None = None,
    sets: list[str] | None = None,
) -> dict[str, Any]:
    """Apply command line overrides to a raw config mapping."""
    flat = flatten(data)
    for item in sets or []:
        key, separator, value = item.partition("=")
        if not separator or not key:
            raise ConfigError("config_invalid", {"field": item, "error": "expected key=value"})
        key = key.strip()
        # A key replaces the whole section below it and any value above it
        parents = {key.rsplit(".", depth)[0] for depth in range(1, key.count(".") + 1)}
        for existing in list(flat):
            if existing.startswith(f"{key}.") or existing in parents:
                del flat[existing]
        flat[key] = auto_type(value.strip())
    if seed is not None:
        flat["seed"] = seed
    if workers is not None:
        flat["workers"] = workers
    if out is not None:
        flat["output.directory"] = out
    return unflatten(flat)


def load(path: str | Path, **overrides: Any) -> ExperimentConfig:
    """Read, override and validate an experiment config file."""
    data = apply_overrides(read_json(path), **overrides)
    config = from_dict(data)
    LOGGER.debug("Loaded config %s from %s", config.experiment, path)
    return config


def dump(config: ExperimentConfig, path: str | Path) -> None:
    """Write a config file that load() reads back unchanged."""
    Path(path).write_text(
        json.dumps(to_dict(config), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
