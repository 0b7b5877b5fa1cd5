"""Provides run metadata embedded in every artifact."""

from __future__ import annotations

from functools import cache
import json
from pathlib import Path
from typing import Any

from .config import read_json, to_dict
from .const import DOMAIN
from .exceptions import ConfigError
from .helpers import flatten, unflatten
from .models import ExperimentConfig

# Settings that do not change the numbers
REDACT = ["output.directory", "workers"]
REDACTED = "**REDACTED**"

HEADER_PREFIX = "# "


@cache
def version() -> str:
    """Package version from the manifest."""
    with open(Path(__file__).parent / "manifest.json", encoding="utf-8") as file:
        return json.load(file)["version"]


def redact_data(data: dict[str, Any], to_redact: list[str]) -> dict[str, Any]:
    """Replace the dotted keys to_redact with a marker."""
    flat = flatten(data)
    for key in to_redact:
        if key in flat:
            flat[key] = REDACTED
    return unflatten(flat)


def run_header(config: ExperimentConfig, command: str) -> dict[str, Any]:
    """Return the metadata describing one run."""
    return {
        "library": DOMAIN,
        "version": version(),
        "command": command,
        "config": redact_data(to_dict(config), REDACT),
    }


def header_lines(header: dict[str, Any]) -> list[str]:
    """The header as comment lines of a text artifact."""
    return [
        f"{HEADER_PREFIX}{key}: {json.dumps(value, sort_keys=True)}"
        for key, value in header.items()
    ]


def _strip_redacted(data: dict[str, Any]) -> dict[str, Any]:
    return unflatten({key: value for key, value in flatten(data).items() if value != REDACTED})


def config_from_header(path: str | Path) -> dict[str, Any]:
    """Raw config mapping recorded in a CSV or JSON artifact."""
    path = Path(path)
    if path.suffix == ".json":
        header = read_json(path).get("header", {})
    else:
        header = {}
        with open(path, encoding="utf-8") as file:
            for line in file:
                if not line.startswith(HEADER_PREFIX):
                    break
                key, _, value = line[len(HEADER_PREFIX) :].partition(": ")
                header[key] = json.loads(value)
    if "config" not in header:
        raise ConfigError("config_invalid", {"field": "header", "error": f"no config in {path}"})
    return _strip_redacted(header["config"])
