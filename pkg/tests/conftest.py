"""Fixtures for acstab tests."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from acstab.models import DisorderSpec, PoolSettings, TreeTopology


@pytest.fixture
def small_pool() -> PoolSettings:
    """Smallest pool accepted by the library, with short runs."""
    return PoolSettings(size=1000, burn_in=2, sweeps=2)


@pytest.fixture
def binary_tree() -> TreeTopology:
    """Binary tree of depth 6."""
    return TreeTopology(branching=2, depth=6)


@pytest.fixture
def uniform_disorder() -> DisorderSpec:
    """Uniform iid disorder at strength 0.4."""
    return DisorderSpec(strength=0.4)


@pytest.fixture
def raw_config() -> dict:
    """A cheap experiment config as a raw mapping."""
    return {
        "experiment": "unit",
        "seed": 7,
        "topology": {"branching": 2, "depth": 6},
        "grid": {"e_min": -1.0, "e_max": 1.0, "points": 5, "eta": 0.01, "lambdas": [0.0]},
        "pool": {"size": 1000, "burn_in": 1, "sweeps": 1},
        "qgraph": {"depth": 4},
    }


@pytest.fixture
def config_file(tmp_path: Path, raw_config: dict) -> Path:
    """The cheap config written to disk."""
    path = tmp_path / "unit.json"
    path.write_text(json.dumps(raw_config), encoding="utf-8")
    return path
