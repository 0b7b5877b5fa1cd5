"""Constants used by the acstab package."""

from __future__ import annotations

from enum import IntEnum, StrEnum
import logging
import math

DOMAIN = "acstab"

LOGGER = logging.getLogger(__package__)

SCHEMA_VERSION = 1

ENV_WORKERS = "ACSTAB_WORKERS"

GOLDEN_FREQUENCY = (math.sqrt(5) - 1) / 2

# Pool defaults
MIN_POOL_SIZE = 1000
DEFAULT_POOL_SIZE = 100_000
DEFAULT_BURN_IN = 100
DEFAULT_SWEEPS = 200
POOL_BATCHES = 16

# Exact solves on finite trees
DEFAULT_DEPTH = 16
MAX_SOLVE_VERTICES = 200_000

# Tolerances
VIOLATION_SIGMAS = 3.0
RESIDUAL_TOLERANCE = 1e-10
FIXED_POINT_TOLERANCE = 1e-12

# Limit schedule defaults
DEFAULT_ETA0 = 1e-1
DEFAULT_ETA_MIN = 1e-6
DEFAULT_LADDER_TOL = 1e-6

# Quantum graph ac cells: Im m must settle when eta shrinks by ETA_STEP
QG_ETA_STEP = 10.0
QG_RETENTION = 0.5


class DisorderFamily(StrEnum):
    """Bounded single-site distributions."""

    UNIFORM = "uniform"
    TWO_POINT = "two-point"
    TRUNCATED_GAUSSIAN = "truncated-gaussian"


class Correlation(StrEnum):
    """How disorder values are shared across the tree."""

    IID = "iid"
    RADIAL = "radial"


class PotentialKind(StrEnum):
    """Background potential shapes."""

    ZERO = "zero"
    RADIAL_PERIODIC = "radial-periodic"
    QUASI_PERIODIC = "quasi-periodic"


class ModelKind(StrEnum):
    """Model sections of an experiment config."""

    TREE = "tree"
    QGRAPH = "qgraph"
    SCATTERING = "scattering"


class CheckKey(StrEnum):
    """Named verification checks."""

    FREE_FIXED_POINT = "free-fixed-point"
    RADIAL_IDENTITY = "radial-identity"
    QP_RADIAL_IDENTITY = "qp-radial-identity"
    JENSEN_BOOST = "jensen-boost"
    FLU1 = "flu1"
    FLU2 = "flu2"
    LOG_CURRENT = "log-current"
    CURRENT_DEFICIT = "current-deficit"
    RADIAL_INSTABILITY = "radial-instability"
    L1_CONVERGENCE = "l1-convergence"
    AC_MEASURE_STABILITY = "ac-measure-stability"
    LYAPUNOV_FREE = "lyapunov-free"
    HARMONICITY = "harmonicity"
    ENERGY_AVERAGED_LYAPUNOV = "energy-averaged-lyapunov"
    QGRAPH_BANDS = "qgraph-bands"
    QGRAPH_STABILITY = "qgraph-stability"
    EQUIVALENCE = "equivalence"


class ExitCode(IntEnum):
    """Process exit codes of the command line runner."""

    SUCCESS = 0
    CHECK_FAILURE = 1
    CONFIG_ERROR = 2
    NUMERIC_ERROR = 3
