"""The acstab data models."""

from __future__ import annotations

from dataclasses import dataclass, field
import hashlib
import math
from typing import Any

import numpy as np
from propcache.api import cached_property

from .const import (
    DEFAULT_BURN_IN,
    DEFAULT_ETA0,
    DEFAULT_ETA_MIN,
    DEFAULT_LADDER_TOL,
    DEFAULT_POOL_SIZE,
    DEFAULT_SWEEPS,
    GOLDEN_FREQUENCY,
    SCHEMA_VERSION,
    CheckKey,
    Correlation,
    DisorderFamily,
    ModelKind,
    PotentialKind,
)
from .exceptions import DomainError, InvalidDisorder, InvalidTopology


def _frozen(array: np.ndarray) -> np.ndarray:
    """Mark an array read-only and return it."""
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class VertexId:
    """A vertex of the rooted tree, addressed by its child-index path."""

    path: tuple[int, ...] = ()

    @property
    def generation(self) -> int:
        """Distance to the root."""
        return len(self.path)

    @property
    def backward(self) -> VertexId | None:
        """The backward neighbour, None at the root."""
        if not self.path:
            return None
        return VertexId(self.path[:-1])

    def child(self, index: int) -> VertexId:
        """Return the forward neighbour with the given child index."""
        return VertexId((*self.path, index))


@dataclass(frozen=True)
class TreeTopology:
    """Finite truncation of the rooted K-ary tree, stored breadth first."""

    branching: int
    depth: int

    def __post_init__(self) -> None:
        """Validate the topology."""
        if self.branching < 2:
            raise InvalidTopology(f"branching K={self.branching} must be at least 2")
        if self.depth < 0:
            raise InvalidTopology(f"depth D={self.depth} must be non-negative")

    @cached_property
    def offsets(self) -> np.ndarray:
        """Index of the first vertex of every generation, plus the end marker."""
        sizes = self.branching ** np.arange(self.depth + 1, dtype=np.int64)
        return np.concatenate(([0], np.cumsum(sizes)))

    @cached_property
    def vertex_count(self) -> int:
        """Total number of vertices, sum of K^n for n = 0..D."""
        return int(self.offsets[-1])

    @cached_property
    def generations(self) -> np.ndarray:
        """Generation of every vertex in breadth-first order."""
        sizes = np.diff(self.offsets)
        return np.repeat(np.arange(self.depth + 1), sizes)

    @cached_property
    def parents(self) -> np.ndarray:
        """Backward neighbour index of every vertex, -1 at the root."""
        index = np.arange(self.vertex_count, dtype=np.int64)
        return np.where(index > 0, (index - 1) // self.branching, -1)

    def generation_slice(self, generation: int) -> slice:
        """Slice of the breadth-first storage holding one generation."""
        return slice(int(self.offsets[generation]), int(self.offsets[generation + 1]))

    def index_of(self, vertex: VertexId) -> int:
        """Breadth-first index of a vertex."""
        if vertex.generation > self.depth:
            raise InvalidTopology(f"vertex {vertex.path} is deeper than D={self.depth}")
        position = 0
        for digit in vertex.path:
            if not 0 <= digit < self.branching:
                raise InvalidTopology(f"child index {digit} outside 0..{self.branching - 1}")
            position = position * self.branching + digit
        return int(self.offsets[vertex.generation]) + position

    def vertex_at(self, index: int) -> VertexId:
        """Vertex stored at a breadth-first index."""
        path: list[int] = []
        while index > 0:
            path.append((index - 1) % self.branching)
            index = (index - 1) // self.branching
        return VertexId(tuple(reversed(path)))


@dataclass(frozen=True)
class DisorderSpec:
    """The random variables attached to the vertices (or edges)."""

    family: DisorderFamily = DisorderFamily.UNIFORM
    strength: float = 0.0
    correlation: Correlation = Correlation.IID
    kappa: float = 1.0
    sigma: float = 1.0
    cutoff: float = 2.0

    def __post_init__(self) -> None:
        """Validate and normalise the disorder description."""
        if self.correlation == Correlation.IID and self.kappa != 1.0:
            # Independent fields are weakly correlated with kappa exactly 1
            object.__setattr__(self, "kappa", 1.0)
        if not 0.0 < self.kappa <= 1.0:
            raise InvalidDisorder(f"kappa={self.kappa} must lie in (0, 1]")
        if self.family == DisorderFamily.TRUNCATED_GAUSSIAN and (
            self.sigma <= 0 or self.cutoff <= 0
        ):
            raise InvalidDisorder("truncated gaussian needs sigma > 0 and cutoff > 0")

    @property
    def support(self) -> float:
        """Bound on |omega| for the family."""
        if self.family == DisorderFamily.TRUNCATED_GAUSSIAN:
            return self.cutoff
        return 1.0


@dataclass(frozen=True)
class PotentialSpec:
    """The radial background potential U."""

    kind: PotentialKind = PotentialKind.ZERO
    period: int = 1
    values: tuple[float, ...] = ()
    amplitude: float = 0.0
    frequency: float = GOLDEN_FREQUENCY
    phase: float = 0.0


@dataclass(frozen=True, eq=False)
class TreeInstance:
    """A finite tree with disorder and potential values.

    draws holds one value per generation for radial instances and one per vertex
    otherwise; profile holds U per generation. Per-vertex arrays are expanded on
    first use.
    """

    topology: TreeTopology
    disorder: DisorderSpec
    potential: PotentialSpec
    seed: int
    draws: np.ndarray
    profile: np.ndarray

    @property
    def radial(self) -> bool:
        """Whether the on-site term depends on the generation only."""
        return self.disorder.correlation == Correlation.RADIAL or self.disorder.strength == 0

    @cached_property
    def omega(self) -> np.ndarray:
        """Disorder value of every vertex."""
        if not self.radial:
            return self.draws
        return _frozen(self.draws[self.topology.generations])

    @cached_property
    def background(self) -> np.ndarray:
        """Background potential U of every vertex."""
        return _frozen(self.profile[self.topology.generations])

    @cached_property
    def diagonal(self) -> np.ndarray:
        """On-site term lambda*omega_x + U_x."""
        return _frozen(self.disorder.strength * self.omega + self.background)

    @cached_property
    def generation_diagonal(self) -> np.ndarray:
        """On-site term of every generation of a radial instance."""
        if not self.radial:
            raise DomainError("instance", "on-site values differ within a generation")
        return _frozen(self.disorder.strength * self.draws + self.profile)

    def fingerprint(self) -> str:
        """Digest of every stored array, equal for bit-identical instances."""
        digest = hashlib.sha256()
        for array in (self.draws, self.profile):
            digest.update(np.ascontiguousarray(array).tobytes())
        return digest.hexdigest()


@dataclass(frozen=True)
class SpectralPoint:
    """A point E + i*eta of the closed upper half plane."""

    energy: float
    eta: float = 0.0

    def __post_init__(self) -> None:
        """Reject points below the real axis."""
        if self.eta < 0:
            raise DomainError("eta", f"{self.eta} < 0")

    @property
    def z(self) -> complex:
        """The complex spectral parameter."""
        return complex(self.energy, self.eta)


@dataclass(frozen=True, eq=False)
class GammaPool:
    """Monte Carlo population representing the law of Gamma.

    For a radial potential of period tau the pool holds one layer per residue
    of the generation modulo tau; layer 0 is the root layer.
    """

    layers: np.ndarray
    generation: int = 0
    seed: int = 0

    @property
    def samples(self) -> np.ndarray:
        """Samples of the root layer."""
        return self.layers[0]

    @property
    def size(self) -> int:
        """Number of samples per layer."""
        return int(self.layers.shape[1])

    @property
    def period(self) -> int:
        """Number of layers."""
        return int(self.layers.shape[0])


@dataclass(frozen=True, eq=False)
class PsiColumn:
    """Resolvent column psi = (H - z)^-1 delta_0 on a finite tree."""

    instance: TreeInstance
    z: complex
    psi: np.ndarray
    residual: float


@dataclass(frozen=True)
class QuantileWidth:
    """Relative alpha-width of a positive sample."""

    alpha: float
    xi_minus: float
    xi_plus: float
    delta: float


@dataclass(frozen=True)
class LyapunovEstimate:
    """Lyapunov exponent estimate with its standard error."""

    gamma: float
    stderr: float


@dataclass(frozen=True)
class PoolSummary:
    """Observables of one equilibrated pool."""

    energy: float
    eta: float
    mean_gamma: complex
    mean_im: float
    stderr: float
    typical_im: float
    lyapunov: LyapunovEstimate


@dataclass(frozen=True, eq=False)
class DensityCurve:
    """Root ac-density estimates on an energy grid."""

    energies: np.ndarray
    eta: float
    strength: float
    mean_im: np.ndarray
    stderr: np.ndarray

    @property
    def density(self) -> np.ndarray:
        """Density of states estimate, mean Im Gamma / pi."""
        return np.clip(self.mean_im, 0.0, None) / math.pi

    @property
    def points(self) -> list[SpectralPoint]:
        """The grid as spectral points."""
        return [SpectralPoint(float(e), self.eta) for e in self.energies]


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one inequality or identity check."""

    check: str
    lhs: float
    rhs: float
    slack: float
    stderr: float
    passed: bool

    def as_dict(self) -> dict[str, Any]:
        """Serialise to the report schema."""
        return {
            "check": self.check,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "stderr": self.stderr,
            "pass": self.passed,
        }


@dataclass(frozen=True, eq=False)
class CurrentReport:
    """Per-vertex current deficits compared with eta*|psi|^2."""

    deficits: np.ndarray
    expected: np.ndarray
    max_error: float
    scale: float
    min_deficit: float
    skipped: tuple[int, ...] = ()

    @property
    def passed(self) -> bool:
        """Identity holds to relative 1e-10 and deficits are non-negative."""
        return self.max_error < 1e-10 * self.scale and self.min_deficit >= -1e-10 * self.scale


@dataclass(frozen=True)
class JunctionCurrents:
    """Probability currents at the wire-tree junction."""

    incoming: float
    reflected: float
    into_tree: float
    absorbed_at_root: float
    into_children: float

    @property
    def net_wire(self) -> float:
        """Incoming minus reflected flux."""
        return self.incoming - self.reflected


@dataclass(frozen=True, eq=False)
class EquivalenceReport:
    """Comparison of |r| < 1 with the Im Gamma indicator over an energy grid."""

    energies: np.ndarray
    reflections: np.ndarray
    im_gamma: np.ndarray
    excluded: tuple[int, ...]
    disagreements: tuple[int, ...]

    @property
    def max_abs_r(self) -> float:
        """Largest |r| over the grid."""
        return float(np.max(np.abs(self.reflections)))


@dataclass(frozen=True, eq=False)
class QGraphInstance:
    """A metric tree whose edge e_x ends at vertex x."""

    topology: TreeTopology
    length: float
    strength: float
    omega: np.ndarray
    alpha_root: float = 0.0
    seed: int = 0
    correlation: Correlation = Correlation.IID

    def __post_init__(self) -> None:
        """Validate the base length and boundary angle."""
        if self.length <= 0:
            raise InvalidTopology(f"edge length L={self.length} must be positive")
        if not 0.0 <= self.alpha_root < math.pi:
            raise InvalidTopology(f"root angle {self.alpha_root} outside [0, pi)")

    @cached_property
    def lengths(self) -> np.ndarray:
        """Edge lengths L*exp(lambda*omega_e)."""
        return self.length * np.exp(self.strength * self.omega)


@dataclass(frozen=True)
class Band:
    """One band of the regular quantum tree."""

    n: int
    k_lo: float
    k_hi: float
    e_lo: float
    e_hi: float


@dataclass(frozen=True)
class BandList:
    """Ordered, disjoint energy bands."""

    bands: tuple[Band, ...]

    def __iter__(self):
        """Iterate over the bands."""
        return iter(self.bands)

    def __len__(self) -> int:
        """Number of bands."""
        return len(self.bands)

    def __getitem__(self, index: int) -> Band:
        """Band by position."""
        return self.bands[index]

    def measure_in(self, lower: float, upper: float) -> float:
        """Lebesgue measure of the union of bands inside [lower, upper]."""
        return sum(
            max(0.0, min(band.e_hi, upper) - max(band.e_lo, lower)) for band in self.bands
        )


@dataclass(frozen=True)
class QGraphMeasure:
    """Measure of the detected ac set of a quantum tree at one disorder strength."""

    strength: float
    measure: float
    stderr: float


@dataclass(frozen=True)
class WireSpec:
    """Semi-infinite discrete wire attached to the root."""

    potential: float
    k: float = math.pi / 2
    coupling: float = 1.0

    def __post_init__(self) -> None:
        """Validate the momentum and coupling."""
        if not 0.0 < self.k < math.pi:
            raise DomainError("wire momentum", f"k={self.k} outside (0, pi)")
        if self.coupling == 0:
            raise DomainError("wire coupling", "t must be non-zero")

    @property
    def energy(self) -> float:
        """Real energy 4 sin^2(k/2) + C carried by the wire."""
        return 4 * math.sin(self.k / 2) ** 2 + self.potential


@dataclass(frozen=True)
class LadderSettings:
    """Geometric eta ladder eta0 * 2^-j with Cauchy stopping."""

    eta0: float = DEFAULT_ETA0
    eta_min: float = DEFAULT_ETA_MIN
    tol: float = DEFAULT_LADDER_TOL


@dataclass(frozen=True)
class GridSettings:
    """Energy grid, broadening and disorder strengths of a sweep."""

    e_min: float = -3.5
    e_max: float = 3.5
    points: int = 141
    eta: float = 1e-3
    lambdas: tuple[float, ...] = (0.0,)
    interval: tuple[float, float] | None = None
    threshold: float | None = None
    ladder: LadderSettings | None = None

    @property
    def energies(self) -> np.ndarray:
        """The energy grid."""
        return np.linspace(self.e_min, self.e_max, self.points)


@dataclass(frozen=True)
class PoolSettings:
    """Population dynamics parameters."""

    size: int = DEFAULT_POOL_SIZE
    burn_in: int = DEFAULT_BURN_IN
    sweeps: int = DEFAULT_SWEEPS


@dataclass(frozen=True)
class QGraphSettings:
    """Quantum tree graph parameters."""

    length: float = 1.0
    depth: int = 10
    alpha_root: float = 0.0
    n_max: int = 3
    correlation: Correlation = Correlation.IID


@dataclass(frozen=True)
class WireSettings:
    """Scattering wire parameters."""

    k: float = math.pi / 2
    coupling: float = 1.0


@dataclass(frozen=True)
class OutputSettings:
    """Where artifacts are written."""

    directory: str = "out"
    prefix: str = ""
    svg: bool = True
    figure_size: tuple[float, float] = (6.4, 4.8)


@dataclass(frozen=True)
class ExperimentConfig:
    """A complete, validated experiment description."""

    experiment: str
    model: ModelKind = ModelKind.TREE
    topology: TreeTopology = field(default_factory=lambda: TreeTopology(2, 16))
    disorder: DisorderSpec = field(default_factory=DisorderSpec)
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    grid: GridSettings = field(default_factory=GridSettings)
    pool: PoolSettings = field(default_factory=PoolSettings)
    qgraph: QGraphSettings = field(default_factory=QGraphSettings)
    wire: WireSettings = field(default_factory=WireSettings)
    checks: tuple[CheckKey, ...] = ()
    alpha: float = 0.25
    seed: int = 0
    workers: int = 1
    output: OutputSettings = field(default_factory=OutputSettings)
    schema_version: int = SCHEMA_VERSION
