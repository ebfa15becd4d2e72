from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..core.errors import CopyWithOneEdgeError, InvalidSetError, PreconditionError, SizeMismatchError
from .fpn import FpnSpace

Edge = Tuple[int, int]


# --------------------------------------------------------------- graph_core

class TriangleIndex(BaseModel):
    """Every triangle of a graph plus the number of triangles through each edge."""

    triangles: List[Tuple[int, int, int]]
    edge_counts: Dict[Edge, int]

    def max_count(self) -> int:
        return max(self.edge_counts.values(), default=0)


class HomCopy(BaseModel):
    """A subgraph of the host that is the image of a homomorphism from the pattern."""

    model_config = ConfigDict(frozen=True)

    vertices: Tuple[int, ...]
    edges: Tuple[Edge, ...]


# ------------------------------------------------------ graph_constructions

class ApFreeSet(BaseModel):
    """A subset of ``{1..N}`` with no 3-term arithmetic progression."""

    model_config = ConfigDict(frozen=True)

    N: int
    elements: Tuple[int, ...]
    method: str = "given"

    @model_validator(mode="after")
    def _check(self) -> "ApFreeSet":
        from ..services.graph_constructions import find_three_term_progression

        if self.N < 1:
            raise InvalidSetError("range bound must be at least 1")
        if list(self.elements) != sorted(set(self.elements)):
            raise InvalidSetError("elements must be strictly increasing")
        if self.elements and (self.elements[0] < 1 or self.elements[-1] > self.N):
            raise InvalidSetError(f"elements must lie in [1, {self.N}]")
        progression = find_three_term_progression(self.elements)
        if progression is not None:
            raise InvalidSetError(f"set contains the progression {progression}")
        return self


class CopySplit(BaseModel):
    """The split ``H_i = H_i^(0) + H_i^(1)`` of one homomorphic copy."""

    model_config = ConfigDict(frozen=True)

    zero: Tuple[Edge, ...]
    one: Tuple[Edge, ...]

    @model_validator(mode="after")
    def _check(self) -> "CopySplit":
        if not self.zero or not self.one:
            raise CopyWithOneEdgeError("both parts of an edge bipartition must be non-empty")
        if set(self.zero) & set(self.one):
            raise PreconditionError("edge bipartition parts overlap")
        return self

    def part(self, s: int) -> Tuple[Edge, ...]:
        return self.one if s else self.zero


class EdgeBipartition(BaseModel):
    model_config = ConfigDict(frozen=True)

    splits: Tuple[CopySplit, ...]

    def validate_against(self, copies: List[HomCopy]) -> None:
        if len(copies) != len(self.splits):
            raise SizeMismatchError(f"{len(self.splits)} splits for {len(copies)} copies")
        for i, (copy, split) in enumerate(zip(copies, self.splits)):
            if set(split.zero) | set(split.one) != set(copy.edges):
                raise PreconditionError(f"split {i} does not cover exactly the edges of copy {i}")


class BinaryBlowup(BaseModel):
    """Output of the partial binary blow-up: the graph plus everything needed to interpret it."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    graph: Any
    labeling: Any
    base: Any
    copies: List[HomCopy]
    bipartition: EdgeBipartition

    @property
    def m(self) -> int:
        return len(self.copies)

    def copy_of_edge(self, u: int, v: int) -> Tuple[int, int]:
        """``(i, s)`` such that base edge ``uv`` lies in ``H_i^(s)``."""
        edge = (min(u, v), max(u, v))
        for i, split in enumerate(self.bipartition.splits):
            if edge in split.zero:
                return i, 0
            if edge in split.one:
                return i, 1
        raise PreconditionError(f"edge {edge} lies in no homomorphic copy")


class NoApproxHomBound(BaseModel):
    """Parameters below which a blow-up admits no approximate homomorphism into a small target."""

    n: int
    copies: int
    pattern_edges: int
    epsilon_ceiling: float
    target_size_floor: float
    vacuous: bool


# --------------------------------------------------------------- approx_hom

class VertexMap(BaseModel):
    """A total map ``V(G) -> V(F)``."""

    model_config = ConfigDict(frozen=True)

    source_size: int
    target_size: int
    table: Tuple[int, ...]

    @model_validator(mode="after")
    def _total(self) -> "VertexMap":
        if len(self.table) != self.source_size:
            raise SizeMismatchError(f"map covers {len(self.table)} of {self.source_size} vertices")
        if any(t < 0 or t >= self.target_size for t in self.table):
            raise SizeMismatchError(f"image outside [0, {self.target_size})")
        return self

    @classmethod
    def identity(cls, n: int) -> "VertexMap":
        return cls(source_size=n, target_size=n, table=tuple(range(n)))

    def __getitem__(self, u: int) -> int:
        return self.table[u]


class ViolationReport(BaseModel):
    violations: int
    edge_count: int
    source_size: int
    epsilon_achieved: float

    @field_validator("violations")
    @classmethod
    def _non_negative(cls, v: int) -> int:
        if v < 0:
            raise PreconditionError("violation count must be non-negative")
        return v

    @model_validator(mode="after")
    def _within_edges(self) -> "ViolationReport":
        if self.violations > self.edge_count:
            raise SizeMismatchError(f"{self.violations} violations but only {self.edge_count} edges")
        return self


class ApproxHomResult(BaseModel):
    report: ViolationReport
    phi: VertexMap
    exact: bool
    nodes_explored: int = 0


# ----------------------------------------------------------- entropy_toolkit

class FiniteDistribution(BaseModel):
    model_config = ConfigDict(frozen=True)

    weights: Tuple[float, ...]

    @field_validator("weights")
    @classmethod
    def _normalised(cls, w: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(x < 0 for x in w):
            raise PreconditionError("weights must be non-negative")
        if abs(sum(w) - 1.0) > 1e-12:
            raise PreconditionError(f"weights sum to {sum(w)!r}, not 1")
        return w

    @classmethod
    def from_counts(cls, counts) -> "FiniteDistribution":
        total = sum(counts)
        return cls(weights=tuple(float(Fraction(c, total)) for c in counts))


class JointDistribution(BaseModel):
    model_config = ConfigDict(frozen=True)

    matrix: Tuple[Tuple[float, ...], ...]

    @field_validator("matrix")
    @classmethod
    def _normalised(cls, m):
        if len({len(row) for row in m}) > 1:
            raise PreconditionError("joint matrix must be rectangular")
        flat = [x for row in m for x in row]
        if any(x < 0 for x in flat):
            raise PreconditionError("joint probabilities must be non-negative")
        if abs(sum(flat) - 1.0) > 1e-12:
            raise PreconditionError(f"joint probabilities sum to {sum(flat)!r}, not 1")
        return m

    @classmethod
    def from_counts(cls, counts) -> "JointDistribution":
        total = sum(sum(row) for row in counts)
        return cls(matrix=tuple(tuple(float(Fraction(c, total)) for c in row) for row in counts))


class BisectionInstance(BaseModel):
    """A balanced bipartition ``(P_0, P_1)`` and a partition ``Q_1..Q_k`` of the same ground set."""

    model_config = ConfigDict(frozen=True)

    p0: frozenset
    p1: frozenset
    parts: Tuple[frozenset, ...]
    eta: float

    @model_validator(mode="after")
    def _check(self) -> "BisectionInstance":
        if len(self.p0) != len(self.p1):
            raise PreconditionError("P_0 and P_1 must have equal size")
        if self.p0 & self.p1:
            raise PreconditionError("P_0 and P_1 must be disjoint")
        ground = self.p0 | self.p1
        seen: set = set()
        for q in self.parts:
            if not q:
                raise PreconditionError("parts of the Q-partition must be non-empty")
            if q & seen:
                raise PreconditionError("parts of the Q-partition overlap")
            seen |= q
        if seen != ground:
            raise PreconditionError("Q-partition does not cover P_0 + P_1")
        return self


class BisectionAudit(BaseModel):
    mutual_information: float
    hypothesis: bool
    nearly_bisected_parts: List[int]
    nb_fraction: float
    mu: FiniteDistribution
    tv: float
    nb_bound_holds: bool
    tv_bound_holds: bool

    @property
    def consistent(self) -> bool:
        return not self.hypothesis or (self.nb_bound_holds and self.tv_bound_holds)


class ChainBoundRow(BaseModel):
    base: int
    mutual_information_sum: float
    image_entropy: float
    log_target_size: float
    holds: bool


class ChainBoundAudit(BaseModel):
    rows: List[ChainBoundRow]
    total: float
    total_bound: float
    eta: Optional[float] = None
    failing_indices: List[int] = Field(default_factory=list)
    hypothesis_indices: List[int] = Field(default_factory=list)
    eps: Optional[float] = None
    averaging_ceiling: Optional[float] = None

    @property
    def averaging_holds(self) -> bool:
        """At most ``total / eta`` copy indices can carry some ``I_{i,v} > eta``."""
        if self.eta is None:
            return True
        return len(self.failing_indices) * self.eta <= self.total + 1e-9

    @property
    def holds(self) -> bool:
        return all(r.holds for r in self.rows)


class ClaimDaggerAudit(BaseModel):
    copy_index: int
    eta: float
    mutual_informations: Dict[int, float]
    hypothesis: bool
    violated_edges: int
    threshold: float
    conclusion: bool

    @property
    def consistent(self) -> bool:
        return not self.hypothesis or self.conclusion


# ------------------------------------------------------------ removal_engine

class DeletionStep(BaseModel):
    step: int
    edge: Edge
    triangles_on_edge: Optional[int] = None
    beta: str
    threshold: float


class BoundedCodegreeResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    graph: Any
    delta: str
    alpha: str
    threshold: float
    max_edge_triangles: int
    deletions: int
    trace: List[DeletionStep]


class DiamondSample(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    graph: Any
    sample: List[int]
    good_triangles: List[Tuple[int, int, int]]
    in_regime: bool


# --------------------------------------------------------------- arith_core

class ArithRemovalResult(BaseModel):
    deletions: int
    removed: Tuple[Tuple[int, ...], Tuple[int, ...], Tuple[int, ...]]
    exact: bool


class RoundTripResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    functions: Tuple[Any, Any, Any]
    lift_dimensions: int
    lifted_sizes: Tuple[int, int, int]
    lift_deletions: Tuple[int, int, int]
    exact_removal: bool
    l1_distances: Tuple[float, float, float]
    l1_ledger: Tuple[float, float, float]
    deletion_budget: float
    within_budget: bool
    success: bool


class TriangleFreeApproximation(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    phi: Any
    codimension: int
    quotient_density: float
    counting_bound: float
    targets: Tuple[Tuple[int, ...], Tuple[int, ...], Tuple[int, ...]]
    missed: Tuple[int, int, int]
    roundtrip: RoundTripResult


# ------------------------------------------------------ arith_constructions

class TricolorTriple(BaseModel):
    """Sequences ``x, y, z`` of F_p^n points (as element indices)."""

    model_config = ConfigDict(frozen=True)

    space: FpnSpace
    xs: Tuple[int, ...]
    ys: Tuple[int, ...]
    zs: Tuple[int, ...]

    @model_validator(mode="after")
    def _lengths(self) -> "TricolorTriple":
        if not (len(self.xs) == len(self.ys) == len(self.zs)):
            raise SizeMismatchError("x, y, z must have the same length")
        for seq in (self.xs, self.ys, self.zs):
            if any(e < 0 or e >= self.space.size for e in seq):
                raise PreconditionError("point outside the space")
        return self

    @property
    def length(self) -> int:
        return len(self.xs)


class TricolorSearchResult(BaseModel):
    triple: TricolorTriple
    mode: str
    exhaustive_optimum: bool
    budget_exhausted: bool
    candidates_examined: int


class ExpandedSets(BaseModel):
    model_config = ConfigDict(frozen=True)

    source: TricolorTriple
    space: FpnSpace
    x_blocks: Tuple[Tuple[int, ...], ...]
    y_blocks: Tuple[Tuple[int, ...], ...]
    z_blocks: Tuple[Tuple[int, ...], ...]

    def union(self, which: str) -> Tuple[int, ...]:
        blocks = {"x": self.x_blocks, "y": self.y_blocks, "z": self.z_blocks}[which]
        return tuple(sorted(e for block in blocks for e in block))


class BlockMiss(BaseModel):
    index: int
    good: bool
    missed: int
    floor: int


class MissedMassAudit(BaseModel):
    missed: int
    missed_by_set: Tuple[int, int, int]
    bound: float
    holds: bool
    blocks: List[BlockMiss]


class CpResult(BaseModel):
    p: int
    c_p: float
    minimiser: float
    minimum: float
    grid_minimum: float
    grid_c_p: float
    agreement: float


# ------------------------------------------------------------------ reports

class InequalityCheck(BaseModel):
    """One asserted inequality with both sides' values and its source statement."""

    name: str
    reference: str
    lhs: float
    relation: str
    rhs: float
    passed: bool
    slack: float

    @classmethod
    def compare(cls, name: str, reference: str, lhs: float, relation: str, rhs: float, tol: float = 0.0) -> "InequalityCheck":
        if relation == "<=":
            passed, slack = lhs <= rhs + tol, rhs - lhs
        elif relation == ">=":
            passed, slack = lhs >= rhs - tol, lhs - rhs
        elif relation == "==":
            passed, slack = abs(lhs - rhs) <= tol, -abs(lhs - rhs)
        elif relation == "<":
            passed, slack = lhs < rhs, rhs - lhs
        elif relation == ">":
            passed, slack = lhs > rhs, lhs - rhs
        else:
            raise ValueError(f"unknown relation {relation!r}")
        return cls(name=name, reference=reference, lhs=float(lhs), relation=relation,
                   rhs=float(rhs), passed=bool(passed), slack=float(slack))


class ExperimentReport(BaseModel):
    experiment: str
    schema_version: int
    seed: int
    inputs: Dict[str, Any] = Field(default_factory=dict)
    measurements: Dict[str, Any] = Field(default_factory=dict)
    checks: List[InequalityCheck] = Field(default_factory=list)
    timing: Dict[str, float] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


class TflIngredientsParams(BaseModel):
    """Parameters for the partial-binary-blow-up preset."""

    model_config = ConfigDict(extra="forbid")

    graph: str = "bowtie"
    random_maps: int = Field(default=200, ge=0)
    max_target: int = Field(default=3, ge=1, le=4)
    dagger_target: int = Field(default=2, ge=1, le=3)


class RsPipelineParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(default=20, ge=1, le=200)
    method: str = "greedy"
    runs: int = Field(default=50, ge=1)


class DeletionScheduleParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    graph: str = "K6"
    eps: float = Field(default=1000.0, gt=0)
    schedule_terms: int = Field(default=60, ge=1)


class ArithRoundtripParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    p: int = 3
    n: int = Field(default=5, ge=1)
    eps: float = Field(default=0.3, gt=0, le=1)
    density: float = Field(default=0.3, ge=0, le=1)
    instances: int = Field(default=20, ge=1)
    roundtrip_p: int = 2
    roundtrip_n: int = Field(default=2, ge=1)
    lift: int = Field(default=3, ge=0)
    runs: int = Field(default=10, ge=1)


class ArithExpansionParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    p: int = 3
    n: int = Field(default=1, ge=1)
    random_maps: int = Field(default=100, ge=0)
    m: int = Field(default=1, ge=0)


class CpTableParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    primes: List[int] = Field(default_factory=lambda: [2, 3, 5, 7])


def fraction_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


