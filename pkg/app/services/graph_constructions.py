"""Named graphs, progression-free sets, Ruzsa-Szemeredi graphs and binary blow-ups."""

import math
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ..core.config import settings
from ..core.errors import (
    CopyWithOneEdgeError,
    InvalidSetError,
    PreconditionError,
    SizeGuardError,
    UnknownPresetError,
)
from ..core.logging import get_logger
from ..models.graph import BlowupLabeling, Graph, Pattern
from ..models.schemas import (
    ApFreeSet,
    BinaryBlowup,
    CopySplit,
    EdgeBipartition,
    HomCopy,
    NoApproxHomBound,
)
from .graph_core import hom_copies, is_hom_free, is_isomorphic, unique_copy_property

logger = get_logger("graph_constructions")


# Named graphs

def complete_graph(k: int) -> Graph:
    return Graph.from_edges(k, ((u, v) for u in range(k) for v in range(u + 1, k)))


def cycle_graph(k: int) -> Graph:
    if k < 3:
        raise PreconditionError("a cycle needs at least 3 vertices")
    return Graph.from_edges(k, ((u, (u + 1) % k) for u in range(k)))


def path_graph(k: int) -> Graph:
    """Path on ``k`` vertices."""
    return Graph.from_edges(k, ((u, u + 1) for u in range(k - 1)))


def bowtie() -> Graph:
    """Two triangles sharing vertex 0."""
    return Graph.from_edges(5, [(0, 1), (0, 2), (1, 2), (0, 3), (0, 4), (3, 4)])


def triangle_with_pendant() -> Graph:
    return Graph.from_edges(4, [(0, 1), (0, 2), (1, 2), (2, 3)])


def petersen() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph.from_edges(10, outer + spokes + inner)


def disjoint_triangles(k: int) -> Graph:
    return Graph.from_edges(
        3 * k, (e for t in range(k) for e in ((3 * t, 3 * t + 1), (3 * t, 3 * t + 2), (3 * t + 1, 3 * t + 2)))
    )


def named_graph(name: str) -> Graph:
    """Resolve names like ``K5``, ``C7``, ``P3``, ``bowtie``, ``petersen``."""
    fixed = {"bowtie": bowtie, "petersen": petersen, "triangle-pendant": triangle_with_pendant}
    if name in fixed:
        return fixed[name]()
    builders = {"K": complete_graph, "C": cycle_graph, "P": path_graph, "T": disjoint_triangles}
    head, tail = name[:1], name[1:]
    if head in builders and tail.isdigit():
        return builders[head](int(tail))
    raise UnknownPresetError(f"unknown graph name {name!r}")


# Progression-free sets

def find_three_term_progression(elements: Iterable[int]) -> Optional[Tuple[int, int, int]]:
    """First ``(a, a+d, a+2d)`` with ``d >= 1`` inside ``elements``, or None."""
    ordered = sorted(set(elements))
    members = set(ordered)
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            if 2 * b - a in members:
                return a, b, 2 * b - a
    return None


def _greedy_ap_free(N: int) -> List[int]:
    chosen: List[int] = []
    members: set = set()
    for x in range(1, N + 1):
        # x would close a progression (a, b, x) with b = (a + x) / 2
        if not any((a + x) % 2 == 0 and (a + x) // 2 in members for a in chosen):
            chosen.append(x)
            members.add(x)
    return chosen


def _behrend_spheres(N: int) -> List[int]:
    """Largest sphere ``sum a_i^2 = r`` among numbers whose base ``2d - 1`` digits are all below ``d``.

    Digits below ``d`` never carry when two such numbers are added, so a
    progression of integers is a progression of digit vectors, and no three
    points of a sphere are collinear. Elements are shifted by one into ``[1, N]``.
    """
    best: List[int] = [1]
    for d in range(2, (N + 3) // 2):
        base = 2 * d - 1
        spheres: Dict[int, List[int]] = defaultdict(list)
        for value in range(N):
            radius, rest = 0, value
            while rest:
                rest, digit = divmod(rest, base)
                if digit >= d:
                    break
                radius += digit * digit
            else:
                spheres[radius].append(value + 1)
        for radius in sorted(spheres):
            if len(spheres[radius]) > len(best):
                best = spheres[radius]
    return sorted(best)


def build_ap_free_set(N: int, method: str = "greedy") -> ApFreeSet:
    if N < 1:
        raise InvalidSetError("range bound must be at least 1")
    if method == "greedy":
        elements = _greedy_ap_free(N)
    elif method == "behrend-spheres":
        elements = _behrend_spheres(N)
    else:
        raise PreconditionError(f"unknown AP-free method {method!r}")
    logger.info("AP-free set on [1, %d] via %s has %d elements", N, method, len(elements))
    return ApFreeSet(N=N, elements=tuple(elements), method=method)


# Ruzsa-Szemeredi graphs

def rs_graph(n: int, S, *, require_ap_free: bool = True) -> Graph:
    """Tripartite graph on parts ``[n]``, ``[2n]``, ``[3n]`` with triangles ``(a, a+d, a+2d)``.

    Part A occupies indices ``0..n-1``, part B ``n..3n-1`` and part C
    ``3n..6n-1``; integer ``x`` of a part sits at offset ``x - 1``.
    """
    elements = tuple(S.elements) if isinstance(S, ApFreeSet) else tuple(sorted(set(S)))
    if n < 1:
        raise InvalidSetError("part scale must be at least 1")
    if elements and (elements[0] < 1 or elements[-1] > n):
        raise InvalidSetError(f"difference set must lie in [1, {n}]")
    if require_ap_free:
        progression = find_three_term_progression(elements)
        if progression is not None:
            raise InvalidSetError(f"difference set contains the progression {progression}")
    edges = []
    for a in range(1, n + 1):
        for d in elements:
            x, y, z = a - 1, n + a + d - 1, 3 * n + a + 2 * d - 1
            edges.extend(((x, y), (y, z), (x, z)))
    graph = Graph.from_edges(6 * n, edges)
    logger.debug("rs_graph(n=%d, |S|=%d) has %d edges", n, len(elements), graph.edge_count)
    return graph


# Partial binary blow-up

def default_bipartition(copies: Sequence[HomCopy]) -> EdgeBipartition:
    """``H_i^(1)`` is the smallest edge of each copy, ``H_i^(0)`` the rest."""
    splits = []
    for i, copy in enumerate(copies):
        if len(copy.edges) < 2:
            raise CopyWithOneEdgeError(f"copy {i} has {len(copy.edges)} edge(s); need at least 2")
        edges = sorted(copy.edges)
        splits.append(CopySplit(zero=tuple(edges[1:]), one=(edges[0],)))
    return EdgeBipartition(splits=tuple(splits))


def _check_blowup_pattern(pattern: Pattern) -> None:
    h = pattern.graph
    if h.edge_count <= 1:
        raise PreconditionError("pattern must have more than one edge")
    if not h.is_connected():
        raise PreconditionError("pattern must be connected")
    if not is_isomorphic(pattern.core, h):
        raise PreconditionError("pattern must be its own core")


def partial_binary_blowup(
    g: Graph, h: Pattern, parts: Optional[EdgeBipartition] = None
) -> BinaryBlowup:
    """Subgraph of the ``2^m``-blow-up of G gated by the bit of each homomorphic copy.

    ``(u, x) ~ (v, y)`` iff ``uv`` lies in ``H_i^(s)`` and ``x_i = y_i = s``.
    """
    pattern = h if isinstance(h, Pattern) else Pattern(h)
    _check_blowup_pattern(pattern)
    if not unique_copy_property(g, pattern):
        raise PreconditionError("every edge of G must lie in exactly one homomorphic copy of H")
    copies = hom_copies(pattern, g)
    m = len(copies)
    labeling = BlowupLabeling(g.n, m)
    if labeling.size > settings.BLOWUP_VERTEX_LIMIT:
        raise SizeGuardError(
            f"blow-up has {labeling.size} vertices; guard is {settings.BLOWUP_VERTEX_LIMIT}"
        )
    parts = parts if parts is not None else default_bipartition(copies)
    parts.validate_against(copies)

    block = labeling.block
    # bit_mask[i][s]: words w in [0, 2^m) with bit i equal to s
    bit_mask = [[0, 0] for _ in range(m)]
    for w in range(block):
        for i in range(m):
            bit_mask[i][(w >> i) & 1] |= 1 << w

    gates: Dict[int, List[Tuple[int, int, int]]] = defaultdict(list)
    for i, split in enumerate(parts.splits):
        for s in (0, 1):
            for u, v in split.part(s):
                gates[u].append((i, s, bit_mask[i][s] << (v * block)))
                gates[v].append((i, s, bit_mask[i][s] << (u * block)))

    rows = [0] * labeling.size
    for u in range(g.n):
        relevant = gates.get(u, [])
        for w in range(block):
            row = 0
            for i, s, mask in relevant:
                if (w >> i) & 1 == s:
                    row |= mask
            rows[u * block + w] = row
    blown = Graph(labeling.size, rows)
    logger.info(
        "partial binary blow-up: base %d vertices, m=%d copies -> %d vertices, %d edges",
        g.n, m, blown.n, blown.edge_count,
    )
    return BinaryBlowup(graph=blown, labeling=labeling, base=g, copies=copies, bipartition=parts)


def lift_counts(blowup: BinaryBlowup) -> Dict[Tuple[int, int], int]:
    """Number of blow-up edges projecting onto each base edge."""
    labeling = blowup.labeling
    counts: Dict[Tuple[int, int], int] = {e: 0 for e in blowup.base.edges}
    for a, b in blowup.graph.edges:
        u, v = labeling.base_of(a), labeling.base_of(b)
        counts[(min(u, v), max(u, v))] += 1
    return counts


def verify_blowup_hom_free(gp: Graph, h: Pattern) -> bool:
    return is_hom_free(h, gp)


def full_blowup(g: Graph, k: int) -> Graph:
    """Unrestricted ``k``-blow-up: vertex ``(u, j)`` has index ``u * k + j``."""
    if g.n * k > settings.BLOWUP_VERTEX_LIMIT:
        raise SizeGuardError(f"blow-up has {g.n * k} vertices; guard is {settings.BLOWUP_VERTEX_LIMIT}")
    return Graph.from_edges(
        g.n * k,
        ((u * k + a, v * k + b) for u, v in g.edges for a in range(k) for b in range(k)),
    )


def no_approx_hom_bound(n: int, copies: int, pattern_edges: int) -> NoApproxHomBound:
    """Epsilon ceiling ``m/(16 n^2)`` and target floor ``exp(m/(32 |E(H)| n))``."""
    if n < 1 or pattern_edges < 1:
        raise PreconditionError("need a non-empty base graph and pattern")
    floor = math.exp(copies / (32 * pattern_edges * n))
    return NoApproxHomBound(
        n=n,
        copies=copies,
        pattern_edges=pattern_edges,
        epsilon_ceiling=copies / (16 * n * n),
        target_size_floor=floor,
        vacuous=floor <= 2.0,
    )

