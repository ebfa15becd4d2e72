"""Approximate homomorphisms: violation counting, target enumeration and min-violation solvers."""

import math
from typing import List, Optional, Sequence

import numpy as np

from ..core.config import settings
from ..core.errors import (
    InstanceTooLargeError,
    PreconditionError,
    SizeMismatchError,
    TargetBoundTooLargeError,
)
from ..core.logging import get_logger
from ..models.graph import Graph, Pattern, iter_bits
from ..models.schemas import ApproxHomResult, VertexMap, ViolationReport
from .graph_core import PatternLike, canonical_form, canonical_graph, is_hom_free

logger = get_logger("approx_hom")


def _count(g: Graph, f: Graph, table: Sequence[int]) -> int:
    return sum(1 for u, v in g.edges if not f.has_edge(table[u], table[v]))


def _report(g: Graph, violations: int) -> ViolationReport:
    n = g.n
    return ViolationReport(
        violations=violations,
        edge_count=g.edge_count,
        source_size=n,
        epsilon_achieved=violations / (n * n) if n else 0.0,
    )


def violations(g: Graph, f: Graph, phi: VertexMap) -> ViolationReport:
    """Edges ``uv`` of G with ``phi(u) phi(v)`` not an edge of F (collapsed edges included)."""
    if phi.source_size != g.n or phi.target_size != f.n:
        raise SizeMismatchError(
            f"map is {phi.source_size}->{phi.target_size}, graphs are {g.n}->{f.n}"
        )
    return _report(g, _count(g, f, phi.table))


def enumerate_hom_free_targets(h: PatternLike, M: int) -> List[Graph]:
    """All H-homomorphism-free graphs on exactly ``M`` vertices, one per isomorphism class.

    Built by adding one vertex at a time to the classes of the previous size;
    the property is closed under induced subgraphs so nothing is missed.
    """
    if M > settings.TARGET_VERTEX_LIMIT:
        raise TargetBoundTooLargeError(f"M={M} exceeds the target bound {settings.TARGET_VERTEX_LIMIT}")
    if M < 0:
        raise PreconditionError("M must be non-negative")
    level = [Graph(0)]
    for k in range(M):
        found = {}
        for base in level:
            for neighbourhood in range(1 << k):
                rows = [row | (((neighbourhood >> u) & 1) << k) for u, row in enumerate(base.rows)]
                rows.append(neighbourhood)
                candidate = Graph(k + 1, rows)
                key = canonical_form(candidate)
                if key in found or not is_hom_free(h, candidate):
                    continue
                found[key] = canonical_graph(candidate)
        level = [found[key] for key in sorted(found)]
        logger.debug("%d hom-free classes on %d vertices", len(level), k + 1)
    return sorted(level, key=lambda x: (x.edge_count, canonical_form(x)))


def _greedy_table(g: Graph, f: Graph, order: Sequence[int]) -> List[int]:
    table = [0] * g.n
    placed = set()
    for v in order:
        best_t, best_cost = 0, None
        for t in range(f.n):
            cost = sum(1 for w in g.neighbors(v) if w in placed and not f.has_edge(t, table[w]))
            if best_cost is None or cost < best_cost:
                best_t, best_cost = t, cost
        table[v] = best_t
        placed.add(v)
    return table


def exact_min_violations(g: Graph, f: Graph) -> ApproxHomResult:
    """Minimum violation count over all ``|V(F)|^n`` maps, by branch and bound.

    Vertices are fixed in descending degree order. The bound adds, for each
    unplaced vertex, its cheapest target against the already placed
    neighbours; edges between unplaced vertices are counted as free.
    """
    n, size = g.n, f.n
    if n > settings.EXACT_SOURCE_LIMIT:
        raise InstanceTooLargeError(f"source has {n} vertices; exact guard is {settings.EXACT_SOURCE_LIMIT}")
    if size == 0 and n > 0:
        raise PreconditionError("target graph has no vertices")
    if n == 0 or f.edge_count == 0:
        table = tuple([0] * n)
        return ApproxHomResult(
            report=_report(g, g.edge_count),
            phi=VertexMap(source_size=n, target_size=size, table=table),
            exact=True,
        )

    order = sorted(range(n), key=lambda v: (-g.degree(v), v))
    # bad[t]: targets s for which an edge mapped onto (s, t) is violated
    bad = [[s for s in range(size) if s == t or not f.has_edge(s, t)] for t in range(size)]
    cost = [[0] * size for _ in range(n)]
    image = [-1] * n

    best_table = _greedy_table(g, f, order)
    best = _count(g, f, best_table)
    nodes = 0

    def search(depth: int, current: int) -> None:
        nonlocal best, best_table, nodes
        nodes += 1
        if depth == n:
            if current < best:
                best, best_table = current, list(image)
            return
        if current + sum(min(cost[w]) for w in order[depth:]) >= best:
            return
        v = order[depth]
        open_neighbours = [w for w in iter_bits(g.rows[v]) if image[w] < 0]
        for t in sorted(range(size), key=lambda x: (cost[v][x], x)):
            image[v] = t
            for w in open_neighbours:
                for s in bad[t]:
                    cost[w][s] += 1
            search(depth + 1, current + cost[v][t])
            for w in open_neighbours:
                for s in bad[t]:
                    cost[w][s] -= 1
            image[v] = -1
            if best == 0:
                return

    search(0, 0)
    logger.debug("exact min violations %d after %d nodes", best, nodes)
    return ApproxHomResult(
        report=_report(g, best),
        phi=VertexMap(source_size=n, target_size=size, table=tuple(best_table)),
        exact=True,
        nodes_explored=nodes,
    )


def heuristic_min_violations(
    g: Graph,
    f: Graph,
    seed: Optional[int] = None,
    iterations: int = 20_000,
    start_temperature: float = 2.0,
    end_temperature: float = 0.01,
) -> ApproxHomResult:
    """Single-vertex reassignment local search with simulated-annealing acceptance.

    Starts from the all-to-vertex-0 map and cools geometrically from
    ``start_temperature`` to ``end_temperature``; returns the best map seen.
    """
    n, size = g.n, f.n
    if size == 0 and n > 0:
        raise PreconditionError("target graph has no vertices")
    rng = np.random.default_rng(settings.DEFAULT_SEED if seed is None else seed)
    table = [0] * n
    current = _count(g, f, table)
    best, best_table = current, list(table)
    if n and iterations > 0:
        neighbours = [g.neighbors(v) for v in range(n)]
        temperature = start_temperature
        cooling = (end_temperature / start_temperature) ** (1.0 / iterations)
        for _ in range(iterations):
            v = int(rng.integers(n))
            t = int(rng.integers(size))
            old = table[v]
            if t != old:
                delta = 0
                for w in neighbours[v]:
                    delta += (not f.has_edge(t, table[w])) - (not f.has_edge(old, table[w]))
                if delta <= 0 or rng.random() < math.exp(-delta / temperature):
                    table[v] = t
                    current += delta
                    if current < best:
                        best, best_table = current, list(table)
            temperature *= cooling
    return ApproxHomResult(
        report=_report(g, best),
        phi=VertexMap(source_size=n, target_size=size, table=tuple(best_table)),
        exact=False,
    )


def min_target_size(g: Graph, h: PatternLike, eps: float, M_max: int) -> Optional[int]:
    """Smallest ``M <= M_max`` with an H-hom-free target on ``M`` vertices reachable within ``eps n^2``."""
    if M_max > settings.TARGET_VERTEX_LIMIT:
        raise TargetBoundTooLargeError(f"M_max={M_max} exceeds the target bound {settings.TARGET_VERTEX_LIMIT}")
    if g.n > settings.EXACT_SOURCE_LIMIT:
        raise InstanceTooLargeError(f"source has {g.n} vertices; exact guard is {settings.EXACT_SOURCE_LIMIT}")
    pattern = h if isinstance(h, Pattern) else Pattern(h)
    allowance = eps * g.n * g.n
    for M in range(1, M_max + 1):
        for target in enumerate_hom_free_targets(pattern, M):
            if exact_min_violations(g, target).report.violations <= allowance + 1e-12:
                logger.info("min target size %d at eps=%g", M, eps)
                return M
    return None
