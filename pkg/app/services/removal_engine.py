"""Greedy deletion to bounded triangle co-degree, unique-triangle sampling and removal distance."""

import math
from collections import Counter
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.config import settings
from ..core.errors import (
    DomainError,
    InstanceTooLargeError,
    PreconditionError,
    SampleSizeZeroError,
)
from ..core.logging import get_logger
from ..models.graph import Edge, Graph, iter_bits
from ..models.schemas import (
    BoundedCodegreeResult,
    DeletionStep,
    DiamondSample,
    fraction_str,
)
from .graph_core import count_triangles, edge_triangle_counts, triangle_index

logger = get_logger("removal_engine")


def g_schedule(x) -> float:
    """``g(x) = 100 log(100/x) (log log(100/x))^2``."""
    x = float(x)
    if not 0.0 < x <= 1.0:
        raise DomainError(f"g is defined on (0, 1], got {x}")
    outer = math.log(100.0 / x)
    return 100.0 * outer * math.log(outer) ** 2


def schedule_partial_sum(terms: int = 60) -> float:
    return math.fsum(1.0 / g_schedule(2.0**-i) for i in range(1, terms + 1))


def schedule_tail_bound(terms: int = 60) -> float:
    """Upper bound on ``sum_{i > terms} 1/g(2^-i)``.

    ``1/g(2^-i)`` decreases in ``i``, so the tail is at most the integral
    from ``terms`` to infinity, which is ``1 / (100 log 2 log(log 100 + terms log 2))``.
    """
    return 1.0 / (100.0 * math.log(2.0) * math.log(math.log(100.0) + terms * math.log(2.0)))


def _threshold(alpha: Fraction, delta: Fraction, n: int, eps: float) -> float:
    if alpha == 0:
        return 0.0
    return g_schedule(alpha / delta) * float(alpha) * n / eps


def _max_edge(counts: Dict[Edge, int]) -> Tuple[Edge, int]:
    """Edge in the most triangles; ties go to the lexicographically smallest edge."""
    edge = min(counts, key=lambda e: (-counts[e], e))
    return edge, counts[edge]


def greedy_bounded_codegree(
    g: Graph, delta: Optional[Fraction] = None, eps: float = 0.3
) -> BoundedCodegreeResult:
    """Delete the edge in the most triangles until none exceeds ``g(alpha/delta) alpha n / eps``.

    ``alpha n^3`` is the current triangle count; the stopping test is
    re-evaluated after every deletion.
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    n = g.n
    cube = n**3
    triangles = count_triangles(g)
    start_alpha = Fraction(triangles, cube) if cube else Fraction(0)
    delta = start_alpha if delta is None else Fraction(delta)
    if delta < start_alpha:
        raise PreconditionError(f"G has {triangles} triangles, more than delta n^3")

    rows = list(g.rows)
    counts = edge_triangle_counts(g)
    trace: List[DeletionStep] = []
    while True:
        alpha = Fraction(triangles, cube) if cube else Fraction(0)
        if triangles == 0:
            threshold, worst = 0.0, 0
            break
        threshold = _threshold(alpha, delta, n, eps)
        (u, v), worst = _max_edge(counts)
        if worst <= threshold:
            break
        trace.append(
            DeletionStep(
                step=len(trace) + 1,
                edge=(u, v),
                triangles_on_edge=worst,
                beta=fraction_str(alpha),
                threshold=threshold,
            )
        )
        for w in iter_bits(rows[u] & rows[v]):
            counts[(min(u, w), max(u, w))] -= 1
            counts[(min(v, w), max(v, w))] -= 1
        del counts[(u, v)]
        rows[u] &= ~(1 << v)
        rows[v] &= ~(1 << u)
        triangles -= worst
        logger.debug("deleted %s in %d triangles; %d left", (u, v), worst, triangles)

    budget = eps * n * n
    if len(trace) >= budget:
        logger.warning("%d deletions reached eps n^2 = %.3f", len(trace), budget)
    return BoundedCodegreeResult(
        graph=Graph(n, rows),
        delta=fraction_str(delta),
        alpha=fraction_str(alpha),
        threshold=threshold,
        max_edge_triangles=worst,
        deletions=len(trace),
        trace=trace,
    )


def format_trace(trace: Sequence[DeletionStep]) -> List[str]:
    """Line records ``step edge beta threshold`` with the edge written ``u-v``."""
    return [f"{s.step} {s.edge[0]}-{s.edge[1]} {s.beta} {s.threshold!r}" for s in trace]


def replay_trace(
    g: Graph, trace: Sequence[DeletionStep], delta: Optional[Fraction] = None, eps: float = 0.3
) -> bool:
    """Re-run a deletion trace from scratch, recounting triangles at every step.

    True iff every recorded edge was a tie-broken maximiser above the
    threshold, the recorded counts and betas match, and the final graph
    meets the stopping rule.
    """
    n = g.n
    cube = n**3
    current = g
    delta = Fraction(count_triangles(g), cube) if delta is None else Fraction(delta)
    for position, step in enumerate(trace, start=1):
        index = triangle_index(current)
        alpha = Fraction(len(index.triangles), cube)
        if step.step != position or step.beta != fraction_str(alpha) or not index.edge_counts:
            return False
        edge, worst = _max_edge(index.edge_counts)
        threshold = _threshold(alpha, delta, n, eps)
        if tuple(step.edge) != edge or worst <= threshold:
            return False
        if step.triangles_on_edge is not None and step.triangles_on_edge != worst:
            return False
        current = current.without_edges([edge])
    index = triangle_index(current)
    if not index.triangles:
        return True
    alpha = Fraction(len(index.triangles), cube)
    return index.max_count() <= _threshold(alpha, delta, n, eps)


def sample_diamond_subgraph(g: Graph, t: int, seed: Optional[int] = None) -> DiamondSample:
    """Edges of the good triangles inside a random ``floor(n/(9t))``-vertex sample.

    A triangle is good when it lies in the sample and none of its edges is
    in another triangle of the sample, so the output has every edge in
    exactly one triangle.
    """
    n = g.n
    if t < 1:
        raise PreconditionError("t must be at least 1")
    size = n // (9 * t)
    if size == 0:
        raise SampleSizeZeroError(f"n={n} < 9t={9 * t}")
    worst = max(edge_triangle_counts(g).values(), default=0)
    if worst > t:
        raise PreconditionError(f"an edge lies in {worst} triangles, more than t={t}")
    in_regime = 100 * t <= n
    if not in_regime:
        logger.warning("t=%d exceeds n/100 for n=%d", t, n)

    rng = np.random.default_rng(settings.DEFAULT_SEED if seed is None else seed)
    sample = sorted(int(x) for x in rng.choice(n, size=size, replace=False))
    mask = sum(1 << x for x in sample)
    induced_rows = [row & mask if (mask >> u) & 1 else 0 for u, row in enumerate(g.rows)]
    inside = Graph(n, induced_rows)
    index = triangle_index(inside)
    good = [
        tri
        for tri in index.triangles
        if all(index.edge_counts[e] == 1 for e in ((tri[0], tri[1]), (tri[0], tri[2]), (tri[1], tri[2])))
    ]
    edges = [e for a, b, c in good for e in ((a, b), (a, c), (b, c))]
    return DiamondSample(
        graph=Graph.from_edges(n, edges), sample=sample, good_triangles=good, in_regime=in_regime
    )


def good_triangle_expectation_bound(t: int, triangles: int) -> float:
    """Expected good-triangle floor ``(2/3) T / (1000 t^3)`` for ``T`` triangles."""
    return 2.0 * triangles / (3000.0 * t**3)


def _packing_bound(triples: Sequence[Tuple[int, ...]]) -> int:
    """Size of a greedy family of pairwise disjoint triples (each needs its own deletion)."""
    used: set = set()
    packed = 0
    for tri in triples:
        if used.isdisjoint(tri):
            used.update(tri)
            packed += 1
    return packed


def greedy_triple_cover(triples: Sequence[Tuple[int, ...]]) -> List[int]:
    """Repeatedly take the item in the most uncovered triples (smallest id on ties)."""
    remaining = list(triples)
    chosen: List[int] = []
    while remaining:
        counts = Counter(item for tri in remaining for item in set(tri))
        item = min(counts, key=lambda k: (-counts[k], k))
        chosen.append(item)
        remaining = [tri for tri in remaining if item not in tri]
    return chosen


def exact_triple_cover(triples: Sequence[Tuple[int, ...]]) -> List[int]:
    """Smallest set of items meeting every triple.

    Branches on the items of the first uncovered triple and prunes with the
    disjoint-triple packing bound; the greedy cover seeds the incumbent.
    """
    best = greedy_triple_cover(triples)
    chosen: List[int] = []

    def search(remaining: List[Tuple[int, ...]]) -> None:
        nonlocal best
        if not remaining:
            if len(chosen) < len(best):
                best = list(chosen)
            return
        if len(chosen) + _packing_bound(remaining) >= len(best):
            return
        for item in dict.fromkeys(remaining[0]):
            chosen.append(item)
            search([tri for tri in remaining if item not in tri])
            chosen.pop()

    search(list(triples))
    return best


def _edge_triangles(g: Graph) -> Tuple[List[Edge], List[Tuple[int, int, int]]]:
    """Edges lying in some triangle (sorted) and every triangle as a triple of their ids."""
    index = triangle_index(g)
    relevant = sorted(e for e, c in index.edge_counts.items() if c)
    ids = {e: k for k, e in enumerate(relevant)}
    tris = [(ids[(a, b)], ids[(a, c)], ids[(b, c)]) for a, b, c in index.triangles]
    return relevant, tris


def removal_distance(g: Graph, mode: str = "exact") -> int:
    """Fewest edge deletions destroying every triangle.

    ``greedy`` repeatedly deletes the edge in the most triangles and gives an
    upper bound; ``exact`` is limited to graphs with few triangle edges.
    """
    relevant, tris = _edge_triangles(g)
    if mode == "greedy":
        return len(greedy_triple_cover(tris))
    if mode != "exact":
        raise PreconditionError(f"unknown removal mode {mode!r}")
    if len(relevant) > settings.REMOVAL_EXACT_EDGE_LIMIT:
        raise InstanceTooLargeError(
            f"{len(relevant)} edges lie in triangles; exact guard is {settings.REMOVAL_EXACT_EDGE_LIMIT}"
        )
    best = len(exact_triple_cover(tris))
    logger.debug("exact removal distance %d over %d relevant edges", best, len(relevant))
    return best
