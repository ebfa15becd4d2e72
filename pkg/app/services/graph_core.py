"""Triangles, homomorphisms, cores and isomorphism-invariant forms of small graphs."""

from collections import Counter
from itertools import combinations, permutations, product
from typing import Dict, Iterator, List, Optional, Tuple, Union

from ..core.config import settings
from ..core.errors import PatternTooLargeError
from ..core.logging import get_logger
from ..models.graph import Edge, Graph, Pattern, iter_bits
from ..models.schemas import HomCopy, TriangleIndex

logger = get_logger("graph_core")

PatternLike = Union[Pattern, Graph]


def _as_graph(h: PatternLike) -> Graph:
    return h.graph if isinstance(h, Pattern) else h


def _check_pattern(h: Graph, limit: Optional[int] = None) -> None:
    limit = settings.PATTERN_VERTEX_LIMIT if limit is None else limit
    if h.n > limit:
        raise PatternTooLargeError(f"pattern has {h.n} vertices; backtracking guard is {limit}")


def count_triangles(g: Graph) -> int:
    """Number of vertex triples spanning three edges (row-intersection popcount)."""
    rows = g.rows
    total = 0
    for u in range(g.n):
        above_u = rows[u] >> (u + 1) << (u + 1)
        for v in iter_bits(above_u):
            total += (rows[u] & rows[v] & ~((2 << v) - 1)).bit_count()
    return total


def triangle_index(g: Graph) -> TriangleIndex:
    triangles: List[Tuple[int, int, int]] = []
    counts: Dict[Edge, int] = {e: 0 for e in g.edges}
    rows = g.rows
    for u, v in g.edges:
        for w in iter_bits(rows[u] & rows[v] & ~((2 << v) - 1)):
            triangles.append((u, v, w))
            counts[(u, v)] += 1
            counts[(u, w)] += 1
            counts[(v, w)] += 1
    return TriangleIndex(triangles=triangles, edge_counts=counts)


def edge_triangle_counts(g: Graph) -> Dict[Edge, int]:
    """Triangles through each edge, i.e. the co-degree ``|N(u) & N(v)|``."""
    return {(u, v): (g.rows[u] & g.rows[v]).bit_count() for u, v in g.edges}


def _search_order(h: Graph) -> Tuple[List[int], List[List[int]]]:
    """Vertex order for backtracking: each next vertex has the most already-placed neighbours."""
    order: List[int] = []
    placed = 0
    remaining = set(range(h.n))
    while remaining:
        v = max(
            remaining,
            key=lambda x: ((h.rows[x] & placed).bit_count(), h.degree(x), -x),
        )
        order.append(v)
        placed |= 1 << v
        remaining.discard(v)
    back = [[w for w in order[:i] if h.has_edge(order[i], w)] for i in range(len(order))]
    return order, back


def iter_homomorphisms(h: PatternLike, g: Graph) -> Iterator[Tuple[int, ...]]:
    """Yield every homomorphism ``V(H) -> V(G)`` as an image tuple indexed by pattern vertex."""
    h = _as_graph(h)
    _check_pattern(h)
    order, back = _search_order(h)
    full = (1 << g.n) - 1
    rows = g.rows
    image = [0] * h.n

    def extend(depth: int) -> Iterator[Tuple[int, ...]]:
        if depth == len(order):
            yield tuple(image)
            return
        mask = full
        for w in back[depth]:
            mask &= rows[image[w]]
        v = order[depth]
        for t in iter_bits(mask):
            image[v] = t
            yield from extend(depth + 1)

    yield from extend(0)


def find_homomorphism(h: PatternLike, g: Graph) -> Optional[Tuple[int, ...]]:
    return next(iter_homomorphisms(h, g), None)


def hom_count(h: PatternLike, g: Graph) -> int:
    """Number of homomorphisms ``V(H) -> V(G)`` counted as maps."""
    h = _as_graph(h)
    _check_pattern(h)
    if h.n == 0:
        return 1
    order, back = _search_order(h)
    full = (1 << g.n) - 1
    rows = g.rows
    image = [0] * h.n
    last = len(order) - 1

    def count(depth: int) -> int:
        mask = full
        for w in back[depth]:
            mask &= rows[image[w]]
        if depth == last:
            return mask.bit_count()
        v = order[depth]
        total = 0
        for t in iter_bits(mask):
            image[v] = t
            total += count(depth + 1)
        return total

    return count(0)


def hom_copies(h: PatternLike, g: Graph) -> List[HomCopy]:
    """Distinct homomorphic images of H in G, deduplicated by edge set (sorted edge list)."""
    pattern = _as_graph(h)
    seen: Dict[tuple, HomCopy] = {}
    for image in iter_homomorphisms(pattern, g):
        edges = tuple(sorted({tuple(sorted((image[u], image[v]))) for u, v in pattern.edges}))
        if edges:
            key = edges
            vertices = tuple(sorted({x for e in edges for x in e}))
        else:
            vertices = tuple(sorted(set(image)))
            key = vertices
        if key not in seen:
            seen[key] = HomCopy(vertices=vertices, edges=edges)
    return sorted(seen.values(), key=lambda c: (c.edges, c.vertices))


def is_hom_free(h: PatternLike, g: Graph) -> bool:
    """True iff there is no homomorphism H -> G."""
    return find_homomorphism(h, g) is None


def core(h: PatternLike) -> Graph:
    """Smallest homomorphic image of H inside H, relabelled to ``0..k-1``.

    Subsets are tried by increasing size (then edge count); the first induced
    subgraph receiving a homomorphism from H is a core.
    """
    graph = _as_graph(h)
    _check_pattern(graph)
    if graph.n == 0:
        return graph
    for size in range(1, graph.n + 1):
        candidates = sorted(
            (graph.induced(subset) for subset in combinations(range(graph.n), size)),
            key=lambda sub: sub.edge_count,
        )
        for sub in candidates:
            if find_homomorphism(graph, sub) is not None:
                logger.debug("core of %d-vertex pattern has %d vertices", graph.n, sub.n)
                return sub
    return graph


def unique_copy_property(g: Graph, h: PatternLike) -> bool:
    """True iff every edge of G lies in exactly one homomorphic copy of core(H)."""
    pattern_core = h.core if isinstance(h, Pattern) else core(h)
    counts: Counter = Counter()
    for copy in hom_copies(pattern_core, g):
        counts.update(copy.edges)
    return all(counts[e] == 1 for e in g.edges)


def _refined_colours(g: Graph) -> List[int]:
    colours = [g.degree(u) for u in range(g.n)]
    while True:
        signatures = [
            (colours[u], tuple(sorted(colours[v] for v in iter_bits(g.rows[u]))))
            for u in range(g.n)
        ]
        palette = {sig: i for i, sig in enumerate(sorted(set(signatures)))}
        refined = [palette[sig] for sig in signatures]
        if len(set(refined)) == len(set(colours)):
            return refined
        colours = refined


def canonical_form(g: Graph) -> Tuple[int, int]:
    """Isomorphism-invariant key: colour refinement, then the minimal adjacency string.

    Only labellings that list colour classes in colour order are tried, so
    the cost is the product of the class-size factorials.
    """
    colours = _refined_colours(g)
    cells: Dict[int, List[int]] = {}
    for u, c in enumerate(colours):
        cells.setdefault(c, []).append(u)
    ordered_cells = [cells[c] for c in sorted(cells)]
    pairs = [(i, j) for i in range(g.n) for j in range(i + 1, g.n)]
    best: Optional[int] = None
    for arrangement in product(*(permutations(cell) for cell in ordered_cells)):
        order = [u for cell in arrangement for u in cell]
        key = 0
        for i, j in pairs:
            key = (key << 1) | ((g.rows[order[i]] >> order[j]) & 1)
        if best is None or key < best:
            best = key
    return g.n, best or 0


def canonical_graph(g: Graph) -> Graph:
    """The graph rebuilt from its canonical key (a fixed representative of its class)."""
    n, key = canonical_form(g)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges = [pair for k, pair in enumerate(pairs) if (key >> (len(pairs) - 1 - k)) & 1]
    return Graph.from_edges(n, edges)


def is_isomorphic(a: Graph, b: Graph) -> bool:
    if a.n != b.n or a.edge_count != b.edge_count:
        return False
    return canonical_form(a) == canonical_form(b)


def is_triangle_free(g: Graph) -> bool:
    return count_triangles(g) == 0
