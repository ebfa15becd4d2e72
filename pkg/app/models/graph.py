from __future__ import annotations

from functools import cached_property
from typing import Iterable, Iterator, List, NamedTuple, Sequence, Tuple

from ..core.errors import PreconditionError

Edge = Tuple[int, int]


def iter_bits(mask: int) -> Iterator[int]:
    """Yield the positions of the set bits of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class Graph:
    """Simple undirected graph on ``0..n-1`` stored as packed adjacency bit rows.

    Row ``u`` is an int whose bit ``v`` is set iff ``uv`` is an edge. Instances
    are immutable and hashable.
    """

    def __init__(self, n: int, rows: Sequence[int] | None = None) -> None:
        if n < 0:
            raise PreconditionError("vertex count must be non-negative")
        rows = tuple(rows) if rows is not None else (0,) * n
        if len(rows) != n:
            raise PreconditionError(f"expected {n} adjacency rows, got {len(rows)}")
        full = (1 << n) - 1
        for u, row in enumerate(rows):
            if row & ~full or row < 0:
                raise PreconditionError(f"row {u} references a vertex outside [0, {n})")
            if (row >> u) & 1:
                raise PreconditionError(f"loop at vertex {u}")
            for v in iter_bits(row):
                if not (rows[v] >> u) & 1:
                    raise PreconditionError(f"adjacency not symmetric at ({u}, {v})")
        self.n = n
        self.rows: Tuple[int, ...] = rows

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge]) -> "Graph":
        rows = [0] * n
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise PreconditionError(f"edge ({u}, {v}) outside [0, {n})")
            if u == v:
                raise PreconditionError(f"loop at vertex {u}")
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return cls(n, rows)

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n)

    def has_edge(self, u: int, v: int) -> bool:
        return bool((self.rows[u] >> v) & 1)

    def neighbors(self, u: int) -> List[int]:
        return list(iter_bits(self.rows[u]))

    def degree(self, u: int) -> int:
        return self.rows[u].bit_count()

    @cached_property
    def edges(self) -> Tuple[Edge, ...]:
        """Edges ``(u, v)`` with ``u < v`` in lexicographic order."""
        out = []
        for u, row in enumerate(self.rows):
            for v in iter_bits(row >> (u + 1)):
                out.append((u, u + 1 + v))
        return tuple(out)

    @property
    def edge_count(self) -> int:
        return sum(row.bit_count() for row in self.rows) // 2

    def without_edges(self, removed: Iterable[Edge]) -> "Graph":
        rows = list(self.rows)
        for u, v in removed:
            rows[u] &= ~(1 << v)
            rows[v] &= ~(1 << u)
        return Graph(self.n, rows)

    def induced(self, vertices: Sequence[int]) -> "Graph":
        """Induced subgraph on ``vertices``, relabelled by their position in the sequence."""
        index = {v: i for i, v in enumerate(vertices)}
        edges = [
            (index[u], index[v])
            for u in vertices
            for v in iter_bits(self.rows[u])
            if v in index and index[u] < index[v]
        ]
        return Graph.from_edges(len(vertices), edges)

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with vertex ``u`` renamed ``perm[u]``."""
        return Graph.from_edges(self.n, ((perm[u], perm[v]) for u, v in self.edges))

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        seen = 1
        frontier = 1
        while frontier:
            reach = 0
            for u in iter_bits(frontier):
                reach |= self.rows[u]
            frontier = reach & ~seen
            seen |= frontier
        return seen == (1 << self.n) - 1

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self.rows == other.rows

    def __hash__(self) -> int:
        return hash((self.n, self.rows))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={list(self.edges)})"


class Pattern:
    """A small pattern graph H together with its lazily computed core."""

    def __init__(self, graph: Graph) -> None:
        self.graph = graph

    @cached_property
    def core(self) -> Graph:
        from ..services.graph_core import core

        return core(self)

    @property
    def n(self) -> int:
        return self.graph.n

    def __repr__(self) -> str:
        return f"Pattern({self.graph!r})"


class BlowupVertex(NamedTuple):
    base: int
    bits: Tuple[int, ...]

    def label(self) -> str:
        return f"{self.base}:{''.join(map(str, self.bits))}"


class BlowupLabeling:
    """Index map between ``V(G) x {0,1}^m`` and ``0 .. n*2^m - 1``.

    Vertex ``(u, x)`` has index ``u * 2^m + sum_i x_i 2^i``; copy index ``i``
    is 0-based and bit ``x_i`` is the ``i``-th character of the bit string.
    """

    def __init__(self, base_size: int, copies: int) -> None:
        self.base_size = base_size
        self.copies = copies

    @property
    def block(self) -> int:
        return 1 << self.copies

    @property
    def size(self) -> int:
        return self.base_size << self.copies

    def index(self, base: int, bits: Sequence[int]) -> int:
        if len(bits) != self.copies:
            raise PreconditionError(f"expected {self.copies} bits, got {len(bits)}")
        return (base << self.copies) | sum(int(b) << i for i, b in enumerate(bits))

    def vertex(self, index: int) -> BlowupVertex:
        base, word = divmod(index, self.block)
        return BlowupVertex(base, tuple((word >> i) & 1 for i in range(self.copies)))

    def base_of(self, index: int) -> int:
        return index >> self.copies

    def bit(self, index: int, i: int) -> int:
        return (index >> i) & 1

    def fiber(self, base: int) -> range:
        """Indices of ``U_base = {base} x {0,1}^m``."""
        return range(base << self.copies, (base + 1) << self.copies)
