"""Tricolor sum-free triples, their coset expansion, the missed-mass audit and the c_p constant."""

import math
from fractions import Fraction
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from ..core.config import settings
from ..core.errors import (
    InstanceTooLargeError,
    PreconditionError,
    SpaceMismatchError,
    TargetNotTriangleFreeError,
    UnsupportedPrimeError,
)
from ..core.logging import get_logger
from ..models.fpn import DensityFunction, FpnSpace, LinearMap
from ..models.schemas import (
    BlockMiss,
    CpResult,
    ExpandedSets,
    MissedMassAudit,
    TricolorSearchResult,
    TricolorTriple,
)
from .arith_core import set_triangle_count
from .finite_field import nullspace_mod_p, rref_mod_p

logger = get_logger("arith_constructions")

CP_PRIME_LIMIT = 199
CP_GRID_POINTS = 1_000_000
CP_EDGE = 1e-9


# Tricolor sum-free triples

def verify_tricolor(t: TricolorTriple) -> bool:
    """Exhaustively check ``x_i + y_j + z_k = 0`` iff ``i = j = k``."""
    l = t.length
    if l**3 > 10**7:
        raise InstanceTooLargeError(f"l^3 = {l**3} triples exceeds 10^7")
    if l == 0:
        return True
    space = t.space
    vectors = space.vectors()
    xs, ys, zs = (np.asarray(seq, dtype=np.int64) for seq in (t.xs, t.ys, t.zs))
    needed = space.encode(-(vectors[xs][:, None, :] + vectors[ys][None, :, :]))
    hits = needed[:, :, None] == zs[None, None, :]
    diagonal = np.zeros((l, l, l), dtype=bool)
    diagonal[np.arange(l), np.arange(l), np.arange(l)] = True
    return bool(np.array_equal(hits, diagonal))


class _TricolorState:
    """Incremental compatibility test for a growing list of ``(x, y, z)`` points."""

    def __init__(self, space: FpnSpace) -> None:
        self.space = space
        size = space.size
        vectors = space.vectors()
        self.add = space.encode(vectors[:, None, :] + vectors[None, :, :]).reshape(size, size)
        self.neg = space.encode(-vectors)
        self.xs: List[int] = []
        self.ys: List[int] = []
        self.zs: List[int] = []

    def third(self, x: int, y: int) -> int:
        return int(self.neg[self.add[x, y]])

    def compatible(self, x: int, y: int) -> bool:
        """True iff appending ``(x, y, -x-y)`` creates no off-diagonal solution."""
        z = self.third(x, y)
        xs, ys, zs = self.xs + [x], self.ys + [y], self.zs + [z]
        last = len(xs) - 1
        add = self.add
        for i in range(last + 1):
            for j in range(last + 1):
                if i == j == last:
                    continue
                if add[add[xs[last], ys[i]], zs[j]] == 0:
                    return False
                if add[add[xs[i], ys[last]], zs[j]] == 0:
                    return False
                if add[add[xs[i], ys[j]], zs[last]] == 0:
                    return False
        return True

    def push(self, x: int, y: int) -> None:
        self.xs.append(x)
        self.ys.append(y)
        self.zs.append(self.third(x, y))

    def pop(self) -> None:
        self.xs.pop()
        self.ys.pop()
        self.zs.pop()

    def triple(self) -> TricolorTriple:
        return TricolorTriple(space=self.space, xs=tuple(self.xs), ys=tuple(self.ys), zs=tuple(self.zs))


def tricolor_search(space: FpnSpace, mode: str = "greedy", budget: int = 1_000_000) -> TricolorSearchResult:
    """Longest tricolor sum-free triple found in ``space``.

    ``exhaustive`` fixes the first point at ``(0, 0, 0)`` (translations
    preserve the property) and lists the rest by increasing ``x``; it returns
    the true maximum unless the candidate budget runs out. ``greedy`` scans
    ``(x, y)`` pairs lexicographically and keeps every compatible one.
    """
    if space.size**2 > 10**7:
        raise InstanceTooLargeError(f"addition table for p^n={space.size} exceeds 10^7 entries")
    state = _TricolorState(space)
    examined = 0
    exhausted = False

    if mode == "greedy":
        for x, y in product(range(space.size), repeat=2):
            if examined >= budget:
                exhausted = True
                break
            examined += 1
            if x in state.xs or y in state.ys:
                continue
            if state.compatible(x, y):
                state.push(x, y)
        result = state.triple()
    elif mode == "exhaustive":
        if space.size > settings.TRICOLOR_EXHAUSTIVE_LIMIT:
            raise InstanceTooLargeError(
                f"p^n={space.size} exceeds the exhaustive guard {settings.TRICOLOR_EXHAUSTIVE_LIMIT}"
            )
        state.push(0, 0)
        best = state.triple()

        def extend(last_x: int) -> None:
            nonlocal best, examined, exhausted
            if len(state.xs) > best.length:
                best = state.triple()
            if len(state.xs) + (space.size - 1 - last_x) <= best.length:
                return
            for x in range(last_x + 1, space.size):
                for y in range(space.size):
                    if examined >= budget:
                        exhausted = True
                        return
                    examined += 1
                    if y in state.ys or not state.compatible(x, y):
                        continue
                    state.push(x, y)
                    extend(x)
                    state.pop()
                    if exhausted:
                        return

        extend(0)
        result = best
    else:
        raise PreconditionError(f"unknown tricolor search mode {mode!r}")

    if exhausted:
        logger.warning("tricolor %s search stopped after %d candidates", mode, examined)
    return TricolorSearchResult(
        triple=result,
        mode=mode,
        exhaustive_optimum=mode == "exhaustive" and not exhausted,
        budget_exhausted=exhausted,
        candidates_examined=examined,
    )


# Coset expansion

def expansion_radius(p: int) -> int:
    """``floor((p - 2) / 3)``."""
    return (p - 2) // 3


def expand_construction(t: TricolorTriple) -> ExpandedSets:
    """Blocks ``X'_i``, ``Y'_i``, ``Z'_i`` of F_p^(n+l) above ``x_i``, ``y_i``, ``z_i``.

    Coordinate ``n+i`` of ``X'_i`` and ``Y'_i`` lies in ``{0..r}``, that of
    ``Z'_i`` in ``{1..r+1}``, with ``r = floor((p-2)/3)``; the remaining
    lifted coordinates are free.
    """
    base = t.space
    l = t.length
    lifted = base.lift(l)
    r = expansion_radius(base.p)
    vectors = lifted.vectors()
    head = base.encode(vectors[:, : base.n]) if base.n else np.zeros(lifted.size, dtype=np.int64)

    def blocks(points: Sequence[int], low: int) -> Tuple[Tuple[int, ...], ...]:
        out = []
        for i, point in enumerate(points):
            column = vectors[:, base.n + i]
            chosen = (head == point) & (column >= low) & (column <= low + r)
            out.append(tuple(int(e) for e in np.flatnonzero(chosen)))
        return tuple(out)

    return ExpandedSets(
        source=t,
        space=lifted,
        x_blocks=blocks(t.xs, 0),
        y_blocks=blocks(t.ys, 0),
        z_blocks=blocks(t.zs, 1),
    )


def good_block_floor(p: int, l: int) -> int:
    """``p^(l-1) (floor((p-2)/3) + 1)``, at least ``p^l / 4`` for every prime."""
    return p ** (l - 1) * (expansion_radius(p) + 1)


def good_coordinates(phi: LinearMap, es: ExpandedSets) -> Tuple[np.ndarray, List[int]]:
    """A kernel vector ``w`` vanishing on the first ``n`` coordinates, and the ``i`` with ``w_(n+i) != 0``.

    The kernel restricted to those coordinates has dimension at least
    ``l - m``; summing its reduced basis gives a vector nonzero at every pivot.
    """
    space = es.space
    n = es.source.space.n
    l = es.source.length
    head = np.eye(n, space.n, dtype=np.int64)
    constraints = np.vstack([phi.matrix, head])
    basis = nullspace_mod_p(constraints, space.p, space.n)
    if basis.shape[0] == 0:
        return np.zeros(space.n, dtype=np.int64), []
    reduced, _ = rref_mod_p(basis, space.p)
    w = reduced.sum(axis=0) % space.p
    return w, [i for i in range(l) if w[n + i]]


def missed_mass_audit(
    es: ExpandedSets,
    phi: LinearMap,
    Xpp: Sequence[int],
    Ypp: Sequence[int],
    Zpp: Sequence[int],
) -> MissedMassAudit:
    """Elements of X', Y', Z' not mapped into X'', Y'', Z'', against ``(l - m) p^l / 4``."""
    if phi.domain != es.space:
        raise SpaceMismatchError(f"map is defined on {phi.domain}, sets live in {es.space}")
    codomain = phi.codomain
    targets = [DensityFunction.indicator(codomain, s) for s in (Xpp, Ypp, Zpp)]
    if set_triangle_count(*targets) > 0:
        raise TargetNotTriangleFreeError("X'' x Y'' x Z'' contains a solution of x + y + z = 0")

    p, l, m = es.space.p, es.source.length, codomain.n
    image = phi.apply(np.arange(es.space.size))
    inside = [target.values[image] > 0 for target in targets]

    def missed_in(block: Sequence[int], k: int) -> int:
        return int(np.count_nonzero(~inside[k][np.asarray(block, dtype=np.int64)])) if block else 0

    per_set = tuple(
        sum(missed_in(block, k) for block in blocks)
        for k, blocks in enumerate((es.x_blocks, es.y_blocks, es.z_blocks))
    )
    _, good = good_coordinates(phi, es)
    floor = good_block_floor(p, l) if l else 0
    block_rows = [
        BlockMiss(
            index=i,
            good=i in good,
            missed=missed_in(es.x_blocks[i], 0) + missed_in(es.y_blocks[i], 1) + missed_in(es.z_blocks[i], 2),
            floor=floor,
        )
        for i in range(l)
    ]
    total = sum(per_set)
    bound = Fraction((l - m) * p**l, 4)
    return MissedMassAudit(
        missed=total,
        missed_by_set=per_set,
        bound=float(bound),
        holds=total >= bound,
        blocks=block_rows,
    )


# The c_p constant

def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % d for d in range(2, math.isqrt(p) + 1))


def _log_phi(p: int, t):
    """``log(t^(-(p-1)/3) (1 + t + ... + t^(p-1)))`` for ``0 < t < 1``."""
    t = np.asarray(t, dtype=np.float64)
    return -(p - 1) / 3.0 * np.log(t) + np.log(-np.expm1(p * np.log(t))) - np.log1p(-t)


def cp_constant(p: int, grid_points: int = CP_GRID_POINTS) -> CpResult:
    """``c_p = 1 - log_p(inf_t phi_p(t))`` by golden section, cross-checked on a uniform grid."""
    if not _is_prime(p) or p > CP_PRIME_LIMIT:
        raise UnsupportedPrimeError(f"c_p is tabulated for primes up to {CP_PRIME_LIMIT}, got {p}")
    coarse = np.linspace(CP_EDGE, 1.0 - CP_EDGE, 4096)
    k = int(np.clip(np.argmin(_log_phi(p, coarse)), 1, coarse.size - 2))
    res = minimize_scalar(
        lambda t: float(_log_phi(p, t)),
        bracket=(coarse[k - 1], coarse[k], coarse[k + 1]),
        method="golden",
        tol=1e-10,
    )
    grid = np.linspace(CP_EDGE, 1.0 - CP_EDGE, grid_points)
    grid_min = float(np.min(_log_phi(p, grid)))
    log_p = math.log(p)
    c_p = 1.0 - float(res.fun) / log_p
    grid_c_p = 1.0 - grid_min / log_p
    return CpResult(
        p=p,
        c_p=c_p,
        minimiser=float(res.x),
        minimum=math.exp(float(res.fun)),
        grid_minimum=math.exp(grid_min),
        grid_c_p=grid_c_p,
        agreement=abs(c_p - grid_c_p),
    )


def asymptotic_cp_limit() -> float:
    """``-log inf_{x > 0} e^(x/3) (1 - e^(-x)) / x``, the limit of ``c_p log p``."""

    def log_psi(x):
        x = np.asarray(x, dtype=np.float64)
        return x / 3.0 + np.log(-np.expm1(-x)) - np.log(x)

    coarse = np.linspace(1e-3, 30.0, 4096)
    k = int(np.clip(np.argmin(log_psi(coarse)), 1, coarse.size - 2))
    res = minimize_scalar(
        lambda x: float(log_psi(x)),
        bracket=(coarse[k - 1], coarse[k], coarse[k + 1]),
        method="golden",
        tol=1e-10,
    )
    return -float(res.fun)


def primes_up_to(limit: int) -> List[int]:
    return [p for p in range(2, limit + 1) if _is_prime(p)]


def random_linear_map(space: FpnSpace, m: int, rng: np.random.Generator, rank: Optional[int] = None) -> LinearMap:
    """Uniform random ``m x n`` matrix, redrawn until it has the requested rank."""
    while True:
        matrix = rng.integers(space.p, size=(m, space.n))
        candidate = LinearMap(space, m, matrix)
        if rank is None or candidate.rank == rank:
            return candidate


OPTIMAL_TARGET_LIMIT = 6


def optimal_targets(es: ExpandedSets, phi: LinearMap) -> Tuple[Tuple[int, ...], Tuple[int, ...], Tuple[int, ...]]:
    """Triangle-free ``X'', Y'', Z''`` in the codomain hitting the most of X', Y', Z'.

    Enumerates ``X''`` and ``Y''``; the best ``Z''`` is then everything
    outside ``-(X'' + Y'')``.
    """
    codomain = phi.codomain
    size = codomain.size
    if size > OPTIMAL_TARGET_LIMIT:
        raise InstanceTooLargeError(f"codomain has {size} points; exhaustive target guard is {OPTIMAL_TARGET_LIMIT}")
    image = phi.apply(np.arange(es.space.size))
    hits = [
        np.bincount(image[np.asarray(es.union(which), dtype=np.int64)], minlength=size)
        for which in ("x", "y", "z")
    ]
    vectors = codomain.vectors()
    third = codomain.encode(-(vectors[:, None, :] + vectors[None, :, :])).reshape(size, size)
    subsets = range(1 << size)
    weight = [
        [int(sum(h[u] for u in range(size) if (mask >> u) & 1)) for mask in subsets] for h in hits
    ]
    full = (1 << size) - 1
    best_score, best = -1, (0, 0, 0)
    for a in subsets:
        for b in subsets:
            forbidden = 0
            for u in range(size):
                if (a >> u) & 1:
                    for v in range(size):
                        if (b >> v) & 1:
                            forbidden |= 1 << int(third[u, v])
            c = full & ~forbidden
            score = weight[0][a] + weight[1][b] + weight[2][c]
            if score > best_score:
                best_score, best = score, (a, b, c)
    return tuple(tuple(u for u in range(size) if (mask >> u) & 1) for mask in best)
