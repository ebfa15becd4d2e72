"""Fourier analysis on F_p^n, weak regularity, triangle densities and arithmetic removal.

Transforms use the normalisation ``f^(y) = E_x f(x) exp(-2 pi i x.y / p)``.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.config import settings
from ..core.errors import (
    InstanceTooLargeError,
    PreconditionError,
    SubspaceMismatchError,
)
from ..core.logging import get_logger
from ..models.fpn import DensityFunction, FpnSpace, LinearMap, Spectrum, Subspace, same_space
from ..models.schemas import ArithRemovalResult, RoundTripResult, TriangleFreeApproximation
from .removal_engine import exact_triple_cover, greedy_triple_cover

logger = get_logger("arith_core")

IDENTITY_TOL = 1e-12


def _transform(space: FpnSpace, values: np.ndarray) -> np.ndarray:
    if space.n == 0:
        return np.asarray(values, dtype=np.complex128).reshape(-1)
    # one length-p transform per coordinate axis
    return (np.fft.fftn(np.asarray(values).reshape(space.shape)) / space.size).reshape(-1)


def dft(f: DensityFunction) -> Spectrum:
    return Spectrum(f.space, _transform(f.space, f.values))


def naive_dft(f: DensityFunction) -> Spectrum:
    """Direct ``O(p^(2n))`` double sum."""
    space = f.space
    vectors = space.vectors()
    phases = (vectors @ vectors.T) % space.p
    kernel = np.exp(-2j * np.pi * phases / space.p)
    return Spectrum(space, kernel @ f.values / space.size)


def coset_average(f: DensityFunction, H: Subspace) -> DensityFunction:
    """``f_H``: the average of ``f`` over each coset ``x + H``."""
    if H.space != f.space:
        raise SubspaceMismatchError(f"subspace of {H.space} used on a function over {f.space}")
    labels = H.coset_labels()
    sums = np.bincount(labels, weights=f.values)
    sizes = np.bincount(labels)
    return DensityFunction(f.space, np.clip((sums / sizes)[labels], 0.0, 1.0))


def regularity_defect(f: DensityFunction, H: Subspace) -> float:
    """``max_y |(f - f_H)^(y)|``."""
    averaged = coset_average(f, H)
    return float(np.max(np.abs(_transform(f.space, f.values - averaged.values))))


def is_weakly_regular(f: DensityFunction, H: Subspace, eps: float) -> bool:
    return regularity_defect(f, H) <= eps + IDENTITY_TOL


def weak_regularity_subspace(fs: Sequence[DensityFunction], eps: float) -> Subspace:
    """Subspace orthogonal to every non-trivial character with ``|f^(y)| >= eps`` for some input.

    At most ``eps^-2`` characters are taken per function, so the codimension
    is at most ``len(fs) * eps^-2``.
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    if not 1 <= len(fs) <= 3:
        raise PreconditionError("between one and three functions are supported")
    space = fs[0].space
    for f in fs[1:]:
        same_space(space, f.space)
    cap = int(np.floor(eps**-2))
    large: List[int] = []
    for f in fs:
        magnitudes = np.abs(dft(f).values)
        magnitudes[0] = 0.0
        candidates = np.flatnonzero(magnitudes >= eps)
        ranked = candidates[np.argsort(-magnitudes[candidates], kind="stable")][:cap]
        large.extend(int(y) for y in ranked)
    H = Subspace.orthogonal_to(space, space.vectors()[sorted(set(large))])
    for f in fs:
        if not is_weakly_regular(f, H, eps):
            raise PreconditionError(f"subspace of codimension {H.codimension} is not {eps}-weakly-regular")
    logger.info("weak regularity at eps=%g: %d large characters, codimension %d", eps, len(set(large)), H.codimension)
    return H


def triangle_density(f: DensityFunction, g: DensityFunction, h: DensityFunction) -> float:
    """``Lambda(f, g, h)``: mean of ``f(x) g(y) h(z)`` over the solutions of ``x + y + z = 0``."""
    same_space(f.space, g.space)
    same_space(f.space, h.space)
    space = f.space
    vectors = space.vectors()
    weights = space.p ** np.arange(space.n - 1, -1, -1, dtype=np.int64)
    chunk = max(1, (1 << 20) // max(space.size * max(space.n, 1), 1))
    total = 0.0
    for start in range(0, space.size, chunk):
        xs = np.arange(start, min(start + chunk, space.size))
        active = xs[f.values[xs] > 0]
        if active.size == 0:
            continue
        z = ((-(vectors[active][:, None, :] + vectors[None, :, :])) % space.p) @ weights
        total += float(np.sum(f.values[active][:, None] * g.values[None, :] * h.values[z]))
    return total / (space.size * space.size)


def spectral_triangle_density(f: DensityFunction, g: DensityFunction, h: DensityFunction) -> float:
    """``sum_y f^(y) g^(y) h^(y)``, equal to ``Lambda(f, g, h)``."""
    same_space(f.space, g.space)
    same_space(f.space, h.space)
    return float(np.real(np.sum(dft(f).values * dft(g).values * dft(h).values)))


def _solutions(X: np.ndarray, Y: np.ndarray, Z: np.ndarray, space: FpnSpace) -> List[Tuple[int, int, int]]:
    if X.size == 0 or Y.size == 0 or Z.size == 0:
        return []
    vectors = space.vectors()
    members = np.zeros(space.size, dtype=bool)
    members[Z] = True
    z = space.encode(-(vectors[X][:, None, :] + vectors[Y][None, :, :]))
    xi, yi = np.nonzero(members[z])
    return [(int(X[a]), int(Y[b]), int(z[a, b])) for a, b in zip(xi, yi)]


def set_triangle_count(X: DensityFunction, Y: DensityFunction, Z: DensityFunction) -> int:
    """Number of ``(x, y, z)`` in ``supp X x supp Y x supp Z`` with ``x + y + z = 0``."""
    same_space(X.space, Y.space)
    same_space(X.space, Z.space)
    return len(_solutions(X.support(), Y.support(), Z.support(), X.space))


def counting_lemma_gap(f: DensityFunction, g: DensityFunction, h: DensityFunction, H: Subspace) -> float:
    """``|Lambda(f, g, h) - Lambda(f_H, g_H, h_H)|``."""
    averaged = [coset_average(x, H) for x in (f, g, h)]
    return abs(triangle_density(f, g, h) - triangle_density(*averaged))


def exact_arith_removal(
    X: DensityFunction, Y: DensityFunction, Z: DensityFunction, mode: str = "auto"
) -> ArithRemovalResult:
    """Fewest element deletions from X, Y, Z leaving no solution of ``x + y + z = 0``.

    ``auto`` solves exactly up to the size guard and greedily above it; the
    result says which one ran.
    """
    same_space(X.space, Y.space)
    same_space(X.space, Z.space)
    space = X.space
    if not (X.is_indicator and Y.is_indicator and Z.is_indicator):
        raise PreconditionError("arithmetic removal needs indicator functions")
    if mode not in ("auto", "exact", "greedy"):
        raise PreconditionError(f"unknown removal mode {mode!r}")
    exact = mode == "exact" or (mode == "auto" and space.size <= settings.ARITH_EXACT_LIMIT)
    if exact and space.size > settings.ARITH_EXACT_LIMIT:
        raise InstanceTooLargeError(f"p^n={space.size} exceeds the exact guard {settings.ARITH_EXACT_LIMIT}")

    size = space.size
    # element x of the k-th set gets id k * size + x
    triples = [(x, size + y, 2 * size + z) for x, y, z in _solutions(X.support(), Y.support(), Z.support(), space)]
    cover = exact_triple_cover(triples) if exact else greedy_triple_cover(triples)
    removed = tuple(tuple(sorted(item - k * size for item in cover if item // size == k)) for k in range(3))
    return ArithRemovalResult(deletions=len(cover), removed=removed, exact=exact)


def _lift_sample(f: DensityFunction, lifted: FpnSpace, m: int, rng: np.random.Generator) -> np.ndarray:
    """Keep each point ``(x, w)`` of the lift independently with probability ``f(x)``."""
    above = np.repeat(f.values, f.space.p**m)
    return np.flatnonzero(rng.random(lifted.size) < above)


def weighted_removal_roundtrip(
    f: DensityFunction,
    g: DensityFunction,
    h: DensityFunction,
    eps: float,
    m: int,
    seed: Optional[int] = None,
) -> RoundTripResult:
    """Lift to F_p^(n+m), remove all triangles there, and round back down.

    ``f'(x) = 0`` when at least ``f(x) p^m / 4`` lifted points above ``x``
    were deleted, otherwise ``f'(x) = f(x)``.
    """
    same_space(f.space, g.space)
    same_space(f.space, h.space)
    if m < 0:
        raise PreconditionError("lift dimension must be non-negative")
    space = f.space
    lifted = space.lift(m)
    fiber = space.p**m
    rng = np.random.default_rng(settings.DEFAULT_SEED if seed is None else seed)

    samples = [_lift_sample(x, lifted, m, rng) for x in (f, g, h)]
    indicators = [DensityFunction.indicator(lifted, s) for s in samples]
    exact = lifted.size <= settings.ROUNDTRIP_EXACT_LIMIT
    removal = exact_arith_removal(*indicators, mode="exact" if exact else "greedy")

    rounded = []
    for original, removed in zip((f, g, h), removal.removed):
        deleted_above = np.bincount(np.asarray(removed, dtype=np.int64) // fiber, minlength=space.size)
        zeroed = deleted_above >= original.values * fiber / 4.0
        rounded.append(DensityFunction(space, np.where(zeroed, 0.0, original.values)))

    l1 = tuple(a.l1_distance(b) for a, b in zip((f, g, h), rounded))
    deletions = tuple(len(r) for r in removal.removed)
    ledger = tuple(4.0 * d / lifted.size for d in deletions)
    budget = eps * lifted.size / 4.0
    success = set_triangle_count(*rounded) == 0
    if not success:
        logger.warning("round trip with m=%d left triangles after rounding", m)
    return RoundTripResult(
        functions=tuple(rounded),
        lift_dimensions=m,
        lifted_sizes=tuple(len(s) for s in samples),
        lift_deletions=deletions,
        exact_removal=removal.exact,
        l1_distances=l1,
        l1_ledger=ledger,
        deletion_budget=budget,
        within_budget=all(d <= budget for d in deletions),
        success=success,
    )


def quotient_density(f: DensityFunction, phi: LinearMap) -> DensityFunction:
    """Average of ``f`` over each fibre ``phi^-1(u)``; for an indicator this is ``|phi^-1(u) & X| / p^(n-m)``."""
    images = phi.apply(np.arange(f.space.size))
    sums = np.bincount(images, weights=f.values, minlength=phi.codomain.size)
    sizes = np.bincount(images, minlength=phi.codomain.size)
    return DensityFunction(phi.codomain, np.clip(sums / np.maximum(sizes, 1), 0.0, 1.0))


def triangle_free_approximation(
    X: DensityFunction,
    Y: DensityFunction,
    Z: DensityFunction,
    delta: float,
    lift: int,
    seed: Optional[int] = None,
) -> TriangleFreeApproximation:
    """Map X, Y, Z through a linear ``phi`` into triangle-free target sets of the quotient.

    Weak regularity at ``delta / 3`` picks the kernel of ``phi``; the
    quotient densities go through the weighted removal round trip and the
    supports of the rounded functions are the targets.
    """
    H = weak_regularity_subspace([X, Y, Z], delta / 3.0)
    phi = LinearMap(X.space, H.codimension, H.annihilator().basis if H.codimension else ())
    gap = counting_lemma_gap(X, Y, Z, H)
    quotients = [quotient_density(s, phi) for s in (X, Y, Z)]
    density = triangle_density(*quotients)
    roundtrip = weighted_removal_roundtrip(*quotients, eps=delta, m=lift, seed=seed)

    images = phi.apply(np.arange(X.space.size))
    targets = []
    missed = []
    for original, rounded in zip((X, Y, Z), roundtrip.functions):
        target = rounded.support()
        targets.append(tuple(int(u) for u in target))
        hit = np.isin(images, target)
        missed.append(int(np.count_nonzero((original.values > 0) & ~hit)))
    logger.info(
        "triangle-free approximation: codimension %d, counting gap %.3g, missed %s",
        H.codimension, gap, missed,
    )
    return TriangleFreeApproximation(
        phi=phi,
        codimension=H.codimension,
        quotient_density=density,
        counting_bound=gap,
        targets=tuple(targets),
        missed=tuple(missed),
        roundtrip=roundtrip,
    )


def random_indicator(space: FpnSpace, density: float, rng: np.random.Generator) -> DensityFunction:
    return DensityFunction(space, (rng.random(space.size) < density).astype(np.float64))


def random_density(space: FpnSpace, rng: np.random.Generator) -> DensityFunction:
    return DensityFunction(space, rng.random(space.size))
