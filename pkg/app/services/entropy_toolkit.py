"""Entropies, near-bisection, and the mutual-information audits on binary blow-ups.

All logarithms are natural, so the entropy of a fair bit is ``log 2``.
Probabilities are formed from exact integer counts and converted to floats
only at the end.
"""

import math
from fractions import Fraction
from itertools import product
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
from scipy.special import entr

from ..core.errors import (
    DomainError,
    EmptyPartError,
    NoNearlyBisectedPartError,
    PreconditionError,
    SizeMismatchError,
)
from ..core.logging import get_logger
from ..models.graph import BlowupLabeling, Graph
from ..models.schemas import (
    BinaryBlowup,
    BisectionAudit,
    BisectionInstance,
    ChainBoundAudit,
    ChainBoundRow,
    ClaimDaggerAudit,
    FiniteDistribution,
    JointDistribution,
    VertexMap,
)

logger = get_logger("entropy_toolkit")

LOG2 = math.log(2.0)
STRUCTURAL_TOL = 1e-9


def entropy(d: FiniteDistribution) -> float:
    return float(np.sum(entr(np.asarray(d.weights, dtype=np.float64))))


def mutual_information(j: JointDistribution) -> float:
    """``H(X) + H(Y) - H(X, Y)`` for the joint law ``j``."""
    joint = np.asarray(j.matrix, dtype=np.float64)
    hx = np.sum(entr(joint.sum(axis=1)))
    hy = np.sum(entr(joint.sum(axis=0)))
    hxy = np.sum(entr(joint))
    return float(hx + hy - hxy)


def mutual_information_from_counts(counts) -> float:
    return mutual_information(JointDistribution.from_counts([[int(c) for c in row] for row in counts]))


def binary_entropy(q: float) -> float:
    return float(entr(q) + entr(1.0 - q))


def bernoulli_deficit(q: float) -> float:
    """``log 2 - H(Bernoulli(q))`` without the cancellation near ``q = 1/2``."""
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q={q} outside [0, 1]")
    if q in (0.0, 1.0):
        return LOG2
    delta = q - 0.5
    return 0.5 * math.log1p(-4.0 * delta * delta) + delta * (
        math.log1p(2.0 * delta) - math.log1p(-2.0 * delta)
    )


def pinsker_gap(q: float) -> Tuple[float, float]:
    """``(|q - 1/2|, sqrt((log 2 - H(q)) / 2))``; the first never exceeds the second."""
    deficit = bernoulli_deficit(q)
    return abs(q - 0.5), math.sqrt(max(deficit, 0.0) / 2.0)


def nearly_bisected(Q, P0, P1, eta: float) -> bool:
    """True iff ``H(Bernoulli(|Q & P0| / |Q|)) >= log 2 - eta^2``."""
    Q = frozenset(Q)
    if not Q:
        raise EmptyPartError("Q must be non-empty")
    if not Q <= (frozenset(P0) | frozenset(P1)):
        raise PreconditionError("Q must lie inside P0 + P1")
    q = len(Q & frozenset(P0)) / len(Q)
    return bernoulli_deficit(q) <= eta * eta


def bisection_audit(inst: BisectionInstance) -> BisectionAudit:
    """Mutual information of side vs. part, the nearly bisected mass, and the two-stage law on ``P_0``."""
    if not inst.eta < 0.2:
        raise PreconditionError("eta must be below 1/5")
    ground = len(inst.p0) + len(inst.p1)
    counts = [[len(q & inst.p0) for q in inst.parts], [len(q & inst.p1) for q in inst.parts]]
    info = mutual_information_from_counts(counts)

    nb = [j for j, q in enumerate(inst.parts) if nearly_bisected(q, inst.p0, inst.p1, inst.eta)]
    if not nb:
        raise NoNearlyBisectedPartError(f"no part is {inst.eta}-nearly bisected")
    nb_mass = sum(len(inst.parts[j]) for j in nb)

    # mu(x) = |Q_j| / (nb_mass * |P0 & Q_j|) for x in P0 & Q_j, j nearly bisected
    order = sorted(inst.p0)
    position = {x: k for k, x in enumerate(order)}
    mu = [Fraction(0)] * len(order)
    for j in nb:
        inside = inst.parts[j] & inst.p0
        share = Fraction(len(inst.parts[j]), nb_mass * len(inside))
        for x in inside:
            mu[position[x]] = share
    uniform = Fraction(1, len(order))
    tv = sum(abs(w - uniform) for w in mu) / 2

    nb_fraction = Fraction(nb_mass, ground)
    eta = Fraction(inst.eta)
    return BisectionAudit(
        mutual_information=info,
        hypothesis=info <= inst.eta**3,
        nearly_bisected_parts=nb,
        nb_fraction=float(nb_fraction),
        mu=FiniteDistribution(weights=tuple(float(w) for w in mu)),
        tv=float(tv),
        nb_bound_holds=nb_fraction >= 1 - eta,
        tv_bound_holds=tv <= 4 * eta,
    )


def random_bisection_instance(
    rng: np.random.Generator,
    half_size: int,
    parts: int,
    eta: float,
    balanced: bool = False,
    perturbation: int = 0,
) -> BisectionInstance:
    """Random balanced bipartition of ``0..2*half_size-1`` plus a random partition into parts.

    ``balanced`` puts the k-th elements of ``P_0`` and ``P_1`` in the same
    part, after which ``perturbation`` random elements are moved.
    """
    ground = rng.permutation(2 * half_size)
    p0, p1 = ground[:half_size], ground[half_size:]
    label = np.empty(2 * half_size, dtype=np.int64)
    if balanced:
        paired = rng.integers(parts, size=half_size)
        label[p0] = paired
        label[p1] = paired
        moved = rng.choice(2 * half_size, size=min(perturbation, 2 * half_size), replace=False)
        label[moved] = rng.integers(parts, size=moved.size)
    else:
        label[:] = rng.integers(parts, size=2 * half_size)
    blocks = tuple(
        frozenset(int(x) for x in np.flatnonzero(label == j)) for j in range(parts) if np.any(label == j)
    )
    return BisectionInstance(
        p0=frozenset(int(x) for x in p0), p1=frozenset(int(x) for x in p1), parts=blocks, eta=eta
    )


def _fiber_tables(labeling: BlowupLabeling, phi: VertexMap, v: int) -> Tuple[np.ndarray, np.ndarray]:
    if phi.source_size != labeling.size:
        raise SizeMismatchError(f"map covers {phi.source_size} vertices, blow-up has {labeling.size}")
    if not 0 <= v < labeling.base_size:
        raise PreconditionError(f"base vertex {v} out of range")
    words = np.arange(labeling.block, dtype=np.int64)
    fiber = labeling.fiber(v)
    images = np.asarray(phi.table, dtype=np.int64)[fiber.start:fiber.stop]
    return words, images


def _fiber_information(words: np.ndarray, images: np.ndarray, i: int) -> float:
    _, compact = np.unique(images, return_inverse=True)
    width = int(compact.max()) + 1
    bits = (words >> i) & 1
    counts = np.bincount(bits * width + compact, minlength=2 * width).reshape(2, width)
    return mutual_information_from_counts(counts)


def blowup_mutual_info(labeling: BlowupLabeling, phi: VertexMap, v: int, i: int) -> float:
    """``I(X; Y)`` for a uniform vertex of ``U_v`` with ``X`` its ``i``-th bit and ``Y`` its image."""
    if not 0 <= i < labeling.copies:
        raise PreconditionError(f"copy index {i} outside [0, {labeling.copies})")
    words, images = _fiber_tables(labeling, phi, v)
    return _fiber_information(words, images, i)


def _image_entropy(images: np.ndarray) -> float:
    _, counts = np.unique(images, return_counts=True)
    return entropy(FiniteDistribution.from_counts([int(c) for c in counts]))


def chain_bound_audit(
    labeling: BlowupLabeling,
    phi: VertexMap,
    F_size: int,
    eta: Optional[float] = None,
    eps: Optional[float] = None,
) -> ChainBoundAudit:
    """Per base vertex: ``sum_i I_{i,v} <= H(Y) <= log |V(F)|``.

    With ``eta`` given, also splits the copy indices into those where some
    ``I_{i,v}`` exceeds ``eta`` and those where every one stays below it, the
    latter being where the low-information hypothesis applies. With ``eps``
    given, ``8 eps n^2`` is reported as the ceiling on failing indices.
    """
    if eta is not None and eta <= 0:
        raise PreconditionError("eta must be positive")
    if eps is not None and eps < 0:
        raise PreconditionError("eps must be non-negative")
    if F_size < 1:
        raise PreconditionError("target must have at least one vertex")
    if phi.target_size > F_size:
        raise SizeMismatchError(f"map targets {phi.target_size} vertices, F has {F_size}")
    log_f = math.log(F_size)
    rows: List[ChainBoundRow] = []
    failing: set = set()
    for v in range(labeling.base_size):
        words, images = _fiber_tables(labeling, phi, v)
        infos = [_fiber_information(words, images, i) for i in range(labeling.copies)]
        h_y = _image_entropy(images)
        total = float(sum(infos))
        rows.append(
            ChainBoundRow(
                base=v,
                mutual_information_sum=total,
                image_entropy=h_y,
                log_target_size=log_f,
                holds=total <= h_y + STRUCTURAL_TOL and h_y <= log_f + STRUCTURAL_TOL,
            )
        )
        if eta is not None:
            failing.update(i for i, info in enumerate(infos) if info > eta)
    return ChainBoundAudit(
        rows=rows,
        total=sum(r.mutual_information_sum for r in rows),
        total_bound=labeling.base_size * log_f,
        eta=eta,
        failing_indices=sorted(failing),
        hypothesis_indices=[i for i in range(labeling.copies) if i not in failing] if eta is not None else [],
        eps=eps,
        averaging_ceiling=8 * eps * labeling.base_size**2 if eps is not None else None,
    )


def claim_dagger_audit(
    blowup: BinaryBlowup,
    i: int,
    phi: VertexMap,
    target: Graph,
    eta: Optional[float] = None,
    pattern_edges: Optional[int] = None,
) -> ClaimDaggerAudit:
    """Check "all ``I_{i,v} <= eta`` implies at least ``2^(2m-3)`` violated edges over copy ``i``".

    ``eta`` defaults to ``1 / (16 |E(H)|)`` with ``|E(H)|`` the edge count of copy ``i``.
    """
    labeling = blowup.labeling
    if not 0 <= i < blowup.m:
        raise PreconditionError(f"copy index {i} outside [0, {blowup.m})")
    if phi.source_size != labeling.size or phi.target_size != target.n:
        raise SizeMismatchError("map does not match the blow-up and target sizes")
    copy = blowup.copies[i]
    edges_h = pattern_edges if pattern_edges is not None else len(copy.edges)
    eta = 1.0 / (16 * edges_h) if eta is None else eta

    infos: Dict[int, float] = {v: blowup_mutual_info(labeling, phi, v, i) for v in copy.vertices}
    hypothesis = all(x <= eta for x in infos.values())

    copy_edges = set(copy.edges)
    violated = 0
    for a, b in blowup.graph.edges:
        u, v = labeling.base_of(a), labeling.base_of(b)
        if (min(u, v), max(u, v)) in copy_edges and not target.has_edge(phi[a], phi[b]):
            violated += 1
    threshold = 2.0 ** (2 * blowup.m - 3)
    return ClaimDaggerAudit(
        copy_index=i,
        eta=eta,
        mutual_informations=infos,
        hypothesis=hypothesis,
        violated_edges=violated,
        threshold=threshold,
        conclusion=violated >= threshold,
    )


def enumerate_cell_constant_maps(
    labeling: BlowupLabeling, i: int, target_size: int
) -> Iterator[VertexMap]:
    """Every map constant on each cell ``U_{a, i->s} = {(a, x) : x_i = s}``."""
    if not 0 <= i < labeling.copies:
        raise PreconditionError(f"copy index {i} outside [0, {labeling.copies})")
    cells = 2 * labeling.base_size
    cell_of = [2 * labeling.base_of(x) + labeling.bit(x, i) for x in range(labeling.size)]
    for choice in product(range(target_size), repeat=cells):
        yield VertexMap(
            source_size=labeling.size,
            target_size=target_size,
            table=tuple(choice[c] for c in cell_of),
        )


def random_vertex_map(rng: np.random.Generator, source_size: int, target_size: int) -> VertexMap:
    return VertexMap(
        source_size=source_size,
        target_size=target_size,
        table=tuple(int(t) for t in rng.integers(target_size, size=source_size)),
    )


def good_reciprocal_gap(Q, P0, eta: float) -> Tuple[float, float]:
    """``(| |Q & P0|/|Q| - 1/2 |, eta / sqrt 2)`` for a nearly bisected ``Q``."""
    Q = frozenset(Q)
    return abs(len(Q & frozenset(P0)) / len(Q) - 0.5), eta / math.sqrt(2.0)
