import math
from itertools import combinations, product

import numpy as np
import pytest

from app.core.errors import (
    InstanceTooLargeError,
    PreconditionError,
    SizeMismatchError,
    SpaceMismatchError,
    TargetNotTriangleFreeError,
    UnsupportedPrimeError,
)
from app.models.fpn import DensityFunction, FpnSpace, LinearMap
from app.models.schemas import TricolorTriple
from app.services.arith_constructions import (
    asymptotic_cp_limit,
    cp_constant,
    expand_construction,
    expansion_radius,
    good_block_floor,
    good_coordinates,
    missed_mass_audit,
    optimal_targets,
    primes_up_to,
    random_linear_map,
    tricolor_search,
    verify_tricolor,
)
from app.services.arith_core import set_triangle_count


def brute_force_tricolor(space: FpnSpace) -> int:
    pairs = list(product(range(space.size), repeat=2))
    best = 0
    for k in range(1, len(pairs) + 1):
        found = False
        for chosen in combinations(pairs, k):
            xs = tuple(x for x, _ in chosen)
            ys = tuple(y for _, y in chosen)
            zs = tuple(int(space.neg(space.add(x, y))) for x, y in chosen)
            if verify_tricolor(TricolorTriple(space=space, xs=xs, ys=ys, zs=zs)):
                found = True
                break
        if not found:
            return best
        best = k
    return best


# Tricolor triples

def test_verify_tricolor_examples():
    line = FpnSpace(p=3, n=1)
    assert verify_tricolor(TricolorTriple(space=line, xs=(0, 1), ys=(0, 1), zs=(0, 1)))
    assert not verify_tricolor(TricolorTriple(space=line, xs=(0, 1), ys=(0, 2), zs=(0, 0)))
    assert verify_tricolor(TricolorTriple(space=line, xs=(), ys=(), zs=()))


def test_triple_validation():
    line = FpnSpace(p=3, n=1)
    with pytest.raises(PreconditionError):
        TricolorTriple(space=line, xs=(3,), ys=(0,), zs=(0,))
    with pytest.raises(SizeMismatchError):
        TricolorTriple(space=line, xs=(0, 1), ys=(0,), zs=(0,))


def test_translation_keeps_the_property():
    space = FpnSpace(p=3, n=2)
    t = tricolor_search(space, "greedy").triple
    assert verify_tricolor(t)
    a, b = 4, 7
    c = int(space.neg(space.add(a, b)))
    shifted = TricolorTriple(
        space=space,
        xs=tuple(int(space.add(x, a)) for x in t.xs),
        ys=tuple(int(space.add(y, b)) for y in t.ys),
        zs=tuple(int(space.add(z, c)) for z in t.zs),
    )
    assert verify_tricolor(shifted)


@pytest.mark.parametrize("p, n", [(2, 1), (3, 1), (2, 2)])
def test_exhaustive_search_finds_the_maximum(p, n):
    space = FpnSpace(p=p, n=n)
    result = tricolor_search(space, "exhaustive")
    assert result.exhaustive_optimum
    assert not result.budget_exhausted
    assert verify_tricolor(result.triple)
    assert result.triple.length == brute_force_tricolor(space)


def test_small_optima():
    assert tricolor_search(FpnSpace(p=2, n=1), "exhaustive").triple.length == 1
    assert tricolor_search(FpnSpace(p=3, n=1), "exhaustive").triple.length == 2
    assert tricolor_search(FpnSpace(p=3, n=1), "greedy").triple.length == 2


def test_greedy_output_verifies():
    result = tricolor_search(FpnSpace(p=3, n=2), "greedy")
    assert verify_tricolor(result.triple)
    assert not result.exhaustive_optimum


def test_search_budget_and_guards():
    result = tricolor_search(FpnSpace(p=3, n=2), "greedy", budget=5)
    assert result.budget_exhausted
    assert result.candidates_examined == 5
    with pytest.raises(InstanceTooLargeError):
        tricolor_search(FpnSpace(p=2, n=4), "exhaustive")
    with pytest.raises(PreconditionError):
        tricolor_search(FpnSpace(p=2, n=1), "random")


# Coset expansion

def test_expansion_radius():
    assert [expansion_radius(p) for p in (2, 3, 5, 7, 11)] == [0, 0, 1, 1, 3]


def test_expansion_block_layout():
    base = FpnSpace(p=5, n=1)
    es = expand_construction(TricolorTriple(space=base, xs=(0,), ys=(0,), zs=(0,)))
    assert es.space == FpnSpace(p=5, n=2)
    assert es.x_blocks == ((0, 1),)
    assert es.z_blocks == ((1, 2),)
    assert len(es.x_blocks[0]) == good_block_floor(5, 1) == 2

    es2 = expand_construction(TricolorTriple(space=FpnSpace(p=2, n=1), xs=(1,), ys=(1,), zs=(0,)))
    assert es2.x_blocks == ((2,),)
    assert es2.z_blocks == ((1,),)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_expanded_sets_are_triangle_free(p):
    t = tricolor_search(FpnSpace(p=p, n=1), "greedy").triple
    es = expand_construction(t)
    block = good_block_floor(p, t.length)
    assert all(len(b) == block for b in es.x_blocks + es.y_blocks + es.z_blocks)
    X, Y, Z = (DensityFunction.indicator(es.space, es.union(k)) for k in "xyz")
    assert set_triangle_count(X, Y, Z) == 0


def test_block_floor_exceeds_a_quarter():
    for p in primes_up_to(199):
        for l in (1, 2, 3):
            assert 4 * good_block_floor(p, l) >= p**l


# Missed mass

@pytest.fixture
def expanded_f3():
    t = tricolor_search(FpnSpace(p=3, n=1), "exhaustive").triple
    return expand_construction(t)


def test_zero_map_with_empty_targets_misses_everything(expanded_f3):
    es = expanded_f3
    l = es.source.length
    phi = LinearMap(es.space, 1, np.zeros((1, es.space.n), dtype=np.int64))
    audit = missed_mass_audit(es, phi, (), (), ())
    assert audit.missed == 3 * l * 3 ** (l - 1) * (expansion_radius(3) + 1)
    assert audit.holds
    assert audit.bound == pytest.approx((l - 1) * 3**l / 4)


def test_audit_rejects_bad_targets(expanded_f3):
    es = expanded_f3
    phi = LinearMap(es.space, 1, np.zeros((1, es.space.n), dtype=np.int64))
    with pytest.raises(TargetNotTriangleFreeError):
        missed_mass_audit(es, phi, (0,), (0,), (0,))
    other = LinearMap(FpnSpace(p=3, n=1), 1, [[1]])
    with pytest.raises(SpaceMismatchError):
        missed_mass_audit(es, other, (), (), ())


@pytest.mark.parametrize("p, m", [(2, 1), (2, 2), (3, 1), (5, 1)])
def test_random_maps_miss_enough(p, m):
    t = tricolor_search(FpnSpace(p=p, n=1), "greedy").triple
    es = expand_construction(t)
    rng = np.random.default_rng(p * 10 + m)
    for _ in range(10):
        phi = random_linear_map(es.space, m, rng)
        audit = missed_mass_audit(es, phi, *optimal_targets(es, phi))
        assert audit.holds
        assert all(b.missed >= b.floor for b in audit.blocks if b.good)
        _, good = good_coordinates(phi, es)
        assert len(good) >= t.length - phi.rank


def test_optimal_targets_guard(expanded_f3):
    phi = LinearMap(expanded_f3.space, 2, np.zeros((2, expanded_f3.space.n), dtype=np.int64))
    with pytest.raises(InstanceTooLargeError):
        optimal_targets(expanded_f3, phi)


def test_random_linear_map_rank(rng):
    space = FpnSpace(p=3, n=3)
    assert random_linear_map(space, 2, rng, rank=1).rank == 1


# The c_p constant

def test_c2():
    result = cp_constant(2)
    assert result.c_p == pytest.approx(0.0817042, abs=1e-6)
    assert result.minimiser == pytest.approx(0.5, abs=1e-4)
    assert result.agreement < 1e-6


def test_cp_band():
    values = [cp_constant(p, grid_points=200_000) for p in primes_up_to(199)]
    assert all(r.agreement < 1e-5 for r in values)
    assert all(0.0 < r.c_p < 0.1 for r in values)
    assert all(b.c_p < a.c_p for a, b in zip(values, values[1:]))
    scaled = [r.c_p * math.log(r.p) for r in values if r.p >= 11]
    assert all(0.13 <= s <= 0.25 for s in scaled)
    assert all(b > a for a, b in zip(scaled, scaled[1:]))
    assert scaled[-1] < asymptotic_cp_limit()


def test_unsupported_primes():
    with pytest.raises(UnsupportedPrimeError):
        cp_constant(4)
    with pytest.raises(UnsupportedPrimeError):
        cp_constant(211)


def test_asymptotic_limit():
    assert 0.171 <= asymptotic_cp_limit() <= 0.174
