import math
from itertools import combinations

import numpy as np
import pytest

from app.core.errors import InstanceTooLargeError, PreconditionError, SpaceMismatchError, SubspaceMismatchError
from app.models.fpn import DensityFunction, FpnSpace, LinearMap, Subspace
from app.services.arith_core import (
    coset_average,
    counting_lemma_gap,
    dft,
    exact_arith_removal,
    is_weakly_regular,
    naive_dft,
    quotient_density,
    random_density,
    random_indicator,
    regularity_defect,
    set_triangle_count,
    spectral_triangle_density,
    triangle_density,
    triangle_free_approximation,
    weak_regularity_subspace,
    weighted_removal_roundtrip,
)

SMALL_SPACES = [(p, n) for p in (2, 3, 5) for n in (1, 2, 3, 4)]


def brute_force_arith_removal(X, Y, Z) -> int:
    space = X.space
    items = [(k, int(e)) for k, f in enumerate((X, Y, Z)) for e in f.support()]
    for size in range(len(items) + 1):
        for removed in combinations(items, size):
            kept = [set(f.support().tolist()) for f in (X, Y, Z)]
            for k, e in removed:
                kept[k].discard(e)
            indicators = [DensityFunction.indicator(space, sorted(s)) for s in kept]
            if set_triangle_count(*indicators) == 0:
                return size
    raise AssertionError("unreachable")


# Transform

def test_transform_of_constant_and_point_mass():
    space = FpnSpace(p=3, n=2)
    spectrum = dft(DensityFunction.constant(space, 1.0))
    assert spectrum[0] == pytest.approx(1.0)
    assert np.allclose(spectrum.values[1:], 0.0)
    point = dft(DensityFunction.indicator(space, [0]))
    assert np.allclose(point.values, 1 / 9)


@pytest.mark.parametrize("p, n", [(2, 3), (3, 3), (5, 2), (7, 2)])
def test_dft_matches_naive_double_sum(p, n, rng):
    f = random_density(FpnSpace(p=p, n=n), rng)
    assert np.allclose(dft(f).values, naive_dft(f).values, atol=1e-10)


@pytest.mark.parametrize("p, n", SMALL_SPACES)
def test_parseval(p, n, rng):
    f = random_density(FpnSpace(p=p, n=n), rng)
    assert dft(f).l2_squared() == pytest.approx(float(np.mean(f.values**2)), abs=1e-9)


# Coset averages and regularity

def test_coset_average_extremes(rng):
    space = FpnSpace(p=3, n=2)
    f = random_density(space, rng)
    whole = coset_average(f, Subspace.whole(space))
    assert np.allclose(whole.values, f.mean())
    assert np.allclose(coset_average(f, Subspace.zero(space)).values, f.values)
    with pytest.raises(SubspaceMismatchError):
        coset_average(f, Subspace.whole(FpnSpace(p=3, n=3)))


def test_coset_average_is_idempotent_and_mean_preserving(rng):
    space = FpnSpace(p=3, n=3)
    f = random_density(space, rng)
    H = Subspace.orthogonal_to(space, [[1, 2, 0]])
    fH = coset_average(f, H)
    assert fH.mean() == pytest.approx(f.mean())
    assert np.allclose(coset_average(fH, H).values, fH.values)


def test_difference_spectrum_vanishes_on_the_annihilator(rng):
    space = FpnSpace(p=3, n=3)
    f = random_density(space, rng)
    H = Subspace.orthogonal_to(space, [[1, 1, 0], [0, 1, 2]])
    difference = dft(f).values - dft(coset_average(f, H)).values
    assert np.allclose(difference[H.annihilator().member_indices()], 0.0, atol=1e-12)


def test_weak_regularity_examples(rng):
    space = FpnSpace(p=3, n=3)
    f = random_density(space, rng)
    assert is_weakly_regular(f, Subspace.zero(space), 0.0)
    assert regularity_defect(f, Subspace.zero(space)) == pytest.approx(0.0, abs=1e-12)
    H = Subspace.orthogonal_to(space, [[0, 0, 1]])
    coset = DensityFunction.indicator(space, [k for k in range(space.size) if space.digits(k)[2] == 1])
    assert is_weakly_regular(coset, H, 0.0)


def test_constant_function_needs_no_subspace():
    space = FpnSpace(p=5, n=2)
    assert weak_regularity_subspace([DensityFunction.constant(space, 0.4)], 0.2).codimension == 0


def test_hyperplane_indicator_gives_codimension_one():
    space = FpnSpace(p=2, n=3)
    f = DensityFunction.indicator(space, [k for k in range(space.size) if space.digits(k)[0] == 0])
    H = weak_regularity_subspace([f], 0.3)
    assert H.codimension == 1
    assert H.contains([0, 1, 1])
    assert not H.contains([1, 0, 0])


def test_weak_regularity_input_checks():
    space = FpnSpace(p=2, n=2)
    f = DensityFunction.constant(space, 0.5)
    with pytest.raises(PreconditionError):
        weak_regularity_subspace([f], 0.0)
    with pytest.raises(PreconditionError):
        weak_regularity_subspace([f] * 4, 0.3)
    with pytest.raises(SpaceMismatchError):
        weak_regularity_subspace([f, DensityFunction.constant(FpnSpace(p=2, n=3), 0.5)], 0.3)


@pytest.mark.parametrize("eps", [0.2, 0.3])
def test_regularity_and_counting_bounds(eps):
    space = FpnSpace(p=3, n=5)
    rng = np.random.default_rng(int(eps * 10))
    cap = math.ceil(3 * eps**-2)
    for _ in range(40):
        fs = [random_indicator(space, float(rng.uniform(0.1, 0.6)), rng) for _ in range(3)]
        H = weak_regularity_subspace(fs, eps)
        assert H.codimension <= min(cap, space.n)
        assert all(is_weakly_regular(f, H, eps) for f in fs)
        assert counting_lemma_gap(*fs, H) <= 3 * eps + 1e-12


# Triangle density

def test_density_examples():
    space = FpnSpace(p=3, n=2)
    ones = DensityFunction.constant(space, 1.0)
    assert triangle_density(ones, ones, ones) == pytest.approx(1.0)
    point = DensityFunction.indicator(space, [0])
    assert triangle_density(point, point, point) == pytest.approx(3.0**-4)
    halves = [DensityFunction.constant(space, c) for c in (0.5, 0.25, 0.8)]
    assert triangle_density(*halves) == pytest.approx(0.1)


def test_whole_space_triangle_count():
    space = FpnSpace(p=2, n=2)
    full = DensityFunction.indicator(space, range(space.size))
    assert set_triangle_count(full, full, full) == 16
    assert triangle_density(full, full, full) == pytest.approx(1.0)


@pytest.mark.parametrize("p, n", SMALL_SPACES)
def test_direct_and_spectral_density_agree(p, n):
    space = FpnSpace(p=p, n=n)
    rng = np.random.default_rng(p * 10 + n)
    for _ in range(20):
        f, g, h = (random_density(space, rng) for _ in range(3))
        assert triangle_density(f, g, h) == pytest.approx(spectral_triangle_density(f, g, h), abs=1e-9)


def test_density_space_mismatch():
    a = DensityFunction.constant(FpnSpace(p=2, n=2), 1.0)
    b = DensityFunction.constant(FpnSpace(p=3, n=2), 1.0)
    with pytest.raises(SpaceMismatchError):
        triangle_density(a, a, b)


def test_counting_gap_vanishes_without_averaging(rng):
    space = FpnSpace(p=3, n=2)
    fs = [random_density(space, rng) for _ in range(3)]
    assert counting_lemma_gap(*fs, Subspace.zero(space)) == pytest.approx(0.0, abs=1e-12)
    H = Subspace.orthogonal_to(space, [[1, 0]])
    averaged = [coset_average(f, H) for f in fs]
    assert counting_lemma_gap(*averaged, H) == pytest.approx(0.0, abs=1e-12)


# Arithmetic removal

def test_removal_examples():
    space = FpnSpace(p=2, n=1)
    full = DensityFunction.indicator(space, [0, 1])
    result = exact_arith_removal(full, full, full)
    assert result.exact
    assert result.deletions == brute_force_arith_removal(full, full, full) == 2

    zero = DensityFunction.indicator(space, [0])
    assert exact_arith_removal(zero, zero, zero).deletions == 1
    one = DensityFunction.indicator(space, [1])
    assert exact_arith_removal(zero, zero, one).deletions == 0


@pytest.mark.parametrize("seed", range(6))
def test_exact_removal_matches_exhaustive_search(seed):
    space = FpnSpace(p=3, n=1)
    rng = np.random.default_rng(seed)
    X, Y, Z = (random_indicator(space, 0.6, rng) for _ in range(3))
    result = exact_arith_removal(X, Y, Z)
    assert result.deletions == brute_force_arith_removal(X, Y, Z)
    kept = [
        DensityFunction.indicator(space, sorted(set(f.support().tolist()) - set(removed)))
        for f, removed in zip((X, Y, Z), result.removed)
    ]
    assert set_triangle_count(*kept) == 0


def test_removal_modes_and_guards(rng):
    big = FpnSpace(p=2, n=7)
    X = random_indicator(big, 0.2, rng)
    with pytest.raises(InstanceTooLargeError):
        exact_arith_removal(X, X, X, mode="exact")
    assert not exact_arith_removal(X, X, X).exact
    with pytest.raises(PreconditionError):
        exact_arith_removal(X, X, X, mode="fastest")
    half = DensityFunction.constant(FpnSpace(p=2, n=2), 0.5)
    with pytest.raises(PreconditionError):
        exact_arith_removal(half, half, half)


# Weighted round trip

def test_roundtrip_keeps_triangle_free_functions():
    space = FpnSpace(p=2, n=2)
    f = DensityFunction(space, [0.5, 0.0, 0.0, 0.0])
    h = DensityFunction(space, [0.0, 0.7, 0.0, 0.0])
    result = weighted_removal_roundtrip(f, f, h, eps=0.3, m=3, seed=4)
    assert result.lift_deletions == (0, 0, 0)
    assert result.functions[0] == f and result.functions[2] == h
    assert result.success


@pytest.mark.parametrize("m", [3, 4])
def test_roundtrip_contracts(m):
    space = FpnSpace(p=2, n=2)
    rng = np.random.default_rng(m)
    for run in range(15):
        f, g, h = (random_density(space, rng) for _ in range(3))
        result = weighted_removal_roundtrip(f, g, h, eps=0.3, m=m, seed=run)
        assert result.lift_dimensions == m
        for distance, ledger in zip(result.l1_distances, result.l1_ledger):
            assert distance <= ledger + 1e-12
        if result.success:
            assert triangle_density(*result.functions) == 0.0


def test_roundtrip_is_seeded(rng):
    space = FpnSpace(p=2, n=2)
    f, g, h = (random_density(space, rng) for _ in range(3))
    a = weighted_removal_roundtrip(f, g, h, eps=0.3, m=2, seed=9)
    b = weighted_removal_roundtrip(f, g, h, eps=0.3, m=2, seed=9)
    assert a.lift_deletions == b.lift_deletions
    assert all(x == y for x, y in zip(a.functions, b.functions))
    assert a.exact_removal


# Quotients and the full approximation pipeline

def test_quotient_density_of_an_indicator():
    space = FpnSpace(p=3, n=2)
    phi = LinearMap(space, 1, [[1, 0]])
    X = DensityFunction.indicator(space, [0, 1, 3])
    q = quotient_density(X, phi)
    assert q.space == FpnSpace(p=3, n=1)
    assert np.allclose(q.values, [2 / 3, 1 / 3, 0.0])


def test_triangle_free_approximation(rng):
    space = FpnSpace(p=3, n=3)
    X, Y, Z = (random_indicator(space, 0.3, rng) for _ in range(3))
    result = triangle_free_approximation(X, Y, Z, delta=0.3, lift=1, seed=2)
    assert result.phi.codomain.n == result.codimension
    assert result.counting_bound <= 0.3 + 1e-12
    for original, missed in zip((X, Y, Z), result.missed):
        assert 0 <= missed <= len(original.support())
    if result.roundtrip.success:
        targets = [DensityFunction.indicator(result.phi.codomain, t) for t in result.targets]
        assert set_triangle_count(*targets) == 0
