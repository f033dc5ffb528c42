import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hoprob.corralg import CorrelationAlgebra
from hoprob.cumulants import (
    Expectation,
    FunctionalFamily,
    ProbAlgebra,
    clt_scaling,
    cumulant_sequence,
    cumulants_from_moments,
    family_from_sequence,
    generating_series,
    iid_sum_moments,
    independence_check,
    moment_sequence,
    moments,
    moments_from_cumulants,
    perfect_square_root,
    scaled_sum_cumulants,
)
from hoprob.kernel import (
    SCALARS,
    GradedBasis,
    MultiMap,
    ValidationError,
    canonical_keys,
    enumerate_partitions,
    partition_sign,
)

# an even variable and a pair of odd variables whose degrees cancel
MIXED = GradedBasis(("x", "a", "b"), (0, 1, -1), None)
NMAX = 5


def random_family(seed, kind, nmax=NMAX):
    rng = random.Random(seed)
    maps = []
    for n in range(1, nmax + 1):
        entries = {}
        for key in canonical_keys(MIXED, n):
            if MIXED.degree_of(key) == 0:
                v = rng.randint(-4, 4)
                if v:
                    entries[key] = {0: Fraction(v, rng.randint(1, 3))}
        maps.append(MultiMap(n, 0, MIXED, SCALARS, entries))
    return FunctionalFamily(MIXED, maps, kind)


def brute_moment(kappa, word):
    """Sum over set partitions with the Koszul sign of grouping the blocks."""
    degs = [MIXED.degrees[i] for i in word]
    total = Fraction(0)
    for pi in enumerate_partitions(len(word)):
        term = Fraction(partition_sign(pi, degs))
        for block in pi:
            term *= kappa.value(*(word[j] for j in block))
        total += term
    return total


@given(st.integers(0, 10_000))
def test_moments_match_partition_oracle(seed):
    kappa = random_family(seed, "cumulant")
    mu = moments_from_cumulants(kappa)
    for n in range(1, NMAX + 1):
        for word in itertools.product(range(len(MIXED)), repeat=n):
            if MIXED.degree_of(word) == 0:
                assert mu.value(*word) == brute_moment(kappa, word), word


@given(st.integers(0, 10_000))
def test_moment_cumulant_inversion(seed):
    mu = random_family(seed, "moment")
    assert moments_from_cumulants(cumulants_from_moments(mu)).equals(mu)
    kappa = random_family(seed, "cumulant")
    assert cumulants_from_moments(moments_from_cumulants(kappa)).equals(kappa)


@given(st.integers(0, 10_000))
def test_log_of_moment_series_is_cumulant_series(seed):
    mu = random_family(seed, "moment")
    Z = generating_series(mu, NMAX)
    F = generating_series(cumulants_from_moments(mu), NMAX)
    assert Z.log() == F
    assert F.exp() == Z


def test_gaussian_sequences():
    gauss = [0, 1, 0, 3, 0, 15, 0, 105]
    assert cumulant_sequence(gauss) == [0, 1, 0, 0, 0, 0, 0, 0]
    assert moment_sequence([0, 1, 0, 0, 0, 0, 0, 0]) == gauss


def test_poisson_moments_are_bell_numbers():
    assert moment_sequence([1] * 7) == [1, 2, 5, 15, 52, 203, 877]


@given(st.lists(st.integers(-3, 3), min_size=6, max_size=6), st.sampled_from([1, 4, 9]))
def test_clt_scaling_matches_explicit_sum(moment_values, N):
    kappas = cumulant_sequence(moment_values)
    explicit = scaled_sum_cumulants(moment_values, N)
    q = math.isqrt(N)
    for n in range(1, 7):
        assert clt_scaling(kappas, N, n) == explicit[n - 1] == kappas[n - 1] * N / Fraction(q) ** n


def test_iid_sum_of_bernoulli():
    # a fair coin has every moment 1/2; two copies give a binomial
    assert iid_sum_moments([Fraction(1, 2)] * 3, 2) == [1, Fraction(3, 2), Fraction(5, 2)]


def test_perfect_square_root():
    assert perfect_square_root(16) == 4
    with pytest.raises(ValueError):
        perfect_square_root(8)
    with pytest.raises(ValueError):
        perfect_square_root(0)


def _two_point_space():
    basis = GradedBasis(("1", "x", "y", "xy"), (0, 0, 0, 0))
    table = {(0, 0): {0: 1}, (0, 1): {1: 1}, (0, 2): {2: 1}, (0, 3): {3: 1}, (1, 2): {3: 1}}
    A = CorrelationAlgebra.from_product(basis, MultiMap(2, 0, basis, basis, table), 4)
    return ProbAlgebra.classical(A)


def test_independent_variables_have_additive_cumulants():
    P = _two_point_space()
    # x and y independent with x^2 = y^2 = 0 in the algebra
    c = Expectation(P.basis, {0: 1, 1: 2, 2: 3, 3: 6})
    kappa = cumulants_from_moments(moments(P, c))
    assert independence_check({1: 1}, {2: 1}, kappa)
    coupled = Expectation(P.basis, {0: 1, 1: 2, 2: 3, 3: 7})
    assert not independence_check({1: 1}, {2: 1}, cumulants_from_moments(moments(P, coupled)))


def test_prob_algebra_validation():
    basis = GradedBasis(("1", "u", "v", "w", "z"), (0, -1, 0, 0, 1))
    A = CorrelationAlgebra.from_reduced(basis, {}, 2)
    with pytest.raises(ValidationError, match="unit"):
        ProbAlgebra(A, MultiMap(1, 1, basis, basis, {(1,): {0: 1}}))
    with pytest.raises(ValidationError, match="K K"):
        ProbAlgebra(A, MultiMap(1, 1, basis, basis, {(1,): {3: 1}, (3,): {4: 1}}))
    P = ProbAlgebra(A, MultiMap(1, 1, basis, basis, {(1,): {2: 1}, (3,): {4: 1}}))
    c = Expectation(basis, {0: 1})
    c.validate(P)
    with pytest.raises(ValidationError):
        Expectation(basis, {0: 1, 2: 1}).validate(P)
    shifted = c.shifted(P, {4: 5})
    assert shifted.values == {0: 1, 3: 5}
    shifted.validate(P)


def test_family_from_sequence_series():
    mu = family_from_sequence([0, 1, 0, 3], "moment")
    Z = generating_series(mu, 4)
    assert Z.coefficient((0, 0)) == Fraction(1, 2)
    assert Z.coefficient((0, 0, 0, 0)) == Fraction(1, 8)
    with pytest.raises(ValueError):
        generating_series(mu, 5)
