import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hoprob.corralg import CorrelationAlgebra
from hoprob.cumulants import Expectation, ProbAlgebra, cumulants_from_moments, moments
from hoprob.descend import (
    LambdaFamily,
    cumulant_morphism,
    descendant_morphism,
    descendant_structure,
    expectation_map,
    lambda_invariance_test,
    scalar_target,
)
from hoprob.kernel import GradedBasis, MultiMap, ValidationError, canonical_keys, compose_linear, ordered_keys
from hoprob.random_models import (
    homotopic_cochain_map,
    random_closed_family,
    random_expectation,
    random_lambda,
    random_prob_algebra,
    random_variable_basis,
)
from hoprob.randomvar import phi_from_pi
from hoprob.slinfty import SLMorphism, check_morphism, check_sl_infinity, compose

seeds = st.integers(0, 10_000)
NMAX = 4


def random_instance(seed, dim=None):
    rng = random.Random(seed)
    P = random_prob_algebra(rng, dim or rng.randint(2, 4), NMAX, 3, degrees=(-1, 0, 1))
    return rng, P


@given(seeds)
def test_descendant_is_a_structure(seed):
    _, P = random_instance(seed)
    L = descendant_structure(P)
    assert L.l(1) == P.K
    assert check_sl_infinity(L).ok


@given(seeds)
def test_binary_descendant_by_hand(seed):
    _, P = random_instance(seed)
    ell2 = descendant_structure(P).l(2)
    K, M2 = P.K, P.M(2)
    degs = P.basis.degrees
    for x, y in ordered_keys(P.basis, 2):
        expected = dict(K.apply([M2(x, y)]))
        for i, v in M2.apply([K(x), {y: 1}]).items():
            expected[i] = expected.get(i, 0) - v
        sign = -1 if degs[x] % 2 else 1
        for i, v in M2.apply([{x: 1}, K(y)]).items():
            expected[i] = expected.get(i, 0) - sign * v
        assert ell2(x, y) == {i: v for i, v in expected.items() if v}


@settings(max_examples=30)
@given(seeds)
def test_descendant_morphisms_are_morphisms(seed):
    rng, P = random_instance(seed)
    f = homotopic_cochain_map(rng, P)
    Lam = random_lambda(rng, P.basis, P.basis, NMAX)
    phi = descendant_morphism(f, Lam, P, P)
    L = descendant_structure(P)
    assert check_morphism(phi, L, L).ok
    # phi_1 = f - K Lambda_1 - Lambda_1 K
    for j in range(len(P.basis)):
        expected = dict(f(j))
        for i, v in P.K.apply([Lam.map(1)(j)]).items():
            expected[i] = expected.get(i, 0) - v
        for i, v in Lam.map(1).apply([P.K(j)]).items():
            expected[i] = expected.get(i, 0) - v
        assert phi.map(1)(j) == {i: v for i, v in expected.items() if v}


@settings(max_examples=30)
@given(seeds)
def test_descendants_compose_for_zero_homotopy(seed):
    rng, P = random_instance(seed)
    f, g = homotopic_cochain_map(rng, P), homotopic_cochain_map(rng, P)
    lhs = compose(descendant_morphism(g, None, P, P), descendant_morphism(f, None, P, P))
    assert lhs.equals(descendant_morphism(compose_linear(g, f), None, P, P))


@given(seeds)
def test_descendant_of_identity(seed):
    _, P = random_instance(seed)
    phi = descendant_morphism(MultiMap.identity(P.basis), None, P, P)
    assert phi.equals(SLMorphism.identity(P.basis, NMAX))


@settings(max_examples=30)
@given(seeds)
def test_classical_cumulants_ignore_lambda(seed):
    rng = random.Random(seed)
    P = random_prob_algebra(rng, 3, NMAX, 3, degrees=(0,))
    P = ProbAlgebra.classical(P.algebra)
    c = random_expectation(rng, P)
    kappa = cumulants_from_moments(moments(P, c))
    k_basis = GradedBasis(("1",), (0,), 0)
    for _ in range(2):
        phi = cumulant_morphism(P, c, random_lambda(rng, P.basis, k_basis, NMAX))
        for n in range(1, NMAX + 1):
            for key in canonical_keys(P.basis, n):
                assert phi.map(n)(*key).get(0, 0) == kappa.value(*key)


@settings(max_examples=20)
@given(seeds)
def test_lambda_invariance_into_ground_field(seed):
    rng, P = random_instance(seed)
    V = random_variable_basis(rng, P, 2)
    phi_v = phi_from_pi(random_closed_family(rng, V, P, NMAX), P)
    k = scalar_target(NMAX)
    f = expectation_map(random_expectation(rng, P), P, k)
    Lam = random_lambda(rng, P.basis, k.basis, NMAX)
    Lam2 = random_lambda(rng, P.basis, k.basis, NMAX)
    assert lambda_invariance_test(f, Lam, Lam, phi_v, P, k)
    assert lambda_invariance_test(f, Lam, Lam2, phi_v, P, k)


def test_lambda_invariance_is_only_up_to_homotopy_in_general():
    # with a target carrying nonzero brackets the two composites are homotopic, not equal
    differing = 0
    for seed in range(10):
        rng, P = random_instance(seed)
        V = random_variable_basis(rng, P, 2)
        phi_v = phi_from_pi(random_closed_family(rng, V, P, NMAX), P)
        f = homotopic_cochain_map(rng, P)
        Lam = random_lambda(rng, P.basis, P.basis, NMAX)
        Lam2 = random_lambda(rng, P.basis, P.basis, NMAX)
        assert lambda_invariance_test(f, Lam, Lam, phi_v, P, P)
        differing += not lambda_invariance_test(f, Lam, Lam2, phi_v, P, P)
    assert differing


def test_derivation_has_no_higher_brackets():
    # k[x]/x^2 tensor an exterior generator e of degree -1 with K e = x
    basis = GradedBasis(("1", "x", "e", "xe"), (0, 0, -1, -1))
    m2 = MultiMap(2, 0, basis, basis, {(0, 0): {0: 1}, (0, 1): {1: 1}, (0, 2): {2: 1},
                                       (0, 3): {3: 1}, (1, 2): {3: 1}})
    A = CorrelationAlgebra.from_product(basis, m2, NMAX)
    P = ProbAlgebra(A, MultiMap(1, 1, basis, basis, {(2,): {1: 1}}))
    L = descendant_structure(P)
    for n in range(2, NMAX + 1):
        assert L.l(n).is_zero()


def test_non_cochain_map_is_rejected():
    seed = 0
    _, P = random_instance(seed, dim=4)
    while P.K.is_zero():
        seed += 1
        _, P = random_instance(seed, dim=4)
    j = next(i for i in range(len(P.basis)) if P.K(i))
    bad = MultiMap(1, 0, P.basis, P.basis,
                   {(i,): {i: 2 if i == j else 1} for i in range(len(P.basis))})
    with pytest.raises(ValidationError):
        descendant_morphism(bad, None, P, P)


def test_lambda_unit_tower_is_enforced():
    basis = GradedBasis(("1", "y"), (0, 1))
    maps = [MultiMap(1, -1, basis, basis, {(1,): {0: 1}}), MultiMap.zero(2, -1, basis, basis)]
    with pytest.raises(ValidationError):
        LambdaFamily(basis, basis, maps)
    reduced = LambdaFamily.from_reduced(basis, basis, {1: {(1,): {0: Fraction(1)}}}, 2)
    assert reduced.unit_report().ok
    assert reduced.map(2)(1, 0) == {0: 1}
