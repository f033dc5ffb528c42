import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hoprob.corralg import CorrelationAlgebra, ProductFamily, check_property_Q
from hoprob.flatgeo import (
    ConnectionTensor,
    coefficient_table,
    connection_from_algebra,
    connection_from_products,
    exp_series,
    flat_coordinates,
    mgf_assemble,
    verify_flat_coordinates,
    verify_flatness,
)
from hoprob.kernel import GradedBasis, MultiMap, SuperSeries, ValidationError
from hoprob.random_models import random_basis, random_correlation_algebra

DUAL = GradedBasis(("1", "x"), (0, 0))


def dual_numbers(nmax):
    m2 = MultiMap(2, 0, DUAL, DUAL, {(0, 0): {0: 1}, (0, 1): {1: 1}})
    return CorrelationAlgebra.from_product(DUAL, m2, nmax)


def test_ground_field():
    A = CorrelationAlgebra.unit_algebra(8)
    conn = connection_from_algebra(A, 4)
    assert conn(0, 0, 0) == SuperSeries.constant((0,), 4)
    T = flat_coordinates(A, 6)
    assert T[0] == exp_series((0,), 6, shift=1)
    assert verify_flatness(conn).ok


def test_dual_numbers_coordinates():
    order = 6
    A = dual_numbers(order + 2)
    T = flat_coordinates(A, order)
    e0 = exp_series(DUAL.parities, order)
    t1 = SuperSeries.variable(DUAL.parities, order, 1)
    assert T[0] == e0 - 1
    assert T[1] == (t1 * e0).truncate(order)
    conn = connection_from_algebra(A, order - 2)
    assert verify_flat_coordinates(T, conn, A).ok


@pytest.mark.parametrize("a", [0, Fraction(1, 2), -3])
def test_dual_numbers_generating_function(a):
    order = 5
    A = dual_numbers(order + 2)
    result = mgf_assemble(A, {0: 1, 1: a}, order - 2 if order > 2 else order)
    assert result.ok
    e0 = exp_series(DUAL.parities, result.Z.order)
    t1 = SuperSeries.variable(DUAL.parities, result.Z.order, 1)
    assert result.Z == (e0 * (t1 * a + 1)).truncate(result.Z.order)


def test_mgf_needs_unit_expectation():
    with pytest.raises(ValidationError):
        mgf_assemble(dual_numbers(5), {0: 2}, 2)


def test_binary_algebra_has_constant_connection():
    conn = connection_from_algebra(dual_numbers(6), 4)
    for series in conn.series.values():
        assert all(len(mono) == 0 for mono in series.terms)
    assert conn(1, 1, 0) == SuperSeries(DUAL.parities, 4)
    assert conn(0, 1, 1) == SuperSeries.constant(DUAL.parities, 4)


def test_planted_asymmetry_is_caught():
    basis = GradedBasis(("1", "x", "y"), (0, 0, 0))
    table = {(0, 0): {0: 1}, (0, 1): {1: 1}, (1, 0): {1: 1}, (0, 2): {2: 1}, (2, 0): {2: 1},
             (1, 2): {1: 1}, (2, 1): {2: 1}}
    m2 = MultiMap(2, 0, basis, basis, table, segments=(1, 1))
    conn = connection_from_products(ProductFamily(basis, {2: m2}), 0)
    report = verify_flatness(ConnectionTensor(basis, 1, conn.series), order=0)
    failure = next(f for f in report.failures if f["identity"] == "symmetry")
    assert failure["triple"][:2] == [1, 2]
    assert failure["monomial"] == []


def random_algebra(seed, degrees=(-1, 0, 1), nmax=6, arity=3):
    rng = random.Random(seed)
    basis = random_basis(rng, rng.randint(2, 3), degrees)
    return random_correlation_algebra(rng, basis, nmax, arity, density=0.5)


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_random_algebras_are_flat(seed):
    A = random_algebra(seed)
    conn = connection_from_algebra(A, 3)
    assert verify_flatness(conn, 2).ok
    T = flat_coordinates(A, 5)
    assert verify_flat_coordinates(T, conn, A, 3).ok


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_property_q_splits_flatness(seed):
    A = random_algebra(seed, degrees=(0,))
    conn = connection_from_algebra(A, 3)
    q, _ = check_property_Q(A)
    assert conn.property_q == q
    report = verify_flatness(conn, 2, property_q=True)
    halves = {f["identity"] for f in report.failures}
    assert "flatness" not in halves
    if q:
        assert report.ok


def test_failing_halves_without_property_q():
    for seed in range(60):
        A = random_algebra(seed, degrees=(0,))
        if check_property_Q(A)[0]:
            continue
        report = verify_flatness(connection_from_algebra(A, 3), 2, property_q=True)
        if not report.ok:
            assert {f["identity"] for f in report.failures} <= {
                "flatness derivative half", "flatness quadratic half"}
            return
    pytest.fail("no algebra without property Q split the flatness identity")


def test_order_bounds():
    A = dual_numbers(4)
    with pytest.raises(ValueError):
        flat_coordinates(A, 5)
    with pytest.raises(ValueError):
        connection_from_algebra(A, 3)
    conn = connection_from_algebra(A, 2)
    with pytest.raises(ValueError):
        verify_flatness(conn, 2)


def test_exp_series_rejects_odd_variable():
    with pytest.raises(ValueError):
        exp_series((1,), 3)


def test_coefficient_table_labels():
    T = flat_coordinates(dual_numbers(4), 2)
    rows = coefficient_table({"x": T[1]}, DUAL)
    assert rows == [{"target": "x", "monomial": "t[x]", "coeff": 1},
                    {"target": "x", "monomial": "t[1]*t[x]", "coeff": 1}]


def test_two_odd_coordinates():
    # e1, e2 odd with M2(e1, e2) = 2: the quadratic terms and Taylor reads need Koszul signs
    basis = GradedBasis(("1", "a", "b"), (0, 1, -1))
    A = CorrelationAlgebra.from_reduced(basis, {2: {(1, 2): {0: 2}}}, 6)
    conn = connection_from_algebra(A, 3)
    assert conn.property_q is False
    assert verify_flatness(conn, 2).ok
    T = flat_coordinates(A, 5)
    assert verify_flat_coordinates(T, conn, A, 3).ok
    assert T[0].coefficient((1, 2)) == -2
