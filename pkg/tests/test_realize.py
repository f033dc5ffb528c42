import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hoprob.descend import descendant_structure
from hoprob.kernel import CapExceeded, UPoly, ValidationError
from hoprob.realize import (
    BoundaryError,
    DiffOperator,
    KoszulRealization,
    MgfOde,
    RatFunc,
    Symmetry,
    TruncPolyAlgebra,
    build_koszul,
    coinvariant_moments,
    derive_mgf_ode,
    gaussian_operator,
    gaussian_realization,
    minimal_mgf_ode,
    ode_residual,
    reduce_coinvariants,
    semicircle_realization,
)
from hoprob.slinfty import check_sl_infinity


def power(R, n, etas=()):
    return R.index[((n,), etas)]


@pytest.mark.parametrize("sigma2", [1, 2, Fraction(1, 3)])
def test_gaussian_differential(sigma2):
    R = gaussian_realization(sigma2, cap=8, nmax=3)
    assert R.K(power(R, 0, (0,))) == {power(R, 1): 1}
    for n in range(1, 8):
        expected = {power(R, n - 1): -n * Fraction(sigma2), power(R, n + 1): 1}
        assert R.K(power(R, n, (0,))) == expected
    assert not R.K(power(R, 3))


def test_semicircle_differential():
    R = semicircle_realization(cap=10, nmax=3)
    for n in range(1, 10):
        expected = {power(R, n): -(n + 2)}
        if n >= 2:
            expected[power(R, n - 2)] = 4 * (n - 1)
        assert R.K(power(R, n - 1, (0,))) == expected


def test_gaussian_coinvariants():
    R = gaussian_realization(1, cap=12, nmax=3)
    Q = reduce_coinvariants(R)
    assert Q.basis == [(0,)]
    for k in range(1, 7):
        assert Q.reduce({(2 * k,): 1}) == {(0,): math.prod(range(2 * k - 1, 0, -2))}
        assert Q.reduce({(2 * k - 1,): 1}) == {}


def test_semicircle_coinvariants():
    Q = reduce_coinvariants(semicircle_realization(cap=14, nmax=3))
    assert Q.reduce({(6,): 1}) == {(0,): 5}
    assert coinvariant_moments(Q.R, 12)[::2] == [1, 1, 2, 5, 14, 42, 132]


def test_zero_symmetry_keeps_everything():
    A = TruncPolyAlgebra(("x",), 5)
    R = build_koszul(A, Symmetry([DiffOperator(1, [])]), 3)
    Q = reduce_coinvariants(R)
    assert Q.basis == A.monomials()
    assert Q.reduce({(3,): 2}) == {(3,): 2}


def test_boundary_is_reported():
    R = gaussian_realization(1, cap=6, nmax=3)
    Q = reduce_coinvariants(R)
    with pytest.raises(BoundaryError):
        Q.reduce({(7,): 1})
    with pytest.raises(CapExceeded):
        R.element({(9,): 1})
    assert R.within_validity((power(R, 2), power(R, 4)))
    assert not R.within_validity((power(R, 3), power(R, 4)))


def test_truncated_product_drops_terms_above_cap():
    A = TruncPolyAlgebra(("x", "y"), 3)
    prod, dropped = A.multiply({(1, 1): 1}, {(1, 0): 1, (0, 2): 1})
    assert prod == {(2, 1): 1}
    assert dropped


def affine_symmetry(sign):
    # d/dx and x d/dx span the affine Lie algebra: [d, x d] = d
    ops = [DiffOperator.from_terms(1, [({(0,): 1}, (1,))]),
           DiffOperator.from_terms(1, [({(1,): 1}, (1,))])]
    return Symmetry(ops, {(0, 1): {0: sign}})


def test_non_abelian_symmetry_squares_to_zero():
    R = build_koszul(TruncPolyAlgebra(("x",), 6), affine_symmetry(1), 3)
    for i in range(len(R.basis)):
        assert not R.K.apply([R.K(i)])


def test_wrong_structure_constants_are_detected():
    A = TruncPolyAlgebra(("x",), 6)
    with pytest.raises(ValidationError, match="brackets"):
        build_koszul(A, affine_symmetry(-1), 3)
    with pytest.raises(ValidationError, match="K\\^2"):
        KoszulRealization(A, affine_symmetry(-1), 3)


@pytest.mark.parametrize("sigma2", [1, 3])
def test_gaussian_descendant(sigma2):
    R = gaussian_realization(sigma2, cap=10, nmax=4)
    L = descendant_structure(R.prob, 4)
    eta, s = power(R, 0, (0,)), power(R, 1)
    assert L.l(2)(eta, s) == {0: -sigma2}
    assert L.l(2)(s, eta) == {0: -sigma2}
    assert not L.l(2)(eta, eta)
    assert not L.l(2)(s, s)
    assert check_sl_infinity(L, 3).ok


def test_gaussian_descendant_vanishes_above_two_inside_validity():
    R = gaussian_realization(1, cap=10, nmax=4)
    L = descendant_structure(R.prob, 4)
    words = [(power(R, a), power(R, b), power(R, 0, (0,))) for a in range(3) for b in range(3)]
    for w in words:
        assert R.within_validity(w)
        assert not L.l(3)(*w)


def test_gaussian_ode_matches_moments():
    ode = minimal_mgf_ode(gaussian_operator(1))
    assert ode.coeffs == [UPoly([0, -1]), UPoly([1])]
    assert ode.format() == "(1)*Z' + (-t)*Z = 0"
    moments = [math.prod(range(n - 1, 0, -2)) if n % 2 == 0 else 0 for n in range(12)]
    assert ode_residual(ode, moments) == [0] * 11
    assert any(ode_residual(ode, [1, 0, 2, 0, 3, 0, 15]))


@given(st.integers(1, 6), st.integers(2, 4))
def test_derived_odes_annihilate_their_moments(sigma2, order):
    ode = derive_mgf_ode(gaussian_operator(sigma2), order)
    R = gaussian_realization(sigma2, cap=12, nmax=2)
    assert not any(ode_residual(ode, coinvariant_moments(R, 12)))


def test_ratfunc_normalization():
    t = UPoly.var()
    f = RatFunc(t * t - 1, 2 * t - 2)
    assert f.num == (t + 1) * Fraction(1, 2)
    assert f.den == UPoly([1])
    assert RatFunc(1, t) + RatFunc(1, -t) == RatFunc(0)
    with pytest.raises(ZeroDivisionError):
        RatFunc(1, 0)


def test_ode_format_orders():
    assert MgfOde([UPoly([1]), UPoly(), UPoly([0, 2])]).format() == "(2*t)*Z'' + (1)*Z = 0"
