"""Acceptance criteria, one test per criterion.

Each test prints a single ``CRITERION n: PASS|FAIL`` line with its detail.
"""

from __future__ import annotations

import contextlib
import io
import math
import random
import time
from fractions import Fraction

import pytest

from hoprob import cli
from hoprob.corralg import CorrelationAlgebra
from hoprob.cumulants import (
    FunctionalFamily,
    ProbAlgebra,
    clt_scaling,
    cumulant_sequence,
    cumulants_from_moments,
    generating_series,
    moments_from_cumulants,
    scaled_sum_cumulants,
)
from hoprob.descend import (
    cumulant_morphism,
    descendant_morphism,
    descendant_structure,
)
from hoprob.flatgeo import (
    connection_from_algebra,
    exp_series,
    flat_coordinates,
    mgf_assemble,
    verify_flat_coordinates,
    verify_flatness,
)
from hoprob.kernel import SCALARS, GradedBasis, MultiMap, UPoly, canonical_keys
from hoprob.random_models import (
    homotopic_cochain_map,
    random_basis,
    random_closed_family,
    random_correlation_algebra,
    random_expectation,
    random_lambda,
    random_prob_algebra,
    random_variable_basis,
)
from hoprob.randomvar import complete_space, flow_certificate, phi_from_pi, pi_from_phi
from hoprob.realize import (
    coinvariant_expectation,
    coinvariant_moments,
    derive_mgf_ode,
    gaussian_operator,
    gaussian_realization,
    ode_residual,
    semicircle_operator,
    semicircle_realization,
)
from hoprob.slinfty import (
    SLInftyStructure,
    check_morphism,
    check_retract,
    check_sl_infinity,
    compose,
    obstruction_example,
    transfer_minimal,
)

ONE = Fraction(1)


@pytest.fixture
def criterion(capsys):
    """``with criterion(n, title) as detail:`` prints one pass/fail line."""

    @contextlib.contextmanager
    def run(number: int, title: str):
        detail: dict = {}
        start = time.perf_counter()
        try:
            yield detail
        except BaseException as exc:
            with capsys.disabled():
                print(f"\nCRITERION {number}: FAIL {title} ({type(exc).__name__}: {exc})")
            raise
        elapsed = time.perf_counter() - start
        extra = " ".join(f"{k}={v}" for k, v in detail.items())
        with capsys.disabled():
            print(f"\nCRITERION {number}: PASS {title} [{elapsed:.2f}s] {extra}".rstrip())

    return run


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def catalan(k: int) -> int:
    return math.comb(2 * k, k) // (k + 1)


def run_cli(argv):
    buf = io.StringIO()
    start = time.perf_counter()
    code = cli.main(argv, stream=buf)
    return code, buf.getvalue(), time.perf_counter() - start


def csv_table(text: str, name: str):
    lines = text.splitlines()
    start = lines.index(f"# {name}") + 2
    rows = []
    for line in lines[start:]:
        if line.startswith("#"):
            break
        rows.append(line.split(","))
    return rows


# ---------------------------------------------------------------------------


def test_criterion_01_gaussian_moments(criterion):
    with criterion(1, "Gaussian moments by coinvariant reduction") as detail:
        code, out, elapsed = run_cli(["gaussian", "--sigma2", "1", "--max-moment", "10"])
        assert code == 0
        table = {int(n): Fraction(v) for n, v in csv_table(out, "moments")}
        for k in range(1, 6):
            assert table[2 * k] == double_factorial(2 * k - 1)
            assert table[2 * k - 1] == 0
        assert [table[2 * k] for k in range(1, 6)] == [1, 3, 15, 105, 945]
        assert elapsed < 1.0
        detail["runtime"] = f"{elapsed:.3f}s"


def test_criterion_02_semicircle_moments(criterion):
    with criterion(2, "semicircle moments are Catalan numbers") as detail:
        code, out, elapsed = run_cli(["semicircle", "--max-moment", "12"])
        assert code == 0
        table = {int(n): Fraction(v) for n, v in csv_table(out, "moments")}
        assert [table[2 * k] for k in range(1, 7)] == [catalan(k) for k in range(1, 7)]
        assert [table[2 * k] for k in range(1, 7)] == [1, 2, 5, 14, 42, 132]
        assert all(table[2 * k - 1] == 0 for k in range(1, 7))
        assert elapsed < 1.0
        detail["runtime"] = f"{elapsed:.3f}s"


@pytest.mark.parametrize("sigma2", [Fraction(1), Fraction(2), Fraction(3)])
def test_criterion_03_gaussian_mgf_ode(criterion, sigma2):
    with criterion(3, f"Gaussian MGF ODE, sigma^2 = {sigma2}"):
        ode = derive_mgf_ode(gaussian_operator(sigma2), 2)
        # Z'' - sigma^2 (1 + sigma^2 t^2) Z = 0, integer content 1 for integer sigma^2
        expected = [UPoly([-sigma2, 0, -sigma2 * sigma2]), UPoly([]), UPoly([1])]
        assert ode.coeffs == expected
        R = gaussian_realization(sigma2, cap=14, nmax=2)
        moments = coinvariant_moments(R, 14)
        residual = ode_residual(ode, moments)
        assert len(residual) == 13
        assert not any(residual)


def test_criterion_04_semicircle_mgf_ode(criterion):
    with criterion(4, "semicircle MGF ODE and Catalan recurrence"):
        ode = derive_mgf_ode(semicircle_operator(), 2)
        assert ode.coeffs == [UPoly([0, -4]), UPoly([3]), UPoly([0, 1])]
        R = semicircle_realization(cap=18, nmax=2)
        moments = coinvariant_moments(R, 18)
        assert not any(ode_residual(ode, moments))
        C = [moments[2 * k] for k in range(10)]
        assert C == [catalan(k) for k in range(10)]
        for n in range(9):
            assert (n + 2) * C[n + 1] == 2 * (2 * n + 1) * C[n]


def _criterion5_instances():
    for seed in range(50):
        rng = random.Random(1000 + seed)
        dim = rng.randint(2, 5)
        yield seed, random_prob_algebra(rng, dim, 4, degrees=(-2, -1, 0, 1, 2))


def test_criterion_05_descendant_validity(criterion):
    with criterion(5, "descendant structures satisfy the sL-infinity relations") as detail:
        start = time.perf_counter()
        nontrivial = 0
        for seed, P in _criterion5_instances():
            L = descendant_structure(P, 4)
            report = check_sl_infinity(L, exhaustive=True)
            assert report.ok, (seed, report.failures[:1])
            assert report.checked["relation 4"] == len(P.basis) ** 4
            if any(not L.l(n).is_zero() for n in (3, 4)):
                nontrivial += 1
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0
        assert nontrivial > 0
        detail["instances"] = 50
        detail["with_higher_brackets"] = nontrivial


def test_criterion_06_descendant_morphisms(criterion):
    with criterion(6, "descendant morphisms and invariance of cumulants") as detail:
        nmax = 4
        lambda_sensitive = shift_nontrivial = kappa_nonzero = 0
        for seed in range(20):
            rng = random.Random(2000 + seed)
            P = random_prob_algebra(rng, rng.randint(2, 4), nmax, degrees=(-1, 0, 1))
            P2 = ProbAlgebra(random_correlation_algebra(rng, P.basis, nmax), P.K)
            f = homotopic_cochain_map(rng, P)
            L, L2 = descendant_structure(P, nmax), descendant_structure(P2, nmax)
            lams = [random_lambda(rng, P.basis, P2.basis, nmax) for _ in range(3)]
            morphisms = []
            for lam in lams:
                phi = descendant_morphism(f, lam, P, P2, nmax, L)
                report = check_morphism(phi, L, L2)
                assert report.ok, (seed, report.failures[:1])
                morphisms.append(phi)
            V = random_variable_basis(rng, P, 2)
            phi_v = phi_from_pi(random_closed_family(rng, V, P, nmax), P)
            assert check_morphism(phi_v, SLInftyStructure.zero(V, nmax), L, unital=False).ok
            c = random_expectation(rng, P2)
            r = {i: Fraction(rng.randint(-3, 3)) for i in P2.basis.of_degree(1)}
            c_shift = c.shifted(P2, r)
            c_shift.validate(P2)
            shift_nontrivial += c_shift.values != c.values
            lambda_sensitive += any(not morphisms[0].map(n) == phi.map(n)
                                    for phi in morphisms[1:] for n in range(1, nmax + 1))
            reference = None
            for phi in morphisms:
                for expectation in (c, c_shift):
                    lam_c = random_lambda(rng, P2.basis, SCALARS, nmax)
                    kappa = compose(cumulant_morphism(P2, expectation, lam_c, nmax), compose(phi, phi_v))
                    if reference is None:
                        reference = kappa
                    else:
                        assert kappa.equals(reference, nmax), seed
            kappa_nonzero += any(reference.map(n)(*key) for n in range(1, nmax + 1)
                                 for key in canonical_keys(V, n))
        # the invariance is not vacuous: Lambda changes phi, r K changes c, kappa is nonzero
        assert lambda_sensitive and shift_nontrivial and kappa_nonzero
        detail["maps"] = 20
        detail["lambda_sensitive"] = lambda_sensitive
        detail["shifted_c_differs"] = shift_nontrivial
        detail["kappa_nonzero"] = kappa_nonzero


@pytest.mark.parametrize("sigma2", [Fraction(1), Fraction(2), Fraction(1, 3)])
def test_criterion_07_homotopy_flow(criterion, sigma2):
    with criterion(7, f"Gaussian flow certificate, sigma^2 = {sigma2}"):
        R = gaussian_realization(sigma2, cap=10, nmax=4)
        cert = flow_certificate(R, 4)
        s = R.index[((1,), ())]
        unit = R.basis.unit_index
        fam = cert.family
        assert fam.maps[0](0) == {s: UPoly([1, -1])}
        assert fam.maps[1](0, 0) == {unit: UPoly([0, 2 * sigma2, -sigma2])}
        assert fam.maps[2](0, 0, 0) == {}
        assert fam.maps[3](0, 0, 0, 0) == {}
        assert cert.report.ok
        _, _, _, family = obstruction_example()
        a, b = 0, 1
        change_2 = {i: p(1) - p(0) for i, p in family.maps[1](b, b).items()}
        change_1 = {i: p(1) - p(0) for i, p in family.maps[0](a).items()}
        assert change_2 == change_1 == {0: -ONE}


def test_criterion_08_formality(criterion):
    with criterion(8, "descendants transfer to the zero minimal structure") as detail:
        sizes = []
        nontrivial = 0
        for seed, P in _criterion5_instances():
            L = descendant_structure(P, 4)
            nontrivial += any(not L.l(n).is_zero() for n in range(2, 5)) and not P.K.is_zero()
            Lh, phi, data = transfer_minimal(L)
            assert check_retract(data, L).ok, seed
            for n in range(1, 5):
                for key in canonical_keys(Lh.basis, n):
                    assert not Lh.l(n)(*key), (seed, n, key)
            sizes.append(len(Lh.basis))
        detail["instances"] = len(sizes)
        detail["max_cohomology_dim"] = max(sizes)
        detail["with_nonzero_brackets"] = nontrivial
        assert nontrivial


def _random_family(rng: random.Random, basis: GradedBasis, nmax: int, kind: str) -> FunctionalFamily:
    maps = []
    for n in range(1, nmax + 1):
        entries = {}
        for key in canonical_keys(basis, n):
            if basis.degree_of(key) == 0 and rng.random() < 0.8:
                v = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
                if v:
                    entries[key] = {0: v}
        maps.append(MultiMap(n, 0, basis, SCALARS, entries))
    return FunctionalFamily(basis, maps, kind)


def test_criterion_09_moment_cumulant_duality(criterion):
    with criterion(9, "moment-cumulant roundtrip and Z = exp(F)") as detail:
        odd_families = 0
        for seed in range(100):
            rng = random.Random(3000 + seed)
            dim = rng.randint(1, 3)
            degrees = [rng.choice((0, 0, 1, -1)) for _ in range(dim)]
            if seed % 2 == 0:
                degrees[0] = rng.choice((1, -1))
            basis = GradedBasis(tuple(f"x{i}" for i in range(dim)), tuple(degrees), None)
            odd_families += any(d % 2 for d in degrees)
            kappa = _random_family(rng, basis, 8, "cumulant")
            mu = moments_from_cumulants(kappa)
            assert cumulants_from_moments(mu).equals(kappa, 6)
            mu2 = _random_family(rng, basis, 6, "moment")
            assert moments_from_cumulants(cumulants_from_moments(mu2)).equals(mu2, 6)
            Z = generating_series(mu, 8)
            F = generating_series(kappa, 8)
            assert Z == F.exp()
            assert Z.log() == F
        detail["families"] = 100
        detail["with_odd_degrees"] = odd_families


def test_criterion_10_clt_scaling(criterion):
    with criterion(10, "cumulants of normalized sums scale as N^(1 - n/2)") as detail:
        laws = [[0, 1, 0, 3, 0, 15], [Fraction(1, 2)] * 6]
        rng = random.Random(4000)
        for _ in range(5):
            laws.append([Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(6)])
        checked = 0
        for moments in laws:
            kappas = cumulant_sequence(moments)
            for N in (4, 9, 16):
                direct = scaled_sum_cumulants(moments, N)
                root = math.isqrt(N)
                for n in range(1, 7):
                    expected = kappas[n - 1] * Fraction(N) / Fraction(root) ** n
                    assert clt_scaling(kappas, N, n) == expected
                    assert direct[n - 1] == expected
                    checked += 1
        detail["values"] = checked


def test_criterion_11_flat_geometry(criterion):
    with criterion(11, "flatness, flat coordinates and MGF system") as detail:
        start = time.perf_counter()
        q_count = odd_pairs = 0
        for seed in range(30):
            rng = random.Random(5000 + seed)
            dim = rng.randint(1, 3)
            # odd coordinates are where the Koszul signs of the identities matter
            basis = random_basis(rng, dim, (-1, 0, 1))
            odd_pairs += sum(basis.parities) >= 2
            A = random_correlation_algebra(rng, basis, 9, arity=4)
            for n in range(5, 10):
                assert all(not A.M(n)(*key) or 0 in key for key in canonical_keys(basis, n))
            connection = connection_from_algebra(A, 7)
            q_count += bool(connection.property_q)
            report = verify_flatness(connection, 6)
            assert report.ok, (seed, report.failures[:1])
            coords = flat_coordinates(A, 8, verify=False)
            report = verify_flat_coordinates(coords, connection, A, 6)
            assert report.ok, (seed, report.failures[:1])
            iota = {0: ONE}
            for i in basis.of_degree(0)[1:]:
                iota[i] = Fraction(rng.randint(-3, 3))
            result = mgf_assemble(A, iota, 6, connection, coords)
            assert result.ok, (seed, result.report.failures[:1])
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0
        A1 = CorrelationAlgebra.unit_algebra(12)
        T = flat_coordinates(A1, 10)
        assert T[0] == exp_series((0,), 10, 0, shift=1)
        result = mgf_assemble(A1, {0: ONE}, 10)
        assert result.ok
        assert result.Z.truncate(10) == exp_series((0,), 10, 0)
        detail["algebras"] = 30
        detail["with_property_Q"] = q_count
        detail["with_two_odd_coordinates"] = odd_pairs
        detail["runtime"] = f"{elapsed:.1f}s"


def test_criterion_12_complete_space(criterion):
    with criterion(12, "complete space of the Gaussian realization") as detail:
        nmax = 4
        R = gaussian_realization(1, cap=10, nmax=nmax)
        c = coinvariant_expectation(R)
        L = descendant_structure(R.prob, nmax)
        Lh, phi_s, data = transfer_minimal(L)
        space = complete_space(R.prob, c, data, phi_s)
        S = space.algebra.basis
        assert len(S) == 1 and S.unit_index == 0
        assert space.iota({0: ONE}) == 1
        Pi = pi_from_phi(phi_s, R.algebra)
        for n in range(1, nmax + 1):
            for key in canonical_keys(S, n):
                assert c(Pi[n - 1].value(key)) == space.iota(space.algebra.M(n).value(key))
        rebuilt = descendant_morphism(phi_s.map(1), space.Lam, ProbAlgebra.classical(space.algebra),
                                      R.prob, nmax)
        assert rebuilt.equals(phi_s, nmax)
        assert check_morphism(phi_s, Lh, L, unital=False).ok
        detail["moments"] = [str(space.iota(space.algebra.M(n).value((0,) * n))) for n in range(1, nmax + 1)]
