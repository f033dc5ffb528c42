"""Spaces of homotopical random variables, their laws, complete spaces and
the complete-integrability solver."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .corralg import CorrelationAlgebra
from .cumulants import (
    Expectation,
    FunctionalFamily,
    ProbAlgebra,
    generating_series,
    moments_from_cumulants,
)
from .descend import (
    LambdaFamily,
    descendant_morphism,
    descendant_structure,
    expectation_map,
    scalar_target,
)
from .kernel import (
    SCALARS,
    EchelonBasis,
    Element,
    GradedBasis,
    Key,
    MultiMap,
    SuperSeries,
    ValidationError,
    add_into,
    canonical_keys,
)
from .slinfty import (
    HomotopyFamily,
    PolyFamily,
    RetractData,
    SLInftyStructure,
    SLMorphism,
    check_morphism,
    compose,
    flow,
    partition_sum,
)

ONE = Fraction(1)


@dataclass
class RandomVarSpace:
    """A graded space ``V`` with a morphism from ``(V, 0)`` into a descendant."""

    V: GradedBasis
    phi: SLMorphism

    @property
    def nmax(self) -> int:
        return self.phi.nmax


def pi_from_phi(phi: SLMorphism, A: CorrelationAlgebra) -> List[MultiMap]:
    """``Pi_n = sum_pi eps(pi) M_{|pi|}(phi(v_B1), .., phi(v_Bk))``."""
    if phi.target != A.basis:
        raise ValueError("phi must land in the algebra's space")
    nmax = min(phi.nmax, A.nmax)
    return [MultiMap.lazy(n, 0, phi.source, A.basis,
                          lambda key: partition_sum(A.M, phi.map, key, phi.source))
            for n in range(1, nmax + 1)]


def check_closed(Pi: List[MultiMap], P: ProbAlgebra) -> None:
    for mp in Pi:
        for key, val in mp.items():
            kval = P.K.apply([val])
            if kval:
                raise ValidationError("K Pi != 0", {"identity": "K Pi = 0", "arity": mp.arity,
                                                    "word": list(key), "value": kval})


def phi_from_pi(Pi: List[MultiMap], P: ProbAlgebra, validate: bool = True) -> SLMorphism:
    """Invert :func:`pi_from_phi`: ``phi_n = Pi_n - sum_{|pi|>1} eps(pi) M(phi(v_B1), ..)``."""
    if validate:
        check_closed(Pi, P)
    source = Pi[0].source
    phi: List[MultiMap] = []

    def phi_of(n: int) -> MultiMap:
        return phi[n - 1]

    def value(key: Key) -> Element:
        acc = dict(Pi[len(key) - 1].value(key))
        return add_into(acc, partition_sum(P.M, phi_of, key, source, skip=lambda k: k == 1), -1)

    for n in range(1, min(len(Pi), P.nmax) + 1):
        phi.append(MultiMap.lazy(n, 0, source, P.basis, value))
    return SLMorphism(source, P.basis, phi)


def zero_structure(V: GradedBasis, nmax: int) -> SLInftyStructure:
    return SLInftyStructure.zero(V, nmax)


def check_space(space: RandomVarSpace, P: ProbAlgebra, up_to: Optional[int] = None):
    L = descendant_structure(P, space.nmax)
    return check_morphism(space.phi, zero_structure(space.V, space.nmax), L, up_to, unital=False)


def as_functional(phi: SLMorphism, kind: str) -> FunctionalFamily:
    return FunctionalFamily(phi.source, list(phi.phi), kind)


@dataclass
class Law:
    moments: FunctionalFamily
    cumulants: FunctionalFamily

    def series(self, order: int) -> Tuple[SuperSeries, SuperSeries]:
        return generating_series(self.moments, order), generating_series(self.cumulants, order)


def law_of_space(space: RandomVarSpace, P: ProbAlgebra, c: Expectation,
                 Lam: Optional[LambdaFamily] = None) -> Law:
    """``mu = c Pi`` and ``kappa = phi^{c,Lam} . phi^V``."""
    c.validate(P)
    nmax = space.nmax
    k = scalar_target(nmax)
    Pi = pi_from_phi(space.phi, P.algebra)
    mu_maps = [MultiMap.lazy(mp.arity, 0, space.V, SCALARS,
                             lambda key, mp=mp: _scalar(c(mp.value(key)))) for mp in Pi]
    phi_c = descendant_morphism(expectation_map(c, P, k), Lam, P, k, nmax)
    kappa = compose(phi_c, space.phi)
    return Law(FunctionalFamily(space.V, mu_maps, "moment"), as_functional(kappa, "cumulant"))


def _scalar(v) -> Element:
    return {0: v} if v else {}


def law_consistent(law: Law) -> bool:
    """The moments are the partition expansion of the cumulants."""
    return law.moments.equals(moments_from_cumulants(law.cumulants))


# ---------------------------------------------------------------------------
# complete integrability


class ExactnessSolver:
    """Writes degree-0 elements as ``c(x) 1 - K xi``."""

    def __init__(self, P: ProbAlgebra, c: Expectation):
        self.P, self.c = P, c
        self.echelon = EchelonBasis()
        for j in P.basis.of_degree(-1):
            self.echelon.add(P.K(j), j)

    def check_nondegenerate(self) -> None:
        basis = self.P.basis
        for i in basis.of_degree(0):
            x: Element = {i: ONE}
            add_into(x, {basis.unit_index: -self.c(x)})
            residual, _ = self.echelon.reduce(x)
            if residual:
                raise ValidationError("not non-degenerate: a centered variable is not exact",
                                      {"identity": "non-degenerate", "witness": x})

    def split(self, x: Element) -> Tuple[Fraction, Element]:
        scalar = self.c(x)
        centered = dict(x)
        add_into(centered, {self.P.basis.unit_index: -scalar})
        residual, combo = self.echelon.reduce(centered)
        if residual:
            raise ValidationError("element is not expectation plus exact", {"witness": x})
        return scalar, {j: -v for j, v in combo.items() if v}


def integrable_solve(space: RandomVarSpace, P: ProbAlgebra, c: Expectation
                     ) -> Tuple[FunctionalFamily, HomotopyFamily, PolyFamily]:
    """Flow ``phi^V`` to a representative with values ``kappa_n 1``.

    Stage ``n`` flows with ``eta_n = 0``, splits the endpoint as
    ``kappa_n 1 - K xi`` and sets ``eta_n = xi``; earlier arities are unaffected.
    """
    if any(d != 0 for d in space.V.degrees):
        raise ValueError("integrable_solve needs random variables of degree 0")
    c.validate(P)
    solver = ExactnessSolver(P, c)
    solver.check_nondegenerate()
    V, C, nmax = space.V, P.basis, space.nmax
    L = descendant_structure(P, nmax)
    Z = zero_structure(V, nmax)
    eta_tables: List[Dict[Key, Element]] = []
    kappa_tables: List[Dict[Key, Element]] = []

    def homotopy() -> HomotopyFamily:
        maps = [MultiMap(n, -1, V, C, eta_tables[n - 1] if n <= len(eta_tables) else {})
                for n in range(1, nmax + 1)]
        return HomotopyFamily(V, C, maps)

    for n in range(1, nmax + 1):
        _, end = flow(space.phi, homotopy(), Z, L)
        eta_n, kappa_n = {}, {}
        for key in canonical_keys(V, n):
            scalar, xi = solver.split(end.map(n).value(key))
            if xi:
                eta_n[key] = xi
            if scalar:
                kappa_n[key] = {0: scalar}
        eta_tables.append(eta_n)
        kappa_tables.append(kappa_n)
    eta = homotopy()
    family, end = flow(space.phi, eta, Z, L)
    unit = C.unit_index
    for n in range(1, nmax + 1):
        for key in canonical_keys(V, n):
            want = {unit: kappa_tables[n - 1][key][0]} if key in kappa_tables[n - 1] else {}
            if end.map(n).value(key) != want:
                raise ValidationError("flow endpoint is not scalar", {"arity": n, "word": list(key)})
    kappa = FunctionalFamily(V, [MultiMap(n, 0, V, SCALARS, kappa_tables[n - 1])
                                 for n in range(1, nmax + 1)], "cumulant")
    return kappa, eta, family


# ---------------------------------------------------------------------------
# complete spaces


@dataclass
class CompleteSpace:
    algebra: CorrelationAlgebra
    iota: Expectation
    phi: SLMorphism
    Lam: LambdaFamily


def complete_space(P: ProbAlgebra, c: Expectation, retract: RetractData, phi_s: SLMorphism
                   ) -> CompleteSpace:
    """``M^S = h Pi``, ``iota^S = c phi^S_1`` and ``Lambda = beta Pi`` for ``Pi`` built from ``phi^S``.

    Verifies the moments, the descendant identity and the correlation algebra axioms.
    """
    from .corralg import check_correlation_algebra

    S = phi_s.source
    if not S.has_unit:
        raise ValidationError("the cohomology must contain the unit", {"identity": "unital"})
    nmax = min(phi_s.nmax, P.nmax)
    Pi = pi_from_phi(phi_s, P.algebra)
    M_s = [MultiMap.identity(S)] + [
        MultiMap.lazy(n, 0, S, S, lambda key, n=n: retract.h.apply([Pi[n - 1].value(key)]))
        for n in range(2, nmax + 1)]
    algebra = CorrelationAlgebra(S, M_s)
    iota_values = {}
    for p in S.of_degree(0):
        v = c(phi_s.map(1)(p))
        if v:
            iota_values[p] = v
    iota = Expectation(S, iota_values)
    lam_maps = [MultiMap.lazy(n, -1, S, P.basis,
                              lambda key, n=n: retract.beta.apply([Pi[n - 1].value(key)]))
                for n in range(1, nmax + 1)]
    Lam = LambdaFamily(S, P.basis, lam_maps)
    report = check_correlation_algebra(algebra)
    if not report.ok:
        raise ValidationError("induced algebra is not a correlation algebra", report.failures[0])
    for n in range(1, nmax + 1):
        for key in canonical_keys(S, n):
            if c(Pi[n - 1].value(key)) != iota(algebra.M(n).value(key)):
                raise ValidationError("moments disagree", {"arity": n, "word": list(key)})
    S_alg = ProbAlgebra.classical(algebra)
    rebuilt = descendant_morphism(phi_s.map(1), Lam, S_alg, P, nmax)
    if not rebuilt.equals(phi_s, nmax):
        raise ValidationError("phi^S is not the descendant of phi^S_1", {"identity": "descendant"})
    return CompleteSpace(algebra, iota, phi_s, Lam)


# ---------------------------------------------------------------------------
# Gaussian flow certificate


@dataclass
class FlowCertificate:
    space: RandomVarSpace
    eta: HomotopyFamily
    family: PolyFamily
    endpoint: SLMorphism
    report: object


def flow_certificate(R, nmax: int = 4) -> FlowCertificate:
    """Flow the variable ``e -> s`` of a one-variable realization to ``tau = 1``.

    ``K eta = rho(1)`` must be a nonzero multiple ``a s``; the homotopy
    ``eta_1(e) = -eta / a`` then gives ``Phi_1(tau) = (1 - tau) s``.  The
    endpoint is checked to be a morphism again.
    """
    from .slinfty import check_morphism

    P = R.prob
    V = GradedBasis(("e",), (0,), None)
    s = R.index[((1,), ())]
    eta_idx = R.index[((0,), (0,))]
    image = P.K(eta_idx)
    if set(image) != {s}:
        raise ValidationError("the operator does not send 1 to a multiple of s",
                              {"identity": "K eta = a s", "value": image})
    phi = SLMorphism.linear(MultiMap(1, 0, V, P.basis, {(0,): {s: ONE}}), nmax)
    L = descendant_structure(P, nmax)
    Z = zero_structure(V, nmax)
    eta = HomotopyFamily(V, P.basis, [MultiMap(1, -1, V, P.basis, {(0,): {eta_idx: -1 / image[s]}})]
                         + [MultiMap.zero(n, -1, V, P.basis) for n in range(2, nmax + 1)])
    family, end = flow(phi, eta, Z, L)
    report = check_morphism(end, Z, L, unital=False)
    return FlowCertificate(RandomVarSpace(V, phi), eta, family, end, report)
