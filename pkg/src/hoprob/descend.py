"""Descendant sL-infinity algebras and morphisms of homotopy probability algebras."""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Mapping, Optional

from .cumulants import Expectation, ProbAlgebra
from .kernel import (
    Element,
    GradedBasis,
    Key,
    MultiMap,
    Report,
    ValidationError,
    add_into,
    canonical_keys,
)
from .slinfty import (
    SLInftyStructure,
    SLMorphism,
    compose,
    insertion_sum,
    partition_sum,
)


class LambdaFamily:
    """Degree -1 maps ``Lambda_n: S^n C -> C'`` with the unit tower.

    ``Lambda_1(1) = 0`` and ``Lambda_{n+1}(x_1, .., x_n, 1) = Lambda_n(x_1, .., x_n)``.
    """

    def __init__(self, source: GradedBasis, target: GradedBasis, maps, validate: bool = True):
        self.source = source
        self.target = target
        self.maps = tuple(maps)
        for n, mp in enumerate(self.maps, start=1):
            if mp.arity != n or mp.degree != -1 or mp.source != source or mp.target != target:
                raise ValueError(f"Lambda_{n} must be a degree -1 map of arity {n}")
        if validate:
            report = self.unit_report()
            if not report.ok:
                raise ValidationError("Lambda violates the unit tower", report.failures[0])

    @property
    def nmax(self) -> int:
        return len(self.maps)

    def map(self, n: int) -> MultiMap:
        return self.maps[n - 1]

    @classmethod
    def zero(cls, source: GradedBasis, target: GradedBasis, nmax: int) -> "LambdaFamily":
        return cls(source, target, [MultiMap.zero(n, -1, source, target) for n in range(1, nmax + 1)],
                   validate=False)

    @classmethod
    def from_reduced(cls, source: GradedBasis, target: GradedBasis,
                     reduced: Mapping[int, Mapping[Key, Element]], nmax: int) -> "LambdaFamily":
        """Extend values on unit-free words by the unit tower."""
        u = source.unit_index
        tables = {n: MultiMap(n, -1, source, target, reduced.get(n, {})) for n in range(1, nmax + 1)}
        for n, table in tables.items():
            for key, _ in table.items():
                if u in key:
                    raise ValueError("reduced Lambda values must avoid the unit")

        def make(n: int) -> MultiMap:
            def func(key: Key) -> Element:
                core = tuple(i for i in key if i != u)
                if not core:
                    return {}
                return tables[len(core)].value(core)
            return MultiMap.lazy(n, -1, source, target, func)

        return cls(source, target, [make(n) for n in range(1, nmax + 1)], validate=False)

    def unit_report(self) -> Report:
        report = Report()
        u = self.source.unit_index
        if u is None:
            return report
        report.count("Lambda unit")
        if self.maps and self.maps[0](u):
            report.fail("Lambda unit", arity=1, word=[u], value=self.maps[0](u))
        for n in range(1, self.nmax):
            for key in canonical_keys(self.source, n):
                report.count("Lambda unit")
                lhs = self.maps[n](*(key + (u,)))
                rhs = self.maps[n - 1](*key)
                if lhs != rhs:
                    report.fail("Lambda unit", arity=n + 1, word=list(key) + [u], value=lhs,
                                expected=rhs)
        return report


def descendant_structure(P: ProbAlgebra, nmax: Optional[int] = None) -> SLInftyStructure:
    """``ell_n = K M_n - sum_{(pi,i), |pi|>1} eps(pi,i) M_{|pi|}(.., ell(x_Bi), ..)``."""
    basis = P.basis
    nmax = P.nmax if nmax is None else nmax
    ell: List[MultiMap] = [P.K]

    def ell_of(n: int) -> MultiMap:
        return ell[n - 1]

    def value(key: Key) -> Element:
        n = len(key)
        acc = P.K.apply([P.M(n).value(key)])
        return add_into(acc, insertion_sum(P.M, ell_of, key, basis, skip=lambda k: k == 1), -1)

    for n in range(2, nmax + 1):
        ell.append(MultiMap.lazy(n, 1, basis, basis, value))
    return SLInftyStructure(basis, ell)


def check_pointed_cochain_map(f: MultiMap, P: ProbAlgebra, P2: ProbAlgebra) -> None:
    if f.arity != 1 or f.degree != 0 or f.source != P.basis or f.target != P2.basis:
        raise ValidationError("f must be a degree-0 linear map between the two spaces",
                              {"identity": "shape"})
    u, u2 = P.basis.unit_index, P2.basis.unit_index
    if u is not None and (u2 is None or f(u) != {u2: Fraction(1)}):
        raise ValidationError("f(1) != 1'", {"identity": "f(1)=1'", "value": f(u)})
    for j in range(len(P.basis)):
        lhs = f.apply([P.K(j)])
        rhs = P2.K.apply([f(j)])
        if lhs != rhs:
            raise ValidationError("f K != K' f",
                                  {"identity": "fK=K'f", "word": [j], "lhs": lhs, "rhs": rhs})


def descendant_morphism(f: MultiMap, Lam: Optional[LambdaFamily], P: ProbAlgebra, P2: ProbAlgebra,
                        nmax: Optional[int] = None, source_structure: Optional[SLInftyStructure] = None,
                        validate: bool = True) -> SLMorphism:
    """The descendant of ``f`` up to the homotopy ``Lam``.

    ``phi_n = f M_n - sum_{|pi|>1} eps(pi) M'(phi(x_B1), ..) - K' Lambda_n
    - sum_(pi,i) eps(pi,i) Lambda(.., ell^K(x_Bi), ..)``.
    """
    if validate:
        check_pointed_cochain_map(f, P, P2)
    nmax = min(P.nmax, P2.nmax) if nmax is None else nmax
    if Lam is None:
        Lam = LambdaFamily.zero(P.basis, P2.basis, nmax)
    if Lam.nmax < nmax:
        raise ValueError(f"Lambda is only given up to arity {Lam.nmax}")
    ellK = source_structure if source_structure is not None else descendant_structure(P, nmax)
    source, target = P.basis, P2.basis
    phi: List[MultiMap] = []

    def phi_of(n: int) -> MultiMap:
        return phi[n - 1]

    def value(key: Key) -> Element:
        n = len(key)
        acc = f.apply([P.M(n).value(key)])
        add_into(acc, partition_sum(P2.M, phi_of, key, source, skip=lambda k: k == 1), -1)
        add_into(acc, P2.K.apply([Lam.map(n).value(key)]), -1)
        add_into(acc, insertion_sum(Lam.map, ellK.l, key, source), -1)
        return acc

    for n in range(1, nmax + 1):
        phi.append(MultiMap.lazy(n, 0, source, target, value))
    return SLMorphism(source, target, phi)


def scalar_target(nmax: int) -> ProbAlgebra:
    """The ground field as a homotopy probability algebra."""
    return ProbAlgebra.scalars(nmax)


def expectation_map(c: Expectation, P: ProbAlgebra, target: ProbAlgebra) -> MultiMap:
    """``c`` as a pointed cochain map into the ground field."""
    entries: Dict[Key, Element] = {(i,): {0: v} for i, v in c.values.items()}
    return MultiMap(1, 0, P.basis, target.basis, entries)


def cumulant_morphism(P: ProbAlgebra, c: Expectation, Lam: Optional[LambdaFamily] = None,
                      nmax: Optional[int] = None) -> SLMorphism:
    """Descendant of the expectation viewed as a map into the ground field."""
    nmax = P.nmax if nmax is None else nmax
    k = scalar_target(nmax)
    return descendant_morphism(expectation_map(c, P, k), Lam, P, k, nmax)


def lambda_invariance_test(f: MultiMap, Lam: LambdaFamily, Lam2: LambdaFamily, phi_v: SLMorphism,
                           P: ProbAlgebra, P2: ProbAlgebra, nmax: Optional[int] = None) -> bool:
    """``phi^{f,Lam} . phi_v == phi^{f,Lam2} . phi_v`` exactly."""
    nmax = min(P.nmax, P2.nmax, phi_v.nmax) if nmax is None else nmax
    ellK = descendant_structure(P, nmax)
    first = compose(descendant_morphism(f, Lam, P, P2, nmax, ellK), phi_v)
    second = compose(descendant_morphism(f, Lam2, P, P2, nmax, ellK), phi_v)
    return first.equals(second, nmax)
