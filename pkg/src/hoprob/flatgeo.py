"""Formal flat geometry of a finite-dimensional correlation algebra.

The connection ``A_{ab}^c`` collects the structure constants of the product
family ``m`` into power series in coordinates ``t^a``; the flat coordinates
``T^c`` are the exponential generating series of the structure constants of
``M``.  Every identity is checked coefficient by coefficient on canonical
monomials, so odd coordinates are handled by the series normalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple

from .corralg import CorrelationAlgebra, ProductFamily, check_property_Q, m_from_M
from .cumulants import reversal_sign
from .kernel import (
    GradedBasis,
    Key,
    Report,
    SuperSeries,
    ValidationError,
    canonical_keys,
    multiplicity_factor,
)

Triple = Tuple[int, int, int]

DEFAULT_ORDER = 6


@dataclass
class ConnectionTensor:
    """``A_{ab}^c`` as truncated series, indexed by ``(a, b, c)``."""

    basis: GradedBasis
    order: int
    series: Dict[Triple, SuperSeries]
    property_q: Optional[bool] = None

    def __call__(self, a: int, b: int, c: int) -> SuperSeries:
        return self.series[(a, b, c)]

    @property
    def parities(self) -> Tuple[int, ...]:
        return self.basis.parities


@dataclass
class FlatCoordinates:
    """``T^c`` as truncated series, one per basis index."""

    basis: GradedBasis
    order: int
    series: List[SuperSeries] = field(default_factory=list)

    def __getitem__(self, c: int) -> SuperSeries:
        return self.series[c]


def _zero(parities, order: int) -> SuperSeries:
    return SuperSeries(parities, order)


def _sign(parities, a: int, b: int) -> int:
    return -1 if parities[a] and parities[b] else 1


def connection_from_products(family: ProductFamily, order: int = DEFAULT_ORDER) -> ConnectionTensor:
    """``A_{ab}^c = sum_n 1/n! sum t^{r_n} .. t^{r_1} m_{n+2}(e_{r_1}, .., e_{r_n}, e_a, e_b)^c``.

    The family may use any storage; values are read through ordered calls so
    a planted asymmetry in the last two slots survives into ``A``.
    """
    basis = family.basis
    dim = len(basis)
    parities = basis.parities
    if order + 2 > family.nmax:
        raise ValueError(f"order {order} needs m up to arity {order + 2}, have {family.nmax}")
    terms: Dict[Triple, Dict[Key, Fraction]] = {
        (a, b, c): {} for a in range(dim) for b in range(dim) for c in range(dim)}
    for n in range(order + 1):
        m = family.m(n + 2)
        for rho in canonical_keys(basis, n):
            weight = multiplicity_factor(rho) * reversal_sign(rho, parities)
            for a in range(dim):
                for b in range(dim):
                    for c, v in m(*rho, a, b).items():
                        table = terms[(a, b, c)]
                        table[rho] = table.get(rho, 0) + v * weight
    series = {t: SuperSeries(parities, order, table) for t, table in terms.items()}
    return ConnectionTensor(basis, order, series)


def connection_from_algebra(A: CorrelationAlgebra, order: int = DEFAULT_ORDER) -> ConnectionTensor:
    """The connection built from the product family of ``A``."""
    tensor = connection_from_products(m_from_M(A, order + 2), order)
    tensor.property_q = check_property_Q(A)[0]
    return tensor


def flat_coordinates(A: CorrelationAlgebra, order: int = DEFAULT_ORDER,
                     verify: bool = True) -> FlatCoordinates:
    """``T^c = sum_{n>=1} 1/n! sum t^{a_n} .. t^{a_1} M_n(e_{a_1}, .., e_{a_n})^c``.

    With ``verify`` the second-order system against the connection is
    checked below the truncation order; a nonzero residual means the input
    is not a correlation algebra.
    """
    basis = A.basis
    parities = basis.parities
    if order > A.nmax:
        raise ValueError(f"order {order} needs M up to arity {order}, have {A.nmax}")
    terms: List[Dict[Key, Fraction]] = [{} for _ in range(len(basis))]
    for n in range(1, order + 1):
        Mn = A.M(n)
        for key in canonical_keys(basis, n):
            weight = multiplicity_factor(key) * reversal_sign(key, parities)
            for c, v in Mn(*key).items():
                terms[c][key] = terms[c].get(key, 0) + v * weight
    coords = FlatCoordinates(basis, order, [SuperSeries(parities, order, t) for t in terms])
    if verify and order >= 2 and A.nmax >= order:
        connection = connection_from_algebra(A, order - 2) if order - 2 + 2 <= A.nmax else None
        if connection is not None:
            report = Report()
            _check_flat_system(coords, connection, order - 2, report)
            if not report.ok:
                raise ValidationError("flat coordinates violate the connection system",
                                      report.failures[0])
    return coords


# ---------------------------------------------------------------------------
# identities


def _residual(report: Report, name: str, residual: SuperSeries, order: int, **where) -> None:
    report.count(name)
    residual = residual.truncate(order)
    if residual:
        mono = min(residual.terms, key=lambda m: (len(m), m))
        report.fail(name, monomial=list(mono), coeff=residual.terms[mono], **where)


def _flat_halves(A: ConnectionTensor, a: int, b: int, g: int, s: int) -> Tuple[SuperSeries, SuperSeries]:
    """Derivative and quadratic parts of the flatness identity.

    ``A_{bg}^r`` has parity ``|b| + |g| + |r|``, so moving ``d_a`` past it
    costs ``(-1)^{|a|(|b| + |g| + |r|)}``; the quadratic terms carry that sign.
    """
    par = A.parities
    sign = _sign(par, a, b)
    torsion = A(b, g, s).derive(a) - A(a, g, s).derive(b) * sign
    quadratic = _zero(par, A.order)
    for r in range(len(A.basis)):
        past_a = -1 if par[a] and (par[b] + par[g] + par[r]) & 1 else 1
        past_b = -1 if par[b] and (par[a] + par[g] + par[r]) & 1 else 1
        quadratic = (quadratic + A(b, g, r) * A(a, r, s) * past_a
                     - A(a, g, r) * A(b, r, s) * (sign * past_b))
    return torsion, quadratic


def verify_flatness(A: ConnectionTensor, order: Optional[int] = None,
                    property_q: Optional[bool] = None) -> Report:
    """Unit row, graded symmetry and flatness of ``A`` below ``order``.

    Derivatives lose one order, so the default compares through
    ``A.order - 1``.  With property Q the derivative and quadratic halves of
    the flatness identity are also checked separately.
    """
    order = A.order - 1 if order is None else order
    if order >= A.order:
        raise ValueError(f"the connection is only known through order {A.order}")
    property_q = A.property_q if property_q is None else property_q
    dim = len(A.basis)
    par = A.parities
    report = Report()
    u = A.basis.unit_index
    if u is not None:
        for b in range(dim):
            for c in range(dim):
                expected = 1 if b == c else 0
                _residual(report, "unit row", A(u, b, c) - expected, order, triple=[u, b, c])
    for a in range(dim):
        for b in range(a, dim):
            for c in range(dim):
                _residual(report, "symmetry", A(a, b, c) - A(b, a, c) * _sign(par, a, b), order,
                          triple=[a, b, c])
    for a in range(dim):
        for b in range(dim):
            for g in range(dim):
                for s in range(dim):
                    torsion, quadratic = _flat_halves(A, a, b, g, s)
                    where = {"indices": [a, b, g, s]}
                    _residual(report, "flatness", torsion + quadratic, order, **where)
                    if property_q:
                        _residual(report, "flatness derivative half", torsion, order, **where)
                        _residual(report, "flatness quadratic half", quadratic, order, **where)
    return report


def _second_order(series: SuperSeries, A: ConnectionTensor, b: int, g: int) -> SuperSeries:
    """``(d_b d_g - sum_r A_{bg}^r d_r)`` applied to ``series``."""
    out = series.derive(g).derive(b)
    for r in range(len(A.basis)):
        out = out - A(b, g, r) * series.derive(r)
    return out


def _check_flat_system(T: FlatCoordinates, A: ConnectionTensor, order: int, report: Report) -> None:
    dim = len(T.basis)
    for s in range(dim):
        for b in range(dim):
            for g in range(dim):
                _residual(report, "flat coordinate system", _second_order(T[s], A, b, g), order,
                          indices=[b, g, s])


def verify_flat_coordinates(T: FlatCoordinates, A: ConnectionTensor,
                            algebra: Optional[CorrelationAlgebra] = None,
                            order: Optional[int] = None) -> Report:
    """The second-order system, both boundary conditions and the unit direction.

    With ``algebra`` the Taylor coefficients are also read back by repeated
    differentiation and compared with ``M``.
    """
    order = min(T.order - 2, A.order) if order is None else order
    if order > min(T.order - 2, A.order):
        raise ValueError("order exceeds what the coordinates and connection determine")
    dim = len(T.basis)
    par = T.basis.parities
    report = Report()
    _check_flat_system(T, A, order, report)
    for s in range(dim):
        _residual(report, "vanishing at origin", SuperSeries.constant(par, 0, T[s].constant_term()),
                  0, index=s)
        for b in range(dim):
            first = T[s].derive(b).constant_term() - (1 if b == s else 0)
            _residual(report, "first derivative at origin", SuperSeries.constant(par, 0, first), 0,
                      indices=[b, s])
    u = T.basis.unit_index
    if u is not None:
        for s in range(dim):
            delta = 1 if s == u else 0
            _residual(report, "unit direction", T[s].derive(u) - T[s] - delta, T.order - 1, index=s)
    if algebra is not None:
        for n in range(1, T.order + 1):
            for key, val in algebra.M(n).items():
                for s in range(dim):
                    d = T[s]
                    # d_{a_1} .. d_{a_n}: the innermost derivative acts first
                    for i in reversed(key):
                        d = d.derive(i)
                    got = d.constant_term() - val.get(s, 0)
                    _residual(report, "Taylor coefficients", SuperSeries.constant(par, 0, got), 0,
                              word=list(key), index=s)
    return report


@dataclass
class MgfResult:
    Z: SuperSeries
    report: Report

    @property
    def ok(self) -> bool:
        return self.report.ok


def mgf_assemble(A: CorrelationAlgebra, iota: Mapping[int, Fraction], order: int = DEFAULT_ORDER,
                 connection: Optional[ConnectionTensor] = None,
                 coords: Optional[FlatCoordinates] = None) -> MgfResult:
    """``Z = 1 + sum_c T^c iota(e_c)`` with both differential equations checked through ``order``.

    ``iota`` lists values on basis indices; it must send the unit to 1.
    """
    basis = A.basis
    u = basis.unit_index
    if u is None or iota.get(u) != 1:
        raise ValidationError("iota must send the unit to 1", {"identity": "iota(1)=1"})
    if coords is None:
        coords = flat_coordinates(A, order + 2, verify=False)
    if connection is None:
        connection = connection_from_algebra(A, order)
    par = basis.parities
    Z = SuperSeries.constant(par, coords.order)
    for c, v in iota.items():
        if v:
            Z = Z + coords[c] * Fraction(v)
    report = Report()
    dim = len(basis)
    for a in range(dim):
        for b in range(dim):
            _residual(report, "mgf second order", _second_order(Z, connection, a, b), order,
                      indices=[a, b])
    _residual(report, "mgf unit direction", Z.derive(u) - Z, order)
    return MgfResult(Z, report)


def exp_series(parities, order: int, variable: int = 0, shift: int = 0) -> SuperSeries:
    """``e^{t^v} - shift`` truncated at ``order``; used as an independent oracle."""
    if parities[variable]:
        raise ValueError("exponential of an odd coordinate is not needed here")
    terms: Dict[Key, Fraction] = {}
    fact = 1
    for k in range(order + 1):
        if k:
            fact *= k
        terms[(variable,) * k] = Fraction(1, fact)
    terms[()] -= shift
    return SuperSeries(parities, order, terms)


def coefficient_table(series: Mapping, basis: GradedBasis) -> List[dict]:
    """Rows ``{"target", "monomial", "coeff"}`` for CSV or JSON emission."""
    rows = []
    for label, s in series.items():
        for mono in sorted(s.terms, key=lambda m: (len(m), m)):
            rows.append({"target": label,
                         "monomial": "*".join(f"t[{basis.labels[i]}]" for i in mono) or "1",
                         "coeff": s.terms[mono]})
    return rows
