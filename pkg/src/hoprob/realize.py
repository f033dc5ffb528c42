"""Homotopical realizations of classical probability spaces with infinitesimal symmetries.

A truncated polynomial algebra, algebraic differential operators, the Koszul
complex ``A (x) S(g[-1])`` with its differential ``K``, coinvariant reduction,
and the derivation of ODEs for the moment generating function.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce as fold
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from .corralg import CorrelationAlgebra
from .cumulants import Expectation, ProbAlgebra
from .kernel import (
    CapExceeded,
    Element,
    GradedBasis,
    Key,
    MultiMap,
    UPoly,
    ValidationError,
    add_into,
)

Exps = Tuple[int, ...]
Poly = Dict[Exps, Fraction]
ONE = Fraction(1)


class BoundaryError(CapExceeded):
    """A requested quantity lies outside the truncation's validity window."""


def poly_add(acc: Poly, other: Mapping[Exps, Any], scale: Any = 1) -> Poly:
    for e, c in other.items():
        v = acc.get(e, 0) + c * scale
        if v:
            acc[e] = v
        else:
            acc.pop(e, None)
    return acc


def poly_degree(p: Mapping[Exps, Any]) -> int:
    return max((sum(e) for e in p), default=-1)


def _exps_mul(a: Exps, b: Exps) -> Exps:
    return tuple(x + y for x, y in zip(a, b))


def poly_mul(p: Mapping[Exps, Any], q: Mapping[Exps, Any]) -> Poly:
    out: Poly = {}
    for a, c in p.items():
        for b, d in q.items():
            poly_add(out, {_exps_mul(a, b): c * d})
    return out


def format_monomial(exps: Exps, names: Sequence[str]) -> str:
    parts = []
    for name, k in zip(names, exps):
        if k == 1:
            parts.append(name)
        elif k > 1:
            parts.append(f"{name}^{k}")
    return "*".join(parts) if parts else "1"


class TruncPolyAlgebra:
    """Polynomials in degree-0 generators, kept up to total degree ``cap``."""

    def __init__(self, names: Sequence[str], cap: int):
        if cap < 0:
            raise ValueError("the degree cap must be non-negative")
        self.names = tuple(names)
        self.cap = cap

    @property
    def nvars(self) -> int:
        return len(self.names)

    def monomials(self, cap: Optional[int] = None) -> List[Exps]:
        cap = self.cap if cap is None else cap
        out = []
        for total in range(cap + 1):
            for combo in itertools.combinations_with_replacement(range(self.nvars), total):
                exps = [0] * self.nvars
                for i in combo:
                    exps[i] += 1
                out.append(tuple(exps))
        return sorted(set(out), key=lambda e: (sum(e), tuple(-x for x in e)))

    def unit(self) -> Poly:
        return {(0,) * self.nvars: ONE}

    def var(self, i: int) -> Poly:
        e = [0] * self.nvars
        e[i] = 1
        return {tuple(e): ONE}

    def multiply(self, p: Mapping[Exps, Any], q: Mapping[Exps, Any]) -> Tuple[Poly, bool]:
        """Product truncated above the cap, with a flag when terms were dropped."""
        full = poly_mul(p, q)
        kept = {e: c for e, c in full.items() if sum(e) <= self.cap}
        return kept, len(kept) != len(full)


@dataclass
class DiffOperator:
    """``sum coefficient(x) * d^alpha`` with polynomial coefficients."""

    nvars: int
    terms: List[Tuple[Poly, Exps]]

    @classmethod
    def from_terms(cls, nvars: int, terms) -> "DiffOperator":
        clean = []
        for coeff, alpha in terms:
            clean.append(({tuple(e): Fraction(c) for e, c in coeff.items() if c}, tuple(alpha)))
        return cls(nvars, clean)

    @property
    def order(self) -> int:
        return max((sum(a) for _, a in self.terms), default=0)

    @property
    def raise_by(self) -> int:
        """The most the operator can raise polynomial degree."""
        return max(0, max((poly_degree(c) - sum(a) for c, a in self.terms), default=0))

    def apply(self, p: Mapping[Exps, Any]) -> Poly:
        out: Poly = {}
        for coeff, alpha in self.terms:
            for e, c in p.items():
                if any(k < a for k, a in zip(e, alpha)):
                    continue
                factor = c
                for k, a in zip(e, alpha):
                    factor *= math.perm(k, a)
                reduced = tuple(k - a for k, a in zip(e, alpha))
                poly_add(out, poly_mul(coeff, {reduced: factor}))
        return out

    def conjugated(self) -> List[Tuple[UPoly, Poly, int]]:
        """Terms of ``e^{-t x} D e^{t x}`` for one variable, as ``(t-poly, coefficient, derivative order)``."""
        if self.nvars != 1:
            raise ValueError("conjugation by e^{tx} is implemented for one variable")
        out = []
        for coeff, (k,) in self.terms:
            for j in range(k + 1):
                tpoly = UPoly([0] * (k - j) + [math.comb(k, j)])
                out.append((tpoly, coeff, j))
        return out


@dataclass
class Symmetry:
    """A Lie algebra with structure constants ``f[i][j] = {k: c}`` and operators ``rho``."""

    rho: List[DiffOperator]
    structure: Dict[Tuple[int, int], Dict[int, Fraction]] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.rho)

    def f(self, i: int, j: int) -> Dict[int, Fraction]:
        if (i, j) in self.structure:
            return self.structure[(i, j)]
        if (j, i) in self.structure:
            return {k: -c for k, c in self.structure[(j, i)].items()}
        return {}

    @property
    def raise_by(self) -> int:
        return max((op.raise_by for op in self.rho), default=0)

    def bracket_report(self, A: TruncPolyAlgebra) -> List[dict]:
        """Failures of ``[rho_i, rho_j] = sum_k f_ij^k rho_k`` on monomials inside the validity window."""
        window = A.cap - 2 * self.raise_by
        failures = []
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                for mono in A.monomials(max(window, -1)):
                    p = {mono: ONE}
                    lhs = self.rho[i].apply(self.rho[j].apply(p))
                    poly_add(lhs, self.rho[j].apply(self.rho[i].apply(p)), -1)
                    rhs: Poly = {}
                    for k, c in self.f(i, j).items():
                        poly_add(rhs, self.rho[k].apply(p), c)
                    if lhs != rhs:
                        failures.append({"pair": [i, j], "monomial": list(mono)})
        return failures


# ---------------------------------------------------------------------------
# Koszul realization


KoszulMono = Tuple[Exps, Tuple[int, ...]]


def _wedge(S: Tuple[int, ...], T: Tuple[int, ...]) -> Tuple[int, Optional[Tuple[int, ...]]]:
    if set(S) & set(T):
        return 0, None
    merged = S + T
    inversions = sum(1 for a in range(len(merged)) for b in range(a + 1, len(merged))
                     if merged[a] > merged[b])
    return (-1 if inversions & 1 else 1), tuple(sorted(merged))


def _remove(S: Tuple[int, ...], j: int) -> Tuple[int, Optional[Tuple[int, ...]]]:
    """Left derivative ``d/d eta_j`` of the sorted product ``eta_S``."""
    if j not in S:
        return 0, None
    pos = S.index(j)
    return (-1 if pos & 1 else 1), S[:pos] + S[pos + 1:]


class KoszulRealization:
    """``C = A (x) S(g[-1])`` truncated by weight ``|a| + r |S| <= D``.

    ``r`` is the most an operator raises degree, so ``K`` maps the truncated
    space into itself exactly.  The product drops terms of weight above ``D``;
    no compatibility with ``K`` is needed, so the truncation is still a
    homotopy probability algebra.  Its descendant agrees with the untruncated
    one on words of total weight at most ``D`` (see :meth:`within_validity`).
    """

    def __init__(self, A: TruncPolyAlgebra, S: Symmetry, nmax: int = 6,
                 eta_names: Optional[Sequence[str]] = None):
        self.A, self.S = A, S
        self.weight = max(S.raise_by, 1) if S.dim else 0
        if eta_names is None:
            eta_names = ["eta"] if S.dim == 1 else [f"eta{j}" for j in range(S.dim)]
        self.eta_names = tuple(eta_names)
        monos: List[KoszulMono] = []
        for r in range(S.dim + 1):
            for subset in itertools.combinations(range(S.dim), r):
                for e in A.monomials(A.cap - self.weight * r):
                    monos.append((e, subset))
        monos.sort(key=lambda m: (len(m[1]), sum(m[0]), tuple(-x for x in m[0]), m[1]))
        self.monos = monos
        self.index = {m: i for i, m in enumerate(monos)}
        labels = [self._label(m) for m in monos]
        self.basis = GradedBasis(tuple(labels), tuple(-len(S_) for _, S_ in monos), 0)
        self.K = MultiMap(1, 1, self.basis, self.basis,
                          {(i,): self._K_of(m) for i, m in enumerate(monos)})
        self.algebra = self._build_algebra(nmax)
        self.prob = ProbAlgebra(self.algebra, self.K, validate=False)
        self._check_square()

    def _label(self, m: KoszulMono) -> str:
        e, S = m
        parts = [] if not any(e) else [format_monomial(e, self.A.names)]
        parts += [self.eta_names[j] for j in S]
        return "*".join(parts) if parts else "1"

    def mono_weight(self, m: KoszulMono) -> int:
        return sum(m[0]) + self.weight * len(m[1])

    def within_validity(self, key: Key) -> bool:
        return sum(self.mono_weight(self.monos[i]) for i in key) <= self.A.cap

    def element(self, poly: Mapping[Exps, Any], etas: Tuple[int, ...] = ()) -> Element:
        out: Element = {}
        for e, c in poly.items():
            idx = self.index.get((e, etas))
            if idx is None:
                raise BoundaryError(f"{format_monomial(e, self.A.names)} is beyond the truncation")
            add_into(out, {idx: Fraction(c)})
        return out

    def mono_product(self, i: int, j: int) -> Element:
        (a, S), (b, T) = self.monos[i], self.monos[j]
        sign, U = _wedge(S, T)
        if U is None:
            return {}
        m = (_exps_mul(a, b), U)
        idx = self.index.get(m)
        return {idx: Fraction(sign)} if idx is not None else {}

    def _K_of(self, m: KoszulMono) -> Element:
        e, S = m
        out: Element = {}
        for j in S:
            sign, rest = _remove(S, j)
            for exps, c in self.S.rho[j].apply({e: ONE}).items():
                idx = self.index.get((exps, rest))
                if idx is None:
                    raise BoundaryError("operator left the truncation")
                add_into(out, {idx: c * sign})
        for i in S:
            for j in S:
                if i == j:
                    continue
                fij = self.S.f(i, j)
                if not fij:
                    continue
                # d/d eta_j after d/d eta_i: the order for which K^2 = 0 when rho is a representation
                s1, R1 = _remove(S, i)
                s2, R2 = _remove(R1, j)
                for k, c in fij.items():
                    s3, U = _wedge((k,), R2)
                    if U is None:
                        continue
                    idx = self.index[(e, U)]
                    add_into(out, {idx: Fraction(c, 2) * s1 * s2 * s3})
        return out

    def _build_algebra(self, nmax: int) -> CorrelationAlgebra:
        basis = self.basis

        def make(n: int) -> MultiMap:
            def func(key: Key) -> Element:
                acc: Element = {key[0]: ONE}
                for j in key[1:]:
                    nxt: Element = {}
                    for i, c in acc.items():
                        add_into(nxt, self.mono_product(i, j), c)
                    acc = nxt
                    if not acc:
                        break
                return acc
            return MultiMap.lazy(n, 0, basis, basis, func)

        return CorrelationAlgebra(basis, [MultiMap.identity(basis)] + [make(n) for n in range(2, nmax + 1)])

    def _check_square(self) -> None:
        for i in range(len(self.basis)):
            sq = self.K.apply([self.K(i)])
            if sq:
                raise ValidationError("K^2 != 0: the operators do not represent the Lie algebra",
                                      {"identity": "KK=0", "monomial": self.basis.labels[i], "value": sq})

    # -- coinvariants

    def reduce_coinvariants(self) -> "Coinvariants":
        return reduce_coinvariants(self)


def build_koszul(A: TruncPolyAlgebra, S: Symmetry, nmax: int = 6) -> KoszulRealization:
    failures = S.bracket_report(A)
    if failures:
        raise ValidationError("rho does not respect the brackets", failures[0])
    return KoszulRealization(A, S, nmax)


class Coinvariants:
    """``A / Im rho`` at the truncation: a quotient basis and the reduction of monomials."""

    def __init__(self, R: KoszulRealization):
        self.R = R
        A = R.A
        rank = {e: (sum(e), e) for e in A.monomials()}
        self.pivots: Dict[Exps, Poly] = {}
        for j in range(R.S.dim):
            for e in A.monomials(A.cap - R.weight):
                img = R.S.rho[j].apply({e: ONE})
                self._insert(img, rank)
        self.basis = [e for e in A.monomials() if e not in self.pivots]

    def _reduce(self, p: Poly, rank) -> Poly:
        p = dict(p)
        while True:
            live = [e for e in p if e in self.pivots]
            if not live:
                return p
            top = max(live, key=lambda e: rank[e])
            poly_add(p, self.pivots[top], -p[top])

    def _insert(self, vec: Poly, rank) -> None:
        vec = self._reduce(vec, rank)
        if not vec:
            return
        top = max(vec, key=lambda e: rank[e])
        c = vec[top]
        vec = {e: v / c for e, v in vec.items()}
        for key, row in self.pivots.items():
            if top in row:
                poly_add(row, vec, -row[top])
        self.pivots[top] = vec

    def reduce(self, p: Mapping[Exps, Any]) -> Poly:
        """Expansion in the quotient basis; monomials above the cap are undecidable."""
        for e in p:
            if sum(e) > self.R.A.cap:
                raise BoundaryError(
                    f"{format_monomial(e, self.R.A.names)} lies beyond the validity boundary {self.R.A.cap}")
        rank = {e: (sum(e), e) for e in self.R.A.monomials()}
        return self._reduce({e: Fraction(c) for e, c in p.items()}, rank)


def reduce_coinvariants(R: KoszulRealization) -> Coinvariants:
    return Coinvariants(R)


def coinvariant_expectation(R: KoszulRealization, values: Optional[Mapping[Exps, Any]] = None,
                            coinvariants: Optional[Coinvariants] = None) -> Expectation:
    """The extended expectation: ``iota`` on polynomials, zero on ``eta`` terms.

    ``values`` assigns the quotient basis; by default the unit gets 1, the rest 0.
    """
    Q = coinvariants if coinvariants is not None else reduce_coinvariants(R)
    unit = (0,) * R.A.nvars
    values = {unit: ONE} if values is None else {tuple(e): Fraction(v) for e, v in values.items()}
    if values.get(unit) != 1:
        raise ValueError("the expectation must send the unit to 1")
    out = {}
    for e in R.A.monomials():
        red = Q.reduce({e: ONE})
        v = sum((c * values.get(b, 0) for b, c in red.items()), Fraction(0))
        if v:
            out[R.index[(e, ())]] = v
    return Expectation(R.basis, out)


def coinvariant_moments(R: KoszulRealization, upto: int, var: int = 0,
                        iota: Optional[Expectation] = None) -> List[Fraction]:
    """``iota(x^n)`` for ``n = 0..upto``."""
    iota = coinvariant_expectation(R) if iota is None else iota
    out = []
    for n in range(upto + 1):
        e = [0] * R.A.nvars
        e[var] = n
        out.append(iota(R.element({tuple(e): ONE})))
    return out


# ---------------------------------------------------------------------------
# rational functions and MGF ODEs


class RatFunc:
    """``num / den`` over the rationals, reduced with a monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num: Any, den: Any = 1):
        num = num if isinstance(num, UPoly) else UPoly.const(num)
        den = den if isinstance(den, UPoly) else UPoly.const(den)
        if not den:
            raise ZeroDivisionError("zero denominator")
        if not num:
            self.num, self.den = UPoly(), UPoly.const(1)
            return
        g = UPoly.gcd(num, den)
        num, _ = num.divmod(g)
        den, _ = den.divmod(g)
        lead = den.leading()
        self.num = num * (1 / lead)
        self.den = den * (1 / lead)

    @staticmethod
    def _lift(other: Any) -> "RatFunc":
        return other if isinstance(other, RatFunc) else RatFunc(other)

    def __add__(self, other: Any) -> "RatFunc":
        o = self._lift(other)
        return RatFunc(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self) -> "RatFunc":
        return RatFunc(-self.num, self.den)

    def __sub__(self, other: Any) -> "RatFunc":
        return self + (-self._lift(other))

    def __mul__(self, other: Any) -> "RatFunc":
        o = self._lift(other)
        return RatFunc(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "RatFunc":
        o = self._lift(other)
        return RatFunc(self.num * o.den, self.den * o.num)

    def __bool__(self) -> bool:
        return bool(self.num)

    def __eq__(self, other: object) -> bool:
        o = self._lift(other)
        return self.num == o.num and self.den == o.den

    def __repr__(self) -> str:
        return f"RatFunc({self.num.format('t')} / {self.den.format('t')})"


@dataclass
class MgfOde:
    """``sum_j coeffs[j](t) Z^{(j)}(t) = 0``."""

    coeffs: List[UPoly]

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def format(self) -> str:
        parts = []
        for j in range(self.order, -1, -1):
            c = self.coeffs[j]
            if not c:
                continue
            deriv = "Z" + "'" * j if j <= 3 else f"Z^({j})"
            parts.append(f"({c.format('t')})*{deriv}")
        return " + ".join(parts) + " = 0"

    def __str__(self) -> str:
        return self.format()


def _normalize(coeffs: List[RatFunc]) -> List[UPoly]:
    den = fold(lambda a, b: a * b.den.divmod(UPoly.gcd(a, b.den))[0], coeffs, UPoly.const(1))
    polys = [(c.num * den).divmod(c.den)[0] for c in coeffs]
    fracs = [x for p in polys for x in p.coeffs if x]
    lcm = fold(lambda a, b: a * b // math.gcd(a, b), (x.denominator for x in fracs), 1)
    ints = [int(x * lcm) for x in fracs]
    g = fold(math.gcd, ints, 0) or 1
    polys = [p * Fraction(lcm, g) for p in polys]
    top = next(p for p in reversed(polys) if p)
    if top.leading() < 0:
        polys = [-p for p in polys]
    return polys


def derive_mgf_ode(op: DiffOperator, max_order: int) -> Optional[MgfOde]:
    """Reduce ``x^max_order`` modulo ``Im rho_t`` with ``rho_t = e^{-tx} rho e^{tx}``.

    ``iota(e^{tx} rho_t(p)) = 0`` for every polynomial ``p``, so a relation
    ``x^m = sum_{j<m} c_j(t) x^j`` in the quotient becomes
    ``Z^{(m)} = sum c_j(t) Z^{(j)}``.  Returns ``None`` when the elimination
    is inconclusive.
    """
    terms = op.conjugated()
    pivots: Dict[int, Dict[int, RatFunc]] = {}

    def image(a: int) -> Dict[int, RatFunc]:
        out: Dict[int, RatFunc] = {}
        for tpoly, coeff, j in terms:
            if a < j:
                continue
            base = math.perm(a, j)
            for (k,), c in coeff.items():
                power = a - j + k
                out[power] = out.get(power, RatFunc(0)) + RatFunc(tpoly * (c * base))
        return {p: v for p, v in out.items() if v}

    def reduce_vec(vec: Dict[int, RatFunc]) -> Dict[int, RatFunc]:
        vec = dict(vec)
        while True:
            live = [p for p in vec if p in pivots]
            if not live:
                return vec
            top = max(live)
            c = vec[top]
            for p, v in pivots[top].items():
                nv = vec.get(p, RatFunc(0)) - c * v
                if nv:
                    vec[p] = nv
                else:
                    vec.pop(p, None)

    for a in range(max_order + 1):
        vec = reduce_vec(image(a))
        if not vec:
            continue
        top = max(vec)
        if top > max_order:
            continue
        lead = vec[top]
        pivots[top] = {p: v / lead for p, v in vec.items()}
    normal = reduce_vec({max_order: RatFunc(1)})
    if max_order in normal or any(p > max_order for p in normal):
        return None
    coeffs = [RatFunc(0)] * (max_order + 1)
    coeffs[max_order] = RatFunc(1)
    for p, v in normal.items():
        coeffs[p] = coeffs[p] - v
    return MgfOde(_normalize(coeffs))


def minimal_mgf_ode(op: DiffOperator, max_order: int = 4) -> Optional[MgfOde]:
    """The lowest-order relation found by :func:`derive_mgf_ode`."""
    for m in range(1, max_order + 1):
        ode = derive_mgf_ode(op, m)
        if ode is not None:
            return ode
    return None


def ode_residual(ode: MgfOde, moments: Sequence[Any]) -> List[Fraction]:
    """Taylor coefficients (of ``t^n / n!``) of ``sum c_j(t) Z^{(j)}`` for ``Z = sum mu_n t^n / n!``.

    Only orders determined by the given moments are returned.
    """
    N = len(moments) - 1
    top = N - ode.order
    out = []
    for n in range(top + 1):
        out.append(ode_moment_relation(ode, moments, n))
    return out


def ode_moment_relation(ode: MgfOde, moments: Sequence[Any], n: int) -> Fraction:
    """``sum c * n!/(n-a)! * mu_{n-a+b}`` over terms ``c t^a Z^{(b)}``."""
    acc = Fraction(0)
    for b, poly in enumerate(ode.coeffs):
        for a, c in enumerate(poly.coeffs):
            if c and a <= n:
                acc += c * math.perm(n, a) * Fraction(moments[n - a + b])
    return acc


# ---------------------------------------------------------------------------
# corpora


def one_variable_operator(terms: Sequence[Tuple[Mapping[int, Any], int]]) -> DiffOperator:
    """``sum c_k(x) d^k`` from ``({power: coeff}, k)`` pairs."""
    return DiffOperator.from_terms(1, [({(p,): c for p, c in coeff.items()}, (k,)) for coeff, k in terms])


def gaussian_operator(sigma2: Any) -> DiffOperator:
    """``-sigma^2 d/ds + s``."""
    return one_variable_operator([({0: -Fraction(sigma2)}, 1), ({1: 1}, 0)])


def semicircle_operator() -> DiffOperator:
    """``(4 - s^2) d/ds - 3 s``."""
    return one_variable_operator([({0: 4, 2: -1}, 1), ({1: -3}, 0)])


def one_variable_realization(op: DiffOperator, cap: int, nmax: int = 6) -> KoszulRealization:
    return build_koszul(TruncPolyAlgebra(("s",), cap), Symmetry([op]), nmax)


def gaussian_realization(sigma2: Any = 1, cap: int = 12, nmax: int = 6) -> KoszulRealization:
    return one_variable_realization(gaussian_operator(sigma2), cap, nmax)


def semicircle_realization(cap: int = 14, nmax: int = 6) -> KoszulRealization:
    return one_variable_realization(semicircle_operator(), cap, nmax)
