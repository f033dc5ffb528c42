"""Homotopy probability algebras, expectations, moment and cumulant families,
generating series, independence and central-limit scaling."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, List, Mapping, Optional, Sequence

from .corralg import CorrelationAlgebra
from .kernel import (
    SCALARS,
    EchelonBasis,
    Element,
    GradedBasis,
    Key,
    MultiMap,
    SuperSeries,
    ValidationError,
    _koszul_sign0,
    canonical_keys,
    multiplicity_factor,
    subset_splits,
)


class ProbAlgebra:
    """A correlation algebra with a pointed differential ``K`` of degree +1.

    ``K K = 0``, ``K(1) = 0`` and the unit is not exact.
    """

    def __init__(self, algebra: CorrelationAlgebra, K: MultiMap, validate: bool = True):
        if K.arity != 1 or K.degree != 1 or K.source != algebra.basis or K.target != algebra.basis:
            raise ValueError("K must be a degree +1 endomorphism of the algebra's space")
        self.algebra = algebra
        self.K = K
        if validate:
            self.validate()

    @property
    def basis(self) -> GradedBasis:
        return self.algebra.basis

    @property
    def nmax(self) -> int:
        return self.algebra.nmax

    def M(self, n: int) -> MultiMap:
        return self.algebra.M(n)

    def validate(self) -> None:
        basis, K = self.basis, self.K
        if K(0):
            raise ValidationError("K(1) != 0", {"identity": "K(1)=0", "value": K(0)})
        for j in range(len(basis)):
            square = K.apply([K(j)])
            if square:
                raise ValidationError("K K != 0", {"identity": "KK=0", "word": [j], "value": square})
        if unit_is_exact(self):
            raise ValidationError("the unit lies in the image of K", {"identity": "1 not exact"})

    @classmethod
    def classical(cls, algebra: CorrelationAlgebra) -> "ProbAlgebra":
        """Zero differential."""
        return cls(algebra, MultiMap.zero(1, 1, algebra.basis, algebra.basis))

    @classmethod
    def scalars(cls, nmax: int) -> "ProbAlgebra":
        """The ground field as a one-dimensional space with zero differential."""
        return cls.classical(CorrelationAlgebra.unit_algebra(nmax))


def unit_is_exact(P: ProbAlgebra) -> bool:
    echelon = EchelonBasis()
    for j in P.basis.of_degree(-1):
        echelon.add(P.K(j), j)
    return echelon.contains({0: Fraction(1)})


class Expectation:
    """A degree-0 linear functional on the algebra's space with ``c(1) = 1``."""

    def __init__(self, basis: GradedBasis, values: Mapping[int, Any]):
        self.basis = basis
        self.values = {i: Fraction(v) for i, v in values.items() if v}
        for i in self.values:
            if basis.degrees[i] != 0:
                raise ValueError("an expectation only sees degree-0 elements")

    def __call__(self, elem: Mapping[int, Any]) -> Any:
        acc: Any = Fraction(0)
        for i, c in elem.items():
            v = self.values.get(i)
            if v:
                acc = acc + c * v
        return acc

    def as_map(self) -> MultiMap:
        return MultiMap(1, 0, self.basis, SCALARS, {(i,): {0: v} for i, v in self.values.items()})

    def validate(self, P: ProbAlgebra) -> None:
        if self({0: Fraction(1)}) != 1:
            raise ValidationError("c(1) != 1", {"identity": "c(1)=1"})
        for j in range(len(P.basis)):
            v = self(P.K(j))
            if v:
                raise ValidationError("c K != 0", {"identity": "cK=0", "word": [j], "value": v})

    def shifted(self, P: ProbAlgebra, r: Mapping[int, Any]) -> "Expectation":
        """``c + r K`` for a functional ``r`` on degree-1 elements."""
        out: Dict[int, Fraction] = dict(self.values)
        for j in range(len(P.basis)):
            if P.basis.degrees[j] != 0:
                continue
            extra = sum((Fraction(r.get(i, 0)) * c for i, c in P.K(j).items()), Fraction(0))
            if extra:
                out[j] = out.get(j, Fraction(0)) + extra
        return Expectation(P.basis, out)


class FunctionalFamily:
    """Graded symmetric degree-0 functionals ``f_n`` on ``S^n`` of a space.

    ``kind`` is ``"moment"`` or ``"cumulant"``; it only affects the constant
    term of the generating series.
    """

    def __init__(self, basis: GradedBasis, maps: Sequence[MultiMap], kind: str):
        self.basis = basis
        self.maps = tuple(maps)
        self.kind = kind
        for n, mp in enumerate(self.maps, start=1):
            if mp.arity != n or mp.degree != 0 or mp.target != SCALARS:
                raise ValueError(f"f_{n} must be a degree-0 functional of arity {n}")

    @property
    def nmax(self) -> int:
        return len(self.maps)

    def value(self, *indices: int) -> Fraction:
        if not indices:
            return Fraction(1) if self.kind == "moment" else Fraction(0)
        return self.maps[len(indices) - 1](*indices).get(0, Fraction(0))

    def evaluate(self, args: Sequence[Mapping[int, Any]]) -> Any:
        return self.maps[len(args) - 1].apply(args).get(0, Fraction(0))

    def equals(self, other: "FunctionalFamily", nmax: Optional[int] = None) -> bool:
        nmax = min(self.nmax, other.nmax) if nmax is None else nmax
        for n in range(1, nmax + 1):
            for key in canonical_keys(self.basis, n):
                if self.value(*key) != other.value(*key):
                    return False
        return True

    @classmethod
    def from_function(cls, basis: GradedBasis, nmax: int, kind: str, func) -> "FunctionalFamily":
        maps = []
        for n in range(1, nmax + 1):
            maps.append(MultiMap.lazy(n, 0, basis, SCALARS, lambda key: _scalar(func(key))))
        return cls(basis, maps, kind)


def _scalar(v: Any) -> Element:
    return {0: v} if v else {}


def moments(P: ProbAlgebra, c: Expectation, nmax: Optional[int] = None) -> FunctionalFamily:
    """``mu_n = c(M_n(...))``."""
    c.validate(P)
    nmax = P.nmax if nmax is None else nmax
    return FunctionalFamily.from_function(P.basis, nmax, "moment",
                                          lambda key: c(P.M(len(key))(*key)))


@lru_cache(maxsize=None)
def _last_block_splits(n: int):
    """(rest, chosen) splits of ``range(n-1)`` with the permutation ``rest+chosen+[n-1]``."""
    out = []
    for chosen, rest in subset_splits(n - 1):
        out.append((rest, chosen, rest + chosen + (n - 1,)))
    return tuple(out)


def _partition_convolution(x: Key, parities: Sequence[int], outer, block) -> Any:
    """``sum_S eps * outer(x_rest) * block(x_S + x_last)`` over subsets S of the first n-1."""
    n = len(x)
    par = [parities[i] for i in x]
    acc: Any = Fraction(0)
    for rest, chosen, perm in _last_block_splits(n):
        b = block(tuple(x[i] for i in chosen) + (x[-1],))
        if not b:
            continue
        o = outer(tuple(x[i] for i in rest))
        if not o:
            continue
        term = o * b
        acc = acc + (term if _koszul_sign0(perm, par) == 1 else -term)
    return acc


def cumulants_from_moments(mu: FunctionalFamily) -> FunctionalFamily:
    """The unique ``kappa`` with ``mu_n = sum_pi eps(pi) prod kappa(x_B)``.

    Solves the last-block recursion for the block holding every element.
    """
    basis = mu.basis

    def kappa(key: Key) -> Any:
        return maps[len(key) - 1](*key).get(0, Fraction(0))

    def compute(key: Key) -> Any:
        n = len(key)
        par = [basis.parities[i] for i in key]
        acc: Any = mu.value(*key)
        for rest, chosen, perm in _last_block_splits(n):
            if not rest:
                continue
            b = kappa(tuple(key[i] for i in chosen) + (key[-1],))
            if not b:
                continue
            o = mu.value(*(key[i] for i in rest))
            if not o:
                continue
            term = o * b
            acc = acc - (term if _koszul_sign0(perm, par) == 1 else -term)
        return acc

    maps = [MultiMap.lazy(n, 0, basis, SCALARS, lambda key: _scalar(compute(key)))
            for n in range(1, mu.nmax + 1)]
    return FunctionalFamily(basis, maps, "cumulant")


def moments_from_cumulants(kappa: FunctionalFamily) -> FunctionalFamily:
    """Inverse of :func:`cumulants_from_moments`."""
    basis = kappa.basis

    def mu(key: Key) -> Any:
        if not key:
            return Fraction(1)
        return maps[len(key) - 1](*key).get(0, Fraction(0))

    def compute(key: Key) -> Any:
        return _partition_convolution(key, basis.parities, mu, lambda b: kappa.value(*b))

    maps = [MultiMap.lazy(n, 0, basis, SCALARS, lambda key: _scalar(compute(key)))
            for n in range(1, kappa.nmax + 1)]
    return FunctionalFamily(basis, maps, "moment")


# ---------------------------------------------------------------------------
# generating series


def reversal_sign(key: Key, parities: Sequence[int]) -> int:
    odd = sum(parities[i] for i in key)
    return -1 if (odd * (odd - 1) // 2) & 1 else 1


def generating_series(family: FunctionalFamily, order: int) -> SuperSeries:
    """``sum_n f_n(gamma, .., gamma) / n!`` with ``gamma = sum t^a e_a``.

    Each word contributes ``t^{a_n} .. t^{a_1} f_n(e_{a_1}, .., e_{a_n})``;
    moment families also get the constant term 1.
    """
    if order > family.nmax:
        raise ValueError(f"order {order} needs the family up to arity {order}, have {family.nmax}")
    basis = family.basis
    parities = basis.parities
    series = SuperSeries(parities, order)
    terms: Dict[Key, Any] = {}
    if family.kind == "moment":
        terms[()] = Fraction(1)
    for n in range(1, order + 1):
        mp = family.maps[n - 1]
        for key in canonical_keys(basis, n):
            c = mp(*key).get(0)
            if not c:
                continue
            coeff = c * multiplicity_factor(key) * reversal_sign(key, parities)
            terms[key] = terms.get(key, 0) + coeff
    series.terms = {k: v for k, v in terms.items() if v}
    return series


# ---------------------------------------------------------------------------
# independence and central limit scaling


def independence_check(x: Mapping[int, Any], y: Mapping[int, Any], kappa: FunctionalFamily,
                       nmax: Optional[int] = None) -> bool:
    """Additivity ``kappa_n(x+y, ..) = kappa_n(x, ..) + kappa_n(y, ..)`` for all ``n``."""
    basis = kappa.basis
    for elem in (x, y):
        if any(basis.degrees[i] != 0 for i in elem):
            raise ValueError("independence is tested on degree-0 elements")
    nmax = kappa.nmax if nmax is None else nmax
    both: Dict[int, Any] = dict(x)
    for i, c in y.items():
        both[i] = both.get(i, 0) + c
    for n in range(1, nmax + 1):
        lhs = kappa.evaluate([both] * n)
        rhs = kappa.evaluate([x] * n) + kappa.evaluate([y] * n)
        if lhs != rhs:
            return False
    return True


def perfect_square_root(N: int) -> int:
    if N < 1:
        raise ValueError("N must be a positive integer")
    q = math.isqrt(N)
    if q * q != N:
        raise ValueError(f"N = {N} is not a perfect square")
    return q


def clt_scaling(kappas: Sequence[Any], N: int, n: int) -> Fraction:
    """``kappa_n`` of ``(x_1 + .. + x_N) / sqrt(N)`` for iid copies of ``x``.

    ``kappas[k-1]`` is ``kappa_k(x, .., x)``.  Additivity over the independent
    copies and homogeneity of degree ``n`` give ``N * kappa_n(x) / sqrt(N)^n``.
    """
    q = perfect_square_root(N)
    single = Fraction(kappas[n - 1]) / Fraction(q) ** n
    return sum((single for _ in range(N)), Fraction(0))


def one_variable_basis(label: str = "x") -> GradedBasis:
    return GradedBasis((label,), (0,), None)


def family_from_sequence(values: Sequence[Any], kind: str, label: str = "x") -> FunctionalFamily:
    """A one-variable family with ``f_n(x, .., x) = values[n-1]``."""
    basis = one_variable_basis(label)
    maps = [MultiMap(n, 0, basis, SCALARS, {(0,) * n: _scalar(Fraction(v))})
            for n, v in enumerate(values, start=1)]
    return FunctionalFamily(basis, maps, kind)


def sequence_of(family: FunctionalFamily) -> List[Fraction]:
    return [family.value(*(0,) * n) for n in range(1, family.nmax + 1)]


def cumulant_sequence(moment_values: Sequence[Any]) -> List[Fraction]:
    return sequence_of(cumulants_from_moments(family_from_sequence(moment_values, "moment")))


def moment_sequence(cumulant_values: Sequence[Any]) -> List[Fraction]:
    return sequence_of(moments_from_cumulants(family_from_sequence(cumulant_values, "cumulant")))


def iid_sum_moments(moment_values: Sequence[Any], N: int) -> List[Fraction]:
    """Moments of ``x_1 + .. + x_N`` for iid copies, by binomial convolution."""
    n = len(moment_values)
    single = [Fraction(1)] + [Fraction(v) for v in moment_values]
    total = [Fraction(1)] + [Fraction(0)] * n
    for _ in range(N):
        total = [sum((math.comb(k, j) * total[j] * single[k - j] for j in range(k + 1)), Fraction(0))
                 for k in range(n + 1)]
    return total[1:]


def scaled_sum_cumulants(moment_values: Sequence[Any], N: int) -> List[Fraction]:
    """Cumulants of ``(x_1 + .. + x_N) / sqrt(N)`` via explicit iid moments."""
    q = perfect_square_root(N)
    sums = iid_sum_moments(moment_values, N)
    scaled_moments = [v / Fraction(q) ** k for k, v in enumerate(sums, start=1)]
    return cumulant_sequence(scaled_moments)
