"""Correlation algebras: the symmetric family ``M_n``, the derived product
family ``m_n``, the recursions linking them, and their validation."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import Callable, Dict, Iterator, Mapping, Optional, Sequence, Union

from .kernel import (
    Element,
    GradedBasis,
    Key,
    MultiMap,
    Report,
    ValidationError,
    _koszul_sign0,
    add_into,
    canonical_keys,
    subset_splits,
)

EXHAUSTIVE_ARITY = 4
SAMPLES = 300


class CorrelationAlgebra:
    """A pointed graded space with degree-0 products ``M_1 .. M_nmax``.

    ``M_1`` is the identity and ``M_{n+1}(x, 1) = M_n(x)``.
    """

    def __init__(self, basis: GradedBasis, maps: Sequence[MultiMap]):
        if not basis.has_unit:
            raise ValueError("a correlation algebra needs a unit")
        self.basis = basis
        self.maps = tuple(maps)
        for n, mp in enumerate(self.maps, start=1):
            if mp.arity != n or mp.degree != 0:
                raise ValueError(f"M_{n} must have arity {n} and degree 0")

    @property
    def nmax(self) -> int:
        return len(self.maps)

    def M(self, n: int) -> MultiMap:
        return self.maps[n - 1]

    def truncated(self, nmax: int) -> "CorrelationAlgebra":
        return CorrelationAlgebra(self.basis, self.maps[:nmax])

    def is_symmetric_storage(self) -> bool:
        return all(len(mp.segments) == 1 for mp in self.maps)

    @classmethod
    def from_reduced(cls, basis: GradedBasis, reduced: Mapping[int, Mapping[Key, Element]],
                     nmax: int) -> "CorrelationAlgebra":
        """Build ``M`` from its values on unit-free words, extending by the unit tower.

        ``reduced[n]`` maps unit-free multi-indices of length ``n >= 2`` to values;
        keys may be in any order (the Koszul sign is applied when sorting).
        """
        tables = {n: MultiMap(n, 0, basis, basis, entries) for n, entries in reduced.items()}

        def make(n: int) -> MultiMap:
            def func(key: Key) -> Element:
                rest = tuple(i for i in key if i != 0)
                if not rest:
                    return {0: Fraction(1)}
                if len(rest) == 1:
                    return {rest[0]: Fraction(1)}
                table = tables.get(len(rest))
                return dict(table.value(rest)) if table is not None else {}

            return MultiMap.lazy(n, 0, basis, basis, func)

        maps = [MultiMap.identity(basis)] + [make(n) for n in range(2, nmax + 1)]
        return cls(basis, maps)

    @classmethod
    def from_product(cls, basis: GradedBasis, m2: MultiMap, nmax: int) -> "CorrelationAlgebra":
        """Iterated products of a unital graded commutative associative ``m_2``."""
        return M_from_m(basis, ProductFamily(basis, {2: m2}), nmax)

    @classmethod
    def unit_algebra(cls, nmax: int) -> "CorrelationAlgebra":
        basis = GradedBasis(("1",), (0,), 0)
        return cls.from_reduced(basis, {}, nmax)


class ProductFamily:
    """The derived family ``m_2, m_3, ...`` (missing arities are zero).

    ``m_n`` for ``n >= 3`` is stored graded symmetric in its first ``n - 2``
    and in its last two slots; tensor storage is also accepted.
    """

    def __init__(self, basis: GradedBasis, maps: Mapping[int, MultiMap], nmax: Optional[int] = None):
        self.basis = basis
        self.maps = dict(maps)
        for n, mp in self.maps.items():
            if n < 2 or mp.arity != n or mp.degree != 0:
                raise ValueError(f"m_{n} must have arity {n} >= 2 and degree 0")
        self.nmax = nmax if nmax is not None else max(self.maps, default=2)

    def m(self, n: int) -> MultiMap:
        mp = self.maps.get(n)
        if mp is None:
            mp = MultiMap.zero(n, 0, self.basis, self.basis, segments=split_segments(n))
            self.maps[n] = mp
        return mp


def split_segments(n: int) -> tuple:
    return (2,) if n == 2 else (n - 2, 2)


def _head_split_sign(head: Sequence[int], chosen: Sequence[int], rest: Sequence[int],
                     parities: Sequence[int]) -> int:
    return _koszul_sign0(tuple(chosen) + tuple(rest), [parities[i] for i in head])


def _m_from_M_value(M_of: Callable[[int], MultiMap], m_call: Callable[[int, Key], Element],
                    parities: Sequence[int], x: Key) -> Element:
    n = len(x)
    acc = dict(M_of(n)(*x))
    if n == 2:
        return acc
    head, tail = x[:n - 2], x[n - 2:]
    for chosen, rest in subset_splits(n - 2):
        if not chosen:
            continue
        inner = m_call(len(rest) + 2, tuple(head[r] for r in rest) + tail)
        if not inner:
            continue
        sign = _head_split_sign(head, chosen, rest, parities)
        args = [{head[c]: Fraction(1)} for c in chosen] + [inner]
        add_into(acc, M_of(len(chosen) + 1).apply(args), -sign)
    return acc


def _M_from_m_value(M_of: Callable[[int], MultiMap], m_call: Callable[[int, Key], Element],
                    parities: Sequence[int], x: Key) -> Element:
    n = len(x)
    if n == 1:
        return {x[0]: Fraction(1)}
    if n == 2:
        return dict(m_call(2, x))
    head, tail = x[:n - 2], x[n - 2:]
    acc: Element = {}
    for chosen, rest in subset_splits(n - 2):
        inner = m_call(len(rest) + 2, tuple(head[r] for r in rest) + tail)
        if not inner:
            continue
        if not chosen:
            add_into(acc, inner)
            continue
        sign = _head_split_sign(head, chosen, rest, parities)
        args = [{head[c]: Fraction(1)} for c in chosen] + [inner]
        add_into(acc, M_of(len(chosen) + 1).apply(args), sign)
    return acc


def m_from_M(A: CorrelationAlgebra, nmax: Optional[int] = None) -> ProductFamily:
    """The product family determined by ``M`` through the subset recursion."""
    nmax = A.nmax if nmax is None else nmax
    if nmax > A.nmax:
        raise ValueError(f"M is only known up to arity {A.nmax}")
    basis = A.basis
    family = ProductFamily(basis, {}, nmax)

    def m_call(k: int, key: Key) -> Element:
        return family.m(k)(*key)

    for n in range(2, nmax + 1):
        def func(key: Key) -> Element:
            return _m_from_M_value(A.M, m_call, basis.parities, key)

        family.maps[n] = MultiMap.lazy(n, 0, basis, basis, func, segments=split_segments(n))
    return family


def raw_m_from_M(A: CorrelationAlgebra, nmax: Optional[int] = None) -> ProductFamily:
    """Like :func:`m_from_M` but stored as plain tensors, so no symmetry is assumed."""
    nmax = A.nmax if nmax is None else nmax
    basis = A.basis
    family = ProductFamily(basis, {}, nmax)

    def m_call(k: int, key: Key) -> Element:
        return family.m(k)(*key)

    for n in range(2, nmax + 1):
        def func(key: Key) -> Element:
            return _m_from_M_value(A.M, m_call, basis.parities, key)

        family.maps[n] = MultiMap.lazy(n, 0, basis, basis, func, segments=(1,) * n)
    return family


def M_from_m(basis: GradedBasis, family: ProductFamily, nmax: int,
             check: bool = True, seed: int = 0) -> CorrelationAlgebra:
    """Rebuild ``M`` from a product family.

    With ``check`` the family is validated first and the rebuilt ``M`` is
    confirmed graded symmetric; failures raise :class:`ValidationError`.
    """
    if check:
        report = check_product_family(family, nmax, seed=seed)
        if not report.ok:
            first = report.failures[0]
            raise ValidationError(f"product family violates {first['identity']}", first)
    holder: Dict[int, MultiMap] = {1: MultiMap.identity(basis)}

    def M_of(k: int) -> MultiMap:
        return holder[k]

    def m_call(k: int, key: Key) -> Element:
        return family.m(k)(*key)

    for n in range(2, nmax + 1):
        def func(key: Key) -> Element:
            return _M_from_m_value(M_of, m_call, basis.parities, key)

        holder[n] = MultiMap.lazy(n, 0, basis, basis, func)
    algebra = CorrelationAlgebra(basis, [holder[n] for n in range(1, nmax + 1)])
    if check:
        rng = random.Random(seed)
        for n in range(3, nmax + 1):
            for x in _tuples(basis, n, rng):
                raw = _M_from_m_value(M_of, m_call, basis.parities, x)
                if raw != algebra.M(n)(*x):
                    raise ValidationError(
                        "product family passes the unit and symmetry constraints but the "
                        "rebuilt M is not graded symmetric",
                        {"identity": "M symmetry", "arity": n, "word": list(x)})
    return algebra


# ---------------------------------------------------------------------------
# validation


def _tuples(basis: GradedBasis, n: int, rng: random.Random,
            exhaustive_arity: int = EXHAUSTIVE_ARITY, samples: int = SAMPLES) -> Iterator[Key]:
    if n <= exhaustive_arity or len(basis) ** n <= samples:
        yield from itertools.product(range(len(basis)), repeat=n)
        return
    for _ in range(samples):
        yield tuple(rng.randrange(len(basis)) for _ in range(n))


def _swap(x: Key, j: int) -> Key:
    y = list(x)
    y[j], y[j + 1] = y[j + 1], y[j]
    return tuple(y)


def _swap_sign(x: Key, j: int, parities: Sequence[int]) -> int:
    return -1 if parities[x[j]] and parities[x[j + 1]] else 1


def _negated(elem: Element) -> Element:
    return {i: -c for i, c in elem.items()}


def check_symmetry(mp: MultiMap, positions: Sequence[int], rng: random.Random,
                   report: Report, name: str) -> None:
    """Check graded symmetry under the adjacent swaps ``(j, j+1)`` for ``j`` in positions."""
    parities = mp.source.parities
    for x in _tuples(mp.source, mp.arity, rng):
        base = mp(*x)
        for j in positions:
            y = _swap(x, j)
            other = mp(*y)
            expect = base if _swap_sign(x, j, parities) == 1 else _negated(base)
            report.count(name)
            if other != expect:
                report.fail(name, arity=mp.arity, word=list(x), swapped=list(y),
                            value=base, swapped_value=other)
                return


def check_product_family(family: ProductFamily, nmax: Optional[int] = None,
                         seed: int = 0) -> Report:
    """Unit and partial-symmetry constraints on a product family."""
    basis = family.basis
    nmax = family.nmax if nmax is None else nmax
    rng = random.Random(seed)
    report = Report()
    m2 = family.m(2)
    for i in range(len(basis)):
        report.count("m2 right unit")
        if m2(i, 0) != {i: Fraction(1)}:
            report.fail("m2 right unit", word=[i, 0], value=m2(i, 0))
    for n in range(3, nmax + 1):
        mp = family.m(n)
        for x in _tuples(basis, n, rng):
            if 0 in x:
                report.count("m vanishes on the unit")
                val = mp(*x)
                if val:
                    report.fail("m vanishes on the unit", arity=n, word=list(x), value=val)
                    break
        check_symmetry(mp, [n - 2], rng, report, "m symmetric in the last two slots")
        check_symmetry(mp, list(range(n - 3)), rng, report, "m symmetric in the leading slots")
    check_symmetry(m2, [0], rng, report, "m symmetric in the last two slots")
    return report


def check_correlation_algebra(A: CorrelationAlgebra, seed: int = 0) -> Report:
    """Validate identity, graded symmetry and unit tower of ``M`` and the
    unit/symmetry constraints of the derived product family."""
    basis = A.basis
    rng = random.Random(seed)
    report = Report()
    M1 = A.M(1)
    for i in range(len(basis)):
        report.count("M1 identity")
        if M1(i) != {i: Fraction(1)}:
            report.fail("M1 identity", word=[i], value=M1(i))
    for n in range(2, A.nmax + 1):
        check_symmetry(A.M(n), list(range(n - 1)), rng, report, "M graded symmetry")
    for n in range(1, A.nmax):
        lower, upper = A.M(n), A.M(n + 1)
        for x in _tuples(basis, n, rng):
            report.count("M unit tower")
            if upper(*x, 0) != lower(*x):
                report.fail("M unit tower", arity=n + 1, word=list(x) + [0],
                            value=upper(*x, 0), expected=lower(*x))
                break
    if not report.ok:
        return report
    report.merge(check_product_family(raw_m_from_M(A), A.nmax, seed=seed))
    return report


def check_property_Q(obj: Union[CorrelationAlgebra, ProductFamily], seed: int = 0):
    """True when every ``m_n`` is fully graded symmetric; otherwise a witness."""
    family = raw_m_from_M(obj) if isinstance(obj, CorrelationAlgebra) else obj
    rng = random.Random(seed)
    report = Report()
    for n in range(2, family.nmax + 1):
        check_symmetry(family.m(n), list(range(n - 1)), rng, report, "m full symmetry")
        if not report.ok:
            return False, report.failures[0]
    return True, None


def canonical_product_keys(basis: GradedBasis, n: int) -> Iterator[Key]:
    return canonical_keys(basis, n, split_segments(n))
