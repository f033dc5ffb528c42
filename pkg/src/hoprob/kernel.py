"""Exact substrate: rationals, graded bases, Koszul signs, set partitions,
graded-symmetric multilinear maps, truncated supercommutative series and a
sparse exact elimination kernel.

Conventions
-----------
All indices are 0-based.  A permutation ``p`` of ``range(n)`` lists, for each
output slot ``k``, the input position ``p[k]`` that lands there, so the
rearranged word is ``x[p[0]], x[p[1]], ...``.

Elements of a graded vector space are sparse ``dict`` objects mapping a basis
index to a nonzero coefficient.  Coefficients are normally
:class:`fractions.Fraction`, but every routine only uses ``+``, ``*`` and
truthiness, so polynomial coefficients (:class:`UPoly`) work as well.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Dict, Iterable, Iterator, Mapping, Optional, Sequence, Tuple

Rational = Fraction
Element = Dict[int, Any]
Key = Tuple[int, ...]

PARTITION_CAP = 12
SERIES_ORDER_CAP = 16


class CapExceeded(ValueError):
    """A configured resource cap was exceeded."""


class ValidationError(ValueError):
    """Input data violates a structural identity.

    ``witness`` carries a machine-readable description of the failure.
    """

    def __init__(self, message: str, witness: Optional[dict] = None):
        super().__init__(message)
        self.witness = witness or {}


# ---------------------------------------------------------------------------
# rationals


def to_fraction(value: Any) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot read an exact rational from {value!r}")


def format_fraction(value: Fraction) -> str:
    """Serialize as ``"p/q"`` (integers as ``"p"``)."""
    return str(Fraction(value))


# ---------------------------------------------------------------------------
# graded bases and elements


@dataclass(frozen=True)
class GradedBasis:
    """A finite graded basis, optionally pointed by a degree-0 unit at index 0."""

    labels: Tuple[str, ...]
    degrees: Tuple[int, ...]
    unit_index: Optional[int] = 0
    parities: Tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        labels = tuple(self.labels)
        degrees = tuple(int(d) for d in self.degrees)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "degrees", degrees)
        if len(labels) != len(degrees):
            raise ValueError("labels and degrees differ in length")
        if len(set(labels)) != len(labels):
            raise ValueError("basis labels must be unique")
        if self.unit_index is not None:
            if self.unit_index != 0:
                raise ValueError("the unit must sit at index 0")
            if not labels or degrees[0] != 0:
                raise ValueError("the unit must have degree 0")
        object.__setattr__(self, "parities", tuple(d & 1 for d in degrees))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def has_unit(self) -> bool:
        return self.unit_index is not None

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def of_degree(self, degree: int) -> list:
        return [i for i, d in enumerate(self.degrees) if d == degree]

    def degree_of(self, key: Iterable[int]) -> int:
        return sum(self.degrees[i] for i in key)


SCALARS = GradedBasis(("1",), (0,), 0)


def basis_vector(index: int, coeff: Any = 1) -> Element:
    return {index: Fraction(coeff) if isinstance(coeff, int) else coeff}


def add_into(acc: Element, other: Mapping[int, Any], scale: Any = 1) -> Element:
    """``acc += scale * other`` in place, dropping zero coefficients."""
    if not scale:
        return acc
    for i, c in other.items():
        v = acc.get(i, 0) + (c * scale if scale != 1 else c)
        if v:
            acc[i] = v
        else:
            acc.pop(i, None)
    return acc


def scaled(elem: Mapping[int, Any], scale: Any) -> Element:
    if not scale:
        return {}
    out = {}
    for i, c in elem.items():
        v = c * scale
        if v:
            out[i] = v
    return out


def element_sum(*elems: Mapping[int, Any]) -> Element:
    acc: Element = {}
    for e in elems:
        add_into(acc, e)
    return acc


def element_degree(elem: Mapping[int, Any], basis: GradedBasis) -> Optional[int]:
    """Common degree of a homogeneous element (None for zero)."""
    degrees = {basis.degrees[i] for i in elem}
    if len(degrees) > 1:
        raise ValueError("element is not homogeneous")
    return degrees.pop() if degrees else None


# ---------------------------------------------------------------------------
# signs


def _koszul_sign0(perm: Sequence[int], parities: Sequence[int]) -> int:
    odd = 0
    n = len(perm)
    for a in range(n):
        pa = perm[a]
        if not parities[pa]:
            continue
        for b in range(a + 1, n):
            pb = perm[b]
            if pb < pa and parities[pb]:
                odd ^= 1
    return -1 if odd else 1


def koszul_sign(permutation: Sequence[int], degrees: Sequence[int]) -> int:
    """Sign of rearranging graded elements ``x_0..x_{n-1}`` into ``x_{p[0]}..``.

    Every inverted pair of odd elements contributes a factor of -1.
    """
    n = len(permutation)
    if len(degrees) != n:
        raise ValueError("permutation and degrees differ in length")
    if sorted(permutation) != list(range(n)):
        raise ValueError(f"{list(permutation)} is not a permutation of range({n})")
    return _koszul_sign0(permutation, [d & 1 for d in degrees])


# ---------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class Partition:
    """A set partition of ``range(n)``.

    Blocks are sorted internally and ordered by their largest element.
    """

    blocks: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        blocks = tuple(tuple(sorted(b)) for b in self.blocks)
        if any(not b for b in blocks):
            raise ValueError("partition blocks must be nonempty")
        object.__setattr__(self, "blocks", tuple(sorted(blocks, key=lambda b: b[-1])))
        flat = sorted(i for b in self.blocks for i in b)
        if flat != list(range(len(flat))):
            raise ValueError(f"{self.blocks} does not partition range({len(flat)})")

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self) -> Iterator[Tuple[int, ...]]:
        return iter(self.blocks)

    @property
    def size(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def permutation(self) -> Tuple[int, ...]:
        return tuple(i for b in self.blocks for i in b)


def _restricted_growth_strings(n: int) -> Iterator[Tuple[int, ...]]:
    word = [0] * n

    def rec(pos: int, top: int) -> Iterator[Tuple[int, ...]]:
        if pos == n:
            yield tuple(word)
            return
        for v in range(top + 2):
            word[pos] = v
            yield from rec(pos + 1, max(top, v))

    if n == 0:
        yield ()
        return
    word[0] = 0
    yield from rec(1, 0)


@lru_cache(maxsize=None)
def _partitions(n: int) -> Tuple[Partition, ...]:
    out = []
    for rgs in _restricted_growth_strings(n):
        groups: Dict[int, list] = {}
        for i, g in enumerate(rgs):
            groups.setdefault(g, []).append(i)
        out.append(Partition(tuple(tuple(b) for b in groups.values())))
    return tuple(out)


def enumerate_partitions(n: int, cap: int = PARTITION_CAP) -> Tuple[Partition, ...]:
    """All set partitions of ``range(n)`` in restricted-growth-string lex order."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > cap:
        raise CapExceeded(f"partitions of {n} elements exceed the cap {cap}")
    return _partitions(n)


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def _check_partition(pi: Partition, n: int) -> None:
    if pi.size != n:
        raise ValueError(f"partition of {pi.size} elements used with {n} degrees")


def partition_sign(pi: Partition, degrees: Sequence[int]) -> int:
    """Koszul sign of rearranging ``x_0..x_{n-1}`` into ``x_{B_1} .. x_{B_k}``."""
    _check_partition(pi, len(degrees))
    return _koszul_sign0(pi.permutation, [d & 1 for d in degrees])


def eps_pi_i(pi: Partition, i: int, degrees: Sequence[int]) -> int:
    """Partition sign times the parity of all degrees in blocks before block ``i``."""
    _check_partition(pi, len(degrees))
    if not 0 <= i < len(pi):
        raise IndexError(f"block index {i} out of range for {len(pi)} blocks")
    sign = _koszul_sign0(pi.permutation, [d & 1 for d in degrees])
    prefix = sum(degrees[j] for b in pi.blocks[:i] for j in b)
    return -sign if prefix & 1 else sign


@lru_cache(maxsize=None)
def insertion_terms(n: int) -> Tuple[Tuple[Partition, int], ...]:
    """Pairs ``(pi, i)`` with ``|B_i| = n - |pi| + 1``: one block, the rest singletons."""
    out = []
    for pi in _partitions(n):
        k = len(pi)
        for i, b in enumerate(pi.blocks):
            if len(b) == n - k + 1:
                out.append((pi, i))
    return tuple(out)


@lru_cache(maxsize=None)
def _subset_splits(n: int) -> Tuple[Tuple[Tuple[int, ...], Tuple[int, ...]], ...]:
    out = []
    for mask in range(1 << n):
        chosen = tuple(i for i in range(n) if mask >> i & 1)
        rest = tuple(i for i in range(n) if not mask >> i & 1)
        out.append((chosen, rest))
    return tuple(out)


def subset_splits(n: int) -> Tuple[Tuple[Tuple[int, ...], Tuple[int, ...]], ...]:
    """Every split of ``range(n)`` into (chosen, rest), both kept in order."""
    return _subset_splits(n)


# ---------------------------------------------------------------------------
# canonical multi-indices


def canonicalize(key: Sequence[int], parities: Sequence[int],
                 segments: Sequence[int]) -> Tuple[int, Optional[Key]]:
    """Sort ``key`` within each symmetric segment.

    Returns ``(sign, canonical_key)``; ``(0, None)`` when a segment repeats an
    odd index (such words vanish in the graded symmetric power).
    """
    sign = 1
    out = []
    pos = 0
    for length in segments:
        seg = list(key[pos:pos + length])
        pos += length
        if length > 1:
            odd = 0
            for a in range(length):
                pa = parities[seg[a]]
                if not pa:
                    continue
                for b in range(a + 1, length):
                    if seg[b] < seg[a] and parities[seg[b]]:
                        odd ^= 1
            seg.sort()
            for a in range(length - 1):
                if seg[a] == seg[a + 1] and parities[seg[a]]:
                    return 0, None
            if odd:
                sign = -sign
        out.extend(seg)
    return sign, tuple(out)


def canonical_keys(basis: GradedBasis, arity: int,
                   segments: Optional[Sequence[int]] = None) -> Iterator[Key]:
    """Canonical multi-indices (sorted per segment, no repeated odd index)."""
    segments = tuple(segments) if segments is not None else (arity,)
    n = len(basis)
    parts = []
    for length in segments:
        seg_keys = []
        for combo in itertools.combinations_with_replacement(range(n), length):
            if any(combo[a] == combo[a + 1] and basis.parities[combo[a]]
                   for a in range(length - 1)):
                continue
            seg_keys.append(combo)
        parts.append(seg_keys)
    for pieces in itertools.product(*parts):
        yield tuple(i for p in pieces for i in p)


def ordered_keys(basis: GradedBasis, arity: int) -> Iterator[Key]:
    return itertools.product(range(len(basis)), repeat=arity)


def multiplicity_factor(key: Key) -> Fraction:
    """``1 / prod(multiplicity!)`` for a sorted key."""
    denom = 1
    for _, group in itertools.groupby(key):
        denom *= math.factorial(len(list(group)))
    return Fraction(1, denom)


# ---------------------------------------------------------------------------
# multilinear maps


class MultiMap:
    """A multilinear map of fixed arity and degree between graded bases.

    The map is graded symmetric within each segment of ``segments``: the
    default single segment gives a map on the graded symmetric power, while
    ``(1,) * arity`` gives a plain tensor map.  Values are stored on canonical
    keys with the Koszul sign of sorting folded in.  A ``func`` computes
    missing canonical values on demand (memoized), which keeps large
    realizations lazy.
    """

    __slots__ = ("arity", "degree", "source", "target", "segments", "_entries", "_func")

    def __init__(self, arity: int, degree: int, source: GradedBasis, target: GradedBasis,
                 entries: Optional[Mapping[Key, Mapping[int, Any]]] = None,
                 segments: Optional[Sequence[int]] = None,
                 func: Optional[Callable[[Key], Element]] = None):
        if arity < 1:
            raise ValueError("arity must be at least 1")
        self.arity = arity
        self.degree = degree
        self.source = source
        self.target = target
        self.segments = tuple(segments) if segments is not None else (arity,)
        if sum(self.segments) != arity:
            raise ValueError("segments must add up to the arity")
        self._entries: Dict[Key, Element] = {}
        self._func = func
        if entries:
            for key, value in entries.items():
                self._store_raw(tuple(key), dict(value))

    # -- construction helpers
    def _store_raw(self, key: Key, value: Element) -> None:
        if len(key) != self.arity:
            raise ValueError(f"key {key} has the wrong arity")
        sign, canon = canonicalize(key, self.source.parities, self.segments)
        value = {i: c for i, c in value.items() if c}
        if canon is None:
            if value:
                raise ValueError(f"nonzero value on vanishing key {key}")
            return
        if value:
            want = self.source.degree_of(key) + self.degree
            for i in value:
                if self.target.degrees[i] != want:
                    raise ValueError(
                        f"value at {key} has degree {self.target.degrees[i]}, expected {want}")
        self._entries[canon] = scaled(value, sign) if sign == -1 else value

    @classmethod
    def zero(cls, arity: int, degree: int, source: GradedBasis, target: GradedBasis,
             segments: Optional[Sequence[int]] = None) -> "MultiMap":
        return cls(arity, degree, source, target, segments=segments, func=lambda key: {})

    @classmethod
    def identity(cls, basis: GradedBasis) -> "MultiMap":
        return cls(1, 0, basis, basis, func=lambda key: {key[0]: Fraction(1)})

    @classmethod
    def lazy(cls, arity: int, degree: int, source: GradedBasis, target: GradedBasis,
             func: Callable[[Key], Element], segments: Optional[Sequence[int]] = None) -> "MultiMap":
        return cls(arity, degree, source, target, segments=segments, func=func)

    # -- evaluation
    def value(self, key: Key) -> Element:
        """Value on a canonical key (computed lazily if needed)."""
        try:
            return self._entries[key]
        except KeyError:
            pass
        if self._func is None:
            return {}
        val = {i: c for i, c in self._func(key).items() if c}
        self._entries[key] = val
        return val

    def __call__(self, *indices: int) -> Element:
        sign, canon = canonicalize(indices, self.source.parities, self.segments)
        if canon is None:
            return {}
        val = self.value(canon)
        if sign == 1 or not val:
            return val
        return scaled(val, -1)

    def apply(self, args: Sequence[Mapping[int, Any]]) -> Element:
        """Multilinear evaluation on elements (coefficients are even scalars)."""
        if len(args) != self.arity:
            raise ValueError("wrong number of arguments")
        acc: Element = {}
        for arg in args:
            if not arg:
                return acc
        if self.arity == 1:
            for i, c in args[0].items():
                add_into(acc, self(i), c)
            return acc
        for combo in itertools.product(*(list(a.items()) for a in args)):
            coeff = combo[0][1]
            for _, c in combo[1:]:
                coeff = coeff * c
            if not coeff:
                continue
            val = self(*(i for i, _ in combo))
            if val:
                add_into(acc, val, coeff)
        return acc

    # -- inspection
    def keys(self) -> Iterator[Key]:
        return canonical_keys(self.source, self.arity, self.segments)

    def materialize(self) -> "MultiMap":
        """Evaluate every canonical key and drop the lazy backing."""
        for key in self.keys():
            if self.source.degree_of(key) + self.degree in self.target.degrees:
                self.value(key)
        self._func = None
        return self

    def items(self) -> Iterator[Tuple[Key, Element]]:
        """Nonzero (canonical key, value) pairs, evaluating lazily as needed."""
        targets = set(self.target.degrees)
        for key in self.keys():
            if self.source.degree_of(key) + self.degree not in targets:
                continue
            val = self.value(key)
            if val:
                yield key, val

    def map_coefficients(self, fn: Callable[[Any], Any]) -> "MultiMap":
        entries = {}
        for key, val in self.items():
            entries[key] = {i: fn(c) for i, c in val.items()}
        return MultiMap(self.arity, self.degree, self.source, self.target, entries,
                        segments=self.segments)

    def is_zero(self) -> bool:
        return not any(True for _ in self.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultiMap):
            return NotImplemented
        if (self.arity, self.degree, self.source, self.target) != (
                other.arity, other.degree, other.source, other.target):
            return False
        seg = self.segments if len(self.segments) >= len(other.segments) else other.segments
        for key in canonical_keys(self.source, self.arity, seg):
            if self(*key) != other(*key):
                return False
        return True

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (f"MultiMap(arity={self.arity}, degree={self.degree}, "
                f"dim={len(self.source)}->{len(self.target)}, segments={self.segments})")


def compose_linear(outer: MultiMap, inner: MultiMap) -> MultiMap:
    """``outer ∘ inner`` for an arity-1 ``outer``."""
    if outer.arity != 1:
        raise ValueError("outer map must be linear")

    def func(key: Key) -> Element:
        return outer.apply([inner.value(key)])

    return MultiMap.lazy(inner.arity, inner.degree + outer.degree, inner.source, outer.target,
                         func, segments=inner.segments)


def linear_from_matrix(source: GradedBasis, target: GradedBasis, degree: int,
                       columns: Mapping[int, Mapping[int, Any]]) -> MultiMap:
    return MultiMap(1, degree, source, target, {(j,): col for j, col in columns.items()})


# ---------------------------------------------------------------------------
# reports


@dataclass
class Report:
    """Pass/fail summary with witnesses for each failing identity."""

    failures: list = field(default_factory=list)
    checked: Dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.ok

    def count(self, name: str, k: int = 1) -> None:
        self.checked[name] = self.checked.get(name, 0) + k

    def fail(self, name: str, **witness: Any) -> None:
        self.failures.append({"identity": name, **witness})

    def merge(self, other: "Report") -> "Report":
        self.failures.extend(other.failures)
        for k, v in other.checked.items():
            self.count(k, v)
        return self

    def to_json(self) -> dict:
        return {"ok": self.ok, "checked": dict(self.checked),
                "failures": [_jsonable(f) for f in self.failures]}


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return format_fraction(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (UPoly, SuperSeries)):
        return str(obj)
    return obj


def element_to_json(elem: Mapping[int, Any], basis: GradedBasis) -> dict:
    return {basis.labels[i]: _jsonable(c) for i, c in sorted(elem.items())}


# ---------------------------------------------------------------------------
# univariate polynomials


class UPoly:
    """Univariate polynomial with Fraction coefficients, lowest degree first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Any] = ()):
        cs = [to_fraction(c) if not isinstance(c, Fraction) else c for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def const(cls, c: Any) -> "UPoly":
        return cls((c,))

    @classmethod
    def var(cls) -> "UPoly":
        return cls((0, 1))

    @staticmethod
    def _lift(other: Any) -> Optional["UPoly"]:
        if isinstance(other, UPoly):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return UPoly((other,))
        return None

    @property
    def deg(self) -> int:
        return len(self.coeffs) - 1

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other: object) -> bool:
        o = self._lift(other)
        return o is not None and self.coeffs == o.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __add__(self, other: Any) -> "UPoly":
        o = self._lift(other)
        if o is None:
            return NotImplemented
        a, b = self.coeffs, o.coeffs
        n = max(len(a), len(b))
        return UPoly((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n))

    __radd__ = __add__

    def __neg__(self) -> "UPoly":
        return UPoly(-c for c in self.coeffs)

    def __sub__(self, other: Any) -> "UPoly":
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other: Any) -> "UPoly":
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other: Any) -> "UPoly":
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if not self.coeffs or not o.coeffs:
            return UPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(o.coeffs):
                    out[i + j] += a * b
        return UPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "UPoly":
        out = UPoly((1,))
        for _ in range(k):
            out = out * self
        return out

    def __call__(self, x: Any) -> Any:
        acc: Any = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def integral(self) -> "UPoly":
        """Antiderivative vanishing at 0."""
        return UPoly([0] + [c / (k + 1) for k, c in enumerate(self.coeffs)])

    def derivative(self) -> "UPoly":
        return UPoly(k * c for k, c in enumerate(self.coeffs) if k)

    def leading(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def divmod(self, other: "UPoly") -> Tuple["UPoly", "UPoly"]:
        if not other:
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        quot = [Fraction(0)] * max(len(rem) - len(other.coeffs) + 1, 0)
        lead = other.coeffs[-1]
        while len(rem) >= len(other.coeffs) and rem:
            shift = len(rem) - len(other.coeffs)
            q = rem[-1] / lead
            quot[shift] = q
            for k, c in enumerate(other.coeffs):
                rem[shift + k] -= q * c
            while rem and not rem[-1]:
                rem.pop()
        return UPoly(quot), UPoly(rem)

    def monic(self) -> "UPoly":
        return self * (1 / self.leading()) if self else self

    @staticmethod
    def gcd(a: "UPoly", b: "UPoly") -> "UPoly":
        while b:
            a, b = b, a.divmod(b)[1]
        return a.monic() if a else a

    def __repr__(self) -> str:
        return f"UPoly({[format_fraction(c) for c in self.coeffs]})"

    def __str__(self) -> str:
        return self.format("x")

    def format(self, var: str) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for k, c in enumerate(self.coeffs):
            if not c:
                continue
            mono = "" if k == 0 else (var if k == 1 else f"{var}^{k}")
            if mono and c == 1:
                terms.append(mono)
            elif mono and c == -1:
                terms.append(f"-{mono}")
            else:
                terms.append(f"{format_fraction(c)}{'*' + mono if mono else ''}")
        return " + ".join(terms).replace("+ -", "- ")


# ---------------------------------------------------------------------------
# truncated supercommutative series


Monomial = Tuple[int, ...]


def monomial_product(a: Monomial, b: Monomial, parities: Sequence[int]) -> Tuple[int, Optional[Monomial]]:
    """Product of sorted monomials with the Koszul sign of merging."""
    if not a:
        return 1, b
    if not b:
        return 1, a
    odd = 0
    for x in a:
        if parities[x]:
            for y in b:
                if y == x:
                    return 0, None
                if y < x and parities[y]:
                    odd ^= 1
    merged = tuple(sorted(a + b))
    return (-1 if odd else 1), merged


class SuperSeries:
    """Truncated formal power series in supercommuting variables ``t^alpha``.

    Monomials are sorted tuples of variable indices; odd variables occur at
    most once and the sign of sorting is folded into the coefficient.
    """

    __slots__ = ("parities", "order", "terms")

    def __init__(self, parities: Sequence[int], order: int,
                 terms: Optional[Mapping[Monomial, Any]] = None, cap: int = SERIES_ORDER_CAP):
        if order > cap:
            raise CapExceeded(f"series order {order} exceeds the cap {cap}")
        self.parities = tuple(p & 1 for p in parities)
        self.order = order
        self.terms: Dict[Monomial, Fraction] = {}
        for mono, c in (terms or {}).items():
            self._add_term(tuple(mono), c)

    def _add_term(self, mono: Monomial, c: Any) -> None:
        if len(mono) > self.order or not c:
            return
        sign, canon = canonicalize(mono, self.parities, (len(mono),))
        if canon is None:
            return
        v = self.terms.get(canon, 0) + (c if sign == 1 else -c)
        if v:
            self.terms[canon] = v
        else:
            self.terms.pop(canon, None)

    # -- constructors
    @classmethod
    def constant(cls, parities: Sequence[int], order: int, c: Any = 1) -> "SuperSeries":
        return cls(parities, order, {(): c})

    @classmethod
    def variable(cls, parities: Sequence[int], order: int, alpha: int) -> "SuperSeries":
        if not 0 <= alpha < len(parities):
            raise ValueError(f"no variable {alpha}")
        return cls(parities, order, {(alpha,): 1})

    @classmethod
    def monomial(cls, parities: Sequence[int], order: int, mono: Sequence[int],
                 coeff: Any = 1) -> "SuperSeries":
        return cls(parities, order, {tuple(mono): coeff})

    def _like(self, terms: Optional[Mapping[Monomial, Any]] = None) -> "SuperSeries":
        out = SuperSeries.__new__(SuperSeries)
        out.parities = self.parities
        out.order = self.order
        out.terms = dict(terms or {})
        return out

    def _check(self, other: "SuperSeries") -> None:
        if self.parities != other.parities:
            raise ValueError("series over different variables")

    # -- arithmetic
    def __add__(self, other: Any) -> "SuperSeries":
        if isinstance(other, SuperSeries):
            self._check(other)
            out = self._like(self.terms)
            for m, c in other.terms.items():
                v = out.terms.get(m, 0) + c
                if v:
                    out.terms[m] = v
                else:
                    out.terms.pop(m, None)
            out.order = min(self.order, other.order)
            return out.truncate(out.order)
        if isinstance(other, (int, Fraction)):
            return self + SuperSeries.constant(self.parities, self.order, other)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self) -> "SuperSeries":
        return self._like({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: Any) -> "SuperSeries":
        return self + (-other)

    def __rsub__(self, other: Any) -> "SuperSeries":
        return (-self) + other

    def __mul__(self, other: Any) -> "SuperSeries":
        if isinstance(other, (int, Fraction)):
            if not other:
                return self._like()
            return self._like({m: c * other for m, c in self.terms.items()})
        if not isinstance(other, SuperSeries):
            return NotImplemented
        self._check(other)
        order = min(self.order, other.order)
        out = self._like()
        out.order = order
        par = self.parities
        for ma, ca in self.terms.items():
            la = len(ma)
            for mb, cb in other.terms.items():
                if la + len(mb) > order:
                    continue
                sign, m = monomial_product(ma, mb, par)
                if not sign:
                    continue
                v = out.terms.get(m, 0) + (ca * cb if sign == 1 else -(ca * cb))
                if v:
                    out.terms[m] = v
                else:
                    out.terms.pop(m, None)
        return out

    def __rmul__(self, other: Any) -> "SuperSeries":
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = SuperSeries.constant(self.parities, self.order, other)
        if not isinstance(other, SuperSeries):
            return NotImplemented
        return self.parities == other.parities and self.terms == other.terms

    __hash__ = None  # type: ignore[assignment]

    def __bool__(self) -> bool:
        return bool(self.terms)

    # -- calculus
    def derive(self, alpha: int) -> "SuperSeries":
        """Left graded derivation: ``d(XY) = dX.Y + (-1)^{|X||alpha|} X.dY``."""
        if not 0 <= alpha < len(self.parities):
            raise ValueError(f"no variable {alpha}")
        pa = self.parities[alpha]
        out = self._like()
        for mono, c in self.terms.items():
            prefix = 0
            for pos, v in enumerate(mono):
                if v == alpha:
                    rest = mono[:pos] + mono[pos + 1:]
                    val = -c if (pa and prefix & 1) else c
                    nv = out.terms.get(rest, 0) + val
                    if nv:
                        out.terms[rest] = nv
                    else:
                        out.terms.pop(rest, None)
                prefix += self.parities[v]
        return out

    def truncate(self, order: int) -> "SuperSeries":
        out = self._like({m: c for m, c in self.terms.items() if len(m) <= order})
        out.order = min(order, self.order)
        return out

    def constant_term(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def coefficient(self, mono: Sequence[int]) -> Fraction:
        sign, canon = canonicalize(tuple(mono), self.parities, (len(mono),))
        if canon is None:
            return Fraction(0)
        c = self.terms.get(canon, Fraction(0))
        return c if sign == 1 else -c

    def exp(self) -> "SuperSeries":
        """``exp`` of a series with zero constant term."""
        if self.constant_term():
            raise ValueError("exp needs a zero constant term to stay rational")
        result = SuperSeries.constant(self.parities, self.order)
        power = SuperSeries.constant(self.parities, self.order)
        for k in range(1, self.order + 1):
            power = power * self * Fraction(1, k)
            if not power:
                break
            result = result + power
        return result

    def log(self) -> "SuperSeries":
        """``log`` of a series with constant term 1."""
        if self.constant_term() != 1:
            raise ValueError("log needs constant term 1")
        x = self - 1
        result = self._like()
        power = SuperSeries.constant(self.parities, self.order)
        for k in range(1, self.order + 1):
            power = power * x
            if not power:
                break
            result = result + power * Fraction((-1) ** (k + 1), k)
        return result

    def __repr__(self) -> str:
        return f"SuperSeries(order={self.order}, terms={len(self.terms)})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono in sorted(self.terms, key=lambda m: (len(m), m)):
            c = self.terms[mono]
            word = "*".join(f"t{v}" for v in mono)
            parts.append(f"{format_fraction(c)}{'*' + word if word else ''}")
        return " + ".join(parts)


# ---------------------------------------------------------------------------
# exact elimination


class EchelonBasis:
    """Incremental exact row reduction over sparse rational vectors.

    Each stored row has a pivot: the entry that is extreme under ``order``
    (largest key by default).  ``reduce`` eliminates pivots from the top
    down, so termination follows from the pivot being each row's extreme
    entry.  Rows remember the combination of inserted vectors they came from.
    """

    def __init__(self, order: Callable[[int], Any] = lambda i: i):
        self.order = order
        self.rows: Dict[int, Tuple[Dict[int, Fraction], Dict[Any, Fraction]]] = {}

    def __len__(self) -> int:
        return len(self.rows)

    def reduce(self, vec: Mapping[int, Any]) -> Tuple[Dict[int, Fraction], Dict[Any, Fraction]]:
        """Return ``(residual, combo)`` with ``vec = residual + sum combo[tag] * input[tag]``."""
        work = {i: c for i, c in vec.items() if c}
        residual: Dict[int, Fraction] = {}
        combo: Dict[Any, Fraction] = {}
        while work:
            top = max(work, key=self.order)
            c = work.pop(top)
            row = self.rows.get(top)
            if row is None:
                residual[top] = c
                continue
            rvec, rcombo = row
            factor = c / rvec[top]
            for i, v in rvec.items():
                if i == top:
                    continue
                nv = work.get(i, 0) - factor * v
                if nv:
                    work[i] = nv
                else:
                    work.pop(i, None)
            add_into(combo, rcombo, factor)
        return residual, combo

    def add(self, vec: Mapping[int, Any], tag: Any) -> Tuple[bool, Dict[Any, Fraction]]:
        """Insert ``vec``.  Returns ``(independent, combo)``.

        If dependent, ``vec = sum combo[t] * input[t]`` over earlier inputs.
        """
        residual, combo = self.reduce(vec)
        if not residual:
            return False, combo
        pivot = max(residual, key=self.order)
        row_combo = {k: -v for k, v in combo.items()}
        row_combo[tag] = Fraction(1)
        self.rows[pivot] = (residual, row_combo)
        return True, {}

    def contains(self, vec: Mapping[int, Any]) -> bool:
        return not self.reduce(vec)[0]

    def pivots(self) -> list:
        return sorted(self.rows, key=self.order)
