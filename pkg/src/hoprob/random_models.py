"""Seeded random instances used by the property suites and the CLI."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .corralg import CorrelationAlgebra
from .cumulants import Expectation, ProbAlgebra
from .descend import LambdaFamily
from .kernel import EchelonBasis, Element, GradedBasis, Key, MultiMap, add_into, canonical_keys


def random_basis(rng: random.Random, dim: int, degrees: Sequence[int] = (-2, -1, 0, 1, 2)) -> GradedBasis:
    """A pointed basis: ``e0`` is the unit in degree 0, the rest have random degrees."""
    degs = [0] + [rng.choice(list(degrees)) for _ in range(dim - 1)]
    return GradedBasis(tuple(f"e{i}" for i in range(dim)), tuple(degs), 0)


def random_element(rng: random.Random, candidates: Sequence[int], density: float = 0.6,
                   span: int = 3) -> Element:
    out: Element = {}
    for i in candidates:
        if rng.random() < density:
            c = rng.randint(-span, span)
            if c:
                out[i] = Fraction(c)
    return out


def random_reduced(rng: random.Random, basis: GradedBasis, arity: int,
                   density: float = 0.6) -> Dict[int, Dict[Key, Element]]:
    """Random values on unit-free canonical words of arity ``2..arity``."""
    u = basis.unit_index
    free = [i for i in range(len(basis)) if i != u]
    reduced: Dict[int, Dict[Key, Element]] = {}
    for n in range(2, arity + 1):
        table = {}
        for key in canonical_keys(GradedBasis(tuple(basis.labels[i] for i in free),
                                              tuple(basis.degrees[i] for i in free), None), n):
            word = tuple(free[i] for i in key)
            target = basis.of_degree(basis.degree_of(word))
            val = random_element(rng, target, density)
            if val:
                table[word] = val
        reduced[n] = table
    return reduced


def random_correlation_algebra(rng: random.Random, basis: GradedBasis, nmax: int,
                               arity: Optional[int] = None, density: float = 0.6) -> CorrelationAlgebra:
    """Any symmetric reduced ``M`` extended by the unit tower is a correlation algebra."""
    arity = nmax if arity is None else arity
    return CorrelationAlgebra.from_reduced(basis, random_reduced(rng, basis, arity, density), nmax)


def _random_unipotent(rng: random.Random, idx: List[int], lower: bool, fixed: Optional[int]) -> Dict[int, Element]:
    cols: Dict[int, Element] = {}
    for a, i in enumerate(idx):
        col: Element = {i: Fraction(1)}
        if i != fixed:
            for b, j in enumerate(idx):
                if (b > a if lower else b < a) and rng.random() < 0.5:
                    c = rng.randint(-2, 2)
                    if c:
                        col[j] = Fraction(c)
        cols[i] = col
    return cols


def _compose_cols(outer: Dict[int, Element], inner: Dict[int, Element]) -> Dict[int, Element]:
    out = {}
    for i, col in inner.items():
        acc: Element = {}
        for j, c in col.items():
            add_into(acc, outer[j], c)
        out[i] = acc
    return out


def _invert_cols(cols: Dict[int, Element]) -> Dict[int, Element]:
    echelon = EchelonBasis()
    for i, col in cols.items():
        echelon.add(col, i)
    out = {}
    for i in cols:
        residual, combo = echelon.reduce({i: Fraction(1)})
        assert not residual
        out[i] = combo
    return out


def random_differential(rng: random.Random, basis: GradedBasis) -> MultiMap:
    """``K = P D P^{-1}`` with ``D`` a pairing avoiding the unit and ``P`` degree-preserving.

    ``P`` fixes the unit, so ``K(1) = 0`` and the unit is not exact.
    """
    u = basis.unit_index
    free = [i for i in range(len(basis)) if i != u]
    rng.shuffle(free)
    used, pairs = set(), []
    for i in free:
        if i in used or rng.random() < 0.3:
            continue
        partners = [j for j in free if j not in used and j != i and basis.degrees[j] == basis.degrees[i] + 1]
        if partners:
            j = rng.choice(partners)
            used.update((i, j))
            pairs.append((i, j))
    P: Dict[int, Element] = {}
    for deg in sorted(set(basis.degrees)):
        idx = basis.of_degree(deg)
        lower = _random_unipotent(rng, idx, True, u)
        upper = _random_unipotent(rng, idx, False, u)
        P.update(_compose_cols(lower, upper))
    Pinv = _invert_cols(P)
    D = dict(pairs)
    entries = {}
    for i in range(len(basis)):
        acc: Element = {}
        for j, c in Pinv[i].items():
            if j in D:
                add_into(acc, P[D[j]], c)
        if acc:
            entries[(i,)] = acc
    return MultiMap(1, 1, basis, basis, entries)


def random_prob_algebra(rng: random.Random, dim: int, nmax: int, arity: Optional[int] = None,
                        degrees: Sequence[int] = (-2, -1, 0, 1, 2),
                        basis: Optional[GradedBasis] = None) -> ProbAlgebra:
    basis = random_basis(rng, dim, degrees) if basis is None else basis
    A = random_correlation_algebra(rng, basis, nmax, arity)
    return ProbAlgebra(A, random_differential(rng, basis))


def random_expectation(rng: random.Random, P: ProbAlgebra) -> Expectation:
    """A random functional with ``c(1) = 1`` vanishing on the image of ``K``."""
    basis = P.basis
    zero = basis.of_degree(0)
    cols: List[Tuple[str, Element]] = []
    echelon = EchelonBasis()
    for j in basis.of_degree(-1):
        img = P.K(j)
        if img and echelon.add(img, len(cols))[0]:
            cols.append(("exact", img))
    echelon.add({basis.unit_index: Fraction(1)}, len(cols))
    cols.append(("unit", {basis.unit_index: Fraction(1)}))
    for i in zero:
        if echelon.add({i: Fraction(1)}, len(cols))[0]:
            cols.append(("free", {i: Fraction(1)}))
    weights = [Fraction(0) if kind == "exact" else Fraction(1) if kind == "unit"
               else Fraction(rng.randint(-3, 3)) for kind, _ in cols]
    values = {}
    for i in zero:
        _, combo = echelon.reduce({i: Fraction(1)})
        v = sum((c * weights[pos] for pos, c in combo.items()), Fraction(0))
        if v:
            values[i] = v
    return Expectation(basis, values)


def random_homotopy(rng: random.Random, source: GradedBasis, target: GradedBasis, degree: int = -1,
                    only_degree: Optional[int] = None) -> MultiMap:
    """A random linear map of the given degree that kills the unit."""
    entries = {}
    for i in range(len(source)):
        if i == source.unit_index or (only_degree is not None and source.degrees[i] != only_degree):
            continue
        val = random_element(rng, target.of_degree(source.degrees[i] + degree))
        if val:
            entries[(i,)] = val
    return MultiMap(1, degree, source, target, entries)


def random_lambda(rng: random.Random, source: GradedBasis, target: GradedBasis, nmax: int,
                  density: float = 0.5) -> LambdaFamily:
    u = source.unit_index
    free = [i for i in range(len(source)) if i != u]
    sub = GradedBasis(tuple(source.labels[i] for i in free), tuple(source.degrees[i] for i in free), None)
    reduced: Dict[int, Dict[Key, Element]] = {}
    for n in range(1, nmax + 1):
        table = {}
        for key in canonical_keys(sub, n):
            word = tuple(free[i] for i in key)
            val = random_element(rng, target.of_degree(source.degree_of(word) - 1), density)
            if val:
                table[word] = val
        reduced[n] = table
    return LambdaFamily.from_reduced(source, target, reduced, nmax)


def homotopic_cochain_map(rng: random.Random, P: ProbAlgebra) -> MultiMap:
    """``f = I + K r + r K`` for a random degree -1 map ``r`` killing the unit."""
    r = random_homotopy(rng, P.basis, P.basis, -1, only_degree=1)
    entries = {}
    for i in range(len(P.basis)):
        acc: Element = {i: Fraction(1)}
        add_into(acc, P.K.apply([r(i)]))
        add_into(acc, r.apply([P.K(i)]))
        entries[(i,)] = acc
    return MultiMap(1, 0, P.basis, P.basis, entries)


def closed_elements(P: ProbAlgebra) -> Dict[int, List[Element]]:
    """A basis of ``ker K`` in each degree."""
    out: Dict[int, List[Element]] = {}
    for deg in sorted(set(P.basis.degrees)):
        echelon = EchelonBasis()
        kernel = []
        for i in P.basis.of_degree(deg):
            independent, combo = echelon.add(P.K(i), i)
            if not independent:
                vec: Element = {i: Fraction(1)}
                for j, c in combo.items():
                    add_into(vec, {j: -c})
                kernel.append(vec)
        out[deg] = kernel
    return out


def random_closed_family(rng: random.Random, V: GradedBasis, P: ProbAlgebra, nmax: int,
                         density: float = 0.7) -> List[MultiMap]:
    """Random ``Pi_n: S^n V -> ker K`` of degree 0."""
    closed = closed_elements(P)
    maps = []
    for n in range(1, nmax + 1):
        entries = {}
        for key in canonical_keys(V, n):
            acc: Element = {}
            for vec in closed.get(V.degree_of(key), []):
                if rng.random() < density:
                    add_into(acc, vec, rng.randint(-2, 2))
            if acc:
                entries[key] = acc
        maps.append(MultiMap(n, 0, V, P.basis, entries))
    return maps


def random_variable_basis(rng: random.Random, P: ProbAlgebra, dim: int) -> GradedBasis:
    """Labels ``v*`` in degrees where ``ker K`` is nonzero."""
    closed = closed_elements(P)
    degrees = [d for d, vecs in closed.items() if vecs] or [0]
    return GradedBasis(tuple(f"v{i}" for i in range(dim)),
                       tuple(rng.choice(degrees) for _ in range(dim)), None)
