"""Unital sL-infinity algebras and morphisms.

Relation checks, composition, exact polynomial homotopy flows, the
Maurer-Cartan equation and homotopy transfer to cohomology.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from .kernel import (
    EchelonBasis,
    Element,
    GradedBasis,
    Key,
    MultiMap,
    Report,
    SuperSeries,
    UPoly,
    _koszul_sign0,
    add_into,
    canonical_keys,
    enumerate_partitions,
    insertion_terms,
    multiplicity_factor,
    scaled,
)

ONE = Fraction(1)
DEFAULT_NMAX = 6
EXHAUSTIVE_LIMIT = 4096

Family = Sequence[MultiMap]


def _unit_vector(i: int) -> Element:
    return {i: ONE}


def _check_family(maps: Family, degree: int, source: GradedBasis, target: GradedBasis,
                  what: str) -> None:
    for n, mp in enumerate(maps, start=1):
        if mp.arity != n:
            raise ValueError(f"{what}_{n} has arity {mp.arity}")
        if mp.degree != degree:
            raise ValueError(f"{what}_{n} has degree {mp.degree}, expected {degree}")
        if mp.source != source or mp.target != target:
            raise ValueError(f"{what}_{n} has mismatched bases")


class SLInftyStructure:
    """Graded symmetric brackets ``ell_n`` of degree +1 on one space."""

    def __init__(self, basis: GradedBasis, ell: Family):
        _check_family(ell, 1, basis, basis, "ell")
        self.basis = basis
        self.ell = tuple(ell)

    @property
    def nmax(self) -> int:
        return len(self.ell)

    def l(self, n: int) -> MultiMap:
        if n > self.nmax:
            return MultiMap.zero(n, 1, self.basis, self.basis)
        return self.ell[n - 1]

    @classmethod
    def zero(cls, basis: GradedBasis, nmax: int = DEFAULT_NMAX) -> "SLInftyStructure":
        return cls(basis, [MultiMap.zero(n, 1, basis, basis) for n in range(1, nmax + 1)])

    @classmethod
    def from_entries(cls, basis: GradedBasis, entries: Mapping[int, Mapping[Key, Element]],
                     nmax: int = DEFAULT_NMAX) -> "SLInftyStructure":
        return cls(basis, [MultiMap(n, 1, basis, basis, entries.get(n, {}))
                           for n in range(1, nmax + 1)])


class SLMorphism:
    """A family ``phi_n`` of degree-0 maps ``S^n V -> V'``."""

    def __init__(self, source: GradedBasis, target: GradedBasis, phi: Family):
        _check_family(phi, 0, source, target, "phi")
        self.source = source
        self.target = target
        self.phi = tuple(phi)

    @property
    def nmax(self) -> int:
        return len(self.phi)

    def map(self, n: int) -> MultiMap:
        return self.phi[n - 1]

    @classmethod
    def identity(cls, basis: GradedBasis, nmax: int = DEFAULT_NMAX) -> "SLMorphism":
        maps = [MultiMap.identity(basis)]
        maps += [MultiMap.zero(n, 0, basis, basis) for n in range(2, nmax + 1)]
        return cls(basis, basis, maps)

    @classmethod
    def linear(cls, phi1: MultiMap, nmax: int = DEFAULT_NMAX) -> "SLMorphism":
        maps = [phi1] + [MultiMap.zero(n, 0, phi1.source, phi1.target) for n in range(2, nmax + 1)]
        return cls(phi1.source, phi1.target, maps)

    def equals(self, other: "SLMorphism", nmax: Optional[int] = None) -> bool:
        nmax = min(self.nmax, other.nmax) if nmax is None else nmax
        return all(self.phi[n] == other.phi[n] for n in range(nmax))


class HomotopyFamily:
    """Degree -1 maps ``eta_n: S^n V -> V'``; coefficients may be :class:`UPoly` in tau."""

    def __init__(self, source: GradedBasis, target: GradedBasis, eta: Family):
        _check_family(eta, -1, source, target, "eta")
        self.source = source
        self.target = target
        self.eta = tuple(eta)

    @property
    def nmax(self) -> int:
        return len(self.eta)

    def map(self, n: int) -> MultiMap:
        if n > self.nmax:
            return MultiMap.zero(n, -1, self.source, self.target)
        return self.eta[n - 1]

    def unit_report(self) -> Report:
        report = Report()
        u = self.source.unit_index
        if u is None:
            return report
        for n in range(1, self.nmax + 1):
            for key in canonical_keys(self.source, n - 1):
                val = self.eta[n - 1](*(key + (u,)))
                report.count("eta unit")
                if val:
                    report.fail("eta unit", arity=n, word=list(key) + [u], value=val)
        return report


def _at(value: Any, tau: Any) -> Any:
    return value(tau) if isinstance(value, UPoly) else value


class PolyFamily:
    """Maps ``Phi_n(tau)`` whose coefficients are polynomials in ``tau``."""

    def __init__(self, source: GradedBasis, target: GradedBasis, maps: Family):
        self.source = source
        self.target = target
        self.maps = tuple(maps)

    @property
    def nmax(self) -> int:
        return len(self.maps)

    def at(self, tau: Any) -> SLMorphism:
        tau = Fraction(tau)
        out = []
        for mp in self.maps:
            out.append(MultiMap.lazy(mp.arity, mp.degree, self.source, self.target,
                                     lambda key, mp=mp: {i: _at(c, tau) for i, c in mp.value(key).items()}))
        return SLMorphism(self.source, self.target, out)


# ---------------------------------------------------------------------------
# partition sums


def _word_parities(key: Key, basis: GradedBasis) -> List[int]:
    return [basis.parities[i] for i in key]


def partition_sum(outer: Callable[[int], MultiMap], inner: Callable[[int], MultiMap], key: Key,
                  basis: GradedBasis, skip: Callable[[int], bool] = lambda k: False) -> Element:
    """``sum_pi eps(pi) outer_{|pi|}(inner(x_B1), .., inner(x_Bk))`` on basis vectors."""
    par = _word_parities(key, basis)
    acc: Element = {}
    for pi in enumerate_partitions(len(key)):
        k = len(pi)
        if skip(k):
            continue
        args = []
        for block in pi.blocks:
            v = inner(len(block))(*(key[j] for j in block))
            if not v:
                break
            args.append(v)
        else:
            val = outer(k).apply(args)
            if val:
                add_into(acc, val, _koszul_sign0(pi.permutation, par))
    return acc


def _eps_pi_i(pi, i: int, par: Sequence[int]) -> int:
    sign = _koszul_sign0(pi.permutation, par)
    prefix = sum(par[j] for b in pi.blocks[:i] for j in b)
    return -sign if prefix & 1 else sign


def insertion_sum(outer: Callable[[int], MultiMap], inner: Callable[[int], MultiMap], key: Key,
                  basis: GradedBasis, skip: Callable[[int], bool] = lambda k: False) -> Element:
    """``sum_(pi,i) eps(pi,i) outer_{|pi|}(x_.., inner(x_Bi), x_..)`` with an odd ``inner``.

    Only partitions whose other blocks are singletons contribute.
    """
    n = len(key)
    par = _word_parities(key, basis)
    acc: Element = {}
    for pi, i in insertion_terms(n):
        k = len(pi)
        if skip(k):
            continue
        block = pi.blocks[i]
        v = inner(len(block))(*(key[j] for j in block))
        if not v:
            continue
        args = [v if b == i else _unit_vector(key[pi.blocks[b][0]]) for b in range(k)]
        val = outer(k).apply(args)
        if val:
            add_into(acc, val, _eps_pi_i(pi, i, par))
    return acc


def mixed_sum(outer: Callable[[int], MultiMap], phi: Callable[[int], MultiMap],
              eta: Callable[[int], MultiMap], key: Key, basis: GradedBasis) -> Element:
    """``sum_pi sum_i eps(pi,i) outer(phi(x_B1), .., eta(x_Bi), .., phi(x_Bk))``."""
    par = _word_parities(key, basis)
    acc: Element = {}
    for pi in enumerate_partitions(len(key)):
        k = len(pi)
        phis = [phi(len(b))(*(key[j] for j in b)) if k > 1 else None for b in pi.blocks]
        missing = sum(1 for p in phis if not p) if k > 1 else 0
        if missing > 1:
            continue
        for i, block in enumerate(pi.blocks):
            if k > 1 and missing == 1 and phis[i]:
                continue
            v = eta(len(block))(*(key[j] for j in block))
            if not v:
                continue
            args = [v if b == i else phis[b] for b in range(k)]
            val = outer(k).apply(args)
            if val:
                add_into(acc, val, _eps_pi_i(pi, i, par))
    return acc


# ---------------------------------------------------------------------------
# relation checks


def check_words(basis: GradedBasis, n: int, exhaustive: Optional[bool] = None) -> Iterator[Key]:
    """Every ordered word when cheap, else the canonical (sorted) words."""
    if exhaustive is None:
        exhaustive = len(basis) ** n <= EXHAUSTIVE_LIMIT
    if exhaustive:
        return itertools.product(range(len(basis)), repeat=n)
    return canonical_keys(basis, n)


def sl_relation(L: SLInftyStructure, key: Key) -> Element:
    return insertion_sum(L.l, L.l, key, L.basis)


def check_sl_infinity(L: SLInftyStructure, up_to: Optional[int] = None,
                      exhaustive: Optional[bool] = None) -> Report:
    """Evaluate the n-th relation on basis words for every ``n <= up_to``.

    Structures with a unit are also checked for ``ell_n(.., 1) = 0``.
    """
    up_to = L.nmax if up_to is None else up_to
    if up_to > L.nmax:
        raise ValueError(f"cannot check arity {up_to} beyond N_max = {L.nmax}")
    report = Report()
    basis = L.basis
    for n in range(1, up_to + 1):
        for key in check_words(basis, n, exhaustive):
            report.count(f"relation {n}")
            val = sl_relation(L, key)
            if val:
                report.fail(f"relation {n}", arity=n, word=list(key), value=val)
    u = basis.unit_index
    if u is not None:
        for n in range(1, up_to + 1):
            for key in canonical_keys(basis, n - 1):
                report.count("unit")
                val = L.l(n)(*(key + (u,)))
                if val:
                    report.fail("unit", arity=n, word=list(key) + [u], value=val)
    return report


def compose(phi2: SLMorphism, phi1: SLMorphism) -> SLMorphism:
    """``(phi2 . phi1)_n = sum_pi eps(pi) phi2_{|pi|}(phi1(x_B1), ..)``."""
    if phi1.target != phi2.source:
        raise ValueError("target of the first morphism must be the source of the second")
    nmax = min(phi1.nmax, phi2.nmax)
    maps = []
    for n in range(1, nmax + 1):
        maps.append(MultiMap.lazy(n, 0, phi1.source, phi2.target,
                                  lambda key: partition_sum(phi2.map, phi1.map, key, phi1.source)))
    return SLMorphism(phi1.source, phi2.target, maps)


def morphism_defect(phi: SLMorphism, L: SLInftyStructure, L2: SLInftyStructure, key: Key) -> Element:
    """Left side minus right side of the morphism relation on a basis word."""
    lhs = partition_sum(L2.l, phi.map, key, phi.source)
    rhs = insertion_sum(phi.map, L.l, key, phi.source)
    return add_into(lhs, rhs, -1)


def unit_report(phi: SLMorphism, up_to: Optional[int] = None) -> Report:
    report = Report()
    u, u2 = phi.source.unit_index, phi.target.unit_index
    if u is None:
        return report
    up_to = phi.nmax if up_to is None else up_to
    report.count("unit")
    if u2 is None or phi.map(1)(u) != _unit_vector(u2):
        report.fail("unit", arity=1, word=[u], value=phi.map(1)(u))
    for n in range(2, up_to + 1):
        for key in canonical_keys(phi.source, n - 1):
            report.count("unit")
            val = phi.map(n)(*(key + (u,)))
            if val:
                report.fail("unit", arity=n, word=list(key) + [u], value=val)
    return report


def check_morphism(phi: SLMorphism, L: SLInftyStructure, L2: SLInftyStructure,
                   up_to: Optional[int] = None, exhaustive: Optional[bool] = None,
                   unital: bool = True) -> Report:
    if phi.source != L.basis or phi.target != L2.basis:
        raise ValueError("morphism bases do not match the structures")
    up_to = min(phi.nmax, L.nmax, L2.nmax) if up_to is None else up_to
    report = Report()
    for n in range(1, up_to + 1):
        for key in check_words(phi.source, n, exhaustive):
            report.count(f"morphism {n}")
            val = morphism_defect(phi, L, L2, key)
            if val:
                report.fail(f"morphism {n}", arity=n, word=list(key), value=val)
    if unital:
        report.merge(unit_report(phi, up_to))
    return report


# ---------------------------------------------------------------------------
# homotopy flow


def flow(phi: SLMorphism, eta: HomotopyFamily, L: SLInftyStructure,
         L2: SLInftyStructure) -> Tuple[PolyFamily, SLMorphism]:
    """Integrate the homotopy flow generated by ``eta`` starting at ``phi``.

    ``dPhi_n/dtau = sum_(pi,i) eps(pi,i) eta(.., ell(x_Bi), ..)
    + sum_pi sum_i eps(pi,i) ell'(Phi(x_B1), .., eta(x_Bi), .., Phi(x_Bk))``.
    Arity ``n`` only needs ``Phi_{<n}``, so each stage is an exact antiderivative.
    Returns the family and its endpoint at ``tau = 1``.
    """
    if (phi.source, phi.target) != (eta.source, eta.target):
        raise ValueError("morphism and homotopy have different bases")
    source, target = phi.source, phi.target
    nmax = min(phi.nmax, L.nmax, L2.nmax)
    maps: List[MultiMap] = []

    def Phi(n: int) -> MultiMap:
        return maps[n - 1]

    def velocity(key: Key) -> Element:
        acc = insertion_sum(eta.map, L.l, key, source)
        return add_into(acc, mixed_sum(L2.l, Phi, eta.map, key, source))

    def stage(key: Key, n: int) -> Element:
        out: Element = {i: UPoly.const(c) for i, c in phi.map(n).value(key).items()}
        for i, c in velocity(key).items():
            poly = c if isinstance(c, UPoly) else UPoly.const(c)
            add_into(out, {i: poly.integral()})
        return out

    for n in range(1, nmax + 1):
        maps.append(MultiMap.lazy(n, 0, source, target, lambda key, n=n: stage(key, n)))
    family = PolyFamily(source, target, maps)
    return family, family.at(1)


def flow_velocity(family: PolyFamily, eta: HomotopyFamily, L: SLInftyStructure,
                  L2: SLInftyStructure, key: Key) -> Element:
    """Right side of the flow equation for an already integrated family."""
    acc = insertion_sum(eta.map, L.l, key, family.source)
    return add_into(acc, mixed_sum(L2.l, lambda n: family.maps[n - 1], eta.map, key, family.source))


def derivative_of(elem: Element) -> Element:
    out: Element = {}
    for i, c in elem.items():
        d = c.derivative() if isinstance(c, UPoly) else 0
        if d:
            out[i] = d
    return out


# ---------------------------------------------------------------------------
# Maurer-Cartan elements


Gamma = Dict[int, SuperSeries]


def gamma_of_morphism(phi: SLMorphism, order: int) -> Gamma:
    """``sum_n (1/n!) t^{a_n} .. t^{a_1} phi_n(e_{a_1}, .., e_{a_n})`` as coefficients per target index."""
    if order > phi.nmax:
        raise ValueError(f"order {order} needs phi up to arity {order}, have {phi.nmax}")
    parities = phi.source.parities
    terms: Dict[int, Dict[Key, Any]] = {}
    for n in range(1, order + 1):
        mp = phi.map(n)
        for key in canonical_keys(phi.source, n):
            val = mp(*key)
            odd = sum(parities[i] for i in key)
            rev = -1 if (odd * (odd - 1) // 2) & 1 else 1
            weight = multiplicity_factor(key) * rev
            for j, c in val.items():
                slot = terms.setdefault(j, {})
                slot[key] = slot.get(key, 0) + c * weight
    gamma = {}
    for j, t in terms.items():
        s = SuperSeries(parities, order, {k: v for k, v in t.items() if v})
        if s:
            gamma[j] = s
    return gamma


def mc_value(gamma: Gamma, L: SLInftyStructure, parities: Sequence[int], order: int) -> Gamma:
    """``d Gamma + sum_{n>=2} ell_n(Gamma, .., Gamma) / n!`` truncated at ``order``."""
    tparities = L.basis.parities
    out: Dict[int, SuperSeries] = {}
    support = sorted(gamma)
    if order > L.nmax:
        raise ValueError(f"order {order} exceeds the structure's N_max = {L.nmax}")
    for n in range(1, order + 1):
        for key in itertools.combinations_with_replacement(support, n):
            val = L.l(n)(*key)
            if not val:
                continue
            prod = SuperSeries.constant(parities, order, 1)
            seen = 0
            exponent = 0
            for j in key:
                p = tparities[j]
                exponent += p * (1 + seen)
                seen += p
                prod = prod * gamma[j]
                if not prod:
                    break
            if not prod:
                continue
            weight = multiplicity_factor(key) * (-1 if exponent & 1 else 1)
            for i, c in val.items():
                term = prod * (c * weight)
                out[i] = out[i] + term if i in out else term
    return {i: s for i, s in out.items() if s}


def mc_check(gamma: Gamma, L: SLInftyStructure, parities: Sequence[int], order: int) -> bool:
    for s in gamma.values():
        if s.constant_term():
            raise ValueError("Gamma must have zero constant term")
    return not mc_value(gamma, L, parities, order)


# ---------------------------------------------------------------------------
# homotopy transfer


@dataclass
class RetractData:
    """``f: H -> C``, ``h: C -> H`` and ``beta: C -> C`` of degree -1."""

    f: MultiMap
    h: MultiMap
    beta: MultiMap


def _matrix_inverse(cols: List[Element], dim_index: List[int]) -> Dict[int, Element]:
    """Inverse of the square matrix whose columns are ``cols`` in the coordinates ``dim_index``.

    Returns, for each coordinate index, its expansion in the column basis.
    """
    echelon = EchelonBasis()
    for pos, col in enumerate(cols):
        independent, _ = echelon.add(col, pos)
        if not independent:
            raise ValueError("columns are not a basis")
    out = {}
    for i in dim_index:
        residual, combo = echelon.reduce({i: ONE})
        if residual:
            raise ValueError("columns do not span")
        out[i] = combo
    return out


def _kernel_basis(d: MultiMap, indices: List[int]) -> List[Element]:
    """Reduced kernel basis of ``d`` restricted to ``span(indices)``."""
    echelon = EchelonBasis()
    kernel = []
    for i in indices:
        independent, combo = echelon.add(d(i), i)
        if not independent:
            vec = {i: ONE}
            for j, c in combo.items():
                vec[j] = vec.get(j, 0) - c
            kernel.append({k: v for k, v in vec.items() if v})
    return kernel


def retract_to_cohomology(L: SLInftyStructure) -> Tuple[GradedBasis, RetractData]:
    """Cohomology of ``ell_1`` with representatives, projection and contraction."""
    basis = L.basis
    d = L.l(1)
    degrees = sorted(set(basis.degrees))
    bound_of: Dict[int, List[Tuple[Element, int]]] = {k: [] for k in degrees}
    complement: Dict[int, List[int]] = {}
    for k in degrees:
        echelon = EchelonBasis()
        chosen = []
        for i in basis.of_degree(k):
            img = d(i)
            if img and echelon.add(img, i)[0]:
                chosen.append(i)
                bound_of.setdefault(k + 1, []).append((img, i))
        complement[k] = chosen
    h_labels, h_degrees, reps = [], [], []
    unit_pos = None
    decomposition: Dict[int, Dict[int, Tuple[str, int, Any]]] = {}
    for k in sorted(degrees, key=lambda k: (k != 0, k)):
        idx = basis.of_degree(k)
        echelon = EchelonBasis()
        for b, _ in bound_of.get(k, []):
            echelon.add(b, None)
        candidates = _kernel_basis(d, idx)
        u = basis.unit_index
        if u is not None and basis.degrees[u] == k and not d(u):
            candidates = [{u: ONE}] + candidates
        h_here = []
        for vec in candidates:
            if echelon.add(vec, None)[0]:
                if u is not None and vec == {u: ONE}:
                    unit_pos = len(reps)
                h_here.append(len(reps))
                reps.append(vec)
                h_labels.append(f"[{basis.labels[next(iter(vec))]}]" if len(vec) == 1
                                else f"h{len(reps) - 1}")
                h_degrees.append(k)
        cols = [b for b, _ in bound_of.get(k, [])] + [reps[p] for p in h_here] + \
            [{r: ONE} for r in complement[k]]
        tags = [("b", r) for _, r in bound_of.get(k, [])] + [("h", p, None) for p in h_here] + \
            [("r", r) for r in complement[k]]
        inverse = _matrix_inverse(cols, idx)
        for i in idx:
            decomposition[i] = {pos: (tags[pos], c) for pos, c in inverse[i].items()}
    H = GradedBasis(tuple(h_labels), tuple(h_degrees), unit_pos)

    def beta(key: Key) -> Element:
        out: Element = {}
        for tag, c in decomposition[key[0]].values():
            if tag[0] == "b":
                add_into(out, {tag[1]: -c})
        return out

    def proj(key: Key) -> Element:
        out: Element = {}
        for tag, c in decomposition[key[0]].values():
            if tag[0] == "h":
                add_into(out, {tag[1]: c})
        return out

    f = MultiMap(1, 0, H, basis, {(p,): rep for p, rep in enumerate(reps)})
    h = MultiMap.lazy(1, 0, basis, H, proj)
    b = MultiMap.lazy(1, -1, basis, basis, beta)
    return H, RetractData(f, h, b)


def check_retract(data: RetractData, L: SLInftyStructure) -> Report:
    """``h f = id``, ``f h = id + d beta + beta d`` and the side conditions."""
    report = Report()
    d = L.l(1)
    H, C = data.f.source, data.f.target
    for p in range(len(H)):
        report.count("hf")
        if data.h.apply([data.f(p)]) != {p: ONE}:
            report.fail("hf", index=p)
        report.count("beta f")
        if data.beta.apply([data.f(p)]):
            report.fail("beta f", index=p)
    for i in range(len(C)):
        lhs = data.f.apply([data.h(i)])
        rhs: Element = {i: ONE}
        add_into(rhs, d.apply([data.beta(i)]))
        add_into(rhs, data.beta.apply([d(i)]))
        report.count("fh")
        if lhs != rhs:
            report.fail("fh", index=i, lhs=lhs, rhs=rhs)
        report.count("h beta")
        if data.h.apply([data.beta(i)]):
            report.fail("h beta", index=i)
        report.count("beta beta")
        if data.beta.apply([data.beta(i)]):
            report.fail("beta beta", index=i)
    u = C.unit_index
    if u is not None:
        report.count("beta unit")
        if data.beta(u):
            report.fail("beta unit", index=u)
    return report


def transfer_minimal(L: SLInftyStructure) -> Tuple[SLInftyStructure, SLMorphism, RetractData]:
    """Minimal structure on cohomology with a quasi-isomorphism into ``L``.

    ``L_N = sum_{|pi|>1} eps(pi) ell(phiH(x_B1), ..)
    - sum_{(pi,i), |pi|>1} eps(pi,i) phiH(.., ellH(x_Bi), ..)``,
    then ``ellH_N = h L_N`` and ``phiH_N = beta L_N``.
    """
    H, data = retract_to_cohomology(L)
    C = L.basis
    nmax = L.nmax
    ell_h: List[MultiMap] = [MultiMap.zero(1, 1, H, H)]
    phi_h: List[MultiMap] = [data.f]
    defects: Dict[Key, Element] = {}

    def phi_of(n: int) -> MultiMap:
        return phi_h[n - 1]

    def ell_of(n: int) -> MultiMap:
        return ell_h[n - 1]

    def defect(key: Key) -> Element:
        if key not in defects:
            acc = partition_sum(L.l, phi_of, key, H, skip=lambda k: k == 1)
            add_into(acc, insertion_sum(phi_of, ell_of, key, H, skip=lambda k: k == 1), -1)
            defects[key] = acc
        return defects[key]

    for n in range(2, nmax + 1):
        ell_h.append(MultiMap.lazy(n, 1, H, H, lambda key: data.h.apply([defect(key)])))
        phi_h.append(MultiMap.lazy(n, 0, H, C, lambda key: data.beta.apply([defect(key)])))
    return SLInftyStructure(H, ell_h), SLMorphism(H, C, phi_h), data


def family_to_json(maps: Family) -> dict:
    out = {}
    for mp in maps:
        rows = []
        for key, val in mp.items():
            rows.append({"word": [mp.source.labels[i] for i in key],
                         "value": {mp.target.labels[i]: c for i, c in val.items()}})
        out[str(mp.arity)] = rows
    return out


def scale_family(maps: Family, c: Any) -> List[MultiMap]:
    return [MultiMap.lazy(mp.arity, mp.degree, mp.source, mp.target,
                          lambda key, mp=mp: scaled(mp.value(key), c)) for mp in maps]


def obstruction_example(nmax: int = 4) -> Tuple[SLInftyStructure, SLMorphism, HomotopyFamily, PolyFamily]:
    """Span of ``a, b`` in degree 0 and ``c`` in degree 1 with ``ell_1(a) = c``, ``ell_2(b, b) = c``.

    The linear map sending ``a`` to 1 is a morphism into the zero structure
    on the ground field; flowing it along ``eta_1(c) = -1`` changes
    ``Phi_2(b, b)`` by exactly the change of ``Phi_1(a)``.
    """
    one = Fraction(1)
    V = GradedBasis(("a", "b", "c"), (0, 0, 1), None)
    L = SLInftyStructure.from_entries(V, {1: {(0,): {2: one}}, 2: {(1, 1): {2: one}}}, nmax)
    k = GradedBasis(("1",), (0,), None)
    target = SLInftyStructure.zero(k, nmax)
    phi = SLMorphism.linear(MultiMap(1, 0, V, k, {(0,): {0: one}}), nmax)
    eta = HomotopyFamily(V, k, [MultiMap(1, -1, V, k, {(2,): {0: -one}})]
                         + [MultiMap.zero(n, -1, V, k) for n in range(2, nmax + 1)])
    family, _ = flow(phi, eta, L, target)
    return L, phi, eta, family
