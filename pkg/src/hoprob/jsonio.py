"""JSON interchange for bases, structure constants and expectations.

Schema::

    {"basis": [{"name": "1", "degree": 0}, ...],
     "unit": 0,
     "M" | "m": [{"arity": 2, "entries": [{"in": [1, 1], "out": [{"index": 0, "coeff": "1/2"}]}]}],
     "K": [{"arity": 1, "entries": [...]}],
     "ell": [...], "c": [{"index": 0, "coeff": "1"}], "variables": [...]}

Coefficients are exact rational strings.  Permutations of a listed word
are filled in by graded symmetry unless they are listed too; words that
contain the unit are filled in by the unit tower unless listed.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Tuple

from .corralg import CorrelationAlgebra, ProductFamily
from .cumulants import Expectation, ProbAlgebra
from .kernel import (
    Element,
    GradedBasis,
    Key,
    MultiMap,
    canonicalize,
    format_fraction,
    to_fraction,
)


class SchemaError(ValueError):
    """The document does not follow the interchange schema."""


def _require(doc: Mapping, key: str, kind: type) -> Any:
    if key not in doc:
        raise SchemaError(f"missing field {key!r}")
    val = doc[key]
    if not isinstance(val, kind):
        raise SchemaError(f"field {key!r} must be {kind.__name__}")
    return val


def parse_coeff(raw: Any) -> Fraction:
    if isinstance(raw, bool) or not isinstance(raw, (str, int)):
        raise SchemaError(f"coefficient {raw!r} must be an integer or a 'p/q' string")
    try:
        return to_fraction(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"bad coefficient {raw!r}") from exc


def parse_basis(doc: Mapping) -> GradedBasis:
    rows = _require(doc, "basis", list)
    if not rows:
        raise SchemaError("the basis is empty")
    names, degrees = [], []
    for row in rows:
        if not isinstance(row, dict):
            raise SchemaError("basis rows must be objects")
        name = _require(row, "name", str)
        degree = _require(row, "degree", int)
        names.append(name)
        degrees.append(degree)
    if len(set(names)) != len(names):
        raise SchemaError("basis names must be distinct")
    unit = doc.get("unit")
    if unit is not None:
        if not isinstance(unit, int) or not 0 <= unit < len(names):
            raise SchemaError("unit must be a basis index")
        if unit != 0:
            raise SchemaError("the unit must be listed first (index 0)")
        if degrees[0] != 0:
            raise SchemaError("the unit must have degree 0")
    try:
        return GradedBasis(tuple(names), tuple(degrees), unit)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def parse_element(rows: Any, dim: int) -> Element:
    if not isinstance(rows, list):
        raise SchemaError("an element is a list of {index, coeff} objects")
    out: Element = {}
    for row in rows:
        if not isinstance(row, dict):
            raise SchemaError("element terms must be objects")
        idx = _require(row, "index", int)
        if not 0 <= idx < dim:
            raise SchemaError(f"index {idx} out of range")
        out[idx] = out.get(idx, Fraction(0)) + parse_coeff(row.get("coeff", "1"))
    return {i: c for i, c in out.items() if c}


def parse_tables(doc: Mapping, field: str, dim: int) -> Dict[int, Dict[Key, Element]]:
    """``{arity: {word: value}}`` exactly as listed."""
    blocks = _require(doc, field, list)
    tables: Dict[int, Dict[Key, Element]] = {}
    for block in blocks:
        if not isinstance(block, dict):
            raise SchemaError(f"{field} blocks must be objects")
        arity = _require(block, "arity", int)
        if arity < 1:
            raise SchemaError("arity must be positive")
        table = tables.setdefault(arity, {})
        for entry in _require(block, "entries", list):
            if not isinstance(entry, dict):
                raise SchemaError("entries must be objects")
            word = _require(entry, "in", list)
            if len(word) != arity or not all(isinstance(i, int) and 0 <= i < dim for i in word):
                raise SchemaError(f"word {word} does not match arity {arity}")
            key = tuple(word)
            if key in table:
                raise SchemaError(f"word {word} listed twice")
            table[key] = parse_element(_require(entry, "out", list), dim)
    return tables


def _tensor_map(arity: int, degree: int, basis: GradedBasis, table: Mapping[Key, Element],
                fallback) -> MultiMap:
    """Ordered storage, so inconsistent listings stay visible to the symmetry checks.

    An unlisted word takes the value of a listed rearrangement times the
    Koszul sign relating the two.
    """
    par = basis.parities
    seg = (arity,)
    listed: Dict[Key, Tuple[int, Key]] = {}
    for word in table:
        sign, canon = canonicalize(word, par, seg)
        if canon is not None and canon not in listed:
            listed[canon] = (sign, word)

    def func(key: Key) -> Element:
        if key in table:
            return dict(table[key])
        sign, canon = canonicalize(key, par, seg)
        if canon is None:
            return {}
        if canon in listed:
            wsign, word = listed[canon]
            return {i: c * sign * wsign for i, c in table[word].items()}
        return fallback(key)

    try:
        for key, val in table.items():
            MultiMap(arity, degree, basis, basis, {key: val}, segments=(1,) * arity)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    return MultiMap.lazy(arity, degree, basis, basis, func, segments=(1,) * arity)


def load_algebra(doc: Mapping, nmax: int) -> Tuple[GradedBasis, Any]:
    """A :class:`CorrelationAlgebra` from ``M`` or a :class:`ProductFamily` from ``m``."""
    basis = parse_basis(doc)
    if basis.unit_index is None:
        raise SchemaError("a correlation algebra needs a unit")
    dim = len(basis)
    if ("M" in doc) == ("m" in doc):
        raise SchemaError("give exactly one of 'M' and 'm'")
    if "M" in doc:
        tables = parse_tables(doc, "M", dim)
        top = max([nmax] + list(tables))
        holder: Dict[int, MultiMap] = {}

        def tower(key: Key) -> Element:
            rest = tuple(i for i in key if i != 0)
            if len(rest) == len(key):
                return {}
            if not rest:
                return {0: Fraction(1)}
            return holder[len(rest)](*rest)

        maps = []
        for n in range(1, top + 1):
            if n == 1 and 1 not in tables:
                holder[1] = MultiMap.identity(basis)
            else:
                holder[n] = _tensor_map(n, 0, basis, tables.get(n, {}), tower)
            maps.append(holder[n])
        return basis, CorrelationAlgebra(basis, maps)
    tables = parse_tables(doc, "m", dim)
    if 1 in tables:
        raise SchemaError("the product family starts at arity 2")

    def m_unit(n: int):
        def fallback(key: Key) -> Element:
            if n == 2 and 0 in key:
                other = key[1] if key[0] == 0 else key[0]
                return {other: Fraction(1)}
            return {}
        return fallback

    top = max([nmax] + list(tables))
    maps = {n: _tensor_map(n, 0, basis, tables.get(n, {}), m_unit(n)) for n in range(2, top + 1)}
    return basis, ProductFamily(basis, maps, top)


def load_differential(doc: Mapping, basis: GradedBasis) -> MultiMap:
    if "K" not in doc:
        return MultiMap.zero(1, 1, basis, basis)
    tables = parse_tables(doc, "K", len(basis))
    if set(tables) - {1}:
        raise SchemaError("K is linear (arity 1)")
    try:
        return MultiMap(1, 1, basis, basis, tables.get(1, {}))
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def load_prob_algebra(doc: Mapping, nmax: int) -> ProbAlgebra:
    from .corralg import M_from_m

    basis, obj = load_algebra(doc, nmax)
    if isinstance(obj, ProductFamily):
        obj = M_from_m(basis, obj, nmax)
    return ProbAlgebra(obj.truncated(min(nmax, obj.nmax)) if obj.nmax > nmax else obj,
                       load_differential(doc, basis))


def load_expectation(doc: Mapping, basis: GradedBasis) -> Expectation:
    if "c" not in doc:
        return Expectation(basis, {basis.unit_index: Fraction(1)})
    return Expectation(basis, parse_element(doc["c"], len(basis)))


def load_variables(doc: Mapping, basis: GradedBasis) -> Tuple[GradedBasis, MultiMap]:
    """``variables: [{"name", "image": element}]`` as a linear map from a new space."""
    rows = _require(doc, "variables", list)
    if not rows:
        raise SchemaError("no variables given")
    names, entries, degrees = [], {}, []
    for j, row in enumerate(rows):
        if not isinstance(row, dict):
            raise SchemaError("variables must be objects")
        names.append(_require(row, "name", str))
        image = parse_element(_require(row, "image", list), len(basis))
        degs = {basis.degrees[i] for i in image}
        if len(degs) > 1:
            raise SchemaError(f"variable {names[-1]} is not homogeneous")
        degrees.append(degs.pop() if degs else 0)
        if image:
            entries[(j,)] = image
    V = GradedBasis(tuple(names), tuple(degrees), None)
    return V, MultiMap(1, 0, V, basis, entries)


def load_structure(doc: Mapping, nmax: int):
    from .slinfty import SLInftyStructure

    basis = parse_basis(doc)
    tables = parse_tables(doc, "ell", len(basis))
    top = max([nmax] + list(tables))
    try:
        return SLInftyStructure.from_entries(basis, tables, top)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def read_document(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("the document must be a JSON object")
    return doc


# ---------------------------------------------------------------------------
# emission


def jsonable(obj: Any) -> Any:
    """Exact strings for every rational; polynomials in ``tau`` are rendered as text."""
    from .kernel import UPoly

    if isinstance(obj, Fraction):
        return format_fraction(obj)
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    if isinstance(obj, UPoly):
        return obj.format("tau")
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return str(obj)


def element_rows(elem: Mapping[int, Any], basis: GradedBasis) -> str:
    """``2*x + -1/2*y`` style rendering with basis labels."""
    if not elem:
        return "0"
    parts = []
    for i in sorted(elem):
        c = elem[i]
        parts.append(f"{jsonable(c)}*{basis.labels[i]}")
    return " + ".join(parts)


def map_rows(mp: MultiMap) -> List[dict]:
    """Nonzero canonical entries as table rows."""
    rows = []
    for key, val in mp.items():
        if val:
            rows.append({"arity": mp.arity, "in": ",".join(mp.source.labels[i] for i in key),
                         "out": element_rows(val, mp.target)})
    return rows


# ---------------------------------------------------------------------------
# documents


def basis_document(basis: GradedBasis) -> dict:
    doc: Dict[str, Any] = {"basis": [{"name": n, "degree": d}
                                     for n, d in zip(basis.labels, basis.degrees)]}
    if basis.unit_index is not None:
        doc["unit"] = basis.unit_index
    return doc


def element_document(elem: Mapping[int, Any]) -> List[dict]:
    return [{"index": i, "coeff": format_fraction(c)} for i, c in sorted(elem.items()) if c]


def maps_document(maps: Mapping[int, MultiMap], skip_unit: bool = False) -> List[dict]:
    """Canonical nonzero entries; with ``skip_unit`` words through the unit are left to the tower."""
    blocks = []
    for n in sorted(maps):
        mp = maps[n]
        u = mp.source.unit_index
        entries = []
        for key, val in mp.items():
            if val and not (skip_unit and u is not None and u in key):
                entries.append({"in": list(key), "out": element_document(val)})
        blocks.append({"arity": n, "entries": entries})
    return blocks


def prob_algebra_document(basis: GradedBasis, K: Optional[MultiMap] = None,
                          M: Optional[Mapping[int, MultiMap]] = None,
                          m: Optional[Mapping[int, MultiMap]] = None) -> dict:
    if (M is None) == (m is None):
        raise ValueError("give exactly one of M and m")
    doc = basis_document(basis)
    if M is not None:
        doc["M"] = maps_document({n: mp for n, mp in M.items() if n >= 2}, skip_unit=True)
    else:
        doc["m"] = maps_document(m, skip_unit=True)
    if K is not None:
        doc["K"] = maps_document({1: K})
    return doc


def dumps(doc: Mapping) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"
