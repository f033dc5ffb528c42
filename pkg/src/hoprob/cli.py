"""Command-line front end.

Every subcommand builds a report dictionary (tables, checks and a short text
summary), prints it as JSON or CSV and optionally writes it to ``--out``.
Exit status: 0 pass, 1 validation failure, 2 schema error, 3 cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence

from . import jsonio
from .kernel import CapExceeded, Report, ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_SCHEMA, EXIT_CAP = 0, 1, 2, 3
MAX_NMAX = 12
MAX_DEGREE_CAP = 40
MAX_ORDER = 10
DESCENDANT_SAMPLE_WEIGHT = 4


class Run:
    """Accumulates the report of one subcommand."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.params = {k: v for k, v in sorted(vars(args).items())
                       if k not in ("handler", "out", "format", "command")}
        self.tables: Dict[str, List[dict]] = {}
        self.checks: Dict[str, dict] = {}
        self.summary: List[str] = []

    def table(self, name: str, rows: List[dict]) -> None:
        self.tables[name] = rows

    def check(self, name: str, ok: bool, detail: Optional[Any] = None) -> None:
        entry: Dict[str, Any] = {"ok": bool(ok)}
        if isinstance(detail, Report):
            entry["checked"] = sum(detail.checked.values())
            if detail.failures:
                entry["witness"] = detail.failures[0]
        elif detail is not None:
            entry["detail"] = detail
        self.checks[name] = entry

    def note(self, line: str) -> None:
        self.summary.append(line)

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.checks.values())

    def to_dict(self) -> dict:
        return {"command": self.command, "params": self.params,
                "status": "pass" if self.ok else "fail",
                "tables": self.tables, "checks": self.checks, "summary": self.summary}


# ---------------------------------------------------------------------------
# output


def render_json(report: dict) -> str:
    return json.dumps(jsonio.jsonable(report), indent=2, sort_keys=True) + "\n"


def _csv_block(rows: List[dict]) -> str:
    buf = io.StringIO()
    if rows:
        fields = list(rows[0])
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: jsonio.jsonable(v) for k, v in row.items()})
    return buf.getvalue()


def render_csv(report: dict) -> str:
    parts = []
    for name, rows in report["tables"].items():
        parts.append(f"# {name}\n" + _csv_block(rows))
    for name, entry in report["checks"].items():
        line = f"# check {name}: {'pass' if entry['ok'] else 'fail'}"
        if "witness" in entry:
            line += " witness=" + json.dumps(jsonio.jsonable(entry["witness"]), sort_keys=True)
        parts.append(line + "\n")
    parts.extend(f"# {line}\n" for line in report["summary"])
    parts.append(f"# status: {report['status']}\n")
    return "".join(parts)


def emit(report: dict, fmt: str, out_dir: Optional[str], stream) -> None:
    text = render_json(report) if fmt == "json" else render_csv(report)
    stream.write(text)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
            fh.write(render_json(report))
        for name, rows in report["tables"].items():
            with open(os.path.join(out_dir, f"{name}.csv"), "w", encoding="utf-8") as fh:
                fh.write(_csv_block(rows))
        with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(report["summary"] + [f"status: {report['status']}"]) + "\n")


def error_report(kind: str, message: str, witness: Optional[dict] = None) -> dict:
    out: Dict[str, Any] = {"status": "error", "kind": kind, "message": message}
    if witness:
        out["witness"] = witness
    return out


# ---------------------------------------------------------------------------
# helpers


def _fraction_arg(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"{text!r} is not an exact rational") from exc


def _check_caps(args: argparse.Namespace) -> None:
    if args.nmax < 1 or args.nmax > MAX_NMAX:
        raise CapExceeded(f"--nmax must lie in 1..{MAX_NMAX}")
    if getattr(args, "order", None) is not None and not 0 <= args.order <= MAX_ORDER:
        raise CapExceeded(f"--order must lie in 0..{MAX_ORDER}")
    if getattr(args, "degree_cap", None) is not None and args.degree_cap > MAX_DEGREE_CAP:
        raise CapExceeded(f"--degree-cap must be at most {MAX_DEGREE_CAP}")


def _poly_rows(family, nmax: int) -> List[dict]:
    rows = []
    for n in range(1, nmax + 1):
        for key, val in family.maps[n - 1].items():
            if val:
                rows.append({"arity": n, "in": ",".join(family.source.labels[i] for i in key),
                             "out": " + ".join(f"({jsonio.jsonable(c)})*{family.target.labels[i]}"
                                               for i, c in sorted(val.items()))})
    return rows


def _sequence_rows(values: Sequence[Any], column: str, start: int = 1) -> List[dict]:
    return [{"n": n, column: v} for n, v in enumerate(values, start=start)]


# ---------------------------------------------------------------------------
# built-in corpora


def _one_variable_pipeline(run: Run, R, op, args: argparse.Namespace) -> None:
    from .cumulants import cumulant_sequence
    from .descend import descendant_structure
    from .randomvar import flow_certificate
    from .realize import coinvariant_moments, derive_mgf_ode, ode_residual

    moments = coinvariant_moments(R, args.max_moment)
    run.table("moments", _sequence_rows(moments, "moment", start=0))
    run.table("cumulants", _sequence_rows(cumulant_sequence(moments[1:]), "cumulant"))
    odes = [(m, derive_mgf_ode(op, m)) for m in range(1, 3)]
    odes = [(m, ode) for m, ode in odes if ode is not None]
    if not odes:
        run.check("mgf ode", False, "no relation of order 1 or 2")
    for m, ode in odes:
        residual = ode_residual(ode, moments)
        run.check(f"order {m} mgf ode annihilates the moment series", not any(residual),
                  {"orders checked": len(residual)})
        run.note(f"MGF ODE: {ode.format()}")
    run.table("mgf_ode", [{"order": m, "equation": ode.format()} for m, ode in odes])
    L = descendant_structure(R.prob, args.nmax)
    rows = []
    for n in range(2, min(args.nmax, 3) + 1):
        for key, val in L.l(n).items():
            weight = sum(R.mono_weight(R.monos[i]) for i in key)
            if val and weight <= min(R.A.cap, DESCENDANT_SAMPLE_WEIGHT):
                rows.append({"arity": n, "in": ",".join(R.basis.labels[i] for i in key),
                             "out": jsonio.element_rows(val, R.basis)})
    run.table("descendant", rows)
    cert = flow_certificate(R, args.nmax)
    run.table("flow", _poly_rows(cert.family, args.nmax))
    run.check("flow endpoint is a morphism", cert.report.ok, cert.report)
    run.note(f"moments through n={args.max_moment} by coinvariant reduction at degree cap {R.A.cap}")


def cmd_gaussian(args: argparse.Namespace) -> Run:
    """Gaussian corpus: moments, cumulants, ODE, descendant and flow."""
    from .realize import gaussian_operator, gaussian_realization

    run = Run("gaussian", args)
    if args.sigma2 <= 0:
        raise ValidationError("sigma2 must be positive", {"identity": "sigma2 > 0"})
    cap = args.degree_cap if args.degree_cap is not None else max(args.max_moment, 12)
    if args.max_moment > cap:
        raise CapExceeded(f"moment {args.max_moment} lies beyond the degree cap {cap}")
    R = gaussian_realization(args.sigma2, cap, args.nmax)
    _one_variable_pipeline(run, R, gaussian_operator(args.sigma2), args)
    return run


def cmd_semicircle(args: argparse.Namespace) -> Run:
    """Semicircle corpus: moments, cumulants, ODE, descendant and flow."""
    from .realize import semicircle_operator, semicircle_realization

    run = Run("semicircle", args)
    cap = args.degree_cap if args.degree_cap is not None else max(args.max_moment, 14)
    if args.max_moment > cap:
        raise CapExceeded(f"moment {args.max_moment} lies beyond the degree cap {cap}")
    R = semicircle_realization(cap, args.nmax)
    _one_variable_pipeline(run, R, semicircle_operator(), args)
    return run


# ---------------------------------------------------------------------------
# file-driven commands


def _algebra_from_doc(doc: dict, nmax: int):
    from .corralg import M_from_m, ProductFamily

    basis, obj = jsonio.load_algebra(doc, nmax)
    if isinstance(obj, ProductFamily):
        obj = M_from_m(basis, obj, max(nmax, obj.nmax))
    return obj


def cmd_check(args: argparse.Namespace) -> Run:
    """Validate an algebra, product family or sL-infinity structure."""
    from .corralg import ProductFamily, check_correlation_algebra, check_product_family
    from .slinfty import check_sl_infinity

    run = Run("check", args)
    doc = jsonio.read_document(args.file)
    if "ell" in doc:
        L = jsonio.load_structure(doc, args.nmax)
        report = check_sl_infinity(L, min(args.nmax, L.nmax))
        run.check("sl-infinity relations", report.ok, report)
        run.note(f"sL-infinity structure of dimension {len(L.basis)} checked through arity {L.nmax}")
        return run
    basis, obj = jsonio.load_algebra(doc, args.nmax)
    if isinstance(obj, ProductFamily):
        report = check_product_family(obj, seed=args.seed)
        run.check("product family constraints", report.ok, report)
        if not report.ok:
            return run
        from .corralg import M_from_m
        obj = M_from_m(basis, obj, obj.nmax, seed=args.seed)
    report = check_correlation_algebra(obj, seed=args.seed)
    run.check("correlation algebra", report.ok, report)
    if report.ok and "K" in doc:
        from .cumulants import ProbAlgebra
        ProbAlgebra(obj, jsonio.load_differential(doc, basis))
        run.check("pointed differential", True)
    run.note(f"algebra of dimension {len(basis)} checked through arity {obj.nmax}")
    return run


def cmd_descend(args: argparse.Namespace) -> Run:
    """Descendant sL-infinity structure of an algebra with differential."""
    from .descend import descendant_structure
    from .slinfty import check_sl_infinity

    run = Run("descend", args)
    P = jsonio.load_prob_algebra(jsonio.read_document(args.file), args.nmax)
    L = descendant_structure(P, args.nmax)
    rows = []
    for n in range(1, args.nmax + 1):
        rows.extend(jsonio.map_rows(L.l(n)))
    run.table("descendant", rows)
    report = check_sl_infinity(L)
    run.check("sl-infinity relations", report.ok, report)
    return run


def cmd_transfer(args: argparse.Namespace) -> Run:
    """Minimal model of the descendant structure."""
    from .descend import descendant_structure
    from .slinfty import check_morphism, check_retract, transfer_minimal

    run = Run("transfer", args)
    P = jsonio.load_prob_algebra(jsonio.read_document(args.file), args.nmax)
    L = descendant_structure(P, args.nmax)
    Lh, phi, data = transfer_minimal(L)
    run.table("cohomology", [{"index": i, "name": Lh.basis.labels[i], "degree": Lh.basis.degrees[i]}
                             for i in range(len(Lh.basis))])
    rows = []
    for n in range(1, args.nmax + 1):
        rows.extend(jsonio.map_rows(Lh.l(n)))
    run.table("minimal_brackets", rows)
    run.table("quasi_isomorphism", [r for n in range(1, args.nmax + 1) for r in jsonio.map_rows(phi.map(n))])
    retract = check_retract(data, L)
    run.check("retract data", retract.ok, retract)
    morph = check_morphism(phi, Lh, L, unital=False)
    run.check("transferred morphism", morph.ok, morph)
    run.check("formal (all transferred brackets vanish)", not rows)
    return run


def _space_from_doc(doc: dict, nmax: int):
    from .randomvar import RandomVarSpace
    from .slinfty import SLMorphism

    P = jsonio.load_prob_algebra(doc, nmax)
    V, phi1 = jsonio.load_variables(doc, P.basis)
    for key, val in phi1.items():
        if P.K.apply([val]):
            raise ValidationError("a random variable is not closed", {"identity": "K x = 0",
                                                                       "variable": V.labels[key[0]]})
    return P, RandomVarSpace(V, SLMorphism.linear(phi1, nmax)), jsonio.load_expectation(doc, P.basis)


def cmd_flow(args: argparse.Namespace) -> Run:
    """Flow degree-0 random variables to their cumulants."""
    from .randomvar import integrable_solve

    run = Run("flow", args)
    P, space, c = _space_from_doc(jsonio.read_document(args.file), args.nmax)
    kappa, eta, family = integrable_solve(space, P, c)
    run.table("cumulants", [{"in": ",".join(space.V.labels[i] for i in key), "cumulant": val.get(0, 0)}
                            for n in range(1, args.nmax + 1) for key, val in kappa.maps[n - 1].items()])
    run.table("homotopy", [r for n in range(1, args.nmax + 1) for r in jsonio.map_rows(eta.map(n))])
    run.table("flow", _poly_rows(family, args.nmax))
    run.note("the solver verified that the flow endpoint is scalar")
    return run


def cmd_law(args: argparse.Namespace) -> Run:
    """Moments and cumulants of random variables."""
    from .randomvar import check_space, law_consistent, law_of_space

    run = Run("law", args)
    P, space, c = _space_from_doc(jsonio.read_document(args.file), args.nmax)
    report = check_space(space, P)
    run.check("space of random variables", report.ok, report)
    law = law_of_space(space, P, c)
    rows = []
    for n in range(1, args.nmax + 1):
        for key, val in law.moments.maps[n - 1].items():
            rows.append({"in": ",".join(space.V.labels[i] for i in key),
                         "moment": val.get(0, Fraction(0)),
                         "cumulant": law.cumulants.value(*key)})
    run.table("law", rows)
    run.check("moments are the partition expansion of the cumulants", law_consistent(law))
    return run


def cmd_flat(args: argparse.Namespace) -> Run:
    """Connection, flat coordinates and generating function."""
    from .flatgeo import (
        coefficient_table,
        connection_from_algebra,
        flat_coordinates,
        mgf_assemble,
        verify_flat_coordinates,
        verify_flatness,
    )

    run = Run("flat", args)
    order = args.order
    doc = jsonio.read_document(args.file)
    A = _algebra_from_doc(doc, order + 3)
    if A.nmax < order + 3:
        raise CapExceeded(f"order {order} needs products up to arity {order + 3}")
    basis = A.basis
    connection = connection_from_algebra(A, order + 1)
    coords = flat_coordinates(A, order + 2, verify=False)
    run.table("connection", coefficient_table(
        {f"{basis.labels[a]},{basis.labels[b]}->{basis.labels[c]}": s.truncate(order)
         for (a, b, c), s in sorted(connection.series.items())}, basis))
    run.table("flat_coordinates", coefficient_table(
        {basis.labels[c]: coords[c].truncate(order) for c in range(len(basis))}, basis))
    flat = verify_flatness(connection, order)
    run.check("connection identities", flat.ok, flat)
    coord = verify_flat_coordinates(coords, connection, A, order)
    run.check("flat coordinate identities", coord.ok, coord)
    iota = jsonio.load_expectation(doc, basis).values
    result = mgf_assemble(A, iota, order, connection, coords)
    run.table("mgf", coefficient_table({"Z": result.Z.truncate(order)}, basis))
    run.check("mgf differential equations", result.ok, result.report)
    run.note(f"property Q: {'yes' if connection.property_q else 'no'}")
    return run


def cmd_clt(args: argparse.Namespace) -> Run:
    """Cumulants of normalized iid sums."""
    from .cumulants import clt_scaling, cumulant_sequence, moment_sequence, scaled_sum_cumulants

    run = Run("clt", args)
    doc = jsonio.read_document(args.file)
    if ("moments" in doc) == ("cumulants" in doc):
        raise jsonio.SchemaError("give exactly one of 'moments' and 'cumulants'")
    key = "moments" if "moments" in doc else "cumulants"
    raw = doc[key]
    if not isinstance(raw, list) or not raw:
        raise jsonio.SchemaError(f"{key} must be a nonempty list")
    values = [jsonio.parse_coeff(v) for v in raw]
    if len(values) > MAX_NMAX:
        raise CapExceeded(f"at most {MAX_NMAX} terms are supported")
    moments = values if key == "moments" else moment_sequence(values)
    kappas = cumulant_sequence(moments) if key == "moments" else values
    sizes = doc.get("N", [4, 9, 16])
    if not isinstance(sizes, list) or not all(isinstance(N, int) for N in sizes):
        raise jsonio.SchemaError("N must be a list of integers")
    rows, agree = [], True
    for N in sizes:
        try:
            direct = scaled_sum_cumulants(moments, N)
        except ValueError as exc:
            raise ValidationError(str(exc), {"identity": "perfect square", "N": N}) from exc
        for n in range(1, len(kappas) + 1):
            scaled = clt_scaling(kappas, N, n)
            agree &= scaled == direct[n - 1]
            rows.append({"N": N, "n": n, "scaled": scaled, "direct": direct[n - 1]})
    run.table("clt", rows)
    run.check("scaling matches the explicit iid sum", agree)
    return run


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--nmax", type=int, default=4, help="arity cap")
    common.add_argument("--degree-cap", type=int, default=None, help="polynomial degree cap")
    common.add_argument("--order", type=int, default=6, help="series truncation order")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    common.add_argument("--out", default=None, help="directory for report files")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog="hoprob", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gaussian", parents=[common], help="Gaussian corpus")
    p.add_argument("--sigma2", type=_fraction_arg, default=Fraction(1))
    p.add_argument("--max-moment", type=int, default=10)
    p.set_defaults(handler=cmd_gaussian)

    p = sub.add_parser("semicircle", parents=[common], help="semicircle corpus")
    p.add_argument("--max-moment", type=int, default=12)
    p.set_defaults(handler=cmd_semicircle)

    handlers: Dict[str, Callable[[argparse.Namespace], Run]] = {
        "check": cmd_check, "descend": cmd_descend, "transfer": cmd_transfer, "flow": cmd_flow,
        "flat": cmd_flat, "law": cmd_law, "clt": cmd_clt}
    for name, handler in handlers.items():
        p = sub.add_parser(name, parents=[common], help=(handler.__doc__ or name).splitlines()[0])
        p.add_argument("file", help="JSON input")
        p.set_defaults(handler=handler)
    return parser


def main(argv: Optional[Sequence[str]] = None, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    args = build_parser().parse_args(argv)
    try:
        _check_caps(args)
        run = args.handler(args)
    except jsonio.SchemaError as exc:
        stream.write(render_json(error_report("schema", str(exc))))
        return EXIT_SCHEMA
    except CapExceeded as exc:
        stream.write(render_json(error_report("cap", str(exc))))
        return EXIT_CAP
    except ValidationError as exc:
        stream.write(render_json(error_report("validation", str(exc), exc.witness)))
        return EXIT_VALIDATION
    emit(run.to_dict(), args.format, args.out, stream)
    return EXIT_OK if run.ok else EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
