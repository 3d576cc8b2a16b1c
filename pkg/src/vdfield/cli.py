"""Batch command surface: field configs in, JSON reports out.

Every report is printed as a single deterministic JSON line: group
elements are arrays of rational strings, series are sorted term lists.
Exit codes: 0 success, 2 contract error, 3 parse error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from fractions import Fraction
from typing import List, Optional

from . import hsolve, newton
from .coarsen import coarsen as coarsen_field
from .diffpoly import DiffPoly, add_conj, comp_conj, dominant, evaluate, mul_conj
from .errors import ConfigError, ParseError, VdfError
from .expr import parse_poly, parse_series
from .gridseries import (
    FieldInstance,
    Generator,
    Series,
    laurent_ddt,
    laurent_tddt_coarse,
    log_fragment,
    transseries_fragment,
)
from .valgroup import INFINITY, GroupElement, PREFIX


# -- field configs ----------------------------------------------------------------


def field_from_config(doc: dict) -> FieldInstance:
    try:
        rank = int(doc["rank"])
        gen_docs = doc["generators"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed field config: {exc}")
    gens = []
    for gd in gen_docs:
        value = GroupElement([Fraction(x) for x in gd["value"]])
        gens.append(Generator(str(gd["name"]), value))
    field = FieldInstance(rank, gens, name=str(doc.get("name", "config")))
    for gd, gen in zip(gen_docs, field.generators):
        gen.logder = parse_series(str(gd["logder"]), field)
    if "shift" in doc:
        declared = GroupElement([Fraction(x) for x in doc["shift"]])
        if not declared <= field.derivation_shift:
            raise ConfigError(
                f"declared shift {declared} exceeds the certified bound "
                f"{field.derivation_shift}"
            )
        field._shift = declared
    return field


def field_to_config(field: FieldInstance) -> dict:
    return {
        "name": field.name,
        "rank": field.rank,
        "generators": [
            {
                "name": g.name,
                "value": g.value.as_strings(),
                "logder": _series_expr(g.logder),
            }
            for g in field.generators
        ],
        "shift": field.derivation_shift.as_strings(),
    }


def _series_expr(f: Series) -> str:
    """Render a series in the expression grammar."""
    if not f.terms:
        return "0"
    parts = []
    for mono, c in f.sorted_terms():
        factors = []
        if c != 1 or mono.is_one():
            factors.append(str(c))
        for q, g in zip(mono.exponents, f.field.generators):
            if q == 0:
                continue
            factors.append(g.name if q == 1 else f"{g.name}^{q}")
        parts.append("*".join(factors))
    return " + ".join(parts)


_BUILTIN_PATTERN = re.compile(r"^(transseries_fragment|log_fragment)\((\d+)\)$")


def load_field(source: str) -> FieldInstance:
    """A field argument is a config path or a built-in name."""
    if source == "laurent_ddt":
        return laurent_ddt()
    if source == "laurent_tddt_coarse":
        return laurent_tddt_coarse()
    m = _BUILTIN_PATTERN.match(source)
    if m:
        depth = int(m.group(2))
        return (transseries_fragment if m.group(1) == "transseries_fragment"
                else log_fragment)(depth)
    try:
        with open(source) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read field config {source!r}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"field config {source!r} is not valid JSON: {exc}")
    return field_from_config(doc)


# -- report helpers ------------------------------------------------------------------


def group_strings(v) -> object:
    if v is INFINITY:
        return "inf"
    return v.as_strings()


def series_report(f: Series) -> dict:
    terms = []
    for mono, c in f.sorted_terms():
        terms.append(
            {
                "coeff": str(c),
                "monomial": [
                    [g.name, str(q)]
                    for g, q in zip(f.field.generators, mono.exponents)
                    if q != 0
                ],
            }
        )
    out = {"terms": terms}
    if f.tau is not INFINITY:
        out["tau"] = group_strings(f.tau)
    return out


def poly_report(P: DiffPoly) -> dict:
    terms = []
    for i in sorted(P.terms):
        terms.append({"index": list(i), "coeff": series_report(P.terms[i])})
    return {"order": P.order, "terms": terms}


def cut_report(cut) -> dict:
    if cut.kind != PREFIX:
        return {"kind": cut.kind}
    return {
        "kind": "prefix",
        "depth": cut.depth,
        "bound": [str(b) for b in cut.bound],
        "inclusive": cut.inclusive,
    }


def _parse_vector(text: str, rank: int) -> GroupElement:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != rank:
        raise VdfError(f"expected {rank} coordinates, got {len(parts)}")
    return GroupElement([Fraction(p.strip()) for p in parts])


# -- subcommands -------------------------------------------------------------------


def _cmd_val(args) -> dict:
    field = load_field(args.field)
    f = parse_series(args.expr, field)
    return {"v": group_strings(f.valuation())}


def _cmd_ddeg(args) -> dict:
    field = load_field(args.field)
    P = parse_poly(args.expr, field)
    data = dominant(P)
    return {"ddeg": data.ddeg, "dwt": data.dwt}


def _cmd_ndeg(args) -> dict:
    field = load_field(args.field)
    P = parse_poly(args.expr, field)
    return {"ndeg": newton.ndeg(P)}


def _cmd_breakpoints(args) -> dict:
    field = load_field(args.field)
    P = parse_poly(args.expr, field)
    return {"breakpoints": [group_strings(b) for b in newton.breakpoints(P)]}


def _cmd_conj(args) -> dict:
    field = load_field(args.field)
    P = parse_poly(args.expr, field)
    by = parse_series(args.by, field)
    if args.kind == "add":
        Q = add_conj(P, by)
    elif args.kind == "mul":
        Q = mul_conj(P, by)
    else:
        Q = comp_conj(P, by)
    return {"kind": args.kind, "result": poly_report(Q)}


def _cmd_eval(args) -> dict:
    field = load_field(args.field)
    P = parse_poly(args.expr, field)
    at = parse_series(args.at, field)
    return {"value": series_report(evaluate(P, at))}


def _cmd_gamma_der(args) -> dict:
    field = load_field(args.field)
    return cut_report(newton.gamma_der(field))


def _cmd_s_der(args) -> dict:
    field = load_field(args.field)
    return {"prefix_len": newton.s_der(field).prefix_len}


def _cmd_coarsen(args) -> dict:
    field = load_field(args.field)
    half = coarsen_field(field, args.prefix_len)
    return field_to_config(half.residue_field)


def _cmd_probe(args) -> dict:
    field = load_field(args.field)
    P = parse_poly(args.expr, field)
    beta = _parse_vector(args.beta, field.rank)
    classes = newton.flex_probe(P, beta, args.samples, seed=args.seed)
    return {
        "classes": [
            {
                "v": group_strings(v),
                "monomial": [
                    [g.name, str(q)]
                    for g, q in zip(field.generators, mono.exponents)
                    if q != 0
                ],
            }
            for v, mono in classes
        ],
        "count": len(classes),
    }


def _solver_field(args):
    if args.op == "B":
        return log_fragment(args.depth)
    return transseries_fragment(args.depth)


def _cmd_solve(args) -> dict:
    field = _solver_field(args)
    if args.op == "A":
        op = hsolve.op_A(field, args.depth)
    elif args.op == "B":
        op = hsolve.op_B(field, args.depth)
    else:
        if not args.a0 or not args.a1:
            raise VdfError("--op custom requires --a0 and --a1")
        op = hsolve.LinearOperator(
            parse_series(args.a0, field), parse_series(args.a1, field)
        )
    rhs = parse_series(args.rhs, field)
    if args.tau:
        tau = _parse_vector(args.tau, field.rank)
    else:
        tau = field.derivation_shift + rhs.valuation() + GroupElement(
            [1] + [0] * (field.rank - 1)
        )
    y, trace = hsolve.solve_linear(op, rhs, tau, max_iter=args.max_iter)
    report = trace.as_report()
    report["solution"] = series_report(y)
    report["tau"] = group_strings(tau)
    return report


def _cmd_demo(args) -> dict:
    c_list = [Fraction(c.strip()) for c in args.c.split(",") if c.strip()]
    tau = None
    if args.tau:
        tau = _parse_vector(args.tau, args.depth + 2)
    return hsolve.demo_nonuniqueness(args.depth, c_list, tau,
                                     max_iter=args.max_iter)


def _cmd_check_bll(args) -> dict:
    tau = None
    if args.tau:
        tau = _parse_vector(args.tau, args.depth + 1)
    return hsolve.check_bll(args.depth, tau, max_iter=args.max_iter)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="vdf",
        description="exact computations in grid-presented valued differential fields",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def with_field(p):
        p.add_argument("--field", required=True,
                       help="config path or built-in name")
        return p

    p = with_field(sub.add_parser("val", help="valuation of a series"))
    p.add_argument("expr")
    p.set_defaults(fn=_cmd_val)

    p = with_field(sub.add_parser("ddeg", help="dominant degree and weight"))
    p.add_argument("expr")
    p.set_defaults(fn=_cmd_ddeg)

    p = with_field(sub.add_parser("ndeg", help="Newton degree"))
    p.add_argument("expr")
    p.set_defaults(fn=_cmd_ndeg)

    p = with_field(sub.add_parser("breakpoints", help="tropical breakpoints"))
    p.add_argument("expr")
    p.set_defaults(fn=_cmd_breakpoints)

    p = with_field(sub.add_parser("conj", help="conjugate a polynomial"))
    p.add_argument("expr")
    p.add_argument("--kind", choices=["add", "mul", "comp"], required=True)
    p.add_argument("--by", required=True)
    p.set_defaults(fn=_cmd_conj)

    p = with_field(sub.add_parser("eval", help="evaluate a polynomial"))
    p.add_argument("expr")
    p.add_argument("--at", required=True)
    p.set_defaults(fn=_cmd_eval)

    p = with_field(sub.add_parser("gamma-der", help="the cut Gamma(der)"))
    p.set_defaults(fn=_cmd_gamma_der)

    p = with_field(sub.add_parser("s-der", help="stabilizer of Gamma(der)"))
    p.set_defaults(fn=_cmd_s_der)

    p = with_field(sub.add_parser("coarsen", help="residue config of a coarsening"))
    p.add_argument("--prefix-len", type=int, required=True)
    p.set_defaults(fn=_cmd_coarsen)

    p = with_field(sub.add_parser("probe", help="flexibility sampling probe"))
    p.add_argument("expr")
    p.add_argument("--beta", required=True, help="comma-separated rationals")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=11)
    p.set_defaults(fn=_cmd_probe)

    p = sub.add_parser("solve", help="first-order linear solve in a fragment")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--op", choices=["A", "B", "custom"], default="A")
    p.add_argument("--a0", help="custom operator: constant part")
    p.add_argument("--a1", help="custom operator: derivative part")
    p.add_argument("--rhs", default="e_x")
    p.add_argument("--tau", help="comma-separated rationals")
    p.add_argument("--max-iter", type=int, default=64)
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("demo", help="non-uniqueness report")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--c", default="0,1", help="comma-separated constants")
    p.add_argument("--tau")
    p.add_argument("--max-iter", type=int, default=128)
    p.set_defaults(fn=_cmd_demo)

    p = sub.add_parser("check-bll", help="solve B(y)=1 and lift along e_x")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--tau")
    p.add_argument("--max-iter", type=int, default=128)
    p.set_defaults(fn=_cmd_check_bll)

    return ap


def run(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        report = args.fn(args)
    except ParseError as exc:
        print(json.dumps({"error": "parse", "message": str(exc)}),
              file=sys.stderr)
        return 3
    except VdfError as exc:
        print(json.dumps({"error": "contract", "message": str(exc)}),
              file=sys.stderr)
        return 2
    print(json.dumps(report))
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
