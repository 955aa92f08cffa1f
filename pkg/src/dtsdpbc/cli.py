"""Command-line front end.

Subcommands cover the full pipeline: parse/echo, transition system, box,
reachability graph, consistency check, the three chain analyses, performance
indices, transient vectors and a one-shot report.  Exit codes: 0 success,
1 user error, 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from fractions import Fraction
from typing import Optional

from . import markov
from .boxes import box_of_static
from .errors import DtsdError, InternalError
from .iso import IsoWitness, find_iso
from .lts import Lts, label_str
from .nets import build_rg, check_safe_clean
from .parser import parse_static
from .semantics import DEFAULT_BUDGET, build_ts
from .syntax import check_regular, enumerate_activities, print_expr

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib


_PARAM_RE = re.compile(r"\$([a-z][a-z0-9_]*)")


def _substitute(text: str, params: dict[str, str]) -> str:
    unbound = sorted(set(_PARAM_RE.findall(text)) - set(params))
    if unbound:
        raise DtsdError("unbound parameters: " + ", ".join(f"${p}" for p in unbound))

    return _PARAM_RE.sub(lambda m: params[m.group(1)], text)


def _parse_params(pairs: list[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for pair in pairs:
        if "=" not in pair:
            raise DtsdError(f"bad parameter binding {pair!r}, expected name=value")
        name, value = pair.split("=", 1)
        if name in out:
            raise DtsdError(f"parameter {name!r} bound twice")
        Fraction(value)  # validates the value early
        out[name] = value
    return out


def _load_expr(args) -> tuple:
    with open(args.input, encoding="utf-8") as handle:
        text = handle.read()
    text = _substitute(text, _parse_params(args.param or []))
    expr = parse_static(text)
    return enumerate_activities(expr)


def _budget(args) -> int:
    if args.budget is not None:
        value = args.budget
    else:
        env = os.environ.get("DTSD_BUDGET")
        value = int(env) if env else DEFAULT_BUDGET
    if value <= 0:
        raise DtsdError(f"budget must be positive, got {value}")
    return value


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _emit_lts(args, lts: Lts) -> None:
    if args.format == "dot":
        _emit(args, lts.to_dot())
    elif args.format == "json":
        _emit(args, json.dumps(lts.to_json_dict(), indent=2) + "\n")
    else:
        lines = [f"{len(lts.states)} states, {len(lts.transitions)} transitions; "
                 f"initial {lts.states[lts.initial].name}"]
        for i, s in enumerate(lts.states):
            lines.append(f"{s.name} [{s.tag.value}] {s.display(100)}")
            for tr in lts.outgoing(i):
                lines.append(f"  --{label_str(tr.label)} : {tr.prob}--> "
                             f"{lts.states[tr.dst].name}")
        _emit(args, "\n".join(lines) + "\n")


def _pmf_lines(lts: Lts, pmf) -> list[str]:
    return [f"{s.name}: {value}" for s, value in zip(lts.states, pmf)]


def _chain_text(chain: markov.ChainModel, pmf) -> str:
    lines = [f"{chain.kind} over {len(chain.state_names)} states "
             f"(initial {chain.state_names[chain.initial]})"]
    for name, row in zip(chain.state_names, chain.tpm):
        lines.append(f"  {name}: [" + ", ".join(str(x) for x in row) + "]")
    lines.append("steady state:")
    lines += [f"  {name}: {value}" for name, value in zip(chain.state_names, pmf)]
    return "\n".join(lines) + "\n"


def _emit_chain(args, chain: markov.ChainModel, pmf) -> None:
    if args.format == "json":
        doc = chain.to_json_dict()
        doc["steady_state"] = {name: str(v)
                               for name, v in zip(chain.state_names, pmf)}
        _emit(args, json.dumps(doc, indent=2) + "\n")
    elif args.format == "csv":
        _emit(args, chain.to_csv())
    else:
        _emit(args, _chain_text(chain, pmf))


def _cmd_parse(args) -> int:
    expr = _load_expr(args)
    report = check_regular(expr)
    if args.format == "json":
        doc = {"canonical": print_expr(expr), "regular": report.ok}
        if not report.ok:
            doc["violation"] = {"path": list(report.path), "reason": report.reason}
        _emit(args, json.dumps(doc, indent=2) + "\n")
    else:
        lines = [print_expr(expr),
                 "regular" if report.ok
                 else f"not regular: {report.reason} (at {'/'.join(report.path)})"]
        _emit(args, "\n".join(lines) + "\n")
    return 0


def _cmd_ts(args) -> int:
    _emit_lts(args, build_ts(_load_expr(args), _budget(args)))
    return 0


def _cmd_box(args) -> int:
    box = box_of_static(_load_expr(args))
    if args.format == "dot":
        _emit(args, box.to_dot())
    else:
        _emit(args, json.dumps(box.to_json_dict(), indent=2) + "\n")
    return 0


def _cmd_rg(args) -> int:
    _emit_lts(args, build_rg(box_of_static(_load_expr(args)), _budget(args)))
    return 0


def _cmd_check_iso(args) -> int:
    expr = _load_expr(args)
    ts = build_ts(expr, _budget(args))
    rg = build_rg(box_of_static(expr), _budget(args))
    result = find_iso(ts, rg)
    if args.format == "json":
        _emit(args, json.dumps(result.to_json_dict(), indent=2) + "\n")
    elif isinstance(result, IsoWitness):
        _emit(args, f"isomorphic ({len(ts.states)} states)\n")
    else:
        _emit(args, f"not isomorphic: {result.reason}\n")
    if isinstance(result, IsoWitness):
        return 0
    raise InternalError(f"semantics disagree: {result.reason}")


def _cmd_smc(args) -> int:
    lts = build_ts(_load_expr(args), _budget(args))
    chain, _ = markov.edtmc(lts)
    psi_star = markov.steady_state(chain)
    if args.format in ("json", "csv"):
        _emit_chain(args, chain, psi_star)
        return 0
    phi = markov.smc_pmf(lts)
    text = _chain_text(chain, psi_star)
    text += "smc steady state:\n" + "\n".join(_pmf_lines(lts, phi)) + "\n"
    _emit(args, text)
    return 0


def _cmd_dtmc(args) -> int:
    lts = build_ts(_load_expr(args), _budget(args))
    chain = markov.dtmc(lts)
    _emit_chain(args, chain, markov.steady_state(chain))
    return 0


def _cmd_rdtmc(args) -> int:
    lts = build_ts(_load_expr(args), _budget(args))
    chain = markov.rdtmc(lts)
    _emit_chain(args, chain, markov.steady_state(chain))
    return 0


def _cmd_transient(args) -> int:
    lts = build_ts(_load_expr(args), _budget(args))
    if args.chain == "dtmc":
        chain = markov.dtmc(lts)
    elif args.chain == "edtmc":
        chain = markov.edtmc(lts)[0]
    else:
        chain = markov.rdtmc(lts)
    vec = markov.transient(chain, args.steps)
    if args.format == "json":
        _emit(args, json.dumps({"chain": chain.kind, "steps": args.steps,
                                "pmf": {n: str(v) for n, v
                                        in zip(chain.state_names, vec)}},
                               indent=2) + "\n")
    else:
        _emit(args, "\n".join(f"{n}: {v}" for n, v
                              in zip(chain.state_names, vec)) + "\n")
    return 0


def _cmd_indices(args) -> int:
    lts = build_ts(_load_expr(args), _budget(args))
    phi = markov.smc_pmf(lts)
    vectors = markov.sojourn(lts)
    with open(args.query, "rb") as handle:
        doc = tomllib.load(handle)
    queries = doc.get("query", [])
    if isinstance(queries, dict):
        queries = [queries]
    results = []
    for query in queries:
        value = markov.evaluate_index(lts, phi, vectors, query)
        results.append((query.get("name") or query["index"], value))
    if args.format == "json":
        _emit(args, json.dumps({name: str(v) for name, v in results},
                               indent=2) + "\n")
    else:
        _emit(args, "\n".join(f"{name} = {value}" for name, value in results) + "\n")
    return 0


def _cmd_report(args) -> int:
    expr = _load_expr(args)
    budget = _budget(args)
    lts = build_ts(expr, budget)
    box = box_of_static(expr)
    rg = build_rg(box, budget)
    iso = find_iso(lts, rg)
    safe = check_safe_clean(box, budget)
    vectors = markov.sojourn(lts)
    phi = markov.smc_pmf(lts)
    phi_dtmc = markov.smc_pmf_via_dtmc(lts)
    phi_rdtmc = markov.smc_pmf_via_rdtmc(lts)
    lines = [f"expression: {print_expr(expr)}",
             f"states: {len(lts.states)} "
             f"(ST {sum(1 for s in lts.states if s.tag.value == 'ST')}, "
             f"WT {sum(1 for s in lts.states if s.tag.value == 'WT')}, "
             f"V {sum(1 for s in lts.states if s.tag.value == 'V')})",
             f"net: {len(box.places)} places, {len(box.transitions)} transitions"
             f"{', ' + str(len(box.clocks)) + ' clocks' if box.clocks else ''}",
             f"semantics isomorphic: {isinstance(iso, IsoWitness)}",
             f"net safe and clean: {bool(safe)}"]
    fmt = lambda v: "inf" if v is None else str(v)
    lines.append("SJ:  " + ", ".join(
        f"{s.name}={fmt(v)}" for s, v in zip(lts.states, vectors.sj)))
    lines.append("VAR: " + ", ".join(
        f"{s.name}={fmt(v)}" for s, v in zip(lts.states, vectors.var)))
    lines.append("steady state (embedded route):  " + ", ".join(
        f"{s.name}={v}" for s, v in zip(lts.states, phi)))
    lines.append("steady state (one-step route):  " + ", ".join(
        f"{s.name}={v}" for s, v in zip(lts.states, phi_dtmc)))
    lines.append("steady state (reduced route):   " + ", ".join(
        f"{s.name}={v}" for s, v in zip(lts.states, phi_rdtmc)))
    agree = phi == phi_dtmc == phi_rdtmc
    lines.append(f"three routes agree: {agree}")
    _emit(args, "\n".join(lines) + "\n")
    if not isinstance(iso, IsoWitness):
        raise InternalError(f"semantics disagree: {iso.reason}")
    if not agree:
        raise InternalError("steady-state routes disagree")
    return 0


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtsd", description="process-algebra performance toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_choices=("text", "json", "dot")):
        p.add_argument("input", help="expression file")
        p.add_argument("-p", "--param", action="append", metavar="NAME=VALUE",
                       help="bind a $parameter to an exact rational")
        p.add_argument("--budget", type=int, default=None,
                       help="state exploration budget (or DTSD_BUDGET)")
        p.add_argument("--format", choices=fmt_choices, default="text")
        p.add_argument("-o", "--output", default=None, help="write to a file")

    common(sub.add_parser("parse", help="echo the canonical form"),
           ("text", "json"))
    common(sub.add_parser("ts", help="build the transition system"))
    common(sub.add_parser("box", help="compile to the net"), ("json", "dot"))
    common(sub.add_parser("rg", help="build the reachability graph"))
    common(sub.add_parser("check-iso", help="check both semantics agree"),
           ("text", "json"))
    common(sub.add_parser("smc", help="embedded chain + steady state"),
           ("text", "json", "csv"))
    common(sub.add_parser("dtmc", help="one-step chain + steady state"),
           ("text", "json", "csv"))
    common(sub.add_parser("rdtmc", help="reduced chain + steady state"),
           ("text", "json", "csv"))
    p = sub.add_parser("transient", help="k-step probability vector")
    common(p, ("text", "json"))
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--chain", choices=("dtmc", "edtmc", "rdtmc"), default="rdtmc")
    p = sub.add_parser("indices", help="evaluate performance indices")
    common(p, ("text", "json"))
    p.add_argument("--query", required=True, help="TOML query file")
    common(sub.add_parser("report", help="full pipeline summary"), ("text",))
    return parser


_COMMANDS = {
    "parse": _cmd_parse,
    "ts": _cmd_ts,
    "box": _cmd_box,
    "rg": _cmd_rg,
    "check-iso": _cmd_check_iso,
    "smc": _cmd_smc,
    "dtmc": _cmd_dtmc,
    "rdtmc": _cmd_rdtmc,
    "transient": _cmd_transient,
    "indices": _cmd_indices,
    "report": _cmd_report,
}


def main(argv: Optional[list[str]] = None) -> int:
    args = _make_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DtsdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
