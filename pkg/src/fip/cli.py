"""Command line entry point: ``fip <command> ...``.

Exit codes: 0 pass, 1 oracle failure or negative verdict, 2 input error,
3 undecided at the truncation.  Outputs that are families are written in the
family file format, with the verdict block as ``#`` comment lines so the
output parses back as a family file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence, TextIO

from . import adversary as adv
from . import genericity as gen
from .core import (Family, FipError, IndexMap, IntersectionProperty, UndecidedError,
                   check_property, is_maximal)
from .fileformats import ParseError, format_family, parse_ce, parse_numbers, read_numbers
from .reductions import (DegenerateSolution, NotMaximal, PullBackError, decode_range, encode_range,
                         hat_transform, hat_transform_bounded, unwitnessed)
from .replay import replay
from .scenarios import GOLDEN, Bounds, determinism_check, load_family, read_scenario, run_scenario
from .solvers import (CEEnumeration, DominationOracle, escaping_oracle, solve_greedy,
                      solve_hyperimmune, solve_permitting)
from .trace import CorruptTrace, StageTrace

PASS, FAIL, INPUT, UNDECIDED = 0, 1, 2, 3
SEVERITY = {PASS: 0, UNDECIDED: 1, FAIL: 2, INPUT: 3}


class Output:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.stream: TextIO = sys.stdout

    def note(self, key: str, value: object) -> None:
        print(f"# {key}: {value}", file=self.stream)

    def family(self, fam: Family) -> None:
        path = getattr(self.args, "output", None)
        if path:
            Path(path).write_text(format_family(fam))
            self.note("family written to", path)
        else:
            self.stream.write(format_family(fam))

    def trace(self, trace: StageTrace | None) -> None:
        path = getattr(self.args, "trace", None)
        if not path or trace is None:
            return
        text = trace.to_json_lines() if self.args.format == "json-lines" else trace.to_text()
        Path(path).write_text(text)
        self.note("trace written to", path)

    def index_map(self, J: IndexMap) -> None:
        self.note("J", " ".join(map(str, J.entries)))
        for k, cert in enumerate(J.certificates):
            self.note(f"certificate {k}", f"F={sorted(cert.indices)} a={cert.witness}")
        for n in J.notes:
            self.note("note", n)


def _bounds() -> Bounds:
    return Bounds.from_env()


def _family(spec: str) -> Family:
    return load_family(spec, _bounds())


def _map_status(J: IndexMap) -> int:
    if J.partial:
        return UNDECIDED
    return FAIL if J.maximal is False else PASS


# --- commands -----------------------------------------------------------------


def cmd_check(args, out: Output) -> int:
    fam = _family(args.family)
    prop = IntersectionProperty.parse(args.prop)
    chosen = None if args.chosen is None else parse_numbers(args.chosen, "index list")
    v = check_property(fam, prop, chosen)
    out.note("property", prop)
    out.note("holds", "yes" if v.holds else "no")
    if v.counterexample is not None:
        out.note("counterexample", list(v.counterexample))
    if not v.holds:
        return FAIL
    if args.maximal:
        mv = is_maximal(fam, range(fam.index_bound) if chosen is None else chosen, prop)
        out.note("maximal", "yes" if mv.maximal else f"no (extends by {mv.extending_index})")
        return PASS if mv.maximal else FAIL
    return PASS


def cmd_hat(args, out: Output) -> int:
    a = _family(args.family)
    t = StageTrace("hat-transform")
    fn = hat_transform_bounded if args.bounded else hat_transform
    hat = fn(a, args.n, args.stages, trace=t)
    out.family(hat)
    missing = unwitnessed(a, hat, args.n, exact_size=args.bounded)
    out.note("unwitnessed index sets", len(missing))
    out.trace(t)
    return UNDECIDED if missing else PASS


def cmd_encode(args, out: Output) -> int:
    f = read_numbers(args.table, "table")
    fam = encode_range(f, args.index_bound, args.universe_bound)
    out.family(fam)
    out.note("range", sorted(set(f)))
    return PASS


def cmd_decode(args, out: Output) -> int:
    fam = _family(args.family)
    prop = IntersectionProperty.parse(args.prop)
    chosen = parse_numbers(args.chosen, "index list")
    try:
        dec = decode_range(fam, chosen, prop)
    except DegenerateSolution as exc:
        out.note("degenerate", exc)
        return FAIL
    out.note("range", " ".join(map(str, sorted(dec.decoded))))
    if prop.kind.value == "D":
        out.note("exceptions", " ".join(map(str, sorted(dec.exceptions))))
    return PASS


def cmd_solve(args, out: Output) -> int:
    a = _family(args.family)
    if args.method == "greedy":
        reqs = (parse_numbers(args.requirements, "index list") if args.requirements
                else list(range(a.index_bound)))
        conds: list[tuple[int, ...]] = []
        J = solve_greedy(a, reqs, args.budget, conditions=conds)
        t = StageTrace("solve-greedy")
        for k, sigma in enumerate(conds):
            t.emit(k, "condition", sigma=sigma)
        out.index_map(J)
        out.trace(t)
        return UNDECIDED if J.partial else PASS
    if args.method == "hyperimmune":
        steps = args.stages if args.stages is not None else a.index_bound
        f = (DominationOracle(tuple(read_numbers(args.oracle, "oracle table"))) if args.oracle
             else escaping_oracle(a, steps))
        if not args.oracle:
            out.note("oracle", "f(s) = g(s) + 1, with g truncation-exact")
        J = solve_hyperimmune(a, f, steps)
        t = StageTrace("solve-hyperimmune")
        for s, j in enumerate(J.entries):
            t.emit(s, "choose", index=j)
        out.index_map(J)
        out.note("maximal", "yes" if J.maximal else "no")
        out.trace(t)
        return _map_status(J)
    stages = args.stages if args.stages is not None else _bounds().stages
    if args.ce:
        w = CEEnumeration.from_lists(parse_ce(Path(args.ce).read_text()))
    else:
        w = CEEnumeration.one_per_stage(stages + 1)
    J, st = solve_permitting(a, w, stages)
    out.index_map(J)
    out.note("maximal", "yes" if J.maximal else "no")
    out.trace(st.trace)
    return _map_status(J)


def cmd_adversary(args, out: Output) -> int:
    strategies = (adv.parse_strategies(Path(args.strategies).read_text()) if args.strategies
                  else adv.default_suite())
    stages = args.stages if args.stages is not None else _bounds().stages
    if args.mode == "warmup":
        fam, t, st = adv.run_warmup(strategies, stages)
        problems = adv.audit_warmup(st) + adv.progressive_disjointness(t)
    else:
        fam, t, st = adv.run_full(strategies, stages)
        problems = [f"{k}: {p}" for k, ps in adv.audit_full(t, fam).items() for p in ps]
    out.family(fam)
    for e, prog in sorted(st.progressive.items()):
        out.note(f"opponent {e}", f"{strategies[e].describe()}; progressive at {list(prog)}")
    out.note("violations", len(problems))
    for p in problems[:20]:
        out.note("violation", p)
    out.trace(t)
    return FAIL if problems else PASS


def cmd_generic(args, out: Output) -> int:
    a = _family(args.family)
    if args.action == "build":
        budget = args.budget if args.budget is not None else a.universe_bound
        idx = (parse_numbers(args.targets, "index list") if args.targets else range(a.index_bound))
        targets = [gen.DenseSetQuery(i, budget) for i in idx]
        build = gen.GenericBuild(gen.BinaryString(0))
        g = gen.build_generic(a, targets=targets, record=build)
        t = StageTrace("generic")
        for k, (i, n, tau, b) in enumerate(build.steps):
            t.emit(k, "extend", target=i, position=n, tau=tau, bound=b)
        text = g.to_text() + "\n"
        if args.output:
            Path(args.output).write_text(text)
            out.note("string written to", args.output)
        else:
            out.stream.write(text)
        out.note("met", sorted(build.met))
        out.trace(t)
        return PASS
    g = gen.BinaryString.parse(Path(args.g).read_text())
    ex = gen.extract_subfamily(g, a)
    out.index_map(ex.j)
    for tau in ex.chain:
        out.note("tau", list(tau))
    if ex.j.maximal is not None:
        out.note("maximal", "yes" if ex.j.maximal else "no")
    return FAIL if ex.j.maximal is False else PASS


def cmd_replay(args, out: Output) -> int:
    trace = StageTrace.from_text(Path(args.trace_file).read_text())
    fam, complete = replay(trace)
    out.family(fam)
    out.note("complete", "yes" if complete else "no (truncated trace; partial family)")
    return PASS if complete else UNDECIDED


def cmd_scenario(args, out: Output) -> int:
    if args.action == "list":
        for sc in GOLDEN:
            print(f"{sc.name}\t{sc.operation}\t{sc.expected or '-'}", file=out.stream)
        return PASS
    if args.action == "run":
        names = args.names or [sc.name for sc in GOLDEN]
        by_name = {sc.name: sc for sc in GOLDEN}
        unknown = [n for n in names if n not in by_name]
        if unknown:
            raise ParseError(f"unknown scenario(s): {', '.join(unknown)}")
        scenarios = [by_name[n] for n in names]
    else:
        scenarios = [read_scenario(p) for p in args.names]
    worst = PASS
    for sc in scenarios:
        rep = run_scenario(sc)
        print(rep.summary(), file=out.stream)
        code = rep.exit_code
        if args.determinism and code == PASS:
            problems = determinism_check(sc)
            print(f"  determinism: {'ok' if not problems else '; '.join(problems)}", file=out.stream)
            if problems:
                code = FAIL
        if len(scenarios) == 1:
            out.trace(rep.trace)
        worst = max(worst, code, key=SEVERITY.__getitem__)
    return worst


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--trace", metavar="PATH", help="write the run's event trace here")
    common.add_argument("--format", choices=("text", "json-lines"), default="text",
                        help="trace serialisation (default: text)")
    common.add_argument("-o", "--output", metavar="PATH", help="write the main output here")

    p = argparse.ArgumentParser(prog="fip", description="Finite intersection principle workbench.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="check a property (and maximality)")
    c.add_argument("family")
    c.add_argument("--prop", required=True, help="F, D<n> or Dbar<n>")
    c.add_argument("--chosen", help="index list (default: every index)")
    c.add_argument("--maximal", action="store_true", help="also test maximality")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("hat-transform", parents=[common], help="build the hat family")
    c.add_argument("family")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--stages", type=int)
    c.add_argument("--bounded", action="store_true", help="trigger only on sets of size n+1")
    c.set_defaults(func=cmd_hat)

    c = sub.add_parser("encode-range", parents=[common], help="family encoding the range of f")
    c.add_argument("--table", required=True, help="file with f(0) f(1) ...")
    c.add_argument("--index-bound", type=int)
    c.add_argument("--universe-bound", type=int)
    c.set_defaults(func=cmd_encode)

    c = sub.add_parser("decode-range", parents=[common], help="read the range off a solution")
    c.add_argument("family")
    c.add_argument("--prop", required=True)
    c.add_argument("--chosen", required=True)
    c.set_defaults(func=cmd_decode)

    c = sub.add_parser("solve", parents=[common], help="find a maximal subfamily")
    c.add_argument("method", choices=("greedy", "hyperimmune", "permitting"))
    c.add_argument("--family", required=True)
    c.add_argument("--budget", type=int)
    c.add_argument("--stages", type=int)
    c.add_argument("--requirements")
    c.add_argument("--oracle", help="file with f(0) f(1) ... (hyperimmune)")
    c.add_argument("--ce", help="enumeration file, one stage per line (permitting)")
    c.set_defaults(func=cmd_solve)

    c = sub.add_parser("adversary", parents=[common], help="run the adversarial construction")
    c.add_argument("mode", choices=("warmup", "full"))
    c.add_argument("--strategies", help="strategy file (default: built-in suite)")
    c.add_argument("--stages", type=int)
    c.set_defaults(func=cmd_adversary)

    c = sub.add_parser("generic", parents=[common], help="generic-string solver")
    c.add_argument("action", choices=("build", "extract"))
    c.add_argument("--family", required=True)
    c.add_argument("--targets")
    c.add_argument("--budget", type=int)
    c.add_argument("--g", help="string file (extract)")
    c.set_defaults(func=cmd_generic)

    c = sub.add_parser("replay", parents=[common], help="rebuild a family from a trace")
    c.add_argument("trace_file")
    c.set_defaults(func=cmd_replay)

    c = sub.add_parser("scenario", parents=[common], help="run scenarios")
    c.add_argument("action", choices=("list", "run", "file"))
    c.add_argument("names", nargs="*")
    c.add_argument("--determinism", action="store_true", help="also run twice and compare")
    c.set_defaults(func=cmd_scenario)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return INPUT if exc.code else PASS
    if args.command == "generic" and args.action == "extract" and not args.g:
        print("fip: generic extract needs --g", file=sys.stderr)
        return INPUT
    out = Output(args)
    try:
        return args.func(args, out)
    except (ParseError, CorruptTrace, ValueError, OSError) as exc:
        print(f"fip: input error: {exc}", file=sys.stderr)
        return INPUT
    except (UndecidedError, adv.PartialResult) as exc:
        print(f"fip: undecided: {exc}", file=sys.stderr)
        return UNDECIDED
    except (NotMaximal, PullBackError) as exc:
        print(f"fip: {exc}", file=sys.stderr)
        return FAIL
    except FipError as exc:
        print(f"fip: {type(exc).__name__}: {exc}", file=sys.stderr)
        return FAIL


if __name__ == "__main__":
    sys.exit(main())
