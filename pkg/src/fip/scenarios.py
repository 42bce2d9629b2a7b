"""Named, reproducible runs of the module operations with an oracle check.

A scenario file::

    scenario v1
    name=my-hat
    operation=hat-transform
    family=families/small.fam          # path, relative to the scenario file
    n=2
    expected=eq1

A ``family`` value starting with ``gen`` is an inline generator, e.g.
``family=gen random seed=4 density=0.4 I=5 U=20``.

Default bounds come from ``FIP_INDEX_BOUND``, ``FIP_UNIVERSE_BOUND`` and
``FIP_STAGE_BOUND`` when set.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

from . import adversary as adv
from . import genericity as gen
from .core import F_PROPERTY, Family, FipError, IntersectionProperty, PropertyKind, UndecidedError
from .fileformats import ParseError, generate, parse_ce, parse_numbers, read_family
from .oracles import brute_force_maximal, brute_is_maximal, brute_property, eq1_violations
from .reductions import (DegenerateSolution, decode_range, encode_range, hat_transform,
                         hat_transform_bounded)
from .replay import fingerprint, replay
from .solvers import (CEEnumeration, audit_permitting, escaping_oracle, replay_permitting,
                      solve_greedy, solve_hyperimmune, solve_permitting)
from .trace import StageTrace

SCENARIO_HEADER = "scenario v1"


class Status(str, Enum):
    PASS = "pass"
    ORACLE_FAILURE = "oracle-failure"
    INPUT_ERROR = "input-error"
    UNDECIDED = "undecided"

    @property
    def exit_code(self) -> int:
        return {"pass": 0, "oracle-failure": 1, "input-error": 2, "undecided": 3}[self.value]


@dataclass(frozen=True)
class Bounds:
    index_bound: int = 5
    universe_bound: int = 20
    stages: int = 200

    @classmethod
    def from_env(cls, env=None) -> "Bounds":
        env = os.environ if env is None else env
        out = {}
        for key, name in (("index_bound", "FIP_INDEX_BOUND"), ("universe_bound", "FIP_UNIVERSE_BOUND"),
                          ("stages", "FIP_STAGE_BOUND")):
            if name in env:
                try:
                    out[key] = int(env[name])
                except ValueError:
                    raise ParseError(f"{name} must be an integer, got {env[name]!r}") from None
        return cls(**out)


@dataclass(frozen=True)
class Scenario:
    name: str
    operation: str
    inputs: dict[str, str] = field(default_factory=dict)
    expected: str | None = None
    base: Path | None = None

    def get(self, key: str, default: str | None = None) -> str:
        if key in self.inputs:
            return self.inputs[key]
        if default is None:
            raise ParseError(f"scenario {self.name}: missing input {key!r}")
        return default

    def int(self, key: str, default: int | None = None) -> int:
        raw = self.get(key, None if default is None else str(default))
        try:
            return int(raw)
        except ValueError:
            raise ParseError(f"scenario {self.name}: {key} must be an integer") from None


@dataclass
class Report:
    name: str
    status: Status
    details: list[str] = field(default_factory=list)
    trace: StageTrace | None = None
    family: Family | None = None

    @property
    def exit_code(self) -> int:
        return self.status.exit_code

    def summary(self) -> str:
        head = f"{self.name}: {self.status.value}"
        return "\n".join([head] + [f"  {d}" for d in self.details])


class OracleFailure(FipError):
    pass


# --- inputs -------------------------------------------------------------------


def load_family(spec: str, bounds: Bounds, base: Path | None = None) -> Family:
    spec = spec.strip()
    if spec.startswith("gen "):
        parts = spec.split()
        params = dict(p.split("=", 1) for p in parts[2:] if "=" in p)
        I = int(params.pop("I", bounds.index_bound))
        U = int(params.pop("U", bounds.universe_bound))
        return generate(parts[1], params, I, U)
    path = Path(spec)
    if base is not None and not path.is_absolute():
        path = base / path
    try:
        return read_family(path)
    except OSError as exc:
        raise ParseError(f"cannot read family file {path}: {exc.strerror}") from None


def family_trace(trace: StageTrace, family: Family, stage: int = 0) -> None:
    """Record a decided family as events that :func:`replay` rebuilds exactly."""
    trace.emit(stage, "markers", sets=family.index_bound)
    holders: dict[int, list[int]] = {}
    for i in range(family.index_bound):
        for x in family.members(i):
            if x % 2:
                holders.setdefault(x, []).append(i)
    for x in sorted(holders):
        trace.emit(stage, "intersect", element=x, sets=holders[x])
    trace.emit(stage, "close", index_bound=family.index_bound, universe_bound=family.universe_bound)


def _check(report: Report, problems: list[str], what: str) -> None:
    if problems:
        report.details.extend(problems[:20])
        raise OracleFailure(f"{what}: {len(problems)} problem(s)")
    report.details.append(f"{what}: ok")


# --- operations ---------------------------------------------------------------


def _hat(sc: Scenario, b: Bounds, rep: Report) -> None:
    a = load_family(sc.get("family"), b, sc.base)
    n = sc.int("n", 2)
    bounded = sc.get("bounded", "false") == "true"
    stages = sc.inputs.get("stages")
    t = StageTrace("hat-transform")
    fn = hat_transform_bounded if bounded else hat_transform
    hat = fn(a, n, int(stages) if stages else None, trace=t)
    rep.trace, rep.family = t, hat
    if sc.expected in (None, "eq1"):
        _check(rep, [f"F={F}" for F in eq1_violations(a, hat, n, exact_size=bounded)], "hat biconditional")


def _range(sc: Scenario, b: Bounds, rep: Report) -> None:
    f = parse_numbers(sc.get("table"), "table")
    prop = IntersectionProperty.parse(sc.get("prop", "F"))
    fam = encode_range(f)
    t = StageTrace("encode-range")
    family_trace(t, fam)
    rep.trace, rep.family = t, fam
    problems = []
    for sol in brute_force_maximal(fam, prop):
        try:
            dec = decode_range(fam, sol, prop)
        except DegenerateSolution:
            continue
        t.emit(1, "decode", chosen=sol, decoded=dec.decoded, exceptions=dec.exceptions)
        if dec.range_estimate != frozenset(f):
            problems.append(f"{sorted(sol)} decodes to {sorted(dec.range_estimate)}")
        limit = prop.n - 1 if prop.kind is PropertyKind.D else 0
        if len(dec.exceptions) > limit:
            problems.append(f"{sorted(sol)} has {len(dec.exceptions)} exceptions")
    _check(rep, problems, "range round trip")


def _requirement_problems(a: Family, J: tuple[int, ...], reqs: list[int]) -> list[str]:
    out = []
    if not brute_property(a, F_PROPERTY, J):
        out.append(f"J={J} lacks F")
    for i in reqs:
        if i not in J and brute_property(a, F_PROPERTY, (*J, i)):
            out.append(f"requirement {i} could still be added")
    return out


def _greedy(sc: Scenario, b: Bounds, rep: Report) -> None:
    a = load_family(sc.get("family"), b, sc.base)
    reqs = parse_numbers(sc.get("requirements", ",".join(map(str, range(a.index_bound)))))
    conds: list[tuple[int, ...]] = []
    J = solve_greedy(a, reqs, sc.int("budget", a.universe_bound), conditions=conds)
    t = StageTrace("solve-greedy")
    for k, sigma in enumerate(conds):
        t.emit(k, "condition", sigma=sigma)
    t.emit(len(conds), "result", J=J.entries)
    rep.trace = t
    rep.details.append(f"J = {list(J.entries)}")
    if J.partial:
        raise UndecidedError("a requirement is unsettled within the budget")
    _check(rep, _requirement_problems(a, tuple(J.entries), reqs), "greedy requirements")


def _hyperimmune(sc: Scenario, b: Bounds, rep: Report) -> None:
    a = load_family(sc.get("family"), b, sc.base)
    steps = sc.int("steps", a.index_bound)
    J = solve_hyperimmune(a, escaping_oracle(a, steps, sc.int("slack", 1)), steps)
    t = StageTrace("solve-hyperimmune")
    for s, j in enumerate(J.entries):
        t.emit(s, "choose", index=j)
    rep.trace = t
    rep.details.append(f"J = {list(J.entries)}")
    if not brute_is_maximal(a, set(J.entries), F_PROPERTY):
        rep.details.append("brute force: not maximal")
        raise OracleFailure("hyperimmune solution is not maximal")
    rep.details.append("maximality: ok")


def _permitting(sc: Scenario, b: Bounds, rep: Report) -> None:
    a = load_family(sc.get("family"), b, sc.base)
    stages = sc.int("stages", b.stages)
    ce = sc.get("ce", "one-per-stage")
    if ce == "one-per-stage":
        w = CEEnumeration.one_per_stage(stages + 1, sc.int("start", 0))
    else:
        path = Path(ce) if sc.base is None else sc.base / ce
        try:
            w = CEEnumeration.from_lists(parse_ce(path.read_text()))
        except OSError as exc:
            raise ParseError(f"cannot read enumeration {path}: {exc.strerror}") from None
    J, st = solve_permitting(a, w, stages)
    rep.trace = st.trace
    rep.details.append(f"J = {list(J.entries)}")
    _check(rep, audit_permitting(replay_permitting(st.trace), w, a), "permitting trace audit")


def _strategies(sc: Scenario) -> list[adv.Strategy]:
    text = sc.inputs.get("strategies")
    if text is None:
        return adv.default_suite()
    if text.startswith("file:"):
        path = Path(text[5:]) if sc.base is None else sc.base / text[5:]
        return adv.parse_strategies(path.read_text())
    return adv.parse_strategies(text.replace("|", "\n"))


def _warmup(sc: Scenario, b: Bounds, rep: Report) -> None:
    fam, t, st = adv.run_warmup(_strategies(sc), sc.int("stages", b.stages))
    rep.trace, rep.family = t, fam
    _check(rep, adv.audit_warmup(st) + adv.progressive_disjointness(t), "warm-up audit")


def _full(sc: Scenario, b: Bounds, rep: Report) -> None:
    fam, t, st = adv.run_full(_strategies(sc), sc.int("stages", b.stages))
    rep.trace, rep.family = t, fam
    audit = adv.audit_full(t, fam)
    _check(rep, [f"{k}: {p}" for k, ps in audit.items() for p in ps], "full-run audit")
    for e, prog in sorted(st.progressive.items()):
        rep.details.append(f"opponent {e}: {len(prog)} progressive stage(s)")


def _generic(sc: Scenario, b: Bounds, rep: Report) -> None:
    a = load_family(sc.get("family"), b, sc.base)
    budget = sc.int("budget", a.universe_bound)
    build = gen.GenericBuild(gen.BinaryString(0))
    g = gen.build_generic(a, targets=gen.all_targets(a, budget), record=build)
    t = StageTrace("generic")
    for k, (i, n, tau, bb) in enumerate(build.steps):
        t.emit(k, "extend", target=i, position=n, tau=tau, bound=bb)
    ex = gen.extract_subfamily(g, a)
    t.emit(len(build.steps), "result", J=ex.j.entries)
    rep.trace = t
    rep.details.append(f"J = {list(ex.j.entries)}")
    if not brute_is_maximal(a, set(ex.j.entries), F_PROPERTY):
        raise OracleFailure("extracted subfamily is not maximal")
    rep.details.append("maximality: ok")


OPERATIONS: dict[str, Callable[[Scenario, Bounds, Report], None]] = {
    "hat-transform": _hat,
    "range-roundtrip": _range,
    "greedy": _greedy,
    "hyperimmune": _hyperimmune,
    "permitting": _permitting,
    "adversary-warmup": _warmup,
    "adversary-full": _full,
    "generic": _generic,
}

ORACLES = {"eq1", "maximality", "round-trip", "trace-invariant", "property"}


def run_scenario(sc: Scenario, bounds: Bounds | None = None) -> Report:
    rep = Report(sc.name, Status.PASS)
    op = OPERATIONS.get(sc.operation)
    if op is None:
        rep.status = Status.INPUT_ERROR
        rep.details.append(f"unknown operation {sc.operation!r}")
        return rep
    if sc.expected is not None and sc.expected not in ORACLES:
        rep.status = Status.INPUT_ERROR
        rep.details.append(f"unknown oracle {sc.expected!r}")
        return rep
    try:
        op(sc, Bounds.from_env() if bounds is None else bounds, rep)
    except OracleFailure as exc:
        rep.status = Status.ORACLE_FAILURE
        rep.details.append(str(exc))
    except UndecidedError as exc:
        rep.status = Status.UNDECIDED
        rep.details.append(str(exc))
    except (ParseError, ValueError, KeyError) as exc:
        rep.status = Status.INPUT_ERROR
        rep.details.append(str(exc))
    except FipError as exc:
        rep.status = Status.ORACLE_FAILURE
        rep.details.append(f"{type(exc).__name__}: {exc}")
    return rep


def determinism_check(sc: Scenario, bounds: Bounds | None = None) -> list[str]:
    """Run twice; traces must match byte for byte and replay to the same family."""
    r1, r2 = run_scenario(sc, bounds), run_scenario(sc, bounds)
    problems = []
    if r1.status is not r2.status:
        problems.append(f"status {r1.status.value} then {r2.status.value}")
    t1 = r1.trace.to_text() if r1.trace else ""
    t2 = r2.trace.to_text() if r2.trace else ""
    if t1 != t2:
        problems.append("traces differ between runs")
    if r1.trace is not None and StageTrace.from_text(t1).to_text() != t1:
        problems.append("trace does not survive a text round trip")
    if r1.family is not None:
        fam, complete = replay(StageTrace.from_text(t1))
        if not complete or fingerprint(fam) != fingerprint(r1.family):
            problems.append("replayed family differs from the run's family")
    return problems


# --- files and the golden set ---------------------------------------------------


def parse_scenario(text: str, base: Path | None = None, source: str | None = None) -> Scenario:
    lines = [(n, ln.split("#", 1)[0].strip()) for n, ln in enumerate(text.splitlines(), start=1)]
    lines = [(n, ln) for n, ln in lines if ln]
    if not lines or lines[0][1] != SCENARIO_HEADER:
        raise ParseError(f"expected '{SCENARIO_HEADER}'", lines[0][0] if lines else None, source)
    fields: dict[str, str] = {}
    for n, ln in lines[1:]:
        if "=" not in ln:
            raise ParseError(f"expected key=value, got {ln!r}", n, source)
        k, v = ln.split("=", 1)
        fields[k.strip()] = v.strip()
    for key in ("name", "operation"):
        if key not in fields:
            raise ParseError(f"missing {key}", source=source)
    name, op = fields.pop("name"), fields.pop("operation")
    expected = fields.pop("expected", None)
    return Scenario(name, op, fields, expected, base)


def read_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    return parse_scenario(p.read_text(), p.parent, str(p))


GOLDEN: tuple[Scenario, ...] = (
    Scenario("hat-eq1", "hat-transform",
             {"family": "gen random seed=7 density=0.35 I=5 U=21", "n": "2"}, "eq1"),
    Scenario("hat-eq1-n3", "hat-transform",
             {"family": "gen random seed=11 density=0.5 I=5 U=21", "n": "3"}, "eq1"),
    Scenario("hat-bounded", "hat-transform",
             {"family": "gen random seed=3 density=0.4 I=5 U=21", "n": "2", "bounded": "true"}, "eq1"),
    Scenario("range-roundtrip", "range-roundtrip", {"table": "1,3,1,0", "prop": "F"}, "round-trip"),
    Scenario("range-roundtrip-dbar2", "range-roundtrip", {"table": "2,2,0,4", "prop": "Dbar2"}, "round-trip"),
    Scenario("range-roundtrip-d2", "range-roundtrip", {"table": "2,2,0,4", "prop": "D2"}, "round-trip"),
    Scenario("greedy", "greedy", {"family": "gen random seed=5 density=0.4 I=6 U=23"}, "property"),
    Scenario("hyperimmune", "hyperimmune", {"family": "gen random seed=9 density=0.4 I=6 U=23"},
             "maximality"),
    Scenario("permitting-invariant", "permitting",
             {"family": "gen random seed=2 density=0.5 I=6 U=23", "stages": "40"}, "trace-invariant"),
    Scenario("adversary-warmup", "adversary-warmup",
             {"strategies": "greedy delay=0|greedy delay=2|silent", "stages": "300"}, "trace-invariant"),
    Scenario("adversary-full", "adversary-full", {"stages": "2000"}, "trace-invariant"),
    Scenario("generic", "generic", {"family": "gen random seed=4 density=0.4 I=6 U=23"}, "maximality"),
)


def golden(name: str) -> Scenario:
    for sc in GOLDEN:
        if sc.name == name:
            return sc
    raise KeyError(name)
