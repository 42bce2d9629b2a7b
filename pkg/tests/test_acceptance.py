"""Acceptance criteria, one test each, each printing a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fip import adversary as adv
from fip import genericity as gen
from fip.core import F_PROPERTY, FipError, d, dbar, is_maximal
from fip.oracles import brute_force_maximal, brute_is_maximal, eq1_violations
from fip.reductions import DegenerateSolution, decode_range, encode_range, hat_transform, pull_back_solution
from fip.scenarios import GOLDEN, Status, determinism_check, run_scenario
from fip.solvers import (CEEnumeration, DominationOracle, audit_permitting, escaping_oracle,
                         replay_permitting, solve_hyperimmune, solve_permitting)

from conftest import marker_family


def random_family(rng, max_index=5, max_universe=30, min_index=2):
    I = rng.randint(min_index, max_index)
    U = rng.randint(max(2 * (I - 1), 3), max_universe)
    return marker_family(rng, I, U, rng.uniform(0.1, 0.6))


def criterion_1():
    rng = random.Random(1)
    start = time.perf_counter()
    failures = checks = 0
    for _ in range(500):
        a = random_family(rng)
        for n in (2, 3):
            if n > a.index_bound:
                continue
            checks += 1
            if eq1_violations(a, hat_transform(a, n), n):
                failures += 1
    elapsed = time.perf_counter() - start
    return failures == 0 and elapsed < 60, f"{checks} checks, {failures} failures, {elapsed:.1f}s"


def criterion_2():
    rng = random.Random(2)
    failures = solutions = 0
    for _ in range(200):
        a = random_family(rng)
        hat = hat_transform(a, 2)
        for sol in brute_force_maximal(hat, F_PROPERTY):
            solutions += 1
            try:
                back = pull_back_solution(a, hat, sol, 2)
            except FipError:
                failures += 1
                continue
            if not brute_is_maximal(a, back, dbar(2)):
                failures += 1
    return failures == 0, f"200 families, {solutions} hat solutions, {failures} failures"


def criterion_3():
    rng = random.Random(3)
    failures = checked = degenerate = 0
    for _ in range(300):
        f = [rng.randint(0, 5) for _ in range(rng.randint(1, 6))]
        fam = encode_range(f)
        rng_f = frozenset(f)
        for prop in (F_PROPERTY, dbar(2), d(2), d(3)):
            for sol in brute_force_maximal(fam, prop):
                try:
                    dec = decode_range(fam, sol, prop)
                except DegenerateSolution:
                    # a lone bare marker set: must really carry no odd number
                    degenerate += 1
                    if any(x % 2 for i in sol for x in fam.members(i)):
                        failures += 1
                    continue
                checked += 1
                if prop.kind.value == "D":
                    ok = dec.range_estimate == rng_f and len(dec.exceptions) <= prop.n - 1
                else:
                    ok = dec.decoded == rng_f and not dec.exceptions
                failures += not ok
    return failures == 0, (f"300 tables, {checked} solutions decoded, {degenerate} bare-marker "
                           f"solutions set aside, {failures} failures")


def criterion_4():
    rng = random.Random(4)
    failures = zero_cases = 0
    for _ in range(100):
        a = random_family(rng, max_index=6, max_universe=25)
        steps = a.index_bound
        J = solve_hyperimmune(a, escaping_oracle(a, steps), steps)
        if not (J.maximal and is_maximal(a, set(J.entries), F_PROPERTY).maximal):
            failures += 1
        if any(a.least_common((0, i)) is not None for i in range(1, a.index_bound)):
            zero_cases += 1
            J0 = solve_hyperimmune(a, DominationOracle((0,) * steps), steps)
            if set(J0.entries) != {0} or J0.maximal is not False \
                    or brute_is_maximal(a, {0}, F_PROPERTY):
                failures += 1
    return failures == 0, f"100 families, {zero_cases} zero-oracle cases, {failures} failures"


def _varied_enumeration(rng, stages):
    seen, batches = set(), []
    for _ in range(stages + 1):
        b = {rng.randint(0, 3 * stages) for _ in range(rng.randint(1, 3))} - seen
        if not b:
            b = {max(seen, default=-1) + 1}
        seen |= b
        batches.append(sorted(b))
    return CEEnumeration.from_lists(batches)


def criterion_5():
    rng = random.Random(5)
    violations = not_maximal = 0
    for _ in range(100):
        a = random_family(rng, max_index=6, max_universe=25)
        stages = rng.randint(10, 60)
        w = _varied_enumeration(rng, stages)
        J, st = solve_permitting(a, w, stages)
        history = replay_permitting(st.trace)
        violations += len(audit_permitting(history, w, a))
        violations += sum(1 for ev in st.trace.of_kind("snapshot") if ev["witness"] is None)
        violations += history != st.history
        J1, _ = solve_permitting(a, CEEnumeration.one_per_stage(121), 120)
        if not is_maximal(a, set(J1.entries), F_PROPERTY).maximal:
            not_maximal += 1
    return violations == 0 and not_maximal == 0, \
        f"100 runs, {violations} violations, {not_maximal} non-maximal one-per-stage results"


def criterion_6():
    fam, trace, st = adv.run_full(adv.default_suite(), 2000)
    audit = adv.audit_full(trace, fam)
    bad = {k: len(v) for k, v in audit.items() if v}
    withheld = {ev["e"] for ev in trace.of_kind("withhold")}
    run = adv.ReplayedRun.from_trace(trace)
    audited = []
    chain_problems = 0
    for e, prog in sorted(st.progressive.items()):
        if e in withheld or len(prog) < 3:
            continue
        wf = adv.extract_witness_function(st.revealed[e], trace, run)
        chain_problems += len(adv.viability_audit(wf.chain, st.reveal_stage[e], trace, run))
        audited.append((e, len(wf.chain)))
    ok = not bad and chain_problems == 0
    return ok, (f"invariant violations {bad or 0}, opponents audited (e, chain length) {audited}, "
                f"{chain_problems} viability problems")


def criterion_7():
    rng = random.Random(7)
    failures = 0
    for _ in range(100):
        a = random_family(rng, max_index=6, max_universe=25, min_index=1)
        g = gen.build_generic(a, targets=gen.all_targets(a, a.universe_bound))
        ex = gen.extract_subfamily(g, a)
        if not is_maximal(a, set(ex.j.entries), F_PROPERTY).maximal:
            failures += 1
    mono = 0
    for _ in range(1000):
        a = random_family(rng, max_index=4, max_universe=9, min_index=1)
        length = rng.randint(1, 600)
        g = next(gen.random_strings(rng, length + rng.randint(0, 600)))
        if not gen.acceptable_sequence(g, a).extends(gen.acceptable_sequence(g.prefix(length), a)):
            mono += 1
    return failures == 0 and mono == 0, f"100 round trips ({failures} failures), 1000 pairs ({mono} failures)"


def criterion_8():
    problems = []
    for sc in GOLDEN:
        rep = run_scenario(sc)
        if rep.status is not Status.PASS:
            problems.append(f"{sc.name}: {rep.status.value}")
        problems += [f"{sc.name}: {p}" for p in determinism_check(sc)]
    return not problems, f"{len(GOLDEN)} golden scenarios, problems: {problems or 'none'}"


CRITERIA = [
    (1, "hat biconditional suite", criterion_1),
    (2, "reduction pull-back", criterion_2),
    (3, "range round trip", criterion_3),
    (4, "domination escape", criterion_4),
    (5, "permitting audit", criterion_5),
    (6, "adversary trace invariants", criterion_6),
    (7, "genericity round trip", criterion_7),
    (8, "determinism", criterion_8),
]


def _line(num, title, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {num} ({title}): {detail}"


@pytest.mark.parametrize("num, title, fn", CRITERIA, ids=[f"criterion-{c[0]}" for c in CRITERIA])
def test_criterion(num, title, fn, capsys):
    ok, detail = fn()
    with capsys.disabled():
        print("\n" + _line(num, title, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for num, title, fn in CRITERIA:
        ok, detail = fn()
        results.append(ok)
        print(_line(num, title, ok, detail), flush=True)
    sys.exit(0 if all(results) else 1)
