"""Line-oriented input and output formats.

Family files::

    # comments run to the end of a line
    family v1 I=3 U=9
    set 0: 0 1 3
    set 1: 2 3
    set 2: 4
    open 2: 7 9          # optional: numbers of A_2 left undecided

Every index below ``I`` needs exactly one ``set`` line; numbers up to ``U``
that are not listed (and not ``open``) are decided out.  Instead of ``set``
lines a file may hold one generator line:

* ``gen range table=<f(0)>,<f(1)>,...`` the range-encoding family of ``f``
* ``gen common element=<x>``            ``A_i = {2i, x}`` (``x`` odd)
* ``gen disjoint``                      marker sets only
* ``gen random seed=<k> density=<p>``   odd numbers kept independently with probability ``p``

Number lists (function tables, index lists, c.e. batches) accept commas or
whitespace.  A c.e. enumeration file has one line per stage listing the
numbers enumerated at that stage.
"""

from __future__ import annotations

import random
import re
from pathlib import Path
from typing import Iterable

from .core import Family, FipError, StagedSet

FAMILY_HEADER = "family v1"


class ParseError(FipError, ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}".strip())
        self.line = line


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_numbers(text: str, what: str = "number list") -> list[int]:
    out = []
    for tok in re.split(r"[,\s]+", text.strip()):
        if not tok:
            continue
        if not tok.isdigit():
            raise ParseError(f"bad {what} entry {tok!r}")
        out.append(int(tok))
    return out


def _params(tokens: Iterable[str], lineno: int) -> dict[str, str]:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ParseError(f"expected key=value, got {tok!r}", lineno)
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def generate(name: str, params: dict[str, str], I: int, U: int, lineno: int = 0) -> Family:
    from .reductions import encode_range
    try:
        if name == "range":
            return encode_range(parse_numbers(params["table"], "table"), I, U)
        if name == "common":
            x = int(params["element"])
            if x % 2 == 0 or x > U:
                raise ParseError("common element must be odd and at most U", lineno)
            return Family.from_sets([{2 * i, x} for i in range(I)], U)
        if name == "disjoint":
            return Family.from_sets([{2 * i} for i in range(I)], U)
        if name == "random":
            rng = random.Random(int(params["seed"]))
            p = float(params.get("density", "0.3"))
            return Family.from_sets(
                [{2 * i} | {x for x in range(1, U + 1, 2) if rng.random() < p} for i in range(I)], U)
    except KeyError as exc:
        raise ParseError(f"generator {name} is missing parameter {exc.args[0]}", lineno) from None
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"generator {name}: {exc}", lineno) from None
    raise ParseError(f"unknown generator {name!r}", lineno)


def parse_family(text: str, source: str | None = None) -> Family:
    lines = [(n, _strip(ln)) for n, ln in enumerate(text.splitlines(), start=1)]
    lines = [(n, ln) for n, ln in lines if ln]
    if not lines:
        raise ParseError("empty family file", source=source)
    n0, head = lines[0]
    m = re.fullmatch(r"family v1\s+I=(\d+)\s+U=(\d+)", head)
    if not m:
        raise ParseError(f"expected '{FAMILY_HEADER} I=<I> U=<U>'", n0, source)
    I, U = int(m.group(1)), int(m.group(2))
    if I < 1:
        raise ParseError("a family needs at least one set", n0, source)
    if U < 2 * (I - 1):
        raise ParseError(f"U={U} does not cover the marker {2 * (I - 1)}", n0, source)
    members: dict[int, set[int]] = {}
    undecided: dict[int, set[int]] = {}
    gen = None
    for n, ln in lines[1:]:
        if ln.startswith("gen "):
            if gen is not None or members:
                raise ParseError("a generator line must be the only body line", n, source)
            parts = ln.split()
            gen = (parts[1] if len(parts) > 1 else "", _params(parts[2:], n), n)
            continue
        m = re.fullmatch(r"(set|open)\s+(\d+)\s*:(.*)", ln)
        if not m:
            raise ParseError(f"cannot parse {ln!r}", n, source)
        kind, i = m.group(1), int(m.group(2))
        if i >= I:
            raise ParseError(f"index {i} outside 0..{I - 1}", n, source)
        try:
            nums = parse_numbers(m.group(3), "element")
        except ParseError as exc:
            raise ParseError(str(exc), n, source) from None
        bad = [x for x in nums if x > U]
        if bad:
            raise ParseError(f"elements {bad} exceed U={U}", n, source)
        if gen is not None:
            raise ParseError("set lines cannot follow a generator", n, source)
        target = members if kind == "set" else undecided
        if kind == "set" and i in members:
            raise ParseError(f"set {i} listed twice", n, source)
        target.setdefault(i, set()).update(nums)
    if gen is not None:
        return generate(gen[0], gen[1], I, U, gen[2])
    missing = [i for i in range(I) if i not in members]
    if missing:
        raise ParseError(f"no set line for indices {missing}", source=source)
    sets = []
    for i in range(I):
        inn = frozenset(members[i])
        und = undecided.get(i, set())
        if inn & und:
            raise ParseError(f"set {i}: {sorted(inn & und)} both listed and open", source=source)
        if und:
            out = frozenset(x for x in range(U + 1) if x not in inn and x not in und)
            sets.append(StagedSet(i, inn, out, 0))
        else:
            sets.append(StagedSet(i, inn, frozenset(), 0, U))
    witness = next(((i, min(members[i])) for i in range(I) if members[i]), None)
    return Family(tuple(sets), U, witness)


def format_family(family: Family) -> str:
    lines = [f"{FAMILY_HEADER} I={family.index_bound} U={family.universe_bound}"]
    for i in range(family.index_bound):
        s = family.sets[i]
        inn = sorted(x for x in s.decided_in if x <= family.universe_bound)
        lines.append(f"set {i}: " + " ".join(map(str, inn)))
        if s.decided_upto(family.universe_bound):
            continue
        gaps = [x for x in range(family.universe_bound + 1) if s.status(x) is None]
        if gaps:
            lines.append(f"open {i}: " + " ".join(map(str, gaps)))
    return "\n".join(lines) + "\n"


def read_family(path: str | Path) -> Family:
    p = Path(path)
    return parse_family(p.read_text(), str(p))


def parse_ce(text: str) -> list[list[int]]:
    batches = []
    for n, raw in enumerate(text.splitlines(), start=1):
        if raw.split("#", 1)[0].strip() == "" and "#" in raw:
            continue
        try:
            batches.append(parse_numbers(_strip(raw), "enumeration"))
        except ParseError as exc:
            raise ParseError(str(exc), n) from None
    while batches and not batches[-1]:
        batches.pop()
    return batches


def read_numbers(path: str | Path, what: str = "number list") -> list[int]:
    text = "\n".join(_strip(ln) for ln in Path(path).read_text().splitlines())
    return parse_numbers(text, what)
