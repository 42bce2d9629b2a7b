"""Rebuild a family from a recorded trace."""

from __future__ import annotations

from .core import Family, StagedSet
from .trace import CorruptTrace, StageTrace


def replay(trace: StageTrace) -> tuple[Family, bool]:
    """Return the family a trace describes and whether the trace was complete.

    Only ``intersect`` events add numbers; markers are implicit.  A trace
    missing its ``close`` event is truncated: the family is rebuilt from the
    indices and numbers seen so far and flagged partial.
    """
    extra: dict[int, set[int]] = {}
    top_index = -1
    bound = None
    closed = None
    for ev in trace:
        if ev.kind == "intersect":
            sets = ev["sets"]
            if isinstance(sets, int):
                raise CorruptTrace(f"event {ev.seq}: intersect without a set list")
            for i in sets:
                extra.setdefault(i, set()).add(ev["element"])
                top_index = max(top_index, i)
        elif ev.kind == "define":
            top_index = max(top_index, ev["index"])
        elif ev.kind == "reveal":
            top_index = max(top_index, ev["value"])
        elif ev.kind == "markers":
            top_index = max(top_index, ev["sets"] - 1)
        elif ev.kind == "totalize":
            bound = ev["bound"]
        elif ev.kind == "close":
            closed = (ev["index_bound"], ev["universe_bound"])
    complete = closed is not None
    if complete:
        I, U = closed
    else:
        I = top_index + 1
        seen = [x for s in extra.values() for x in s]
        U = max([bound or 0, 2 * max(I - 1, 0), *seen])
    sets = []
    for i in range(max(I, 1)):
        members = frozenset(x for x in extra.get(i, set()) | {2 * i} if x <= U)
        sets.append(StagedSet(i, members, frozenset(), 0, U))
    return Family(tuple(sets), U, (0, 0)), complete


def fingerprint(family: Family) -> tuple:
    """Extensional content of a decided family, for bit-exact comparisons."""
    return (family.index_bound, family.universe_bound,
            tuple(tuple(sorted(family.members(i))) for i in range(family.index_bound)))
