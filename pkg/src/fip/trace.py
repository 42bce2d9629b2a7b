"""Append-only stage traces and their line-oriented serialisation.

Text format, one event per line after the header::

    fip-trace v1 kind=<run kind>
    seq=<k> stage=<s> substage=<e|-> event=<kind> args=<key>=<value>;<key>=<value>...

Values are integers, ``-`` for none, comma-separated integer tuples wrapped
in brackets (``[1,2,3]``) or bare tokens without spaces or ``;``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator

from .core import FipError

HEADER = "fip-trace v1"


class CorruptTrace(FipError):
    pass


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    stage: int
    substage: int | None
    kind: str
    payload: tuple[tuple[str, Any], ...] = ()

    def get(self, key: str, default: Any = None) -> Any:
        for k, v in self.payload:
            if k == key:
                return v
        return default

    def __getitem__(self, key: str) -> Any:
        for k, v in self.payload:
            if k == key:
                return v
        raise KeyError(key)

    @property
    def order(self) -> tuple[int, int, int]:
        return (self.stage, -1 if self.substage is None else self.substage, self.seq)


def _fmt(v: Any) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, (tuple, list, frozenset, set)):
        items = sorted(v) if isinstance(v, (set, frozenset)) else v
        return "[" + ",".join(str(int(x)) for x in items) + "]"
    s = str(v)
    if any(c in s for c in " ;=\n") or not s:
        raise ValueError(f"cannot serialise token {s!r}")
    return s


def _parse(s: str) -> Any:
    if s == "-":
        return None
    if s in ("true", "false"):
        return s == "true"
    if s.startswith("["):
        if not s.endswith("]"):
            raise CorruptTrace(f"bad tuple {s!r}")
        body = s[1:-1]
        return tuple(int(x) for x in body.split(",")) if body else ()
    if s.lstrip("-").isdigit():
        return int(s)
    return s


def _normalise(v: Any) -> Any:
    if isinstance(v, (set, frozenset)):
        return tuple(sorted(v))
    if isinstance(v, list):
        return tuple(v)
    return v


@dataclass
class StageTrace:
    """Owned by a single run; events are only ever appended."""

    run: str = "run"
    events: list[TraceEvent] = field(default_factory=list)

    def emit(self, stage: int, kind: str, substage: int | None = None, **payload: Any) -> TraceEvent:
        ev = TraceEvent(len(self.events), stage, substage, kind,
                        tuple((k, _normalise(v)) for k, v in payload.items()))
        self.events.append(ev)
        return ev

    def __iter__(self) -> Iterator[TraceEvent]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def of_kind(self, *kinds: str) -> list[TraceEvent]:
        return [e for e in self.events if e.kind in kinds]

    def to_text(self) -> str:
        lines = [f"{HEADER} kind={self.run}"]
        for e in self.events:
            args = ";".join(f"{k}={_fmt(v)}" for k, v in e.payload)
            sub = "-" if e.substage is None else str(e.substage)
            lines.append(f"seq={e.seq} stage={e.stage} substage={sub} event={e.kind} args={args}")
        return "\n".join(lines) + "\n"

    def to_json_lines(self) -> str:
        out = [json.dumps({"header": HEADER, "kind": self.run})]
        for e in self.events:
            out.append(json.dumps({"seq": e.seq, "stage": e.stage, "substage": e.substage,
                                   "event": e.kind,
                                   "args": {k: list(v) if isinstance(v, tuple) else v
                                            for k, v in e.payload}}))
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "StageTrace":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith(HEADER):
            raise CorruptTrace("missing trace header")
        if lines[0].lstrip().startswith("{"):
            raise CorruptTrace("json-lines traces are not replayable; use the text format")
        head = lines[0][len(HEADER):].strip()
        run = head.split("=", 1)[1] if head.startswith("kind=") else "run"
        trace = cls(run)
        for n, ln in enumerate(lines[1:], start=2):
            fields = ln.split(" ", 4)
            try:
                kv = dict(f.split("=", 1) for f in fields)
                seq, stage = int(kv["seq"]), int(kv["stage"])
                sub = None if kv["substage"] == "-" else int(kv["substage"])
                kind = kv["event"]
                args = kv.get("args", "")
            except (ValueError, KeyError) as exc:
                raise CorruptTrace(f"line {n}: {ln!r}") from exc
            if seq != len(trace.events):
                raise CorruptTrace(f"line {n}: sequence gap (expected {len(trace.events)})")
            payload = []
            if args:
                for item in args.split(";"):
                    if "=" not in item:
                        raise CorruptTrace(f"line {n}: bad argument {item!r}")
                    k, v = item.split("=", 1)
                    payload.append((k, _parse(v)))
            trace.events.append(TraceEvent(seq, stage, sub, kind, tuple(payload)))
        return trace

    def check_order(self) -> list[str]:
        """Events must be sorted by (stage, substage, seq)."""
        bad = []
        for a, b in zip(self.events, self.events[1:]):
            if b.order < a.order:
                bad.append(f"event {b.seq} (stage {b.stage}, substage {b.substage}) "
                           f"precedes event {a.seq}")
        return bad
