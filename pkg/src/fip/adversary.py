"""The adversarial family: potential sets, trap sets and progressive stages.

Opponents are :class:`Strategy` objects revealing a partial function
``Phi_e`` one argument at a time.  Their values name members of the family
being built, so each opponent doubles as a candidate subfamily ``J`` and its
convergence times ``s_{e,a}`` drive the diagonalisation.

Desk-scale finitisation
-----------------------
* Strings are drawn from a pool: the nonempty prefixes of every opponent's
  revealed values.  Everything the construction says about "every string
  bounded by s" is evaluated on that pool.
* Each string receives one ``e``-potential set, defined the first time the
  string is bounded at substage ``e``.
* Making two sets intersect is idempotent: a fresh odd number is added only
  when the sets do not already meet.

A number enumerated at stage ``t`` is always larger than ``t``, so
``A_{i,s-1}`` agrees with the final ``A_i`` below ``s``.  Boundedness of a
string at a past stage can therefore be read off the current family.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import Family, FipError, IndexMap, StagedSet
from .trace import StageTrace


class StrategyViolation(FipError):
    """An opponent broke the revelation contract."""


class PartialResult(FipError):
    pass


# --- opponents -------------------------------------------------------------


class View:
    """Read-only window on the construction handed to opponents."""

    def __init__(self, state: "AdversaryState") -> None:
        self._st = state

    @property
    def stage(self) -> int:
        return self._st.stage

    def least_common(self, i: int, j: int) -> int | None:
        return self._st.least_common(i, j)

    def neighbours(self, i: int) -> frozenset[int]:
        return frozenset(self._st.adjacent.get(i, ()))

    def trap(self, e: int) -> int | None:
        t = self._st.traps.get(e)
        return None if t is None else t.index

    def members(self, i: int) -> frozenset[int]:
        return frozenset(self._st.members_of(i))

    def revealed(self, e: int) -> tuple[int, ...]:
        return tuple(self._st.revealed.get(e, ()))

    def potential_info(self, i: int) -> tuple[int, tuple[int, ...]] | None:
        """``(c, owner)`` when ``A_i`` is a c-potential set, else None."""
        rec = self._st.potential_index.get(i)
        return None if rec is None else (rec.e, rec.owner)


class Strategy:
    """Base opponent.  ``propose`` returns the value for the next argument or None."""

    name = "strategy"

    def reset(self) -> None:
        pass

    def propose(self, s: int, revealed: Sequence[int], view: View) -> int | None:
        raise NotImplementedError

    def describe(self) -> str:
        return self.name


class Silent(Strategy):
    name = "silent"

    def propose(self, s, revealed, view):
        return None


@dataclass
class Greedy(Strategy):
    """Enumerate the least index ``<= s`` meeting everything enumerated so far below ``s``.

    A value is proposed at stages ``delay, 2*delay + 1, ...`` (every stage when
    ``delay = 0``).  With ``growth > 1`` the gap between proposals grows
    geometrically instead, spacing out the convergence times.
    """

    delay: int = 0
    growth: int = 1
    name: str = "greedy"
    _next: int = field(default=0, init=False, repr=False)
    _gap: int = field(default=1, init=False, repr=False)

    def __post_init__(self) -> None:
        self.reset()

    def reset(self) -> None:
        self._next = self.delay
        self._gap = self.delay + 1

    def describe(self) -> str:
        extra = f" growth={self.growth}" if self.growth != 1 else ""
        return f"greedy delay={self.delay}{extra}"

    def propose(self, s, revealed, view):
        if s < self._next:
            return None
        choice = self._choose(s, revealed, view)
        if choice is not None:
            self._gap = self._gap * self.growth if self.growth > 1 else self.delay + 1
            self._next = s + self._gap
        return choice

    def _choose(self, s, revealed, view) -> int | None:
        if not revealed:
            return 0
        done = set(revealed)
        pool = None
        for v in done:
            nb = {j for j in view.neighbours(v) if j <= s}
            pool = nb if pool is None else pool & nb
        for j in sorted(pool or ()):
            if j in done:
                continue
            if all((lc := view.least_common(j, v)) is not None and lc < s for v in done):
                return j
        return None


@dataclass
class Seeker(Strategy):
    """Collect potential sets level by level.

    Level ``b`` asks for a c-potential set for every ``c <= b``, each owned by
    an extension of the prefix where the level started.  Candidates must meet
    everything enumerated so far below the current stage.
    """

    name: str = "seeker"
    _base: int = field(default=1, init=False, repr=False)
    _level: int = field(default=0, init=False, repr=False)
    _got: set = field(default_factory=set, init=False, repr=False)

    def reset(self) -> None:
        self._base, self._level, self._got = 1, 0, set()

    def describe(self) -> str:
        return "seeker"

    def propose(self, s, revealed, view):
        if not revealed:
            return 0 if s >= 1 else None
        done = set(revealed)
        best = None
        for v in done:
            nb = {j for j in view.neighbours(v) if j <= s and j not in done}
            best = nb if best is None else best & nb
        for j in sorted(best or ()):
            info = view.potential_info(j)
            if info is None:
                continue
            c, owner = info
            if c > self._level or c in self._got or len(owner) < self._base:
                continue
            if tuple(revealed[:len(owner)]) != owner:
                continue
            if all((lc := view.least_common(j, v)) is not None and lc < s for v in done):
                self._got.add(c)
                if len(self._got) == self._level + 1:
                    self._base = len(revealed) + 1
                    self._level += 1
                    self._got = set()
                return j
        return None


@dataclass
class Mirror(Strategy):
    """Re-enumerate opponent ``of``'s values on a slower clock.

    Either one value every ``every`` stages, or value ``a`` no earlier than
    ``at[a]`` (values past the schedule are never revealed).
    """

    of: int = 0
    every: int | None = 100
    at: tuple[int, ...] = ()
    name: str = "mirror"

    def describe(self) -> str:
        if self.at:
            return f"mirror of={self.of} at=" + ",".join(map(str, self.at))
        return f"mirror of={self.of} every={self.every}"

    def propose(self, s, revealed, view):
        a = len(revealed)
        if self.at:
            if a >= len(self.at) or s < self.at[a]:
                return None
        elif (s + 1) % self.every:
            return None
        src = view.revealed(self.of)
        return src[a] if a < len(src) else None


@dataclass
class Script(Strategy):
    """Fixed revelations: ``value`` for argument ``a`` offered from stage ``at`` on."""

    pairs: tuple[tuple[int, int, int], ...] = ()
    name: str = "script"

    def describe(self) -> str:
        return "script " + ",".join(f"{a}:{v}@{t}" for a, v, t in self.pairs)

    def propose(self, s, revealed, view):
        a = len(revealed)
        for arg, value, at in self.pairs:
            if arg == a and s >= at:
                return value
        return None


def parse_strategy(line: str) -> Strategy:
    """``silent`` | ``greedy delay=<d> [growth=<g>]`` | ``seeker`` |
    ``mirror of=<e> every=<m>`` | ``script a:v@t,...``."""
    parts = line.split()
    if not parts:
        raise ValueError("empty strategy line")
    head, rest = parts[0], parts[1:]
    if head == "silent" and not rest:
        return Silent()
    if head == "greedy":
        kw = dict(p.split("=", 1) for p in rest)
        unknown = set(kw) - {"delay", "growth"}
        if unknown:
            raise ValueError(f"unknown greedy parameters {sorted(unknown)}")
        return Greedy(int(kw.get("delay", 0)), int(kw.get("growth", 1)))
    if head == "seeker" and not rest:
        return Seeker()
    if head == "mirror":
        kw = dict(p.split("=", 1) for p in rest)
        if "of" not in kw or len(kw) != 2 or not ({"every", "at"} & set(kw)):
            raise ValueError("mirror needs of=<e> and one of every=<m>, at=<t,...>")
        if "at" in kw:
            at = tuple(int(t) for t in kw["at"].split(","))
            if list(at) != sorted(at):
                raise ValueError("mirror schedule must be nondecreasing")
            return Mirror(int(kw["of"]), None, at)
        every = int(kw["every"])
        if every < 1:
            raise ValueError("mirror cadence must be positive")
        return Mirror(int(kw["of"]), every)
    if head == "script":
        pairs = []
        for item in ",".join(rest).split(","):
            if not item:
                continue
            m = re.fullmatch(r"(\d+):(\d+)@(\d+)", item)
            if not m:
                raise ValueError(f"bad script entry {item!r}")
            pairs.append(tuple(int(g) for g in m.groups()))
        return Script(tuple(pairs))
    raise ValueError(f"unknown strategy {line!r}")


def parse_strategies(text: str) -> list[Strategy]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(parse_strategy(line))
    return out


SUITE_SPEC = """\
mirror of=9 at=100,400,800,1950
mirror of=9 at=150,450,900,1960,1990
silent
greedy delay=5 growth=3
silent
script 0:0@0,1:1@2
script 0:0@3,1:0@5
silent
greedy delay=2 growth=2
seeker
"""


def default_suite() -> list[Strategy]:
    """The fixed ten-opponent suite used by the acceptance run.

    Opponent 9 collects potential sets level by level; opponents 0 and 1
    replay its values late enough for its strings to be bounded, which is
    what drives Step 4.  The schedules are tuned to a 2000-stage run.
    """
    return parse_strategies(SUITE_SPEC)


# --- construction state ----------------------------------------------------


@dataclass
class PotentialRecord:
    e: int
    n: int
    owner: tuple[int, ...]
    label: int          # 1 or 2
    index: int
    stage: int


@dataclass
class TrapRecord:
    index: int
    stage: int
    redefined: bool = False


@dataclass
class AdversaryState:
    strategies: list[Strategy]
    trace: StageTrace
    stage: int = 0
    seen: int = 0
    mentioned: int = 0
    max_index: int = 0
    extra: dict[int, set[int]] = field(default_factory=dict)
    adjacent: dict[int, set[int]] = field(default_factory=dict)
    lc_cache: dict[tuple[int, int], int] = field(default_factory=dict)
    potentials: list[PotentialRecord] = field(default_factory=list)
    by_owner: dict[tuple[int, tuple[int, ...]], PotentialRecord] = field(default_factory=dict)
    potential_index: dict[int, PotentialRecord] = field(default_factory=dict)
    per_e: dict[int, list[PotentialRecord]] = field(default_factory=dict)
    traps: dict[int, TrapRecord] = field(default_factory=dict)
    revealed: dict[int, list[int]] = field(default_factory=dict)
    reveal_stage: dict[int, list[int]] = field(default_factory=dict)
    progressive: dict[int, list[int]] = field(default_factory=dict)
    pool: dict[tuple[int, ...], int] = field(default_factory=dict)   # string -> boundedness threshold
    done: set[tuple[int, tuple[int, ...]]] = field(default_factory=set)
    # strings in the pool from the start, so silent opponents still get potential sets
    background: tuple[tuple[int, ...], ...] = ((0,),)

    def __post_init__(self) -> None:
        for sigma in self.background:
            self.pool.setdefault(tuple(sigma), None)
        for e in range(len(self.strategies)):
            self.revealed[e] = []
            self.reveal_stage[e] = []
            self.progressive[e] = []

    # -- sets ---------------------------------------------------------------

    def members_of(self, i: int) -> set[int]:
        return {2 * i} | self.extra.get(i, set())

    def least_common(self, i: int, j: int) -> int | None:
        if i == j:
            return 2 * i
        key = (i, j) if i < j else (j, i)
        return self.lc_cache.get(key)

    def meets(self, i: int, j: int) -> bool:
        return i == j or self.least_common(i, j) is not None

    def _note_index(self, i: int) -> None:
        self.max_index = max(self.max_index, i)
        self.mentioned = max(self.mentioned, 2 * i, i)

    def _see(self, x: int) -> None:
        self.seen = max(self.seen, x)
        self.mentioned = max(self.mentioned, x)

    def fresh_number(self) -> int:
        x = max(self.seen, self.stage) + 1
        self._see(x)
        return x

    def fresh_index(self) -> int:
        i = self.fresh_number()
        self._note_index(i)
        return i

    def fresh_odd(self) -> int:
        x = max(self.seen, self.stage) + 1
        if x % 2 == 0:
            x += 1
        self._see(x)
        return x

    def intersect(self, i: int, j: int, step: int, substage: int, **why) -> bool:
        if self.meets(i, j):
            return False
        x = self.fresh_odd()
        for k in (i, j):
            self.extra.setdefault(k, set()).add(x)
            self._note_index(k)
        key = (i, j) if i < j else (j, i)
        self.lc_cache[key] = x
        self.adjacent.setdefault(i, set()).add(j)
        self.adjacent.setdefault(j, set()).add(i)
        self.trace.emit(self.stage, "intersect", substage, sets=(i, j), element=x, step=step, **why)
        return True

    # -- strings --------------------------------------------------------------

    def threshold(self, sigma: tuple[int, ...]) -> int | None:
        """Least stage bounding ``sigma`` (None while some pair does not meet)."""
        t = max(len(sigma), max(sigma))
        if len(sigma) > 1:
            t = max(t, 1)
            for u, v in itertools.combinations_with_replacement(sorted(set(sigma)), 2):
                lc = self.least_common(u, v)
                if lc is None:
                    return None
                t = max(t, lc + 1)
        return t

    def bounded(self, sigma: tuple[int, ...], s: int) -> bool:
        if not sigma:
            raise ValueError("bounded strings are nonempty")
        t = self.pool.get(sigma)
        if t is None:
            t = self.threshold(sigma)
            if t is not None and sigma in self.pool:
                self.pool[sigma] = t
        return t is not None and s >= t

    def refresh_pool(self) -> None:
        for seq in self.revealed.values():
            for k in range(1, len(seq) + 1):
                self.pool.setdefault(tuple(seq[:k]), None)

    def pool_strings(self) -> list[tuple[int, ...]]:
        return sorted(self.pool, key=lambda t: (len(t), t))

    # -- opponents ------------------------------------------------------------

    def reveal_round(self) -> None:
        s = self.stage
        view = View(self)
        for e, strat in enumerate(self.strategies):
            seq = self.revealed[e]
            value = strat.propose(s, tuple(seq), view)
            if value is None:
                continue
            if not isinstance(value, int) or value < 0:
                raise StrategyViolation(f"strategy {e} proposed {value!r}")
            a = len(seq)
            bad = [u for u in set(seq) if u != value and not
                   ((lc := self.least_common(u, value)) is not None and lc <= s)]
            if a > s or bad:
                self.trace.emit(s, "withhold", None, e=e, arg=a, value=value,
                                against=tuple(sorted(bad)))
                continue
            seq.append(value)
            self.reveal_stage[e].append(s)
            self._note_index(value)
            self._see(value)
            self.trace.emit(s, "reveal", None, e=e, arg=a, value=value)
        self.refresh_pool()

    def convergence(self, e: int, a: int) -> int | None:
        st = self.reveal_stage.get(e, [])
        return st[a] if a < len(st) else None

    def arg_converging_at(self, e: int, s: int) -> int | None:
        st = self.reveal_stage.get(e, [])
        for a, t in enumerate(st):
            if t == s:
                return a
        return None

    # -- definitions ----------------------------------------------------------

    def define_trap(self, e: int, substage: int) -> None:
        old = self.traps.get(e)
        idx = self.fresh_index()
        self.traps[e] = TrapRecord(idx, self.stage, redefined=old is not None)
        self.trace.emit(self.stage, "define", substage, role="trap", e=e, index=idx,
                        redefine=old is not None)

    def define_potential(self, e: int, owner: tuple[int, ...], substage: int) -> PotentialRecord:
        recs = self.per_e.setdefault(e, [])
        trap = self.traps.get(e)
        label = 1 if trap is not None and trap.index in owner else 2
        rec = PotentialRecord(e, len(recs), owner, label, self.fresh_index(), self.stage)
        recs.append(rec)
        self.potentials.append(rec)
        self.by_owner[(e, owner)] = rec
        self.potential_index[rec.index] = rec
        self.trace.emit(self.stage, "define", substage, role="potential", e=e, n=rec.n,
                        index=rec.index, sigma=owner, label=label)
        return rec

    def totalize(self, substage: int | None) -> None:
        self.trace.emit(self.stage, "totalize", substage, bound=self.mentioned)

    def close(self) -> None:
        self.trace.emit(self.stage, "close", None, index_bound=self.max_index + 1,
                        universe_bound=self.mentioned)

    def family(self) -> Family:
        I, N = self.max_index + 1, self.mentioned
        sets = tuple(StagedSet(i, frozenset(x for x in self.members_of(i) if x <= N),
                               frozenset(), self.stage, N) for i in range(I))
        return Family(sets, N, (0, 0))


# --- full construction -------------------------------------------------------


def _viable_chain_ends(st: AdversaryState, sigma: tuple[int, ...], e: int, a: int,
                       bounds: Sequence[int]) -> list[int]:
    """Lengths of the possible ``sigma_{a-1}`` in chains witnessing viability of ``sigma``.

    Empty when ``sigma`` is not viable.  For ``a = 0`` returns ``[0]`` when
    ``sigma`` alone is a valid chain.
    """
    L = len(sigma)
    entries_upto = [set(sigma[:k]) for k in range(L + 1)]

    def link_ok(b: int, lo: int, hi: int) -> bool:
        # sigma[:hi] enumerates a c-potential set for some tau, sigma[:lo] <= tau < sigma[:hi]
        for c in range(b + 1):
            found = False
            for k in range(lo, hi):
                rec = st.by_owner.get((c, sigma[:k]))
                if rec is not None and rec.index in entries_upto[hi]:
                    found = True
                    break
            if not found:
                return False
        return True

    def bounded_at(k: int, b: int) -> bool:
        return st.bounded(sigma[:k], bounds[b])

    if a == 0:
        return [0] if L == 1 and bounded_at(1, 0) else []
    # reach[b] = set of prefix lengths usable as sigma_b
    reach = {1} if bounded_at(1, 0) else set()
    prev_of: dict[int, set[int]] = {}
    for b in range(a):
        nxt: set[int] = set()
        last = b + 1 == a
        for lo in reach:
            his = [L] if last else range(lo + 1, L)
            for hi in his:
                if hi <= lo or not bounded_at(hi, b + 1):
                    continue
                if link_ok(b, lo, hi):
                    nxt.add(hi)
                    if last:
                        prev_of.setdefault(hi, set()).add(lo)
        reach = nxt
        if not reach:
            return []
    return sorted(prev_of.get(L, ()))


def potential_for(st: AdversaryState, sigma: tuple[int, ...], e: int, lo: int) -> int | None:
    """Least-indexed e-potential set enumerated by sigma owned by some tau with sigma[:lo] <= tau < sigma."""
    best = None
    inside = set(sigma)
    for k in range(lo, len(sigma)):
        rec = st.by_owner.get((e, sigma[:k]))
        if rec is not None and rec.index in inside and (best is None or rec.index < best):
            best = rec.index
    return best


def viable_strings(st: AdversaryState, e: int, a: int) -> dict[tuple[int, ...], int]:
    """Viable strings for ``e`` at ``s_{e,a}`` mapped to ``p_{e,sigma,a}``."""
    bounds = [st.convergence(e, b) for b in range(a + 1)]
    if any(b is None for b in bounds):
        return {}
    out = {}
    for sigma in st.pool_strings():
        if len(sigma) < a + 1:
            continue
        ends = _viable_chain_ends(st, sigma, e, a, bounds)
        if not ends:
            continue
        cands = [p for lo in ends if (p := potential_for(st, sigma, e, lo)) is not None]
        if cands:
            out[sigma] = min(cands)
    return out


def _step1(st: AdversaryState, e: int) -> None:
    s = st.stage
    if e not in st.traps:
        st.define_trap(e, e)
    elif st.convergence(e, 0) == s:
        st.define_trap(e, e)
        for rec in st.per_e.get(e, []):
            if rec.label == 1:
                rec.label = 2
                st.trace.emit(s, "relabel", e, e=e, n=rec.n, index=rec.index, label=2)


def _step2(st: AdversaryState, e: int) -> None:
    s = st.stage
    for sigma in st.pool_strings():
        if (e, sigma) not in st.by_owner and st.bounded(sigma, s):
            st.define_potential(e, sigma, e)


def _step3(st: AdversaryState, e: int) -> None:
    s = st.stage
    trap = st.traps[e].index
    bounded = [sg for sg in st.pool_strings() if st.bounded(sg, s)]
    for rec in st.per_e.get(e, []):
        if rec.stage >= s:
            continue
        k = len(rec.owner)
        for sigma in bounded:
            if len(sigma) < k or sigma[:k] != rec.owner:
                continue
            key = (rec.index, sigma)
            if key in st.done:
                continue
            if rec.label == 2 and trap in sigma:
                continue
            for i in sigma:
                if i != rec.index:
                    st.intersect(rec.index, i, 3, e, e=e, potential=rec.index)
            st.done.add(key)


def _step4(st: AdversaryState, e: int) -> None:
    s = st.stage
    a = st.arg_converging_at(e, s)
    if a is None or a <= e:
        return
    viable = viable_strings(st, e, a)
    if not viable:
        return
    trap = st.traps[e].index
    protected = set(viable.values())
    choices = {}
    for sigma, p in viable.items():
        pos_p = sigma.index(p)
        if st.meets(p, trap):
            return
        pick = None
        for pos in range(pos_p - 1, -1, -1):
            i = sigma[pos]
            if i in protected or st.meets(i, trap):
                continue
            if sigma.index(i) != pos:
                continue
            pick = pos
            break
        if pick is None:
            return
        choices[sigma] = pick
    st.progressive[e].append(s)
    st.trace.emit(s, "progressive", e, e=e, arg=a, viable=len(viable), keep=sorted(protected))
    for sigma, pick in choices.items():
        for i in sigma[:pick + 1]:
            if i != trap:
                st.intersect(trap, i, 4, e, e=e, trap=trap)


def run_full(strategies: Sequence[Strategy], stages: int,
             trace: StageTrace | None = None) -> tuple[Family, StageTrace, AdversaryState]:
    """Run the full construction for ``stages`` stages (0 .. stages-1)."""
    trace = StageTrace("adversary-full") if trace is None else trace
    for strat in strategies:
        strat.reset()
    st = AdversaryState(list(strategies), trace)
    trace.emit(0, "opponents", None, count=len(strategies))
    for s in range(stages):
        st.stage = s
        st.reveal_round()
        for e in range(min(s, len(strategies) - 1) + 1):
            _step1(st, e)
            _step2(st, e)
            _step3(st, e)
            _step4(st, e)
            st.totalize(e)
    st.stage = stages
    st.close()
    return st.family(), trace, st


# --- warm-up -----------------------------------------------------------------


@dataclass
class WarmupTrack:
    potential: int | None = None
    n: int = 0


def run_warmup(strategies: Sequence[Strategy], stages: int,
               trace: StageTrace | None = None) -> tuple[Family, StageTrace, AdversaryState]:
    """Diagonalise against computable enumerations of a maximal subfamily."""
    trace = StageTrace("adversary-warmup") if trace is None else trace
    for strat in strategies:
        strat.reset()
    st = AdversaryState(list(strategies), trace)
    tracks = {e: WarmupTrack() for e in range(len(strategies))}
    trace.emit(0, "opponents", None, count=len(strategies))
    for s in range(stages):
        st.stage = s
        st.reveal_round()
        for e in range(len(strategies)):
            seq = st.revealed[e]
            tr = tracks[e]
            if not seq:
                continue
            if tr.potential is None:
                rec = st.define_potential(e, (), e)
                tr.potential = rec.index
                st.define_trap(e, e)
                st.totalize(e)
                continue
            p, trap = tr.potential, st.traps[e].index
            if p in seq:
                st.progressive[e].append(s)
                st.trace.emit(s, "progressive", e, e=e, potential=p)
                first = seq.index(p)
                for i in seq[:first]:
                    if i != trap:
                        st.intersect(trap, i, 4, e, e=e, trap=trap)
                tr.n += 1
                tr.potential = st.define_potential(e, (), e).index
            else:
                for i in seq:
                    if i != p:
                        st.intersect(p, i, 3, e, e=e, potential=p)
            st.totalize(e)
    st.stage = stages
    st.close()
    return st.family(), trace, st


# --- verification helpers ----------------------------------------------------


def is_bounded(sigma: Sequence[int], s: int, family: Family) -> bool:
    """Whether ``sigma`` is bounded by ``s``, reading ``A_{i,s-1}`` off a final family.

    Valid for families produced here: a number enumerated at stage ``t``
    exceeds ``t``, so the part of ``A_i`` below ``s`` was already present at
    stage ``s - 1``.
    """
    sigma = tuple(sigma)
    if not sigma:
        raise ValueError("bounded strings are nonempty")
    if len(sigma) > s or max(sigma) > s:
        return False
    if len(sigma) == 1:
        return True
    for u, v in itertools.combinations(sorted(set(sigma)), 2):
        if u >= family.index_bound or v >= family.index_bound:
            return False
        if family.least_common((u, v), bound=s - 1) is None:
            return False
    return all(2 * u <= s - 1 for u in sigma)


@dataclass(frozen=True)
class WitnessFunction:
    values: tuple[int, ...]
    chain: tuple[tuple[int, ...], ...]
    partial: bool


@dataclass
class ReplayedRun:
    """What the verification needs from a trace: the family plus potential records."""

    family: Family
    potentials: list[tuple[int, tuple[int, ...], int, int]]   # (e, owner, index, stage)
    last_stage: int

    @classmethod
    def from_trace(cls, trace: StageTrace) -> "ReplayedRun":
        from .replay import replay
        fam, _complete = replay(trace)
        pots = [(ev["e"], tuple(ev["sigma"]), ev["index"], ev.stage)
                for ev in trace.of_kind("define") if ev["role"] == "potential"]
        last = max((ev.stage for ev in trace), default=0)
        return cls(fam, pots, last)

    def least_common(self, i: int, j: int) -> int | None:
        if i >= self.family.index_bound or j >= self.family.index_bound:
            return 2 * i if i == j else None
        return self.family.least_common((i, j))

    def bound_stage(self, sigma: Sequence[int]) -> int | None:
        t = max(len(sigma), max(sigma))
        if len(sigma) > 1:
            t = max(t, 1)
            for u, v in itertools.combinations_with_replacement(sorted(set(sigma)), 2):
                lc = self.least_common(u, v)
                if lc is None:
                    return None
                t = max(t, lc + 1)
        return t


def extract_witness_function(j_prefix: IndexMap | Sequence[int], trace: StageTrace,
                             run: ReplayedRun | None = None) -> WitnessFunction:
    """The function a ``Dbar_2`` solution computes, read off a finite prefix of ``J``."""
    J = tuple(j_prefix.entries if isinstance(j_prefix, IndexMap) else j_prefix)
    if not J:
        return WitnessFunction((), (), True)
    run = ReplayedRun.from_trace(trace) if run is None else run
    defs: dict[tuple[int, ...], list[tuple[int, int, int]]] = {}
    for e, owner, idx, stage in run.potentials:
        defs.setdefault(owner, []).append((e, idx, stage))
    values = [2 * J[0]]
    chain = [J[:1]]
    while True:
        a = len(values) - 1
        base = chain[-1]
        best: tuple[int, int] | None = None
        for L in range(len(base) + 1, len(J) + 1):
            sigma = J[:L]
            need = run.bound_stage(sigma)
            if need is None:
                continue
            inside = set(sigma)
            ok = True
            for b in range(a + 1):
                stages = [stage for k in range(len(base), L)
                          for (e, idx, stage) in defs.get(sigma[:k], ())
                          if e == b and idx in inside]
                if not stages:
                    ok = False
                    break
                need = max(need, min(stages))
            if ok and (best is None or need < best[0]):
                best = (need, L)
        if best is None:
            return WitnessFunction(tuple(values), tuple(chain), True)
        values.append(best[0])
        chain.append(J[:best[1]])


def viability_audit(chain: Sequence[Sequence[int]], bounds: Sequence[int], trace: StageTrace,
                    run: ReplayedRun | None = None) -> list[str]:
    """Check the viability conditions for every link of ``chain`` with the given stage bounds.

    Coded against the replayed trace only, independently of the construction.
    """
    run = ReplayedRun.from_trace(trace) if run is None else run
    problems = []
    if not chain:
        return ["empty chain"]
    if len(chain[0]) != 1:
        problems.append("sigma_0 does not have length 1")
    for b, sigma in enumerate(chain):
        sigma = tuple(sigma)
        if b > 0 and not (len(chain[b - 1]) < len(sigma) and sigma[:len(chain[b - 1])] == tuple(chain[b - 1])):
            problems.append(f"sigma_{b} does not properly extend sigma_{b - 1}")
        t = run.bound_stage(sigma)
        if t is None or t > bounds[b]:
            problems.append(f"sigma_{b} not bounded by {bounds[b]}")
        if b == 0:
            continue
        prev = tuple(chain[b - 1])
        inside = set(sigma)
        for c in range(b):
            hit = any(e == c and idx in inside and len(prev) <= len(owner) < len(sigma)
                      and sigma[:len(owner)] == owner and stage <= bounds[b]
                      for e, owner, idx, stage in run.potentials)
            if not hit:
                problems.append(f"sigma_{b} enumerates no {c}-potential set above sigma_{b - 1}")
    return problems


def audit_full(trace: StageTrace, final: Family | None = None) -> dict[str, list[str]]:
    """Trace-level invariants of an adversary run, keyed by invariant name."""
    out: dict[str, list[str]] = {"freshness": [], "type2": [], "trap-redefinition": [],
                                 "totality": [], "ordering": trace.check_order(),
                                 "marker": []}
    seen = 0
    defined: set[int] = set()
    trap_defs: dict[int, list[int]] = {}
    traps: dict[int, int] = {}
    labels: dict[int, tuple[int, int]] = {}   # index -> (e, label)
    first_reveal: dict[int, int] = {}
    progressive: set[tuple[int, int]] = set()
    mentioned = 0
    for ev in trace:
        s = ev.stage
        seen = max(seen, s)
        if ev.kind == "reveal":
            if ev["arg"] == 0:
                first_reveal[ev["e"]] = s
            seen = max(seen, ev["value"])
            mentioned = max(mentioned, 2 * ev["value"])
        elif ev.kind == "define":
            idx = ev["index"]
            if idx in defined:
                out["freshness"].append(f"index {idx} defined twice")
            if idx <= seen:
                out["freshness"].append(f"index {idx} not fresh at stage {s} (seen {seen})")
            defined.add(idx)
            seen = max(seen, idx)
            mentioned = max(mentioned, 2 * idx)
            if ev["role"] == "trap":
                trap_defs.setdefault(ev["e"], []).append(s)
                traps[ev["e"]] = idx
            else:
                labels[idx] = (ev["e"], ev["label"])
        elif ev.kind == "relabel":
            labels[ev["index"]] = (ev["e"], ev["label"])
        elif ev.kind == "progressive":
            progressive.add((ev["e"], s))
        elif ev.kind == "intersect":
            x = ev["element"]
            if x <= seen:
                out["freshness"].append(f"element {x} not fresh at stage {s}")
            seen = max(seen, x)
            mentioned = max(mentioned, x, *(2 * i for i in ev["sets"]))
            i, j = ev["sets"]
            for p, t in ((i, j), (j, i)):
                if p in labels and labels[p][1] == 2:
                    e = labels[p][0]
                    if traps.get(e) == t and not (ev["step"] == 4 and ev.substage == e
                                                  and (e, s) in progressive):
                        out["type2"].append(f"type-2 set {p} met trap {t} outside step 4 "
                                            f"of an {e}-progressive stage (stage {s})")
        elif ev.kind == "totalize":
            if ev["bound"] < mentioned:
                out["totality"].append(f"totalize bound {ev['bound']} below {mentioned} at stage {s}")
    for e, when in trap_defs.items():
        if len(when) > 2:
            out["trap-redefinition"].append(f"t_{e} defined {len(when)} times")
        if len(when) == 2 and first_reveal.get(e) != when[1]:
            out["trap-redefinition"].append(f"t_{e} redefined at {when[1]}, not at s_{{{e},0}}")
    if final is not None:
        if not final.is_decided():
            out["totality"].append("final family has undecided numbers")
        from .core import marker_violations
        out["marker"].extend(marker_violations(final))
    return out


def audit_warmup(st: AdversaryState) -> list[str]:
    """At every progressive stage some enumerated set is still disjoint from the trap."""
    problems = []
    for e, stages in st.progressive.items():
        trap = st.traps[e].index if e in st.traps else None
        if trap is None:
            continue
        if trap in st.revealed[e]:
            problems.append(f"opponent {e} enumerated its trap")
        if stages and not any(not st.meets(i, trap) for i in st.revealed[e]):
            problems.append(f"t_{e} meets every set opponent {e} enumerated")
    return problems


def progressive_disjointness(trace: StageTrace) -> list[str]:
    """Replay the warm-up trace and check, at each progressive stage, that the
    opponent has an enumerated set the trap does not meet."""
    members: dict[int, set[int]] = {}
    traps: dict[int, int] = {}
    enumerated: dict[int, list[int]] = {}
    problems = []
    progressive: set[tuple[int, int]] = set()
    for ev in trace:
        if ev.kind == "progressive":
            progressive.add((ev.stage, ev["e"]))
        elif ev.kind == "reveal":
            enumerated.setdefault(ev["e"], []).append(ev["value"])
        elif ev.kind == "define" and ev["role"] == "trap":
            traps[ev["e"]] = ev["index"]
        elif ev.kind == "intersect":
            for i in ev["sets"]:
                members.setdefault(i, set()).add(ev["element"])
        elif ev.kind == "totalize" and ev.substage is not None:
            e = ev.substage
            if (ev.stage, e) not in progressive or e not in traps:
                continue
            t = traps[e]
            tm = members.get(t, set()) | {2 * t}
            if all(tm & (members.get(i, set()) | {2 * i}) for i in enumerated.get(e, [])):
                problems.append(f"stage {ev.stage}: t_{e} meets every enumerated set")
    return problems


def claim1_audit(trace: StageTrace) -> dict[int, list[str]]:
    """At each e-progressive stage the protected potential sets of the viable
    strings stay disjoint from ``t_e`` until the next e-progressive stage.

    Returns problems keyed by opponent; opponents without progressive stages
    map to an empty list.
    """
    traps: dict[int, int] = {}
    open_keep: dict[int, set[int]] = {}
    out: dict[int, list[str]] = {}
    for ev in trace:
        if ev.kind == "define" and ev["role"] == "trap":
            traps[ev["e"]] = ev["index"]
        elif ev.kind == "progressive" and ev.get("keep") is not None:
            e = ev["e"]
            out.setdefault(e, [])
            open_keep[e] = set(ev["keep"])
        elif ev.kind == "intersect":
            i, j = ev["sets"]
            for e, keep in open_keep.items():
                t = traps.get(e)
                for p, q in ((i, j), (j, i)):
                    if p == t and q in keep:
                        out[e].append(f"stage {ev.stage}: protected set {q} met t_{e} "
                                      f"before the next progressive stage")
    return out
