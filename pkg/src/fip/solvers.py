"""Oracle-driven constructions of F-maximal subfamilies.

* :func:`solve_greedy` - forcing with conditions ``sigma`` whose last entry
  bounds a common witness of the earlier entries.
* :func:`solve_hyperimmune` - the subfamily guided by a function escaping
  the witness-bound function :func:`compute_g`.
* :func:`solve_permitting` - copies ``<i, n>`` of indices enumerated into a
  finite set ``M_s`` under permission from a c.e. enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .core import (
    F_PROPERTY,
    Family,
    FipError,
    IndexMap,
    TrivialFamily,
    UndecidedError,
    WitnessCertificate,
    is_maximal,
    require_nontrivial,
)
from .trace import StageTrace


class FreshnessViolation(FipError):
    """The c.e. enumeration failed to enumerate something new at some stage."""


def pair(i: int, n: int) -> int:
    """Cantor pairing; strictly increasing in each argument."""
    return (i + n) * (i + n + 1) // 2 + n


def unpair(code: int) -> tuple[int, int]:
    w = 0
    while (w + 1) * (w + 2) // 2 <= code:
        w += 1
    n = code - w * (w + 1) // 2
    return w - n, n


def _prefix_certificates(a: Family, entries: Sequence[int]) -> tuple[WitnessCertificate, ...]:
    certs = []
    for k in range(1, len(entries) + 1):
        c = a.certificate(entries[:k])
        if c is None:
            break
        certs.append(c)
    return tuple(certs)


# --- forcing ---------------------------------------------------------------


def is_condition(a: Family, sigma: Sequence[int]) -> bool:
    """Some number ``<= sigma[-1]`` lies in every ``A_{sigma[k]}``, ``k < |sigma| - 1``."""
    if not sigma:
        return False
    body, bound = sigma[:-1], sigma[-1]
    if bound > a.universe_bound:
        bound = a.universe_bound
    return a.least_common(body, bound=bound) is not None


def extends_condition(tau: Sequence[int], sigma: Sequence[int]) -> bool:
    """``tau <= sigma`` in the forcing order: the body of tau extends the body of sigma."""
    body_t, body_s = tuple(tau[:-1]), tuple(sigma[:-1])
    return body_t[:len(body_s)] == body_s


JumpHook = Callable[[Family, tuple[int, ...], int], tuple[int, ...]]


def no_jump(a: Family, sigma: tuple[int, ...], e: int) -> tuple[int, ...]:
    return sigma


def solve_greedy(a: Family, requirements: Iterable[int], budget: int | None = None,
                 start: tuple[int, int] | None = None, jump_hook: JumpHook = no_jump,
                 conditions: list[tuple[int, ...]] | None = None) -> IndexMap:
    """Meet the density requirement for each index in ``requirements`` in turn.

    ``budget`` caps the witness search; a requirement that finds no witness
    below a budget smaller than the universe bound is unsettled and the
    result is flagged partial.  ``conditions`` collects every ``sigma_k``.
    """
    if start is None:
        start = require_nontrivial(a)
    i0, w0 = start
    if a.sets[i0].status(w0) is not True:
        raise TrivialFamily(f"{w0} is not a member of A_{i0}")
    U = a.universe_bound
    budget = U if budget is None else budget
    sigma: tuple[int, ...] = (i0, w0)
    trail = [sigma]
    partial = False
    notes = []
    for e in requirements:
        a._check_index(e)
        hooked = jump_hook(a, sigma, e)
        if hooked != sigma:
            if not (is_condition(a, hooked) and extends_condition(hooked, sigma)):
                raise FipError(f"jump hook returned {hooked}, not an extension of {sigma}")
            sigma = hooked
            trail.append(sigma)
        body = sigma[:-1]
        if e in body:
            trail.append(sigma)
            continue
        w = a.least_common(body + (e,), bound=min(budget, U))
        if w is None:
            if budget < U:
                partial = True
                notes.append(f"requirement {e} unsettled below budget {budget}")
            trail.append(sigma)
            continue
        sigma = body + (e, w)
        trail.append(sigma)
    if conditions is not None:
        conditions.extend(trail)
    entries = sigma[:-1]
    return IndexMap(entries, _prefix_certificates(a, entries), partial=partial, notes=tuple(notes))


# --- domination ------------------------------------------------------------


def compute_g(a: Family, s: int) -> int:
    """Least ``n`` bounding a witness for every meeting ``F`` within ``0..s``.

    At a finite truncation the search over ``F`` is exhaustive, so the value
    is exact relative to the truncation.
    """
    if not a.members(0):
        raise TrivialFamily("A_0 must be nonempty")
    pool = range(min(s, a.index_bound - 1) + 1)
    full = (1 << (a.universe_bound + 1)) - 1
    g = 0
    # depth-first over subsets, carrying the running intersection
    stack = [(0, full)]
    while stack:
        nxt, m = stack.pop()
        for j in range(nxt, len(pool)):
            mm = m & a.mask(pool[j])
            if mm:
                low = (mm & -mm).bit_length() - 1
                g = max(g, low)
                stack.append((j + 1, mm))
    return g


@dataclass(frozen=True)
class DominationOracle:
    f: tuple[int, ...]

    def __call__(self, s: int) -> int:
        if not 0 <= s < len(self.f):
            raise UndecidedError(f"oracle undefined at {s} (window {len(self.f)})")
        return self.f[s]


def solve_hyperimmune(a: Family, f: DominationOracle | Sequence[int], steps: int | None = None) -> IndexMap:
    """``J(0) = 0``; ``J(s+1)`` is the least new ``i <= s`` meeting the current
    intersection below ``f(s)``, and 0 when there is none."""
    if not isinstance(f, DominationOracle):
        f = DominationOracle(tuple(f))
    if not a.members(0):
        raise TrivialFamily("A_0 must be nonempty")
    if steps is None:
        steps = len(f.f)
    J = [0]
    current = a.mask(0)
    for s in range(steps):
        bound_mask = (1 << (min(f(s), a.universe_bound) + 1)) - 1 if f(s) >= 0 else 0
        used = set(J)
        chosen = 0
        for i in range(min(s, a.index_bound - 1) + 1):
            if i in used:
                continue
            if current & a.mask(i) & bound_mask:
                chosen = i
                break
        J.append(chosen)
        current &= a.mask(chosen)
    entries = tuple(J)
    verdict = is_maximal(a, set(entries), F_PROPERTY)
    notes = () if verdict else (f"not maximal at the truncation: index {verdict.extending_index} fits",)
    return IndexMap(entries, _prefix_certificates(a, entries), maximal=verdict.maximal, notes=notes)


def escaping_oracle(a: Family, steps: int, slack: int = 1) -> DominationOracle:
    """``f(s) = g(s) + slack``: pointwise above the witness-bound function."""
    return DominationOracle(tuple(compute_g(a, s) + slack for s in range(steps)))


# --- permitting ------------------------------------------------------------


@dataclass(frozen=True)
class CEEnumeration:
    """Stagewise approximation of a c.e. set: ``W_s`` is the union of ``batches[0..s]``."""

    batches: tuple[frozenset[int], ...]

    @classmethod
    def from_lists(cls, batches: Iterable[Iterable[int]]) -> "CEEnumeration":
        return cls(tuple(frozenset(b) for b in batches))

    @classmethod
    def one_per_stage(cls, stages: int, start: int = 0) -> "CEEnumeration":
        """``start, start+1, ...``: the least unused number at every stage."""
        return cls(tuple(frozenset({start + s}) for s in range(stages + 1)))

    def snapshot(self, s: int) -> frozenset[int]:
        if s >= len(self.batches):
            raise UndecidedError(f"enumeration known only up to stage {len(self.batches) - 1}")
        out: set[int] = set()
        for b in self.batches[:s + 1]:
            out |= b
        return frozenset(out)

    def new_at(self, s: int) -> frozenset[int]:
        """``W_s - W_{s-1}``."""
        seen: set[int] = set()
        for b in self.batches[:s]:
            seen |= b
        return frozenset(self.batches[s] - seen)

    def validate(self, stages: int) -> None:
        if len(self.batches) < stages + 1:
            raise FreshnessViolation(f"need {stages + 1} stages of enumeration, got {len(self.batches)}")
        seen = set(self.batches[0])
        for s in range(1, stages + 1):
            fresh = self.batches[s] - seen
            if not fresh:
                raise FreshnessViolation(f"W_{s} - W_{s - 1} is empty")
            seen |= self.batches[s]


def changed_below(old: frozenset[int], new: frozenset[int], m: int) -> bool:
    """Whether ``W`` restricted to ``0..m`` changed (restriction includes ``m``)."""
    return any(x <= m for x in old ^ new)


@dataclass
class PermittingState:
    family: Family
    w: CEEnumeration
    M: frozenset[int] = frozenset({0})
    stage: int = 0
    history: list[frozenset[int]] = field(default_factory=list)
    trace: StageTrace = field(default_factory=lambda: StageTrace("permitting"))

    def __post_init__(self) -> None:
        if not self.history:
            self.history.append(self.M)
            self.trace.emit(0, "insert", index=0, copy=0, code=pair(0, 0))
            self.trace.emit(0, "snapshot", M=self.M, witness=self.witness())

    def copies(self) -> dict[int, int]:
        out = {}
        for code in self.M:
            i, n = unpair(code)
            if i in out:
                raise FipError(f"two copies of {i} in M_{self.stage}")
            out[i] = code
        return out

    def witness(self) -> int | None:
        return self.family.least_common(sorted(self.copies()))

    def ell(self, i: int, s: int, copies: dict[int, int]) -> int | None:
        cur = self.family.mask(i) & ((1 << (min(s, self.family.universe_bound) + 1)) - 1)
        best = None
        for k in sorted(copies):
            cur &= self.family.mask(k)
            if not cur:
                break
            best = k
        return best

    def step(self) -> None:
        s = self.stage
        a = self.family
        old_w, new_w = self.w.snapshot(s), self.w.snapshot(s + 1)
        fresh = new_w - old_w
        if not fresh:
            raise FreshnessViolation(f"W_{s + 1} - W_{s} is empty")
        self.trace.emit(s + 1, "enumerate", elements=fresh)
        copies = self.copies()
        chosen = None
        for i in range(min(s, a.index_bound - 1) + 1):
            if i in copies:
                continue
            ell = self.ell(i, s, copies)
            if ell is None:
                continue
            if any(ell < j < i for j in copies):
                continue
            blockers = [c for j, c in copies.items() if j > ell]
            if all(changed_below(old_w, new_w, c) for c in blockers):
                chosen = (i, ell)
                break
        if chosen is None:
            self.trace.emit(s + 1, "hold")
            newM = self.M
        else:
            i, ell = chosen
            removed = sorted(c for j, c in copies.items() if j > ell)
            floor = max(min(fresh), max(self.M) + 1)
            n = 0
            while pair(i, n) < floor:
                n += 1
            code = pair(i, n)
            for c in removed:
                j, m = unpair(c)
                self.trace.emit(s + 1, "remove", index=j, copy=m, code=c)
            self.trace.emit(s + 1, "permit", index=i, ell=ell, code=code)
            self.trace.emit(s + 1, "insert", index=i, copy=n, code=code)
            newM = (self.M - set(removed)) | {code}
        self.M = frozenset(newM)
        self.stage = s + 1
        self.history.append(self.M)
        self.trace.emit(s + 1, "snapshot", M=self.M, witness=self.witness())

    def result(self) -> IndexMap:
        entries = tuple(sorted(self.copies()))
        verdict = is_maximal(self.family, set(entries), F_PROPERTY)
        notes = () if verdict else (f"not maximal at the truncation: index {verdict.extending_index} fits",)
        return IndexMap(entries, _prefix_certificates(self.family, entries),
                        maximal=verdict.maximal, notes=notes)


def solve_permitting(a: Family, w: CEEnumeration, stages: int) -> tuple[IndexMap, PermittingState]:
    if not a.members(0):
        raise TrivialFamily("A_0 must be nonempty")
    w.validate(stages)
    st = PermittingState(a, w)
    for _ in range(stages):
        st.step()
    return st.result(), st


def audit_permitting(history: Sequence[frozenset[int]], w: CEEnumeration,
                     a: Family | None = None) -> list[str]:
    """Every violation of the permitting rule, the copy discipline and the
    intersection certificate along a run."""
    problems = []
    for s, M in enumerate(history):
        if 0 not in M:
            problems.append(f"<0,0> missing from M_{s}")
        idx = [unpair(c)[0] for c in M]
        if len(idx) != len(set(idx)):
            problems.append(f"an index has two copies in M_{s}")
        if a is not None and a.least_common(sorted(set(idx))) is None:
            problems.append(f"M_{s} has empty intersection")
    for s in range(len(history) - 1):
        old_w, new_w = w.snapshot(s), w.snapshot(s + 1)
        if not new_w - old_w:
            problems.append(f"W_{s + 1} - W_{s} empty")
        for m in history[s] ^ history[s + 1]:
            if not changed_below(old_w, new_w, m):
                problems.append(f"M changed at {m} between stages {s} and {s + 1} without permission")
    return problems


def replay_permitting(trace: StageTrace) -> list[frozenset[int]]:
    """Rebuild ``M_0, M_1, ...`` from insert/remove events alone."""
    M: set[int] = set()
    history: list[frozenset[int]] = []
    for ev in trace:
        if ev.kind == "insert":
            M.add(ev["code"])
        elif ev.kind == "remove":
            M.discard(ev["code"])
        elif ev.kind == "snapshot":
            history.append(frozenset(M))
    return history

