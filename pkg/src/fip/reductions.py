"""Hat transforms between intersection principles and the range-encoding family."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import (
    F_PROPERTY,
    Family,
    FipError,
    IntersectionProperty,
    PropertyKind,
    StagedSet,
    dbar,
    is_maximal,
    require_nontrivial,
)
from .trace import StageTrace


class NotMaximal(FipError):
    pass


class PullBackError(FipError):
    """The pulled-back subfamily failed its own postcondition."""


class DegenerateSolution(FipError):
    """A maximal solution that carries no information about the range."""


@dataclass
class HatTransformState:
    source: Family
    n: int
    exact_size: bool = False
    next_odd: int = 1
    stage: int = 0
    members: list[set[int]] = field(default_factory=list)
    triggered: list[tuple[int, frozenset[int]]] = field(default_factory=list)
    trace: StageTrace | None = None

    def __post_init__(self) -> None:
        if not self.members:
            self.members = [{2 * i} for i in range(self.source.index_bound)]

    def _witnessed(self, group: tuple[int, ...], s: int) -> bool:
        return self.source.least_common(group, bound=s) is not None

    def triggering_sets(self, s: int) -> list[frozenset[int]]:
        """The sets F of this stage, smallest first and lexicographic within a size."""
        pool = range(min(s, self.source.index_bound - 1) + 1)
        sizes = [self.n + 1] if self.exact_size else range(self.n, len(pool) + 1)
        out = []
        pair_ok: dict[tuple[int, ...], bool] = {}
        for m in sizes:
            for F in itertools.combinations(pool, m):
                ok = True
                for G in itertools.combinations(F, self.n):
                    if G not in pair_ok:
                        pair_ok[G] = self._witnessed(G, s)
                    if not pair_ok[G]:
                        ok = False
                        break
                if ok:
                    out.append(frozenset(F))
        return out

    def step(self) -> None:
        s = self.stage
        Fs = self.triggering_sets(s)
        if not Fs:
            if self.trace is not None:
                self.trace.emit(s, "complement", element=self.next_odd)
            self.next_odd += 2
        for F in Fs:
            code = self.next_odd
            for i in F:
                self.members[i].add(code)
            self.triggered.append((s, F))
            if self.trace is not None:
                self.trace.emit(s, "intersect", element=code, sets=F)
            self.next_odd += 2
        self.stage += 1

    def target(self) -> Family:
        I = self.source.index_bound
        U = max(2 * (I - 1), self.next_odd - 2, 0)
        sets = tuple(StagedSet(i, frozenset(self.members[i]), frozenset(), self.stage, U)
                     for i in range(I))
        return Family(sets, U, (0, 0))


def _prepare(a: Family, n: int) -> None:
    if n < 2:
        raise ValueError("n must be at least 2")
    require_nontrivial(a)


def hat_state(a: Family, n: int, stages: int, exact_size: bool = False,
              trace: StageTrace | None = None) -> HatTransformState:
    _prepare(a, n)
    st = HatTransformState(a, n, exact_size, trace=trace)
    if trace is not None:
        trace.emit(0, "markers", sets=a.index_bound)
    for _ in range(stages):
        st.step()
    if trace is not None:
        t = st.target()
        trace.emit(st.stage, "totalize", bound=t.universe_bound)
        trace.emit(st.stage, "close", index_bound=t.index_bound, universe_bound=t.universe_bound)
    return st


def hat_transform(a: Family, n: int, stages: int | None = None,
                  trace: StageTrace | None = None) -> Family:
    """Run the hat construction for ``stages`` stages.

    Odd codes come from a single global counter, so each triggered ``F`` gets
    its own fresh odd number even when stages overlap.  The default stage
    budget, ``max(I, U + 1)``, lets every witness of the source be seen.
    """
    if stages is None:
        stages = default_stages(a)
    return hat_state(a, n, stages, trace=trace).target()


def hat_transform_bounded(a: Family, n: int, stages: int | None = None,
                          trace: StageTrace | None = None) -> Family:
    """Variant triggered only by sets with exactly ``n + 1`` members."""
    if stages is None:
        stages = default_stages(a)
    return hat_state(a, n, stages, exact_size=True, trace=trace).target()


def default_stages(a: Family) -> int:
    return max(a.index_bound, a.universe_bound + 1)


def unwitnessed(a: Family, hat: Family, n: int, exact_size: bool = False) -> list[tuple[int, ...]]:
    """Index sets whose n-subsets all meet in ``a`` but which have no common element in ``hat``.

    Empty once the stage budget was large enough.
    """
    I = a.index_bound
    sizes = [n + 1] if exact_size else range(n, I + 1)
    out = []
    for m in sizes:
        for F in itertools.combinations(range(I), m):
            if all(a.least_common(G) is not None for G in itertools.combinations(F, n)) \
                    and hat.least_common(F) is None:
                out.append(F)
    return out


def pull_back_solution(a: Family, hat: Family, hat_chosen: Iterable[int], n: int,
                       bounded: bool = False) -> frozenset[int]:
    """Turn a maximal solution of the hat family into a ``Dbar_n`` solution of ``a``.

    ``hat_chosen`` must be maximal in ``hat`` for F (or for ``Dbar_{n+1}`` when
    ``bounded``).  The same indices are returned after checking that they
    form a maximal ``Dbar_n`` subfamily of ``a`` on the truncation.
    """
    chosen = frozenset(hat_chosen)
    hat_prop = dbar(n + 1) if bounded else F_PROPERTY
    try:
        verdict = is_maximal(hat, chosen, hat_prop)
    except FipError as exc:
        raise NotMaximal(f"{sorted(chosen)} is not a {hat_prop} subfamily of the hat family") from exc
    if not verdict:
        raise NotMaximal(f"{sorted(chosen)} extends by index {verdict.extending_index} in the hat family")
    target = dbar(n)
    try:
        back = is_maximal(a, chosen, target)
    except FipError as exc:
        raise PullBackError(f"pull-back of {sorted(chosen)} lacks {target}") from exc
    if not back:
        raise PullBackError(f"pull-back of {sorted(chosen)} extends by {back.extending_index} "
                            f"for {target}")
    return chosen


# --- range encoding --------------------------------------------------------


@dataclass(frozen=True)
class RangeFamilySpec:
    f: tuple[int, ...]

    @property
    def range(self) -> frozenset[int]:
        return frozenset(self.f)

    def first_hit(self, i: int) -> int | None:
        """Least ``b`` with ``f(b) = i``."""
        for b, v in enumerate(self.f):
            if v == i:
                return b
        return None

    def members(self, i: int, upto: int) -> set[int]:
        out = {2 * i} if 2 * i <= upto else set()
        b = self.first_hit(i)
        if b is not None:
            out.update(x for x in range(2 * b + 1, upto + 1, 2))
        return out


def encode_range(f: Sequence[int], index_bound: int | None = None,
                 universe_bound: int | None = None) -> Family:
    """``A_i = {2i} | {2a+1 : f(b) = i for some b <= a}``, decided on ``0..U``.

    Defaults: ``I = max(f) + 1`` and ``U`` large enough that every range set
    contains ``2(D-1)+1`` for the domain size ``D``.
    """
    f = tuple(int(v) for v in f)
    if not f:
        raise ValueError("f needs a nonempty domain")
    if any(v < 0 for v in f):
        raise ValueError("f takes natural values")
    I = max(f) + 1 if index_bound is None else index_bound
    if I <= max(f):
        raise ValueError(f"index bound {I} does not cover range value {max(f)}")
    U = max(2 * (I - 1), 2 * len(f) - 1) if universe_bound is None else universe_bound
    if U < 2 * (I - 1):
        raise ValueError("universe bound must cover every marker")
    spec = RangeFamilySpec(f)
    return Family.from_sets([spec.members(i, U) for i in range(I)], U)


@dataclass(frozen=True)
class RangeDecoding:
    decoded: frozenset[int]
    exceptions: frozenset[int] = frozenset()

    @property
    def range_estimate(self) -> frozenset[int]:
        return self.decoded | self.exceptions


def _has_odd(family: Family, i: int) -> bool:
    return any(x % 2 for x in family.members(i))


def decode_range(family: Family, chosen: Iterable[int], prop: IntersectionProperty) -> RangeDecoding:
    """Read the range of ``f`` off a maximal solution of its encoding family.

    For F and ``Dbar_n`` the range is the set of chosen indices.  A solution
    made of one marker-only set is maximal but says nothing about the range;
    it is rejected with :class:`DegenerateSolution`.  For ``D_n`` the range is
    the complement of the solution plus the (at most ``n - 1``) chosen
    indices whose sets carry odd numbers, which are reported separately.
    """
    chosen = family.closure(chosen)
    try:
        verdict = is_maximal(family, chosen, prop)
    except FipError as exc:
        raise NotMaximal(f"{sorted(chosen)} does not have {prop}") from exc
    if not verdict:
        raise NotMaximal(f"{sorted(chosen)} extends by index {verdict.extending_index}")
    if prop.kind is PropertyKind.D:
        exceptions = frozenset(i for i in chosen if _has_odd(family, i))
        if len(exceptions) > prop.n - 1:
            raise PullBackError(f"{len(exceptions)} range sets in a D{prop.n} solution")
        decoded = frozenset(i for i in range(family.index_bound) if i not in chosen)
        return RangeDecoding(decoded, exceptions)
    if not any(_has_odd(family, i) for i in chosen):
        raise DegenerateSolution(f"solution {sorted(chosen)} contains only marker sets")
    return RangeDecoding(frozenset(chosen))


def check_eq1(a: Family, hat: Family, n: int, max_size: int | None = None) -> list[tuple[int, ...]]:
    """Index sets violating the hat biconditional (should be empty)."""
    I = a.index_bound
    top = I if max_size is None else min(I, max_size)
    bad = []
    for m in range(n, top + 1):
        for F in itertools.combinations(range(I), m):
            left = hat.least_common(F) is not None
            right = all(a.least_common(G) is not None for G in itertools.combinations(F, n))
            if left != right:
                bad.append(F)
    return bad

