"""Families of staged sets, intersection properties and maximality checks.

Every infinite object is handled at an explicit truncation: a family carries
an ``index_bound`` (only ``A_0 .. A_{I-1}`` exist) and a ``universe_bound``
(only numbers ``0 .. U`` are looked at).  Membership is tri-state, and the
checkers raise :class:`UndecidedError` instead of guessing when they meet an
undecided number.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Sequence


class FipError(Exception):
    """Base class for all errors raised by this package."""


class UndecidedError(FipError):
    """A verdict would depend on a number that is not decided at the truncation."""


class BoundsError(FipError, IndexError):
    pass


class MarkerUndecided(FipError):
    pass


class MalformedSet(FipError):
    pass


class PropertyViolation(FipError):
    """The chosen subfamily does not even have the property being maximised."""


class TrivialFamily(FipError):
    pass


@dataclass(frozen=True)
class StagedSet:
    """Finite approximation ``A_{i,s}`` of one member of a family.

    ``closed_below`` compactly records that every number ``<= closed_below``
    missing from ``decided_in`` is a confirmed non-member; ``decided_out``
    holds any further explicit non-members.
    """

    index: int
    decided_in: frozenset[int] = frozenset()
    decided_out: frozenset[int] = frozenset()
    stage: int = 0
    closed_below: int = -1

    def __post_init__(self) -> None:
        if self.decided_in & self.decided_out:
            raise MalformedSet(f"A_{self.index}: numbers both in and out: "
                               f"{sorted(self.decided_in & self.decided_out)}")

    def status(self, x: int) -> bool | None:
        if x in self.decided_in:
            return True
        if x <= self.closed_below or x in self.decided_out:
            return False
        return None

    def __contains__(self, x: int) -> bool:
        return x in self.decided_in

    def out_set(self, upto: int) -> frozenset[int]:
        """All confirmed non-members ``<= upto``."""
        lo = {x for x in range(min(upto, self.closed_below) + 1)
              if x not in self.decided_in}
        return frozenset(lo | {x for x in self.decided_out if x <= upto})

    def decided_upto(self, upto: int) -> bool:
        if upto <= self.closed_below:
            return True
        return all(self.status(x) is not None for x in range(upto + 1))

    def first_undecided(self, upto: int) -> int | None:
        for x in range(self.closed_below + 1, upto + 1):
            if self.status(x) is None:
                return x
        return None

    def advance(self, stage: int, add_in: Iterable[int] = (), add_out: Iterable[int] = (),
                closed_below: int | None = None) -> "StagedSet":
        """Return the next snapshot; never forgets an earlier decision."""
        if stage < self.stage:
            raise ValueError("stages only move forward")
        new_in = self.decided_in | frozenset(add_in)
        cb = self.closed_below if closed_below is None else max(closed_below, self.closed_below)
        flipped = [x for x in add_in if self.status(x) is False]
        if flipped:
            raise MalformedSet(f"A_{self.index}: {flipped} already decided out")
        return StagedSet(self.index, new_in, self.decided_out | frozenset(add_out), stage, cb)


def decided(index: int, members: Iterable[int], upto: int, stage: int = 0) -> StagedSet:
    """A set fully decided on ``0..upto``: listed numbers in, the rest out."""
    members = frozenset(members)
    return StagedSet(index, members, frozenset(), stage, upto)


@dataclass(frozen=True)
class WitnessCertificate:
    indices: frozenset[int]
    witness: int

    def check(self, family: "Family") -> bool:
        return all(family.sets[i].status(self.witness) is True for i in self.indices)


class PropertyKind(str, Enum):
    D = "D"          # any n distinct members have empty intersection
    DBAR = "Dbar"    # any n distinct members have nonempty intersection
    F = "F"          # any m >= 2 distinct members have nonempty intersection


@dataclass(frozen=True)
class IntersectionProperty:
    kind: PropertyKind
    n: int = 2

    def __post_init__(self) -> None:
        if self.kind is not PropertyKind.F and self.n < 2:
            raise ValueError("D_n and Dbar_n need n >= 2")

    @classmethod
    def parse(cls, text: str) -> "IntersectionProperty":
        """Accepts ``F``, ``D2``, ``D_3``, ``Dbar2``, ``Dbar_2``."""
        t = text.strip().replace("_", "")
        if t.upper() == "F":
            return cls(PropertyKind.F)
        for prefix, kind in (("Dbar", PropertyKind.DBAR), ("D", PropertyKind.D)):
            if t.startswith(prefix) and t[len(prefix):].isdigit():
                return cls(kind, int(t[len(prefix):]))
        raise ValueError(f"unknown intersection property {text!r}")

    def __str__(self) -> str:
        return "F" if self.kind is PropertyKind.F else f"{self.kind.value}{self.n}"


F_PROPERTY = IntersectionProperty(PropertyKind.F)


def dbar(n: int) -> IntersectionProperty:
    return IntersectionProperty(PropertyKind.DBAR, n)


def d(n: int) -> IntersectionProperty:
    return IntersectionProperty(PropertyKind.D, n)


@dataclass(frozen=True)
class IndexMap:
    """A finite prefix of ``J``, defining the subfamily ``<A_{J(i)}>``.

    Solvers attach per-prefix certificates and flags describing how far the
    result can be trusted at the truncation.
    """

    entries: tuple[int, ...]
    certificates: tuple[WitnessCertificate, ...] = ()
    partial: bool = False
    maximal: bool | None = None
    notes: tuple[str, ...] = ()

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, k: int) -> int:
        return self.entries[k]

    @property
    def range(self) -> frozenset[int]:
        return frozenset(self.entries)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a property check on a truncation.

    ``holds`` is the answer, ``certificates`` back a positive answer for the
    nonempty-intersection properties and ``counterexample`` is an index set
    on which the property fails.
    """

    holds: bool
    prop: IntersectionProperty
    index_bound: int
    universe_bound: int
    certificates: tuple[WitnessCertificate, ...] = ()
    counterexample: tuple[int, ...] | None = None

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True)
class MaximalityVerdict:
    maximal: bool
    extending_index: int | None
    index_bound: int
    universe_bound: int

    def __bool__(self) -> bool:
        return self.maximal


@dataclass(frozen=True)
class Family:
    sets: tuple[StagedSet, ...]
    universe_bound: int
    nontrivial_witness: tuple[int, int] | None = None
    _masks: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        for i, s in enumerate(self.sets):
            if s.index != i:
                raise MalformedSet(f"set at position {i} carries index {s.index}")
        if self.nontrivial_witness is not None:
            i, a = self.nontrivial_witness
            if not (0 <= i < len(self.sets)) or a not in self.sets[i].decided_in:
                raise MalformedSet(f"nontrivial witness {self.nontrivial_witness} is not a member")

    @classmethod
    def from_sets(cls, sets: Sequence[Iterable[int]], universe_bound: int | None = None,
                  stage: int = 0) -> "Family":
        """Build a fully decided family; ``universe_bound`` defaults to the largest element."""
        members = [frozenset(s) for s in sets]
        if universe_bound is None:
            universe_bound = max((max(s) for s in members if s), default=0)
        bad = [x for s in members for x in s if x > universe_bound or x < 0]
        if bad:
            raise BoundsError(f"elements {sorted(set(bad))} outside 0..{universe_bound}")
        staged = tuple(decided(i, s, universe_bound, stage) for i, s in enumerate(members))
        witness = next(((i, min(s)) for i, s in enumerate(members) if s), None)
        return cls(staged, universe_bound, witness)

    @property
    def index_bound(self) -> int:
        return len(self.sets)

    def __len__(self) -> int:
        return len(self.sets)

    def __getitem__(self, i: int) -> StagedSet:
        self._check_index(i)
        return self.sets[i]

    def _check_index(self, i: int) -> None:
        if not 0 <= i < len(self.sets):
            raise BoundsError(f"index {i} outside 0..{len(self.sets) - 1}")

    def members(self, i: int) -> frozenset[int]:
        self._check_index(i)
        return frozenset(x for x in self.sets[i].decided_in if x <= self.universe_bound)

    def mask(self, i: int) -> int:
        """Bitmask of ``A_i`` on ``0..U``; raises if the truncation leaves a gap."""
        m = self._masks.get(i)
        if m is None:
            s = self[i]
            gap = s.first_undecided(self.universe_bound)
            if gap is not None:
                raise UndecidedError(f"A_{i}: {gap} is undecided at U={self.universe_bound}")
            m = 0
            for x in s.decided_in:
                if x <= self.universe_bound:
                    m |= 1 << x
            self._masks[i] = m
        return m

    def is_decided(self) -> bool:
        return all(s.decided_upto(self.universe_bound) for s in self.sets)

    def is_nontrivial(self) -> bool:
        return any(self.members(i) for i in range(len(self.sets)))

    def intersection_mask(self, indices: Iterable[int]) -> int:
        m = (1 << (self.universe_bound + 1)) - 1
        for i in indices:
            m &= self.mask(i)
        return m

    def least_common(self, indices: Iterable[int], bound: int | None = None) -> int | None:
        """Least element of the intersection, optionally only looking ``<= bound``."""
        m = self.intersection_mask(indices)
        if bound is not None:
            if bound < 0:
                return None
            m &= (1 << (bound + 1)) - 1
        if not m:
            return None
        return (m & -m).bit_length() - 1

    def certificate(self, indices: Iterable[int]) -> WitnessCertificate | None:
        idx = frozenset(indices)
        w = self.least_common(idx)
        return None if w is None else WitnessCertificate(idx, w)

    def extensional_classes(self, indices: Iterable[int] | None = None) -> list[tuple[int, ...]]:
        """Group indices by extensional equality on the truncation (least index first)."""
        idx = range(len(self.sets)) if indices is None else sorted(set(indices))
        groups: dict[int, list[int]] = {}
        for i in idx:
            groups.setdefault(self.mask(i), []).append(i)
        return sorted((tuple(g) for g in groups.values()), key=lambda g: g[0])

    def closure(self, indices: Iterable[int]) -> frozenset[int]:
        """All indices whose set equals one of the given members."""
        masks = {self.mask(i) for i in indices}
        return frozenset(j for j in range(len(self.sets)) if self.mask(j) in masks)


def distinct(family: Family, i: int, j: int) -> bool:
    """Whether ``A_i`` and ``A_j`` differ on the decided universe."""
    family._check_index(i)
    family._check_index(j)
    if i == j:
        return False
    a, b = family.sets[i], family.sets[j]
    # markers decide the question without scanning the universe
    if a.status(2 * i) is True and b.status(2 * i) is False:
        return True
    if b.status(2 * j) is True and a.status(2 * j) is False:
        return True
    for x in range(family.universe_bound + 1):
        sa, sb = a.status(x), b.status(x)
        if sa is not None and sb is not None and sa != sb:
            return True
    return False


def _representatives(family: Family, indices: Iterable[int] | None) -> list[int]:
    return [g[0] for g in family.extensional_classes(indices)]


def check_property(family: Family, prop: IntersectionProperty,
                   indices: Iterable[int] | None = None) -> Verdict:
    """Check ``prop`` for the subfamily on ``indices`` (default: the whole family).

    Only extensionally distinct members count, as in the definition: a
    collection with fewer than ``n`` distinct members satisfies ``D_n`` and
    ``Dbar_n`` vacuously.
    """
    reps = _representatives(family, indices)
    I, U = family.index_bound, family.universe_bound
    certs: list[WitnessCertificate] = []
    if prop.kind is PropertyKind.F:
        sizes = range(2, len(reps) + 1)
    else:
        sizes = [prop.n] if prop.n <= len(reps) else []
    for m in sizes:
        for combo in itertools.combinations(reps, m):
            w = family.least_common(combo)
            if prop.kind is PropertyKind.D:
                if w is not None:
                    return Verdict(False, prop, I, U, (WitnessCertificate(frozenset(combo), w),),
                                   counterexample=combo)
            elif w is None:
                return Verdict(False, prop, I, U, tuple(certs), counterexample=combo)
            else:
                certs.append(WitnessCertificate(frozenset(combo), w))
    return Verdict(True, prop, I, U, tuple(certs))


def is_maximal(family: Family, chosen: Iterable[int], prop: IntersectionProperty,
               candidates: Iterable[int] | None = None) -> MaximalityVerdict:
    """Decide whether the subfamily on ``chosen`` is maximal with ``prop``.

    All three properties are inherited by subcollections, so it suffices to
    try one new member at a time.  ``candidates`` limits which indices may be
    used to extend (default: every index).
    """
    chosen = frozenset(chosen)
    for i in chosen:
        family._check_index(i)
    if not check_property(family, prop, chosen):
        raise PropertyViolation(f"chosen {sorted(chosen)} does not have property {prop}")
    present = {family.mask(i) for i in chosen}
    pool = range(family.index_bound) if candidates is None else sorted(set(candidates))
    for i in pool:
        if family.mask(i) in present:
            continue
        if check_property(family, prop, chosen | {i}):
            return MaximalityVerdict(False, i, family.index_bound, family.universe_bound)
    return MaximalityVerdict(True, None, family.index_bound, family.universe_bound)


def subfamily_index_of(b: StagedSet) -> int:
    """Recover ``j`` with ``B = A_j`` from the unique even member ``2j``."""
    evens = sorted(x for x in b.decided_in if x % 2 == 0)
    if not evens:
        raise MarkerUndecided("marker undecided: no even member is known")
    if len(evens) > 1:
        raise MalformedSet(f"two even members {evens[:2]}: not a marker-convention set")
    return evens[0] // 2


def marker_violations(family: Family) -> list[str]:
    """Every breach of the even-marker convention on the decided truncation."""
    problems = []
    for i, s in enumerate(family.sets):
        if 2 * i <= family.universe_bound and s.status(2 * i) is not True:
            problems.append(f"A_{i} lacks its marker {2 * i}")
        for x in s.decided_in:
            if x % 2 == 0 and x != 2 * i:
                problems.append(f"A_{i} contains foreign even {x}")
    return problems


def require_nontrivial(family: Family) -> tuple[int, int]:
    if family.nontrivial_witness is not None:
        return family.nontrivial_witness
    for i, s in enumerate(family.sets):
        if s.decided_in:
            return i, min(s.decided_in)
    raise TrivialFamily("family has no decided member in any set")
