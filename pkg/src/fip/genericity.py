"""Maximal F-subfamilies from generic binary strings.

A binary string ``sigma`` marks positions ``n``; each position is read as a
code ``c(n) = tau . b`` for a string of indices ``tau`` and a bound ``b``.
Positions whose ``tau`` has a common element ``<= b`` are *acceptable*, and
chaining acceptable positions by strict extension of ``tau`` yields the
*acceptable sequence*.  Meeting the dense sets ``D_i`` for every ``i`` forces
the limit of the ``tau`` to be maximal.

The coding
----------
``c(0)`` is the empty string.  For ``n >= 1`` write ``n`` in binary as
``1 b_1 ... b_k``.  Start with one part of size 1; for each bit ``b_j`` a 1
opens a new part of size 1 and a 0 grows the current part by one.  The code is
the list of part sizes minus one.  So ``1 -> <0>``, ``2 -> <1>``,
``3 -> <0,0>``, ``5 -> <1,0>``, ``6 -> <0,1>``, and in general the strings of
total weight ``len + sum = w`` fill the block ``[2^(w-1), 2^w)``.

Binary strings are stored sparsely (a length plus the set of 1-positions)
because codes with realistic bounds are astronomically large positions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .core import (
    F_PROPERTY,
    Family,
    FipError,
    IndexMap,
    WitnessCertificate,
    is_maximal,
)


class NoAcceptablePrefix(FipError):
    pass


class ExtensionExhausted(FipError):
    """No extension puts the string into the target dense set within the truncation."""


class ChainIncoherent(FipError):
    pass


# --- coding ------------------------------------------------------------------


class Coding:
    """The canonical bijection between naturals and finite strings of naturals."""

    @staticmethod
    def decode(n: int) -> tuple[int, ...]:
        if n < 0:
            raise ValueError("codes are natural numbers")
        if n == 0:
            return ()
        parts = [1]
        for bit in bin(n)[3:]:
            if bit == "1":
                parts.append(1)
            else:
                parts[-1] += 1
        return tuple(p - 1 for p in parts)

    @staticmethod
    def encode(seq: Sequence[int]) -> int:
        n = 0
        for k, x in enumerate(seq):
            if x < 0:
                raise ValueError("strings over naturals only")
            n = 1 if k == 0 else (n << 1) | 1
            n <<= x
        return n

    @staticmethod
    def weight(seq: Sequence[int]) -> int:
        return len(seq) + sum(seq)

    def split(self, n: int) -> tuple[tuple[int, ...], int] | None:
        """``c(n)`` as ``(tau, b)``; None for the empty code."""
        code = self.decode(n)
        if not code:
            return None
        return code[:-1], code[-1]

    def join(self, tau: Sequence[int], b: int) -> int:
        return self.encode(tuple(tau) + (b,))


CODING = Coding()


# --- sparse binary strings ---------------------------------------------------


@dataclass(frozen=True)
class BinaryString:
    length: int
    ones: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError("negative length")
        bad = [n for n in self.ones if not 0 <= n < self.length]
        if bad:
            raise ValueError(f"1-positions {sorted(bad)[:5]} outside the string")

    @classmethod
    def from_bits(cls, bits: str) -> "BinaryString":
        bits = bits.strip()
        if set(bits) - {"0", "1"}:
            raise ValueError("binary strings use only 0 and 1")
        return cls(len(bits), frozenset(i for i, b in enumerate(bits) if b == "1"))

    @classmethod
    def zeros(cls, length: int) -> "BinaryString":
        return cls(length)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, n: int) -> int:
        if not 0 <= n < self.length:
            raise IndexError(n)
        return int(n in self.ones)

    def positions(self) -> list[int]:
        return sorted(self.ones)

    def prefix(self, s: int) -> "BinaryString":
        s = min(s, self.length)
        return BinaryString(s, frozenset(n for n in self.ones if n < s))

    def with_one(self, n: int) -> "BinaryString":
        """Pad with zeros and set position ``n`` (which must be new)."""
        if n < self.length:
            raise ValueError(f"position {n} is inside the string")
        return BinaryString(n + 1, self.ones | {n})

    def extends(self, other: "BinaryString") -> bool:
        return self.length >= other.length and self.prefix(other.length) == other

    def to_bits(self, limit: int = 1 << 16) -> str:
        if self.length > limit:
            raise ValueError("string too long to print densely")
        return "".join("1" if i in self.ones else "0" for i in range(self.length))

    def to_text(self) -> str:
        if self.length <= 256:
            return self.to_bits()
        return f"length={self.length} ones=" + ",".join(map(str, self.positions()))

    @classmethod
    def parse(cls, text: str) -> "BinaryString":
        text = text.strip()
        if text.startswith("length="):
            head, _, rest = text.partition(" ")
            length = int(head.split("=", 1)[1])
            body = rest.strip()
            if body and not body.startswith("ones="):
                raise ValueError("expected ones=<positions>")
            ones = body[5:] if body else ""
            return cls(length, frozenset(int(x) for x in ones.split(",") if x))
        return cls.from_bits(text)


# --- acceptability -----------------------------------------------------------


@dataclass(frozen=True)
class Acceptance:
    n: int
    tau: tuple[int, ...]
    b: int
    witness: int | None       # least common element <= b, if any
    undecided: bool = False


def _common_upto(a: Family, tau: Sequence[int], b: int, exact: bool) -> tuple[int | None, bool]:
    """Least element ``<= b`` of the intersection over ``tau``, plus an undecided flag."""
    if not tau:
        return 0, False
    if any(i >= a.index_bound for i in tau):
        return None, True
    w = a.least_common(tau, bound=b)
    undecided = w is None and b > a.universe_bound and not exact
    return w, undecided


def examine(n: int, sigma: BinaryString, a: Family, c: Coding = CODING,
            exact: bool = True) -> Acceptance | None:
    """Acceptability data for position ``n`` (None when ``sigma(n) = 0`` or the code is empty)."""
    if sigma[n] != 1:
        return None
    parts = c.split(n)
    if parts is None:
        return None
    tau, b = parts
    w, undecided = _common_upto(a, tau, b, exact)
    return Acceptance(n, tau, b, w, undecided)


def acceptable_numbers(sigma: BinaryString, a: Family, c: Coding = CODING,
                       exact: bool = True) -> list[int]:
    """Positions acceptable for ``sigma``.

    ``exact`` declares the sets finite (nothing beyond the universe bound), so
    witness searches past the bound are conclusive.  Otherwise positions whose
    verdict depends on undecided numbers are skipped; see :func:`undecided_numbers`.
    """
    out = []
    for n in sigma.positions():
        acc = examine(n, sigma, a, c, exact)
        if acc is not None and acc.witness is not None:
            out.append(n)
    return out


def undecided_numbers(sigma: BinaryString, a: Family, c: Coding = CODING) -> list[int]:
    return [n for n in sigma.positions()
            if (acc := examine(n, sigma, a, c, exact=False)) is not None and acc.undecided]


@dataclass(frozen=True)
class AcceptableSequence:
    numbers: tuple[int, ...]
    witnesses: tuple[tuple[tuple[int, ...], int], ...]

    def __len__(self) -> int:
        return len(self.numbers)

    def __bool__(self) -> bool:
        return bool(self.numbers)

    @property
    def last_tau(self) -> tuple[int, ...] | None:
        return self.witnesses[-1][0] if self.witnesses else None

    def extends(self, other: "AcceptableSequence") -> bool:
        k = len(other)
        return self.numbers[:k] == other.numbers


def _is_proper_prefix(short: Sequence[int], long: Sequence[int]) -> bool:
    return len(short) < len(long) and tuple(long[:len(short)]) == tuple(short)


def acceptable_sequence(sigma: BinaryString, a: Family, c: Coding = CODING,
                        exact: bool = True) -> AcceptableSequence:
    nums: list[int] = []
    wits: list[tuple[tuple[int, ...], int]] = []
    for n in acceptable_numbers(sigma, a, c, exact):
        tau, b = c.split(n)
        if not nums or _is_proper_prefix(wits[-1][0], tau):
            nums.append(n)
            wits.append((tau, b))
    return AcceptableSequence(tuple(nums), tuple(wits))


# --- dense sets --------------------------------------------------------------


@dataclass(frozen=True)
class DenseSetQuery:
    i: int
    budget: int

    def __post_init__(self) -> None:
        if self.i < 0 or self.budget < 0:
            raise ValueError("query fields are natural numbers")


@dataclass(frozen=True)
class DenseVerdict:
    member: bool
    clause: str | None        # "enumerates", "empty" or None
    exact: bool
    budget: int
    tau: tuple[int, ...] | None = None

    def __bool__(self) -> bool:
        return self.member


def dense_membership(q: DenseSetQuery, sigma: BinaryString, a: Family,
                     c: Coding = CODING, exact: bool = True) -> DenseVerdict:
    """Membership of ``sigma`` in ``D_i``.

    The emptiness clause is decided by searching for a common element up to
    ``q.budget``; the verdict is exact only when the budget covers the
    universe bound of a finite family.
    """
    full = exact and q.budget >= a.universe_bound
    seq = acceptable_sequence(sigma, a, c, exact)
    if not seq:
        return DenseVerdict(False, None, full, q.budget)
    tau = seq.last_tau
    if q.i in tau:
        return DenseVerdict(True, "enumerates", True, q.budget, tau)
    if q.i >= a.index_bound:
        return DenseVerdict(False, None, False, q.budget, tau)
    w = a.least_common(tuple(tau) + (q.i,), bound=q.budget)
    if w is None:
        return DenseVerdict(True, "empty", full, q.budget, tau)
    return DenseVerdict(False, None, full, q.budget, tau)


def met_by_prefix(q: DenseSetQuery, g: BinaryString, a: Family, c: Coding = CODING,
                  exact: bool = True) -> int | None:
    """Least ``s`` with ``g|s`` in ``D_i``, or None.

    The acceptable sequence only changes right after a 1-position, so those
    prefixes are the only ones worth testing.
    """
    for n in g.positions():
        if dense_membership(q, g.prefix(n + 1), a, c, exact):
            return n + 1
    return None


# --- builder -----------------------------------------------------------------


@dataclass
class GenericBuild:
    g: BinaryString
    met: dict[int, int] = field(default_factory=dict)     # target i -> prefix length
    steps: list[tuple[int, int, tuple[int, ...], int]] = field(default_factory=list)


def build_generic(a: Family, c: Coding = CODING, targets: Iterable[DenseSetQuery] = (),
                  exact: bool = True, record: GenericBuild | None = None) -> BinaryString:
    """A finite string meeting every target dense set.

    For each target in turn, if no prefix of the current string meets it, a
    single 1 is appended at position ``c(tau' . b)`` where ``tau'`` is the
    current last witness string followed by ``i`` and ``b`` is the least bound
    at or above the common element whose code lies past the current end.
    """
    build = GenericBuild(BinaryString(0)) if record is None else record
    g = build.g
    for q in targets:
        hit = met_by_prefix(q, g, a, c, exact)
        if hit is not None:
            build.met[q.i] = hit
            continue
        seq = acceptable_sequence(g, a, c, exact)
        base = seq.last_tau if seq else ()
        tau = tuple(base) + (q.i,)
        if q.i >= a.index_bound:
            raise ExtensionExhausted(f"target {q.i} lies outside the index bound {a.index_bound}")
        w = a.least_common(tau, bound=q.budget)
        if w is None:
            # only reachable when D_i is not met yet and the bound hides the witness
            raise ExtensionExhausted(f"no common element for {tau} within budget {q.budget}")
        b = w
        while c.join(tau, b) < g.length:
            b += 1
        n = c.join(tau, b)
        g = g.with_one(n)
        build.steps.append((q.i, n, tau, b))
        if not dense_membership(q, g, a, c, exact):
            raise ExtensionExhausted(f"extension at {n} failed to meet target {q.i}")
        build.met[q.i] = g.length
    build.g = g
    return g


def all_targets(a: Family, budget: int | None = None) -> list[DenseSetQuery]:
    budget = a.universe_bound if budget is None else budget
    return [DenseSetQuery(i, budget) for i in range(a.index_bound)]


# --- extraction --------------------------------------------------------------


@dataclass(frozen=True)
class Extraction:
    j: IndexMap
    chain: tuple[tuple[int, ...], ...]
    start: int


def tau_chain(g: BinaryString, a: Family, c: Coding = CODING,
              exact: bool = True) -> tuple[int, list[tuple[int, ...]]]:
    """``(s, [tau_t ...])`` with one entry per prefix at which the witness changes."""
    start = None
    chain: list[tuple[int, ...]] = []
    for n in g.positions():
        seq = acceptable_sequence(g.prefix(n + 1), a, c, exact)
        if not seq:
            continue
        if start is None:
            start = n + 1
        tau = seq.last_tau
        if not chain or chain[-1] != tau:
            chain.append(tau)
    if start is None:
        raise NoAcceptablePrefix("no prefix has a nonempty acceptable sequence")
    return start, chain


def extract_subfamily(g: BinaryString, a: Family, c: Coding = CODING,
                      exact: bool = True, met: Iterable[int] | None = None) -> Extraction:
    """``J`` as the union of the witness strings along ``g``.

    Certificates are attached for every prefix of ``J``.  Maximality is
    asserted (``IndexMap.maximal``) only relative to ``met``, the indices
    whose dense sets ``g`` meets; with ``met=None`` every index below the
    bound is tested.
    """
    start, chain = tau_chain(g, a, c, exact)
    for t1, t2 in zip(chain, chain[1:]):
        if tuple(t2[:len(t1)]) != tuple(t1):
            raise ChainIncoherent(f"{t1} is not a prefix of {t2}")
    J = chain[-1]
    certs = []
    for k in range(1, len(J) + 1):
        w = a.least_common(J[:k])
        if w is None:
            raise ChainIncoherent(f"prefix {J[:k]} has no common element")
        certs.append(WitnessCertificate(frozenset(J[:k]), w))
    pool = range(a.index_bound) if met is None else sorted(set(met))
    budget = a.universe_bound
    met_all = all(met_by_prefix(DenseSetQuery(i, budget), g, a, c, exact) is not None for i in pool)
    notes = []
    maximal = None
    if met_all and set(pool) >= set(range(a.index_bound)):
        maximal = bool(is_maximal(a, set(J), F_PROPERTY))
    elif not met_all:
        notes.append("some requested dense sets are not met; maximality not claimed")
    else:
        notes.append("maximality claimed only for the met targets")
    return Extraction(IndexMap(tuple(J), tuple(certs), maximal=maximal, notes=tuple(notes)),
                      tuple(chain), start)


def finite_maximal_precheck(a: Family) -> frozenset[int] | None:
    """A maximal F-subfamily found directly on the truncation, if the family is small.

    On a truncation every subfamily is finite, so this always succeeds; it is
    offered as a shortcut and never invoked by default.
    """
    from .core import check_property
    chosen: set[int] = set()
    for i in range(a.index_bound):
        if check_property(a, F_PROPERTY, chosen | {i}):
            chosen.add(i)
    return frozenset(chosen)


def random_strings(rng, length: int, density: float = 0.3) -> Iterator[BinaryString]:
    while True:
        yield BinaryString(length, frozenset(n for n in range(length) if rng.random() < density))
