"""Exhaustive reference checks.

Everything here works on plain Python sets pulled out of a family once, and
deliberately avoids the bitmask machinery and helpers used by the solvers and
checkers it is meant to validate.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Sequence

from .core import Family, FipError, IntersectionProperty, PropertyKind

BRUTE_FORCE_LIMIT = 12


class OracleBoundExceeded(FipError):
    pass


def plain_sets(family: Family) -> list[frozenset[int]]:
    out = []
    for i in range(family.index_bound):
        s = family.sets[i]
        out.append(frozenset(x for x in range(family.universe_bound + 1) if s.status(x) is True))
    return out


def _holds(sets: Sequence[frozenset[int]], prop: IntersectionProperty) -> bool:
    """``sets`` are extensionally distinct."""
    if prop.kind is PropertyKind.F:
        if len(sets) < 2:
            return True
        common = set(sets[0])
        for s in sets[1:]:
            common &= s
        return bool(common)
    for group in combinations(sets, prop.n):
        meet = frozenset.intersection(*group)
        if prop.kind is PropertyKind.D and meet:
            return False
        if prop.kind is PropertyKind.DBAR and not meet:
            return False
    return True


def brute_property(family: Family, prop: IntersectionProperty,
                   indices: Iterable[int] | None = None) -> bool:
    sets = plain_sets(family)
    idx = range(len(sets)) if indices is None else indices
    distinct = list(dict.fromkeys(sets[i] for i in idx))
    return _holds(distinct, prop)


def brute_force_maximal(family: Family, prop: IntersectionProperty) -> list[frozenset[int]]:
    """Every maximal subfamily with ``prop``, as closed index sets, in a fixed order.

    A subfamily is identified with the sets it contains, so each answer lists
    all indices whose set belongs to it.
    """
    if family.index_bound > BRUTE_FORCE_LIMIT:
        raise OracleBoundExceeded(f"brute force needs index_bound <= {BRUTE_FORCE_LIMIT}")
    sets = plain_sets(family)
    values = list(dict.fromkeys(sets))
    k = len(values)
    good = []
    for mask in range(1, 1 << k):
        chosen = [values[j] for j in range(k) if mask >> j & 1]
        if _holds(chosen, prop):
            good.append(mask)
    good_set = set(good)
    maximal = []
    for mask in good:
        if all((mask | 1 << j) not in good_set for j in range(k) if not mask >> j & 1):
            maximal.append(mask)
    out = []
    for mask in maximal:
        content = {values[j] for j in range(k) if mask >> j & 1}
        out.append(frozenset(i for i, s in enumerate(sets) if s in content))
    return sorted(out, key=lambda s: sorted(s))


def brute_is_maximal(family: Family, chosen: Iterable[int], prop: IntersectionProperty) -> bool:
    chosen = frozenset(chosen)
    sets = plain_sets(family)
    content = {sets[i] for i in chosen}
    return frozenset(i for i, s in enumerate(sets) if s in content) in brute_force_maximal(family, prop)


def eq1_violations(a: Family, hat: Family, n: int, max_size: int | None = None,
                   exact_size: bool = False) -> list[tuple[int, ...]]:
    """Index sets ``F`` (``n <= |F|``, or ``|F| = n + 1`` with ``exact_size``)
    where the hat biconditional fails."""
    src, tgt = plain_sets(a), plain_sets(hat)
    I = len(src)
    top = I if max_size is None else min(I, max_size)
    sizes = [n + 1] if exact_size else range(n, top + 1)
    bad = []
    for m in sizes:
        for F in combinations(range(I), m):
            left = bool(frozenset.intersection(*(tgt[i] for i in F)))
            right = all(frozenset.intersection(*(src[i] for i in G)) for G in combinations(F, n))
            if left != right:
                bad.append(F)
    return bad


def brute_g(family: Family, s: int) -> int:
    """Least ``n`` bounding a witness for every index set ``F`` within ``0..s`` that meets."""
    sets = plain_sets(family)
    top = min(s, len(sets) - 1)
    need = 0
    for m in range(1, top + 2):
        for F in combinations(range(top + 1), m):
            meet = frozenset.intersection(*(sets[i] for i in F))
            if meet:
                need = max(need, min(meet))
    return need
