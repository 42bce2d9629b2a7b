import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fip.core import F_PROPERTY, Family, check_property, d, dbar, is_maximal, marker_violations
from fip.oracles import brute_force_maximal, eq1_violations
from fip.reductions import (DegenerateSolution, NotMaximal, PullBackError, check_eq1,
                            decode_range, encode_range, hat_transform, hat_transform_bounded,
                            pull_back_solution, unwitnessed)
from fip.trace import StageTrace

from conftest import marker_families, marker_family

PAIRWISE = Family.from_sets([{0, 1, 5}, {2, 1, 3}, {4, 3, 5}, {6, 1, 3, 5}])


def test_all_pairs_meeting_makes_every_hat_group_meet():
    hat = hat_transform(PAIRWISE, 2)
    for m in range(2, 5):
        for F in itertools.combinations(range(4), m):
            assert hat.least_common(F) is not None


def test_disjoint_pair_stays_disjoint():
    a = Family.from_sets([{0, 1}, {2, 3}, {4, 1, 3}])
    hat = hat_transform(a, 2)
    assert hat.least_common((0, 1)) is None
    assert not eq1_violations(a, hat, 2)


@settings(max_examples=40, deadline=None)
@given(marker_families(max_index=5, max_universe=20))
def test_hat_keeps_marker_convention(a):
    hat = hat_transform(a, 2)
    assert not marker_violations(hat)
    for i in range(a.index_bound):
        assert 2 * i in hat.members(i)
        assert all(x % 2 for x in hat.members(i) - {2 * i})


def test_bounded_variant_examples():
    full = Family.from_sets([{0, 1}, {2, 1}, {4, 1}, {6, 1}])
    hat = hat_transform_bounded(full, 2)
    for F in itertools.combinations(range(4), 3):
        assert hat.least_common(F) is not None
    gap = Family.from_sets([{0, 1, 3}, {2, 1, 5}, {4, 3, 5}])
    hat = hat_transform_bounded(gap, 2)
    assert hat.least_common((0, 1, 2)) is not None
    no_pair = Family.from_sets([{0, 1}, {2, 1}, {4, 3}])
    assert hat_transform_bounded(no_pair, 2).least_common((0, 1, 2)) is None


def test_short_stage_budget_is_reported():
    a = Family.from_sets([{0, 9}, {2, 9}, {4}])
    hat = hat_transform(a, 2, stages=3)
    assert unwitnessed(a, hat, 2) == [(0, 1)]
    assert unwitnessed(a, hat_transform(a, 2), 2) == []


def test_odd_codes_are_never_reused():
    t = StageTrace("hat")
    hat_transform(marker_family(random.Random(1), 5, 15, 0.5), 2, trace=t)
    codes = [ev["element"] for ev in t.of_kind("intersect", "complement")]
    assert len(codes) == len(set(codes))


def test_pull_back_examples():
    hat = hat_transform(PAIRWISE, 2)
    assert pull_back_solution(PAIRWISE, hat, range(4), 2) == frozenset(range(4))
    a = Family.from_sets([{0, 1}, {2, 3}, {4, 1, 3}])
    hat = hat_transform(a, 2)
    assert pull_back_solution(a, hat, {0, 2}, 2) == frozenset({0, 2})
    assert not check_property(a, dbar(2), {0, 1, 2}).holds
    with pytest.raises(NotMaximal):
        pull_back_solution(a, hat, {0}, 2)


def test_pull_back_for_n3_reports_vacuous_pairs():
    # a lone hat set is F-maximal, yet any two sets have Dbar3 vacuously
    a = Family.from_sets([{0, 7}, {1, 2, 11}, {3, 4, 13}, {6, 9}, {8, 9}], 13)
    hat = hat_transform(a, 3)
    assert frozenset({0}) in brute_force_maximal(hat, F_PROPERTY)
    with pytest.raises(PullBackError):
        pull_back_solution(a, hat, {0}, 3)


@pytest.mark.parametrize("seed", range(15))
def test_pull_back_random_n2(seed):
    a = marker_family(random.Random(seed), 5, 15, 0.35)
    hat = hat_transform(a, 2)
    for sol in brute_force_maximal(hat, F_PROPERTY):
        assert is_maximal(a, pull_back_solution(a, hat, sol, 2), dbar(2)).maximal


def test_encode_constant_zero():
    fam = encode_range([0] * 5, index_bound=2, universe_bound=9)
    assert fam.members(0) == {0, 1, 3, 5, 7, 9}
    assert fam.members(1) == {2}


def test_encode_identity_meets_at_five():
    fam = encode_range([0, 1, 2])
    assert 5 in fam.members(0) & fam.members(1) & fam.members(2)
    assert fam.least_common((0, 1, 2)) == 5


def test_values_outside_range_are_bare_markers():
    fam = encode_range([3, 3, 0])
    assert fam.members(1) == {2} and fam.members(2) == {4}


def test_encode_rejects_bad_tables():
    with pytest.raises(ValueError):
        encode_range([])
    with pytest.raises(ValueError):
        encode_range([4], index_bound=2)


def test_decode_constant_zero():
    fam = encode_range([0] * 5, index_bound=2)
    assert decode_range(fam, {0}, F_PROPERTY).decoded == {0}
    with pytest.raises(DegenerateSolution):
        decode_range(fam, {1}, F_PROPERTY)


def test_decode_identity_d2():
    fam = encode_range([0, 1, 2])
    for sol in brute_force_maximal(fam, d(2)):
        dec = decode_range(fam, sol, d(2))
        assert len(dec.exceptions) <= 1
        assert dec.decoded <= {0, 1, 2} and dec.range_estimate == {0, 1, 2}


def test_decode_single_value_range():
    fam = encode_range([7, 7, 7])
    sols = [s for s in brute_force_maximal(fam, F_PROPERTY) if 7 in s]
    assert decode_range(fam, sols[0], F_PROPERTY).decoded == {7}


def test_decode_rejects_non_maximal():
    fam = encode_range([0, 1, 2])
    with pytest.raises(NotMaximal):
        decode_range(fam, {0}, F_PROPERTY)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=6), st.sampled_from([F_PROPERTY, dbar(2)]))
def test_range_round_trip(f, prop):
    fam = encode_range(f)
    for sol in brute_force_maximal(fam, prop):
        try:
            assert decode_range(fam, sol, prop).decoded == set(f)
        except DegenerateSolution:
            assert not any(x % 2 for i in sol for x in fam.members(i))


def test_check_eq1_agrees_with_oracle():
    a = marker_family(random.Random(3), 5, 21, 0.3)
    hat = hat_transform(a, 2)
    assert check_eq1(a, hat, 2) == eq1_violations(a, hat, 2) == []
