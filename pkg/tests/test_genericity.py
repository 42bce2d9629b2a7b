import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fip import genericity as gen
from fip.core import F_PROPERTY, Family, is_maximal
from fip.genericity import CODING, BinaryString, DenseSetQuery

from conftest import marker_families, marker_family

COMMON = Family.from_sets([{0, 1}, {2, 1}, {4, 1}])


def test_coding_small_values():
    assert [CODING.decode(n) for n in range(7)] == [(), (0,), (1,), (0, 0), (2,), (1, 0), (0, 1)]


@given(st.lists(st.integers(0, 12), max_size=6))
def test_coding_round_trip(seq):
    n = CODING.encode(seq)
    assert CODING.decode(n) == tuple(seq)
    if seq:
        w = CODING.weight(seq)
        assert 2 ** (w - 1) <= n < 2 ** w


@given(st.integers(0, 5000))
def test_coding_is_onto(n):
    assert CODING.encode(CODING.decode(n)) == n


def test_binary_string_text_forms():
    g = BinaryString.from_bits("0101")
    assert g.to_text() == "0101" and BinaryString.parse("0101") == g
    big = BinaryString(1000, frozenset({3, 999}))
    assert big.to_text() == "length=1000 ones=3,999"
    assert BinaryString.parse(big.to_text()) == big
    with pytest.raises(ValueError):
        BinaryString.from_bits("012")
    with pytest.raises(ValueError):
        g.with_one(2)


def test_all_zero_string_accepts_nothing():
    assert gen.acceptable_numbers(BinaryString.zeros(50), COMMON) == []
    assert not gen.acceptable_sequence(BinaryString.zeros(50), COMMON)


def test_single_self_coding_position():
    fam = Family.from_sets([{0, 3}, {2}])
    n = CODING.join((0,), 0)
    assert gen.acceptable_numbers(BinaryString(n + 1, frozenset({n})), fam) == [n]


def test_bound_below_every_common_element_is_rejected():
    fam = Family.from_sets([{0, 7}, {2, 7}])
    n = CODING.join((0, 1), 5)
    assert gen.acceptable_numbers(BinaryString(n + 1, frozenset({n})), fam) == []
    m = CODING.join((0, 1), 7)
    assert gen.acceptable_numbers(BinaryString(m + 1, frozenset({m})), fam) == [m]


def test_two_chained_codes():
    n1, n2 = CODING.join((0,), 0), CODING.join((0, 1), 1)
    assert n1 < n2
    seq = gen.acceptable_sequence(BinaryString(n2 + 1, frozenset({n1, n2})), COMMON)
    assert seq.numbers == (n1, n2)
    assert seq.last_tau == (0, 1)


def test_non_extending_codes_are_skipped():
    n1, n2 = CODING.join((0, 1), 1), CODING.join((2, 1), 1)
    g = BinaryString(max(n1, n2) + 1, frozenset({n1, n2}))
    assert len(gen.acceptable_sequence(g, COMMON)) == 1


@settings(max_examples=100, deadline=None)
@given(marker_families(max_index=4, max_universe=9), st.integers(0, 2 ** 32), st.integers(1, 400),
       st.integers(0, 400))
def test_prefix_monotone(fam, seed, length, extra):
    rng = random.Random(seed)
    g = next(gen.random_strings(rng, length + extra))
    short = gen.acceptable_sequence(g.prefix(length), fam)
    long = gen.acceptable_sequence(g, fam)
    assert long.extends(short)


def test_dense_membership_clauses():
    n = CODING.join((0, 1), 1)
    g = BinaryString(n + 1, frozenset({n}))
    v = gen.dense_membership(DenseSetQuery(1, 10), g, COMMON)
    assert v.member and v.clause == "enumerates"
    split = Family.from_sets([{0, 1}, {2, 1}, {4, 3}])
    v = gen.dense_membership(DenseSetQuery(2, split.universe_bound), g, split)
    assert v.member and v.clause == "empty" and v.exact
    assert not gen.dense_membership(DenseSetQuery(2, 0), g, split).exact
    assert not gen.dense_membership(DenseSetQuery(0, 4), BinaryString.zeros(9), COMMON)


def test_no_targets_give_the_empty_string():
    assert gen.build_generic(COMMON, targets=[]) == BinaryString(0)


def test_single_target_one_set_family():
    fam = Family.from_sets([{0}])
    g = gen.build_generic(fam, targets=gen.all_targets(fam))
    assert g == BinaryString(4, frozenset({3})) and g.to_bits() == "0001"


@pytest.mark.parametrize("seed", range(12))
def test_targets_are_met(seed):
    fam = marker_family(random.Random(seed), 6, 23, 0.35)
    rec = gen.GenericBuild(BinaryString(0))
    g = gen.build_generic(fam, targets=gen.all_targets(fam), record=rec)
    for q in gen.all_targets(fam):
        assert gen.met_by_prefix(q, g, fam) is not None
    assert set(rec.met) == set(range(6))


def test_common_element_extracts_everything():
    fam = Family.from_sets([{0, 1}, {2, 1}, {4, 1}, {6, 1}])
    g = gen.build_generic(fam, targets=gen.all_targets(fam))
    ex = gen.extract_subfamily(g, fam)
    assert set(ex.j.entries) == {0, 1, 2, 3} and ex.j.maximal


def test_zero_string_has_no_acceptable_prefix():
    with pytest.raises(gen.NoAcceptablePrefix):
        gen.extract_subfamily(BinaryString.zeros(30), COMMON)


def test_hand_built_nested_string():
    n1, n2 = CODING.join((0,), 0), CODING.join((0, 2), 1)
    fam = Family.from_sets([{0, 1}, {2}, {4, 1}])
    ex = gen.extract_subfamily(BinaryString(n2 + 1, frozenset({n1, n2})), fam)
    assert ex.j.entries == (0, 2) and ex.chain == ((0,), (0, 2))


@settings(max_examples=40, deadline=None)
@given(marker_families(max_index=6, max_universe=20))
def test_round_trip_is_maximal(fam):
    g = gen.build_generic(fam, targets=gen.all_targets(fam))
    ex = gen.extract_subfamily(g, fam)
    assert is_maximal(fam, set(ex.j.entries), F_PROPERTY).maximal
    assert len(ex.j.certificates) == len(ex.j.entries)
    for a, b in zip(ex.chain, ex.chain[1:]):
        assert b[:len(a)] == a


def test_partial_targets_do_not_claim_maximality():
    fam = marker_family(random.Random(5), 5, 15, 0.3)
    g = gen.build_generic(fam, targets=[DenseSetQuery(0, fam.universe_bound)])
    ex = gen.extract_subfamily(g, fam, met=[0])
    assert ex.j.maximal is None and ex.j.notes


def test_target_outside_bound():
    with pytest.raises(gen.ExtensionExhausted):
        gen.build_generic(COMMON, targets=[DenseSetQuery(7, 3)])


def test_finite_maximal_precheck_finds_a_solution():
    sol = gen.finite_maximal_precheck(COMMON)
    assert sol is not None and is_maximal(COMMON, sol, F_PROPERTY).maximal
