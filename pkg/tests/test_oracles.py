import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fip.core import F_PROPERTY, Family, check_property, d, dbar, is_maximal
from fip.oracles import (BRUTE_FORCE_LIMIT, OracleBoundExceeded, brute_force_maximal, brute_g,
                         brute_is_maximal, eq1_violations)
from fip.solvers import compute_g

from conftest import marker_family, marker_families


def test_disjoint_family_dbar2_gives_singletons():
    fam = Family.from_sets([{0}, {2}, {4}])
    assert brute_force_maximal(fam, dbar(2)) == [frozenset({0}), frozenset({1}), frozenset({2})]


def test_common_element_gives_everything():
    fam = Family.from_sets([{0, 1}, {2, 1}, {4, 1}, {6, 1}])
    assert brute_force_maximal(fam, F_PROPERTY) == [frozenset(range(4))]


def test_duplicates_travel_together():
    fam = Family.from_sets([{5}, {5}, {7}])
    assert brute_force_maximal(fam, d(2)) == [frozenset({0, 1, 2})]
    assert brute_force_maximal(fam, F_PROPERTY) == [frozenset({0, 1}), frozenset({2})]


def test_guard():
    fam = Family.from_sets([{2 * i} for i in range(BRUTE_FORCE_LIMIT + 1)])
    with pytest.raises(OracleBoundExceeded):
        brute_force_maximal(fam, F_PROPERTY)


@settings(max_examples=60, deadline=None)
@given(marker_families(max_index=6, max_universe=20),
       st.sampled_from([F_PROPERTY, d(2), dbar(2), dbar(3)]))
def test_every_brute_solution_is_maximal_for_the_checker(fam, prop):
    for sol in brute_force_maximal(fam, prop):
        assert is_maximal(fam, sol, prop).maximal


def test_eq1_oracle_detects_a_wrong_hat():
    a = Family.from_sets([{0, 1}, {2, 1}, {4, 1}])
    wrong = Family.from_sets([{0, 1}, {2, 1}, {4, 3}])
    assert eq1_violations(a, wrong, 2) == [(0, 2), (1, 2), (0, 1, 2)]
    assert eq1_violations(a, a, 2) == []


@pytest.mark.parametrize("seed", range(20))
def test_brute_g_agrees_with_compute_g(seed):
    fam = marker_family(random.Random(seed), 5, 21, 0.35)
    for s in range(5):
        assert brute_g(fam, s) == compute_g(fam, s)


def test_brute_is_maximal_uses_closure():
    fam = Family.from_sets([{0, 1}, {2, 1}, {4, 3}])
    assert brute_is_maximal(fam, {0, 1}, dbar(2))
    assert not brute_is_maximal(fam, {0}, dbar(2))
    assert check_property(fam, dbar(2), {0, 1}).holds
