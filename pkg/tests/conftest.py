import random

from hypothesis import strategies as st

from fip.core import Family


def marker_family(rng: random.Random, I: int, U: int, p: float = 0.3) -> Family:
    """``A_i = {2i}`` plus odd numbers up to ``U`` kept with probability ``p``."""
    return Family.from_sets([{2 * i} | {x for x in range(1, U + 1, 2) if rng.random() < p}
                             for i in range(I)], U)


@st.composite
def marker_families(draw, max_index=5, max_universe=30, min_index=1):
    I = draw(st.integers(min_index, max_index))
    U = draw(st.integers(max(2 * (I - 1), 1), max(max_universe, 2 * (I - 1))))
    odds = list(range(1, U + 1, 2))
    sets = [{2 * i} | draw(st.sets(st.sampled_from(odds), max_size=6)) if odds else {2 * i}
            for i in range(I)]
    return Family.from_sets(sets, U)


@st.composite
def plain_families(draw, max_index=5, max_universe=12):
    """Arbitrary finite sets, no marker convention."""
    I = draw(st.integers(1, max_index))
    U = draw(st.integers(0, max_universe))
    sets = [draw(st.sets(st.integers(0, U), max_size=U + 1)) for _ in range(I)]
    return Family.from_sets(sets, U)
