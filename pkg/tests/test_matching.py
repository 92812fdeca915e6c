import itertools
from fractions import Fraction as Fr

from hypothesis import given, strategies as st

from revmono.matching import max_weight_matching


def _brute(w):
    rows, cols = len(w), len(w[0])
    best = Fr(0)
    for k in range(min(rows, cols) + 1):
        for rs in itertools.combinations(range(rows), k):
            for cs in itertools.permutations(range(cols), k):
                best = max(best, sum((max(w[r][c], 0) for r, c in zip(rs, cs)), Fr(0)))
    return best


weights = st.integers(1, 3).flatmap(lambda r: st.integers(1, 4).flatmap(
    lambda c: st.lists(st.lists(st.fractions(-3, 5, max_denominator=4), min_size=c, max_size=c),
                       min_size=r, max_size=r)))


@given(weights)
def test_matches_brute_force(w):
    val, pairs = max_weight_matching(w)
    assert val == _brute(w)
    assert len({i for i, _ in pairs}) == len(pairs) == len({j for _, j in pairs})
    assert val == sum((w[i][j] for i, j in pairs), Fr(0))


def test_empty_and_negative():
    assert max_weight_matching([]) == (0, [])
    assert max_weight_matching([[Fr(-1)]]) == (0, [])
