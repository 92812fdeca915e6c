import itertools
from fractions import Fraction as Fr

import pytest
from hypothesis import given, strategies as st

from revmono.errors import NoSupportingPrices
from revmono.valuations import (TableValuation, XOSValuation, alpha_of, check_structure, check_supporting,
                                subsets, valuation_from_json)

ALL = [frozenset(), frozenset({0}), frozenset({1}), frozenset({0, 1})]


def test_value_examples():
    add, ud = XOSValuation.additive(1, 2), XOSValuation.unit_demand(1, 2)
    assert add.value(0, (3, 5), {0, 1}) == 8
    assert ud.value(0, (3, 5), {0, 1}) == 5
    assert add.value(0, (3, 5), set()) == 0 and ud.value(0, (3, 5), set()) == 0


def test_supporting_price_examples():
    add, ud = XOSValuation.additive(1, 2), XOSValuation.unit_demand(1, 2)
    assert add.supporting_prices(0, (3, 5), {0, 1}) == {0: 3, 1: 5}
    p = ud.supporting_prices(0, (3, 5), {0, 1})
    assert p == {0: 0, 1: 5}
    assert check_supporting(ud, 0, (3, 5), {0, 1}, p)
    assert sum(p.values()) == ud.value(0, (3, 5), {0, 1})


def test_subsets_order():
    assert subsets([1, 0]) == [frozenset(), frozenset({0}), frozenset({1}), frozenset({0, 1})]


clause = st.lists(st.sampled_from([Fr(0), Fr(1, 2), Fr(1), Fr(2)]), min_size=2, max_size=2)
types = st.tuples(st.integers(0, 5), st.integers(0, 5))


@given(st.lists(clause, min_size=1, max_size=3), types)
def test_xos_structure_and_support(clauses, t):
    v = XOSValuation.of([clauses])
    rep = check_structure(v, [[t, (t[0] + 1, t[1])]])
    assert rep.monotone and rep.subadditive and rep.no_externalities
    for S in ALL:
        p = v.supporting_prices(0, t, S)
        assert check_supporting(v, 0, t, S, p, 1)
    assert alpha_of(v) == 1


@given(types, st.integers(0, 5))
def test_value_reads_only_coordinates_in_bundle(t, other):
    v = XOSValuation.of([[[1, Fr(1, 2)], [0, 1]]])
    assert v.value(0, t, {0}) == v.value(0, (t[0], other), {0})


@given(types)
def test_unit_demand_is_max(t):
    v = XOSValuation.unit_demand(1, 2)
    for S in ALL:
        assert v.value(0, t, S) == max((t[j] for j in S), default=0)


def _table(vals):
    return TableValuation(2, ({(1, 1): {frozenset(S): Fr(x) for S, x in vals.items()}},))


def test_table_structure_violations():
    superadd = _table({(0,): 1, (1,): 1, (0, 1): 3})
    rep = check_structure(superadd, [[(1, 1)]])
    assert not rep.subadditive and "subadditive" in rep.violation
    with pytest.raises(NoSupportingPrices):
        alpha_of(superadd)
    ext = TableValuation(2, ({(1, 1): {frozenset({0}): Fr(1), frozenset({1}): Fr(1), frozenset({0, 1}): Fr(2)},
                              (1, 2): {frozenset({0}): Fr(2), frozenset({1}): Fr(2),
                                       frozenset({0, 1}): Fr(3)}},))
    assert not check_structure(ext, [[(1, 1), (1, 2)]]).no_externalities


def test_table_alpha_by_lp():
    # v({0}) = v({1}) = v({0,1}) = 2: best supporting sum is 2, so alpha = 1
    flat = _table({(0,): 2, (1,): 2, (0, 1): 2})
    assert alpha_of(flat) == 1
    # subadditive but not XOS: nonempty proper subsets worth 1, all three worth 2;
    # pairs cap prices at 1/2 each, so the best supporting sum is 3/2
    vals = {frozenset(S): Fr(1) for r in (1, 2) for S in itertools.combinations(range(3), r)}
    vals[frozenset(range(3))] = Fr(2)
    three = TableValuation(3, ({(1, 1, 1): vals},))
    assert check_structure(three, [[(1, 1, 1)]]).subadditive
    assert alpha_of(three) == Fr(4, 3)


def test_json_round_trip():
    v = XOSValuation.of([[[1, Fr(1, 2)]], [[0, 1], [1, 0]]])
    assert valuation_from_json(v.to_json()) == v
    t = _table({(0,): 1, (1,): 1, (0, 1): 2})
    assert valuation_from_json(t.to_json()).value(0, (1, 1), {0, 1}) == 2
