import itertools
from fractions import Fraction as Fr

import pytest
from hypothesis import given, settings, strategies as st

from revmono.errors import DomainError
from revmono.lab import gen_dominating_pair
from revmono.oracles import (Environment, _pricing_revenue, constants, drev_ud, ironed_virtuals, monopoly_price,
                             opt_copies_ud, opt_single_param, rev_bic_lp, virtual_values)
from revmono.prob import DiscreteDist, ProductDist
from revmono.valuations import XOSValuation
from strategies import D, dists, products

COIN = D({1: "1/2", 2: "1/2"})
ONE_ITEM = Environment.explicit([[0], [1]])


def payment_of_rule(F, x):
    """Expected payment of a monotone rule ``x`` (one value per atom) with binding local IC."""
    vals, probs = F.support, F.probs
    total = Fr(0)
    for k in range(len(vals)):
        pay = vals[k] * x[k] - sum(x[l] * (vals[l + 1] - vals[l]) for l in range(k))
        total += probs[k] * pay
    return total


def monotone_rules(k, levels=(Fr(0), Fr(1, 2), Fr(1))):
    return [x for x in itertools.product(levels, repeat=k) if all(a <= b for a, b in zip(x, x[1:]))]


def test_virtual_value_examples():
    assert ironed_virtuals(DiscreteDist.point(3)).ironed == (3,)
    iv = ironed_virtuals(COIN)
    assert iv.raw == iv.ironed == (0, 2)


def test_ironing_non_regular():
    F = D({1: "1/2", 2: "1/10", 3: "2/5"})
    raw = virtual_values(F)
    assert raw[0] > raw[1]
    iv = ironed_virtuals(F)
    assert iv.ironed[0] == iv.ironed[1] and iv.ironed[1] <= iv.ironed[2]
    # rules constant on the ironed interval pay exactly their ironed surplus
    for x in monotone_rules(3):
        if x[0] == x[1]:
            assert payment_of_rule(F, x) == sum(p * a * b for p, a, b in zip(F.probs, iv.ironed, x))


@given(dists(max_atoms=3))
def test_ironed_surplus_bounds_every_monotone_rule(F):
    iv = ironed_virtuals(F)
    greedy = sum(p * max(phi, 0) for p, phi in zip(F.probs, iv.ironed))
    best = Fr(0)
    for x in monotone_rules(len(F)):
        pay = payment_of_rule(F, x)
        assert pay == sum(p * phi * a for p, phi, a in zip(F.probs, iv.raw, x))
        assert pay <= sum(p * phi * a for p, phi, a in zip(F.probs, iv.ironed, x))
        best = max(best, pay)
    assert greedy == best == monopoly_price(F)[1]


def test_opt_single_param_examples():
    assert opt_single_param(ONE_ITEM, [COIN]) == 1
    assert opt_single_param(Environment.explicit([[0, 0]]), [COIN, COIN]) == 0


@given(dists(max_atoms=3))
def test_single_buyer_single_item_is_monopoly(F):
    assert opt_single_param(ONE_ITEM, [F]) == monopoly_price(F)[1]


@given(products(n=3, m=1), st.integers(0, 10**6), st.data())
def test_single_param_monotone(F, seed, data):
    vecs = data.draw(st.lists(st.tuples(*[st.sampled_from([Fr(0), Fr(1, 2), Fr(1)])] * 3),
                              min_size=1, max_size=7))
    A = Environment.explicit([(0, 0, 0)] + vecs)
    G = gen_dominating_pair(F, Fr(1, 2), seed)
    assert opt_single_param(A, G.column(0)) >= opt_single_param(A, F.column(0))


def test_copies_examples():
    F = ProductDist.of([[COIN]])
    assert opt_copies_ud(F) == opt_single_param(ONE_ITEM, [COIN])
    # profiles (1,1), (1,2), (2,1), (2,2) have best clipped ironed virtual 0, 2, 2, 2
    assert opt_copies_ud(ProductDist.of([[COIN, COIN]])) == Fr(3, 2)


def drev_by_assignment(types, m):
    """Best item pricing for one unit-demand buyer: enumerate type -> item assignments and take
    the largest prices consistent with each one (shortest paths over difference constraints)."""
    best = Fr(0)
    for a in itertools.product(range(-1, m), repeat=len(types)):
        used = sorted({j for j in a if j >= 0})
        if not used:
            continue
        edges = []
        for (t, _), j in zip(types, a):
            if j >= 0:
                edges.append((-1, j, t[j]))
                edges += [(k, j, t[j] - t[k]) for k in used if k != j]
            else:
                edges += [(k, -1, -t[k]) for k in used]
        dist = {-1: Fr(0)}
        for _ in range(len(used) + 1):
            for u, w, wt in edges:
                if u in dist and (w not in dist or dist[u] + wt < dist[w]):
                    dist[w] = dist[u] + wt
        if any(u in dist and (w not in dist or dist[u] + wt < dist[w]) for u, w, wt in edges):
            continue
        if dist[-1] < 0:
            continue
        best = max(best, sum(p * dist[j] for (t, p), j in zip(types, a) if j >= 0))
    return best


def test_drev_examples():
    assert drev_ud(ProductDist.of([[COIN]])).lower == 1
    F = ProductDist.of([[DiscreteDist.point(3), DiscreteDist.point(5)]])
    assert drev_ud(F) == (5, 5)
    with pytest.raises(DomainError):
        drev_ud(ProductDist.of([[COIN], [COIN]]), "exact")


def test_drev_beats_support_prices():
    F = ProductDist.of([[D({4: "2/5", 5: "3/5"}), DiscreteDist.point(1), D({2: "3/4", 7: "1/4"})]])
    support_only = max(_pricing_revenue(p, F.buyer_types(0))
                       for p in itertools.product(*[[None, *d.support] for d in F.row(0)]))
    assert support_only == Fr(43, 10)
    assert drev_ud(F).lower == drev_by_assignment(F.buyer_types(0), 3) == Fr(9, 2)


@settings(max_examples=40)
@given(products(n=1, m=2, max_atoms=2))
def test_drev_matches_assignment_oracle(F):
    assert drev_ud(F).lower == drev_by_assignment(F.buyer_types(0), 2)


@settings(max_examples=15)
@given(products(n=2, m=2, max_atoms=2))
def test_drev_bracket_and_chain(F):
    ud = XOSValuation.unit_demand(2, 2)
    br = drev_ud(F)
    copies = opt_copies_ud(F)
    assert br.lower <= br.upper == copies
    dic = rev_bic_lp(ud, F, "DIC").value
    bic = rev_bic_lp(ud, F, "BIC").value
    assert br.lower <= dic <= bic <= 4 * copies


def test_lp_examples():
    add = XOSValuation.additive(1, 1)
    assert rev_bic_lp(add, ProductDist.of([[COIN]])).value == 1
    v = XOSValuation.of([[[1, 2]], [[3, 1]]])
    point = ProductDist.of([[DiscreteDist.point(2), DiscreteDist.point(1)],
                            [DiscreteDist.point(1), DiscreteDist.point(3)]])
    # one type per buyer: the optimum extracts the full welfare-maximizing value
    best = max(v.value(0, (2, 1), S0) + v.value(1, (1, 3), S1)
               for S0, S1 in [(frozenset(), frozenset({0, 1})), (frozenset({0}), frozenset({1})),
                              (frozenset({1}), frozenset({0})), (frozenset({0, 1}), frozenset())])
    assert rev_bic_lp(v, point).value == best
    two = rev_bic_lp(XOSValuation.additive(1, 2), ProductDist.of([[COIN, COIN]])).value
    assert two >= Fr(9, 4)


@settings(max_examples=50)
@given(dists(max_atoms=3))
def test_lp_matches_monopoly(F):
    assert rev_bic_lp(XOSValuation.additive(1, 1), ProductDist.of([[F]])).value == monopoly_price(F)[1]


@settings(max_examples=20)
@given(products(n=1, m=2, max_atoms=2))
def test_lp_independent_pivoting_agrees(F):
    v = XOSValuation.additive(1, 2)
    a = rev_bic_lp(v, F)
    b = rev_bic_lp(v, F, lazy=False, rule="bland_reverse")
    assert a.value == b.value


def test_lp_rejects_concept():
    with pytest.raises(ValueError):
        rev_bic_lp(XOSValuation.additive(1, 1), ProductDist.of([[COIN]]), "EPIC")


def test_constants():
    assert constants(Fr(1, 4)) == (1448, Fr(20, 3))
    with pytest.raises(DomainError):
        constants(1)
    with pytest.raises(DomainError):
        constants(Fr(1, 2), Fr(1, 2))
    base = constants(Fr(1, 4)).lam
    for b in (Fr(1, 100), Fr(1, 10), Fr(1, 2), Fr(9, 10), Fr(99, 100)):
        assert constants(b).lam > base
    assert constants(Fr(1, 4), 2).lam > base
