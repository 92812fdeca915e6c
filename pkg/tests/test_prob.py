from fractions import Fraction as Fr

import pytest
from hypothesis import given, strategies as st

from revmono.caps import Caps
from revmono.errors import CapExceeded, DominanceViolation
from revmono.prob import (DiscreteDist, ProductDist, check_coupling, dominates, quantile_couple,
                          v_dominates, v_dominates_profile)
from revmono.valuations import XOSValuation
from strategies import D, dists


def test_construction_normalizes():
    d = DiscreteDist.from_pairs([(2, Fr(1, 4)), (1, Fr(1, 2)), (2, Fr(1, 4)), (5, 0)])
    assert d.support == (1, 2) and d.probs == (Fr(1, 2), Fr(1, 2))


@pytest.mark.parametrize("support,probs", [((1, 1), (Fr(1, 2), Fr(1, 2))), ((1,), (Fr(1, 2),)),
                                           ((-1,), (Fr(1),)), ((1, 2), (Fr(1), Fr(0)))])
def test_invalid_raw_construction(support, probs):
    with pytest.raises(ValueError):
        DiscreteDist(tuple(map(Fr, support)), probs)


def test_survival_and_mean():
    d = D({1: "1/2", 3: "1/2"})
    assert d.survival(2) == Fr(1, 2) and d.survival(3) == 0 and d.cdf(1) == Fr(1, 2)
    assert d.mean() == 2


def test_dominance_examples():
    assert dominates(DiscreteDist.point(1), DiscreteDist.point(2))
    F, G = D({1: "1/2", 3: "1/2"}), DiscreteDist.point(2)
    assert dominates(F, F)
    assert not dominates(F, G) and not dominates(G, F)


def test_quantile_couple_examples():
    a = DiscreteDist.point(3)
    assert quantile_couple(a, a).pairs == (((3, 3), 1),)
    F, G = D({0: "1/2", 1: "1/2"}), D({0: "1/4", 1: "3/4"})
    c = quantile_couple(F, G)
    assert set(c.pairs) == {((0, 0), Fr(1, 4)), ((0, 1), Fr(1, 4)), ((1, 1), Fr(1, 2))}
    with pytest.raises(DominanceViolation):
        quantile_couple(DiscreteDist.point(2), DiscreteDist.point(1))


@given(dists(), dists(), dists())
def test_dominance_is_a_partial_order(a, b, c):
    assert dominates(a, a)
    if dominates(a, b) and dominates(b, c):
        assert dominates(a, c)
    if dominates(a, b) and dominates(b, a):
        assert a == b


@given(dists(), st.lists(st.integers(0, 3), min_size=3, max_size=3))
def test_quantile_coupling_invariants(F, bumps):
    # raising atoms yields a dominating distribution
    G = DiscreteDist.from_pairs((x + bumps[k % 3], p) for k, (x, p) in enumerate(F.items()))
    c = quantile_couple(F, G)
    assert check_coupling(c, dict(F.items()), dict(G.items()))
    assert all(b >= a for (a, b), _ in c.pairs)


def test_v_dominance_examples():
    v = XOSValuation.additive(1, 2)
    row = [D({1: "1/2", 2: "1/2"}), D({0: "1/3", 3: "2/3"})]
    res = v_dominates(v, 0, row, row)
    assert res and check_coupling(res.witness, res.witness.left(), res.witness.right())
    one = XOSValuation.additive(1, 1)
    assert not v_dominates(one, 0, [DiscreteDist.point(2)], [DiscreteDist.point(1)])


@given(dists(2), dists(2), dists(2), dists(2))
def test_v_dominance_additive_matches_coordinatewise(f1, f2, g1, g2):
    v = XOSValuation.additive(1, 2)
    coord = dominates(f1, g1) and dominates(f2, g2)
    res = v_dominates(v, 0, [f1, f2], [g1, g2])
    if coord:
        assert res
    if res:
        # witness marginals and pointwise order
        w = res.witness
        G_atoms = {(a, b): p * q for a, p in g1.items() for b, q in g2.items()}
        F_atoms = {(a, b): p * q for a, p in f1.items() for b, q in f2.items()}
        assert check_coupling(w, G_atoms, F_atoms)
        for (t, s), _ in w.pairs:
            assert all(v.value(0, t, S) >= v.value(0, s, S) for S in [(), (0,), (1,), (0, 1)])


def test_v_dominance_beyond_coordinatewise():
    # unit demand only sees the best item, so swapping coordinates is v-dominance but not coordinatewise
    v = XOSValuation.unit_demand(1, 2)
    F = [DiscreteDist.point(1), DiscreteDist.point(0)]
    G = [DiscreteDist.point(0), DiscreteDist.point(1)]
    assert not v_dominates(v, 0, F, G)
    G2 = [DiscreteDist.point(1), DiscreteDist.point(1)]
    assert v_dominates(v, 0, F, G2)


def test_product_profiles_and_caps():
    P = ProductDist.of([[D({0: "1/2", 1: "1/2"}), DiscreteDist.point(2)], [D({1: "1/3", 2: "2/3"}),
                                                                          DiscreteDist.point(0)]])
    prof = P.profiles()
    assert len(prof) == P.joint_size() == 4 and sum(p for _, p in prof) == 1
    with pytest.raises(CapExceeded):
        P.profiles(Caps(joint=3))
    assert all(len(r) for r in v_dominates_profile(XOSValuation.additive(2, 2), P, P))
