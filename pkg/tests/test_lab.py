from fractions import Fraction as Fr

import pytest
from hypothesis import given, settings, strategies as st

from revmono.lab import (Counterexample, Instance, InstanceError, Record, SearchConfig, check_instance,
                         check_lemmas, check_theorem1, check_theorem2, check_theorem3, gen_dominating_pair,
                         random_instance, run_suite, search_hart_reny, stand_in_config)
from revmono.oracles import Environment
from revmono.prob import DiscreteDist, ProductDist, dominates
from revmono.valuations import XOSValuation
from strategies import D, products

COIN = D({1: "1/2", 2: "1/2"})


def test_record_verdicts():
    assert Record("a", "x >= y", 2, 1).verdict == "pass"
    assert Record("a", "x >= y", 1, 2).verdict == "fail"
    assert Record("a", "x == y", 1, 1, relation="==").verdict == "pass"
    assert Record("a", "x > y", 1, 1, relation=">").verdict == "fail"
    br = dict(relation=">=", regime="bracket")
    assert Record("b", "", 1, 2, lhs_hi=3, rhs_lo=2, **br).verdict == "inconclusive"
    assert Record("b", "", 1, 2, lhs_hi=3, rhs_lo=4, **br).verdict == "fail"
    assert Record("b", "", 1, 2, **br).verdict == "inconclusive"
    diag = Record("d", "", 0, 1, regime="diagnostic")
    assert diag.verdict == "fail" and not diag.counts
    with pytest.raises(ValueError):
        Record("a", "", 1, 1, relation="<")
    with pytest.raises(ValueError):
        Record("a", "", 1, 1, relation="==", regime="bracket")


def test_record_json_round_trip_and_tamper():
    r = Record("a", "x >= y", Fr(7, 3), Fr(1, 2), instance=4)
    obj = r.to_json()
    assert obj["verdict"] == "pass" and obj["ratio"] == ["14", "3"]
    assert Record.from_json(obj) == r
    obj["verdict"] = "fail"
    with pytest.raises(ValueError):
        Record.from_json(obj)


def test_gen_dominating_pair_examples():
    F = ProductDist.of([[COIN, DiscreteDist.point(2)]])
    assert gen_dominating_pair(F, 0, seed=3) == F
    G = gen_dominating_pair(ProductDist.of([[DiscreteDist.point(2)]]), 1, seed=1)
    assert len(G.entries[0][0]) == 1 and G.entries[0][0].support[0] >= 2
    with pytest.raises(ValueError):
        gen_dominating_pair(F, 2)


@given(products(n=2, m=2), st.integers(0, 10**6), st.fractions(0, 1))
def test_generated_pairs_dominate(F, seed, strength):
    G = gen_dominating_pair(F, strength, seed)
    assert all(dominates(f, g) for rf, rg in zip(F.entries, G.entries) for f, g in zip(rf, rg))


def test_instance_round_trip():
    inst = random_instance(7, 2, 2, 2, "xos", env_vertices=5, with_aspe=True)
    back = Instance.from_json(inst.to_json())
    assert back.to_json() == inst.to_json()


def test_instance_validation_failures():
    inst = random_instance(1, 1, 2, 2)
    obj = inst.to_json()
    swapped = dict(obj, F=obj["G"], G=obj["F"])
    with pytest.raises(InstanceError):
        Instance.from_json(swapped)
    with pytest.raises(InstanceError):
        Instance.from_json(dict(obj, n=2))
    with pytest.raises(InstanceError):
        Instance.from_json(dict(obj, params=dict(obj["params"], b=["3", "2"])))
    with pytest.raises(InstanceError):
        Instance.from_json({"n": 1})
    v_only = dict(swapped, params=dict(obj["params"], dominance="v"))
    with pytest.raises(InstanceError):
        Instance.from_json(v_only)


def test_theorem1_records():
    F = [COIN, DiscreteDist.point(1)]
    A = Environment.explicit([[0, 0], [1, 0], [0, 1]])
    assert check_theorem1(A, F, F).lhs == check_theorem1(A, F, F).rhs
    G = [D({1: "1/4", 2: "3/4"}), DiscreteDist.point(2)]
    assert check_theorem1(A, F, G).verdict == "pass"
    single = Environment.single_item(2)
    assert check_theorem1(single, F, G).verdict == "pass"


def test_theorem2_identity_pair():
    F = ProductDist.of([[COIN, D({0: "1/3", 3: "2/3"})]])
    recs = check_theorem2(F, F)
    assert recs and all(r.verdict == "pass" for r in recs)


def test_theorem3_point_mass():
    v = XOSValuation.additive(1, 2)
    F = ProductDist.of([[DiscreteDist.point(2), DiscreteDist.point(3)]])
    recs = {r.name: r for r in check_theorem3(v, F, F)}
    main = recs["xos_monotone"]
    assert main.verdict == "pass" and main.lhs == 5


def test_lemmas_on_stand_in():
    inst = random_instance(11, 2, 2, 2, "xos")
    stand = stand_in_config(inst.v, inst.F)
    recs = check_lemmas(inst.v, inst.F, inst.G, stand.chosen, stand.xi, inst.b)
    assert all(r.verdict == "pass" for r in recs if r.counts)


@settings(max_examples=8)
@given(st.integers(0, 10**6), st.sampled_from(["additive", "unit-demand", "xos"]))
def test_all_suites_pass_on_small_instances(seed, kind):
    inst = random_instance(seed, 1, 2, 2, kind, env_vertices=4)
    recs = check_instance(inst, "all")
    assert [r for r in recs if r.counts and r.verdict == "fail"] == []


def test_run_suite_order_independent_of_jobs():
    insts = [random_instance(s, 1, 2, 2) for s in range(3)]
    one = run_suite(insts, "theorem2")
    two = run_suite(insts, "theorem2", jobs=2)
    assert [r.to_json() for r in one] == [r.to_json() for r in two]
    assert [r.instance for r in one] == sorted(r.instance for r in one)


def test_search_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(m=3)
    with pytest.raises(ValueError):
        SearchConfig(budget=-1)
    assert search_hart_reny(SearchConfig(budget=0)) == []


def test_search_single_item_control():
    assert search_hart_reny(SearchConfig(budget=150, m=1), seed=2) == []


def test_counterexample_instance_certificate():
    # a fake gap is caught by the independent re-solve
    F = ProductDist.of([[COIN, COIN]])
    G = ProductDist.of([[D({1: "1/4", 2: "3/4"}), COIN]])
    inst = Counterexample(F, G, Fr(10), Fr(1)).to_instance(0)
    recs = {r.name: r for r in check_instance(Instance.from_json(inst.to_json()), "theorem1")}
    assert recs["certified_rev_F"].verdict == "fail"
    assert recs["certified_gap"].verdict == "fail"
