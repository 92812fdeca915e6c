import random
from fractions import Fraction as Fr

import numpy as np
import pytest
from scipy.optimize import linprog

from revmono import lp


def _random_lp(rng):
    n = rng.randint(1, 5)
    c = [rng.randint(-4, 6) for _ in range(n)]
    ub = [([rng.randint(-3, 5) for _ in range(n)], rng.randint(0, 10)) for _ in range(rng.randint(1, 5))]
    eq = []
    if rng.random() < 0.3:
        eq = [([rng.randint(0, 3) for _ in range(n)], rng.randint(0, 6))]
    return n, c, ub, eq


def _highs(n, c, ub, eq):
    kw = {}
    if eq:
        kw = dict(A_eq=np.array([r for r, _ in eq], float), b_eq=np.array([b for _, b in eq], float))
    res = linprog(-np.array(c, float), A_ub=np.array([r for r, _ in ub], float),
                  b_ub=np.array([b for _, b in ub], float), bounds=[(0, None)] * n, method="highs", **kw)
    return {0: "optimal", 2: "infeasible", 3: "unbounded"}[res.status], (-res.fun if res.status == 0 else None)


def test_matches_floating_solver_on_random_programs():
    rng = random.Random(11)
    for _ in range(300):
        n, c, ub, eq = _random_lp(rng)
        ref_status, ref = _highs(n, c, ub, eq)
        for rule in ("bland", "bland_reverse", "dantzig"):
            res = lp.maximize(c, n, ub, eq, rule=rule)
            assert res.status == ref_status
            if ref is not None:
                assert abs(float(res.value) - ref) < 1e-7
                assert lp.check_feasible(res.x, ub, eq)
                assert sum(Fr(a) * x for a, x in zip(c, res.x)) == res.value


def test_exact_small_program():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6
    res = lp.maximize([1, 1], 2, [([1, 2], 4), ([3, 1], 6)])
    assert res.optimal and res.value == Fr(14, 5) and res.x == [Fr(8, 5), Fr(6, 5)]


def test_row_addition_then_dual_simplex():
    t = lp.Tableau([1, 1], 2, [([1, 2], 4), ([3, 1], 6)])
    assert t.solve() == "optimal"
    t.add_ub_row([1, 0], 1)
    assert t.dual_simplex() == "optimal"
    assert t.value() == lp.maximize([1, 1], 2, [([1, 2], 4), ([3, 1], 6), ([1, 0], 1)]).value


def test_feasibility_helpers():
    assert lp.feasible_point(1, ub=[([1], -1)]) is None
    x = lp.feasible_point(2, eq=[([1, 1], 1)])
    assert x is not None and sum(x) == 1


def test_unknown_rule():
    with pytest.raises(ValueError):
        lp.maximize([1], 1, [([1], 1)], rule="steepest")
