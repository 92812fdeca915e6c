"""Exact optimal-revenue oracles on finite type spaces.

* :func:`ironed_virtuals` -- discrete Myerson virtual values, ironed by
  taking the concave hull of the revenue curve in quantile space.
* :func:`opt_single_param` -- optimal DIC-IR revenue in a single-parameter
  environment: the expected maximum ironed virtual surplus.
* :func:`opt_copies_ud` -- the same for the ``n*m``-bidder copies
  environment with unit-demand matching constraints.
* :func:`drev_ud` -- optimal deterministic revenue for unit-demand buyers,
  exact for one buyer and bracketed otherwise.
* :func:`rev_bic_lp` -- optimal randomized BIC-BIR (or DIC-IR) revenue as an
  exact LP, with lazily generated incentive constraints.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from . import lp
from .caps import DEFAULT_CAPS, Caps, guard
from .errors import DomainError, Infeasible
from .matching import max_weight_matching
from .mechanisms import RSPMConfig, rspm_revenue
from .prob import DiscreteDist, ProductDist, as_fraction, product_atoms
from .valuations import XOSValuation

# -- virtual values ----------------------------------------------------------


@dataclass(frozen=True)
class IronedVirtuals:
    support: tuple[Fraction, ...]
    raw: tuple[Fraction, ...]
    ironed: tuple[Fraction, ...]

    def __post_init__(self):
        if any(a > b for a, b in zip(self.ironed, self.ironed[1:])):
            raise AssertionError("ironed virtual values must be non-decreasing")

    def at(self, value) -> Fraction:
        return self.ironed[self.support.index(value)]

    def as_dict(self) -> dict[Fraction, Fraction]:
        return dict(zip(self.support, self.ironed))


def _upper_hull(points: list[tuple[Fraction, Fraction]]) -> list[tuple[Fraction, Fraction]]:
    hull: list[tuple[Fraction, Fraction]] = []
    for p in sorted(points):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] if it lies on or below the chord hull[-2] -> p
            if (y2 - y1) * (p[0] - x1) <= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def _interp(hull, x) -> Fraction:
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        if x1 <= x <= x2:
            return y1 + (y2 - y1) * (x - x1) / (x2 - x1)
    raise ValueError("point outside hull range")


def virtual_values(F: DiscreteDist) -> tuple[Fraction, ...]:
    """``phi(v_k) = v_k - (v_{k+1} - v_k) * Pr{V > v_k} / Pr{V = v_k}``; top atom gets its value."""
    out = []
    vals, probs = F.support, F.probs
    tail = Fraction(1)
    for k, (v, f) in enumerate(zip(vals, probs)):
        tail -= f
        if k + 1 < len(vals):
            out.append(v - (vals[k + 1] - v) * tail / f)
        else:
            out.append(v)
    return tuple(out)


def ironed_virtuals(F: DiscreteDist) -> IronedVirtuals:
    """Discrete virtual values and their ironed (monotone) version.

    The revenue curve places atom ``k`` at quantile ``Pr{V >= v_k}`` with
    height ``v_k * Pr{V >= v_k}``; raw virtual values are the slopes of
    consecutive segments and ironed ones are the slopes of its upper
    concave hull over the same segments.
    """
    vals, probs = F.support, F.probs
    K = len(vals)
    # q[k] = Pr{V >= v_k}, q[K] = 0
    q = [Fraction(0)] * (K + 1)
    for k in range(K - 1, -1, -1):
        q[k] = q[k + 1] + probs[k]
    pts = [(Fraction(0), Fraction(0))] + [(q[k], vals[k] * q[k]) for k in range(K)]
    hull = _upper_hull(pts)
    H = [_interp(hull, q[k]) for k in range(K)] + [Fraction(0)]
    ironed = tuple((H[k] - H[k + 1]) / probs[k] for k in range(K))
    return IronedVirtuals(vals, virtual_values(F), ironed)


def monopoly_price(F: DiscreteDist) -> tuple[Fraction, Fraction]:
    """Revenue-maximizing posted price among support points (lowest on ties) and its revenue."""
    best_p, best_r = F.support[0], None
    for p in F.support:
        r = p * (F.survival(p) + dict(F.items())[p])
        if best_r is None or r > best_r:
            best_p, best_r = p, r
    return best_p, best_r


# -- single-parameter environments -------------------------------------------


@dataclass(frozen=True)
class Environment:
    """Feasible allocation vectors ``A``.

    Either an explicit list of vectors in ``[0, 1]^n`` (must include the
    zero vector), or the unit-demand matching constraints over an
    ``n x m`` grid of bidders ``(i, j)``.
    """

    vectors: tuple[tuple[Fraction, ...], ...] | None = None
    grid: tuple[int, int] | None = None

    def __post_init__(self):
        if (self.vectors is None) == (self.grid is None):
            raise ValueError("give exactly one of vectors or grid")
        if self.vectors is not None:
            vecs = tuple(sorted({tuple(as_fraction(x) for x in a) for a in self.vectors}))
            if not vecs:
                raise ValueError("environment must be non-empty")
            n = len(vecs[0])
            if any(len(a) != n for a in vecs):
                raise ValueError("allocation vectors must share a length")
            if any(x < 0 or x > 1 for a in vecs for x in a):
                raise ValueError("allocation entries must lie in [0, 1]")
            if (Fraction(0),) * n not in vecs:
                raise ValueError("the zero allocation must be feasible")
            object.__setattr__(self, "vectors", vecs)

    @classmethod
    def explicit(cls, vectors) -> "Environment":
        return cls(vectors=tuple(tuple(a) for a in vectors))

    @classmethod
    def single_item(cls, n: int) -> "Environment":
        """Zero vector plus the ``n`` unit vectors: one item, at most one winner."""
        return cls.explicit([[0] * n] + [[int(i == k) for i in range(n)] for k in range(n)])

    @classmethod
    def matching(cls, n: int, m: int) -> "Environment":
        return cls(grid=(n, m))

    @property
    def n(self) -> int:
        if self.grid is not None:
            return self.grid[0] * self.grid[1]
        return len(self.vectors[0])

    def best(self, weights: Sequence[Fraction]) -> tuple[Fraction, tuple]:
        """Max of ``sum_i w_i a_i`` over ``A``; explicit sets break ties lexicographically."""
        if self.grid is not None:
            n, m = self.grid
            W = [[weights[i * m + j] for j in range(m)] for i in range(n)]
            val, pairs = max_weight_matching(W)
            a = [Fraction(0)] * (n * m)
            for i, j in pairs:
                a[i * m + j] = Fraction(1)
            return val, tuple(a)
        best_v, best_a = None, None
        for a in self.vectors:
            s = sum((w * x for w, x in zip(weights, a)), Fraction(0))
            if best_v is None or s > best_v:
                best_v, best_a = s, a
        return best_v, best_a

    def to_json(self):
        from .serialize import rat
        if self.grid is not None:
            return {"matching": list(self.grid)}
        return [[rat(x) for x in a] for a in self.vectors]

    @classmethod
    def from_json(cls, obj) -> "Environment":
        from .serialize import unrat
        if isinstance(obj, dict):
            n, m = obj["matching"]
            return cls.matching(int(n), int(m))
        return cls.explicit([[unrat(x) for x in a] for a in obj])


def opt_single_param(A: Environment, dists: Sequence[DiscreteDist], caps: Caps = DEFAULT_CAPS) -> Fraction:
    """``REV_A``: expected maximum ironed virtual surplus over ``A``."""
    if len(dists) != A.n:
        raise ValueError(f"environment has {A.n} bidders, got {len(dists)} distributions")
    phis = [ironed_virtuals(d).ironed for d in dists]
    atoms = product_atoms([DiscreteDist(d.support, d.probs) for d in dists], caps.joint)
    index = [dict(zip(d.support, range(len(d)))) for d in dists]
    total = Fraction(0)
    for t, p in atoms:
        w = [phis[i][index[i][x]] for i, x in enumerate(t)]
        total += p * A.best(w)[0]
    return total


def allocation_rule(A: Environment, dists: Sequence[DiscreteDist], caps: Caps = DEFAULT_CAPS) -> dict:
    """The allocation chosen at every profile by the ironed-virtual-surplus maximizer."""
    phis = [ironed_virtuals(d).as_dict() for d in dists]
    return {t: A.best([phis[i][x] for i, x in enumerate(t)])[1]
            for t, _ in product_atoms(dists, caps.joint)}


def opt_copies_ud(F: ProductDist, caps: Caps = DEFAULT_CAPS) -> Fraction:
    """Optimal revenue of the ``n*m`` single-parameter copies under matching constraints."""
    dists = [d for row in F.entries for d in row]
    return opt_single_param(Environment.matching(F.n, F.m), dists, caps)


# -- deterministic unit-demand revenue ---------------------------------------


class Bracket(NamedTuple):
    lower: Fraction
    upper: Fraction

    @property
    def exact(self) -> bool:
        return self.lower == self.upper


def _pricing_revenue(prices: Sequence[Fraction | None], types) -> Fraction:
    """Item-pricing revenue for one unit-demand buyer, ties resolved toward the higher price."""
    total = Fraction(0)
    for t, p in types:
        best_u, best_price = None, None
        for j, price in enumerate(prices):
            if price is None:
                continue
            u = t[j] - price
            if best_u is None or u > best_u or (u == best_u and price > best_price):
                best_u, best_price = u, price
        if best_u is not None and best_u >= 0:
            total += p * best_price
    return total


def candidate_price_vectors(supports: Sequence[Sequence[Fraction]]) -> set[tuple]:
    """Price vectors that can be optimal for one unit-demand buyer.

    For a fixed assignment of types to items the best prices solve a system
    of difference constraints, so each finite price is a shortest-path
    distance from the outside option: a support value of some item plus a
    chain of differences ``t_j - t_k`` along distinct items. Every forest of
    such chains is enumerated; ``None`` marks an item that is not offered.
    """
    m = len(supports)
    out: set[tuple] = set()
    # parent[j]: -1 root (price from supports[j]), -2 off, k >= 0 chained on item k
    for parent in itertools.product(*[[-2, -1] + [k for k in range(m) if k != j] for j in range(m)]):
        order = _topological(parent)
        if order is None:
            continue
        choices = []
        for j in order:
            par = parent[j]
            if par == -2:
                choices.append([None])
            elif par == -1:
                choices.append(list(supports[j]))
            else:
                choices.append(sorted({a - b for a in supports[j] for b in supports[par]}))
        for combo in itertools.product(*choices):
            prices: list = [None] * m
            ok = True
            for j, d in zip(order, combo):
                par = parent[j]
                if par >= 0:
                    if prices[par] is None:
                        ok = False
                        break
                    prices[j] = prices[par] + d
                else:
                    prices[j] = d
            if ok:
                out.add(tuple(prices))
    return out


def _topological(parent) -> list[int] | None:
    m = len(parent)
    order, placed = [], set()
    while len(order) < m:
        progress = False
        for j in range(m):
            if j not in placed and (parent[j] < 0 or parent[j] in placed):
                order.append(j)
                placed.add(j)
                progress = True
        if not progress:
            return None
    return order


def best_rspm(v, F: ProductDist, grid: Sequence[Sequence[Sequence]] | None = None,
              caps: Caps = DEFAULT_CAPS) -> tuple[RSPMConfig, Fraction]:
    """Best RSPM (with ``p = xi``) over a price grid.

    The default grid for ``(i, j)`` is the support of ``V_ij`` plus "not
    offered".
    """
    n, m = F.n, F.m
    if grid is None:
        grid = [[[None] + sorted({v.item_value(i, t, j) for t, _ in F.buyer_types(i, caps)})
                 for j in range(m)] for i in range(n)]
    flat = [g for row in grid for g in row]
    size = 1
    for g in flat:
        size *= len(g)
    guard("RSPM price grid", size, caps.joint)
    best_cfg, best = None, None
    for combo in itertools.product(*flat):
        xi = [list(combo[i * m:(i + 1) * m]) for i in range(n)]
        cfg = RSPMConfig(xi)
        r = rspm_revenue(cfg, v, F, caps)
        if best is None or r > best:
            best_cfg, best = cfg, r
    return best_cfg, best


def drev_ud(F: ProductDist, mode: str = "auto", caps: Caps = DEFAULT_CAPS) -> Bracket:
    """Optimal deterministic DIC-IR revenue with unit-demand buyers, item values ``F``.

    One buyer: exact, by maximizing item-pricing revenue over
    :func:`candidate_price_vectors`. Several buyers: a bracket whose lower
    end is the best RSPM over support prices and whose upper end is
    :func:`opt_copies_ud`.
    """
    if mode not in ("auto", "exact", "bracket"):
        raise ValueError(f"unknown mode {mode!r}")
    if F.n == 1 and mode != "bracket":
        types = F.buyer_types(0, caps)
        cands = candidate_price_vectors([d.support for d in F.row(0)])
        guard("price vectors x types", len(cands) * len(types), caps.joint * 10)
        best = max(_pricing_revenue(p, types) for p in cands)
        return Bracket(best, best)
    if mode == "exact":
        raise DomainError("exact deterministic revenue is only available for one buyer")
    lower = best_rspm(XOSValuation.unit_demand(F.n, F.m), F, caps=caps)[1]
    return Bracket(lower, opt_copies_ud(F, caps))


# -- BIC / DIC linear program ------------------------------------------------


class LPRevenue(NamedTuple):
    value: Fraction
    allocation: dict
    utilities: dict
    rounds: int
    pivots: int


def _outcomes(n: int, m: int, unit_demand: bool) -> list[tuple[frozenset, ...]]:
    outs = []
    for owner in itertools.product(range(n + 1), repeat=m):
        bundles = tuple(frozenset(j for j in range(m) if owner[j] == i) for i in range(n))
        if all(not b for b in bundles):
            continue
        if unit_demand and any(len(b) > 1 for b in bundles):
            continue
        outs.append(bundles)
    return outs


def rev_bic_lp(v, F: ProductDist, concept: str = "BIC", caps: Caps = DEFAULT_CAPS, *,
               rule: str = "bland", lazy: bool = True) -> LPRevenue:
    """Optimal revenue over randomized mechanisms on a tiny instance.

    Variables are outcome probabilities ``pi(t, o)`` per profile (the empty
    outcome takes the slack) and buyer utilities, interim ``U_i(t_i)`` for
    ``concept="BIC"`` or ex post ``U_i(t)`` for ``"DIC"``. Payments are
    eliminated as value minus utility, so IR is ``U >= 0`` and revenue is
    expected welfare minus expected utility.

    With ``lazy=True`` incentive constraints are added only when violated and
    re-optimized by the dual simplex; the final point satisfies every
    constraint, so its value is the exact optimum of the full program.
    ``lazy=False`` builds the full program up front.

    For unit-demand valuations outcomes are restricted to at most one item
    per buyer, which loses nothing: swapping a bundle for its best item
    keeps the truthful value and can only lower a deviator's.
    """
    if concept not in ("BIC", "DIC"):
        raise ValueError("concept must be 'BIC' or 'DIC'")
    n, m = F.n, F.m
    types = [F.buyer_types(i, caps) for i in range(n)]
    profiles = list(itertools.product(*[range(len(T)) for T in types]))
    guard("joint support", len(profiles), caps.joint)
    outs = _outcomes(n, m, getattr(v, "is_unit_demand", False))
    fprof = []
    for prof in profiles:
        p = Fraction(1)
        for i, k in enumerate(prof):
            p *= types[i][k][1]
        fprof.append(p)
    val = [[[v.value(i, t, o[i]) for o in outs] for t, _ in types[i]] for i in range(n)]
    n_pi = len(profiles) * len(outs)
    pid = {prof: k for k, prof in enumerate(profiles)}

    def pi_var(k: int, o: int) -> int:
        return k * len(outs) + o

    if concept == "BIC":
        uid = {}
        for i in range(n):
            for a in range(len(types[i])):
                uid[(i, a)] = n_pi + len(uid)
    else:
        uid = {}
        for i in range(n):
            for k in range(len(profiles)):
                uid[(i, k)] = n_pi + len(uid)
    nvars = n_pi + len(uid)
    guard("LP profiles x outcomes", len(profiles) * len(outs), caps.lp)

    c: dict[int, Fraction] = {}
    for k, prof in enumerate(profiles):
        for o in range(len(outs)):
            w = sum((val[i][prof[i]][o] for i in range(n)), Fraction(0))
            if w:
                c[pi_var(k, o)] = fprof[k] * w
    if concept == "BIC":
        for (i, a), col in uid.items():
            c[col] = -types[i][a][1]
    else:
        for (i, k), col in uid.items():
            c[col] = -fprof[k]

    prob_rows = [({pi_var(k, o): 1 for o in range(len(outs))}, 1) for k in range(len(profiles))]

    # others[i]: list of (profile index with buyer i's slot left open, weight)
    def others(i: int):
        rest = [range(len(T)) for l, T in enumerate(types) if l != i]
        for combo in itertools.product(*rest):
            w = Fraction(1)
            for l, kk in zip([l for l in range(n) if l != i], combo):
                w *= types[l][kk][1]
            yield combo, w

    def full(i: int, a: int, combo) -> tuple:
        combo = list(combo)
        return tuple(combo[:i] + [a] + combo[i:])

    def ic_row(i, a, b, combo=None) -> dict:
        """Row for 'type a of buyer i does not gain by reporting b' (<= 0)."""
        row: dict[int, Fraction] = {}
        if concept == "BIC":
            row[uid[(i, b)]] = Fraction(1)
            row[uid[(i, a)]] = row.get(uid[(i, a)], 0) - 1
            for cmb, w in others(i):
                k = pid[full(i, b, cmb)]
                for o in range(len(outs)):
                    d = val[i][a][o] - val[i][b][o]
                    if d:
                        col = pi_var(k, o)
                        row[col] = row.get(col, 0) + w * d
        else:
            kb, ka = pid[full(i, b, combo)], pid[full(i, a, combo)]
            row[uid[(i, kb)]] = Fraction(1)
            row[uid[(i, ka)]] = row.get(uid[(i, ka)], 0) - 1
            for o in range(len(outs)):
                d = val[i][a][o] - val[i][b][o]
                if d:
                    row[pi_var(kb, o)] = row.get(pi_var(kb, o), 0) + d
        return {j: x for j, x in row.items() if x}

    groups = []  # each group: list of (i, a, b, combo); lazy mode adds the worst per group
    for i in range(n):
        combos = [None] if concept == "BIC" else [cmb for cmb, _ in others(i)]
        for cmb in combos:
            for a in range(len(types[i])):
                groups.append([(i, a, b, cmb) for b in range(len(types[i])) if b != a])

    def row_value(row: dict, x) -> Fraction:
        return sum((coef * x[j] for j, coef in row.items()), Fraction(0))

    if not lazy:
        ub = prob_rows + [(ic_row(*g), 0) for grp in groups for g in grp]
        res = lp.maximize(c, nvars, ub, rule=rule)
        if not res.optimal:
            raise Infeasible(f"revenue LP reported {res.status}")
        return _lp_readout(res.value, res.x, profiles, outs, uid, 1, res.pivots)

    tab = lp.Tableau(c, nvars, prob_rows, rule=rule)
    if tab.solve() != "optimal":
        raise Infeasible(f"revenue LP reported {tab.status}")
    rounds = 1
    added: set = set()
    while True:
        x = tab.solution()
        new = []
        for grp in groups:
            worst, worst_key = Fraction(0), None
            for key in grp:
                if key in added:
                    continue
                viol = row_value(ic_row(*key), x)
                if viol > worst:
                    worst, worst_key = viol, key
            if worst_key is not None:
                new.append(worst_key)
        if not new:
            break
        for key in new:
            added.add(key)
            tab.add_ub_row(ic_row(*key), 0)
        if tab.dual_simplex() != "optimal":
            raise Infeasible(f"revenue LP reported {tab.status}")
        rounds += 1
    return _lp_readout(tab.value(), tab.solution(), profiles, outs, uid, rounds, tab.pivots)


def _lp_readout(value, x, profiles, outs, uid, rounds, pivots) -> LPRevenue:
    alloc = {}
    for k, prof in enumerate(profiles):
        for o, out in enumerate(outs):
            pr = x[k * len(outs) + o]
            if pr:
                alloc[(prof, out)] = pr
    utils = {key: x[col] for key, col in uid.items()}
    return LPRevenue(value, alloc, utils, rounds, pivots)


# -- constants ---------------------------------------------------------------


class Constants(NamedTuple):
    lam: Fraction
    C: Fraction


def constants(b, alpha=1) -> Constants:
    """Approximation constants as exact rationals.

    ``lam = 32 a + 6 (12 + 8/(1-b) + a (16/(b(1-b)) + 96/(1-b)))`` and
    ``C = 5/(2(1-b)) + (b+1)/(2b(1-b))``.
    """
    b, a = as_fraction(b), as_fraction(alpha)
    if not 0 < b < 1:
        raise DomainError(f"b must lie in (0, 1), got {b}")
    if a < 1:
        raise DomainError(f"alpha must be at least 1, got {a}")
    lam = 32 * a + 6 * (12 + 8 / (1 - b) + a * (16 / (b * (1 - b)) + 96 / (1 - b)))
    C = 5 / (2 * (1 - b)) + (b + 1) / (2 * b * (1 - b))
    return Constants(lam, C)
