"""Valuation functions ``v_i(t_i, S)`` over item types.

:class:`XOSValuation` is the canonical form: buyer ``i`` holds clauses
``alpha[k][j]`` and values a bundle as ``max_k sum_{j in S} alpha[k][j] * t_ij``.
Additive (one all-ones clause) and unit-demand (unit-vector clauses) are
exact special cases. :class:`TableValuation` stores ``v_i(t_i, S)`` as an
explicit table and exists for counterexample work on valuations that are
not XOS.

Items are indexed from 0; bundles are ``frozenset`` of item indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

from . import lp
from .caps import DEFAULT_CAPS, Caps, guard
from .errors import NoSupportingPrices
from .prob import as_fraction


def subsets(items: Iterable[int]) -> list[frozenset]:
    """All subsets of ``items``, ordered by size then lexicographically."""
    items = sorted(items)
    return [frozenset(c) for r in range(len(items) + 1) for c in itertools.combinations(items, r)]


def bundle_key(S: frozenset) -> tuple:
    """Deterministic tie-break order for bundles: smaller first, then lexicographic."""
    return (len(S), tuple(sorted(S)))


@dataclass(frozen=True)
class XOSValuation:
    clauses: tuple[tuple[tuple[Fraction, ...], ...], ...]

    def __post_init__(self):
        if not self.clauses:
            raise ValueError("need at least one buyer")
        m = len(self.clauses[0][0]) if self.clauses[0] else 0
        for i, cl in enumerate(self.clauses):
            if not cl:
                raise ValueError(f"buyer {i} has no clauses")
            for row in cl:
                if len(row) != m:
                    raise ValueError("clause length must equal the number of items")
                if any(a < 0 for a in row):
                    raise ValueError("clause multipliers must be non-negative")

    @classmethod
    def of(cls, clauses: Iterable[Iterable[Iterable[object]]]) -> "XOSValuation":
        return cls(tuple(tuple(tuple(as_fraction(a) for a in row) for row in cl) for cl in clauses))

    @classmethod
    def additive(cls, n: int, m: int) -> "XOSValuation":
        return cls.of([[[1] * m] for _ in range(n)])

    @classmethod
    def unit_demand(cls, n: int, m: int) -> "XOSValuation":
        eye = [[int(j == k) for j in range(m)] for k in range(m)]
        return cls.of([eye for _ in range(n)])

    @property
    def n(self) -> int:
        return len(self.clauses)

    @property
    def m(self) -> int:
        return len(self.clauses[0][0])

    @property
    def is_unit_demand(self) -> bool:
        """Every clause touches at most one item, so ``v(S) = max_{j in S} v({j})``."""
        return all(sum(1 for a in row if a) <= 1 for cl in self.clauses for row in cl)

    def _best_clause(self, i: int, t_i: Sequence, S: Iterable[int]) -> tuple[int, Fraction]:
        S = sorted(S)
        best_k, best = 0, None
        for k, row in enumerate(self.clauses[i]):
            s = sum((row[j] * t_i[j] for j in S), Fraction(0))
            if best is None or s > best:
                best_k, best = k, s
        return best_k, best

    def value(self, i: int, t_i: Sequence, S: Iterable[int]) -> Fraction:
        return self._best_clause(i, t_i, S)[1]

    def item_value(self, i: int, t_i: Sequence, j: int) -> Fraction:
        """``V_ij = v_i(t_i, {j})``; equals ``max_k alpha_kj * t_ij`` here."""
        return max(row[j] for row in self.clauses[i]) * t_i[j]

    def item_scale(self, i: int, j: int) -> Fraction:
        return max(row[j] for row in self.clauses[i])

    def supporting_prices(self, i: int, t_i: Sequence, S: Iterable[int]) -> dict[int, Fraction]:
        """1-supporting prices read off the maximizing clause (lowest index on ties)."""
        S = sorted(S)
        k, _ = self._best_clause(i, t_i, S)
        row = self.clauses[i][k]
        return {j: row[j] * t_i[j] for j in S}

    def to_json(self) -> dict:
        from .serialize import rat
        return {"kind": "xos",
                "clauses": [[[rat(a) for a in row] for row in cl] for cl in self.clauses]}


@dataclass(frozen=True)
class TableValuation:
    """Explicit ``v_i(t_i, S)``; missing empty-bundle entries read as 0."""

    m: int
    tables: tuple[Mapping[tuple, Mapping[frozenset, Fraction]], ...]

    @property
    def n(self) -> int:
        return len(self.tables)

    @property
    def is_unit_demand(self) -> bool:
        return False

    def value(self, i: int, t_i: Sequence, S: Iterable[int]) -> Fraction:
        S = frozenset(S)
        row = self.tables[i][tuple(t_i)]
        if not S:
            return Fraction(row.get(S, 0))
        return Fraction(row[S])

    def item_value(self, i: int, t_i: Sequence, j: int) -> Fraction:
        return self.value(i, t_i, {j})

    def types(self, i: int) -> list[tuple]:
        return list(self.tables[i])

    def supporting_prices(self, i: int, t_i: Sequence, S: Iterable[int]) -> dict[int, Fraction]:
        """Prices maximizing their sum subject to ``sum_{S'} p <= v(S')`` for all ``S' <= S``."""
        S = sorted(S)
        if not S:
            return {}
        prices, _ = _max_supporting(self, i, t_i, S)
        return prices

    def to_json(self) -> dict:
        from .serialize import rat
        buyers = []
        for tab in self.tables:
            buyers.append([{"type": [rat(x) for x in t],
                            "values": [[sorted(S), rat(val)] for S, val in
                                       sorted(vals.items(), key=lambda kv: bundle_key(kv[0]))]}
                           for t, vals in tab.items()])
        return {"kind": "table", "m": self.m, "buyers": buyers}


def _max_supporting(v, i: int, t_i, S: list[int]) -> tuple[dict[int, Fraction], Fraction]:
    ub = []
    for Sp in subsets(S):
        if Sp:
            ub.append(({S.index(j): 1 for j in Sp}, v.value(i, t_i, Sp)))
    res = lp.maximize([1] * len(S), len(S), ub)
    return {j: res.x[k] for k, j in enumerate(S)}, res.value


class StructureReport(NamedTuple):
    monotone: bool
    subadditive: bool
    no_externalities: bool
    violation: str | None = None


def check_structure(v, types: Sequence[Sequence[tuple]], caps: Caps = DEFAULT_CAPS) -> StructureReport:
    """Brute-force monotonicity, subadditivity and no-externalities over ``types[i]``.

    ``violation`` describes the first failure found, if any.
    """
    m = v.m
    guard("subset enumeration", m, caps.subset)
    guard("structure checks", sum(len(T) for T in types) * 4**m, caps.joint)
    bundles = subsets(range(m))
    mono = sub = noext = True
    first = None
    for i, T in enumerate(types):
        for t in T:
            val = {S: v.value(i, t, S) for S in bundles}
            for U in bundles:
                for W in bundles:
                    if mono and U <= W and val[U] > val[W]:
                        mono = False
                        first = first or f"monotone: buyer {i} type {t} v({sorted(U)}) > v({sorted(W)})"
                    if sub and val[U | W] > val[U] + val[W]:
                        sub = False
                        first = first or f"subadditive: buyer {i} type {t} bundles {sorted(U)}, {sorted(W)}"
        for t, s in itertools.combinations(T, 2):
            for S in bundles:
                if noext and all(t[j] == s[j] for j in S) and v.value(i, t, S) != v.value(i, s, S):
                    noext = False
                    first = first or f"no externalities: buyer {i} types {t}, {s} on {sorted(S)}"
    return StructureReport(mono, sub, noext, first)


def alpha_of(v, types: Sequence[Sequence[tuple]] | None = None, caps: Caps = DEFAULT_CAPS) -> Fraction:
    """Smallest ``alpha`` for which every ``v_i(t_i, S)`` has alpha-supporting prices.

    XOS valuations always admit ``alpha = 1``. For table valuations each
    ``(t_i, S)`` gets an exact LP maximizing the price sum under condition (1);
    the ratio ``v(S) / max`` is the best alpha for that pair.
    """
    if isinstance(v, XOSValuation):
        return Fraction(1)
    if types is None:
        types = [v.types(i) for i in range(v.n)]
    rep = check_structure(v, types, caps)
    if not rep.subadditive:
        raise NoSupportingPrices(f"valuation is not subadditive ({rep.violation})")
    alpha = Fraction(1)
    for i, T in enumerate(types):
        for t in T:
            for S in subsets(range(v.m)):
                target = v.value(i, t, S)
                if not S or target == 0:
                    continue
                _, best = _max_supporting(v, i, t, sorted(S))
                if best <= 0:
                    raise NoSupportingPrices(f"buyer {i} type {t} bundle {sorted(S)}")
                alpha = max(alpha, target / best)
    return alpha


def check_supporting(v, i: int, t_i, S: Iterable[int], prices: Mapping[int, Fraction], alpha=1) -> bool:
    """Verify both supporting-price conditions by subset enumeration."""
    S = sorted(S)
    if set(prices) != set(S) or any(p < 0 for p in prices.values()):
        return False
    cond1 = all(v.value(i, t_i, Sp) >= sum((prices[j] for j in Sp), Fraction(0)) for Sp in subsets(S))
    cond2 = sum(prices.values(), Fraction(0)) >= v.value(i, t_i, S) / Fraction(alpha)
    return cond1 and cond2


def valuation_from_json(obj: Mapping):
    from .serialize import unrat
    kind = obj.get("kind")
    if kind == "xos":
        return XOSValuation.of([[[unrat(a) for a in row] for row in cl] for cl in obj["clauses"]])
    if kind == "table":
        tables = []
        for buyer in obj["buyers"]:
            tab = {}
            for entry in buyer:
                t = tuple(unrat(x) for x in entry["type"])
                tab[t] = {frozenset(S): unrat(val) for S, val in entry["values"]}
            tables.append(tab)
        return TableValuation(int(obj["m"]), tuple(tables))
    raise ValueError(f"unknown valuation kind {kind!r}")
