"""Sequential posted-price mechanisms and their exact revenue accounting.

Two mechanisms are implemented:

* RSPM -- buyers arrive in order ``0..n-1``; each takes at most one of the
  remaining items, the one maximizing ``V_ij - xi_ij``, and pays ``p_ij``.
* ASPE -- buyers arrive in order; buyer ``i`` facing available set ``S``
  enters when ``u_i(t_i, S) >= delta_i(S)``, pays the entry fee and buys a
  utility-maximizing bundle at item prices ``Q``.

Expected revenues are computed exactly by propagating the distribution of
the available set from buyer to buyer. A buyer's choice depends only on
their own type and the set they face, so this equals enumeration over full
profiles without its cost.

Ties are deterministic everywhere: RSPM breaks them toward the smallest
item index and prefers buying at zero utility; bundles are ordered by size
and then lexicographically (see :func:`~revmono.valuations.bundle_key`).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

from .caps import DEFAULT_CAPS, Caps, guard
from .prob import ProductDist, as_fraction
from .serialize import rat, unrat
from .valuations import bundle_key, subsets

SetDist = Mapping[frozenset, Fraction]


@dataclass(frozen=True)
class MechanismOutcome:
    bundles: tuple[frozenset, ...]
    entry_fees: tuple[Fraction, ...]
    item_prices: tuple[Fraction, ...]

    def __post_init__(self):
        seen: set = set()
        for b in self.bundles:
            if seen & b:
                raise ValueError("bundles overlap")
            seen |= b

    @property
    def sold(self) -> frozenset:
        out: frozenset = frozenset()
        for b in self.bundles:
            out |= b
        return out

    @property
    def revenue(self) -> Fraction:
        return sum(self.entry_fees, Fraction(0)) + sum(self.item_prices, Fraction(0))

    def rows(self) -> list[dict]:
        """Flat rows ``(buyer, bundle, entry_fee, item_price)`` for CSV export."""
        return [{"buyer": i, "bundle": ";".join(str(j) for j in sorted(b)),
                 "entry_fee": str(e), "item_price": str(p)}
                for i, (b, e, p) in enumerate(zip(self.bundles, self.entry_fees, self.item_prices))]


# -- RSPM ------------------------------------------------------------------


def _matrix(rows, allow_none=False):
    return tuple(tuple(None if (x is None and allow_none) else as_fraction(x) for x in r) for r in rows)


@dataclass(frozen=True)
class RSPMConfig:
    """Posted prices ``xi`` and payments ``p`` (``p <= xi``); ``None`` means not offered."""

    xi: tuple[tuple[Fraction | None, ...], ...]
    p: tuple[tuple[Fraction | None, ...], ...] = None

    def __post_init__(self):
        xi = _matrix(self.xi, allow_none=True)
        p = xi if self.p is None else _matrix(self.p, allow_none=True)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "p", p)
        if len(p) != len(xi) or any(len(a) != len(b) for a, b in zip(p, xi)):
            raise ValueError("xi and p must have the same shape")
        for a_row, b_row in zip(xi, p):
            for a, b in zip(a_row, b_row):
                if (a is None) != (b is None):
                    raise ValueError("xi and p must agree on which items are offered")
                if a is not None and (a < 0 or b < 0 or b > a):
                    raise ValueError("need 0 <= p_ij <= xi_ij")

    @property
    def n(self) -> int:
        return len(self.xi)

    @property
    def m(self) -> int:
        return len(self.xi[0])

    def choice(self, v, i: int, t_i, available: frozenset) -> int | None:
        best_j, best = None, None
        for j in sorted(available):
            price = self.xi[i][j]
            if price is None:
                continue
            u = v.item_value(i, t_i, j) - price
            if best is None or u > best:
                best_j, best = j, u
        if best is None or best < 0:
            return None
        return best_j

    def to_json(self) -> dict:
        enc = lambda M: [[None if x is None else rat(x) for x in r] for r in M]  # noqa: E731
        return {"kind": "rspm", "xi": enc(self.xi), "p": enc(self.p)}

    @classmethod
    def from_json(cls, obj) -> "RSPMConfig":
        dec = lambda M: [[None if x is None else unrat(x) for x in r] for r in M]  # noqa: E731
        return cls(dec(obj["xi"]), dec(obj["p"]))


def run_rspm(cfg: RSPMConfig, v, t: Sequence[Sequence]) -> MechanismOutcome:
    available = frozenset(range(cfg.m))
    bundles, pays = [], []
    for i in range(cfg.n):
        j = cfg.choice(v, i, t[i], available)
        if j is None:
            bundles.append(frozenset())
            pays.append(Fraction(0))
        else:
            bundles.append(frozenset({j}))
            pays.append(cfg.p[i][j])
            available = available - {j}
    return MechanismOutcome(tuple(bundles), (Fraction(0),) * cfg.n, tuple(pays))


def rspm_revenue(cfg: RSPMConfig, v, F: ProductDist, caps: Caps = DEFAULT_CAPS) -> Fraction:
    """Exact ``E_{t~F}`` of RSPM revenue."""
    state = {frozenset(range(cfg.m)): Fraction(1)}
    revenue = Fraction(0)
    for i in range(cfg.n):
        types = F.buyer_types(i, caps)
        nxt: dict[frozenset, Fraction] = {}
        for S, ps in state.items():
            for t_i, pt in types:
                j = cfg.choice(v, i, t_i, S)
                w = ps * pt
                if j is None:
                    nxt[S] = nxt.get(S, 0) + w
                else:
                    revenue += w * cfg.p[i][j]
                    rest = S - {j}
                    nxt[rest] = nxt.get(rest, 0) + w
        state = nxt
    return revenue


# -- demand oracle -----------------------------------------------------------


def demand_set(v, i: int, t_i, S: Iterable[int], Q: Sequence[Fraction],
               caps: Caps = DEFAULT_CAPS) -> tuple[frozenset, Fraction]:
    """Utility-maximizing bundle ``I' <= S`` at item prices ``Q`` and its utility.

    Exhaustive over all subsets of ``S``; the empty bundle is a candidate so
    the utility is never negative.
    """
    S = sorted(S)
    guard("subset enumeration", len(S), caps.subset)
    best, best_u = frozenset(), Fraction(0)
    for B in subsets(S):
        u = v.value(i, t_i, B) - sum((Q[j] for j in B), Fraction(0))
        if u > best_u:
            best, best_u = B, u
    return best, best_u


def demand_utility(v, i: int, t_i, S: Iterable[int], Q, caps: Caps = DEFAULT_CAPS) -> Fraction:
    """``u_i(t_i, S) = max_{I' <= S} v(t_i, I') - sum_{j in I'} Q_j``."""
    return demand_set(v, i, t_i, S, Q, caps)[1]


# -- ASPE --------------------------------------------------------------------


class EntryFees:
    """Entry fees ``delta_i(S)``, either tabulated or computed lazily.

    ``fn(i, S)`` is called at most once per key; results are memoized under
    a lock, so instances can be shared between threads.
    """

    def __init__(self, n: int, fn: Callable[[int, frozenset], Fraction] | None = None,
                 table: Mapping[tuple[int, frozenset], Fraction] | None = None):
        self.n = n
        self._fn = fn
        self._memo: dict[tuple[int, frozenset], Fraction] = dict(table or {})
        self._lock = threading.Lock()

    @classmethod
    def zero(cls, n: int) -> "EntryFees":
        return cls(n, lambda i, S: Fraction(0))

    @classmethod
    def constant(cls, values: Sequence) -> "EntryFees":
        vals = [as_fraction(x) for x in values]
        return cls(len(vals), lambda i, S: vals[i])

    def __call__(self, i: int, S: Iterable[int]) -> Fraction:
        key = (i, frozenset(S))
        with self._lock:
            if key in self._memo:
                return self._memo[key]
        if self._fn is None:
            raise KeyError(f"no entry fee for buyer {i}, set {sorted(key[1])}")
        val = as_fraction(self._fn(i, key[1]))
        if val < 0:
            raise ValueError("entry fees must be non-negative")
        with self._lock:
            return self._memo.setdefault(key, val)

    def table(self, m: int) -> dict[tuple[int, frozenset], Fraction]:
        return {(i, S): self(i, S) for i in range(self.n) for S in subsets(range(m))}


@dataclass(frozen=True)
class ASPEConfig:
    Q: tuple[Fraction, ...]
    delta: EntryFees = field(compare=False)
    q: Fraction | None = None

    def __post_init__(self):
        Q = tuple(as_fraction(x) for x in self.Q)
        if any(x < 0 for x in Q):
            raise ValueError("item prices must be non-negative")
        object.__setattr__(self, "Q", Q)

    @property
    def m(self) -> int:
        return len(self.Q)

    def to_json(self) -> dict:
        tab = self.delta.table(self.m)
        delta = [[[sorted(S), rat(val)] for (i, S), val in sorted(tab.items(), key=lambda kv: bundle_key(kv[0][1]))
                  if i == b] for b in range(self.delta.n)]
        out = {"kind": "aspe", "Q": [rat(x) for x in self.Q], "delta": delta}
        if self.q is not None:
            out["q"] = rat(self.q)
        return out

    @classmethod
    def from_json(cls, obj) -> "ASPEConfig":
        table = {(i, frozenset(S)): unrat(val) for i, entries in enumerate(obj["delta"]) for S, val in entries}
        q = unrat(obj["q"]) if "q" in obj else None
        return cls([unrat(x) for x in obj["Q"]], EntryFees(len(obj["delta"]), table=table), q)


def make_entry_fees(v, F: ProductDist, Q: Sequence, q=Fraction(1, 2), caps: Caps = DEFAULT_CAPS) -> EntryFees:
    """Survival-quantile entry fees.

    ``delta_i(S)`` is the largest ``d`` with ``Pr_{t_i~F_i}{u_i(t_i, S) >= d} >= 1 - q``.
    ``q = 1/2`` takes the median utility; ``q = 0`` the minimum.
    """
    q = as_fraction(q)
    if not 0 <= q < 1:
        raise ValueError("quantile q must lie in [0, 1)")
    Q = tuple(as_fraction(x) for x in Q)
    types = [F.buyer_types(i, caps) for i in range(F.n)]

    def fee(i: int, S: frozenset) -> Fraction:
        utils: dict[Fraction, Fraction] = {}
        for t_i, p in types[i]:
            u = demand_utility(v, i, t_i, S, Q, caps)
            utils[u] = utils.get(u, 0) + p
        acc = Fraction(0)
        for u in sorted(utils, reverse=True):
            acc += utils[u]
            if acc >= 1 - q:
                return u
        raise AssertionError("utility distribution does not sum to 1")

    return EntryFees(F.n, fee)


def run_aspe(cfg: ASPEConfig, v, t: Sequence[Sequence], caps: Caps = DEFAULT_CAPS) -> MechanismOutcome:
    available = frozenset(range(cfg.m))
    bundles, fees, items = [], [], []
    for i in range(len(t)):
        B, u = demand_set(v, i, t[i], available, cfg.Q, caps)
        d = cfg.delta(i, available)
        if u >= d:
            bundles.append(B)
            fees.append(d)
            items.append(sum((cfg.Q[j] for j in B), Fraction(0)))
            available = available - B
        else:
            bundles.append(frozenset())
            fees.append(Fraction(0))
            items.append(Fraction(0))
    return MechanismOutcome(tuple(bundles), tuple(fees), tuple(items))


class ASPERevenue(NamedTuple):
    entry_fee: Fraction
    item_price: Fraction
    total: Fraction
    sold_prob: tuple[Fraction, ...]
    availability: tuple[dict[frozenset, Fraction], ...]


def _aspe_dp(cfg: ASPEConfig, v, H: ProductDist, caps: Caps) -> ASPERevenue:
    m = cfg.m
    state: dict[frozenset, Fraction] = {frozenset(range(m)): Fraction(1)}
    avail = []
    entry = item = Fraction(0)
    for i in range(H.n):
        avail.append(dict(state))
        types = H.buyer_types(i, caps)
        nxt: dict[frozenset, Fraction] = {}
        for S, ps in state.items():
            d = cfg.delta(i, S)
            for t_i, pt in types:
                w = ps * pt
                B, u = demand_set(v, i, t_i, S, cfg.Q, caps)
                if u >= d:
                    entry += w * d
                    item += w * sum((cfg.Q[j] for j in B), Fraction(0))
                    rest = S - B
                else:
                    rest = S
                nxt[rest] = nxt.get(rest, 0) + w
        state = nxt
    sold = tuple(sum((p for S, p in state.items() if j not in S), Fraction(0)) for j in range(m))
    return ASPERevenue(entry, item, entry + item, sold, tuple(avail))


def aspe_revenue(cfg: ASPEConfig, v, H: ProductDist, caps: Caps = DEFAULT_CAPS) -> ASPERevenue:
    """Exact expected entry-fee and item-price revenue of ASPE under ``H``.

    Also returns ``Pr{j in SOLD}`` per item and the law of each buyer's
    available set.
    """
    return _aspe_dp(cfg, v, H, caps)


def availability_dists(cfg: ASPEConfig, v, G: ProductDist, caps: Caps = DEFAULT_CAPS) -> tuple[dict, ...]:
    """Law of the set each buyer faces when ASPE runs on ``t' ~ G``."""
    return _aspe_dp(cfg, v, G, caps).availability


def dg_entry_fee(cfg: ASPEConfig, v, H: ProductDist, I: Sequence[SetDist], caps: Caps = DEFAULT_CAPS) -> Fraction:
    """Expected entry fees when buyer ``i`` faces an independent ``I_i ~ I[i]``.

    Items have unlimited copies here, so availability is decoupled from
    other buyers' types.
    """
    total = Fraction(0)
    for i in range(H.n):
        types = H.buyer_types(i, caps)
        for S, pS in I[i].items():
            if not pS:
                continue
            d = cfg.delta(i, S)
            if d == 0:
                continue
            hit = sum((pt for t_i, pt in types if demand_utility(v, i, t_i, S, cfg.Q, caps) >= d), Fraction(0))
            total += pS * hit * d
    return total


def b_floor(I: Sequence[SetDist], j: int) -> Fraction:
    """``B_j``: the smallest probability, over buyers, that item ``j`` is available."""
    return min(sum((p for S, p in Ii.items() if j in S), Fraction(0)) for Ii in I)


def expected_by_enumeration(run: Callable[[tuple], MechanismOutcome], H: ProductDist,
                            caps: Caps = DEFAULT_CAPS) -> tuple[Fraction, Fraction]:
    """``(E[entry fees], E[item prices])`` by brute force over every profile."""
    entry = item = Fraction(0)
    for t, p in H.profiles(caps):
        out = run(t)
        entry += p * sum(out.entry_fees, Fraction(0))
        item += p * sum(out.item_prices, Fraction(0))
    return entry, item
