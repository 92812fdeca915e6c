"""Experiment harness: instances, dominating pairs, check suites and the
counterexample search for one buyer and two additive items.

Every check produces a :class:`Record` holding both sides of a claimed
relation as exact rationals. The verdict is a pure function of the sides,
the relation and the regime:

* ``exact`` -- both sides are exact values; the relation either holds or not.
* ``bracket`` -- the left side is known to lie in ``[lhs, lhs_hi]`` and the
  right side in ``[rhs_lo, rhs]`` (a missing end is unbounded). The verdict
  is ``pass`` when even the worst case holds, ``fail`` when even the best
  case is violated, and ``inconclusive`` otherwise.
* ``diagnostic`` -- exact sides, but the claim depends on the heuristic
  stand-in mechanism parameters, so a failure does not indicate a bug.
"""

from __future__ import annotations

import itertools
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, NamedTuple, Sequence

from .caps import DEFAULT_CAPS, Caps
from .errors import CapExceeded, RevmonoError
from .mechanisms import (ASPEConfig, EntryFees, RSPMConfig, aspe_revenue, b_floor, dg_entry_fee,
                         expected_by_enumeration, make_entry_fees, rspm_revenue, run_aspe)
from .oracles import (Environment, best_rspm, constants, drev_ud, monopoly_price, opt_copies_ud,
                      opt_single_param, rev_bic_lp)
from .prob import DiscreteDist, ProductDist, as_fraction, dominates, quantile_couple, v_dominates_profile
from .serialize import product_from_json, product_to_json, rat, unrat
from .valuations import TableValuation, XOSValuation, alpha_of, valuation_from_json

RELATIONS = (">=", "==", ">")
REGIMES = ("exact", "bracket", "diagnostic")
SUITES = ("theorem1", "theorem2", "theorem3", "lemmas", "all")


class InstanceError(RevmonoError, ValueError):
    """An instance file is malformed or its declared dominance does not hold."""


# -- records -------------------------------------------------------------------


def _holds(a: Fraction, rel: str, b: Fraction) -> bool:
    if rel == ">=":
        return a >= b
    if rel == ">":
        return a > b
    return a == b


@dataclass(frozen=True)
class Record:
    name: str
    anchor: str
    lhs: Fraction
    rhs: Fraction
    relation: str = ">="
    regime: str = "exact"
    lhs_hi: Fraction | None = None
    rhs_lo: Fraction | None = None
    instance: int | None = None
    millis: int | None = None

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.regime == "bracket" and self.relation == "==":
            raise ValueError("bracket records need an inequality")
        for k in ("lhs", "rhs", "lhs_hi", "rhs_lo"):
            x = getattr(self, k)
            if x is not None:
                object.__setattr__(self, k, as_fraction(x))

    @property
    def verdict(self) -> str:
        if self.regime != "bracket":
            return "pass" if _holds(self.lhs, self.relation, self.rhs) else "fail"
        if _holds(self.lhs, self.relation, self.rhs):
            return "pass"
        best_lhs = self.lhs_hi
        best_rhs = self.rhs_lo
        if best_lhs is not None and best_rhs is not None and not _holds(best_lhs, self.relation, best_rhs):
            return "fail"
        return "inconclusive"

    @property
    def counts(self) -> bool:
        """Whether a failure of this record is a failure of the run."""
        return self.regime != "diagnostic"

    @property
    def ratio(self) -> Fraction | None:
        return self.lhs / self.rhs if self.rhs > 0 else None

    def to_json(self) -> dict:
        opt = lambda x: None if x is None else rat(x)  # noqa: E731
        return {"name": self.name, "anchor": self.anchor, "instance": self.instance,
                "relation": self.relation, "regime": self.regime,
                "lhs": rat(self.lhs), "rhs": rat(self.rhs),
                "lhs_hi": opt(self.lhs_hi), "rhs_lo": opt(self.rhs_lo),
                "ratio": opt(self.ratio), "verdict": self.verdict, "millis": self.millis}

    @classmethod
    def from_json(cls, obj) -> "Record":
        opt = lambda x: None if x is None else unrat(x)  # noqa: E731
        rec = cls(obj["name"], obj["anchor"], unrat(obj["lhs"]), unrat(obj["rhs"]),
                  obj.get("relation", ">="), obj.get("regime", "exact"),
                  opt(obj.get("lhs_hi")), opt(obj.get("rhs_lo")), obj.get("instance"), obj.get("millis"))
        if "verdict" in obj and obj["verdict"] != rec.verdict:
            raise ValueError(f"record {rec.name}: stored verdict disagrees with its sides")
        return rec

    def csv_row(self) -> dict:
        opt = lambda x: "" if x is None else str(x)  # noqa: E731
        return {"instance": "" if self.instance is None else self.instance, "name": self.name,
                "anchor": self.anchor, "relation": self.relation, "regime": self.regime,
                "lhs": str(self.lhs), "rhs": str(self.rhs), "lhs_hi": opt(self.lhs_hi),
                "rhs_lo": opt(self.rhs_lo), "verdict": self.verdict,
                "millis": "" if self.millis is None else self.millis}


CSV_FIELDS = ("instance", "name", "anchor", "relation", "regime", "lhs", "rhs", "lhs_hi", "rhs_lo",
              "verdict", "millis")


# -- instances -----------------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    """Valuation, base distribution, optional dominating distribution and parameters.

    ``dominance`` declares how ``G`` relates to ``F``: ``"coordinatewise"``
    (every ``G_ij`` dominates ``F_ij``) or ``"v"`` (v-dominance per buyer).
    """

    v: Any
    F: ProductDist
    G: ProductDist | None = None
    b: Fraction = Fraction(1, 4)
    q: Fraction = Fraction(1, 2)
    seed: int | None = None
    dominance: str | None = None
    environment: Environment | None = None
    aspe: ASPEConfig | None = None
    certificate: dict | None = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return self.F.n

    @property
    def m(self) -> int:
        return self.F.m

    @property
    def target(self) -> ProductDist:
        """The dominating distribution, or ``F`` itself when none is given."""
        return self.F if self.G is None else self.G

    def validate(self, caps: Caps = DEFAULT_CAPS) -> None:
        if self.v.n != self.n:
            raise InstanceError(f"valuation has {self.v.n} buyers, F has {self.n}")
        if self.v.m != self.m:
            raise InstanceError(f"valuation has {self.v.m} items, F has {self.m}")
        if not 0 < self.b < 1:
            raise InstanceError("b must lie in (0, 1)")
        if not 0 <= self.q < 1:
            raise InstanceError("q must lie in [0, 1)")
        if any(x < 0 for row in self.F.entries for d in row for x in d.support):
            raise InstanceError("type values must be non-negative")
        if isinstance(self.v, TableValuation):
            for P in (self.F, self.target):
                for i in range(self.n):
                    for t, _ in P.buyer_types(i, caps):
                        if t not in self.v.tables[i]:
                            raise InstanceError(f"buyer {i} type {t} missing from the value table")
        if self.environment is not None and self.environment.n != self.n * self.m:
            raise InstanceError("environment size must equal n * m")
        if self.aspe is not None and (self.aspe.m != self.m or self.aspe.delta.n != self.n):
            raise InstanceError("ASPE configuration does not match the instance shape")
        if self.G is None:
            if self.dominance is not None:
                raise InstanceError("dominance declared without G")
            return
        if (self.G.n, self.G.m) != (self.n, self.m):
            raise InstanceError("F and G must have the same shape")
        if self.dominance == "coordinatewise":
            if not self.F.dominated_by(self.G):
                raise InstanceError("G does not dominate F coordinatewise")
        elif self.dominance == "v":
            for i, res in enumerate(v_dominates_profile(self.v, self.F, self.G, caps)):
                if not res:
                    raise InstanceError(f"G does not v-dominate F for buyer {i}")
        else:
            raise InstanceError(f"unknown dominance relation {self.dominance!r}")

    def to_json(self) -> dict:
        params: dict[str, Any] = {"b": rat(self.b), "q": rat(self.q), "seed": self.seed,
                                  "dominance": self.dominance}
        if self.environment is not None:
            params["environment"] = self.environment.to_json()
        if self.aspe is not None:
            params["aspe"] = self.aspe.to_json()
        if self.certificate is not None:
            params["certificate"] = self.certificate
        out = {"n": self.n, "m": self.m, "valuation": self.v.to_json(), "F": product_to_json(self.F),
               "params": params}
        if self.G is not None:
            out["G"] = product_to_json(self.G)
        return out

    @classmethod
    def from_json(cls, obj, caps: Caps = DEFAULT_CAPS) -> "Instance":
        """Parse and validate, re-verifying any declared dominance."""
        try:
            params = obj.get("params", {})
            G = product_from_json(obj["G"]) if obj.get("G") is not None else None
            dominance = params.get("dominance")
            if G is not None and dominance is None:
                dominance = "coordinatewise"
            inst = cls(
                v=valuation_from_json(obj["valuation"]),
                F=product_from_json(obj["F"]),
                G=G,
                b=unrat(params.get("b", ["1", "4"])),
                q=unrat(params.get("q", ["1", "2"])),
                seed=params.get("seed"),
                dominance=dominance,
                environment=Environment.from_json(params["environment"]) if "environment" in params else None,
                aspe=ASPEConfig.from_json(params["aspe"]) if "aspe" in params else None,
                certificate=params.get("certificate"),
            )
            if (obj["n"], obj["m"]) != (inst.n, inst.m):
                raise InstanceError("declared n, m do not match F")
        except InstanceError:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InstanceError(f"malformed instance: {exc}") from exc
        inst.validate(caps)
        return inst


# -- generators ----------------------------------------------------------------


def _rational_weights(rng: random.Random, k: int, hi: int = 6) -> list[Fraction]:
    w = [rng.randint(1, hi) for _ in range(k)]
    s = sum(w)
    return [Fraction(x, s) for x in w]


def random_dist(rng: random.Random, atoms: int, values: Sequence[int] = range(0, 7)) -> DiscreteDist:
    vals = rng.sample(list(values), atoms)
    return DiscreteDist.from_pairs(zip(vals, _rational_weights(rng, atoms)))


def _dominate(d: DiscreteDist, strength: Fraction, rng: random.Random) -> DiscreteDist:
    if strength == 0:
        return d
    span = max(d.support) - min(d.support) or Fraction(1)
    # every atom only moves up, so the identity coupling witnesses dominance
    atoms = [[x + strength * Fraction(rng.randint(0, 4), 4) * span, p] for x, p in d.items()]
    if len(atoms) > 1:
        k = rng.randrange(len(atoms) - 1)
        dest = rng.randrange(k + 1, len(atoms))
        moved = atoms[k][1] * strength * Fraction(rng.randint(0, 4), 4)
        atoms[k][1] -= moved
        atoms.append([atoms[dest][0], moved])
    return DiscreteDist.from_pairs((x, p) for x, p in atoms)


def gen_dominating_pair(F: ProductDist, strength=Fraction(1, 2), seed: int | None = 0) -> ProductDist:
    """A random ``G`` with ``G_ij`` dominating ``F_ij`` in every coordinate.

    Each atom's value is raised by a random multiple of ``strength`` times the
    coordinate's support span, and part of one atom's mass is moved to a
    higher atom. ``strength = 0`` returns ``F`` unchanged.
    """
    strength = as_fraction(strength)
    if not 0 <= strength <= 1:
        raise ValueError("strength must lie in [0, 1]")
    rng = random.Random(seed)
    G = ProductDist.of([[_dominate(d, strength, rng) for d in row] for row in F.entries])
    for a, b in zip((d for r in F.entries for d in r), (d for r in G.entries for d in r)):
        if not dominates(a, b):
            raise AssertionError("generated distribution fails dominance")
    return G


def random_valuation(rng: random.Random, kind: str, n: int, m: int):
    if kind == "additive":
        return XOSValuation.additive(n, m)
    if kind == "unit-demand":
        return XOSValuation.unit_demand(n, m)
    if kind == "xos":
        grid = [Fraction(0), Fraction(1, 2), Fraction(1)]
        clauses = []
        for _ in range(n):
            cl = [[rng.choice(grid) for _ in range(m)] for _ in range(rng.randint(1, 3))]
            cl[0] = [max(a, Fraction(1, 2)) for a in cl[0]]
            clauses.append(cl)
        return XOSValuation.of(clauses)
    raise ValueError(f"unknown valuation kind {kind!r}")


def random_environment(rng: random.Random, size: int, vertices: int) -> Environment:
    grid = [Fraction(0), Fraction(1, 2), Fraction(1)]
    if not 1 <= vertices <= len(grid) ** size:
        raise ValueError(f"cannot draw {vertices} distinct vectors in dimension {size}")
    vecs = {tuple([Fraction(0)] * size)}
    while len(vecs) < vertices:
        vecs.add(tuple(rng.choice(grid) for _ in range(size)))
    return Environment.explicit(sorted(vecs))


def random_aspe(rng: random.Random, v, F: ProductDist, caps: Caps = DEFAULT_CAPS) -> ASPEConfig:
    """Random item prices with survival-quantile entry fees at a random quantile."""
    top = max(x for row in F.entries for d in row for x in d.support) or Fraction(1)
    Q = [top * Fraction(rng.randint(0, 4), 4) for _ in range(F.m)]
    q = Fraction(rng.randint(0, 3), 4)
    fees = make_entry_fees(v, F, Q, q, caps)
    return ASPEConfig(Q, EntryFees(F.n, table=fees.table(F.m)), q)


def random_instance(seed: int, n: int, m: int, atoms: int, kind: str = "additive",
                    strength=Fraction(1, 2), dominance: str = "coordinatewise",
                    env_vertices: int = 0, with_aspe: bool = False,
                    caps: Caps = DEFAULT_CAPS) -> Instance:
    """Seeded random instance with a dominating ``G``.

    ``G`` is generated coordinatewise, which implies v-dominance for every
    monotone valuation; ``dominance="v"`` declares (and verifies) the weaker
    relation instead.
    """
    if n < 1 or m < 1 or not 1 <= atoms <= 7:
        raise ValueError("need n, m >= 1 and 1 <= atoms <= 7")
    rng = random.Random(seed)
    v = random_valuation(rng, kind, n, m)
    F = ProductDist.of([[random_dist(rng, atoms) for _ in range(m)] for _ in range(n)])
    G = gen_dominating_pair(F, strength, rng.randrange(2**31))
    env = random_environment(rng, n * m, env_vertices) if env_vertices else None
    aspe = random_aspe(rng, v, F, caps) if with_aspe else None
    inst = Instance(v, F, G, seed=seed, dominance=dominance, environment=env, aspe=aspe)
    inst.validate(caps)
    return inst


# -- suites ----------------------------------------------------------------------


def check_theorem1(A: Environment, F: Sequence[DiscreteDist], G: Sequence[DiscreteDist],
                   caps: Caps = DEFAULT_CAPS) -> Record:
    """Optimal single-parameter revenue is monotone under coordinatewise dominance."""
    return Record("single_param_monotone", "REV_A(G) >= REV_A(F)",
                  opt_single_param(A, G, caps), opt_single_param(A, F, caps))


def item_value_dists(v, P: ProductDist, caps: Caps = DEFAULT_CAPS) -> ProductDist:
    """Product of the laws of ``V_ij = v_i(t_i, {j})``."""
    rows = []
    for i in range(P.n):
        types = P.buyer_types(i, caps)
        rows.append([DiscreteDist.from_pairs((v.item_value(i, t, j), p) for t, p in types)
                     for j in range(P.m)])
    return ProductDist.of(rows)


def _rev_ud(Fv: ProductDist, caps: Caps) -> tuple[Fraction, Fraction]:
    """Bounds on the optimal randomized BIC unit-demand revenue."""
    try:
        val = rev_bic_lp(XOSValuation.unit_demand(Fv.n, Fv.m), Fv, "BIC", caps).value
        return val, val
    except CapExceeded:
        return drev_ud(Fv, "auto", caps).lower, 4 * opt_copies_ud(Fv, caps)


def check_theorem2(F: ProductDist, G: ProductDist, caps: Caps = DEFAULT_CAPS) -> list[Record]:
    """Deterministic unit-demand revenue under ``G`` against ``F``'s, plus the
    copies sandwich and the copies bound on randomized revenue.

    Exact for one buyer; for several buyers every deterministic revenue is a
    bracket and the records use bracket semantics.
    """
    dF, dG = drev_ud(F, "auto", caps), drev_ud(G, "auto", caps)
    copies = opt_copies_ud(F, caps)
    rev_lo, rev_hi = _rev_ud(F, caps)
    claim = "DREV(G) >= max(DREV(F)/6, REV(F)/24)"
    rhs_hi = max(dF.upper / 6, rev_hi / 24)
    rhs_lo = max(dF.lower / 6, rev_lo / 24)
    recs = []
    if dF.exact and dG.exact and rev_lo == rev_hi:
        recs.append(Record("ud_monotone", claim, dG.lower, rhs_hi))
        recs.append(Record("copies_above_drev", "OPT_COPIES(F) >= DREV(F)", copies, dF.lower))
        recs.append(Record("copies_below_6drev", "6 DREV(F) >= OPT_COPIES(F)", 6 * dF.lower, copies))
    else:
        recs.append(Record("ud_monotone", claim, dG.lower, rhs_hi, regime="bracket",
                           lhs_hi=dG.upper, rhs_lo=rhs_lo))
        recs.append(Record("copies_below_6drev", "6 DREV(F) >= OPT_COPIES(F)", 6 * dF.lower, copies,
                           regime="bracket", lhs_hi=6 * dF.upper, rhs_lo=copies))
    if rev_lo == rev_hi:
        recs.append(Record("bic_below_4copies", "4 OPT_COPIES(F) >= REV(F)", 4 * copies, rev_hi))
    return recs


def _max_dist(dists: Sequence[DiscreteDist]) -> DiscreteDist:
    """Law of the maximum of independent variables."""
    support = sorted({x for d in dists for x in d.support})
    cdf = []
    for x in support:
        c = Fraction(1)
        for d in dists:
            c *= d.cdf(x)
        cdf.append(c)
    return DiscreteDist.from_pairs((x, c - (cdf[k - 1] if k else 0)) for k, (x, c) in enumerate(zip(support, cdf)))


class StandIn(NamedTuple):
    """Heuristic mechanism parameters built from ``(v, F)``.

    ``xi`` prices item ``j`` for buyer ``i`` at the monopoly price of
    ``V_ij``; each candidate ``Q`` scales the monopoly price of
    ``max_i V_ij`` by a grid factor, with survival-quantile entry fees. The
    chosen ASPE candidate has the highest revenue under ``F``.
    """

    xi: RSPMConfig
    candidates: tuple[ASPEConfig, ...]
    chosen: ASPEConfig


Q_FACTORS = (Fraction(1, 2), Fraction(1), Fraction(3, 2))


def stand_in_config(v, F: ProductDist, q=Fraction(1, 2), caps: Caps = DEFAULT_CAPS) -> StandIn:
    Fv = item_value_dists(v, F, caps)
    xi = RSPMConfig([[monopoly_price(Fv.entries[i][j])[0] for j in range(F.m)] for i in range(F.n)])
    base = [monopoly_price(_max_dist(Fv.column(j)))[0] for j in range(F.m)]
    cands = []
    for combo in itertools.product(Q_FACTORS, repeat=F.m):
        Q = [f * p for f, p in zip(combo, base)]
        fees = make_entry_fees(v, F, Q, q, caps)
        cands.append(ASPEConfig(Q, EntryFees(F.n, table=fees.table(F.m)), as_fraction(q)))
    revs = [aspe_revenue(c, v, F, caps).total for c in cands]
    chosen = cands[revs.index(max(revs))]
    return StandIn(xi, tuple(cands), chosen)


class DICLower:
    """Constructive lower bound on ``REV_DIC(v, G)``, with the exact LP on demand."""

    def __init__(self, v, G: ProductDist, stand: StandIn, caps: Caps):
        self.v, self.G, self.caps = v, G, caps
        vals = [best_rspm(v, G, caps=caps)[1], rspm_revenue(stand.xi, v, G, caps)]
        vals += [aspe_revenue(c, v, G, caps).total for c in stand.candidates]
        self.lower = max(vals)
        self._exact: Fraction | None = None

    def exact(self) -> Fraction:
        if self._exact is None:
            self._exact = rev_bic_lp(self.v, self.G, "DIC", self.caps).value
        return self._exact

    def record(self, name: str, anchor: str, scale: Fraction, rhs: Fraction) -> Record:
        """``scale * REV_DIC(G) >= rhs``, by the constructive bound when it suffices."""
        if scale * self.lower >= rhs:
            return Record(name, anchor, scale * self.lower, rhs, regime="bracket")
        return Record(name, anchor, scale * self.exact(), rhs)


def check_theorem3(v, F: ProductDist, G: ProductDist, b=Fraction(1, 4), q=Fraction(1, 2),
                   caps: Caps = DEFAULT_CAPS, stand: StandIn | None = None) -> list[Record]:
    """Approximate monotonicity for XOS buyers and the sub-claims feeding it.

    The left side of the main record is the best revenue found among the
    stand-in mechanisms under ``G``; when that falls short the exact DIC LP
    decides.
    """
    b, q = as_fraction(b), as_fraction(q)
    alpha = alpha_of(v, [[t for t, _ in F.buyer_types(i, caps)] for i in range(F.n)], caps)
    lam, C = constants(b, alpha)
    stand = stand or stand_in_config(v, F, q, caps)
    rev_F = rev_bic_lp(v, F, "BIC", caps).value
    dic = DICLower(v, G, stand, caps)
    rspm_F = rspm_revenue(stand.xi, v, F, caps)
    cfg = stand.chosen
    sumQ = sum(cfg.Q, Fraction(0))
    aF, aG = aspe_revenue(cfg, v, F, caps), aspe_revenue(cfg, v, G, caps)
    diag = "diagnostic"
    return [
        dic.record("xos_monotone", "REV_DIC(G) >= REV_BIC(F) / lambda", Fraction(1), rev_F / lam),
        dic.record("rspm_below_6dic", "6 REV_DIC(G) >= RSPM_xi(F)", Fraction(6), rspm_F),
        Record("bic_upper_stand_in", "(12 + 8/(1-b)) RSPM_xi(F) + 8 alpha sum Q >= REV_BIC(F)",
               (12 + 8 / (1 - b)) * rspm_F + 8 * alpha * sumQ, rev_F, regime=diag),
        Record("aspe_lower_F_stand_in", "ASPE(F) >= sum Q / 4 - C RSPM_xi(F)",
               aF.total, sumQ / 4 - C * rspm_F, regime=diag),
        Record("aspe_lower_G", "ASPE(G) >= sum Q / 4 - C RSPM_xi(F)",
               aG.total, sumQ / 4 - C * rspm_F, regime=diag),
        Record("entry_fee_F_unsold", "EntryFee(F) >= sum Pr_F[j unsold] Q_j / 4 - C RSPM_xi(F)",
               aF.entry_fee, _unsold_mass(aF, cfg) / 4 - C * rspm_F, regime=diag),
    ]


def _unsold_mass(res, cfg: ASPEConfig) -> Fraction:
    return sum(((1 - s) * Qj for s, Qj in zip(res.sold_prob, cfg.Q)), Fraction(0))


def check_lemma4(v, F: ProductDist, I: Sequence[dict], xi: RSPMConfig, Q: Sequence, delta: EntryFees,
                 b=Fraction(1, 4), caps: Caps = DEFAULT_CAPS, name: str = "dg_entry_fee_bound") -> Record:
    """Entry fees with independent availability ``I`` against the item-price floor.

    Diagnostic: the parameters come from the stand-in construction (or the
    instance), not from a family for which the bound is guaranteed.
    """
    C = constants(b).C
    cfg = ASPEConfig(Q, delta)
    lhs = dg_entry_fee(cfg, v, F, I, caps)
    floor = sum((b_floor(I, j) * Qj for j, Qj in enumerate(cfg.Q)), Fraction(0))
    return Record(name, "EntryFee(F, I) >= sum B_j Q_j / 4 - C RSPM_xi(F)",
                  lhs, floor / 4 - C * rspm_revenue(xi, v, F, caps), regime="diagnostic")


def check_lemmas(v, F: ProductDist, G: ProductDist, cfg: ASPEConfig, xi: RSPMConfig,
                 b=Fraction(1, 4), caps: Caps = DEFAULT_CAPS) -> list[Record]:
    """Digital-goods identities and inequalities for one ASPE configuration."""
    C = constants(b).C
    aF, aG = aspe_revenue(cfg, v, F, caps), aspe_revenue(cfg, v, G, caps)
    IF, IG = aF.availability, aG.availability
    rspm_F = rspm_revenue(xi, v, F, caps)
    enum_entry, enum_item = expected_by_enumeration(lambda t: run_aspe(cfg, v, t, caps), G, caps)
    recs = [
        Record("dg_embedding_F", "EntryFee(F) == EntryFee(F, I^F)",
               aF.entry_fee, dg_entry_fee(cfg, v, F, IF, caps), relation="=="),
        Record("dg_embedding_G", "EntryFee(G) == EntryFee(G, I^G)",
               aG.entry_fee, dg_entry_fee(cfg, v, G, IG, caps), relation="=="),
        Record("dg_monotone_IG", "EntryFee(G, I^G) >= EntryFee(F, I^G)",
               dg_entry_fee(cfg, v, G, IG, caps), dg_entry_fee(cfg, v, F, IG, caps)),
        Record("dg_monotone_IF", "EntryFee(G, I^F) >= EntryFee(F, I^F)",
               dg_entry_fee(cfg, v, G, IF, caps), dg_entry_fee(cfg, v, F, IF, caps)),
    ]
    for j in range(cfg.m):
        recs.append(Record(f"availability_floor_{j}", "B_j >= Pr_G[j unsold]",
                           b_floor(IG, j), 1 - aG.sold_prob[j]))
    recs += [
        Record("item_price_identity", "ItemPrice(G) == sum Pr_G[j sold] Q_j", aG.item_price,
               sum((s * Qj for s, Qj in zip(aG.sold_prob, cfg.Q)), Fraction(0)), relation="=="),
        Record("entry_fee_enumeration", "EntryFee(G) == E_t[entry fees]", aG.entry_fee, enum_entry,
               relation="=="),
        Record("item_price_enumeration", "ItemPrice(G) == E_t[item prices]", aG.item_price, enum_item,
               relation="=="),
        Record("entry_fee_G_unsold", "EntryFee(G) >= sum Pr_G[j unsold] Q_j / 4 - C RSPM_xi(F)",
               aG.entry_fee, _unsold_mass(aG, cfg) / 4 - C * rspm_F, regime="diagnostic"),
        check_lemma4(v, F, IG, xi, cfg.Q, cfg.delta, b, caps),
    ]
    return recs


def check_certificate(inst: Instance, caps: Caps = DEFAULT_CAPS) -> list[Record]:
    """Re-solve both revenues of a stored counterexample and compare."""
    cert = inst.certificate
    rf = rev_bic_lp(inst.v, inst.F, "BIC", caps, lazy=False, rule="bland_reverse").value
    rg = rev_bic_lp(inst.v, inst.target, "BIC", caps, lazy=False, rule="bland_reverse").value
    return [
        Record("certified_rev_F", "REV(F) == stored REV(F)", rf, unrat(cert["rev_F"]), relation="=="),
        Record("certified_rev_G", "REV(G) == stored REV(G)", rg, unrat(cert["rev_G"]), relation="=="),
        Record("certified_gap", "REV(F) > REV(G)", rf, rg, relation=">"),
    ]


def _timed(fn: Callable[[], Any], timing: bool) -> list[Record]:
    t0 = time.perf_counter()
    out = fn()
    out = out if isinstance(out, list) else [out]
    if not timing:
        return out
    ms = int((time.perf_counter() - t0) * 1000)
    return [replace(r, millis=ms) for r in out]


def check_instance(inst: Instance, suite: str = "all", caps: Caps = DEFAULT_CAPS, *,
                   b=None, q=None, timing: bool = False) -> list[Record]:
    """Run one suite on one instance; ``b`` and ``q`` override the instance's."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    b = inst.b if b is None else as_fraction(b)
    q = inst.q if q is None else as_fraction(q)
    v, F, G = inst.v, inst.F, inst.target
    run = lambda s: suite in (s, "all")  # noqa: E731
    recs: list[Record] = []
    if run("theorem1"):
        A = inst.environment or Environment.matching(inst.n, inst.m)
        flat = lambda P: [d for row in P.entries for d in row]  # noqa: E731
        recs += _timed(lambda: check_theorem1(A, flat(F), flat(G), caps), timing)
    if run("theorem2"):
        recs += _timed(lambda: check_theorem2(item_value_dists(v, F, caps), item_value_dists(v, G, caps),
                                              caps), timing)
    stand = None
    if run("theorem3") or run("lemmas"):
        stand = stand_in_config(v, F, q, caps)
    if run("theorem3"):
        recs += _timed(lambda: check_theorem3(v, F, G, b, q, caps, stand), timing)
    if run("lemmas"):
        cfg = inst.aspe or stand.chosen
        recs += _timed(lambda: check_lemmas(v, F, G, cfg, stand.xi, b, caps), timing)
    if inst.certificate is not None:
        recs += _timed(lambda: check_certificate(inst, caps), timing)
    return recs


def _check_one(args) -> list[Record]:
    k, inst, suite, caps, b, q, timing = args
    if isinstance(inst, dict):
        inst = Instance.from_json(inst, caps)
    return [replace(r, instance=k) for r in check_instance(inst, suite, caps, b=b, q=q, timing=timing)]


def run_suite(instances: Sequence[Instance], suite: str = "all", caps: Caps = DEFAULT_CAPS, *,
              b=None, q=None, timing: bool = False, jobs: int = 1) -> list[Record]:
    """Check every instance; records are ordered by instance index whatever ``jobs`` is."""
    work = [(k, inst, suite, caps, b, q, timing) for k, inst in enumerate(instances)]
    if jobs <= 1 or len(work) <= 1:
        results = [_check_one(w) for w in work]
    else:
        # entry-fee tables hold locks and callables, so workers get the JSON form
        work = [(k, inst.to_json(), *rest) for k, inst, *rest in work]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_check_one, work))
    return [r for rs in results for r in rs]


# -- counterexample search ---------------------------------------------------------


@dataclass(frozen=True)
class SearchConfig:
    """Budget and grids for the one-buyer additive counterexample search.

    ``budget`` caps the number of exact LP solves. Marginals start on the
    coarse grid (two atoms, values from ``values``, low-atom mass from
    ``probs``) and local moves then add up to ``max_atoms`` atoms.
    """

    budget: int = 3000
    m: int = 2
    values: tuple[Fraction, ...] = tuple(Fraction(x) for x in range(0, 7))
    probs: tuple[Fraction, ...] = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))
    max_atoms: int = 3
    coarse_share: Fraction = Fraction(1, 2)
    keep: int = 6
    step: Fraction = Fraction(1, 2)

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be non-negative")
        if self.m not in (1, 2):
            raise ValueError("the search covers one or two items")
        if not 2 <= self.max_atoms <= 3:
            raise ValueError("max_atoms must be 2 or 3")
        if len(self.values) < 2 or not self.probs:
            raise ValueError("value and probability grids must be non-empty")


class Counterexample(NamedTuple):
    F: ProductDist
    G: ProductDist
    rev_F: Fraction
    rev_G: Fraction

    @property
    def gap(self) -> Fraction:
        return self.rev_F - self.rev_G

    def to_instance(self, seed: int | None = None) -> Instance:
        couplings = []
        for f, g in zip(self.F.row(0), self.G.row(0)):
            couplings.append([[[rat(a), rat(b)], rat(p)] for (a, b), p in quantile_couple(f, g).pairs])
        cert = {"rev_F": rat(self.rev_F), "rev_G": rat(self.rev_G), "gap": rat(self.gap),
                "pivot_rules": ["bland", "bland_reverse"], "couplings": couplings}
        v = XOSValuation.additive(1, self.F.m)
        return Instance(v, self.F, self.G, seed=seed, dominance="coordinatewise", certificate=cert)


class _Evaluator:
    """Exact revenue of one additive buyer, memoized, with a solve budget."""

    def __init__(self, m: int, budget: int, caps: Caps):
        self.v = XOSValuation.additive(1, m)
        self.left = budget
        self.caps = caps
        self.memo: dict[ProductDist, Fraction] = {}

    def __call__(self, P: ProductDist) -> Fraction | None:
        if P in self.memo:
            return self.memo[P]
        if self.left <= 0:
            return None
        self.left -= 1
        val = rev_bic_lp(self.v, P, "BIC", self.caps).value
        self.memo[P] = val
        return val


def _strict(F: ProductDist, G: ProductDist) -> bool:
    return F != G and F.dominated_by(G)


def _mean_gain(F: ProductDist, G: ProductDist) -> Fraction:
    return sum((g.mean() - f.mean() for f, g in zip(F.row(0), G.row(0))), Fraction(0))


def _coarse_marginals(cfg: SearchConfig) -> list[DiscreteDist]:
    out = []
    for a, b in itertools.combinations(sorted(cfg.values), 2):
        for p in cfg.probs:
            out.append(DiscreteDist.from_pairs([(a, p), (b, 1 - p)]))
    return out


def _raise_atom(d: DiscreteDist, k: int, by: Fraction) -> DiscreteDist:
    return DiscreteDist.from_pairs((x + (by if i == k else 0), p) for i, (x, p) in enumerate(d.items()))


def _move_mass(d: DiscreteDist, k: int, dest: int, amount: Fraction) -> DiscreteDist | None:
    items = list(d.items())
    if not 0 < amount <= items[k][1] or dest <= k:
        return None
    pairs = [(x, p - (amount if i == k else 0)) for i, (x, p) in enumerate(items)]
    pairs.append((items[dest][0], amount))
    return DiscreteDist.from_pairs(pairs)


def _upward_moves(d: DiscreteDist, cfg: SearchConfig) -> list[DiscreteDist]:
    out = []
    items = list(d.items())
    for k in range(len(items)):
        out.append(_raise_atom(d, k, cfg.step))
        for dest in range(k + 1, len(items)):
            moved = _move_mass(d, k, dest, min(items[k][1], Fraction(1, 4)))
            if moved is not None:
                out.append(moved)
    if len(items) < cfg.max_atoms:
        # move part of the top atom to a new, higher atom
        x, p = items[-1]
        out.append(DiscreteDist.from_pairs(items[:-1] + [(x, p / 2), (x + cfg.step, p / 2)]))
    return out


def _perturb(d: DiscreteDist, cfg: SearchConfig, rng: random.Random) -> DiscreteDist:
    items = [list(a) for a in d.items()]
    op = rng.randrange(3)
    k = rng.randrange(len(items))
    if op == 0:
        items[k][0] = max(Fraction(0), items[k][0] + rng.choice((-1, 1)) * cfg.step)
    elif op == 1 and len(items) > 1:
        other = rng.choice([i for i in range(len(items)) if i != k])
        amt = min(items[k][1], Fraction(1, 12)) * Fraction(rng.randint(1, 2), 2)
        items[k][1] -= amt
        items[other][1] += amt
    elif len(items) < cfg.max_atoms:
        x, p = items[k]
        items[k][1] = p / 2
        items.append([x + cfg.step, p / 2])
    return DiscreteDist.from_pairs((x, p) for x, p in items)


def _certify(F: ProductDist, G: ProductDist, caps: Caps) -> Counterexample | None:
    if not _strict(F, G):
        return None
    v = XOSValuation.additive(1, F.m)
    vals = []
    for P in (F, G):
        a = rev_bic_lp(v, P, "BIC", caps, lazy=True, rule="bland").value
        b = rev_bic_lp(v, P, "BIC", caps, lazy=False, rule="bland_reverse").value
        if a != b:
            raise AssertionError("pivot orders disagree on an LP optimum")
        vals.append(a)
    if vals[1] >= vals[0]:
        return None
    return Counterexample(F, G, vals[0], vals[1])


def search_hart_reny(cfg: SearchConfig = SearchConfig(), seed: int = 0,
                     caps: Caps = DEFAULT_CAPS) -> list[Counterexample]:
    """Look for a strictly dominating ``G`` with lower optimal revenue.

    Phase one walks the coarse grid: every two-atom product ``F`` (in a
    seeded order) against each single upward move of one coordinate and
    the same move applied to all coordinates. Phase two takes the pairs
    with the smallest revenue gain per unit of mean gain and applies random
    local perturbations to ``F`` and ``G``, keeping strict dominance and
    accepting moves that do not increase that ratio. Every hit is
    re-solved from scratch under a second pivot order before it is
    returned.
    """
    rng = random.Random(seed)
    rev = _Evaluator(cfg.m, cfg.budget, caps)
    marg = _coarse_marginals(cfg)
    if cfg.m == 1:
        bases = [(d,) for d in marg]
    else:
        bases = [(a, b) for a, b in itertools.combinations_with_replacement(marg, 2)]
    rng.shuffle(bases)
    found: dict[tuple, Counterexample] = {}
    scored: list[tuple[Fraction, int, ProductDist, ProductDist]] = []
    coarse_budget = int(cfg.budget * cfg.coarse_share)

    def consider(F: ProductDist, G: ProductDist) -> bool:
        if not _strict(F, G):
            return True
        rf, rg = rev(F), rev(G)
        if rf is None or rg is None:
            return False
        if rg < rf:
            ce = _certify(F, G, caps)
            if ce is not None:
                found.setdefault((F, G), ce)
        scored.append(((rg - rf) / _mean_gain(F, G), len(scored), F, G))
        return True

    for base in bases:
        if cfg.budget - rev.left >= coarse_budget:
            break
        F = ProductDist.of([list(base)])
        for j in range(cfg.m):
            for moved in _upward_moves(base[j], cfg):
                row = list(base)
                row[j] = moved
                if not consider(F, ProductDist.of([row])):
                    break
        if cfg.m == 2 and base[0] == base[1]:
            for moved in _upward_moves(base[0], cfg):
                if not consider(F, ProductDist.of([[moved, moved]])):
                    break

    scored.sort(key=lambda s: (s[0], s[1]))
    starts = [(F, G) for _, _, F, G in scored[:cfg.keep]]
    # memo hits cost nothing, so proposals are capped separately
    proposals, idx = 20 * cfg.budget, 0
    while starts and rev.left > 0 and proposals > 0:
        F, G = starts[idx]
        best = (rev.memo[G] - rev.memo[F]) / _mean_gain(F, G)
        for _ in range(8):
            proposals -= 1
            j, which = rng.randrange(cfg.m), rng.randrange(2)
            rowF, rowG = list(F.row(0)), list(G.row(0))
            if which == 0:
                rowF[j] = _perturb(rowF[j], cfg, rng)
            else:
                rowG[j] = _perturb(rowG[j], cfg, rng)
            F2, G2 = ProductDist.of([rowF]), ProductDist.of([rowG])
            if not _strict(F2, G2):
                continue
            rf, rg = rev(F2), rev(G2)
            if rf is None or rg is None:
                break
            if rg < rf:
                ce = _certify(F2, G2, caps)
                if ce is not None:
                    found.setdefault((F2, G2), ce)
            score = (rg - rf) / _mean_gain(F2, G2)
            if score <= best:
                F, G, best = F2, G2, score
        starts[idx] = (F, G)
        idx = (idx + 1) % len(starts)
    return list(found.values())
