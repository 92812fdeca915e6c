"""Finite discrete distributions, stochastic dominance and couplings.

All values and probabilities are :class:`fractions.Fraction`; every
comparison is exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

from . import lp
from .caps import DEFAULT_CAPS, Caps, guard
from .errors import DominanceViolation


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # floats are accepted only when they are exactly representable short decimals
        return Fraction(str(x))
    return Fraction(x)


@dataclass(frozen=True)
class DiscreteDist:
    """Finite-support distribution over non-negative rationals.

    Construct through :meth:`of`, :meth:`point` or :meth:`from_pairs`; those
    merge duplicate values, drop zero-mass atoms and sort the support. The
    raw constructor validates but does not normalize.
    """

    support: tuple[Fraction, ...]
    probs: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.support) != len(self.probs) or not self.support:
            raise ValueError("support and probs must be non-empty and of equal length")
        if any(p <= 0 for p in self.probs):
            raise ValueError("probabilities must be positive")
        if sum(self.probs) != 1:
            raise ValueError(f"probabilities sum to {sum(self.probs)}, not 1")
        if self.support[0] < 0:
            raise ValueError("support values must be non-negative")
        if any(a >= b for a, b in zip(self.support, self.support[1:])):
            raise ValueError("support must be strictly increasing")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[object, object]]) -> "DiscreteDist":
        mass: dict[Fraction, Fraction] = {}
        for v, p in pairs:
            v, p = as_fraction(v), as_fraction(p)
            if p < 0:
                raise ValueError("negative probability")
            mass[v] = mass.get(v, Fraction(0)) + p
        items = sorted((v, p) for v, p in mass.items() if p != 0)
        return cls(tuple(v for v, _ in items), tuple(p for _, p in items))

    @classmethod
    def of(cls, mapping: Mapping[object, object]) -> "DiscreteDist":
        """``DiscreteDist.of({1: Fraction(1, 2), 3: Fraction(1, 2)})``"""
        return cls.from_pairs(mapping.items())

    @classmethod
    def point(cls, a) -> "DiscreteDist":
        return cls((as_fraction(a),), (Fraction(1),))

    @classmethod
    def uniform(cls, values: Iterable[object]) -> "DiscreteDist":
        values = list(values)
        return cls.from_pairs((v, Fraction(1, len(values))) for v in values)

    def __len__(self) -> int:
        return len(self.support)

    def items(self):
        return zip(self.support, self.probs)

    def survival(self, x) -> Fraction:
        """``Pr{X > x}``."""
        return sum((p for v, p in self.items() if v > x), Fraction(0))

    def cdf(self, x) -> Fraction:
        """``Pr{X <= x}``."""
        return 1 - self.survival(x)

    def mean(self) -> Fraction:
        return sum((v * p for v, p in self.items()), Fraction(0))

    def map(self, f) -> "DiscreteDist":
        """Push-forward under ``f``."""
        return DiscreteDist.from_pairs((f(v), p) for v, p in self.items())

    def shift(self, s) -> "DiscreteDist":
        s = as_fraction(s)
        return DiscreteDist(tuple(v + s for v in self.support), self.probs)


class Coupling(NamedTuple):
    """Joint law of a pair ``(t, t')`` given as exact atoms."""

    pairs: tuple[tuple[tuple[object, object], Fraction], ...]

    def left(self) -> dict:
        out: dict = {}
        for (a, _), p in self.pairs:
            out[a] = out.get(a, Fraction(0)) + p
        return out

    def right(self) -> dict:
        out: dict = {}
        for (_, b), p in self.pairs:
            out[b] = out.get(b, Fraction(0)) + p
        return out

    def total(self) -> Fraction:
        return sum((p for _, p in self.pairs), Fraction(0))


def _as_map(d: DiscreteDist) -> dict:
    return dict(d.items())


def dominates(F: DiscreteDist, G: DiscreteDist) -> bool:
    """True when ``G`` first-order dominates ``F``: ``Pr{F>t} <= Pr{G>t}`` for all t.

    Survival functions are step functions that only change at support
    points, so checking the union of supports is complete.
    """
    return all(F.survival(t) <= G.survival(t) for t in set(F.support) | set(G.support))


def quantile_couple(F: DiscreteDist, G: DiscreteDist) -> Coupling:
    """Comonotone (inverse-CDF) coupling of ``F`` and ``G``.

    Atoms are ``((t, t'), prob)`` with ``t ~ F``, ``t' ~ G`` and ``t' >= t``
    everywhere, which requires ``G`` to dominate ``F``.
    """
    if not dominates(F, G):
        raise DominanceViolation("quantile coupling needs G to dominate F")
    pairs = []
    i = j = 0
    rf, rg = F.probs[0], G.probs[0]
    while i < len(F) and j < len(G):
        take = min(rf, rg)
        pairs.append(((F.support[i], G.support[j]), take))
        rf -= take
        rg -= take
        if rf == 0:
            i += 1
            rf = F.probs[i] if i < len(F) else Fraction(0)
        if rg == 0:
            j += 1
            rg = G.probs[j] if j < len(G) else Fraction(0)
    return Coupling(tuple(pairs))


def check_coupling(c: Coupling, left: Mapping, right: Mapping) -> bool:
    """Exact marginal check of a coupling against two atom maps."""
    return c.total() == 1 and c.left() == dict(left) and c.right() == dict(right)


# -- product distributions -------------------------------------------------


def product_atoms(dists: Sequence[DiscreteDist], cap: int | None = None) -> list[tuple[tuple, Fraction]]:
    """Enumerate the joint atoms of independent coordinates."""
    size = 1
    for d in dists:
        size *= len(d)
    if cap is not None:
        guard("joint support", size, cap)
    out = []
    for combo in itertools.product(*(tuple(d.items()) for d in dists)):
        p = Fraction(1)
        for _, q in combo:
            p *= q
        out.append((tuple(v for v, _ in combo), p))
    return out


@dataclass(frozen=True)
class ProductDist:
    """``n x m`` matrix of independent coordinate distributions.

    Row ``i`` is buyer ``i``'s type distribution ``F_i = F_i1 x ... x F_im``.
    Single-parameter instances use ``m = 1``.
    """

    entries: tuple[tuple[DiscreteDist, ...], ...]

    def __post_init__(self):
        if not self.entries or not self.entries[0]:
            raise ValueError("empty product distribution")
        m = len(self.entries[0])
        if any(len(r) != m for r in self.entries):
            raise ValueError("ragged product distribution")

    @classmethod
    def of(cls, rows: Iterable[Iterable[DiscreteDist]]) -> "ProductDist":
        return cls(tuple(tuple(r) for r in rows))

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def m(self) -> int:
        return len(self.entries[0])

    def row(self, i: int) -> tuple[DiscreteDist, ...]:
        return self.entries[i]

    def column(self, j: int) -> tuple[DiscreteDist, ...]:
        return tuple(r[j] for r in self.entries)

    def joint_size(self) -> int:
        size = 1
        for r in self.entries:
            for d in r:
                size *= len(d)
        return size

    def buyer_types(self, i: int, caps: Caps = DEFAULT_CAPS) -> list[tuple[tuple, Fraction]]:
        """Atoms ``(t_i, Pr{t_i})`` of buyer ``i``'s type vector."""
        return product_atoms(self.entries[i], caps.joint)

    def profiles(self, caps: Caps = DEFAULT_CAPS) -> list[tuple[tuple[tuple, ...], Fraction]]:
        """Atoms ``(t, Pr{t})`` of the full type profile, ``t[i][j] = t_ij``."""
        guard("joint support", self.joint_size(), caps.joint)
        rows = [product_atoms(r) for r in self.entries]
        out = []
        for combo in itertools.product(*rows):
            p = Fraction(1)
            for _, q in combo:
                p *= q
            out.append((tuple(t for t, _ in combo), p))
        return out

    def dominated_by(self, other: "ProductDist") -> bool:
        """Coordinatewise first-order dominance ``self <= other``."""
        return (self.n, self.m) == (other.n, other.m) and all(
            dominates(a, b) for ra, rb in zip(self.entries, other.entries) for a, b in zip(ra, rb)
        )


# -- v-dominance -----------------------------------------------------------


class VDominance(NamedTuple):
    holds: bool
    witness: Coupling | None

    def __bool__(self) -> bool:
        return self.holds


def _all_subsets(m: int):
    for r in range(m + 1):
        yield from (frozenset(c) for c in itertools.combinations(range(m), r))


def v_dominates(v, i: int, F_i: Sequence[DiscreteDist], G_i: Sequence[DiscreteDist],
                caps: Caps = DEFAULT_CAPS) -> VDominance:
    """Decide whether ``G_i`` v-dominates ``F_i`` for buyer ``i``.

    Looks for a coupling ``(t, t')`` with ``t ~ G_i``, ``t' ~ F_i`` and
    ``v_i(t, S) >= v_i(t', S)`` for every bundle ``S``. This is a
    transportation feasibility problem on the bipartite graph of admissible
    pairs, solved as an exact LP. On success the witness atoms are
    ``((t, t'), prob)``.
    """
    if len(F_i) != len(G_i):
        raise ValueError("rows must have the same number of items")
    g_atoms = product_atoms(G_i, caps.joint)
    f_atoms = product_atoms(F_i, caps.joint)
    guard("coupling pairs", len(g_atoms) * len(f_atoms), caps.joint)
    subsets = list(_all_subsets(len(F_i)))
    gv = [[v.value(i, t, S) for S in subsets] for t, _ in g_atoms]
    fv = [[v.value(i, t, S) for S in subsets] for t, _ in f_atoms]
    edges = [(a, b) for a in range(len(g_atoms)) for b in range(len(f_atoms))
             if all(x >= y for x, y in zip(gv[a], fv[b]))]
    rows_g = [dict() for _ in g_atoms]
    rows_f = [dict() for _ in f_atoms]
    for k, (a, b) in enumerate(edges):
        rows_g[a][k] = 1
        rows_f[b][k] = 1
    eq = [(r, p) for r, (_, p) in zip(rows_g, g_atoms)] + [(r, p) for r, (_, p) in zip(rows_f, f_atoms)]
    if any(not r for r, _ in eq):
        return VDominance(False, None)
    guard("LP size", len(edges) * len(eq), caps.lp)
    x = lp.feasible_point(len(edges), eq=eq)
    if x is None:
        return VDominance(False, None)
    pairs = tuple(((g_atoms[a][0], f_atoms[b][0]), x[k]) for k, (a, b) in enumerate(edges) if x[k] != 0)
    return VDominance(True, Coupling(pairs))


def v_dominates_profile(v, F: ProductDist, G: ProductDist, caps: Caps = DEFAULT_CAPS) -> list[VDominance]:
    """Per-buyer v-dominance of ``G`` over ``F``; all must hold for ``G >=_v F``."""
    return [v_dominates(v, i, F.row(i), G.row(i), caps) for i in range(F.n)]
