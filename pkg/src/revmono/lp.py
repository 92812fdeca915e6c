"""Exact rational linear programming.

A dense tableau simplex over ``gmpy2.mpq``. Every quantity is an exact
rational; there is no tolerance anywhere. Problems take the form::

    maximize    c . x
    subject to  A_ub x <= b_ub
                A_eq x == b_eq
                x >= 0

Rows are given either as dense sequences or as sparse ``{column: coef}``
mappings. Results come back as :class:`fractions.Fraction`.

Pivot rules
-----------
``"bland"``
    Lowest-index entering column, lowest-index leaving variable on ratio
    ties. Never cycles.
``"bland_reverse"``
    Bland's rule under the reversed variable order (highest index first).
    Also cycle-free, and follows a different pivot path, so it is used to
    re-verify an optimum independently.
``"dantzig"``
    Largest reduced cost. Falls back to Bland after a run of degenerate
    pivots, so it terminates too.

:class:`Tableau` keeps its state between calls so that rows can be added
after an optimum is reached and re-optimized with the dual simplex; this is
what makes lazy constraint generation cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from gmpy2 import mpq

from .errors import CapExceeded

Row = Union[Mapping[int, object], Sequence[object]]

RULES = ("bland", "bland_reverse", "dantzig")
_ZERO = mpq(0)
_ONE = mpq(1)
_DEGENERATE_STREAK = 50


def to_mpq(x) -> mpq:
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


def to_fraction(q) -> Fraction:
    q = mpq(q)
    return Fraction(int(q.numerator), int(q.denominator))


def _items(row: Row):
    if isinstance(row, Mapping):
        return row.items()
    return enumerate(row)


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: Fraction | None = None
    x: list[Fraction] | None = None
    pivots: int = 0
    rule: str = "bland"

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class Tableau:
    """Simplex tableau for ``max c.x`` over ``x >= 0`` with exact pivots.

    Column layout: structural variables ``0..nvars-1``, then one slack or
    surplus per inequality row, then artificials. ``rows[i][-1]`` is the
    right-hand side of row ``i``; ``obj`` holds the reduced costs with
    ``-obj[-1]`` the current objective value.
    """

    def __init__(self, c: Row, nvars: int, ub: Iterable[tuple[Row, object]] = (),
                 eq: Iterable[tuple[Row, object]] = (), rule: str = "bland"):
        if rule not in RULES:
            raise ValueError(f"unknown pivot rule {rule!r}")
        self.rule = rule
        self.nvars = nvars
        self.pivots = 0
        self.c = [_ZERO] * nvars
        for j, v in _items(c):
            self.c[j] = to_mpq(v)

        ub = [(r, to_mpq(b)) for r, b in ub]
        eq = [(r, to_mpq(b)) for r, b in eq]
        n_slack = len(ub)
        n_art = sum(1 for _, b in ub if b < 0) + len(eq)
        self.ncols = nvars + n_slack + n_art
        self.artificial = set(range(nvars + n_slack, self.ncols))
        self.rows: list[list[mpq]] = []
        self.basis: list[int] = []

        art = nvars + n_slack
        for k, (r, b) in enumerate(ub):
            row = [_ZERO] * (self.ncols + 1)
            sign = -1 if b < 0 else 1
            for j, v in _items(r):
                row[j] = sign * to_mpq(v)
            row[nvars + k] = mpq(sign)
            row[-1] = sign * b
            if b < 0:
                row[art] = _ONE
                self.basis.append(art)
                art += 1
            else:
                self.basis.append(nvars + k)
            self.rows.append(row)
        for r, b in eq:
            row = [_ZERO] * (self.ncols + 1)
            sign = -1 if b < 0 else 1
            for j, v in _items(r):
                row[j] = sign * to_mpq(v)
            row[-1] = sign * b
            row[art] = _ONE
            self.basis.append(art)
            art += 1
            self.rows.append(row)
        self.obj: list[mpq] = []
        self.status = "unsolved"

    # -- core ---------------------------------------------------------------

    def _pivot(self, r: int, c: int) -> None:
        prow = self.rows[r]
        piv = prow[c]
        if piv != _ONE:
            inv = _ONE / piv
            prow = [x * inv if x else x for x in prow]
            self.rows[r] = prow
        nz = [j for j, x in enumerate(prow) if x]
        for i, row in enumerate(self.rows):
            if i != r:
                f = row[c]
                if f:
                    for j in nz:
                        row[j] -= f * prow[j]
        f = self.obj[c]
        if f:
            obj = self.obj
            for j in nz:
                obj[j] -= f * prow[j]
        self.basis[r] = c
        self.pivots += 1

    def _entering(self, barred: set[int], bland: bool) -> int | None:
        obj = self.obj
        cols = range(self.ncols)
        if bland and self.rule == "bland_reverse":
            cols = reversed(cols)
        if bland:
            for j in cols:
                if obj[j] > 0 and j not in barred:
                    return j
            return None
        best, best_j = _ZERO, None
        for j in cols:
            if obj[j] > best and j not in barred:
                best, best_j = obj[j], j
        return best_j

    def _leaving(self, c: int) -> int | None:
        best = None
        best_r = None
        reverse = self.rule == "bland_reverse"
        for i, row in enumerate(self.rows):
            a = row[c]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best:
                    best, best_r = ratio, i
                elif ratio == best:
                    bi, bb = self.basis[i], self.basis[best_r]
                    if (bi > bb) if reverse else (bi < bb):
                        best_r = i
        return best_r

    def _primal(self, barred: set[int], max_pivots: int | None) -> str:
        streak = 0
        while True:
            bland = self.rule != "dantzig" or streak >= _DEGENERATE_STREAK
            c = self._entering(barred, bland)
            if c is None:
                return "optimal"
            r = self._leaving(c)
            if r is None:
                return "unbounded"
            streak = streak + 1 if self.rows[r][-1] == 0 else 0
            self._pivot(r, c)
            if max_pivots is not None and self.pivots > max_pivots:
                raise CapExceeded("simplex pivots", self.pivots, max_pivots)

    def _set_objective(self, costs: list[mpq]) -> None:
        obj = list(costs) + [_ZERO]
        for i, b in enumerate(self.basis):
            cb = costs[b]
            if cb:
                row = self.rows[i]
                obj = [o - cb * x for o, x in zip(obj, row)]
        self.obj = obj

    def solve(self, max_pivots: int | None = None) -> str:
        if self.artificial:
            costs = [_ZERO] * self.ncols
            for a in self.artificial:
                costs[a] = mpq(-1)
            self._set_objective(costs)
            self._primal(set(), max_pivots)
            if self.obj[-1] != 0:
                self.status = "infeasible"
                return self.status
            self._expel_artificials()
        costs = self.c + [_ZERO] * (self.ncols - self.nvars)
        self._set_objective(costs)
        self.status = self._primal(self.artificial, max_pivots)
        return self.status

    def _expel_artificials(self) -> None:
        r = 0
        while r < len(self.rows):
            if self.basis[r] in self.artificial:
                row = self.rows[r]
                c = next((j for j in range(self.ncols)
                          if row[j] and j not in self.artificial), None)
                if c is None:
                    # redundant equality
                    del self.rows[r]
                    del self.basis[r]
                    continue
                self._pivot(r, c)
            r += 1

    # -- row generation -----------------------------------------------------

    def add_ub_row(self, row: Row, rhs) -> None:
        """Append ``row . x <= rhs`` and express it in the current basis."""
        for r in self.rows:
            r.insert(-1, _ZERO)
        if self.obj:
            self.obj.insert(-1, _ZERO)
        slack = self.ncols
        self.ncols += 1
        new = [_ZERO] * (self.ncols + 1)
        for j, v in _items(row):
            new[j] = to_mpq(v)
        new[slack] = _ONE
        new[-1] = to_mpq(rhs)
        for i, b in enumerate(self.basis):
            f = new[b]
            if f:
                src = self.rows[i]
                new = [x - f * y for x, y in zip(new, src)]
        self.rows.append(new)
        self.basis.append(slack)

    def dual_simplex(self, max_pivots: int | None = None) -> str:
        """Restore primal feasibility from a dual-feasible basis."""
        reverse = self.rule == "bland_reverse"
        while True:
            cand = [i for i, row in enumerate(self.rows) if row[-1] < 0]
            if not cand:
                self.status = "optimal"
                return self.status
            key = self.basis.__getitem__
            r = max(cand, key=key) if reverse else min(cand, key=key)
            row = self.rows[r]
            best, best_c = None, None
            cols = range(self.ncols)
            if reverse:
                cols = reversed(cols)
            for j in cols:
                a = row[j]
                if a < 0 and j not in self.artificial:
                    ratio = self.obj[j] / a
                    if best is None or ratio < best:
                        best, best_c = ratio, j
            if best_c is None:
                self.status = "infeasible"
                return self.status
            self._pivot(r, best_c)
            if max_pivots is not None and self.pivots > max_pivots:
                raise CapExceeded("simplex pivots", self.pivots, max_pivots)

    # -- readout ------------------------------------------------------------

    def value(self) -> Fraction:
        return to_fraction(-self.obj[-1])

    def solution(self) -> list[Fraction]:
        x = [Fraction(0)] * self.nvars
        for i, b in enumerate(self.basis):
            if b < self.nvars:
                x[b] = to_fraction(self.rows[i][-1])
        return x

    def result(self) -> LPResult:
        if self.status != "optimal":
            return LPResult(self.status, pivots=self.pivots, rule=self.rule)
        return LPResult("optimal", self.value(), self.solution(), self.pivots, self.rule)


def maximize(c: Row, nvars: int, ub: Iterable[tuple[Row, object]] = (),
             eq: Iterable[tuple[Row, object]] = (), *, rule: str = "bland",
             max_pivots: int | None = None) -> LPResult:
    """Solve ``max c.x  s.t.  ub rows <= rhs, eq rows == rhs, x >= 0`` exactly.

    ``ub`` and ``eq`` are iterables of ``(row, rhs)`` pairs.
    """
    t = Tableau(c, nvars, ub, eq, rule=rule)
    t.solve(max_pivots)
    return t.result()


def feasible_point(nvars: int, ub=(), eq=(), *, rule: str = "bland") -> list[Fraction] | None:
    """Return an exact feasible point, or ``None`` when the system is empty."""
    res = maximize({}, nvars, ub, eq, rule=rule)
    return res.x if res.optimal else None


def check_feasible(x: Sequence[Fraction], ub=(), eq=()) -> bool:
    """Exact membership test of ``x`` in the polyhedron, used as a certificate."""
    if any(v < 0 for v in x):
        return False

    def dot(row):
        return sum((Fraction(v) * x[j] for j, v in _items(row)), Fraction(0))

    return all(dot(r) <= Fraction(b) for r, b in ub) and all(dot(r) == Fraction(b) for r, b in eq)
