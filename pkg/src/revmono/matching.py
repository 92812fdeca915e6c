"""Maximum-weight bipartite matching with exact arithmetic.

Hungarian algorithm with potentials (O(k^3) on the padded square matrix).
Works over any ordered field, so Fraction weights give exact optima.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def max_weight_matching(w: Sequence[Sequence[Fraction]]) -> tuple[Fraction, list[tuple[int, int]]]:
    """Maximum total weight of a matching in the ``rows x cols`` bipartite graph.

    Negative weights are never worth taking, so they are clipped to zero;
    returned pairs only include edges with positive weight.
    """
    n_rows = len(w)
    n_cols = len(w[0]) if n_rows else 0
    if n_rows == 0 or n_cols == 0:
        return Fraction(0), []
    k = max(n_rows, n_cols)
    weights = [[Fraction(0)] * k for _ in range(k)]
    for i in range(n_rows):
        for j in range(n_cols):
            if w[i][j] > 0:
                weights[i][j] = Fraction(w[i][j])
    top = max(max(r) for r in weights)
    cost = [[top - x for x in r] for r in weights]

    # 1-indexed potentials; way[j] remembers the augmenting path
    INF = None
    u = [Fraction(0)] * (k + 1)
    v = [Fraction(0)] * (k + 1)
    p = [0] * (k + 1)
    way = [0] * (k + 1)
    for i in range(1, k + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (k + 1)
        used = [False] * (k + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta, j1 = INF, 0
            for j in range(1, k + 1):
                if not used[j]:
                    cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                    if minv[j] is INF or cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if delta is INF or minv[j] < delta:
                        delta, j1 = minv[j], j
            for j in range(k + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    pairs = sorted((p[j] - 1, j - 1) for j in range(1, k + 1) if p[j])
    pairs = [(i, j) for i, j in pairs if i < n_rows and j < n_cols and weights[i][j] > 0]
    return sum((weights[i][j] for i, j in pairs), Fraction(0)), pairs
