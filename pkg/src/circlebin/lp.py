"""Exact rational covering LP (two-phase simplex) and covering IP (best-first).

Small sizes only: a handful of demand classes and at most a few hundred
candidate configurations.  Everything runs over Fractions with Bland's rule,
so the LP value is exact and the branch-and-bound optimum is certified.
"""

from __future__ import annotations

import heapq
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple


def _simplex_min(tableau: List[List[Fraction]], basis: List[int], cost_row: int) -> None:
    """In-place simplex minimization with Bland's anti-cycling rule."""
    rows = cost_row
    cols = len(tableau[0]) - 1
    while True:
        enter = -1
        for j in range(cols):
            if tableau[cost_row][j] < 0:
                enter = j
                break
        if enter < 0:
            return
        leave = -1
        best: Optional[Fraction] = None
        for i in range(rows):
            a = tableau[i][enter]
            if a > 0:
                ratio = tableau[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] > basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            raise ArithmeticError("LP unbounded (unexpected for covering)")
        piv = tableau[leave][enter]
        tableau[leave] = [v / piv for v in tableau[leave]]
        for i in range(len(tableau)):
            if i != leave and tableau[i][enter] != 0:
                f = tableau[i][enter]
                tableau[i] = [v - f * pv for v, pv in zip(tableau[i], tableau[leave])]
        basis[leave] = enter


def covering_lp_value(
    configs: Sequence[Tuple[int, ...]], demands: Sequence[int]
) -> Optional[Fraction]:
    """Exact optimum of min sum(x), sum_c c_i x_c >= n_i, x >= 0.

    Returns None when some positive demand is covered by no configuration.
    """
    k = len(demands)
    m = len(configs)
    rows = [i for i in range(k) if demands[i] > 0]
    if not rows:
        return Fraction(0)
    for i in rows:
        if not any(cfg[i] > 0 for cfg in configs):
            return None
    nr = len(rows)
    # columns: x (m) | surplus (nr) | artificial (nr) | rhs
    cols = m + 2 * nr
    tableau: List[List[Fraction]] = []
    basis: List[int] = []
    for idx, i in enumerate(rows):
        row = [Fraction(0)] * (cols + 1)
        for j, cfg in enumerate(configs):
            row[j] = Fraction(cfg[i])
        row[m + idx] = Fraction(-1)
        row[m + nr + idx] = Fraction(1)
        row[-1] = Fraction(demands[i])
        tableau.append(row)
        basis.append(m + nr + idx)
    # phase 1: minimize sum of artificials
    cost = [Fraction(0)] * (cols + 1)
    for idx in range(nr):
        cost = [c - r for c, r in zip(cost, tableau[idx])]
    tableau.append(cost)
    _simplex_min(tableau, basis, nr)
    phase1 = -tableau[-1][-1]
    if phase1 > 0:
        return None
    tableau.pop()
    # drive artificials out of the basis if degenerate, then drop them
    for idx in range(nr):
        if basis[idx] >= m + nr:
            for j in range(m + nr):
                if tableau[idx][j] != 0:
                    piv = tableau[idx][j]
                    tableau[idx] = [v / piv for v in tableau[idx]]
                    for i2 in range(nr):
                        if i2 != idx and tableau[i2][j] != 0:
                            f = tableau[i2][j]
                            tableau[i2] = [
                                v - f * pv for v, pv in zip(tableau[i2], tableau[idx])
                            ]
                    basis[idx] = j
                    break
    tableau = [row[: m + nr] + [row[-1]] for row in tableau]
    # phase 2: minimize sum of x
    cost = [Fraction(0)] * (m + nr + 1)
    for j in range(m):
        cost[j] = Fraction(1)
    for idx in range(nr):
        b = basis[idx]
        if cost[b] != 0:
            f = cost[b]
            cost = [c - f * v for c, v in zip(cost, tableau[idx])]
    tableau.append(cost)
    _simplex_min(tableau, basis, nr)
    return -tableau[-1][-1]


def greedy_cover(
    configs: Sequence[Tuple[int, ...]], demands: Sequence[int]
) -> Optional[List[int]]:
    """First-fit style incumbent: repeatedly apply the config covering the
    most outstanding demand (ties by lexicographic config order)."""
    remaining = list(demands)
    counts = [0] * len(configs)
    while any(v > 0 for v in remaining):
        best_j = -1
        best_cover = 0
        for j, cfg in enumerate(configs):
            cover = sum(min(c, r) for c, r in zip(cfg, remaining))
            if cover > best_cover:
                best_cover = cover
                best_j = j
        if best_j < 0:
            return None
        counts[best_j] += 1
        remaining = [max(0, r - c) for r, c in zip(remaining, configs[best_j])]
    return counts


def solve_cover_ip(
    configs: Sequence[Tuple[int, ...]], demands: Sequence[int]
) -> List[int]:
    """Certified minimum multiset of configurations covering the demands.

    Best-first branch and bound over residual demand vectors with the exact
    fractional LP as admissible bound and the greedy cover as incumbent.
    Raises ValueError when some demanded class is covered by no config.
    """
    demands = tuple(demands)
    if all(v == 0 for v in demands):
        return [0] * len(configs)
    incumbent = greedy_cover(configs, demands)
    if incumbent is None:
        raise ValueError("covering infeasible: some class has no config")
    upper = sum(incumbent)

    lp_cache: Dict[Tuple[int, ...], Fraction] = {}

    def bound(residual: Tuple[int, ...]) -> int:
        if residual not in lp_cache:
            v = covering_lp_value(configs, residual)
            if v is None:
                raise ValueError("covering infeasible: some class has no config")
            lp_cache[residual] = v
        v = lp_cache[residual]
        return -((-v.numerator) // v.denominator)  # ceil

    start = demands
    heap: List[Tuple[int, int, int, Tuple[int, ...], Tuple[int, ...]]] = []
    counter = 0
    heapq.heappush(heap, (bound(start), 0, counter, start, ()))
    best_g: Dict[Tuple[int, ...], int] = {start: 0}
    while heap:
        f, g, _, residual, chosen = heapq.heappop(heap)
        if g > best_g.get(residual, g):
            continue
        if all(v == 0 for v in residual):
            counts = [0] * len(configs)
            for j in chosen:
                counts[j] += 1
            return counts
        if f >= upper and any(v > 0 for v in residual):
            # the incumbent already achieves this; fall back to it
            pass
        i = next(idx for idx, v in enumerate(residual) if v > 0)
        for j, cfg in enumerate(configs):
            if cfg[i] <= 0:
                continue
            child = tuple(max(0, r - c) for r, c in zip(residual, cfg))
            g2 = g + 1
            if g2 >= best_g.get(child, g2 + 1):
                continue
            best_g[child] = g2
            counter += 1
            f2 = g2 + bound(child)
            if f2 > upper:
                continue
            heapq.heappush(heap, (f2, g2, counter, child, chosen + (j,)))
    # exhausted without closing: incumbent is optimal
    return incumbent
