"""Pairwise and alignment-based bag metrics.

pair_score averages sim(g, r) over the full cross product of two bags.
align_score equalizes the bag sizes, then finds a max-weight 1-to-1
assignment between occurrences and normalizes the matched weight by the
equalized size. The graph is bipartite, so the assignment problem is solved
directly (O(n^3)) instead of with a general matching algorithm; duplicate
texts simply repeat rows/columns of the weight matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Bag, equalize_sizes
from .errors import ShapeError
from .sentence_sim import SimilarityFn

__all__ = ["Alignment", "pair_score", "max_weight_matching", "align_score"]


@dataclass
class Alignment:
    """A 1-to-1 assignment between two equal-size bags: (row, column) index
    pairs, one per row, plus the summed weight of the matched edges."""

    pairs: list[tuple[int, int]]
    total_weight: float


def pair_score(g: Bag, r: Bag, sim: SimilarityFn) -> float:
    """Average sentence similarity over all |G| x |R| occurrence pairs.

    Duplicates are counted per occurrence; the computation groups by
    distinct raw text, which is exact because sim depends only on content.
    """
    g_distinct = g.distinct()
    r_distinct = r.distinct()
    g_counts = g.counts()
    r_counts = r.counts()
    weights = sim.matrix(g_distinct, r_distinct)
    gc = np.array([g_counts[s.raw] for s in g_distinct], dtype=float)
    rc = np.array([r_counts[s.raw] for s in r_distinct], dtype=float)
    total = float(gc @ weights @ rc)
    return total / (len(g) * len(r))


def _solve_assignment(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Min-cost perfect assignment via shortest augmenting paths with dual
    potentials (the classic O(n^3) Hungarian/JV scheme).

    Returns (col_of_row, u, v) where u, v are optimal potentials with
    u[i] + v[j] <= cost[i-1, j-1] up to float error (1-based, index 0 is a
    virtual column), tight on matched edges.
    """
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=int)  # p[j]: 1-based row matched to column j
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = np.where(free, cost[i0 - 1, :] - u[i0] - v[1:], np.inf)
            improve = cur < minv[1:]
            if improve.any():
                idx = np.flatnonzero(improve) + 1
                minv[idx] = cur[idx - 1]
                way[idx] = j0
            masked = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = int(way[j0])
            p[j0] = p[j1]
            j0 = j1
    col_of_row = np.zeros(n, dtype=int)
    for j in range(1, n + 1):
        col_of_row[p[j] - 1] = j - 1
    return col_of_row, u, v


def _lex_smallest_matching(
    neighbors: list[list[int]], col_of_row: list[int]
) -> list[int]:
    """Refine a perfect matching of the tight-edge graph into the one whose
    (row, column) pair list is lexicographically smallest.

    Rows are fixed in order; for each row, candidate columns are tried in
    ascending order and accepted when the displaced row can be re-matched
    inside the remaining graph (Kuhn-style alternating search).
    """
    n = len(col_of_row)
    row_of_col = [-1] * n
    for i, c in enumerate(col_of_row):
        row_of_col[c] = i
    fixed = [False] * n

    def rematch(row: int, visited: set[int]) -> bool:
        for col in neighbors[row]:
            if fixed[col] or col in visited:
                continue
            visited.add(col)
            owner = row_of_col[col]
            if owner == -1 or rematch(owner, visited):
                col_of_row[row] = col
                row_of_col[col] = row
                return True
        return False

    for i in range(n):
        for j in neighbors[i]:
            if fixed[j]:
                continue
            if j == col_of_row[i]:
                break
            displaced = row_of_col[j]
            saved_cols = col_of_row.copy()
            saved_rows = row_of_col.copy()
            freed = col_of_row[i]
            col_of_row[i] = j
            row_of_col[j] = i
            row_of_col[freed] = -1
            if rematch(displaced, visited={j}):
                break
            col_of_row[:] = saved_cols
            row_of_col[:] = saved_rows
        fixed[col_of_row[i]] = True
    return col_of_row


def max_weight_matching(weights: np.ndarray) -> Alignment:
    """Maximum-weight perfect matching of a square weight matrix.

    Ties between equally heavy matchings are broken by returning the
    lexicographically smallest pair list, so results are reproducible (an
    all-equal matrix yields the diagonal).
    """
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
        raise ShapeError(f"weight matrix must be square, got shape {weights.shape}")
    n = weights.shape[0]
    cost = -weights
    col_of_row, u, v = _solve_assignment(cost)
    # Optimal matchings are exactly the perfect matchings of the tight-edge
    # graph (complementary slackness); tol absorbs float drift in the duals.
    slack = cost - u[1:, None] - v[None, 1:]
    tol = 1e-10 * max(1.0, float(np.abs(cost).max()))
    tight = slack <= tol
    tight[np.arange(n), col_of_row] = True
    neighbors = [np.flatnonzero(tight[i]).tolist() for i in range(n)]
    final = _lex_smallest_matching(neighbors, [int(c) for c in col_of_row])
    pairs = [(i, final[i]) for i in range(n)]
    total = float(sum(weights[i, j] for i, j in pairs))
    return Alignment(pairs=pairs, total_weight=total)


def align_score(g: Bag, r: Bag, sim: SimilarityFn, seed: int) -> float:
    """Alignment-based bag similarity: equalize sizes, build the full weight
    matrix, take the max-weight 1-to-1 matching and normalize its summed
    weight by the equalized bag size."""
    g_eq, r_eq = equalize_sizes(g, r, seed)
    g_items = g_eq.sorted_items()
    r_items = r_eq.sorted_items()
    weights = sim.matrix(g_items, r_items)
    alignment = max_weight_matching(weights)
    return alignment.total_weight / len(g_items)
