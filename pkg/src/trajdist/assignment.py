"""Minimum-cost assignment with a deterministic tie-break.

The optimum is found with the shortest augmenting path solver in SciPy.
Among all optimal assignments the lexicographically smallest one (row 0
gets the lowest possible column, then row 1, ...) is returned. The
procedure recovers dual potentials from the optimal matching, keeps the
edges with zero reduced cost, and then fixes rows in order while rotating
the matching along alternating cycles of tight edges.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["batched_assignment", "dual_potentials", "lex_min_assignment"]


def dual_potentials(cost: np.ndarray, perm: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Dual variables certifying that ``perm`` is an optimal assignment.

    Returns ``u, v`` with ``cost[i, j] - u[i] - v[j] >= 0`` and equality on
    ``(i, perm[i])`` (up to rounding). Computed by Bellman-Ford on the
    residual graph over columns.
    """
    n = cost.shape[0]
    own = cost[np.arange(n), perm]
    # arc perm[i] -> j with weight cost[i, j] - cost[i, perm[i]]
    w = cost - own[:, None]
    d = np.zeros(n)
    for _ in range(n + 1):
        cand = np.min(d[perm][:, None] + w, axis=0)
        new = np.minimum(d, cand)
        if np.array_equal(new, d):
            break
        d = new
    v = d
    u = own - v[perm]
    return u, v


def _rotate(match: np.ndarray, owner: np.ndarray, tight: np.ndarray, fixed: np.ndarray, i: int, j: int) -> bool:
    """Try to re-route the matching so that row ``i`` takes column ``j``.

    Searches a path of tight edges r0 -> r1 -> ... -> i where r0 currently
    owns ``j`` and each row takes the column of the next one. Rows already
    fixed are excluded.
    """
    r0 = owner[j]
    if fixed[r0]:
        return False
    n = len(match)
    # adj[a, b]: row a may take the column currently matched to row b
    adj = tight[:, match]
    free = ~fixed
    prev = np.full(n, -1)
    visited = np.zeros(n, dtype=bool)
    visited[r0] = True
    frontier = np.array([r0])
    found = False
    while frontier.size and not found:
        nxt_rows = []
        for a in frontier:
            cand = np.flatnonzero(adj[a] & free & ~visited)
            if cand.size == 0:
                continue
            visited[cand] = True
            prev[cand] = a
            if visited[i]:
                found = True
                break
            nxt_rows.append(cand)
        frontier = np.concatenate(nxt_rows) if nxt_rows and not found else np.array([], dtype=int)
    if not found:
        return False
    # walk back from i to r0: each row on the path takes its successor's column
    path = [i]
    while path[-1] != r0:
        path.append(prev[path[-1]])
    path.reverse()  # r0, ..., i
    new_cols = [match[path[q + 1]] for q in range(len(path) - 1)]
    for row, col in zip(path[:-1], new_cols):
        match[row] = col
        owner[col] = row
    match[i] = j
    owner[j] = i
    return True


def lex_min_assignment(cost: np.ndarray, rtol: float = 1e-10) -> tuple[np.ndarray, float]:
    """Lexicographically smallest minimum-cost assignment.

    Parameters
    ----------
    cost : ndarray, shape (n, n)
        Finite cost matrix.
    rtol : float
        Reduced costs below ``rtol * max(1, max|cost|)`` count as zero.

    Returns
    -------
    perm : ndarray of int
        ``perm[i]`` is the column assigned to row ``i``.
    value : float
        ``sum(cost[i, perm[i]])``.
    """
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    if cost.shape != (n, n):
        raise ValueError("cost matrix must be square")
    if n == 0:
        return np.zeros(0, dtype=int), 0.0
    _, perm = linear_sum_assignment(cost)
    perm = perm.astype(int)
    if n > 1:
        u, v = dual_potentials(cost, perm)
        scale = max(1.0, float(np.max(np.abs(cost))))
        tight = cost - u[:, None] - v[None, :] <= rtol * scale * n
        tight[np.arange(n), perm] = True
        # rows with a tight column left of their current one may move
        if np.any(np.argmax(tight, axis=1) < perm):
            owner = np.empty(n, dtype=int)
            owner[perm] = np.arange(n)
            fixed = np.zeros(n, dtype=bool)
            for i in range(n):
                for j in np.flatnonzero(tight[i, : perm[i]]):
                    if _rotate(perm, owner, tight, fixed, i, j):
                        break
                fixed[i] = True
    value = float(cost[np.arange(n), perm].sum())
    return perm, value


_ENUM_MAX_M = 5


def _perm_rows(m: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(m))), dtype=np.int64).reshape(-1, m)


def batched_assignment(C: np.ndarray, chunk: int = 20000) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-cost assignments for a stack of square matrices.

    Parameters
    ----------
    C : ndarray, shape (N, m, m)
        Costs; ``inf`` marks forbidden entries.

    Returns
    -------
    perms : ndarray, shape (N, m)
    values : ndarray, shape (N,)

    Small matrices are handled by enumerating all permutations at once;
    larger ones are solved one at a time. Ties are not broken in any
    particular way.
    """
    C = np.asarray(C, dtype=float)
    N, m = C.shape[0], C.shape[-1]
    if m == 0:
        return np.zeros((N, 0), dtype=int), np.zeros(N)
    if m <= _ENUM_MAX_M:
        P = _perm_rows(m)
        rows = np.arange(m)
        perms = np.empty((N, m), dtype=int)
        values = np.empty(N)
        step = max(1, chunk // len(P))
        for lo in range(0, N, step):
            blk = C[lo : lo + step]
            tot = blk[:, rows[None, :], P].sum(axis=-1)
            best = np.argmin(tot, axis=1)
            perms[lo : lo + step] = P[best]
            values[lo : lo + step] = tot[np.arange(len(blk)), best]
        return perms, values
    perms = np.empty((N, m), dtype=int)
    values = np.empty(N)
    for n in range(N):
        r, c = linear_sum_assignment(C[n])
        perms[n] = c
        values[n] = C[n][r, c].sum()
    return perms, values
