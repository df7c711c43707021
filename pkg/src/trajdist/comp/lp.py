"""Linear-programming form of the relaxed distance.

Variables are the frame matrices ``W_t``, bounds ``h_t >= |W_{t+1} - W_t|``
entrywise, and, for the column-sum norm, one ``e_t`` per edge bounding every
column sum of ``h_t``. The entrywise norm charges ``alpha * sum(h_t)``
directly and needs no ``e_t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from trajdist.comp.norms import check_norm
from trajdist.errors import InfeasiblePatternError, NotConvergedError

__all__ = ["LPInstance", "lp_build", "lp_solve"]


@dataclass
class LPInstance:
    """``min c @ x`` s.t. ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq``, bounds."""

    c: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    bounds: np.ndarray
    T: int
    m: int
    n_w: int
    n_h: int
    n_e: int

    @property
    def n_vars(self) -> int:
        return self.n_w + self.n_h + self.n_e

    def weights(self, x: np.ndarray) -> np.ndarray:
        return x[: self.n_w].reshape(self.T, self.m, self.m)


def lp_build(D: np.ndarray, alpha: float, norm: str = "colsum", mask: np.ndarray | None = None) -> LPInstance:
    """Assemble the LP for distance matrices ``D`` of shape ``(T, m, m)``."""
    check_norm(norm)
    D = np.asarray(D, dtype=float)
    T, m = D.shape[0], D.shape[-1]
    mm = m * m
    n_w = T * mm
    n_h = (T - 1) * mm
    n_e = (T - 1) if norm == "colsum" else 0
    n = n_w + n_h + n_e

    c = np.zeros(n)
    c[:n_w] = D.ravel()
    if norm == "colsum":
        c[n_w + n_h :] = alpha
    else:
        c[n_w : n_w + n_h] = alpha

    widx = np.arange(n_w).reshape(T, m, m)
    # doubly stochastic: rows then columns of every frame
    eq_rows = np.repeat(np.arange(2 * T * m), m)
    eq_cols = np.concatenate([widx.reshape(T * m, m).ravel(), widx.transpose(0, 2, 1).reshape(T * m, m).ravel()])
    A_eq = sp.csr_matrix((np.ones(eq_rows.size), (eq_rows, eq_cols)), shape=(2 * T * m, n))
    b_eq = np.ones(2 * T * m)

    rows, cols, vals = [], [], []
    r = 0
    if T > 1:
        hidx = n_w + np.arange(n_h).reshape(T - 1, m, m)
        nxt = widx[1:].ravel()
        cur = widx[:-1].ravel()
        h = hidx.ravel()
        k = np.arange(n_h)
        for sgn in (1.0, -1.0):
            rows += [r + k, r + k, r + k]
            cols += [nxt, cur, h]
            vals += [np.full(n_h, sgn), np.full(n_h, -sgn), np.full(n_h, -1.0)]
            r += n_h
        if norm == "colsum":
            # sum_i h[t, i, j] - e_t <= 0
            kk = np.arange((T - 1) * m).reshape(T - 1, m)
            rows += [np.repeat(r + kk.ravel(), m), r + kk.ravel()]
            cols += [hidx.transpose(0, 2, 1).reshape(-1), n_w + n_h + np.repeat(np.arange(T - 1), m)]
            vals += [np.ones(n_h), np.full((T - 1) * m, -1.0)]
            r += (T - 1) * m
    if rows:
        A_ub = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(r, n)
        )
    else:
        A_ub = sp.csr_matrix((0, n))
    b_ub = np.zeros(r)

    bounds = np.zeros((n, 2))
    bounds[:, 1] = np.inf
    bounds[:n_w, 1] = 1.0
    if mask is not None:
        bounds[:n_w, 1] = np.where(np.asarray(mask, dtype=bool).ravel(), 1.0, 0.0)
    return LPInstance(c, A_ub, b_ub, A_eq, b_eq, bounds, T, m, n_w, n_h, n_e)


def lp_solve(lp: LPInstance) -> tuple[np.ndarray, float]:
    """Solve with the HiGHS simplex; return ``(W, objective)``."""
    if lp.n_vars == 0:
        return np.zeros((lp.T, lp.m, lp.m)), 0.0
    res = linprog(
        lp.c,
        A_ub=lp.A_ub if lp.A_ub.shape[0] else None,
        b_ub=lp.b_ub if lp.A_ub.shape[0] else None,
        A_eq=lp.A_eq,
        b_eq=lp.b_eq,
        bounds=lp.bounds,
        method="highs-ds",
    )
    if res.status == 2:
        raise InfeasiblePatternError("the sparsity pattern admits no doubly stochastic matrix")
    if res.status != 0:
        raise NotConvergedError(f"LP solver stopped: {res.message}")
    W = np.clip(lp.weights(res.x), 0.0, 1.0)
    return W, float(res.fun)
