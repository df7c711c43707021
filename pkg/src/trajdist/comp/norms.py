"""Matrix norms for the switch term and their proximal operators.

``colsum`` is the operator norm induced by the vector 1-norm: the largest
absolute column sum. ``entrywise`` is the sum of absolute entries. All
functions act on the last two axes and broadcast over leading ones.
"""

from __future__ import annotations

import numpy as np

from trajdist.errors import InvalidInputError

NORMS = ("colsum", "entrywise")


def check_norm(norm: str) -> str:
    if norm not in NORMS:
        raise InvalidInputError(f"unknown norm {norm!r}; choose from {', '.join(NORMS)}")
    return norm


def matrix_norm(X: np.ndarray, norm: str = "colsum") -> np.ndarray:
    a = np.abs(X)
    if norm == "colsum":
        return a.sum(axis=-2).max(axis=-1)
    if norm == "entrywise":
        return a.sum(axis=(-2, -1))
    raise InvalidInputError(f"unknown norm {norm!r}")


def dual_norm(Y: np.ndarray, norm: str = "colsum") -> np.ndarray:
    """Dual of :func:`matrix_norm` under the trace inner product."""
    a = np.abs(Y)
    if norm == "colsum":
        return a.max(axis=-2).sum(axis=-1)
    if norm == "entrywise":
        return a.max(axis=(-2, -1))
    raise InvalidInputError(f"unknown norm {norm!r}")


def shrink_to_dual_ball(Y: np.ndarray, radius: np.ndarray, norm: str) -> np.ndarray:
    """Scale (colsum) or clip (entrywise) ``Y`` into the dual ball of ``radius``."""
    radius = np.asarray(radius, dtype=float)[..., None, None]
    if norm == "entrywise":
        return np.clip(Y, -radius, radius)
    dn = dual_norm(Y, norm)[..., None, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(dn > radius, radius / dn, 1.0)
    return Y * f


def _colsum_prox(V: np.ndarray, lam: np.ndarray, tau0: np.ndarray | None = None, max_newton: int = 60):
    """Prox of ``lam * max_j ||V[:, j]||_1`` for a stack ``V`` of shape (N, m, m).

    Every column is shrunk towards zero by soft-thresholding at its own level
    ``mu_j``. The levels are those of projecting column ``j`` onto an l1 ball
    of a common radius ``tau``, which is fixed by ``sum_j mu_j = lam``. The
    map ``tau -> sum_j mu_j(tau)`` is convex, decreasing and piecewise linear,
    so Newton's method lands left of the root after one step from any start
    and then increases to it in finitely many steps.

    Returns the prox and the radii ``tau`` (zero where the prox vanishes),
    which make good starting points for a nearby problem.
    """
    out = np.zeros_like(V)
    tau_out = np.zeros(V.shape[0])
    a = np.abs(V)
    active = a.max(axis=-2).sum(axis=-1) > lam
    if not active.any():
        return out, tau_out
    idx = np.flatnonzero(active)
    aa, la = a[idx], lam[idx]
    m = V.shape[-1]
    S = np.cumsum(-np.sort(-aa, axis=-2), axis=-2)  # (n, k, j)
    inv_k = 1.0 / np.arange(1, m + 1, dtype=float)[None, :, None]
    tau = np.zeros(len(idx)) if tau0 is None else np.array(tau0[idx], dtype=float)
    # a start beyond every column norm has zero slope; restart those at 0
    tau[tau >= S[:, -1, :].max(axis=-1)] = 0.0
    todo = np.arange(len(idx))
    for _ in range(max_newton):
        if todo.size == 0:
            break
        St = S if todo.size == len(idx) else S[todo]
        vals = (St - tau[todo, None, None]) * inv_k
        kstar = np.argmax(vals, axis=-2)
        mu = np.take_along_axis(vals, kstar[:, None, :], axis=-2)[:, 0, :]
        pos = mu > 0
        phi = np.where(pos, mu, 0.0).sum(axis=-1) - la[todo]
        slope = -np.where(pos, 1.0 / (kstar + 1.0), 0.0).sum(axis=-1)
        done = np.abs(phi) <= 1e-13 * la[todo]
        stuck = slope == 0
        new = np.where(stuck, 0.0, tau[todo] - phi / np.where(stuck, -1.0, slope))
        new = np.maximum(new, 0.0)
        done |= new == tau[todo]
        tau[todo] = np.where(done, tau[todo], new)
        todo = todo[~done]
    mu = np.maximum(((S - tau[:, None, None]) * inv_k).max(axis=-2), 0.0)
    out[idx] = np.sign(V[idx]) * np.maximum(aa - mu[:, None, :], 0.0)
    tau_out[idx] = tau
    return out, tau_out


def prox_norm(V: np.ndarray, lam, norm: str, tau0: np.ndarray | None = None, return_tau: bool = False):
    """Proximal operator of ``lam * ||.||`` applied to every matrix in ``V``.

    ``lam`` broadcasts against the leading axes of ``V``. For the column-sum
    norm, ``tau0`` warm-starts the inner root search and ``return_tau``
    also returns its solution.
    """
    lead = V.shape[:-2]
    lam = np.broadcast_to(np.asarray(lam, dtype=float), lead)
    if norm == "entrywise":
        l4 = lam[..., None, None]
        out = np.sign(V) * np.maximum(np.abs(V) - l4, 0.0)
        return (out, None) if return_tau else out
    if norm == "colsum":
        m1, m2 = V.shape[-2:]
        flat = V.reshape(-1, m1, m2)
        t0 = None if tau0 is None else np.asarray(tau0, dtype=float).reshape(-1)
        out, tau = _colsum_prox(flat, lam.reshape(-1), t0)
        out = out.reshape(V.shape)
        return (out, tau.reshape(lead)) if return_tau else out
    raise InvalidInputError(f"unknown norm {norm!r}")
