"""Consensus ADMM for sequences of doubly stochastic matrices.

Problem, for every instance in a batch::

    minimize   sum_t <D_t, W_t> + alpha * sum_t ||W_{t+1} - W_t||
    subject to W_t doubly stochastic (optionally zero outside a mask).

Each frame matrix ``Z_t`` is shared by up to four local copies: one
constrained to have nonnegative rows summing to one, one with such
columns, and the two ends of the adjacent temporal edges. Row and column
copies are simplex projections; an edge pair ``(L, R)`` is updated by the
prox of ``alpha * ||R - L||``, which only moves their difference. The
linear cost enters the consensus update in closed form.

Convergence is certified rather than guessed. An upper bound comes from
rounding ``Z`` to an exactly doubly stochastic sequence; a lower bound
comes from Lagrangian duality with the edge multipliers taken from the
scaled duals and shrunk into the dual-norm ball, which leaves one
assignment problem per frame. The solver stops once the gap is within
``tol`` relative to the upper bound.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from trajdist.assignment import batched_assignment
from trajdist.comp._kernels import HAVE_NUMBA, admm_sweep
from trajdist.comp.norms import check_norm, dual_norm, matrix_norm, prox_norm, shrink_to_dual_ball

__all__ = ["AdmmResult", "admm_solve", "objective_terms", "project_rows", "round_doubly_stochastic"]

_BIG = 1e30


@dataclass
class AdmmResult:
    """Output of :func:`admm_solve` with batch shape ``S``.

    Attributes
    ----------
    weights : ndarray, shape S + (T, m, m)
        Best feasible sequence found.
    objective, dist, swi : ndarray, shape S
        Objective at ``weights`` and its two parts (``swi`` unweighted).
    lower_bound : ndarray, shape S
    converged : ndarray of bool, shape S
    iterations : ndarray of int, shape S
        Iteration at which each instance was certified (or the cap).
    trace : list of tuple
        ``(iter, objective, primal_residual, dual_residual)`` for the first
        instance, if requested.
    """

    weights: np.ndarray
    objective: np.ndarray
    dist: np.ndarray
    swi: np.ndarray
    lower_bound: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    seconds: float = 0.0
    trace: list = field(default_factory=list)

    @property
    def gap(self) -> np.ndarray:
        return self.objective - self.lower_bound


def project_rows(V: np.ndarray, axis: int = -1) -> np.ndarray:
    """Euclidean projection of every row (along ``axis``) onto the probability simplex."""
    if axis != -1:
        V = np.moveaxis(V, axis, -1)
    n = V.shape[-1]
    U = -np.sort(-V, axis=-1)
    css = np.cumsum(U, axis=-1)
    css -= 1.0
    k = np.arange(1, n + 1, dtype=float)
    cond = U * k > css
    r = cond.sum(axis=-1, keepdims=True)
    theta = np.take_along_axis(css, r - 1, axis=-1) / r
    out = np.maximum(V - theta, 0.0)
    if axis != -1:
        out = np.moveaxis(out, -1, axis)
    return out


def objective_terms(W: np.ndarray, D: np.ndarray, norm: str) -> tuple[np.ndarray, np.ndarray]:
    """``(sum_t <D_t, W_t>, sum_t ||W_{t+1} - W_t||)`` over leading axes."""
    dist = np.einsum("...tij,...tij->...", D, W)
    if W.shape[-3] > 1:
        swi = matrix_norm(np.diff(W, axis=-3), norm).sum(axis=-1)
    else:
        swi = np.zeros(W.shape[:-3])
    return dist, swi


def round_doubly_stochastic(Z: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Round nonnegative-ish matrices to exactly doubly stochastic ones.

    Clip, scale rows then columns so no sum exceeds one, and spread the
    remaining deficit with a rank-one correction. The result differs from
    the input by at most a constant times its feasibility violation.
    """
    X = np.maximum(Z, 0.0)
    if mask is not None:
        X = X * mask
    r = X.sum(axis=-1)
    X = X * np.minimum(1.0, 1.0 / np.maximum(r, 1e-300))[..., :, None]
    c = X.sum(axis=-2)
    X = X * np.minimum(1.0, 1.0 / np.maximum(c, 1e-300))[..., None, :]
    er = 1.0 - X.sum(axis=-1)
    ec = 1.0 - X.sum(axis=-2)
    tot = er.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.where(tot[..., None, None] > 0, er[..., :, None] * ec[..., None, :] / tot[..., None, None], 0.0)
    return X + corr


def _permutation_rounding(Z: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    """Per-frame permutation matrix of largest overlap with ``Z``."""
    m = Z.shape[-1]
    flat = Z.reshape(-1, m, m)
    C = -flat
    if mask is not None:
        C = np.where(mask.reshape(-1, m, m), C, np.inf)
    perms, _ = batched_assignment(C)
    P = np.zeros_like(flat)
    n = np.arange(flat.shape[0])[:, None]
    P[n, np.arange(m)[None, :], perms] = 1.0
    return P.reshape(Z.shape)


def _lower_bound(D, Y, mask):
    """``sum_t min_{P} <D_t + Y_{t-1} - Y_t, P>`` for each instance."""
    C = D.copy()
    if Y is not None:
        C[:, 1:] += Y
        C[:, :-1] -= Y
    if mask is not None:
        C = np.where(mask, C, np.inf)
    B, T, m, _ = C.shape
    _, vals = batched_assignment(C.reshape(B * T, m, m))
    return vals.reshape(B, T).sum(axis=1)


def _center_dual(Y, norm, rounds=2):
    """Shift every edge multiplier by row and column constants to shrink its dual norm.

    Adding ``u 1' + 1 v'`` to ``Y_t`` moves each frame's assignment value by
    the sums of consecutive shifts, which telescope to zero over the
    sequence, so the bound stays valid. Column midranges minimize every
    column's largest magnitude; row steps are kept only where they help.
    """
    Y = Y - 0.5 * (Y.max(axis=-2, keepdims=True) + Y.min(axis=-2, keepdims=True))
    for _ in range(rounds):
        R = Y - 0.5 * (Y.max(axis=-1, keepdims=True) + Y.min(axis=-1, keepdims=True))
        R = R - 0.5 * (R.max(axis=-2, keepdims=True) + R.min(axis=-2, keepdims=True))
        better = dual_norm(R, norm) < dual_norm(Y, norm)
        Y = np.where(better[..., None, None], R, Y)
    return Y


def _step_numpy(state, has_edges, norm, relax, masked, n_t, need_res):
    """One ADMM iteration on whole arrays; returns squared residuals (or None)."""
    Dz, Z, rho_v, al = state["D"], state["Z"], state["rho"], state["alpha"]
    Ur, Uc = state["Ur"], state["Uc"]
    r4 = rho_v[:, None, None, None]

    # local copies
    V = Z - Ur
    if masked:
        V[state["neg"]] = -_BIG
    Xr = project_rows(V, axis=-1)
    np.subtract(Z, Uc, out=V)
    if masked:
        V[state["neg"]] = -_BIG
    Xc = project_rows(V, axis=-2)
    if relax != 1.0:
        # over-relaxation: mix the new copies with the previous consensus
        for X in (Xr, Xc):
            X *= relax
            X += (1.0 - relax) * Z
    acc = np.add(Xr, Ur, out=V)
    acc += Xc
    acc += Uc
    if has_edges:
        UL, UR = state["UL"], state["UR"]
        L = Z[:, :-1] - UL
        R = Z[:, 1:] - UR
        e = R - L
        lam = np.broadcast_to((2.0 * al / rho_v)[:, None], L.shape[:2])
        d, tau = prox_norm(e, lam, norm, tau0=state.get("tau"), return_tau=True)
        if tau is not None:
            state["tau"] = tau
        # only the difference moves: L, R -> midpoint -/+ d / 2
        e -= d
        e *= 0.5
        L += e
        R -= e
        if relax != 1.0:
            L *= relax
            L += (1.0 - relax) * Z[:, :-1]
            R *= relax
            R += (1.0 - relax) * Z[:, 1:]
        acc[:, :-1] += L
        acc[:, :-1] += UL
        acc[:, 1:] += R
        acc[:, 1:] += UR

    # consensus
    Z_prev = Z
    acc -= Dz * (1.0 / r4)
    acc /= n_t
    Z = acc
    state["Z"] = Z

    # duals; the increments are the primal residuals
    Xr -= Z
    Xc -= Z
    Ur += Xr
    Uc += Xc
    if has_edges:
        L -= Z[:, :-1]
        R -= Z[:, 1:]
        UL += L
        UR += R
    if not need_res:
        return None, None
    pr2 = _sq(Xr) + _sq(Xc)
    if has_edges:
        pr2 += _sq(L) + _sq(R)
    dz = Z - Z_prev
    du2 = (rho_v**2) * np.einsum("btij,btij,t->b", dz, dz, n_t[0, :, 0, 0])
    return pr2, du2


def _step_kernel(state, has_edges, norm, relax, masked):
    """The same iteration through the compiled sweep."""
    Z = state["Z"]
    Bn, T, m, _ = Z.shape
    Znew = np.empty_like(Z)
    if has_edges:
        UL, UR, tau = state["UL"], state["UR"], state["tau"]
    else:
        UL = UR = np.zeros((Bn, 0, m, m))
        tau = np.zeros((Bn, 0))
    mask = state["mask"] if masked else np.ones((1, 1, 1, 1), dtype=bool)
    pr2 = np.empty(Bn)
    du2 = np.empty(Bn)
    admm_sweep(
        Z, Znew, state["Ur"], state["Uc"], UL, UR, tau, state["D"], state["rho"], state["alpha"],
        float(relax), norm == "colsum", mask, masked, pr2, du2,
    )
    state["Z"] = Znew
    return pr2, du2


def _sq(X):
    return np.einsum("btij,btij->b", X, X)


def _constant_bounds(D, alpha, norm, mask, best_W, best_obj, best_dist, best_swi, best_lb):
    """Bounds that do not depend on the iterates, written into the ``best_*`` arrays.

    The best constant permutation is feasible. Edge multipliers equal to the
    running sums of ``D_t - mean_t D_t`` turn every frame cost into the mean
    frame, so their bound matches the constant solution whenever they fit
    into the dual-norm ball; otherwise they are shrunk into it and still
    give a valid bound.
    """
    Bn, T, m, _ = D.shape
    G = D.mean(axis=1)
    total = D.sum(axis=1)
    if mask is not None:
        total = np.where(mask.all(axis=1), total, np.inf)
    perms, vals = batched_assignment(total)
    ok = np.isfinite(vals)
    if ok.any():
        W = np.zeros((Bn, m, m))
        W[np.arange(Bn)[:, None], np.arange(m)[None, :], perms] = 1.0
        sel = np.flatnonzero(ok & (vals < best_obj))
        best_W[sel] = W[sel, None]
        best_obj[sel] = vals[sel]
        best_dist[sel] = vals[sel]
        best_swi[sel] = 0.0
    Y = _center_dual(np.cumsum(D[:, :-1] - G[:, None], axis=1), norm)
    Y = shrink_to_dual_ball(Y, np.broadcast_to(alpha[:, None], Y.shape[:2]), norm)
    best_lb[:] = np.maximum(best_lb, _lower_bound(D, Y, mask))


def admm_solve(
    D: np.ndarray,
    alpha,
    norm: str = "colsum",
    tol: float = 0.01,
    max_iter: int = 1000,
    mask: np.ndarray | None = None,
    rho=None,
    W0: np.ndarray | None = None,
    check_every: int = 10,
    atol: float | None = None,
    trace: bool = False,
    adapt_every: int = 10,
    relax: float = 1.6,
    balance: float = 10.0,
    engine: str = "auto",
    time_limit: float | None = None,
    stall_iter: int | None = None,
    stall_gap: float = 0.01,
) -> AdmmResult:
    """Solve a batch of relaxed association problems.

    Parameters
    ----------
    D : ndarray, shape S + (T, m, m)
        Distance matrices; ``S`` is any batch shape.
    alpha : float or array broadcastable to ``S``
        Switch weights (nonnegative).
    norm : {"colsum", "entrywise"}
    tol : float
        Relative duality gap at which an instance is declared solved.
    max_iter : int
    mask : ndarray of bool, same shape as ``D``, optional
        Allowed entries; ``W`` is zero elsewhere.
    rho : float or array, optional
        Initial penalty. Adapted by residual balancing.
    W0 : ndarray, optional
        Starting point (default: uniform matrices).
    check_every : int
        Iterations between bound evaluations.
    atol : float, optional
        Absolute gap accepted for near-zero optima.
    trace : bool
        Record residuals of the first instance every iteration.
    time_limit : float, optional
        Wall-clock budget in seconds.
    relax : float
        Over-relaxation factor in ``(0, 2)``; values above one usually
        speed up convergence.
    balance : float
        Residual ratio beyond which the penalty is doubled or halved.
    engine : {"auto", "numba", "numpy"}
        Compiled sweep or vectorized NumPy iteration; both compute the same
        update.
    stall_iter : int, optional
        From this iteration on, instances whose relative gap still exceeds
        ``stall_gap`` are stopped unconverged. This keeps the iteration
        budget for instances that are close to certification.
    stall_gap : float
    """
    check_norm(norm)
    if not 0.0 < relax < 2.0:
        raise ValueError("relax must lie in (0, 2)")
    t_start = time.perf_counter()
    D = np.asarray(D, dtype=float)
    batch_shape = D.shape[:-3]
    T, m = D.shape[-3], D.shape[-1]
    Bn = int(np.prod(batch_shape, dtype=int))
    D = D.reshape(Bn, T, m, m)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), batch_shape).reshape(Bn).copy()
    if mask is not None:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), batch_shape + (T, m, m)).reshape(Bn, T, m, m)

    scale = np.maximum(D.reshape(Bn, -1).max(axis=1, initial=0.0), 1e-300)
    if atol is None:
        atol = 1e-9 * np.maximum(1.0, D.reshape(Bn, T, -1).max(axis=2, initial=0.0).sum(axis=1))
    atol = np.broadcast_to(np.asarray(atol, dtype=float), (Bn,)).copy()

    # outputs
    best_W = np.empty((Bn, T, m, m))
    best_obj = np.full(Bn, np.inf)
    best_dist = np.zeros(Bn)
    best_swi = np.zeros(Bn)
    best_lb = np.full(Bn, -np.inf)
    converged = np.zeros(Bn, dtype=bool)
    iters = np.full(Bn, max_iter, dtype=int)
    rows = []

    if m == 0 or T == 0:
        best_W[:] = 0.0
        zero = np.zeros(Bn)
        return AdmmResult(
            best_W.reshape(batch_shape + (T, m, m)), zero.reshape(batch_shape), zero.reshape(batch_shape),
            zero.reshape(batch_shape), zero.reshape(batch_shape), np.ones(batch_shape, dtype=bool),
            np.zeros(batch_shape, dtype=int), 0.0, [],
        )

    # per-frame copy counts: row, column, plus one per adjacent edge
    n_t = np.full(T, 2.0)
    n_t[1:] += 1
    n_t[:-1] += 1
    n_t = n_t[None, :, None, None]

    if rho is None:
        # balance the cost scale against feasible iterates of size ~1/m
        r0 = (D.reshape(Bn, -1).mean(axis=1) + alpha / max(m, 1)) * max(m, 1) / 4.0
        rho_v = np.maximum(r0, 1e-6 * scale)
    else:
        rho_v = np.broadcast_to(np.asarray(rho, dtype=float), (Bn,)).copy()

    if W0 is not None:
        Z = np.array(np.broadcast_to(W0, batch_shape + (T, m, m)), dtype=float).reshape(Bn, T, m, m)
    else:
        Z = np.full((Bn, T, m, m), 1.0 / m)
    if mask is not None:
        Z = round_doubly_stochastic(Z, mask)
    Ur = np.zeros_like(Z)
    Uc = np.zeros_like(Z)
    has_edges = T > 1
    if has_edges:
        UL = np.zeros((Bn, T - 1, m, m))
        UR = np.zeros_like(UL)
    neg = None if mask is None else ~mask

    act = np.arange(Bn)  # instances still iterating
    state = {"D": D, "Z": Z, "Ur": Ur, "Uc": Uc, "alpha": alpha, "rho": rho_v}
    if has_edges:
        state.update(UL=UL, UR=UR, tau=np.zeros((Bn, T - 1)))
    if mask is not None:
        state.update(mask=mask, neg=neg)
    if has_edges:
        _constant_bounds(D, alpha, norm, mask, best_W, best_obj, best_dist, best_swi, best_lb)

    def evaluate(it):
        """Update bounds for active instances; return mask of newly converged."""
        Dz, Zz = state["D"], state["Z"]
        msk = state.get("mask")
        cands = [round_doubly_stochastic(Zz, msk), _permutation_rounding(Zz, msk)]
        for W in cands:
            d, s = objective_terms(W, Dz, norm)
            obj = d + state["alpha"] * s
            better = obj < best_obj[act]
            if better.any():
                sel = act[better]
                best_W[sel] = W[better]
                best_obj[sel] = obj[better]
                best_dist[sel] = d[better]
                best_swi[sel] = s[better]
        lb = _lower_bound(Dz, None, msk)
        if has_edges:
            Y = _center_dual(0.5 * state["rho"][:, None, None, None] * (state["UL"] - state["UR"]), norm)
            Y = shrink_to_dual_ball(Y, np.broadcast_to(state["alpha"][:, None], Y.shape[:2]), norm)
            lb = np.maximum(lb, _lower_bound(Dz, Y, msk))
        best_lb[act] = np.maximum(best_lb[act], lb)
        gap = best_obj[act] - best_lb[act]
        ok = gap <= tol * np.abs(best_obj[act]) + atol[act]
        iters[act[ok]] = it
        converged[act[ok]] = True
        if stall_iter is not None and it >= stall_iter:
            hopeless = gap > stall_gap * np.abs(best_obj[act]) + atol[act]
            iters[act[hopeless]] = it
            return ok | hopeless
        return ok

    if engine == "auto":
        engine = "numba" if HAVE_NUMBA else "numpy"
    if engine not in ("numba", "numpy"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "numba" and not HAVE_NUMBA:
        raise ValueError("numba is not installed")
    use_kernel = engine == "numba"

    it = 0
    while True:
        if act.size == 0:
            break
        if it % check_every == 0 or it == max_iter:
            done = evaluate(it)
            if done.any():
                keep = ~done
                act = act[keep]
                for key in state:
                    state[key] = state[key][keep]
                if act.size == 0:
                    break
            if it >= max_iter:
                break
            if time_limit is not None and time.perf_counter() - t_start > time_limit:
                break
        it += 1
        need_res = trace or it % adapt_every == 0
        if use_kernel:
            pr2, du2 = _step_kernel(state, has_edges, norm, relax, mask is not None)
        else:
            pr2, du2 = _step_numpy(state, has_edges, norm, relax, mask is not None, n_t, need_res)
        Dz, Z, rho_v, al = state["D"], state["Z"], state["rho"], state["alpha"]
        Ur, Uc = state["Ur"], state["Uc"]
        if has_edges:
            UL, UR = state["UL"], state["UR"]

        if need_res:
            pr, du = np.sqrt(pr2), np.sqrt(du2)
            if trace and act.size and act[0] == 0:
                dd, ss = objective_terms(Z[:1], Dz[:1], norm)
                rows.append((it, float(dd[0] + al[0] * ss[0]), float(pr[0]), float(du[0])))
            if it % adapt_every == 0:
                # residual balancing, duals rescaled to stay consistent
                up = pr > balance * du
                down = du > balance * pr
                f = np.where(up, 2.0, np.where(down, 0.5, 1.0))
                if np.any(f != 1.0):
                    state["rho"] = rho_v * f
                    g = (1.0 / f)[:, None, None, None]
                    Ur *= g
                    Uc *= g
                    if has_edges:
                        UL *= g
                        UR *= g

    res = AdmmResult(
        best_W.reshape(batch_shape + (T, m, m)),
        best_obj.reshape(batch_shape),
        best_dist.reshape(batch_shape),
        best_swi.reshape(batch_shape),
        best_lb.reshape(batch_shape),
        converged.reshape(batch_shape),
        iters.reshape(batch_shape),
        time.perf_counter() - t_start,
        rows,
    )
    return res
