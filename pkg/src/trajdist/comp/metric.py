"""The relaxed distance over sequences of doubly stochastic matrices."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from trajdist.assignment import lex_min_assignment
from trajdist.comp.admm import admm_solve, objective_terms
from trajdist.comp.lp import lp_build, lp_solve
from trajdist.comp.norms import check_norm
from trajdist.core import ExtendedMetricParams, TrajectorySet, distance_matrices, extend_pair
from trajdist.errors import InfeasiblePatternError, InvalidInputError
from trajdist.exact import MetricResult

__all__ = ["BACKENDS", "CompParams", "SolveOutcome", "d_comp", "d_comp_from_matrices", "solve_alphas", "sparsity_mask"]

BACKENDS = ("auto", "admm", "lp")

# instances with at most this many frame-matrix entries go to the simplex solver
LP_AUTO_LIMIT = 2500
# entries of the batched iterate arrays allowed per ADMM call
_ADMM_BATCH_ENTRIES = 4_000_000


@dataclass(frozen=True)
class CompParams:
    """Settings of the relaxed distance.

    Parameters
    ----------
    alpha : float
        Switch weight, nonnegative.
    norm : {"colsum", "entrywise"}
        Matrix norm of the switch term. ``colsum`` is the largest absolute
        column sum; ``entrywise`` sums all absolute entries.
    tol : float
        Relative optimality tolerance of the iterative solver.
    max_iter : int
    sparsify_threshold : float, optional
        Entries whose distance exceeds this are fixed to zero.
    repair : bool
        Re-enable a cheapest perfect matching in frames where the
        sparsity pattern admits no doubly stochastic matrix. If false such
        patterns raise :class:`InfeasiblePatternError`.
    backend : {"auto", "admm", "lp"}
        ``auto`` uses the exact simplex solver on small instances and ADMM
        otherwise.
    rho : float, optional
        Initial ADMM penalty.
    eps_feas : float
        Feasibility tolerance for returned weights.
    time_limit : float, optional
        Wall-clock budget per ADMM call, in seconds.
    stall_iter : int, optional
        ADMM iteration after which solves with a relative gap above
        ``stall_gap`` stop early, unconverged.
    stall_gap : float
    trace : bool
        Record ``(iter, objective, primal_residual, dual_residual)`` of the
        first ADMM instance in ``info["trace"]``.
    """

    alpha: float = 1.0
    norm: str = "colsum"
    tol: float = 0.01
    max_iter: int = 1000
    sparsify_threshold: float | None = None
    repair: bool = True
    backend: str = "auto"
    rho: float | None = None
    eps_feas: float = 1e-6
    time_limit: float | None = None
    stall_iter: int | None = None
    stall_gap: float = 0.01
    trace: bool = False

    def __post_init__(self):
        if not float(self.alpha) >= 0:
            raise InvalidInputError(f"alpha must be nonnegative, got {self.alpha!r}")
        check_norm(self.norm)
        if not self.tol > 0:
            raise InvalidInputError("tol must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InvalidInputError("max_iter must be a positive integer")
        if self.backend not in BACKENDS:
            raise InvalidInputError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.sparsify_threshold is not None and not self.sparsify_threshold >= 0:
            raise InvalidInputError("sparsify_threshold must be nonnegative")
        if not self.eps_feas > 0:
            raise InvalidInputError("eps_feas must be positive")
        if self.stall_iter is not None and (int(self.stall_iter) != self.stall_iter or self.stall_iter < 1):
            raise InvalidInputError("stall_iter must be a positive integer")
        if not self.stall_gap > 0:
            raise InvalidInputError("stall_gap must be positive")

    def replace(self, **changes) -> "CompParams":
        return dataclasses.replace(self, **changes)


@dataclass
class SolveOutcome:
    """Solution of one relaxed problem (``swi`` unweighted)."""

    alpha: float
    weights: np.ndarray
    dist: float
    swi: float
    objective: float
    lower_bound: float
    converged: bool
    iterations: int
    backend: str
    trace: list = dataclasses.field(default_factory=list)


def sparsity_mask(D: np.ndarray, threshold: float | None, repair: bool = True) -> np.ndarray | None:
    """Allowed entries ``D <= threshold``, made feasible frame by frame.

    A doubly stochastic matrix with a given support exists exactly when the
    support contains a perfect matching. Frames without one either get the
    entries of a minimum-cost matching added back or raise.
    """
    if threshold is None:
        return None
    mask = D <= threshold
    m = D.shape[-1]
    if m == 0:
        return mask
    for t in range(D.shape[0]):
        r, c = linear_sum_assignment(~mask[t])
        if mask[t][r, c].all():
            continue
        if not repair:
            raise InfeasiblePatternError(f"frame {t + 1}: no doubly stochastic matrix fits the sparsity pattern")
        r, c = linear_sum_assignment(D[t])
        mask[t][r, c] = True
    return mask


def _exact_single_frame(D: np.ndarray, mask) -> np.ndarray:
    C = D[0] if mask is None else np.where(mask[0], D[0], np.inf)
    if mask is None:
        perm, _ = lex_min_assignment(C)
    else:
        _, perm = linear_sum_assignment(C)
    m = D.shape[-1]
    W = np.zeros((1, m, m))
    W[0, np.arange(m), perm] = 1.0
    return W


def _exact_per_frame(D: np.ndarray, mask, norm: str) -> SolveOutcome:
    # without a switch term the problem splits into independent assignments
    T, m = D.shape[0], D.shape[-1]
    W = np.zeros((T, m, m))
    for t in range(T):
        W[t] = _exact_single_frame(D[t : t + 1], None if mask is None else mask[t : t + 1])[0]
    d, s = objective_terms(W, D, norm)
    return SolveOutcome(0.0, W, float(d), float(s), float(d), float(d), True, 0, "exact")


def _pick_backend(D: np.ndarray, backend: str) -> str:
    if backend != "auto":
        return backend
    return "lp" if D.size <= LP_AUTO_LIMIT else "admm"


def solve_alphas(D: np.ndarray, alphas, cp: CompParams, mask: np.ndarray | None = None) -> list[SolveOutcome]:
    """Solve the relaxed problem on distance matrices ``D`` for several weights.

    ADMM instances are batched across ``alphas`` so they share every array
    operation.
    """
    D = np.asarray(D, dtype=float)
    alphas = [float(a) for a in np.atleast_1d(alphas)]
    T, m = D.shape[0], D.shape[-1]
    norm = cp.norm
    if T == 0 or m == 0:
        return [SolveOutcome(a, np.zeros((T, m, m)), 0.0, 0.0, 0.0, 0.0, True, 0, "exact") for a in alphas]
    if T == 1:
        W = _exact_single_frame(D, mask)
        d = float((W * D).sum())
        return [SolveOutcome(a, W.copy(), d, 0.0, d, d, True, 0, "exact") for a in alphas]

    if 0.0 in alphas:
        zero = _exact_per_frame(D, mask, norm)
        rest = solve_alphas(D, [a for a in alphas if a != 0.0], cp, mask) if any(alphas) else []
        it = iter(rest)
        return [zero if a == 0.0 else next(it) for a in alphas]

    backend = _pick_backend(D, cp.backend)
    out: list[SolveOutcome] = []
    if backend == "lp":
        for a in alphas:
            W, _ = lp_solve(lp_build(D, a, norm, mask))
            d, s = objective_terms(W, D, norm)
            obj = float(d + a * s)
            out.append(SolveOutcome(a, W, float(d), float(s), obj, obj, True, 0, "lp"))
        return out

    per = max(1, _ADMM_BATCH_ENTRIES // D.size)
    for lo in range(0, len(alphas), per):
        chunk = np.array(alphas[lo : lo + per])
        k = len(chunk)
        res = admm_solve(
            np.broadcast_to(D, (k,) + D.shape),
            chunk,
            norm=norm,
            tol=cp.tol,
            max_iter=cp.max_iter,
            mask=None if mask is None else np.broadcast_to(mask, (k,) + D.shape),
            rho=cp.rho,
            time_limit=cp.time_limit,
            stall_iter=cp.stall_iter,
            stall_gap=cp.stall_gap,
            trace=cp.trace and lo == 0,
        )
        for i, a in enumerate(chunk):
            out.append(
                SolveOutcome(
                    float(a),
                    res.weights[i],
                    float(res.dist[i]),
                    float(res.swi[i]),
                    float(res.objective[i]),
                    float(res.lower_bound[i]),
                    bool(res.converged[i]),
                    int(res.iterations[i]),
                    "admm",
                    res.trace if (lo == 0 and i == 0) else [],
                )
            )
    return out


def _result(sol: SolveOutcome, cp: CompParams, mask) -> MetricResult:
    W = sol.weights
    feas = 0.0
    if W.size:
        feas = max(
            float(np.abs(W.sum(axis=-1) - 1.0).max()),
            float(np.abs(W.sum(axis=-2) - 1.0).max()),
            float(max(0.0, -W.min())),
        )
    info = {
        "backend": sol.backend,
        "swi": sol.swi,
        "lower_bound": sol.lower_bound,
        "iterations": sol.iterations,
        "feasibility": feas,
        "norm": cp.norm,
        "n_free": int(W.size if mask is None else mask.sum()),
    }
    if cp.trace:
        info["trace"] = sol.trace
    return MetricResult(
        value=sol.dist + sol.alpha * sol.swi,
        dist_term=sol.dist,
        swi_term=sol.alpha * sol.swi,
        weights=W,
        converged=sol.converged and feas <= max(cp.eps_feas, 1e-9),
        info=info,
    )


def d_comp_from_matrices(D: np.ndarray, cp: CompParams) -> MetricResult:
    D = np.asarray(D, dtype=float)
    mask = sparsity_mask(D, cp.sparsify_threshold, cp.repair)
    sol = solve_alphas(D, [cp.alpha], cp, mask)[0]
    return _result(sol, cp, mask)


def d_comp(A: TrajectorySet, B: TrajectorySet, params: ExtendedMetricParams, cp: CompParams | None = None) -> MetricResult:
    """Relaxed association distance between two trajectory sets.

    Minimizes ``sum_t <D_t, W_t> + alpha * sum_t ||W_{t+1} - W_t||`` over
    sequences of doubly stochastic matrices. ``dist_term`` is the first sum
    and ``swi_term`` the weighted second one at the returned weights.
    ``converged`` is false when the solver stopped at its iteration cap
    before certifying ``tol``; the best iterate is returned anyway.
    """
    cp = CompParams() if cp is None else cp
    return d_comp_from_matrices(distance_matrices(extend_pair(A, B), params), cp)
