"""Trade-off curves between matched distance and association changes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from trajdist.comp.metric import CompParams, solve_alphas, sparsity_mask
from trajdist.comp.norms import check_norm, matrix_norm
from trajdist.core import ExtendedMetricParams, TrajectorySet, distance_matrices, extend_pair
from trajdist.errors import InvalidInputError, NotConvergedError, TrajdistError
from trajdist.exact import clear_mot_from_matrices, sequence_distance

__all__ = [
    "TradeoffCurve",
    "auc",
    "auc_bounds",
    "default_alpha_grid",
    "default_thr_grid",
    "lower_hull",
    "motp_tradeoff",
    "motp_tradeoff_from_matrices",
    "tradeoff_curve",
    "tradeoff_from_matrices",
]


def lower_hull(dist, swi) -> np.ndarray:
    """Indices of the lower-left convex hull, ordered by increasing ``dist``.

    Dominated points are dropped first; the remaining staircase is reduced
    to its lower convex chain, so ``swi`` strictly decreases along the
    result and the slopes increase.
    """
    dist = np.asarray(dist, dtype=float)
    swi = np.asarray(swi, dtype=float)
    ok = np.isfinite(dist) & np.isfinite(swi)
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        return idx
    order = idx[np.lexsort((swi[idx], dist[idx]))]
    front = []
    best = np.inf
    for i in order:
        if swi[i] < best:
            front.append(i)
            best = swi[i]
    hull: list[int] = []
    for i in front:
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (dist[a] - dist[o]) * (swi[i] - swi[o]) - (swi[a] - swi[o]) * (dist[i] - dist[o])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull, dtype=int)


@dataclass
class TradeoffCurve:
    """Points ``(param, dist, swi)`` of a parameter sweep and their hull.

    ``param`` is the switch weight for the relaxed distance and the anchoring
    threshold for the CLEAR MOT curve. ``swi`` is never weighted.
    ``converged`` is false for parameter values whose solve failed or did
    not reach its tolerance; failed ones carry NaN and are left out of the
    hull.
    """

    param: np.ndarray
    dist: np.ndarray
    swi: np.ndarray
    converged: np.ndarray
    param_name: str = "alpha"
    norm: str = "colsum"

    def __post_init__(self):
        self.param = np.asarray(self.param, dtype=float)
        self.dist = np.asarray(self.dist, dtype=float)
        self.swi = np.asarray(self.swi, dtype=float)
        self.converged = np.asarray(self.converged, dtype=bool)
        self.hull = lower_hull(self.dist, self.swi)

    def __len__(self) -> int:
        return len(self.param)

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return [(float(a), float(d), float(s)) for a, d, s in zip(self.param, self.dist, self.swi)]

    @property
    def hull_points(self) -> np.ndarray:
        """Hull vertices as an array of ``(dist, swi)`` rows."""
        return np.column_stack([self.dist[self.hull], self.swi[self.hull]])

    @property
    def on_hull(self) -> np.ndarray:
        flag = np.zeros(len(self), dtype=bool)
        flag[self.hull] = True
        return flag

    @property
    def failed(self) -> np.ndarray:
        return self.param[~np.isfinite(self.dist)]

    def unique(self, rtol: float = 1e-9) -> "TradeoffCurve":
        """Keep the first parameter of every run of repeated ``(dist, swi)`` points."""
        keep = []
        for i in range(len(self)):
            if keep:
                j = keep[-1]
                scale = max(1.0, abs(self.dist[j]), abs(self.swi[j]))
                if abs(self.dist[i] - self.dist[j]) <= rtol * scale and abs(self.swi[i] - self.swi[j]) <= rtol * scale:
                    continue
            keep.append(i)
        k = np.array(keep, dtype=int)
        return TradeoffCurve(self.param[k], self.dist[k], self.swi[k], self.converged[k], self.param_name, self.norm)

    def is_convex(self, rtol: float = 1e-9) -> bool:
        """Whether the hull is non-increasing with non-decreasing slopes."""
        P = self.hull_points
        if len(P) < 2:
            return True
        dd, ds = np.diff(P[:, 0]), np.diff(P[:, 1])
        scale = max(1.0, float(np.abs(P).max()))
        if np.any(dd <= 0) or np.any(ds > rtol * scale):
            return False
        slopes = ds / dd
        return bool(np.all(np.diff(slopes) >= -rtol * max(1.0, float(np.abs(slopes).max()))))


def default_alpha_grid(D: np.ndarray, n: int = 20) -> np.ndarray:
    """Zero followed by ``n - 1`` log-spaced weights around the natural scale of ``D``.

    The scale is the summed mean frame distance divided by twice the number
    of edges; the grid spans three decades on either side. The zero weight
    is solved exactly and pins the low-distance end of the curve.
    """
    D = np.asarray(D, dtype=float)
    T = D.shape[0]
    rho = float(D.mean(axis=(1, 2)).sum()) / (2.0 * (T - 1)) if T > 1 and D.size else 0.0
    if not rho > 0:
        rho = 1.0
    if n < 1:
        raise InvalidInputError("grid size must be positive")
    return np.concatenate([[0.0], np.geomspace(1e-3 * rho, 1e3 * rho, n - 1)])


def default_thr_grid(D: np.ndarray, n: int = 30) -> np.ndarray:
    """Log-spaced anchoring thresholds from the smallest positive distance to beyond the largest."""
    D = np.asarray(D, dtype=float)
    pos = D[D > 0]
    if pos.size == 0:
        return np.array([1.0])
    return np.geomspace(pos.min() / 2.0, pos.max() * 1.01, n)


def _check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float).ravel()
    if g.size == 0:
        raise InvalidInputError("parameter grid must be nonempty")
    if np.any(~np.isfinite(g)) or np.any(g < 0):
        raise InvalidInputError("parameter grid must hold finite nonnegative values")
    if np.any(np.diff(g) < 0):
        raise InvalidInputError("parameter grid must be sorted ascending")
    return g


def tradeoff_from_matrices(D: np.ndarray, alpha_grid=None, cp: CompParams | None = None, refine: int = 0) -> TradeoffCurve:
    """Sweep the switch weight on distance matrices ``D``.

    ``refine`` rounds add, between consecutive hull vertices, the weight at
    which both have equal objective; a solve there either confirms the edge
    or uncovers a vertex the grid missed.
    """
    cp = CompParams() if cp is None else cp
    D = np.asarray(D, dtype=float)
    grid = default_alpha_grid(D) if alpha_grid is None else _check_grid(alpha_grid)
    mask = sparsity_mask(D, cp.sparsify_threshold, cp.repair)

    def run(alphas):
        try:
            sols = solve_alphas(D, alphas, cp, mask)
            return [(s.dist, s.swi, s.converged) for s in sols]
        except NotConvergedError:
            pass
        rows = []
        for a in alphas:
            try:
                s = solve_alphas(D, [a], cp, mask)[0]
                rows.append((s.dist, s.swi, s.converged))
            except TrajdistError:
                rows.append((np.nan, np.nan, False))
        return rows

    alphas = list(grid)
    rows = run(alphas)
    for _ in range(refine):
        curve = TradeoffCurve(alphas, [r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows], "alpha", cp.norm)
        h = curve.hull
        new = []
        for i, j in zip(h[:-1], h[1:]):
            a = (curve.dist[j] - curve.dist[i]) / (curve.swi[i] - curve.swi[j])
            if a > 0 and np.all(np.abs(np.asarray(alphas) - a) > 1e-9 * a):
                new.append(a)
        if not new:
            break
        alphas += new
        rows += run(new)
    order = np.argsort(alphas, kind="stable")
    a = np.asarray(alphas)[order]
    r = [rows[i] for i in order]
    return TradeoffCurve(a, [x[0] for x in r], [x[1] for x in r], [x[2] for x in r], "alpha", cp.norm)


def tradeoff_curve(
    A: TrajectorySet,
    B: TrajectorySet,
    params: ExtendedMetricParams,
    alpha_grid=None,
    cp: CompParams | None = None,
    refine: int = 0,
) -> TradeoffCurve:
    """``(dist, swi)`` of the relaxed optimum for every weight in ``alpha_grid``.

    ``cp.alpha`` is ignored; the other settings apply to every solve.
    """
    return tradeoff_from_matrices(distance_matrices(extend_pair(A, B), params), alpha_grid, cp, refine)


def _permutation_swi(sigma, m: int, norm: str) -> float:
    S = np.asarray(sigma, dtype=int)
    if len(S) < 2 or m == 0:
        return 0.0
    P = np.zeros((len(S), m, m))
    P[np.arange(len(S))[:, None], np.arange(m)[None, :], S] = 1.0
    return float(matrix_norm(np.diff(P, axis=0), norm).sum())


def motp_tradeoff_from_matrices(D: np.ndarray, thr_grid=None, norm: str = "colsum") -> TradeoffCurve:
    """``(dist, swi)`` of the CLEAR MOT association for every threshold.

    ``swi`` is measured on the permutation matrices of the association with
    the same matrix norm as the relaxed distance, so both curves share axes.
    """
    check_norm(norm)
    D = np.asarray(D, dtype=float)
    grid = default_thr_grid(D) if thr_grid is None else _check_grid(thr_grid)
    if np.any(grid <= 0):
        raise InvalidInputError("thresholds must be positive")
    m = D.shape[-1]
    dist, swi = [], []
    for thr in grid:
        assoc = clear_mot_from_matrices(D, thr)
        dist.append(sequence_distance(D, assoc.sigma) if D.shape[0] and m else 0.0)
        swi.append(_permutation_swi(assoc.sigma, m, norm))
    return TradeoffCurve(grid, dist, swi, np.ones(len(grid), dtype=bool), "thr", norm)


def motp_tradeoff(A: TrajectorySet, B: TrajectorySet, params: ExtendedMetricParams, thr_grid=None, norm: str = "colsum") -> TradeoffCurve:
    return motp_tradeoff_from_matrices(distance_matrices(extend_pair(A, B), params), thr_grid, norm)


def auc_bounds(A: TrajectorySet, B: TrajectorySet, params: ExtendedMetricParams, norm: str = "colsum") -> tuple[float, float]:
    """Largest possible ``dist`` and ``swi`` for the pair.

    Every point of either set contributes at most ``M`` to any association
    (a matched pair costs at most ``2M`` and covers two points). A change of
    doubly stochastic matrix costs at most 2 in the column-sum norm and
    ``2m`` entrywise, once per edge.
    """
    check_norm(norm)
    max_dist = params.M * (A.n_points + B.n_points)
    T = extend_pair(A, B).t_horizon
    m = len(A) + len(B)
    per_edge = 2.0 if norm == "colsum" else 2.0 * m
    return float(max_dist), float(per_edge * max(T - 1, 0))


def auc(curve, max_dist: float, max_swi: float) -> float:
    """Normalized area under the lower-left hull of a trade-off curve.

    ``curve`` is a :class:`TradeoffCurve` or an array of ``(dist, swi)``
    rows. Left of the first hull vertex nothing is achievable and the full
    height ``max_swi`` counts; between vertices the hull is linear; right of
    the last vertex it stays flat. Everything is clamped to the box
    ``[0, max_dist] x [0, max_swi]`` and divided by its area.
    """
    if not (max_dist > 0 and max_swi > 0):
        raise InvalidInputError("max_dist and max_swi must be positive")
    if isinstance(curve, TradeoffCurve):
        P = curve.hull_points
    else:
        P = np.asarray(curve, dtype=float).reshape(-1, 2)
        P = P[lower_hull(P[:, 0], P[:, 1])]
    if len(P) == 0:
        raise InvalidInputError("empty curve")
    x = np.clip(P[:, 0], 0.0, max_dist)
    y = np.clip(P[:, 1], 0.0, max_swi)
    area = x[0] * max_swi
    area += float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))
    area += (max_dist - x[-1]) * y[-1]
    return float(min(1.0, max(0.0, area / (max_dist * max_swi))))
