"""OSPA, CLEAR MOT/MOTP and the exact natural distance.

Every function has a ``*_from_matrices`` twin that works directly on the
``(T, m, m)`` array returned by :func:`trajdist.core.distance_matrices`;
the set-level functions only build that array and delegate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Sequence

import numpy as np

from trajdist.assignment import lex_min_assignment
from trajdist.core import ExtendedMetricParams, ExtendedPair, TrajectorySet, distance_matrices, extend_pair
from trajdist.errors import InstanceTooLargeError, InvalidInputError
from trajdist.permutations import SwitchCost

__all__ = [
    "Association",
    "MetricResult",
    "clear_mot_association",
    "clear_mot_from_matrices",
    "d_nat_bruteforce",
    "d_nat_dp",
    "d_nat_from_matrices",
    "motp",
    "motp_from_matrices",
    "ospa",
    "ospa_from_matrices",
    "sequence_distance",
    "swi_dist",
]

DEFAULT_CAP = 10**7


@dataclass(frozen=True)
class Association:
    """A permutation per frame, 0-based; ``anchored[t, i]`` for CLEAR MOT."""

    sigma: tuple[tuple[int, ...], ...]
    anchored: np.ndarray | None = None

    def one_based(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(j + 1 for j in s) for s in self.sigma)

    @property
    def n_switches(self) -> int:
        return sum(a != b for a, b in zip(self.sigma[:-1], self.sigma[1:]))


@dataclass
class MetricResult:
    """Value of a distance together with its decomposition.

    Attributes
    ----------
    value : float
    dist_term : float
        Summed matched distances.
    swi_term : float
        Switch penalty (weighted); zero for OSPA and MOTP.
    association : Association, optional
        Optimal permutation sequence for the combinatorial distances.
    weights : ndarray, optional
        Doubly stochastic sequence of shape ``(T, m, m)`` for the convex
        distance.
    converged : bool
    info : dict
        Solver-specific extras.
    """

    value: float
    dist_term: float
    swi_term: float
    association: Association | None = None
    weights: np.ndarray | None = None
    converged: bool = True
    info: dict[str, Any] = field(default_factory=dict)


def _matrices(A: TrajectorySet, B: TrajectorySet, params: ExtendedMetricParams) -> tuple[ExtendedPair, np.ndarray]:
    pair = extend_pair(A, B)
    return pair, distance_matrices(pair, params)


def sequence_distance(D: np.ndarray, sigma: Sequence[Sequence[int]]) -> float:
    """``sum_t sum_i D[t, i, sigma[t][i]]``."""
    if D.shape[0] == 0 or D.shape[1] == 0:
        return 0.0
    S = np.asarray(sigma, dtype=int)
    rows = np.arange(D.shape[1])
    return float(D[np.arange(D.shape[0])[:, None], rows[None, :], S].sum())


# OSPA

def ospa_from_matrices(D: np.ndarray) -> MetricResult:
    T, m = D.shape[0], D.shape[1]
    if T == 0 or m == 0:
        return MetricResult(0.0, 0.0, 0.0, Association(tuple(() for _ in range(T))))
    perm, value = lex_min_assignment(D.sum(axis=0))
    s = tuple(int(j) for j in perm)
    return MetricResult(value, value, 0.0, Association(tuple(s for _ in range(T))))


def ospa(A: TrajectorySet, B: TrajectorySet, params: ExtendedMetricParams) -> MetricResult:
    """Best single assignment of whole trajectories, summed over frames."""
    return ospa_from_matrices(_matrices(A, B, params)[1])


# CLEAR MOT

def clear_mot_from_matrices(D: np.ndarray, thr: float) -> Association:
    if not thr > 0:
        raise InvalidInputError(f"thr must be positive, got {thr!r}")
    T, m = D.shape[0], D.shape[1]
    anchored = np.zeros((T, m), dtype=bool)
    if T == 0 or m == 0:
        return Association(tuple(() for _ in range(T)), anchored)
    rows = np.arange(m)
    first, _ = lex_min_assignment(D[0])
    sigma = [first]
    for t in range(1, T):
        prev = sigma[-1]
        anch = D[t, rows, prev] < thr
        cur = np.where(anch, prev, -1)
        if not anch.all():
            free_rows = np.flatnonzero(~anch)
            taken = np.zeros(m, dtype=bool)
            taken[prev[anch]] = True
            free_cols = np.flatnonzero(~taken)
            sub, _ = lex_min_assignment(D[t][np.ix_(free_rows, free_cols)])
            cur[free_rows] = free_cols[sub]
        anchored[t] = anch
        sigma.append(cur)
    return Association(tuple(tuple(int(j) for j in s) for s in sigma), anchored)


def clear_mot_association(pair: ExtendedPair, thr: float, params: ExtendedMetricParams) -> Association:
    """Frame-by-frame association with anchoring below ``thr``.

    Frame 1 takes a minimum-cost assignment. At each later frame every pair
    kept from the previous frame whose distance is strictly below ``thr`` is
    anchored; the remaining rows and columns get a minimum-cost assignment.
    Ties go to the lexicographically smallest assignment.
    """
    return clear_mot_from_matrices(distance_matrices(pair, params), thr)


def motp_from_matrices(D: np.ndarray, thr: float) -> MetricResult:
    assoc = clear_mot_from_matrices(D, thr)
    T = D.shape[0]
    value = sequence_distance(D, assoc.sigma) if T and D.shape[1] else 0.0
    n_sw = assoc.n_switches
    info = {
        "switches": n_sw,
        "swi": n_sw / (T - 1) if T > 1 else 0.0,
        "dist": value / T if T else 0.0,
    }
    return MetricResult(value, value, 0.0, assoc, info=info)


def motp(A: TrajectorySet, B: TrajectorySet, thr: float, params: ExtendedMetricParams) -> MetricResult:
    """Sum of extended distances along the CLEAR MOT association.

    ``info`` carries the number of switches and the normalized ``swi`` and
    ``dist`` of that association.
    """
    return motp_from_matrices(_matrices(A, B, params)[1], thr)


def swi_dist(S: Sequence[Sequence[int]], pair: ExtendedPair, params: ExtendedMetricParams) -> tuple[float, float]:
    """Fraction of frames where the association changes, and mean distance per frame."""
    D = distance_matrices(pair, params)
    T = D.shape[0]
    if len(S) != T:
        raise InvalidInputError(f"sequence has {len(S)} frames, pair has {T}")
    if any(len(s) != pair.m for s in S):
        raise InvalidInputError("permutation size does not match the pair")
    if T == 0:
        return 0.0, 0.0
    changes = sum(tuple(a) != tuple(b) for a, b in zip(S[:-1], S[1:]))
    swi = changes / (T - 1) if T > 1 else 0.0
    return swi, sequence_distance(D, S) / T


# Natural distance

@lru_cache(maxsize=32)
def _perm_table(m: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(m))), dtype=np.int64).reshape(-1, m)


def _transition_counts(P: np.ndarray, kind: str) -> np.ndarray:
    """Unweighted transition cost between every pair of listed permutations."""
    n, m = P.shape
    if kind in ("count", "maxcount"):
        return (~np.eye(n, dtype=bool)).astype(float)
    if kind == "ospa":
        out = np.full((n, n), math.inf)
        np.fill_diagonal(out, 0.0)
        return out
    inv = np.argsort(P, axis=1)
    # Q[a, b] = P[b] o inv(P[a])
    Q = P[np.arange(n)[None, :, None], inv[:, None, :]]
    if kind == "adjtrans":
        out = np.zeros((n, n))
        for i in range(m):
            for j in range(i + 1, m):
                out += Q[..., i] > Q[..., j]
        return out
    # trans: m minus the number of cycles; count cycle minima
    is_min = np.ones((n, n, m), dtype=bool)
    x = np.broadcast_to(np.arange(m), (n, n, m)).copy()
    start = x.copy()
    for _ in range(m - 1):
        x = np.take_along_axis(Q, x, axis=-1)
        is_min &= x >= start
    return m - is_min.sum(axis=-1).astype(float)


@lru_cache(maxsize=64)
def _transition_table(m: int, kind: str, alpha: float) -> np.ndarray:
    base = _transition_counts(_perm_table(m), kind)
    with np.errstate(invalid="ignore"):
        out = np.where(np.isinf(base), math.inf, alpha * base)
    out.setflags(write=False)
    return out


def _frame_costs(D: np.ndarray, P: np.ndarray) -> np.ndarray:
    m = D.shape[1]
    return D[:, np.arange(m)[None, :], P].sum(axis=-1)


def _result(D, P, path, K: SwitchCost, transitions) -> MetricResult:
    sigma = tuple(tuple(int(v) for v in P[p]) for p in path)
    dist = sequence_distance(D, sigma)
    swi = float(sum(transitions[a, b] for a, b in zip(path[:-1], path[1:])))
    return MetricResult(dist + swi, dist, swi, Association(sigma))


def d_nat_from_matrices(D: np.ndarray, K: SwitchCost, cap: int = DEFAULT_CAP) -> MetricResult:
    """Exact minimum by depth-first branch and bound over permutation sequences.

    The bound adds, for every remaining frame, the cheapest single-frame
    assignment. ``cap`` limits the number of partial sequences evaluated.
    """
    T, m = D.shape[0], D.shape[1]
    if T == 0 or m == 0:
        return MetricResult(0.0, 0.0, 0.0, Association(tuple(() for _ in range(T))))
    if math.factorial(m) > cap:
        raise InstanceTooLargeError(
            f"{m}! permutations per frame exceed the enumeration cap {cap}; use d_comp instead"
        )
    P = _perm_table(m)
    n = len(P)
    F = _frame_costs(D, P)
    trans = _transition_table(m, K.kind, K.alpha) if T > 1 else np.zeros((n, n))
    budget = K.beta if K.kind == "maxcount" else math.inf
    suffix = np.concatenate([np.cumsum(F.min(axis=1)[::-1])[::-1], [0.0]])

    # incumbent: best constant sequence, feasible for every kind
    const = F.sum(axis=0)
    p0 = int(np.argmin(const))
    best_val = float(const[p0])
    best_path = [p0] * T
    evaluations = 0
    eps = 1e-12 * max(1.0, best_val)

    path = [0] * T

    def visit(t: int, prev: int, acc: float, spent: float) -> None:
        nonlocal best_val, best_path, evaluations
        if t == 0:
            child = F[0]
            spend = np.zeros(n)
        else:
            spend = trans[prev]
            child = acc + spend + F[t]
        evaluations += n
        if evaluations > cap:
            raise InstanceTooLargeError(
                f"more than {cap} objective evaluations needed; use d_comp instead"
            )
        bound = child + suffix[t + 1]
        ok = bound < best_val - eps
        if K.kind == "maxcount":
            ok &= spent + spend <= budget
        cand = np.flatnonzero(ok)
        for c in cand[np.argsort(bound[cand], kind="stable")]:
            if bound[c] >= best_val - eps:
                break
            path[t] = int(c)
            if t == T - 1:
                best_val = float(child[c])
                best_path = list(path)
            else:
                visit(t + 1, int(c), float(child[c]), spent + float(spend[c]))

    visit(0, -1, 0.0, 0.0)
    res = _result(D, P, best_path, K, trans)
    res.info["evaluations"] = evaluations
    return res


def d_nat_bruteforce(
    A: TrajectorySet, B: TrajectorySet, K: SwitchCost, params: ExtendedMetricParams, cap: int = DEFAULT_CAP
) -> MetricResult:
    """Exact natural distance: minimum of switch cost plus matched distance.

    Raises
    ------
    InstanceTooLargeError
        If the search needs more than ``cap`` objective evaluations.
    """
    return d_nat_from_matrices(_matrices(A, B, params)[1], K, cap)


def d_nat_dp(D: np.ndarray, K: SwitchCost) -> MetricResult:
    """Exact natural distance by dynamic programming over frames.

    Valid for the additive kinds (everything except ``maxcount``). Costs
    ``O(T (m!)^2)``; used as an independent check of the search.
    """
    if not K.additive:
        raise InvalidInputError("dynamic programming needs an additive switch cost")
    T, m = D.shape[0], D.shape[1]
    if T == 0 or m == 0:
        return MetricResult(0.0, 0.0, 0.0, Association(tuple(() for _ in range(T))))
    P = _perm_table(m)
    F = _frame_costs(D, P)
    trans = _transition_table(m, K.kind, K.alpha)
    val = F[0].copy()
    back = np.zeros((T, len(P)), dtype=int)
    for t in range(1, T):
        tot = val[:, None] + trans
        back[t] = np.argmin(tot, axis=0)
        val = tot[back[t], np.arange(len(P))] + F[t]
    last = int(np.argmin(val))
    path = [last]
    for t in range(T - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return _result(D, P, path, K, trans)
