"""Executable checks of the metric properties and of the counterexamples.

Three suites:

``axioms``
    Nonnegativity, coincidence, symmetry and the triangle inequality for
    OSPA, the natural distance and the relaxed distance, on every pair and
    triple of a small universe of 1-D sets: at most one trajectory per set,
    frames ``1..3``, states in ``{-2, ..., 2}``, ``M = 1.5``. Any two sets
    of the universe extend to at most two trajectories per side.
``counterexamples``
    The crossing instances on which MOTP fails, the capped switch count
    that breaks subadditivity and the triangle inequality, and the axioms
    of the switch costs themselves.
``norm``
    The product inequality and the unit bound for the matrix norms on
    random doubly stochastic matrices.

Each check records whether it passed, whether failure is the expected
outcome, and witness values.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from trajdist.comp import CompParams, d_comp_from_matrices, matrix_norm
from trajdist.core import ExtendedMetricParams, Trajectory, TrajectorySet, distance_matrices, extend_pair
from trajdist.counterexamples import build_counterexample
from trajdist.errors import InvalidInputError
from trajdist.exact import d_nat_bruteforce, d_nat_from_matrices, motp, ospa_from_matrices, swi_dist
from trajdist.permutations import SwitchCost, check_K_axioms, compose_sequences, switch_cost

__all__ = ["SUITES", "Check", "SuiteReport", "random_doubly_stochastic", "run_suite", "tiny_universe"]

SUITES = ("axioms", "counterexamples", "norm")

AXIOM_M = 1.5
AXIOM_GRID = (-2, -1, 0, 1, 2)
AXIOM_T = 3
AXIOM_ALPHAS = (0.5, 1.0, 2.0)
AXIOM_KINDS = ("count", "trans", "adjtrans")
# rounding slack for exact metrics, relative to the values involved
EXACT_RTOL = 1e-9


@dataclass
class Check:
    name: str
    passed: bool
    expected_fail: bool = False
    witness: dict[str, Any] = field(default_factory=dict)

    @property
    def status(self) -> str:
        if self.expected_fail:
            return "xfail" if not self.passed else "xpass"
        return "pass" if self.passed else "fail"

    @property
    def ok(self) -> bool:
        return self.passed != self.expected_fail

    def as_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "witness": self.witness}


@dataclass
class SuiteReport:
    suite: str
    checks: list[Check]
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "ok": self.ok,
            "elapsed_s": round(self.elapsed, 3),
            "checks": [c.as_dict() for c in self.checks],
        }


# axioms

def tiny_universe(T: int = AXIOM_T, grid=AXIOM_GRID) -> list[TrajectorySet]:
    """The empty set and every single-trajectory set on frames ``1..T``."""
    out = [TrajectorySet(())]
    options = [None] + [float(g) for g in grid]
    for states in itertools.product(options, repeat=T):
        pts = {t + 1: [s] for t, s in enumerate(states) if s is not None}
        if pts:
            out.append(TrajectorySet((Trajectory(pts),)))
    return out


def _describe(S: TrajectorySet) -> str:
    if len(S) == 0:
        return "{}"
    tr = S.trajectories[0]
    return "{" + ", ".join(f"{t}:{tr[t][0]:g}" for t in tr.frames) + "}"


class _Memo:
    """Values keyed on the distance matrices, which fully determine them."""

    def __init__(self, fn: Callable[[np.ndarray], float]):
        self.fn = fn
        self.cache: dict[tuple, float] = {}

    def __call__(self, D: np.ndarray) -> float:
        key = (D.shape, D.tobytes())
        v = self.cache.get(key)
        if v is None:
            v = self.cache[key] = float(self.fn(D))
        return v


def _value_matrices(universe, metrics: dict[str, Callable[[np.ndarray], float]], params) -> dict[str, np.ndarray]:
    n = len(universe)
    out = {name: np.zeros((n, n)) for name in metrics}
    memos = {name: _Memo(fn) for name, fn in metrics.items()}
    for i, A in enumerate(universe):
        for j, B in enumerate(universe):
            D = distance_matrices(extend_pair(A, B), params)
            for name, memo in memos.items():
                out[name][i, j] = memo(D)
    return out


def _axiom_checks(name: str, V: np.ndarray, universe, slack: Callable[[np.ndarray], np.ndarray], coincide_tol: float):
    n = V.shape[0]
    desc = lambda i: _describe(universe[i])  # noqa: E731
    checks = []

    neg = np.argwhere(V < -coincide_tol)
    checks.append(Check(f"{name}: nonnegative", neg.size == 0,
                        witness={"min": float(V.min())} if neg.size == 0 else
                        {"A": desc(neg[0][0]), "B": desc(neg[0][1]), "value": float(V[tuple(neg[0])])}))

    diag = np.abs(np.diag(V))
    off = np.where(np.eye(n, dtype=bool), np.inf, V)
    bad_diag = np.flatnonzero(diag > coincide_tol)
    bad_off = np.argwhere(off <= coincide_tol)
    w = {"max_self": float(diag.max()), "min_other": float(off.min())}
    if bad_diag.size:
        w["A"] = desc(bad_diag[0])
    elif bad_off.size:
        w.update(A=desc(bad_off[0][0]), B=desc(bad_off[0][1]))
    checks.append(Check(f"{name}: zero exactly on equal sets", bad_diag.size == 0 and bad_off.size == 0, witness=w))

    asym = np.abs(V - V.T)
    bad = np.argwhere(asym > slack(V + V.T) / 2)
    w = {"max_asymmetry": float(asym.max())}
    if bad.size:
        i, j = bad[0]
        w.update(A=desc(i), B=desc(j), AB=float(V[i, j]), BA=float(V[j, i]))
    checks.append(Check(f"{name}: symmetric", bad.size == 0, witness=w))

    worst, wit, count = -np.inf, None, 0
    for j in range(n):
        S = V[:, j][:, None] + V[j, :][None, :]
        excess = V - S - slack(V + S)
        count += int((excess > 0).sum())
        k = np.unravel_index(np.argmax(excess), excess.shape)
        if excess[k] > worst:
            worst = float(excess[k])
            wit = (k[0], j, k[1])
    i, j, k = wit
    w = {"violations": count, "triples": n**3, "worst_excess": worst}
    if count:
        w.update(A=desc(i), B=desc(j), C=desc(k), AC=float(V[i, k]), AB=float(V[i, j]), BC=float(V[j, k]))
    checks.append(Check(f"{name}: triangle inequality", count == 0, witness=w))
    return checks


def _suite_axioms(tol: float = 0.01) -> list[Check]:
    params = ExtendedMetricParams(AXIOM_M)
    universe = tiny_universe()
    metrics: dict[str, Callable] = {"ospa": lambda D: ospa_from_matrices(D).value}
    for kind in AXIOM_KINDS:
        for a in AXIOM_ALPHAS:
            K = SwitchCost(kind, a)
            metrics[f"dnat[{kind},alpha={a:g}]"] = lambda D, K=K: d_nat_from_matrices(D, K).value
    for a in AXIOM_ALPHAS:
        cp = CompParams(alpha=a, tol=tol)
        metrics[f"dcomp[alpha={a:g}]"] = lambda D, cp=cp: d_comp_from_matrices(D, cp).value
    values = _value_matrices(universe, metrics, params)

    checks = []
    for name, V in values.items():
        if name.startswith("dcomp"):
            checks += _axiom_checks(name, V, universe, lambda S: 2 * tol * S, coincide_tol=1e-9)
        else:
            checks += _axiom_checks(name, V, universe, lambda S: EXACT_RTOL * np.maximum(S, 1.0), coincide_tol=0.0)
    for c in checks:
        c.witness["sets"] = len(universe)
    return checks


# counterexamples

def _crossing_checks(T: int = 100, thr: float = 1.5) -> list[Check]:
    checks = []
    ce = build_counterexample("theorem2", thr=thr, T=T)
    A, B, C = ce.sets["A"], ce.sets["B"], ce.sets["C"]
    ab = motp(A, B, thr, ce.params).value / T
    ac = motp(A, C, thr, ce.params).value / T
    cb = motp(C, B, thr, ce.params).value / T
    s = ce.scale
    checks.append(Check(
        "motp triangle inequality fails on the crossing instance",
        ab > 2 * (T - 12) / T * s and ac < 8.5 / T * s and cb < 8.5 / T * s and ab > ac + cb,
        witness={"AB/T": ab, "AC/T": ac, "CB/T": cb, "2(T-12)/T": 2 * (T - 12) / T * s, "8.5/T": 8.5 / T * s},
    ))

    ce = build_counterexample("theorem1", thr=thr, T=T)
    A, B = ce.sets["A"], ce.sets["B"]
    res = motp(A, B, thr, ce.params)
    pair = extend_pair(A, B)
    swi_mot, dist_mot = swi_dist(res.association.sigma, pair, ce.params)
    swi_c, dist_c = swi_dist(ce.sequences["constant"], pair, ce.params)
    checks.append(Check(
        "CLEAR MOT switches once and pays large distance while a constant association is close",
        swi_mot == 1 / (T - 1) and dist_mot > 2 * (1 - 12 / T) * s and swi_c == 0 and dist_c < 12 * 7.5 / T * s,
        witness={"swi_mot": swi_mot, "dist_mot": dist_mot, "swi_const": swi_c, "dist_const": dist_c},
    ))
    return checks


def _maxcount_checks() -> list[Check]:
    K = SwitchCost("maxcount", 1.0, 1)
    seq = build_counterexample("theorem7").sequences
    S, S2 = seq["Sigma"], seq["Sigma_prime"]
    kS, kS2, kc = switch_cost(K, S), switch_cost(K, S2), switch_cost(K, compose_sequences(S2, S))
    checks = [Check(
        "capped switch count is not subadditive",
        kS == 1 and kS2 == 1 and kc == np.inf,
        witness={"K(S)": kS, "K(S')": kS2, "K(S' o S)": kc},
    )]
    ce = build_counterexample("theorem8")
    A, B, C = ce.sets["A"], ce.sets["B"], ce.sets["C"]
    ab = d_nat_bruteforce(A, B, K, ce.params).value
    bc = d_nat_bruteforce(B, C, K, ce.params).value
    ac = d_nat_bruteforce(A, C, K, ce.params).value
    checks.append(Check(
        "natural distance with the capped count breaks the triangle inequality",
        ab == 1 and bc == 1 and ac >= 4,
        witness={"AB": ab, "BC": bc, "AC": ac},
    ))
    return checks


def _switch_cost_checks() -> list[Check]:
    checks = []
    cases = [
        ("count", 2, 3, False),
        ("count", 4, 4, False),
        ("trans", 3, 2, False),
        ("adjtrans", 2, 3, False),
        # Kendall distance is not conjugation invariant once m >= 3
        ("adjtrans", 3, 2, True),
        ("maxcount", 2, 3, True),
    ]
    for kind, m, T, xfail in cases:
        K = SwitchCost(kind, 1.0, 1 if kind == "maxcount" else None)
        rep = check_K_axioms(K, m=m, T=T)
        w = {"pairs": rep.n_checked, "exhaustive": rep.exhaustive}
        if rep.violations:
            v = rep.violations[0]
            w.update(rule=v[0], S=[list(p) for p in v[1]], S2=[list(p) for p in v[2]])
        checks.append(Check(f"switch cost {kind} axioms, m={m}, T={T}", rep.ok, xfail, w))
    return checks


def _suite_counterexamples() -> list[Check]:
    return _crossing_checks() + _maxcount_checks() + _switch_cost_checks()


# norms

def random_doubly_stochastic(rng: np.random.Generator, m: int, n: int, k: int | None = None) -> np.ndarray:
    """``n`` random convex combinations of ``k`` permutation matrices each."""
    k = m if k is None else k
    w = rng.dirichlet(np.ones(k), size=n)
    perms = np.argsort(rng.random((n, k, m)), axis=-1)
    W = np.zeros((n, m, m))
    rows = np.arange(m)
    for c in range(k):
        W[np.arange(n)[:, None], rows[None, :], perms[:, c]] += w[:, c, None]
    return W


def _suite_norm(n: int = 10_000, seed: int = 0, max_m: int = 5) -> list[Check]:
    rng = np.random.default_rng(seed)
    sizes = rng.integers(1, max_m + 1, size=n)
    checks = []
    for norm, xfail_unit in (("colsum", False), ("entrywise", True)):
        worst_prod, worst_unit, n_prod, n_unit = -np.inf, -np.inf, 0, 0
        for m in range(1, max_m + 1):
            c = int((sizes == m).sum())
            if c == 0:
                continue
            X1, X2, Y1, Y2 = (random_doubly_stochastic(rng, m, c) for _ in range(4))
            lhs = matrix_norm(Y2 @ X2 - Y1 @ X1, norm)
            rhs = matrix_norm(Y2 - Y1, norm) + matrix_norm(X2 - X1, norm)
            ex = lhs - rhs - 1e-12 * np.maximum(rhs, 1.0)
            n_prod += int((ex > 0).sum())
            worst_prod = max(worst_prod, float(ex.max()))
            u = matrix_norm(X1, norm) - 1.0 - 1e-12
            n_unit += int((u > 0).sum())
            worst_unit = max(worst_unit, float(u.max()))
        if norm == "colsum":
            checks.append(Check(
                f"{norm}: product inequality",
                n_prod == 0,
                witness={"samples": n, "violations": n_prod, "worst_excess": worst_prod},
            ))
        checks.append(Check(
            f"{norm}: unit bound on doubly stochastic matrices",
            n_unit == 0,
            xfail_unit,
            witness={"samples": n, "violations": n_unit, "worst_excess": worst_unit},
        ))
    return checks


def run_suite(suite: str, **kwargs) -> SuiteReport:
    """Run one suite; keyword arguments go to the suite function."""
    fns = {"axioms": _suite_axioms, "counterexamples": _suite_counterexamples, "norm": _suite_norm}
    if suite not in fns:
        raise InvalidInputError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    t = time.perf_counter()
    checks = fns[suite](**kwargs)
    return SuiteReport(suite, checks, time.perf_counter() - t)
