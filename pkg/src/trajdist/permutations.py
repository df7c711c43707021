"""Permutation algebra and switch costs on permutation sequences.

Permutations are tuples of 0-based images: ``s[i]`` is the index that ``i``
maps to. Composition follows ``compose(s, t)[i] == s[t[i]]``. A sequence is
a tuple of equally sized permutations, one per frame.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from trajdist.errors import InvalidInputError

__all__ = [
    "INF",
    "KINDS",
    "AxiomReport",
    "SwitchCost",
    "cayley_distance",
    "check_K_axioms",
    "compose",
    "compose_sequences",
    "identity",
    "inverse",
    "inverse_sequence",
    "is_permutation",
    "kendall_distance",
    "n_cycles",
    "step_costs",
    "switch_cost",
]

INF = math.inf
KINDS = ("count", "trans", "adjtrans", "ospa", "maxcount")

Perm = tuple[int, ...]


def is_permutation(s: Sequence[int]) -> bool:
    return sorted(s) == list(range(len(s)))


def _check(s: Sequence[int]) -> Perm:
    s = tuple(int(v) for v in s)
    if not is_permutation(s):
        raise InvalidInputError(f"{s} is not a permutation of 0..{len(s) - 1}")
    return s


def identity(m: int) -> Perm:
    return tuple(range(m))


def compose(s: Sequence[int], t: Sequence[int]) -> Perm:
    """Composition ``s o t`` with ``(s o t)[i] = s[t[i]]``."""
    if len(s) != len(t):
        raise InvalidInputError(f"size mismatch: {len(s)} vs {len(t)}")
    return tuple(s[i] for i in t)


def inverse(s: Sequence[int]) -> Perm:
    out = [0] * len(s)
    for i, v in enumerate(s):
        out[v] = i
    return tuple(out)


def n_cycles(s: Sequence[int]) -> int:
    seen = [False] * len(s)
    cycles = 0
    for start in range(len(s)):
        if seen[start]:
            continue
        cycles += 1
        j = start
        while not seen[j]:
            seen[j] = True
            j = s[j]
    return cycles


def cayley_distance(s: Sequence[int]) -> int:
    """Minimum number of transpositions that sort ``s``: ``m - #cycles``."""
    return len(s) - n_cycles(s)


def _merge_count(a: list[int]) -> tuple[list[int], int]:
    if len(a) <= 1:
        return a, 0
    mid = len(a) // 2
    left, x = _merge_count(a[:mid])
    right, y = _merge_count(a[mid:])
    merged = []
    inv = x + y
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            merged.append(right[j])
            inv += len(left) - i
            j += 1
    merged.extend(left[i:])
    merged.extend(right[j:])
    return merged, inv


def kendall_distance(s: Sequence[int]) -> int:
    """Number of inversions of ``s`` (adjacent swaps bubble sort performs)."""
    return _merge_count(list(s))[1]


def compose_sequences(S: Sequence[Perm], S2: Sequence[Perm]) -> tuple[Perm, ...]:
    """Frame-wise composition ``S o S2``."""
    if len(S) != len(S2):
        raise InvalidInputError("sequences differ in length")
    return tuple(compose(a, b) for a, b in zip(S, S2))


def inverse_sequence(S: Sequence[Perm]) -> tuple[Perm, ...]:
    return tuple(inverse(s) for s in S)


@dataclass(frozen=True)
class SwitchCost:
    """A switch-cost functional on permutation sequences.

    Parameters
    ----------
    kind : {"count", "trans", "adjtrans", "ospa", "maxcount"}
        ``count`` charges each change of association, ``trans`` the Cayley
        distance of each change, ``adjtrans`` its Kendall distance, ``ospa``
        forbids any change and ``maxcount`` is ``count`` capped by a budget.
    alpha : float
        Positive weight.
    beta : float, optional
        Budget for ``maxcount``; the cost is infinite once ``alpha * count``
        exceeds it.
    """

    kind: str
    alpha: float = 1.0
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown switch cost {self.kind!r}; choose from {', '.join(KINDS)}")
        if not self.alpha > 0 or not math.isfinite(self.alpha):
            raise InvalidInputError(f"alpha must be positive, got {self.alpha!r}")
        if self.kind == "maxcount":
            if self.beta is None or not self.beta >= 1:
                raise InvalidInputError("maxcount needs beta >= 1")

    def step(self, s: Perm, s_next: Perm) -> float:
        """Cost of moving from ``s`` to ``s_next`` before any budget."""
        if s == s_next:
            return 0.0
        if self.kind == "ospa":
            return INF
        if self.kind == "trans":
            return self.alpha * cayley_distance(compose(s_next, inverse(s)))
        if self.kind == "adjtrans":
            return self.alpha * kendall_distance(compose(s_next, inverse(s)))
        return self.alpha

    @property
    def additive(self) -> bool:
        return self.kind != "maxcount"


def step_costs(K: SwitchCost, perms: Sequence[Perm]) -> np.ndarray:
    """Matrix ``C[a, b]`` of transition costs between listed permutations."""
    n = len(perms)
    C = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            C[a, b] = K.step(perms[a], perms[b])
    return C


def switch_cost(K: SwitchCost, S: Sequence[Sequence[int]]) -> float:
    """Evaluate ``K`` on the sequence ``S`` (may return ``inf``)."""
    S = [_check(s) for s in S]
    if not S:
        raise InvalidInputError("empty permutation sequence")
    if len({len(s) for s in S}) != 1:
        raise InvalidInputError("permutations in a sequence differ in size")
    total = 0.0
    for a, b in zip(S[:-1], S[1:]):
        total += K.step(a, b)
    if K.kind == "maxcount" and total > K.beta:
        return INF
    return total


@dataclass
class AxiomReport:
    """Violations found by :func:`check_K_axioms`."""

    kind: str
    n_checked: int = 0
    exhaustive: bool = False
    violations: list[tuple[str, tuple, tuple]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _all_sequences(m: int, T: int):
    perms = list(itertools.permutations(range(m)))
    return itertools.product(perms, repeat=T)


def _random_sequence(rng: np.random.Generator, m: int, T: int) -> tuple[Perm, ...]:
    return tuple(tuple(int(v) for v in rng.permutation(m)) for _ in range(T))


def check_K_axioms(
    K: SwitchCost,
    samples: Iterable[tuple[Sequence[Perm], Sequence[Perm]]] | None = None,
    m: int | None = None,
    T: int | None = None,
    n_random: int = 1000,
    seed: int = 0,
    exhaustive_limit: int = 10**5,
    max_witnesses: int = 20,
) -> AxiomReport:
    """Check zero-iff-constant, inverse invariance and subadditivity.

    Subadditivity is tested in both composition orders. Either pass explicit
    ``samples`` or sizes ``m`` and ``T``; in the latter case all pairs of
    sequences are enumerated when there are at most ``exhaustive_limit`` of
    them and ``n_random`` random pairs are drawn otherwise.
    """
    report = AxiomReport(K.kind)
    if samples is None:
        if m is None or T is None:
            raise InvalidInputError("give samples or both m and T")
        n_seq = math.factorial(m) ** T
        if n_seq * n_seq <= exhaustive_limit:
            seqs = list(_all_sequences(m, T))
            samples = itertools.product(seqs, repeat=2)
            report.exhaustive = True
        else:
            rng = np.random.default_rng(seed)
            samples = [(_random_sequence(rng, m, T), _random_sequence(rng, m, T)) for _ in range(n_random)]

    def add(name, S, S2):
        if len(report.violations) < max_witnesses:
            report.violations.append((name, tuple(S), tuple(S2)))

    for S, S2 in samples:
        S, S2 = tuple(map(tuple, S)), tuple(map(tuple, S2))
        report.n_checked += 1
        kS, kS2 = switch_cost(K, S), switch_cost(K, S2)
        for seq, val in ((S, kS), (S2, kS2)):
            constant = all(s == seq[0] for s in seq)
            if (val == 0) != constant:
                add("zero-iff-constant", seq, ())
            if switch_cost(K, inverse_sequence(seq)) != val:
                add("inverse", seq, ())
        if switch_cost(K, compose_sequences(S, S2)) > kS + kS2:
            add("subadditive", S, S2)
        if switch_cost(K, compose_sequences(S2, S)) > kS + kS2:
            add("subadditive", S2, S)
    return report
