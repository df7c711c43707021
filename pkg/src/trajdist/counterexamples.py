"""Concrete instances behind the negative results.

``theorem1`` and ``theorem2`` share one 1-D crossing construction at base
threshold 1.5 with ``A_1 = 0.5``, ``A_2 = -0.5`` and
``B_1 = 0.5 - s(t)``, ``B_2 = -0.5 + s(t)``. The bump ``s`` rises to 2 and
falls back to 0 by frame 11. CLEAR MOT anchors the identity until the pair
distance reaches 1.5 at frame 6, switches, and then stays anchored to the
swapped association (distance 1 per pair) for the rest of the horizon.
``C_1 = A_1`` and ``C_2 = B_2`` keep one pair anchored at distance 0 in both
``(A, C)`` and ``(C, B)``, so neither of those associations can switch.

Other thresholds are reached by scaling all coordinates (and ``M``) by
``thr / 1.5``; more trajectories are obtained by stacking copies far apart.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from trajdist.core import ExtendedMetricParams, Trajectory, TrajectorySet
from trajdist.errors import InvalidInputError

__all__ = ["Counterexample", "build_counterexample", "bump"]

BASE_THR = 1.5
BASE_M = 10.0
_BUMP = {4: 0.5, 5: 1.0, 6: 1.5, 7: 2.0, 8: 1.5, 9: 1.0, 10: 0.5, 11: 0.0}


def bump(T: int) -> np.ndarray:
    """Crossing profile ``s(t)`` for frames ``1..T`` (index 0 is frame 1)."""
    s = np.zeros(T)
    for t, v in _BUMP.items():
        if t <= T:
            s[t - 1] = v
    return s


@dataclass(frozen=True)
class Counterexample:
    """Sets and/or permutation sequences of one construction.

    Attributes
    ----------
    sets : dict
        Named trajectory sets (``"A"``, ``"B"``, ``"C"``).
    sequences : dict
        Named 0-based permutation sequences.
    params : ExtendedMetricParams, optional
    thr : float, optional
        CLEAR MOT threshold the construction targets.
    scale : float
        Factor applied to all coordinates relative to the base construction.
    copies : int
        Number of stacked copies of the two-trajectory core.
    """

    name: str
    sets: dict = field(default_factory=dict)
    sequences: dict = field(default_factory=dict)
    params: ExtendedMetricParams | None = None
    thr: float | None = None
    T: int | None = None
    scale: float = 1.0
    copies: int = 1


def _line(values: np.ndarray) -> Trajectory:
    return Trajectory.from_arrays(np.arange(1, len(values) + 1), values)


def _crossing(thr: float, T: int, m: int) -> tuple[dict, float, int, ExtendedMetricParams]:
    if not thr > 0:
        raise InvalidInputError("thr must be positive")
    if T < 21:
        raise InvalidInputError("the construction needs T >= 21")
    if m < 2:
        raise InvalidInputError("the construction needs m >= 2")
    scale = thr / BASE_THR
    s = bump(T)
    one = np.ones(T)
    core = {
        "A": (0.5 * one, -0.5 * one),
        "B": (0.5 - s, -0.5 + s),
        "C": (0.5 * one, -0.5 + s),
    }
    copies, extra = divmod(m, 2)
    gap = 100.0
    sets = {}
    for name, (x1, x2) in core.items():
        trajs = []
        for c in range(copies):
            trajs += [_line(scale * (x1 + c * gap)), _line(scale * (x2 + c * gap))]
        if extra:
            trajs.append(_line(scale * np.full(T, copies * gap)))
        sets[name] = TrajectorySet(tuple(trajs))
    params = ExtendedMetricParams(BASE_M * scale)
    return sets, scale, copies, params


def build_counterexample(which: str, thr: float = BASE_THR, T: int = 100, m: int = 2, M: float = BASE_M) -> Counterexample:
    """Return the named construction.

    Parameters
    ----------
    which : {"theorem1", "theorem2", "theorem7", "theorem8"}
        ``theorem1``/``theorem2``: CLEAR MOT crossing instances (sets A, B, C
        and the constant identity sequence). ``theorem7``: two permutation
        sequences whose composition breaks the capped switch count.
        ``theorem8``: three 1-D sets on which the capped switch count breaks
        the triangle inequality.
    thr, T, m
        Threshold, horizon and trajectories per set for the crossing
        instances.
    M : float
        Miss penalty for ``theorem8``; must be at least 2 so that matching
        against padding never beats the intended associations.
    """
    if which in ("theorem1", "theorem2"):
        sets, scale, copies, params = _crossing(thr, T, m)
        m_ext = 2 * len(sets["A"])
        ident = tuple(range(m_ext))
        return Counterexample(
            which,
            sets=sets,
            sequences={"constant": tuple(ident for _ in range(T))},
            params=params,
            thr=float(thr),
            T=T,
            scale=scale,
            copies=copies,
        )
    if which == "theorem7":
        I, s0 = (0, 1), (1, 0)
        return Counterexample(
            which,
            sequences={"Sigma": (I, s0, s0), "Sigma_prime": (I, I, s0)},
        )
    if which == "theorem8":
        if M < 2:
            raise InvalidInputError("theorem8 needs M >= 2")

        def mk(*tracks):
            return TrajectorySet.from_points([[(t + 1, [v]) for t, v in enumerate(tr)] for tr in tracks])

        sets = {
            "A": mk((2, -2, -2), (-2, 2, 2)),
            "B": mk((2, 2, 2), (-2, -2, -2)),
            "C": mk((2, 2, -2), (-2, -2, 2)),
        }
        I, s0 = (0, 1), (1, 0)
        return Counterexample(
            which,
            sets=sets,
            sequences={"AB": (I, s0, s0), "BC": (I, I, s0)},
            params=ExtendedMetricParams(M),
            T=3,
        )
    raise InvalidInputError(f"unknown construction {which!r}")
