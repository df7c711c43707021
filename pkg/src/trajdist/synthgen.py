"""Synthetic ground truth and distorted tracker output.

Ground truth ``A``: ``n_traj`` objects, each born at a frame uniform on
``[1, T/2]`` and dying uniform on ``[birth + T/4, T]``. An object starts
uniformly in ``[0, 100]^p``, moves at a constant speed drawn from
``[0.5, 2]`` per frame, and redraws its heading uniformly with probability
0.1 per frame.

Tracker output ``B`` is derived from ``A`` in this order: fragmentation
(a cut before each interior frame with probability ``FRAGprob``), removal
of whole fragments (``DROPfrag``), deletion of single points
(``DELprob``), uniform noise in ``[-AMPnoise, AMPnoise]`` per coordinate,
and identity swaps. A swap is considered whenever two tracks come within
``SWIdist`` of each other after being apart (or absent) on the previous
frame, and is applied with probability ``swap_prob`` by exchanging the
remainders of both tracks.

Randomness uses NumPy's counter-based Philox bit generator. The seed
spawns one independent stream per stage, and every stage draws the same
number of variates whatever the knob values are. Two configurations that
share a seed therefore share ground truth and random draws, and differ
only through the knobs.
"""

from __future__ import annotations

import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from trajdist.comp import CompParams, auc, auc_bounds, default_alpha_grid, default_thr_grid
from trajdist.comp import motp_tradeoff_from_matrices, tradeoff_from_matrices
from trajdist.core import ExtendedMetricParams, Trajectory, TrajectorySet, distance_matrices, extend_pair
from trajdist.errors import InvalidInputError

__all__ = ["KNOBS", "GenConfig", "SweepPoint", "generate_pair", "generate_arrays", "knob_sweep", "make_rng"]

KNOBS = ("AMPnoise", "FRAGprob", "DELprob", "SWIdist")
SWEEP_SOLVER = CompParams(tol=1e-5, max_iter=1000, stall_iter=100, stall_gap=0.01)
_STAGES = ("motion", "fragment", "drop", "delete", "noise", "swap")


@dataclass(frozen=True)
class GenConfig:
    """Generator settings.

    Parameters
    ----------
    n_traj : int
        Ground-truth objects.
    t_horizon : int
        Frames.
    state_dim : int
    AMPnoise, FRAGprob, DELprob, SWIdist : float
        The four distortion knobs.
    seed : int
        64-bit seed.
    DROPfrag : float
        Probability of removing a whole fragment.
    swap_prob : float
        Probability that an encounter turns into an identity swap.
    turn_prob : float
        Per-frame probability of a new heading.
    box : float
        Side of the initial-position box.
    """

    n_traj: int = 25
    t_horizon: int = 100
    state_dim: int = 2
    AMPnoise: float = 0.0
    FRAGprob: float = 0.0
    DELprob: float = 0.0
    SWIdist: float = 0.0
    seed: int = 0
    DROPfrag: float = 0.0
    swap_prob: float = 0.5
    turn_prob: float = 0.1
    box: float = 100.0

    def __post_init__(self):
        if int(self.n_traj) != self.n_traj or self.n_traj < 1:
            raise InvalidInputError("n_traj must be a positive integer")
        if int(self.t_horizon) != self.t_horizon or self.t_horizon < 2:
            raise InvalidInputError("t_horizon must be an integer >= 2")
        if int(self.state_dim) != self.state_dim or self.state_dim < 1:
            raise InvalidInputError("state_dim must be a positive integer")
        for name in ("FRAGprob", "DELprob", "DROPfrag", "swap_prob", "turn_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1], got {v}")
        for name in ("AMPnoise", "SWIdist"):
            if not getattr(self, name) >= 0.0:
                raise InvalidInputError(f"{name} must be nonnegative")
        if not self.box > 0:
            raise InvalidInputError("box must be positive")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise InvalidInputError("seed must be an integer in [0, 2**64)")

    def replace(self, **changes) -> "GenConfig":
        return dataclasses.replace(self, **changes)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidInputError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**d)


def make_rng(seed: int, stage: str) -> np.random.Generator:
    """Philox stream for one generation stage."""
    children = np.random.SeedSequence(int(seed)).spawn(len(_STAGES))
    return np.random.Generator(np.random.Philox(children[_STAGES.index(stage)]))


def _ground_truth(cfg: GenConfig) -> np.ndarray:
    rng = make_rng(cfg.seed, "motion")
    T, p = cfg.t_horizon, cfg.state_dim
    A = np.full((cfg.n_traj, T, p), np.nan)
    for i in range(cfg.n_traj):
        birth = int(rng.integers(1, max(T // 2, 1) + 1))
        lo = min(birth + T // 4, T)
        death = int(rng.integers(lo, T + 1))
        pos = rng.uniform(0.0, cfg.box, p)
        speed = rng.uniform(0.5, 2.0)
        heading = _unit(rng, p)
        turns = rng.random(T)
        fresh = np.stack([_unit(rng, p) for _ in range(T)])
        for t in range(birth, death + 1):
            A[i, t - 1] = pos
            if turns[t - 1] < cfg.turn_prob:
                heading = fresh[t - 1]
            pos = pos + speed * heading
    return A


def _unit(rng: np.random.Generator, p: int) -> np.ndarray:
    if p == 1:
        return np.array([1.0 if rng.random() < 0.5 else -1.0])
    v = rng.normal(size=p)
    return v / np.linalg.norm(v)


def generate_arrays(cfg: GenConfig) -> tuple[np.ndarray, np.ndarray]:
    """Padded arrays ``(n, T, p)`` for ``A`` and ``B`` (NaN where absent)."""
    A = _ground_truth(cfg)
    n, T, p = A.shape
    present = ~np.isnan(A[..., 0])

    # the same draws are consumed whatever the knob values
    cut_u = make_rng(cfg.seed, "fragment").random((n, T))
    del_u = make_rng(cfg.seed, "delete").random((n, T))
    noise_u = make_rng(cfg.seed, "noise").uniform(-1.0, 1.0, (n, T, p))
    drop_rng = make_rng(cfg.seed, "drop")

    fragments = []
    for i in range(n):
        frames = np.flatnonzero(present[i])
        if frames.size == 0:
            continue
        start = 0
        pieces = []
        for q in range(1, frames.size):
            if cut_u[i, frames[q]] < cfg.FRAGprob:
                pieces.append(frames[start:q])
                start = q
        pieces.append(frames[start:])
        drop_u = drop_rng.random(len(pieces))
        for piece, u in zip(pieces, drop_u):
            if u < cfg.DROPfrag:
                continue
            kept = piece[del_u[i, piece] >= cfg.DELprob]
            if kept.size:
                fragments.append((i, kept))

    B = np.full((len(fragments), T, p), np.nan)
    for r, (i, frames) in enumerate(fragments):
        B[r, frames] = A[i, frames] + cfg.AMPnoise * noise_u[i, frames]

    if cfg.SWIdist > 0 and len(fragments) > 1:
        _swap_identities(B, cfg)
    return A, B


def _swap_identities(B: np.ndarray, cfg: GenConfig) -> None:
    rng = make_rng(cfg.seed, "swap")
    nb, T, _ = B.shape
    iu = np.triu_indices(nb, 1)

    def close(t):
        X = B[:, t]
        d = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
        with np.errstate(invalid="ignore"):
            c = d < cfg.SWIdist
        return c[iu]

    before = close(0)
    for t in range(1, T):
        now = close(t)
        for k in np.flatnonzero(now & ~before):
            if rng.random() < cfg.swap_prob:
                a, b = iu[0][k], iu[1][k]
                tmp = B[a, t:].copy()
                B[a, t:] = B[b, t:]
                B[b, t:] = tmp
        before = close(t)


def _to_set(X: np.ndarray, prefix: str) -> TrajectorySet:
    trajs, labels = [], []
    for r in range(X.shape[0]):
        frames = np.flatnonzero(~np.isnan(X[r, :, 0]))
        if frames.size:
            trajs.append(Trajectory.from_arrays(frames + 1, X[r, frames]))
            labels.append(f"{prefix}{len(labels) + 1}")
    return TrajectorySet(tuple(trajs), tuple(labels))


def generate_pair(cfg: GenConfig) -> tuple[TrajectorySet, TrajectorySet]:
    """Ground truth ``A`` and distorted output ``B``; a pure function of ``cfg``."""
    A, B = generate_arrays(cfg)
    return _to_set(A, "a"), _to_set(B, "b")


@dataclass(frozen=True)
class SweepPoint:
    """Mean normalized AUCs at one knob level.

    ``auc_comp`` and ``auc_motp`` hold one value per repeat; ``n_unconverged``
    counts relaxed solves that stopped at their iteration cap. Their points
    are feasible, so the curve is still valid, only possibly less tight.
    """

    value: float
    auc_comp: np.ndarray
    auc_motp: np.ndarray
    n_unconverged: int = 0

    @property
    def mean_comp(self) -> float:
        return float(np.mean(self.auc_comp))

    @property
    def mean_motp(self) -> float:
        return float(np.mean(self.auc_motp))

    @staticmethod
    def _se(x) -> float:
        return float(np.std(x, ddof=1) / np.sqrt(len(x))) if len(x) > 1 else 0.0

    @property
    def se_comp(self) -> float:
        return self._se(self.auc_comp)

    @property
    def se_motp(self) -> float:
        return self._se(self.auc_motp)


def knob_sweep(
    base: GenConfig,
    knob: str,
    values,
    n_repeats: int,
    params: ExtendedMetricParams | None = None,
    cp: CompParams | None = None,
    alpha_grid_size: int = 12,
    thr_grid_size: int = 30,
    refine: int = 3,
    workers: int | None = None,
    progress=None,
) -> list[SweepPoint]:
    """Average trade-off AUCs of the relaxed distance and of MOTP over random pairs.

    Repeat ``r`` uses seed ``base.seed + r`` at every level, so all levels
    see the same ground truth and the same random draws and differ only
    through ``knob``. ``params`` defaults to ``M = 10``. The default solver
    settings are tight because curves of lightly distorted pairs nearly
    coincide; solves that show no progress after 100 iterations stop early.
    ``workers`` processes share the pairs (default: the ``TRAJDIST_THREADS``
    environment variable, else one); results do not depend on it.
    ``progress`` is called with ``(value, repeat)`` after each pair.
    """
    if knob not in KNOBS:
        raise InvalidInputError(f"knob must be one of {KNOBS}, got {knob!r}")
    values = [float(v) for v in values]
    if not values:
        raise InvalidInputError("values must not be empty")
    if int(n_repeats) != n_repeats or n_repeats < 1:
        raise InvalidInputError("n_repeats must be a positive integer")
    params = ExtendedMetricParams(10.0) if params is None else params
    cp = SWEEP_SOLVER if cp is None else cp

    tasks = [(v, r) for v in values for r in range(n_repeats)]
    cfgs = [base.replace(**{knob: v, "seed": (base.seed + r) % 2**64}) for v, r in tasks]
    extra = (params, cp, alpha_grid_size, thr_grid_size, refine)
    if workers is None:
        workers = int(os.environ.get("TRAJDIST_THREADS", "1") or 1)
    results = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_pair_aucs, c, *extra) for c in cfgs]
            for task, f in zip(tasks, futs):
                results.append(f.result())
                if progress is not None:
                    progress(*task)
    else:
        for task, c in zip(tasks, cfgs):
            results.append(_pair_aucs(c, *extra))
            if progress is not None:
                progress(*task)

    out = []
    for i, v in enumerate(values):
        chunk = results[i * n_repeats : (i + 1) * n_repeats]
        out.append(SweepPoint(
            v,
            np.array([c[0] for c in chunk]),
            np.array([c[1] for c in chunk]),
            sum(c[2] for c in chunk),
        ))
    return out


def _pair_aucs(cfg, params, cp, alpha_grid_size, thr_grid_size, refine):
    A, B = generate_pair(cfg)
    D = distance_matrices(extend_pair(A, B), params)
    bounds = auc_bounds(A, B, params, cp.norm)
    curve = tradeoff_from_matrices(D, default_alpha_grid(D, alpha_grid_size), cp, refine=refine)
    mcurve = motp_tradeoff_from_matrices(D, default_thr_grid(D, thr_grid_size), cp.norm)
    return auc(curve, *bounds), auc(mcurve, *bounds), int((~curve.converged).sum())

