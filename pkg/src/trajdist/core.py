"""Trajectories, padding and the extended point metric.

A trajectory is a finite map from positive integer frames to state vectors.
Comparing two sets of trajectories starts by padding both sets to a common
cardinality ``m = k + l`` and a common horizon ``T``; every padded entry is the
absent symbol, which sits at distance ``M`` from every real state.

Internally an extended set is an array of shape ``(m, T, p)`` in which absent
entries are NaN. ``distance_matrices`` returns an array of shape
``(T, m, m)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from trajdist.errors import InvalidInputError

__all__ = [
    "ABSENT",
    "ExtendedMetricParams",
    "ExtendedPair",
    "Trajectory",
    "TrajectorySet",
    "align_frames",
    "d_plus",
    "distance_matrices",
    "extend_pair",
    "read_csv",
    "read_pair_csv",
    "write_csv",
]


class _Absent:
    """Singleton for the absent state ``*``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "*"

    def __reduce__(self):
        return (_Absent, ())


ABSENT = _Absent()

BaseMetric = Union[str, Callable[[np.ndarray, np.ndarray], float]]

_NAMED_METRICS = ("euclidean", "cityblock", "chebyshev")


@dataclass(frozen=True)
class ExtendedMetricParams:
    """Parameters of the extended metric.

    Parameters
    ----------
    M : float
        Miss penalty. Must be positive.
    base_metric : str or callable
        ``"euclidean"`` (default), ``"cityblock"``, ``"chebyshev"`` or a
        callable ``d(x, y)`` on 1-D arrays that is itself a metric.
    """

    M: float
    base_metric: BaseMetric = "euclidean"

    def __post_init__(self):
        M = float(self.M)
        if not np.isfinite(M) or M <= 0:
            raise InvalidInputError(f"M must be a positive finite number, got {self.M!r}")
        object.__setattr__(self, "M", M)
        if isinstance(self.base_metric, str):
            if self.base_metric not in _NAMED_METRICS:
                raise InvalidInputError(
                    f"unknown base metric {self.base_metric!r}; "
                    f"choose one of {', '.join(_NAMED_METRICS)} or pass a callable"
                )
        elif not callable(self.base_metric):
            raise InvalidInputError("base_metric must be a name or a callable")


def _as_state(x) -> np.ndarray | None:
    if x is ABSENT or x is None:
        return None
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"a state must be a non-empty vector, got shape {arr.shape}")
    return arr


def _base_distance(x: np.ndarray, y: np.ndarray, metric: BaseMetric) -> float:
    if metric == "euclidean":
        return float(np.sqrt(np.sum((x - y) ** 2)))
    if metric == "cityblock":
        return float(np.sum(np.abs(x - y)))
    if metric == "chebyshev":
        return float(np.max(np.abs(x - y)))
    return float(metric(x, y))


def d_plus(x, y, params: ExtendedMetricParams) -> float:
    """Extended distance between two states.

    Parameters
    ----------
    x, y : array_like or ABSENT
        States. ``ABSENT`` (or ``None``) denotes the absent symbol.
    params : ExtendedMetricParams

    Returns
    -------
    float
        ``0`` if both are absent, ``M`` if exactly one is absent and
        ``min(2M, d(x, y))`` otherwise.
    """
    xs, ys = _as_state(x), _as_state(y)
    if xs is None and ys is None:
        return 0.0
    if xs is None or ys is None:
        return params.M
    if xs.shape != ys.shape:
        raise InvalidInputError(f"state dimensions differ: {xs.size} vs {ys.size}")
    return min(2.0 * params.M, _base_distance(xs, ys, params.base_metric))


class Trajectory:
    """Finite map from frame numbers to states.

    Parameters
    ----------
    points : mapping or iterable of (int, array_like)
        Frame-state pairs. Frames must be positive integers and unique.
    """

    __slots__ = ("_frames", "_states", "_key")

    def __init__(self, points: Mapping[int, Sequence[float]] | Iterable[tuple[int, Sequence[float]]]):
        items = list(points.items()) if isinstance(points, Mapping) else list(points)
        if not items:
            raise InvalidInputError("a trajectory needs at least one point")
        frames = []
        states = []
        for t, x in items:
            if isinstance(t, (bool, np.bool_)) or int(t) != t:
                raise InvalidInputError(f"frame {t!r} is not an integer")
            t = int(t)
            if t < 1:
                raise InvalidInputError(f"frame {t} is not a positive integer")
            s = _as_state(x)
            if s is None:
                raise InvalidInputError("raw trajectories cannot contain absent states")
            if not np.all(np.isfinite(s)):
                raise InvalidInputError(f"non-finite state at frame {t}")
            frames.append(t)
            states.append(s)
        order = np.argsort(frames, kind="stable")
        frames_arr = np.asarray(frames, dtype=np.int64)[order]
        if np.any(np.diff(frames_arr) == 0):
            raise InvalidInputError("duplicate frame in trajectory")
        dims = {s.size for s in states}
        if len(dims) != 1:
            raise InvalidInputError("states of one trajectory differ in dimension")
        self._frames = frames_arr
        self._states = np.stack([states[i] for i in order])
        self._frames.setflags(write=False)
        self._states.setflags(write=False)
        self._key = (tuple(self._frames.tolist()), tuple(map(tuple, self._states.tolist())))

    @classmethod
    def from_arrays(cls, frames: np.ndarray, states: np.ndarray) -> "Trajectory":
        """Build from a frame vector and a ``(n, p)`` state array."""
        states = np.asarray(states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        return cls(zip(np.asarray(frames).tolist(), states))

    @property
    def frames(self) -> np.ndarray:
        return self._frames

    @property
    def states(self) -> np.ndarray:
        return self._states

    @property
    def dim(self) -> int:
        return self._states.shape[1]

    def __len__(self) -> int:
        return len(self._frames)

    def __getitem__(self, t: int):
        idx = np.searchsorted(self._frames, t)
        if idx < len(self._frames) and self._frames[idx] == t:
            return self._states[idx]
        return ABSENT

    def shifted(self, offset: int) -> "Trajectory":
        """Copy with every frame moved by ``offset``."""
        return Trajectory.from_arrays(self._frames + offset, self._states)

    def __eq__(self, other) -> bool:
        return isinstance(other, Trajectory) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __lt__(self, other: "Trajectory") -> bool:
        return self._key < other._key

    def __repr__(self) -> str:
        pts = ", ".join(
            f"({t}, {s[0]:g})" if s.size == 1 else f"({t}, {tuple(s.tolist())})"
            for t, s in zip(self._frames.tolist(), self._states)
        )
        return f"Trajectory([{pts}])"


@dataclass(frozen=True)
class TrajectorySet:
    """Unordered finite collection of trajectories.

    Equality ignores order and labels, so two sets compare equal when they
    hold the same trajectories with the same multiplicities.
    """

    trajectories: tuple[Trajectory, ...] = ()
    labels: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        for tr in trajs:
            if not isinstance(tr, Trajectory):
                raise InvalidInputError("TrajectorySet accepts Trajectory objects only")
        dims = {tr.dim for tr in trajs}
        if len(dims) > 1:
            raise InvalidInputError(f"mixed state dimensions in one set: {sorted(dims)}")
        object.__setattr__(self, "trajectories", trajs)
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != len(trajs):
                raise InvalidInputError("labels and trajectories differ in length")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_points(cls, tracks: Iterable, labels: Sequence[str] | None = None) -> "TrajectorySet":
        """Build from an iterable of point mappings or ``(frame, state)`` lists."""
        return cls(tuple(t if isinstance(t, Trajectory) else Trajectory(t) for t in tracks), labels)

    @property
    def dim(self) -> int | None:
        return self.trajectories[0].dim if self.trajectories else None

    @property
    def horizon(self) -> int:
        return max((int(tr.frames[-1]) for tr in self.trajectories), default=0)

    @property
    def n_points(self) -> int:
        return sum(len(tr) for tr in self.trajectories)

    def track_labels(self) -> tuple[str, ...]:
        if self.labels is not None:
            return self.labels
        return tuple(str(i + 1) for i in range(len(self.trajectories)))

    def shifted(self, offset: int) -> "TrajectorySet":
        return TrajectorySet(tuple(tr.shifted(offset) for tr in self.trajectories), self.labels)

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrajectorySet):
            return NotImplemented
        return sorted(self.trajectories) == sorted(other.trajectories)

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.trajectories)))


@dataclass(frozen=True)
class ExtendedPair:
    """Two trajectory sets padded to a common size and horizon.

    Attributes
    ----------
    a_plus, b_plus : ndarray, shape (m, T, p)
        States with NaN marking the absent symbol. Rows ``k..m-1`` of
        ``a_plus`` and ``l..m-1`` of ``b_plus`` are entirely absent.
    k, l : int
        Number of real trajectories in A and B.
    """

    a_plus: np.ndarray
    b_plus: np.ndarray
    k: int
    l: int

    @property
    def m(self) -> int:
        return self.k + self.l

    @property
    def t_horizon(self) -> int:
        return self.a_plus.shape[1]

    @property
    def p(self) -> int:
        return self.a_plus.shape[2]

    def a_present(self) -> np.ndarray:
        return ~np.isnan(self.a_plus[..., 0])

    def b_present(self) -> np.ndarray:
        return ~np.isnan(self.b_plus[..., 0])

    def swapped(self) -> "ExtendedPair":
        """The pair with the roles of A and B exchanged (same padding layout)."""
        return ExtendedPair(self.b_plus, self.a_plus, self.l, self.k)


def _pad(trajs: Sequence[Trajectory], m: int, T: int, p: int) -> np.ndarray:
    out = np.full((m, T, p), np.nan)
    for i, tr in enumerate(trajs):
        out[i, tr.frames - 1] = tr.states
    return out


def extend_pair(A: TrajectorySet, B: TrajectorySet) -> ExtendedPair:
    """Pad ``A`` and ``B`` to ``m = k + l`` trajectories over frames ``1..T``.

    ``T`` is the largest frame present in either set. Padding rows are
    appended after the real trajectories, so ``a_plus[:k]`` are the real
    trajectories of ``A`` in their given order.
    """
    dims = {d for d in (A.dim, B.dim) if d is not None}
    if len(dims) > 1:
        raise InvalidInputError(f"A and B have different state dimensions: {sorted(dims)}")
    p = dims.pop() if dims else 1
    k, l = len(A), len(B)
    m = k + l
    T = max(A.horizon, B.horizon)
    return ExtendedPair(_pad(A.trajectories, m, T, p), _pad(B.trajectories, m, T, p), k, l)


def _pairwise_base(a: np.ndarray, b: np.ndarray, metric: BaseMetric) -> np.ndarray:
    """Base distances between ``a`` (m, T, p) and ``b`` (m, T, p) as (T, m, m)."""
    a_t = np.transpose(a, (1, 0, 2))
    b_t = np.transpose(b, (1, 0, 2))
    diff = a_t[:, :, None, :] - b_t[:, None, :, :]
    if metric == "euclidean":
        return np.sqrt(np.sum(diff * diff, axis=-1))
    if metric == "cityblock":
        return np.sum(np.abs(diff), axis=-1)
    if metric == "chebyshev":
        return np.max(np.abs(diff), axis=-1)
    T, m = a_t.shape[0], a_t.shape[1]
    out = np.full((T, m, m), np.nan)
    for t in range(T):
        for i in range(m):
            if np.isnan(a_t[t, i, 0]):
                continue
            for j in range(m):
                if not np.isnan(b_t[t, j, 0]):
                    out[t, i, j] = float(metric(a_t[t, i], b_t[t, j]))
    return out


def distance_matrices(pair: ExtendedPair, params: ExtendedMetricParams) -> np.ndarray:
    """Per-frame matrices ``D[t, i, j] = d+(A+_i(t), B+_j(t))``.

    Returns
    -------
    ndarray, shape (T, m, m)
    """
    m, T = pair.m, pair.t_horizon
    if m == 0 or T == 0:
        return np.zeros((T, m, m))
    pa = pair.a_present().T[:, :, None]
    pb = pair.b_present().T[:, None, :]
    M = params.M
    with np.errstate(invalid="ignore"):
        base = _pairwise_base(pair.a_plus, pair.b_plus, params.base_metric)
        both = np.minimum(2.0 * M, base)
    one = np.where(pa ^ pb, M, 0.0)
    return np.where(pa & pb, both, one)


def align_frames(*sets: TrajectorySet) -> tuple[TrajectorySet, ...]:
    """Shift all sets by one common offset so the earliest frame becomes 1.

    Gaps between frames are preserved.
    """
    firsts = [int(tr.frames[0]) for s in sets for tr in s.trajectories]
    if not firsts:
        return tuple(sets)
    offset = 1 - min(firsts)
    if offset == 0:
        return tuple(sets)
    return tuple(s.shifted(offset) for s in sets)


# CSV input and output

def _parse_rows(text: str, source: str) -> tuple[dict[str, list[tuple[int, list[float]]]], list[str]]:
    tracks: dict[str, list[tuple[int, list[float]]]] = {}
    order: list[str] = []
    dim = None
    reader = csv.reader(io.StringIO(text))
    for lineno, row in enumerate(reader, start=1):
        cells = [c.strip() for c in row]
        if not cells or all(c == "" for c in cells) or cells[0].startswith("#"):
            continue
        if len(cells) < 3:
            raise InvalidInputError(f"{source}:{lineno}: expected track_id,frame,x1[,x2,...]")
        try:
            frame_f = float(cells[1])
            coords = [float(c) for c in cells[2:]]
        except ValueError:
            if lineno == 1 and not tracks:
                continue  # header
            raise InvalidInputError(f"{source}:{lineno}: non-numeric frame or coordinate") from None
        if frame_f != int(frame_f):
            raise InvalidInputError(f"{source}:{lineno}: frame {cells[1]!r} is not an integer")
        if not all(np.isfinite(coords)):
            raise InvalidInputError(f"{source}:{lineno}: non-finite coordinate")
        if dim is None:
            dim = len(coords)
        elif len(coords) != dim:
            raise InvalidInputError(f"{source}:{lineno}: expected {dim} coordinates, got {len(coords)}")
        tid = cells[0]
        if tid not in tracks:
            tracks[tid] = []
            order.append(tid)
        tracks[tid].append((int(frame_f), coords))
    return tracks, order


def _build_set(tracks, order, offset: int, source: str) -> TrajectorySet:
    trajs = []
    for tid in order:
        pts = tracks[tid]
        frames = [f for f, _ in pts]
        if len(set(frames)) != len(frames):
            raise InvalidInputError(f"{source}: track {tid!r} has two rows for one frame")
        trajs.append(Trajectory([(f + offset, x) for f, x in pts]))
    return TrajectorySet(tuple(trajs), tuple(order))


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from None


def read_csv(path, offset: int | None = None) -> TrajectorySet:
    """Read a trajectory CSV (``track_id,frame,x1[,x2,...]``, header optional).

    Parameters
    ----------
    path : path-like
    offset : int, optional
        Added to every frame. By default frames are shifted so the earliest
        becomes 1.
    """
    tracks, order = _parse_rows(_read_text(path), str(path))
    if offset is None:
        firsts = [f for pts in tracks.values() for f, _ in pts]
        offset = 1 - min(firsts) if firsts else 0
    return _build_set(tracks, order, offset, str(path))


def read_pair_csv(gt_path, hyp_path) -> tuple[TrajectorySet, TrajectorySet]:
    """Read two CSV files and re-index their frames jointly to start at 1."""
    parsed = [(_parse_rows(_read_text(p), str(p)), str(p)) for p in (gt_path, hyp_path)]
    firsts = [f for (tracks, _), _ in parsed for pts in tracks.values() for f, _ in pts]
    offset = 1 - min(firsts) if firsts else 0
    a, b = (_build_set(tracks, order, offset, src) for (tracks, order), src in parsed)
    if a.dim is not None and b.dim is not None and a.dim != b.dim:
        raise InvalidInputError(f"{gt_path} and {hyp_path} have different state dimensions")
    return a, b


def write_csv(S: TrajectorySet, path, header: bool = True, precision: int = 12) -> None:
    """Write a set in the trajectory CSV format."""
    lines = []
    if header:
        p = S.dim or 1
        lines.append(",".join(["track_id", "frame"] + [f"x{i + 1}" for i in range(p)]))
    for lab, tr in zip(S.track_labels(), S.trajectories):
        for t, x in zip(tr.frames.tolist(), tr.states.tolist()):
            coords = ",".join(f"{v:.{precision}g}" for v in x)
            lines.append(f"{lab},{t},{coords}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
