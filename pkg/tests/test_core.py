import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajdist.core import (
    ABSENT,
    ExtendedMetricParams,
    Trajectory,
    TrajectorySet,
    align_frames,
    d_plus,
    distance_matrices,
    extend_pair,
    read_csv,
    read_pair_csv,
    write_csv,
)
from trajdist.errors import InvalidInputError

P = ExtendedMetricParams(1.0)

state = st.one_of(st.none(), st.floats(-5, 5, allow_nan=False).map(lambda v: [v]))


def test_d_plus_cases():
    assert d_plus(ABSENT, None, P) == 0.0
    assert d_plus([3.0], ABSENT, P) == 1.0
    assert d_plus(None, [0.0, 1.0], ExtendedMetricParams(2.5)) == 2.5
    assert d_plus([0.0], [0.5], P) == 0.5
    assert d_plus([0.0], [10.0], P) == 2.0  # capped at 2M
    assert d_plus([0.0, 0.0], [3.0, 4.0], ExtendedMetricParams(10)) == 5.0


def test_d_plus_named_metrics():
    x, y = [0.0, 0.0], [3.0, 4.0]
    big = ExtendedMetricParams(100)
    assert d_plus(x, y, ExtendedMetricParams(100, "cityblock")) == 7.0
    assert d_plus(x, y, ExtendedMetricParams(100, "chebyshev")) == 4.0
    assert d_plus(x, y, ExtendedMetricParams(100, lambda a, b: 1.0)) == 1.0
    assert d_plus(x, y, big) == 5.0


def test_params_validation():
    for bad in (0, -1, math.inf, math.nan):
        with pytest.raises(InvalidInputError):
            ExtendedMetricParams(bad)
    with pytest.raises(InvalidInputError):
        ExtendedMetricParams(1.0, "hamming")


def test_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        d_plus([0.0], [0.0, 1.0], P)


@settings(max_examples=300, deadline=None)
@given(state, state, state)
def test_d_plus_is_metric(x, y, z):
    dxy, dyz, dxz = d_plus(x, y, P), d_plus(y, z, P), d_plus(x, z, P)
    assert dxy >= 0
    assert dxy == d_plus(y, x, P)
    assert (dxy == 0) == ((x is None and y is None) or (x is not None and y is not None and x == y))
    assert dxz <= dxy + dyz + 1e-12


def test_trajectory_basics():
    tr = Trajectory({3: [1.0], 1: [0.0]})
    assert list(tr.frames) == [1, 3]
    assert tr[2] is ABSENT
    assert tr[3][0] == 1.0
    assert len(tr) == 2
    with pytest.raises(InvalidInputError):
        Trajectory([(1, [0.0]), (1, [1.0])])


def test_set_equality_ignores_order():
    a = Trajectory({1: [0.0]})
    b = Trajectory({2: [1.0]})
    assert TrajectorySet((a, b)) == TrajectorySet((b, a))
    assert hash(TrajectorySet((a, b))) == hash(TrajectorySet((b, a)))


def test_extend_pair_shapes():
    A = TrajectorySet.from_points([[(1, [0.0]), (2, [1.0])]])
    B = TrajectorySet.from_points([[(2, [0.0])], [(4, [1.0])]])
    pair = extend_pair(A, B)
    assert pair.m == 3 and pair.k == 1 and pair.l == 2
    assert pair.t_horizon == 4
    assert pair.a_plus.shape == (3, 4, 1)
    assert pair.a_present().sum() == 2
    assert not pair.a_present()[1:].any()


def test_distance_matrices_padding_rows():
    A = TrajectorySet.from_points([[(1, [0.0]), (2, [1.0])]])
    B = TrajectorySet.from_points([[(2, [0.5])]])
    D = distance_matrices(extend_pair(A, B), ExtendedMetricParams(3.0))
    assert D.shape == (2, 2, 2)
    # frame 1: A present, B absent
    np.testing.assert_array_equal(D[0], [[3.0, 3.0], [0.0, 0.0]])
    np.testing.assert_array_equal(D[1], [[0.5, 3.0], [3.0, 0.0]])


def test_empty_sets():
    E = TrajectorySet(())
    pair = extend_pair(E, E)
    assert pair.m == 0
    assert distance_matrices(pair, P).shape[1:] == (0, 0)


def test_csv_roundtrip(tmp_path):
    S = TrajectorySet.from_points([[(1, [0.25, 1.0]), (3, [1.5, -2.0])], [(2, [0.1, 0.2])]])
    f = tmp_path / "s.csv"
    write_csv(S, f, precision=17)
    assert read_csv(f) == S


def test_csv_without_header_and_offset(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("7,10,1.0\n7,11,2.0\n8,12,3.0\n")
    S = read_csv(f)
    assert len(S) == 2
    assert sorted(int(tr.frames[0]) for tr in S.trajectories) == [1, 3]


def test_csv_errors_carry_line_numbers(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("track_id,frame,x1\n1,1,0.0\n1,x,0.0\n")
    with pytest.raises(InvalidInputError, match=":3"):
        read_csv(f)
    f.write_text("track_id,frame,x1\n1,1,0.0\n1,1,2.0\n")
    with pytest.raises(InvalidInputError):
        read_csv(f)


def test_read_pair_shares_frame_offset(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write_text("1,5,0.0\n")
    b.write_text("1,7,0.0\n")
    A, B = read_pair_csv(a, b)
    assert int(A.trajectories[0].frames[0]) == 1
    assert int(B.trajectories[0].frames[0]) == 3


def test_align_frames():
    A = TrajectorySet.from_points([[(4, [0.0])]])
    B = TrajectorySet.from_points([[(6, [0.0])]])
    A2, B2 = align_frames(A, B)
    assert int(A2.trajectories[0].frames[0]) == 1
    assert int(B2.trajectories[0].frames[0]) == 3
