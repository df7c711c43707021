import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajdist import ExtendedMetricParams
from trajdist.comp import CompParams, d_comp
from trajdist.errors import InvalidInputError
from trajdist.synthgen import GenConfig, generate_arrays, generate_pair, knob_sweep, make_rng

SMALL = GenConfig(n_traj=5, t_horizon=30, seed=9)


def test_deterministic():
    a1, b1 = generate_arrays(SMALL.replace(AMPnoise=1.0, FRAGprob=0.1, DELprob=0.2, SWIdist=5.0))
    a2, b2 = generate_arrays(SMALL.replace(AMPnoise=1.0, FRAGprob=0.1, DELprob=0.2, SWIdist=5.0))
    np.testing.assert_array_equal(a1, a2)
    np.testing.assert_array_equal(b1, b2)
    assert generate_pair(SMALL) == generate_pair(SMALL)


def test_seed_changes_output():
    a1, _ = generate_arrays(SMALL)
    a2, _ = generate_arrays(SMALL.replace(seed=10))
    assert not np.array_equal(a1, a2, equal_nan=True)


def test_stage_streams_are_independent():
    x = make_rng(3, "noise").random(5)
    y = make_rng(3, "delete").random(5)
    assert not np.allclose(x, y)
    np.testing.assert_array_equal(x, make_rng(3, "noise").random(5))


def test_no_distortion_copies_ground_truth():
    A, B = generate_arrays(SMALL)
    np.testing.assert_array_equal(A, B)


def test_lifetimes():
    A, _ = generate_arrays(GenConfig(n_traj=40, t_horizon=40, seed=1))
    for row in A[..., 0]:
        f = np.flatnonzero(~np.isnan(row)) + 1
        assert f.size and np.all(np.diff(f) == 1)  # one contiguous life
        assert 1 <= f[0] <= 20
        assert f[-1] >= min(f[0] + 10, 40)


def test_full_deletion_gives_empty_output():
    cfg = SMALL.replace(DELprob=1.0)
    A, B = generate_pair(cfg)
    assert len(B) == 0
    P = ExtendedMetricParams(10.0)
    r = d_comp(A, B, P, CompParams(alpha=1.0))
    # every present ground-truth point pays M
    n_points = sum(len(tr) for tr in A.trajectories)
    assert r.value == pytest.approx(10.0 * n_points)


def test_noise_is_bounded():
    A, B = generate_arrays(SMALL.replace(AMPnoise=0.5))
    assert np.nanmax(np.abs(A - B)) <= 0.5


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 20), st.integers(0, 2**32))
def test_output_lives_on_ground_truth_frames(frag, dele, swi, seed):
    A, B = generate_arrays(GenConfig(n_traj=4, t_horizon=20, FRAGprob=frag, DELprob=dele, SWIdist=swi, seed=seed))
    present = (~np.isnan(A[..., 0])).sum(0)
    out = (~np.isnan(B[..., 0])).sum(0)
    # deletion and fragmentation never add points at a frame
    assert np.all(out <= present)


def test_common_random_numbers():
    # knob levels share ground truth and the noise pattern
    A1, B1 = generate_arrays(SMALL.replace(AMPnoise=1.0))
    A2, B2 = generate_arrays(SMALL.replace(AMPnoise=2.0))
    np.testing.assert_array_equal(A1, A2)
    np.testing.assert_allclose(B2 - A2, 2 * (B1 - A1))
    # more deletion removes a superset of points
    _, b1 = generate_arrays(SMALL.replace(DELprob=0.2))
    _, b2 = generate_arrays(SMALL.replace(DELprob=0.4))
    assert np.all(np.isnan(b1) <= np.isnan(b2))


def test_fragmentation_adds_tracks():
    _, B = generate_arrays(SMALL.replace(FRAGprob=0.3))
    assert B.shape[0] > SMALL.n_traj


def test_config_validation_and_json():
    with pytest.raises(InvalidInputError):
        GenConfig(DELprob=1.5)
    with pytest.raises(InvalidInputError):
        GenConfig(n_traj=0)
    with pytest.raises(InvalidInputError):
        GenConfig.from_dict({"bogus": 1})
    import json

    assert GenConfig.from_dict(json.loads(SMALL.to_json())) == SMALL


def test_knob_sweep_small():
    base = GenConfig(n_traj=3, t_horizon=12, seed=0)
    pts = knob_sweep(base, "AMPnoise", [0.0, 4.0], 2, alpha_grid_size=5, thr_grid_size=8, refine=0)
    assert [p.value for p in pts] == [0.0, 4.0]
    assert pts[0].mean_comp == 0.0 and pts[0].mean_motp == 0.0
    for p in pts:
        assert p.auc_comp.shape == (2,)
        assert np.all(p.auc_comp <= p.auc_motp + 1e-12)
    with pytest.raises(InvalidInputError):
        knob_sweep(base, "speed", [0.0], 1)


def test_knob_sweep_workers_match_serial():
    base = GenConfig(n_traj=3, t_horizon=12, seed=4)
    kw = dict(alpha_grid_size=4, thr_grid_size=6, refine=0)
    a = knob_sweep(base, "SWIdist", [8.0], 2, workers=1, **kw)
    b = knob_sweep(base, "SWIdist", [8.0], 2, workers=2, **kw)
    np.testing.assert_array_equal(a[0].auc_comp, b[0].auc_comp)
    np.testing.assert_array_equal(a[0].auc_motp, b[0].auc_motp)
