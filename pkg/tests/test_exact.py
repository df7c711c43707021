import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_dnat, brute_ospa, random_instance
from scenarios import S1_A, S1_B, S2_A, S2_B, S3_A, S3_B, S4_A, S4_B, S4_C
from trajdist.core import ExtendedMetricParams, distance_matrices, extend_pair
from trajdist.counterexamples import build_counterexample
from trajdist.errors import InstanceTooLargeError, InvalidInputError
from trajdist.exact import (
    clear_mot_from_matrices,
    d_nat_bruteforce,
    d_nat_dp,
    d_nat_from_matrices,
    motp,
    ospa,
    ospa_from_matrices,
    sequence_distance,
    swi_dist,
)
from trajdist.permutations import SwitchCost, cayley_distance, compose, inverse, kendall_distance

M10 = ExtendedMetricParams(10.0)


def test_scenario_goldens():
    assert ospa(S1_A, S1_B, M10).value == pytest.approx(0.36, abs=1e-9)
    assert ospa(S2_A, S2_B, ExtendedMetricParams(0.1)).value == pytest.approx(0.3, abs=1e-9)
    assert ospa(S3_A, S3_B, M10).value == pytest.approx(1.68, abs=1e-9)
    D = distance_matrices(extend_pair(S3_A, S3_B), M10)
    # the two pairings of the real trajectories
    vals = sorted(sequence_distance(D, [p] * 6) for p in ((0, 1, 2, 3), (1, 0, 2, 3)))
    assert vals == pytest.approx([1.68, 6.40], abs=1e-9)


def test_scenario4():
    for X, Y in ((S4_A, S4_B), (S4_A, S4_C), (S4_B, S4_C)):
        assert ospa(X, Y, M10).value == pytest.approx(7.2, abs=1e-9)
    r = motp(S4_A, S4_B, 0.19, M10)
    assert r.value == pytest.approx(0.0, abs=1e-9)
    sig = [s[:2] for s in r.association.one_based()]
    assert sig == [(1, 2)] * 3 + [(2, 1)] * 3
    assert motp(S4_A, S4_C, 0.19, M10).value == pytest.approx(7.2, abs=1e-9)
    assert motp(S4_B, S4_C, 0.19, M10).value == pytest.approx(7.2, abs=1e-9)


def test_clear_mot_keeps_anchor():
    # the pair (0, 0) stays anchored although swapping would be cheaper later
    D = np.array([[[0.0, 1.0], [1.0, 0.0]], [[0.5, 0.0], [0.0, 0.5]]])
    a = clear_mot_from_matrices(D, thr=1.0)
    assert a.sigma == ((0, 1), (0, 1))
    a = clear_mot_from_matrices(D, thr=0.4)
    assert a.sigma == ((0, 1), (1, 0))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4))
def test_ospa_matches_brute_force(seed, m, T):
    D = random_instance(np.random.default_rng(seed), m, T)
    assert ospa_from_matrices(D).value == pytest.approx(brute_ospa(D), abs=1e-9)


def _step(kind, alpha):
    def f(p, q):
        if p == q:
            return 0.0
        if kind == "count":
            return alpha
        d = compose(q, inverse(p))
        return alpha * (cayley_distance(d) if kind == "trans" else kendall_distance(d))
    return f


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3),
       st.sampled_from(["count", "trans", "adjtrans"]), st.sampled_from([0.3, 1.0, 2.5]))
def test_dnat_search_matches_dp_and_enumeration(seed, m, T, kind, alpha):
    D = random_instance(np.random.default_rng(seed), m, T)
    K = SwitchCost(kind, alpha)
    ref = brute_dnat(D, _step(kind, alpha))
    bb = d_nat_from_matrices(D, K)
    assert bb.value == pytest.approx(ref, abs=1e-9)
    assert d_nat_dp(D, K).value == pytest.approx(ref, abs=1e-9)
    # the witness reproduces the value
    assert bb.dist_term + bb.swi_term == pytest.approx(bb.value)
    assert sequence_distance(D, bb.association.sigma) == pytest.approx(bb.dist_term)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4))
def test_dnat_with_ospa_cost_recovers_ospa(seed, m, T):
    D = random_instance(np.random.default_rng(seed), m, T)
    assert d_nat_from_matrices(D, SwitchCost("ospa")).value == pytest.approx(ospa_from_matrices(D).value, abs=1e-9)


def test_dnat_identical_sets_is_zero():
    for kind in ("count", "trans", "adjtrans", "ospa"):
        assert d_nat_bruteforce(S3_A, S3_A, SwitchCost(kind), M10).value == 0.0


def test_dnat_cap():
    rng = np.random.default_rng(0)
    D = rng.random((3, 11, 11))
    with pytest.raises(InstanceTooLargeError, match="d_comp"):
        d_nat_from_matrices(D, SwitchCost("count"))
    with pytest.raises(InstanceTooLargeError):
        d_nat_from_matrices(rng.random((6, 4, 4)), SwitchCost("count"), cap=100)


def test_dp_rejects_maxcount():
    with pytest.raises(InvalidInputError):
        d_nat_dp(np.zeros((2, 2, 2)), SwitchCost("maxcount", 1.0, 1))


def test_maxcount_triangle_instance():
    ce = build_counterexample("theorem8")
    K = SwitchCost("maxcount", 1.0, 1)
    A, B, C = ce.sets["A"], ce.sets["B"], ce.sets["C"]
    assert d_nat_bruteforce(A, B, K, ce.params).value == 1
    assert d_nat_bruteforce(B, C, K, ce.params).value == 1
    assert d_nat_bruteforce(A, C, K, ce.params).value >= 4


def test_maxcount_instance_needs_large_M():
    with pytest.raises(InvalidInputError):
        build_counterexample("theorem8", M=1.0)


@pytest.mark.parametrize("thr", [1.5, 1.2, 0.3, 6.0])
@pytest.mark.parametrize("m", [2, 4])
def test_crossing_construction_any_threshold(thr, m):
    T = 100
    ce = build_counterexample("theorem2", thr=thr, T=T, m=m)
    A, B, C = ce.sets["A"], ce.sets["B"], ce.sets["C"]
    assert len(A) == m
    s, c = ce.scale, ce.copies
    ab = motp(A, B, thr, ce.params).value / T
    ac = motp(A, C, thr, ce.params).value / T
    cb = motp(C, B, thr, ce.params).value / T
    assert ab > 2 * (T - 12) / T * s * c
    assert ac < 8.5 / T * s * c and cb < 8.5 / T * s * c
    assert ab > ac + cb


def test_crossing_switch_quantities():
    T = 100
    ce = build_counterexample("theorem1", T=T)
    A, B = ce.sets["A"], ce.sets["B"]
    pair = extend_pair(A, B)
    res = motp(A, B, ce.thr, ce.params)
    swi, dist = swi_dist(res.association.sigma, pair, ce.params)
    assert swi == 1 / 99
    assert dist > 2 * (1 - 12 / T) * ce.scale
    swi0, dist0 = swi_dist(ce.sequences["constant"], pair, ce.params)
    assert swi0 == 0 and dist0 < 12 * 7.5 / T * ce.scale


def test_swi_dist_validation():
    pair = extend_pair(S4_A, S4_B)
    with pytest.raises(InvalidInputError):
        swi_dist([(0, 1, 2, 3)] * 5, pair, M10)
    with pytest.raises(InvalidInputError):
        swi_dist([(0, 1)] * 6, pair, M10)


def test_unknown_counterexample():
    with pytest.raises(InvalidInputError):
        build_counterexample("theorem99")
