import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajdist.errors import InvalidInputError
from trajdist.permutations import (
    INF,
    SwitchCost,
    cayley_distance,
    check_K_axioms,
    compose,
    compose_sequences,
    identity,
    inverse,
    inverse_sequence,
    is_permutation,
    kendall_distance,
    n_cycles,
    step_costs,
    switch_cost,
)


def all_perms(m):
    return list(itertools.permutations(range(m)))


def cayley_ref(s):
    # fewest transpositions by greedy placement
    s, n = list(s), 0
    for i in range(len(s)):
        while s[i] != i:
            j = s[i]
            s[i], s[j] = s[j], s[i]
            n += 1
    return n


def kendall_ref(s):
    return sum(s[i] > s[j] for i in range(len(s)) for j in range(i + 1, len(s)))


perm_st = st.integers(1, 7).flatmap(lambda m: st.permutations(list(range(m))).map(tuple))


def test_basic_ops():
    assert identity(3) == (0, 1, 2)
    assert compose((1, 0, 2), (0, 2, 1)) == (1, 2, 0)
    assert inverse((1, 2, 0)) == (2, 0, 1)
    assert n_cycles((1, 0, 2)) == 2
    assert is_permutation((2, 0, 1)) and not is_permutation((0, 0, 1))
    with pytest.raises(InvalidInputError):
        compose((0, 1), (0, 1, 2))


@settings(max_examples=200)
@given(perm_st)
def test_distances_match_reference(s):
    assert cayley_distance(s) == cayley_ref(s) == len(s) - n_cycles(s)
    assert kendall_distance(s) == kendall_ref(s)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_cayley_below_kendall_exhaustive(m):
    for s in all_perms(m):
        assert cayley_distance(s) <= kendall_distance(s)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_cayley_conjugation_invariant_and_subadditive(m):
    P = all_perms(m)
    for s in P:
        for t in P:
            assert cayley_distance(compose(compose(t, s), inverse(t))) == cayley_distance(s)
            assert cayley_distance(compose(s, t)) <= cayley_distance(s) + cayley_distance(t)


def test_switch_cost_examples():
    I, sw = (0, 1), (1, 0)
    assert switch_cost(SwitchCost("count", 1.0), (I, sw, sw)) == 1
    assert switch_cost(SwitchCost("count", 2.5), (I, sw, I)) == 5.0
    assert switch_cost(SwitchCost("ospa"), (I, I, I)) == 0
    assert switch_cost(SwitchCost("ospa"), (I, sw)) == INF
    K = SwitchCost("maxcount", 1.0, 1)
    assert switch_cost(K, (I, sw, sw)) == 1
    assert switch_cost(K, (I, I, sw)) == 1
    assert switch_cost(K, compose_sequences((I, I, sw), (I, sw, sw))) == INF
    assert switch_cost(SwitchCost("trans"), ((0, 1, 2), (2, 0, 1))) == 2
    assert switch_cost(SwitchCost("adjtrans"), ((0, 1, 2), (2, 1, 0))) == 3


def test_step_costs_table():
    P = [(0, 1, 2), (1, 0, 2), (2, 0, 1)]
    c = step_costs(SwitchCost("trans", 2.0), P)
    np.testing.assert_array_equal(c, [[0, 2, 4], [2, 0, 2], [4, 2, 0]])


def test_switch_cost_validation():
    with pytest.raises(InvalidInputError):
        SwitchCost("bogus")
    with pytest.raises(InvalidInputError):
        SwitchCost("count", 0.0)
    with pytest.raises(InvalidInputError):
        SwitchCost("maxcount", 1.0)


@pytest.mark.parametrize("kind,m,T", [("count", 2, 3), ("trans", 3, 2), ("adjtrans", 2, 3), ("count", 3, 2)])
def test_axioms_hold_exhaustively(kind, m, T):
    rep = check_K_axioms(SwitchCost(kind, 1.0), m=m, T=T)
    assert rep.exhaustive
    assert rep.ok, rep.violations[:3]


def test_axioms_random_count():
    rep = check_K_axioms(SwitchCost("count", 1.0), m=4, T=4, n_random=1000)
    assert not rep.exhaustive and rep.n_checked == 1000 and rep.ok


def test_maxcount_violates_subadditivity():
    rep = check_K_axioms(SwitchCost("maxcount", 1.0, 1), m=2, T=3)
    assert any(v[0] == "subadditive" for v in rep.violations)


def test_adjtrans_fails_beyond_two():
    # Kendall distance is not conjugation invariant for three or more items
    S, S2 = ((0, 2, 1), (0, 2, 1)), ((0, 1, 2), (1, 0, 2))
    K = SwitchCost("adjtrans", 1.0)
    assert switch_cost(K, S) == 0 and switch_cost(K, S2) == 1
    assert switch_cost(K, compose_sequences(S2, S)) + 0 > switch_cost(K, S) + switch_cost(K, S2) or \
        switch_cost(K, compose_sequences(S, S2)) > switch_cost(K, S) + switch_cost(K, S2)
    assert not check_K_axioms(K, m=3, T=2).ok


@settings(max_examples=100)
@given(st.integers(2, 4).flatmap(lambda m: st.lists(st.permutations(list(range(m))).map(tuple), min_size=1, max_size=5)))
def test_inverse_sequence_roundtrip(seq):
    seq = tuple(seq)
    assert inverse_sequence(inverse_sequence(seq)) == seq
    ident = tuple(identity(len(seq[0])) for _ in seq)
    assert compose_sequences(seq, inverse_sequence(seq)) == ident
    assert switch_cost(SwitchCost("trans"), inverse_sequence(seq)) == switch_cost(SwitchCost("trans"), seq)


def test_infinity_is_math_inf():
    assert INF == math.inf
