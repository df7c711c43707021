import numpy as np
import pytest

from trajdist.comp import matrix_norm
from trajdist.errors import InvalidInputError
from trajdist.verify import Check, _axiom_checks, random_doubly_stochastic, run_suite, tiny_universe


def test_check_status():
    assert Check("a", True).status == "pass"
    assert Check("a", False).status == "fail"
    assert Check("a", False, True).status == "xfail"
    assert Check("a", True, True).status == "xpass"
    assert Check("a", False, True).ok and not Check("a", True, True).ok


def test_universe():
    U = tiny_universe()
    assert len(U) == 6**3  # empty set plus 6^3 - 1 nonempty trajectories
    assert len(set(U)) == len(U)
    assert max(len(S) for S in U) == 1


def test_axiom_checker_flags_violations():
    U = tiny_universe(T=1, grid=(0, 1))
    # |x - y| on {}, {0}, {1} with the empty set at distance 5: triangle fails
    V = np.array([[0.0, 5.0, 5.0], [5.0, 0.0, 1.0], [5.0, 1.0, 0.0]])
    V[0, 1] = V[1, 0] = 0.5
    checks = {c.name.split(": ")[1]: c for c in _axiom_checks("toy", V, U, lambda S: 0 * S, 0.0)}
    assert checks["nonnegative"].passed
    assert checks["symmetric"].passed
    assert checks["zero exactly on equal sets"].passed
    assert not checks["triangle inequality"].passed
    assert checks["triangle inequality"].witness["violations"] > 0

    V2 = V.copy()
    V2[1, 2] = 2.0
    checks = {c.name.split(": ")[1]: c for c in _axiom_checks("toy", V2, U, lambda S: 0 * S, 0.0)}
    assert not checks["symmetric"].passed
    V3 = V.copy()
    V3[1, 2] = V3[2, 1] = 0.0
    checks = {c.name.split(": ")[1]: c for c in _axiom_checks("toy", V3, U, lambda S: 0 * S, 0.0)}
    assert not checks["zero exactly on equal sets"].passed


def test_counterexample_suite():
    rep = run_suite("counterexamples")
    assert rep.ok
    st = {c.name: c.status for c in rep.checks}
    assert st["switch cost adjtrans axioms, m=3, T=2"] == "xfail"
    assert st["switch cost maxcount axioms, m=2, T=3"] == "xfail"
    assert sum(s == "pass" for s in st.values()) == len(st) - 2
    d = rep.as_dict()
    assert d["ok"] and d["suite"] == "counterexamples"


def test_adjtrans_witness():
    rep = run_suite("counterexamples")
    c = next(c for c in rep.checks if c.name == "switch cost adjtrans axioms, m=3, T=2")
    assert c.witness["rule"] and c.witness["S"]


def test_norm_suite_small():
    rep = run_suite("norm", n=2000, seed=1)
    assert rep.ok
    st = {c.name: c.status for c in rep.checks}
    assert st["colsum: product inequality"] == "pass"
    assert st["colsum: unit bound on doubly stochastic matrices"] == "pass"
    assert st["entrywise: unit bound on doubly stochastic matrices"] == "xfail"


def test_random_doubly_stochastic():
    W = random_doubly_stochastic(np.random.default_rng(0), 4, 50)
    np.testing.assert_allclose(W.sum(-1), 1)
    np.testing.assert_allclose(W.sum(-2), 1)
    assert W.min() >= 0
    assert np.all(matrix_norm(W, "colsum") <= 1 + 1e-12)


def test_unknown_suite():
    with pytest.raises(InvalidInputError):
        run_suite("everything")
