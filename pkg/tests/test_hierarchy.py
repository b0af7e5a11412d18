"""Hierarchy probes and the odd-angle witness."""

import numpy as np
import pytest

from ferrolearn import hierarchy
from ferrolearn.dense_sim import exp_majorana, gaussian_unitary, jw_majorana
from ferrolearn.instances import haar_orthogonal, random_instance
from ferrolearn.majorana_algebra import gamma, to_dense


def _witness_unitary(p: int) -> np.ndarray:
    # K exp(theta gamma1 gamma5) K with exp(theta g1 g5) = exp_majorana(-theta)
    theta = np.pi / p
    k = exp_majorana((1, 2, 3, 4), np.pi / 4, 3)
    g = exp_majorana((1, 5), -theta, 3)
    return k @ g @ k


def test_sparse_decompose_recovers_strings():
    n = 2
    got = hierarchy.sparse_decompose(to_dense(gamma(3, n)), n)
    assert {k.mask for k in got.keys()} == {0b0100}
    assert got.coefficient(0b0100) == pytest.approx(1.0)
    mixed = 0.25 * to_dense(gamma(1, n)) + 1j * np.eye(4)
    got = hierarchy.sparse_decompose(mixed, n)
    assert got.coefficient(0b0001) == pytest.approx(0.25)
    assert got.coefficient(0) == pytest.approx(1j)


def test_is_gaussian_action_accepts_gaussians():
    rng = np.random.default_rng(7)
    for det_flip in (False, True):
        o = haar_orthogonal(6, rng)
        if det_flip:
            o = o.copy()
            o[:, 0] *= -1.0
        assert hierarchy.is_gaussian_action(gaussian_unitary(o))


def test_is_gaussian_action_rejects_witness():
    assert not hierarchy.is_gaussian_action(_witness_unitary(5))


def test_hierarchy_iterate_on_gaussian_circuit():
    spec = random_instance(3, 0, 2, "fermionic", seed=4)
    trace = hierarchy.hierarchy_iterate(spec, mu=2, k_max=4)
    assert trace.weights == [1, 1, 1, 1]
    assert trace.gaussian == [True, True, True, True]


def test_hierarchy_iterate_dense_source_agrees_with_symbolic():
    spec = random_instance(2, 1, 2, "qubit", seed=9)
    sym = hierarchy.hierarchy_iterate(spec, mu=1, k_max=3)
    from ferrolearn.instances import assemble

    dense = hierarchy.hierarchy_iterate(assemble(spec), mu=1, k_max=3)
    assert sym.weights == dense.weights
    assert sym.gaussian == dense.gaussian
    for a, b in zip(sym.iterates, dense.iterates):
        diff = (a - b).prune(1e-8)
        assert diff.terms == {}


def test_hierarchy_iterate_guards():
    spec = random_instance(2, 0, 2, "fermionic", seed=0)
    with pytest.raises(ValueError):
        hierarchy.hierarchy_iterate(spec, mu=5, k_max=2)
    with pytest.raises(ValueError):
        hierarchy.hierarchy_iterate(spec, mu=1, k_max=0)


def test_witness_frozen_first_level():
    report = hierarchy.witness_outside_hierarchy(5, k_max=1)
    coeffs = report["iterates"][0]["leading_coeffs"]
    got = {label: complex(re, im) for label, (re, im) in coeffs.items()}
    theta = np.pi / 5
    assert got["gamma2"] == pytest.approx(-np.cos(2 * theta))
    assert got["gamma3*gamma4*gamma5"] == pytest.approx(-1j * np.sin(2 * theta))


def test_witness_iterates_match_dense_conjugation():
    p = 5
    u = _witness_unitary(p)
    report = hierarchy.witness_outside_hierarchy(p, k_max=2)
    f1 = hierarchy.sparse_decompose(u @ to_dense(gamma(2, 3)) @ u.conj().T, 3)
    want = {k.mask: f1.coefficient(k.mask) for k in f1.prune(1e-12).keys()}
    got = report["iterates"][0]["leading_coeffs"]
    assert len(want) == len(got)
    for label, (re, im) in got.items():
        idx = [int(s.replace("gamma", "")) for s in label.split("*")]
        mask = sum(1 << (i - 1) for i in idx)
        assert want[mask] == pytest.approx(complex(re, im), abs=1e-10)


def test_witness_never_gaussian_and_weight_three():
    for p in (3, 7):
        report = hierarchy.witness_outside_hierarchy(p, k_max=6)
        assert report["all_non_gaussian"]
        assert all(e["weight"] == 3 for e in report["iterates"])
        assert all(not e["gaussian"] for e in report["iterates"])


def test_witness_rejects_bad_p():
    with pytest.raises(ValueError):
        hierarchy.witness_outside_hierarchy(4)
    with pytest.raises(ValueError):
        hierarchy.witness_outside_hierarchy(1)
    with pytest.raises(ValueError):
        hierarchy.witness_outside_hierarchy(-3)
