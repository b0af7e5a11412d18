"""Sparse Majorana string algebra against the dense Jordan-Wigner oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.linalg import expm

from ferrolearn.majorana_algebra import (
    PRUNE_THRESHOLD,
    SparseOperator,
    StringKey,
    adjoint_parity,
    check_dense_cap,
    commutator,
    conjugate_by_exp_string,
    conjugate_by_givens,
    dense_qubit_cap,
    from_indices,
    gamma,
    hermitize,
    majorana_weight,
    string_product,
    string_to_dense,
    to_dense,
)

N = 3
MASKS = st.integers(min_value=0, max_value=(1 << (2 * N)) - 1)


def _dense_string(mask: int) -> np.ndarray:
    return string_to_dense(StringKey(mask, 2 * N))


def test_product_signs_frozen():
    k, ph = string_product(StringKey(0b01, 4), StringKey(0b10, 4))
    assert (k.mask, ph) == (0b11, 1.0 + 0.0j)
    k, ph = string_product(StringKey(0b10, 4), StringKey(0b01, 4))
    assert (k.mask, ph) == (0b11, -1.0 + 0.0j)
    # gamma1 gamma2 times gamma2 gamma3 collapses the shared generator
    k, ph = string_product(StringKey(0b011, 6), StringKey(0b110, 6))
    assert (k.mask, ph) == (0b101, 1.0 + 0.0j)


def test_adjoint_parity_period_four():
    assert [adjoint_parity(w) for w in range(8)] == [1, 1, -1, -1, 1, 1, -1, -1]


def test_hermitize_phases():
    assert hermitize(StringKey(0b1, 4))[1] == 1
    assert hermitize(StringKey(0b11, 4))[1] == 1j
    assert hermitize(StringKey(0b111, 6))[1] == 1j
    assert hermitize(StringKey(0b1111, 8))[1] == 1


def test_string_key_indices_round_trip():
    key = StringKey.from_indices((1, 4, 5), 6)
    assert key.mask == 0b011001
    assert key.indices() == (1, 4, 5)
    assert key.weight == 3


@settings(max_examples=80, deadline=None)
@given(x=MASKS, y=MASKS)
def test_product_matches_dense(x, y):
    key, phase = string_product(StringKey(x, 2 * N), StringKey(y, 2 * N))
    assert abs(phase) == 1.0
    assert_allclose(
        _dense_string(x) @ _dense_string(y),
        phase * _dense_string(key.mask),
        atol=1e-12,
    )


@settings(max_examples=60, deadline=None)
@given(x=MASKS, y=MASKS, z=MASKS)
def test_product_associative(x, y, z):
    kxy, pxy = string_product(StringKey(x, 2 * N), StringKey(y, 2 * N))
    k1, p1 = string_product(kxy, StringKey(z, 2 * N))
    kyz, pyz = string_product(StringKey(y, 2 * N), StringKey(z, 2 * N))
    k2, p2 = string_product(StringKey(x, 2 * N), kyz)
    assert k1 == k2
    assert pxy * p1 == pyz * p2


@settings(max_examples=60, deadline=None)
@given(x=MASKS)
def test_adjoint_parity_matches_dense(x):
    dense = _dense_string(x)
    assert_allclose(dense.conj().T, adjoint_parity(StringKey(x, 2 * N).weight) * dense,
                    atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(x=MASKS)
def test_hermitize_yields_hermitian(x):
    _, phase = hermitize(StringKey(x, 2 * N))
    dense = phase * _dense_string(x)
    assert_allclose(dense, dense.conj().T, atol=1e-12)


def test_anticommutation_of_generators():
    for i in range(1, 2 * N + 1):
        for j in range(1, 2 * N + 1):
            gi, gj = to_dense(gamma(i, N)), to_dense(gamma(j, N))
            want = 2.0 * np.eye(2**N) if i == j else np.zeros((2**N, 2**N))
            assert_allclose(gi @ gj + gj @ gi, want, atol=1e-12)


def test_sparse_operator_algebra():
    op = gamma(1, 2) + 2.0 * gamma(3, 2)
    assert op.coefficient(0b001) == 1.0
    assert op.coefficient(0b100) == 2.0
    assert_allclose(to_dense(op @ op), to_dense(op) @ to_dense(op), atol=1e-12)
    assert_allclose(to_dense(op.adjoint()), to_dense(op).conj().T, atol=1e-12)
    assert (op - op).prune().terms == {}
    assert op.hs_norm() == pytest.approx(np.sqrt(5.0))


def test_prune_drops_float_dust():
    op = SparseOperator(2, {0b01: 1.0, 0b10: PRUNE_THRESHOLD / 10})
    assert set(op.prune().terms) == {0b01}


def test_majorana_weight():
    op = gamma(1, 3) + 1e-14 * from_indices((1, 2, 3, 4), 3)
    assert majorana_weight(op) == 1
    op = from_indices((2, 3, 5), 3)
    assert majorana_weight(op) == 3


def test_commutator_vanishes_iff_predicate():
    # gamma1 gamma2 commutes with gamma3 but not with gamma2
    a = from_indices((1, 2), 2)
    assert commutator(a, gamma(3, 2)).prune().terms == {}
    assert commutator(a, gamma(2, 2)).prune().terms != {}


def test_conjugate_by_givens_matches_expm():
    rng = np.random.default_rng(11)
    for _ in range(20):
        i, j = (int(v) for v in sorted(rng.choice(np.arange(1, 2 * N + 1), size=2,
                                                  replace=False)))
        theta = rng.uniform(0, 2 * np.pi)
        mask = int(rng.integers(1, 1 << (2 * N)))
        op = SparseOperator(N, {mask: complex(rng.normal(), rng.normal())})
        got = conjugate_by_givens(op, i, j, theta)
        gen = string_to_dense(StringKey((1 << (i - 1)) | (1 << (j - 1)), 2 * N))
        g = expm(theta * gen)
        assert_allclose(to_dense(got), g.conj().T @ to_dense(op) @ g, atol=1e-12)
        # rotations never change the weight of a string
        assert all(k.weight == StringKey(mask, 2 * N).weight
                   for k in got.prune().keys())


def test_conjugate_by_exp_string_frozen():
    # rotating gamma1 by the hermitized gamma1 gamma2 at s = pi/4 lands on gamma2
    out = conjugate_by_exp_string(gamma(1, 2), (1, 2), np.pi / 4).prune()
    assert {k.mask for k in out.keys()} == {0b10}
    assert out.coefficient(0b10) == pytest.approx(1.0)
    # commuting strings are fixed points
    out = conjugate_by_exp_string(gamma(1, 2), (2, 3), 0.37).prune()
    assert {k.mask for k in out.keys()} == {0b01}
    assert out.coefficient(0b01) == pytest.approx(1.0)


def test_conjugate_by_exp_string_matches_expm():
    rng = np.random.default_rng(4)
    for _ in range(20):
        size = int(rng.choice([1, 2, 3, 4]))
        support = tuple(
            int(v) for v in rng.choice(np.arange(1, 2 * N + 1), size=size, replace=False)
        )
        s = rng.uniform(0, 2 * np.pi)
        mask = int(rng.integers(1, 1 << (2 * N)))
        op = SparseOperator(N, {mask: complex(rng.normal(), rng.normal())})
        key = StringKey.from_indices(support, 2 * N)
        _, h = hermitize(key)
        v = expm(1j * s * h * string_to_dense(key))
        got = conjugate_by_exp_string(op, support, s)
        assert_allclose(to_dense(got), v @ to_dense(op) @ v.conj().T, atol=1e-12)


def test_dense_cap_guard(monkeypatch):
    assert dense_qubit_cap() == 10
    monkeypatch.setenv("FERROLEARN_DENSE_CAP", "4")
    assert dense_qubit_cap() == 4
    with pytest.raises(ValueError, match="dense"):
        check_dense_cap(5, "test op")
    check_dense_cap(4, "test op")
