"""Error-budget constants, decoupling measurements, and certificates."""

import csv
import io
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ferrolearn import diagnostics, learner
from ferrolearn.dense_sim import choi_of_unitary, exp_majorana
from ferrolearn.instances import random_instance


def test_count_strings_frozen():
    # even-plus-odd strings of weight 2..w on 2n generators
    assert diagnostics.count_strings(2, 4) == 11
    assert diagnostics.count_strings(1, 2) == 1
    assert diagnostics.count_strings(3, 5) == sum(math.comb(6, k) for k in range(2, 6))


def test_t1_factor():
    n, w = 3, 5
    want = math.sqrt(5.0) * diagnostics.count_strings(n, w) + 2 * n + 1
    assert diagnostics.t1_factor(n, w) == pytest.approx(want)


def test_constants_frozen():
    assert diagnostics.c3_constant(4) == 102760448.0
    assert diagnostics.c0_constant(2) == 52.0
    # the diamond constant is the projection constant dressed with the
    # reconstruction-to-trace-norm conversion
    assert diagnostics.c3_constant(2) == pytest.approx(
        (2 / 2) * diagnostics.c0_constant(2) * 2**8
    )


def test_t2_composition():
    n, t, kappa = 3, 1, 4
    w = (kappa + 1) ** t
    t1 = diagnostics.t1_factor(n, w)
    c3 = diagnostics.c3_constant(2 ** (kappa * t // 2))
    assert diagnostics.t2_factor(n, t, kappa, "fermionic") == pytest.approx(
        3 * n * n * t1 + c3
    )
    assert diagnostics.t2_factor(n, t, kappa, "qubit") == pytest.approx(
        n * (2 * n + 3) * t1 + c3
    )


def test_error_budget_populates_chain():
    budget = diagnostics.error_budget(3, 1, 4, "fermionic", e1_norm=1e-4, epsilon2=1e-3)
    assert budget.m == 2 and budget.w == 5 and budget.d0 == 4
    assert budget.epsilon0_bound == pytest.approx(budget.t1 * math.sqrt(1e-4))
    assert budget.pauli_bound == pytest.approx(3 * 3 * budget.epsilon0_bound)
    assert budget.choi_spectral_bound == pytest.approx(4**6 * 1e-3)
    assert budget.epsilon1 == pytest.approx(4**8 * 1e-3)
    assert budget.projection_bound == pytest.approx(
        (3 * 4**4 + 4**2) * budget.epsilon1
    )


def test_majorana_commutator_norms_on_decoupled_unitary():
    n, cut = 2, 2
    w = exp_majorana((1, 2), 0.4, n) @ exp_majorana((1, 2), 0.9, n)
    norms = diagnostics.majorana_commutator_norms(w, cut)
    assert norms.shape == (2 * n - cut,)
    assert norms.max() < 1e-12


def test_pauli_decoupling_zero_on_product():
    rng = np.random.default_rng(1)
    a, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    core = np.kron(a, np.eye(4))
    assert diagnostics.pauli_decoupling(core, 1) < 1e-12
    # a gate on register B is maximally detected
    core = np.kron(np.eye(2), np.kron(a, np.eye(2)))
    assert diagnostics.pauli_decoupling(core, 1) > 0.1


def test_singular_tail_deviation():
    sigma = np.array([0.2, 0.9, 1.0 + 3e-9, 1.0])
    assert diagnostics.singular_tail_deviation(sigma, 2) == pytest.approx(3e-9)
    assert diagnostics.singular_tail_deviation(sigma, 4) == 0.0


def test_trace_norm_frozen():
    assert diagnostics.trace_norm(np.diag([3.0, -4.0])) == pytest.approx(7.0)


def test_diamond_bound_extremes():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    j_i = choi_of_unitary(np.eye(2, dtype=complex))
    j_x = choi_of_unitary(x)
    assert diagnostics.diamond_bound(j_i, j_i) == pytest.approx(0.0, abs=1e-14)
    # orthogonal maximally-entangled states: bound saturates at 2
    assert diagnostics.diamond_bound(j_i, j_x) == pytest.approx(2.0, abs=1e-12)


def test_certify_exact_run():
    spec = random_instance(3, 1, 4, "fermionic", seed=20)
    res = learner.run_pipeline(spec, mode="exact")
    rows = diagnostics.certify(res)
    assert [r.name for r in rows] == [
        "sv_tail_deviation",
        "generator_decoupling",
        "pauli_decoupling",
        "choi_vs_reduced",
        "projection_move",
        "diamond_bound",
    ]
    assert all(r.passed for r in rows)


def test_certify_sampled_run_reports_budget_rows():
    spec = random_instance(2, 1, 2, "qubit", seed=20)
    res = learner.run_pipeline(spec, mode="sampled", epsilon=0.2, delta=0.2, seed=77)
    rows = diagnostics.certify(res)
    names = [r.name for r in rows]
    assert "c_entry_error" in names and "f_entry_error" in names
    assert all(r.passed for r in rows)


def test_certificates_csv_round_trip():
    rows = [
        diagnostics.CertificateRow("alpha", 1e-12, 1e-9),
        diagnostics.CertificateRow("beta", 2.0, 1.0),
    ]
    text = diagnostics.certificates_csv(rows)
    parsed = list(csv.reader(io.StringIO(text)))
    assert parsed[0] == ["name", "measured", "bound", "pass"]
    assert parsed[1][0] == "alpha" and parsed[1][3] == "True"
    assert parsed[2][0] == "beta" and parsed[2][3] == "False"
    assert not rows[1].passed
