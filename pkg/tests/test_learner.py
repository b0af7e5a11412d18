"""Two-stage learner: correctors, core compensation, channel reconstruction,
CPTP projection, Stinespring dilation, and the assembled description."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ferrolearn import learner, oracle
from ferrolearn.dense_sim import (
    ChoiMatrix,
    all_majoranas,
    choi_of_unitary,
    exp_majorana,
    gaussian_unitary,
)
from ferrolearn.instances import assemble, random_instance


def _exact_run(n, t, kappa, path, seed):
    spec = random_instance(n, t, kappa, path, seed=seed)
    return learner.run_pipeline(spec, mode="exact")


def test_corrector_stage_orders_and_decouples():
    spec = random_instance(3, 1, 4, "fermionic", seed=1)
    u = assemble(spec)
    c = oracle.c1_matrix(u)
    res = learner.corrector_stage(c, spec.path)
    assert np.all(np.diff(res.sigma) >= -1e-12)  # ascending
    assert_allclose(res.o_a @ res.o_a.T, np.eye(6), atol=1e-10)
    assert_allclose(res.o_b @ res.o_b.T, np.eye(6), atol=1e-10)
    # reordered SVD triple still reproduces the correlation matrix
    assert_allclose(res.o_b @ c @ res.o_a, np.diag(res.sigma), atol=1e-9)
    assert np.linalg.det(res.o_a) == pytest.approx(1.0)
    assert np.linalg.det(res.o_b) == pytest.approx(1.0)


def test_qubit_path_skips_special_fixup():
    spec = random_instance(3, 1, 4, "qubit", seed=2)
    res = learner.corrector_stage(oracle.c1_matrix(assemble(spec)), "qubit")
    assert res.so_fixup_applied == (False, False)


def test_apply_correctors_decouples_far_generators():
    spec = random_instance(3, 1, 4, "fermionic", seed=5)
    u = assemble(spec)
    res = learner.corrector_stage(oracle.c1_matrix(u), spec.path)
    w = learner.apply_correctors(u, res)
    gams = all_majoranas(3)
    for g in gams[spec.M:]:
        assert np.linalg.norm(w @ g - g @ w, 2) < 1e-7


def test_parity_sign_frozen():
    assert [learner.parity_sign(a) for a in range(8)] == [1, 1, -1, -1, 1, 1, -1, -1]


def test_weight_sign_diagonal_frozen():
    d = learner.weight_sign_diagonal(2, 1)
    assert_allclose(np.diag(d), [1, 1, 1, -1])
    # involutive signed diagonal on any split
    d = learner.weight_sign_diagonal(3, 2)
    assert_allclose(d @ d, np.eye(8), atol=0)
    assert set(np.unique(np.diag(d))) <= {-1.0, 1.0}


def test_reduced_channel_of_product_unitary():
    rng = np.random.default_rng(3)
    a, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    s = np.kron(a, np.eye(4))
    j = learner.reduced_channel(s, 1)
    assert_allclose(j.data, choi_of_unitary(a).data, atol=1e-12)


def test_reconstruct_choi_inverts_f_matrix():
    rng = np.random.default_rng(8)
    s, _ = np.linalg.qr(rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8)))
    for m in (1, 2):
        f = oracle.f_matrix(s, m)
        got = learner.reconstruct_choi(f, m)
        want = learner.reduced_channel(s, m)
        assert np.linalg.norm(got.data - want.data, 2) < 1e-12


def test_reconstruct_choi_shape_guard():
    with pytest.raises(ValueError):
        learner.reconstruct_choi(np.eye(3), 1)


def test_mixing_weight():
    assert learner.mixing_weight(-0.1, 2) == pytest.approx(2.0 / 7.0)
    assert learner.mixing_weight(0.0, 2) == 0.0
    assert learner.mixing_weight(1e-3, 4) == 0.0


def test_project_cptp_fixes_perturbed_choi():
    rng = np.random.default_rng(21)
    a, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    j = choi_of_unitary(a)
    noise = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    noise = (noise + noise.conj().T) / 2
    noisy = ChoiMatrix(2, j.data + 1e-3 * noise / np.linalg.norm(noise))
    res = learner.project_cptp(noisy)
    assert res.choi.min_eigenvalue() >= -1e-12
    assert_allclose(res.choi.output_trace(), np.eye(4) / 4.0, atol=1e-10)
    assert 0.0 <= res.mixing_weight < 1.0


def test_project_cptp_noop_on_cptp_input():
    rng = np.random.default_rng(22)
    a, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    j = choi_of_unitary(a)
    res = learner.project_cptp(j)
    eigs = np.linalg.eigvalsh(res.choi.data - j.data)
    assert np.abs(eigs).sum() < 1e-9
    # float-level negativity of the exact Choi may trigger a vanishing mix
    assert res.mixing_weight < 1e-12


def test_kraus_round_trip():
    rng = np.random.default_rng(13)
    us = []
    for _ in range(3):
        u, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        us.append(u)
    # uniform mixture of three unitary channels
    data = sum(choi_of_unitary(u).data for u in us) / 3.0
    j = ChoiMatrix(2, data)
    kraus = learner.kraus_from_choi(j)
    comp = sum(k.conj().T @ k for k in kraus)
    assert_allclose(comp, np.eye(4), atol=1e-10)
    rebuilt = sum(np.outer(k.reshape(-1), k.reshape(-1).conj()) for k in kraus) / 4.0
    assert_allclose(rebuilt, j.data, atol=1e-10)


def test_stinespring_isometry_and_recovery():
    rng = np.random.default_rng(14)
    u, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    j = learner.project_cptp(choi_of_unitary(u)).choi
    v = learner.stinespring(j)
    d0 = 4
    assert v.shape == (d0**3, d0**3)
    assert_allclose(v.conj().T @ v, np.eye(d0**3), atol=1e-9)
    kraus = learner.kraus_from_stinespring(v, 2)
    rebuilt = sum(np.outer(k.reshape(-1), k.reshape(-1).conj()) for k in kraus) / d0
    assert np.linalg.norm(rebuilt - j.data, 2) < 1e-9


def test_description_serialization_round_trip():
    res = _exact_run(3, 1, 4, "qubit", seed=6)
    text = learner.serialize_description(res.description)
    again = learner.deserialize_description(text)
    assert again.path == res.description.path
    assert (again.n, again.m) == (res.description.n, res.description.m)
    assert again.uses_weight_diagonal == res.description.uses_weight_diagonal
    assert_allclose(again.o_a, res.description.o_a, atol=0)
    assert_allclose(again.o_b, res.description.o_b, atol=0)
    assert_allclose(again.v_s, res.description.v_s, atol=0)
    j1 = learner.learned_choi(again)
    j2 = learner.learned_choi(res.description)
    assert np.linalg.norm(j1.data - j2.data, 2) < 1e-12


def test_description_version_guard():
    res = _exact_run(2, 1, 2, "fermionic", seed=3)
    text = learner.serialize_description(res.description)
    with pytest.raises(ValueError, match="version"):
        learner.deserialize_description(text.replace('"version": 1', '"version": 9'))


def test_learned_channel_matches_target():
    for path in ("fermionic", "qubit"):
        res = _exact_run(3, 1, 4, path, seed=11)
        j_true = choi_of_unitary(res.u_t)
        j_learned = learner.learned_choi(res.description)
        assert np.linalg.norm(j_true.data - j_learned.data, 2) < 1e-8


def test_run_pipeline_guards():
    spec = random_instance(2, 1, 2, "fermionic", seed=0)
    with pytest.raises(ValueError):
        learner.run_pipeline(spec, mode="nope")
    with pytest.raises(ValueError, match="seed"):
        learner.run_pipeline(spec, mode="sampled", seed=None)


def test_run_pipeline_handles_gaussian_only_instance():
    # t = 0 means M = 0: the reduced channel lives on zero qubits
    spec = random_instance(2, 0, 2, "fermionic", seed=1)
    res = learner.run_pipeline(spec, mode="exact")
    assert res.spec.m == 0
    assert res.projection.choi.data.shape == (1, 1)
    j_true = choi_of_unitary(res.u_t)
    j_learned = learner.learned_choi(res.description)
    assert np.linalg.norm(j_true.data - j_learned.data, 2) < 1e-8


def test_exactly_decoupled_core_is_product():
    # commutant generated by even strings on the first M generators: the core
    # factorizes as (top-left block) tensor identity
    n, M = 3, 4
    m = M // 2
    rng = np.random.default_rng(30)
    w = np.eye(2**n, dtype=complex)
    for sup in [(1, 2), (1, 2, 3, 4), (2, 3), (1, 4)]:
        w = w @ exp_majorana(sup, rng.uniform(0, 2 * np.pi), n)
    core = learner.compensated_unitary(w, m)
    blk = core.reshape(2**m, 2 ** (n - m), 2**m, 2 ** (n - m))
    a = blk[:, 0, :, 0]
    assert np.linalg.norm(core - np.kron(a, np.eye(2 ** (n - m))), 2) < 1e-12
