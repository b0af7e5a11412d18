"""Two-stage learner for promise-form circuits.

Stage one fits Gaussian correctors G_a, G_b from the generator correlation
matrix: an SVD of c1 with singular values sorted ascending puts the
non-Gaussian action on the first M generators, and W = G_a^dag U G_b^dag then
(approximately) commutes with every gamma_i, i > M. On the fermionic path
the corrector actions are pushed into SO(2n) by determinant-conditional
sign flips, which leave the decoupled block untouched.

Stage two learns the compressed core as an m-qubit channel: estimate the
Pauli correlation matrix of W (qubit path: of the compensated unitary
Ubar_d W Ubar_d), rebuild the Choi matrix, project it onto the CPTP set,
and extract a Stinespring dilation V_S on 3m qubits. The learned channel is
G_a (V_S-channel (x) I_B) G_b, with the weight-sign compensator folded into
the Gaussian factors on the qubit path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import dense_sim, instances, oracle
from .dense_sim import ChoiMatrix, choi_from_kraus, gaussian_unitary, pauli_basis
from .majorana_algebra import adjoint_parity, check_dense_cap

_SV_SPLIT_TOL = 1e-12


@dataclass(eq=False)
class CorrectorResult:
    """Stage-one output.

    c_hat is the (possibly noisy) input matrix; u, sigma, v store its SVD
    with singular values ascending, so c_hat = u @ diag(sigma) @ v.T exactly
    up to float rounding. o_a and o_b are the corrector action matrices
    after any SO fixup; so_fixup_applied records the (a, b) flips.
    """

    c_hat: np.ndarray
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    o_a: np.ndarray
    o_b: np.ndarray
    so_fixup_applied: tuple[bool, bool]
    path: str


def corrector_stage(c_hat: np.ndarray, path: str) -> CorrectorResult:
    """Fit the Gaussian correctors from a generator correlation matrix."""
    if path not in instances.PATHS:
        raise ValueError(f"path must be one of {instances.PATHS}, got {path!r}")
    c_hat = np.asarray(c_hat, dtype=float)
    two_n = c_hat.shape[0]
    if c_hat.ndim != 2 or c_hat.shape != (two_n, two_n) or two_n % 2:
        raise ValueError(f"correlation matrix must be square even-dimensional, got {c_hat.shape}")
    u_desc, s_desc, vt_desc = np.linalg.svd(c_hat)
    u = np.ascontiguousarray(u_desc[:, ::-1])
    sigma = np.ascontiguousarray(s_desc[::-1])
    v = np.ascontiguousarray(vt_desc.T[:, ::-1])
    o_a = v.copy()
    o_b = u.T.copy()
    fix_a = fix_b = False
    if path == "fermionic":
        # push both actions into SO(2n); flips touch only generator 1
        if np.linalg.det(o_a) < 0:
            o_a[:, 0] *= -1.0
            fix_a = True
        if np.linalg.det(o_b) < 0:
            o_b[0, :] *= -1.0
            fix_b = True
    return CorrectorResult(
        c_hat=c_hat,
        u=u,
        sigma=sigma,
        v=v,
        o_a=o_a,
        o_b=o_b,
        so_fixup_applied=(fix_a, fix_b),
        path=path,
    )


def corrector_unitaries(result: CorrectorResult) -> tuple[np.ndarray, np.ndarray]:
    return gaussian_unitary(result.o_a), gaussian_unitary(result.o_b)


def apply_correctors(u_t: np.ndarray, result: CorrectorResult) -> np.ndarray:
    """W = G_a^dag U_t G_b^dag, the corrected unitary."""
    g_a, g_b = corrector_unitaries(result)
    return g_a.conj().T @ u_t @ g_b.conj().T


def parity_sign(alpha: int) -> int:
    """(-1)^{alpha(alpha-1)/2}: +1 for weight 0,1 mod 4 and -1 for 2,3 mod 4."""
    if alpha < 0:
        raise ValueError("weight must be non-negative")
    return adjoint_parity(alpha)


def weight_sign_diagonal(n: int, m: int) -> np.ndarray:
    """The compensator Ubar_d on n qubits: a +-1 diagonal, its own inverse.

    Product of two diagonals: one weighting every basis state by
    parity_sign(Hamming weight), one doing the same on the first m qubits
    only. Conjugating by it turns approximate generator decoupling beyond
    gamma_{2m} into approximate Pauli decoupling beyond qubit m.
    """
    if not 0 <= m <= n:
        raise ValueError(f"m={m} outside 0..{n}")
    check_dense_cap(n, "weight_sign_diagonal")
    d = 2**n
    diag = np.empty(d)
    shift = n - m
    for x in range(d):
        diag[x] = parity_sign(x.bit_count()) * parity_sign((x >> shift).bit_count())
    return np.diag(diag).astype(complex)


def compensated_unitary(w: np.ndarray, m: int) -> np.ndarray:
    """Ubar_d^dag W Ubar_d; Ubar_d is involutive so the adjoint is itself."""
    n = dense_sim.num_qubits(w)
    ubar = weight_sign_diagonal(n, m)
    return ubar @ w @ ubar


def reduced_channel(s: np.ndarray, m: int) -> ChoiMatrix:
    """Choi matrix of the m-qubit channel obtained from the unitary s by
    feeding register B the maximally mixed state and tracing it out.

    Kraus operators are the (z, x)-indexed blocks of s / sqrt(d_B); this is
    the ground-truth counterpart of the tomographic reconstruction.
    """
    n = dense_sim.num_qubits(s)
    if not 0 <= m <= n:
        raise ValueError(f"m={m} outside 0..{n}")
    d_a, d_b = 2**m, 2 ** (n - m)
    t = s.reshape(d_a, d_b, d_a, d_b)
    kraus = [
        t[:, z, :, x] / math.sqrt(d_b) for z in range(d_b) for x in range(d_b)
    ]
    return choi_from_kraus(kraus)


def reconstruct_choi(f_hat: np.ndarray, m: int) -> ChoiMatrix:
    """Choi matrix from a (possibly noisy) Pauli correlation matrix.

    J = (1/d0^2) sum_{alpha,beta} f[alpha,beta] P_beta (x) P_alpha^T, the
    inverse of f[alpha,beta] = (1/d0) tr[E(P_alpha) P_beta]. Exact input
    reproduces the reduced channel exactly; noisy input lands within
    d0^6 * max-entry-error in spectral norm.
    """
    count = 4**m
    f_hat = np.asarray(f_hat, dtype=float)
    if f_hat.shape != (count, count):
        raise ValueError(f"expected {(count, count)} correlation matrix, got {f_hat.shape}")
    d0 = 2**m
    paulis = pauli_basis(m)
    data = np.zeros((d0 * d0, d0 * d0), dtype=complex)
    for alpha in range(count):
        pa_t = paulis[alpha].T
        for beta in range(count):
            if f_hat[alpha, beta] == 0.0:
                continue
            data += f_hat[alpha, beta] * np.kron(paulis[beta], pa_t)
    return ChoiMatrix(m, data / (d0 * d0))


@dataclass(eq=False)
class ProjectionResult:
    """CPTP projection record: J1 clips negative eigenvalues, J2 restores the
    trace-preserving marginal, and J_p mixes with the maximally mixed Choi
    just enough to clear the smallest eigenvalue (mixing_weight 0 if none)."""

    choi: ChoiMatrix
    j1: np.ndarray
    j2: np.ndarray
    lambda_min: float
    mixing_weight: float


def mixing_weight(lambda_min: float, d0: int) -> float:
    """Depolarizing weight that zeroes the smallest eigenvalue:
    (1 - p) lambda_min + p / d0^2 = 0."""
    if lambda_min >= 0.0:
        return 0.0
    return -lambda_min / (1.0 / d0**2 - lambda_min)


def project_cptp(j: ChoiMatrix) -> ProjectionResult:
    """Project a reconstructed Choi matrix onto the CPTP set.

    CPTP inputs move only by float rounding; for inputs epsilon_1-close to a
    CPTP point the output stays within (3 d0^4 + d0^2) epsilon_1 in trace
    norm.
    """
    d0 = j.d0
    herm = 0.5 * (j.data + j.data.conj().T)
    vals, vecs = np.linalg.eigh(herm)
    j1 = (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T
    marginal = ChoiMatrix(j.m, j1).output_trace()
    defect = marginal - np.eye(d0) / d0
    j2 = j1 - np.kron(np.eye(d0) / d0, defect)
    lam_min = float(np.linalg.eigvalsh(j2)[0])
    p = mixing_weight(lam_min, d0)
    if p > 0.0:
        jp = (1.0 - p) * j2 + (p / d0**2) * np.eye(d0 * d0)
    else:
        jp = j2
    return ProjectionResult(
        choi=ChoiMatrix(j.m, jp), j1=j1, j2=j2, lambda_min=lam_min, mixing_weight=p
    )


def kraus_from_choi(j: ChoiMatrix, drop_tol: float = 1e-12) -> list[np.ndarray]:
    """Kraus operators of a CP Choi matrix, largest weight first."""
    d0 = j.d0
    vals, vecs = np.linalg.eigh(0.5 * (j.data + j.data.conj().T))
    order = np.argsort(vals)[::-1]
    out = []
    for idx in order:
        lam = float(vals[idx])
        if lam <= drop_tol:
            break
        out.append(math.sqrt(d0 * lam) * vecs[:, idx].reshape(d0, d0))
    if not out:
        raise ValueError("Choi matrix has no weight above the drop tolerance")
    return out


def _complete_isometry(iso: np.ndarray, positions: list[int], dim: int) -> np.ndarray:
    """Unitary with iso's columns at the given positions, deterministically
    completed from canonical basis vectors by repeated Gram-Schmidt."""
    out = np.zeros((dim, dim), dtype=complex)
    basis: list[np.ndarray] = []

    def _orthonormalize(vec: np.ndarray) -> np.ndarray | None:
        for _ in range(2):  # reorthogonalize to keep 1e-15-level drift out
            for b in basis:
                vec = vec - b * (b.conj() @ vec)
        norm = np.linalg.norm(vec)
        if norm < 1e-6:
            return None
        return vec / norm

    for col, pos in enumerate(positions):
        vec = _orthonormalize(iso[:, col].astype(complex))
        if vec is None:
            raise ValueError("isometry columns are not independent")
        basis.append(vec)
        out[:, pos] = vec
    free = [c for c in range(dim) if c not in set(positions)]
    cursor = 0
    for pos in free:
        while cursor < dim:
            cand = np.zeros(dim, dtype=complex)
            cand[cursor] = 1.0
            cursor += 1
            vec = _orthonormalize(cand)
            if vec is not None:
                basis.append(vec)
                out[:, pos] = vec
                break
        else:
            raise ValueError("failed to complete the isometry")
    return out


def stinespring(j_p: ChoiMatrix, drop_tol: float = 1e-12) -> np.ndarray:
    """Unitary Stinespring dilation V_S of a CPTP Choi matrix.

    Acts on 3m qubits: the m-qubit system register first, then a 2m-qubit
    environment prepared in |0>. Column (i, 0) holds sum_{a,e} K_e[a,i]
    |a, e>; the remaining columns are a canonical orthonormal completion, so
    the construction is deterministic.
    """
    d0 = j_p.d0
    d_env = d0 * d0
    dim = d0 * d_env
    kraus = kraus_from_choi(j_p, drop_tol)
    if len(kraus) > d_env:
        raise ValueError(f"{len(kraus)} Kraus operators exceed environment dim {d_env}")
    block = np.zeros((d0, d_env, d0), dtype=complex)
    for e, k in enumerate(kraus):
        block[:, e, :] = k
    iso = block.reshape(dim, d0)
    positions = [i * d_env for i in range(d0)]
    return _complete_isometry(iso, positions, dim)


def kraus_from_stinespring(v_s: np.ndarray, m: int) -> list[np.ndarray]:
    """Invert the stinespring layout: K_e[a, i] = V_S[(a, e), (i, 0)]."""
    d0 = 2**m
    d_env = d0 * d0
    block = v_s.reshape(d0, d_env, d0, d_env)
    out = []
    for e in range(d_env):
        k = np.ascontiguousarray(block[:, e, :, 0])
        if np.linalg.norm(k) > 1e-12:
            out.append(k)
    return out


@dataclass(eq=False)
class LearnedDescription:
    """Everything needed to run the learned channel.

    o_a, o_b are the corrector actions (their unitaries are resynthesized on
    demand), v_s the Stinespring dilation of the learned core, and
    uses_weight_diagonal says whether the Ubar_d compensator is folded
    around the core (qubit path).
    """

    path: str
    n: int
    m: int
    o_a: np.ndarray
    o_b: np.ndarray
    v_s: np.ndarray
    uses_weight_diagonal: bool


def assemble_learned(result: CorrectorResult, v_s: np.ndarray, n: int, m: int) -> LearnedDescription:
    return LearnedDescription(
        path=result.path,
        n=n,
        m=m,
        o_a=result.o_a.copy(),
        o_b=result.o_b.copy(),
        v_s=v_s.copy(),
        uses_weight_diagonal=result.path == "qubit",
    )


def learned_kraus(desc: LearnedDescription) -> list[np.ndarray]:
    """Kraus operators of the learned n-qubit channel."""
    g_a = gaussian_unitary(desc.o_a)
    g_b = gaussian_unitary(desc.o_b)
    if desc.uses_weight_diagonal:
        ubar = weight_sign_diagonal(desc.n, desc.m)
        g_a = g_a @ ubar
        g_b = ubar @ g_b
    d_b = 2 ** (desc.n - desc.m)
    eye_b = np.eye(d_b, dtype=complex)
    return [
        g_a @ np.kron(k, eye_b) @ g_b
        for k in kraus_from_stinespring(desc.v_s, desc.m)
    ]


def learned_choi(desc: LearnedDescription) -> ChoiMatrix:
    """Choi matrix of the learned channel on all n qubits (dense; capped)."""
    check_dense_cap(2 * desc.n, "learned_choi")
    return choi_from_kraus(learned_kraus(desc))


# -- learned-description serialization ------------------------------------

_DESC_VERSION = 1


def _complex_to_pairs(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def _pairs_to_complex(rows: list) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def serialize_description(desc: LearnedDescription, diagnostics: dict | None = None) -> str:
    doc = {
        "version": _DESC_VERSION,
        "path": desc.path,
        "n": desc.n,
        "m": desc.m,
        "uses_weight_diagonal": desc.uses_weight_diagonal,
        "o_a": np.asarray(desc.o_a).tolist(),
        "o_b": np.asarray(desc.o_b).tolist(),
        "v_s": _complex_to_pairs(np.asarray(desc.v_s)),
    }
    if diagnostics is not None:
        doc["diagnostics"] = diagnostics
    return json.dumps(doc, indent=2)


def deserialize_description(text: str) -> LearnedDescription:
    doc = json.loads(text)
    version = doc.get("version")
    if version != _DESC_VERSION:
        raise ValueError(
            f"unsupported description schema version {version!r} (expected {_DESC_VERSION})"
        )
    for key in ("path", "n", "m", "uses_weight_diagonal", "o_a", "o_b", "v_s"):
        if key not in doc:
            raise ValueError(f"description missing key {key!r}")
    return LearnedDescription(
        path=str(doc["path"]),
        n=int(doc["n"]),
        m=int(doc["m"]),
        o_a=np.asarray(doc["o_a"], dtype=float),
        o_b=np.asarray(doc["o_b"], dtype=float),
        v_s=_pairs_to_complex(doc["v_s"]),
        uses_weight_diagonal=bool(doc["uses_weight_diagonal"]),
    )


# -- end-to-end pipeline ---------------------------------------------------


@dataclass(eq=False)
class LearnResult:
    """Full record of one learning run."""

    spec: instances.CircuitSpec
    u_t: np.ndarray
    c_hat: np.ndarray
    correctors: CorrectorResult
    w: np.ndarray
    core: np.ndarray  # W on the fermionic path, Ubar_d W Ubar_d on the qubit path
    f_hat: np.ndarray
    choi_raw: ChoiMatrix
    projection: ProjectionResult
    v_s: np.ndarray
    description: LearnedDescription
    budget_c: oracle.ShotBudget | None = None
    budget_f: oracle.ShotBudget | None = None


def run_pipeline(
    spec: instances.CircuitSpec,
    mode: str = "exact",
    epsilon: float = 0.05,
    delta: float = 0.1,
    seed: int | None = None,
) -> LearnResult:
    """Run both learner stages against a promise instance.

    In sampled mode the two stages get the advertised split of the accuracy
    and failure budgets: the generator correlations are estimated to
    epsilon^2 and the Pauli correlations to epsilon, each at delta/2, which
    is what the end-to-end diamond guarantee composes from.
    """
    if mode not in ("exact", "sampled"):
        raise ValueError(f"mode must be 'exact' or 'sampled', got {mode!r}")
    problems = instances.validate(spec)
    if problems:
        raise ValueError("invalid instance: " + "; ".join(problems))
    n, m, path = spec.n, spec.m, spec.path
    u_t = instances.assemble(spec)

    budget_c = budget_f = None
    if mode == "exact":
        access_c = access_f = oracle.EXACT
        shots_c = shots_f = None
    else:
        if seed is None:
            raise ValueError("sampled mode needs a seed")
        if path == "fermionic":
            budget_c = oracle.budget_c_fermionic(n, epsilon**2, delta / 2.0)
            budget_f = oracle.budget_f_fermionic(m, epsilon, delta / 2.0)
        else:
            budget_c = oracle.budget_c_qubit(n, epsilon**2, delta / 2.0)
            budget_f = oracle.budget_f_qubit(m, epsilon, delta / 2.0)
        access_c = oracle.sampled(seed)
        access_f = oracle.sampled(seed + 1)
        shots_c = budget_c.per_state_copies
        shots_f = budget_f.per_state_copies

    c_hat = oracle.c1_matrix(u_t, access_c, shots=shots_c)
    correctors = corrector_stage(c_hat, path)
    w = apply_correctors(u_t, correctors)
    core = compensated_unitary(w, m) if path == "qubit" else w

    f_hat = oracle.f_matrix(core, m, access_f, shots=shots_f)
    choi_raw = reconstruct_choi(f_hat, m)
    projection = project_cptp(choi_raw)
    v_s = stinespring(projection.choi)
    description = assemble_learned(correctors, v_s, n, m)
    return LearnResult(
        spec=spec,
        u_t=u_t,
        c_hat=c_hat,
        correctors=correctors,
        w=w,
        core=core,
        f_hat=f_hat,
        choi_raw=choi_raw,
        projection=projection,
        v_s=v_s,
        description=description,
        budget_c=budget_c,
        budget_f=budget_f,
    )
