"""Tomography oracles for the two correlation data sets the learner consumes.

The first-stage data is the 2n x 2n generator correlation matrix

    c1[j, k] = (1/d) tr[U^dag gamma_k U gamma_j],

the second-stage data is the 4^m x 4^m Pauli correlation matrix

    f[alpha, beta] = (1/2^n) tr[S^dag (P_beta (x) I) S (P_alpha (x) I)],

for S the corrected unitary, with P ranging over the m-qubit Paulis in
lexicographic {I,X,Y,Z}^m order (first qubit most significant). Exact mode
evaluates the traces; sampled mode simulates the fair-coin measurement
scheme: each entry with ideal value v is estimated by N two-outcome
measurements, i.e. (2 Binomial(N, (1+v)/2) - N) / N, on an independent seed
substream per entry so results do not depend on evaluation order. Estimates
are not clamped to [-1, 1].

The shot-count calculators return exactly the advertised worst-case budgets
(natural log, rounded up); callers may pass any other count instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dense_sim import all_majoranas, num_qubits, partial_trace, pauli_basis
from .majorana_algebra import SparseOperator, StringKey, hermitize, to_dense

_TAG_C1 = 1
_TAG_F = 2

_REALITY_TOL = 1e-9


@dataclass(frozen=True)
class AccessMode:
    """How oracle entries are produced.

    kind is "exact" or "sampled"; sampled mode needs a seed and draws every
    entry from its own substream. shots_override, when set, replaces whatever
    per-entry shot count the caller supplies.
    """

    kind: str = "exact"
    seed: int | None = None
    shots_override: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("exact", "sampled"):
            raise ValueError(f"unknown access kind {self.kind!r}")
        if self.kind == "sampled":
            if self.seed is None:
                raise ValueError("sampled access needs a seed for reproducibility")
            if self.seed < 0:
                raise ValueError("seed must be non-negative")
        if self.shots_override is not None and self.shots_override < 1:
            raise ValueError("shots_override must be positive")


EXACT = AccessMode("exact")


def sampled(seed: int, shots_override: int | None = None) -> AccessMode:
    return AccessMode("sampled", seed=seed, shots_override=shots_override)


@dataclass(frozen=True)
class ShotBudget:
    epsilon: float
    delta: float
    per_state_copies: int


def _check_eps_delta(epsilon: float, delta: float) -> None:
    if not 0.0 < epsilon:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def budget_c_qubit(n: int, epsilon: float, delta: float) -> ShotBudget:
    """Copies per entry so the generator-correlation estimate is epsilon-close
    in max norm with probability 1-delta, qubit-path constant."""
    _check_eps_delta(epsilon, delta)
    count = (
        (1.0 + epsilon / (6.0 * n))
        * math.log(8.0 * n * n / delta)
        * 4.0 * n * n * (4.0 * n + 1.0)
        / epsilon**2
    )
    return ShotBudget(epsilon, delta, math.ceil(count))


def budget_c_fermionic(n: int, epsilon: float, delta: float) -> ShotBudget:
    """Fermionic-path variant; slightly larger polynomial factor."""
    _check_eps_delta(epsilon, delta)
    count = (
        (1.0 + epsilon / (6.0 * n))
        * math.log(8.0 * n * n / delta)
        * 4.0 * n * n * (4.0 * n + 3.0)
        / epsilon**2
    )
    return ShotBudget(epsilon, delta, math.ceil(count))


def budget_f_qubit(m: int, epsilon: float, delta: float) -> ShotBudget:
    """Copies per entry for the Pauli-correlation estimate on m qubits."""
    _check_eps_delta(epsilon, delta)
    if m < 0:
        raise ValueError("m must be non-negative")
    count = 68.0 * 3.0**m * math.log(2.0 ** (2 * m + 1) / delta) / epsilon**2
    return ShotBudget(epsilon, delta, math.ceil(count))


def budget_f_fermionic(m: int, epsilon: float, delta: float) -> ShotBudget:
    """Fermionic-path variant: parity-restricted probe states cost a constant
    factor more."""
    _check_eps_delta(epsilon, delta)
    if m < 0:
        raise ValueError("m must be non-negative")
    count = 68.0 * 3.0 ** (m + 2) * math.log(2.0 * 4.0 ** (2 * m) / delta) / epsilon**2
    return ShotBudget(epsilon, delta, math.ceil(count))


def _entry_stream(seed: int, tag: int, i: int, j: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(tag, i, j))
    return np.random.Generator(np.random.PCG64(ss))


def _sample_mean(value: float, shots: int, seed: int, tag: int, i: int, j: int) -> float:
    rng = _entry_stream(seed, tag, i, j)
    p = min(max((1.0 + value) / 2.0, 0.0), 1.0)
    hits = rng.binomial(shots, p)
    return 2.0 * hits / shots - 1.0


def _effective_shots(mode: AccessMode, shots: int | None) -> int:
    if mode.shots_override is not None:
        return mode.shots_override
    if shots is None:
        raise ValueError("sampled access needs a per-entry shot count")
    if shots < 1:
        raise ValueError("shot count must be positive")
    return shots


def c1_matrix(
    u: np.ndarray, mode: AccessMode = EXACT, shots: int | None = None
) -> np.ndarray:
    """Generator correlation matrix of conjugation by u; real (2n x 2n)."""
    n = num_qubits(u)
    two_n = 2 * n
    d = 2**n
    gammas = all_majoranas(n)
    udag = u.conj().T
    exact = np.empty((two_n, two_n))
    for k in range(two_n):
        a_k = udag @ gammas[k] @ u
        for j in range(two_n):
            val = np.einsum("ij,ji->", a_k, gammas[j]) / d
            if abs(val.imag) > _REALITY_TOL:
                raise ValueError(f"correlation entry ({j}, {k}) not real: {val}")
            exact[j, k] = val.real
    if mode.kind == "exact":
        return exact
    nshots = _effective_shots(mode, shots)
    out = np.empty_like(exact)
    for j in range(two_n):
        for k in range(two_n):
            out[j, k] = _sample_mean(exact[j, k], nshots, mode.seed, _TAG_C1, j, k)
    return out


def full_c_matrix(
    u: np.ndarray, max_weight: int | None = None
) -> tuple[list[StringKey], np.ndarray]:
    """Correlation rows against every Hermitian string of weight <= max_weight.

    Row x, column k holds (1/d) tr[u^dag gamma_k u g~_x] with g~_x the
    Hermitized string. Exact mode only; with max_weight=2n the columns are
    orthonormal in C^{4^n}.
    """
    n = num_qubits(u)
    two_n = 2 * n
    if max_weight is None:
        max_weight = two_n
    d = 2**n
    gammas = all_majoranas(n)
    udag = u.conj().T
    images = [udag @ gammas[k] @ u for k in range(two_n)]
    keys = [
        StringKey(mask, two_n)
        for mask in range(1 << two_n)
        if mask.bit_count() <= max_weight
    ]
    out = np.empty((len(keys), two_n), dtype=complex)
    for r, key in enumerate(keys):
        _, h = hermitize(key)
        g = h * to_dense(SparseOperator(n, {key.mask: 1.0 + 0.0j}))
        for k in range(two_n):
            out[r, k] = np.einsum("ij,ji->", images[k], g) / d
    return keys, out


def f_matrix(
    s: np.ndarray, m: int, mode: AccessMode = EXACT, shots: int | None = None
) -> np.ndarray:
    """Pauli correlation matrix of the corrected unitary s, restricted to the
    first m qubits; real (4^m x 4^m), entry [alpha, beta] pairing input Pauli
    alpha with output Pauli beta."""
    n = num_qubits(s)
    if not 0 <= m <= n:
        raise ValueError(f"m={m} outside 0..{n}")
    d = 2**n
    d_b = 2 ** (n - m)
    paulis = pauli_basis(m)
    count = 4**m
    sdag = s.conj().T
    exact = np.empty((count, count))
    eye_b = np.eye(d_b, dtype=complex)
    for beta in range(count):
        conj = sdag @ np.kron(paulis[beta], eye_b) @ s
        q_beta = partial_trace(conj, keep=range(m))
        for alpha in range(count):
            val = np.einsum("ij,ji->", q_beta, paulis[alpha]) / d
            if abs(val.imag) > _REALITY_TOL:
                raise ValueError(f"correlation entry ({alpha}, {beta}) not real: {val}")
            exact[alpha, beta] = val.real
    if mode.kind == "exact":
        return exact
    nshots = _effective_shots(mode, shots)
    out = np.empty_like(exact)
    for alpha in range(count):
        for beta in range(count):
            out[alpha, beta] = _sample_mean(
                exact[alpha, beta], nshots, mode.seed, _TAG_F, alpha, beta
            )
    return out
