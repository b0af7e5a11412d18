"""Certified error budgets and measured diagnostics for learning runs.

Two kinds of numbers live here and are kept strictly apart in the output
rows: *measured* quantities computed from the simulated run, and *bounds*
that the theory guarantees for them. A certificate row passes when the
measurement sits inside its bound. Exact-mode rows certify against float
tolerances; sampled-mode rows certify against the worst-case analysis at
the requested accuracy.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import dense_sim, instances, learner, oracle
from .dense_sim import ChoiMatrix
from .majorana_algebra import dense_qubit_cap

# exact-mode float tolerances, matching the advertised acceptance gates
EXACT_TOLS = {
    "sv_tail_deviation": 1e-9,
    "generator_decoupling": 1e-7,
    "pauli_decoupling": 1e-6,
    "choi_vs_reduced": 1e-9,
    "projection_move": 1e-9,
    "diamond_bound": 1e-6,
}


def count_strings(n: int, w: int) -> int:
    """Number of generator strings with weight between 2 and min(w, 2n)."""
    if n < 1 or w < 0:
        raise ValueError("need n >= 1 and w >= 0")
    return sum(math.comb(2 * n, k) for k in range(2, min(w, 2 * n) + 1))


def t1_factor(n: int, w: int) -> float:
    """Constant converting sqrt(entry error of c1) into generator decoupling:
    sqrt(5) * count_strings(n, w) + 2n + 1."""
    return math.sqrt(5.0) * count_strings(n, w) + 2.0 * n + 1.0


def c0_constant(d0: int) -> float:
    """Trace-norm cost of the CPTP projection: 3 d0^4 + d0^2."""
    return 3.0 * d0**4 + d0**2


def c3_constant(d0: int) -> float:
    """Diamond-norm cost of tomography plus projection: d0^11 (3 d0^2 + 1) / 2."""
    return d0**11 * (3.0 * d0**2 + 1.0) / 2.0


def t2_factor(n: int, t: int, kappa: int, path: str) -> float:
    """End-to-end diamond constant: running stage one at accuracy epsilon^2
    and stage two at epsilon yields diamond error at most t2_factor * epsilon."""
    if path not in instances.PATHS:
        raise ValueError(f"path must be one of {instances.PATHS}, got {path!r}")
    w = (kappa + 1) ** t
    m = (kappa * t) // 2
    d0 = 2**m
    t1 = t1_factor(n, w)
    if path == "qubit":
        return n * (2.0 * n + 3.0) * t1 + c3_constant(d0)
    return 3.0 * n * n * t1 + c3_constant(d0)


@dataclass(frozen=True)
class ErrorBudget:
    """Every constant in the error chain for one instance shape, plus the
    derived stage bounds when accuracy inputs are supplied."""

    n: int
    t: int
    kappa: int
    path: str
    m: int
    w: int
    d0: int
    string_count: int
    t1: float
    c0: float
    c3: float
    t2: float
    e1_norm: float | None = None  # max-entry error of the c1 estimate
    epsilon0_bound: float | None = None  # t1 * sqrt(e1_norm)
    pauli_bound: float | None = None  # path-dependent multiple of epsilon0
    epsilon2: float | None = None  # max-entry error of the f estimate
    choi_spectral_bound: float | None = None  # d0^6 * epsilon2
    epsilon1: float | None = None  # d0^8 * epsilon2, Frobenius-level
    projection_bound: float | None = None  # c0 * epsilon1, trace-norm-level


def error_budget(
    n: int,
    t: int,
    kappa: int,
    path: str,
    e1_norm: float | None = None,
    epsilon2: float | None = None,
) -> ErrorBudget:
    if path not in instances.PATHS:
        raise ValueError(f"path must be one of {instances.PATHS}, got {path!r}")
    w = (kappa + 1) ** t
    m = (kappa * t) // 2
    d0 = 2**m
    t_count = count_strings(n, w)
    t1 = t1_factor(n, w)
    eps0 = pauli = None
    if e1_norm is not None:
        eps0 = t1 * math.sqrt(e1_norm)
        pauli = (2.0 * n + 3.0) * eps0 if path == "qubit" else 3.0 * n * eps0
    spec_b = eps1 = proj = None
    if epsilon2 is not None:
        spec_b = d0**6 * epsilon2
        eps1 = d0**8 * epsilon2
        proj = c0_constant(d0) * eps1
    return ErrorBudget(
        n=n,
        t=t,
        kappa=kappa,
        path=path,
        m=m,
        w=w,
        d0=d0,
        string_count=t_count,
        t1=t1,
        c0=c0_constant(d0),
        c3=c3_constant(d0),
        t2=t2_factor(n, t, kappa, path),
        e1_norm=e1_norm,
        epsilon0_bound=eps0,
        pauli_bound=pauli,
        epsilon2=epsilon2,
        choi_spectral_bound=spec_b,
        epsilon1=eps1,
        projection_bound=proj,
    )


# -- measured quantities ---------------------------------------------------


def majorana_commutator_norms(w: np.ndarray, cut: int) -> np.ndarray:
    """Spectral norms ||[w, gamma_i]|| for every generator i > cut."""
    n = dense_sim.num_qubits(w)
    out = []
    for i in range(cut + 1, 2 * n + 1):
        g = dense_sim.jw_majorana(i, n)
        out.append(np.linalg.norm(w @ g - g @ w, 2))
    return np.array(out)


def pauli_decoupling(core: np.ndarray, m: int) -> float:
    """max over qubits q > m of (1/2) sum_{P in X,Y,Z} ||[core, P_q]||."""
    n = dense_sim.num_qubits(core)
    worst = 0.0
    for q in range(m, n):
        total = 0.0
        for digit in (1, 2, 3):
            p = dense_sim.pauli_tensor(digit * 4 ** (n - 1 - q), n)
            total += np.linalg.norm(core @ p - p @ core, 2)
        worst = max(worst, 0.5 * total)
    return worst


def singular_tail_deviation(sigma: np.ndarray, cut: int) -> float:
    """max |sigma_i - 1| over the trailing 2n - cut singular values
    (ascending order)."""
    tail = np.asarray(sigma)[cut:]
    if tail.size == 0:
        return 0.0
    return float(np.abs(tail - 1.0).max())


def trace_norm(a: np.ndarray) -> float:
    return float(np.linalg.svd(a, compute_uv=False).sum())


def diamond_bound(j1: ChoiMatrix, j2: ChoiMatrix) -> float:
    """Certified upper bound (d0/2) ||J1 - J2||_1 on the diamond distance."""
    if j1.m != j2.m:
        raise ValueError(f"comparing channels on {j1.m} and {j2.m} qubits")
    return 0.5 * j1.d0 * trace_norm(j1.data - j2.data)


# -- certificates -----------------------------------------------------------


@dataclass(frozen=True)
class CertificateRow:
    name: str
    measured: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.measured <= self.bound


def certify(result: learner.LearnResult) -> list[CertificateRow]:
    """Certificate table for a finished run.

    Exact-mode bounds are the float tolerances in EXACT_TOLS; sampled-mode
    bounds come from the worst-case chain at the requested accuracies (which
    hold with the advertised probability, so a rare honest failure is
    expected at rate delta).
    """
    spec = result.spec
    n, m, cut, path = spec.n, spec.m, spec.M, spec.path
    sampled = result.budget_c is not None
    rows: list[CertificateRow] = []

    sv_dev = singular_tail_deviation(result.correctors.sigma, cut)
    eps0 = float(majorana_commutator_norms(result.w, cut).max()) if cut < 2 * n else 0.0
    pauli = pauli_decoupling(result.core, m)
    j_reduced = learner.reduced_channel(result.core, m)
    recon_err = float(
        np.linalg.norm(result.choi_raw.data - j_reduced.data, 2)
    )
    proj_move = trace_norm(result.projection.choi.data - result.choi_raw.data)

    if not sampled:
        rows.append(CertificateRow("sv_tail_deviation", sv_dev, EXACT_TOLS["sv_tail_deviation"]))
        rows.append(CertificateRow("generator_decoupling", eps0, EXACT_TOLS["generator_decoupling"]))
        rows.append(CertificateRow("pauli_decoupling", pauli, EXACT_TOLS["pauli_decoupling"]))
        rows.append(CertificateRow("choi_vs_reduced", recon_err, EXACT_TOLS["choi_vs_reduced"]))
        rows.append(CertificateRow("projection_move", proj_move, EXACT_TOLS["projection_move"]))
    else:
        eps_c = result.budget_c.epsilon
        eps_f = result.budget_f.epsilon
        budget = error_budget(n, spec.t, spec.kappa, path, e1_norm=eps_c, epsilon2=eps_f)
        c_exact = oracle.c1_matrix(result.u_t)
        e1_meas = float(np.abs(result.c_hat - c_exact).max())
        rows.append(CertificateRow("c_entry_error", e1_meas, eps_c))
        rows.append(CertificateRow("sv_tail_deviation", sv_dev, 2 * n * eps_c))
        rows.append(CertificateRow("generator_decoupling", eps0, budget.epsilon0_bound))
        rows.append(CertificateRow("pauli_decoupling", pauli, budget.pauli_bound))
        f_exact = oracle.f_matrix(result.core, m)
        e2_meas = float(np.abs(result.f_hat - f_exact).max())
        rows.append(CertificateRow("f_entry_error", e2_meas, eps_f))
        rows.append(CertificateRow("choi_vs_reduced", recon_err, budget.choi_spectral_bound))
        rows.append(
            CertificateRow(
                "projection_move",
                trace_norm(result.projection.choi.data - j_reduced.data),
                budget.projection_bound,
            )
        )

    if 2 * n <= dense_qubit_cap():
        j_true = dense_sim.choi_of_unitary(result.u_t)
        j_learned = learner.learned_choi(result.description)
        dia = diamond_bound(j_true, j_learned)
        if not sampled:
            dia_bound = EXACT_TOLS["diamond_bound"]
        else:
            dia_bound = t2_factor(n, spec.t, spec.kappa, path) * result.budget_f.epsilon
        rows.append(CertificateRow("diamond_bound", dia, dia_bound))
    return rows


def certificates_csv(rows: list[CertificateRow]) -> str:
    """Render certificate rows as CSV text: name, measured, bound, pass."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["name", "measured", "bound", "pass"])
    for row in rows:
        writer.writerow([row.name, f"{row.measured:.12e}", f"{row.bound:.12e}", row.passed])
    return buf.getvalue()


def write_certificates_csv(path: str, rows: list[CertificateRow]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(certificates_csv(rows))
