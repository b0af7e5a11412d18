"""Iterated-conjugation probe of the Gaussian hierarchy.

Level one of the hierarchy is conjugation of a generator by the circuit,
F_1 = U gamma_mu U^dag; each further level conjugates the generator by the
previous level, F_{j+1} = F_j gamma_mu F_j^dag. A circuit whose iterates all
stay non-Gaussian to every probed depth cannot be flattened into the lower
levels, and a two-gate circuit with an irrational-fraction angle pi/p (p odd)
witnesses exactly that: its iterates keep a weight-1 component with
coefficient +-cos(2^j pi/p) alongside a weight-3 remainder, so no level is
Gaussian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import instances
from .majorana_algebra import (
    SparseOperator,
    StringKey,
    adjoint_parity,
    check_dense_cap,
    conjugate_by_exp_string,
    gamma,
    majorana_weight,
    to_dense,
    _jw_matrices,
)
from .dense_sim import num_qubits

DEFAULT_TOL = 1e-9


def sparse_decompose(u: np.ndarray, n: int | None = None) -> SparseOperator:
    """Expand a dense operator over raw generator strings (exact, 4^n terms)."""
    if n is None:
        n = num_qubits(u)
    check_dense_cap(n, "sparse_decompose")
    d = 2**n
    gammas = _jw_matrices(n)
    terms: dict[int, complex] = {}
    for mask in range(1 << (2 * n)):
        acc = None
        mm = mask
        while mm:
            p = (mm & -mm).bit_length() - 1
            acc = gammas[p] if acc is None else acc @ gammas[p]
            mm &= mm - 1
        if acc is None:
            coeff = np.trace(u) / d
        else:
            # tr(gamma_x^dag u) / d with gamma_x^dag = parity * gamma_x
            coeff = adjoint_parity(mask.bit_count()) * np.einsum("ij,ji->", acc, u) / d
        if abs(coeff) > 1e-15:
            terms[mask] = complex(coeff)
    return SparseOperator(n, terms)


def is_gaussian_action(u: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """True iff every conjugated generator stays weight <= 1 within tol.

    Subtracts the weight-<=1 component of U^dag gamma_i U explicitly; the
    normalized Frobenius norm of the remainder upper-bounds every stray
    string coefficient (Parseval), and unlike the 1 - sum |c|^2 shortcut it
    carries no catastrophic cancellation, so it certifies at 1e-9.
    """
    n = num_qubits(u)
    d = 2**n
    gammas = _jw_matrices(n)
    udag = u.conj().T
    eye = np.eye(d, dtype=complex)
    for g in gammas:
        a = udag @ g @ u
        rem = a - (np.trace(a) / d) * eye
        for gk in gammas:
            rem = rem - (np.einsum("ij,ji->", a, gk) / d) * gk
        stray = np.linalg.norm(rem, "fro") / math.sqrt(d)
        if stray > tol:
            return False
    return True


def _sparse_is_gaussian(op: SparseOperator, tol: float) -> bool:
    for i in range(1, op.two_n + 1):
        image = (op @ gamma(i, op.n) @ op.adjoint()).prune(tol)
        if majorana_weight(image, tol) > 1:
            return False
    return True


@dataclass(eq=False)
class HierarchyTrace:
    """Record of one probe: the iterates as sparse operators plus the
    per-level weight and Gaussianity flags."""

    mu: int
    tol: float
    iterates: list[SparseOperator]
    weights: list[int]
    gaussian: list[bool]


def _first_level(source, mu: int) -> tuple[SparseOperator, int]:
    if isinstance(source, instances.CircuitSpec):
        n = source.n
        if not 1 <= mu <= 2 * n:
            raise ValueError(f"generator index {mu} outside 1..{2 * n}")
        f1 = instances.heisenberg_image(source, gamma(mu, n), adjoint=False)
        return f1, n
    u = np.asarray(source)
    n = num_qubits(u)
    if not 1 <= mu <= 2 * n:
        raise ValueError(f"generator index {mu} outside 1..{2 * n}")
    g = to_dense(gamma(mu, n))
    return sparse_decompose(u @ g @ u.conj().T, n), n


def hierarchy_iterate(source, mu: int, k_max: int, tol: float = DEFAULT_TOL) -> HierarchyTrace:
    """Probe k_max levels starting from F_1 = U gamma_mu U^dag.

    source may be a CircuitSpec (propagated symbolically, never dense) or a
    dense unitary (decomposed once, then iterated symbolically).
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    f, n = _first_level(source, mu)
    f = f.prune(tol)
    iterates: list[SparseOperator] = []
    weights: list[int] = []
    flags: list[bool] = []
    g_mu = gamma(mu, n)
    for _ in range(k_max):
        iterates.append(f)
        weights.append(majorana_weight(f, tol))
        flags.append(_sparse_is_gaussian(f, tol))
        f = (f @ g_mu @ f.adjoint()).prune(tol)
    return HierarchyTrace(mu=mu, tol=tol, iterates=iterates, weights=weights, gaussian=flags)


# -- the explicit witness ---------------------------------------------------

_WITNESS_N = 3
_WITNESS_CORE = (1, 2, 3, 4)
_WITNESS_PLANE = (1, 5)


def witness_conjugate(op: SparseOperator, theta: float) -> SparseOperator:
    """Forward conjugation by the witness circuit K G(theta) K.

    K = exp(i pi/4 g~_{1,2,3,4}) and G(theta) = exp(theta gamma_1 gamma_5);
    the rightmost factor conjugates first.
    """
    op = conjugate_by_exp_string(op, _WITNESS_CORE, math.pi / 4.0)
    op = conjugate_by_exp_string(op, _WITNESS_PLANE, -theta)
    op = conjugate_by_exp_string(op, _WITNESS_CORE, math.pi / 4.0)
    return op.prune()


def witness_outside_hierarchy(p: int, k_max: int = 8, mu: int = 2, tol: float = DEFAULT_TOL) -> dict:
    """Probe the two-gate witness at angle pi/p and report every level.

    p must be odd and >= 3: then 2^j pi/p never hits a multiple of pi/2, the
    weight-3 component never dies, and no iterate is Gaussian. The report
    carries, per level, the weight, the Gaussian flag, and the leading
    string coefficients (the weight-1 part tracks +-cos(2^j pi/p)).
    """
    if p < 3 or p % 2 == 0:
        raise ValueError(f"witness angle needs odd p >= 3, got {p}")
    theta = math.pi / p
    n = _WITNESS_N
    f = witness_conjugate(gamma(mu, n), theta)
    iterates = []
    weights = []
    flags = []
    g_mu = gamma(mu, n)
    for _ in range(k_max):
        iterates.append(f)
        weights.append(majorana_weight(f, tol))
        flags.append(_sparse_is_gaussian(f, tol))
        f = (f @ g_mu @ f.adjoint()).prune(tol)
    levels = []
    for j, (op, w, flag) in enumerate(zip(iterates, weights, flags), start=1):
        coeffs = sorted(op.terms.items(), key=lambda kv: -abs(kv[1]))[:2]
        leading = {
            _mask_label(mask, 2 * n): [float(c.real), float(c.imag)]
            for mask, c in coeffs
        }
        levels.append(
            {
                "level": j,
                "weight": w,
                "gaussian": flag,
                "leading_coeffs": leading,
            }
        )
    return {
        "p": p,
        "theta": theta,
        "mu": mu,
        "k_max": k_max,
        "iterates": levels,
        "all_non_gaussian": not any(flags),
    }


def _mask_label(mask: int, two_n: int) -> str:
    if mask == 0:
        return "I"
    idx = StringKey(mask, two_n).indices()
    return "*".join(f"gamma{i}" for i in idx)
