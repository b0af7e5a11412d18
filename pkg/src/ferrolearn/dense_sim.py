"""Dense 2^n-dimensional simulation under the Jordan-Wigner embedding.

Everything here builds explicit complex matrices, so sizes are guarded by
the dense cap (see FERROLEARN_DENSE_CAP). Conventions:

* qubit k hosts gamma_{2k-1} = Z^{k-1} X and gamma_{2k} = Z^{k-1} Y;
* an orthogonal action O means U^dag gamma_i U = sum_k O[i,k] gamma_k;
* plane rotations R(i, j, phi) carry [[cos, sin], [-sin, cos]] in rows/cols
  (i, j), so exp(theta gamma_i gamma_j) has action R(i, j, 2 theta);
* Choi matrices put the output register first: J = (1/d) sum_ij E(|i><j|) (x) |i><j|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np

from .majorana_algebra import (
    StringKey,
    SparseOperator,
    check_dense_cap,
    hermitize,
    string_to_dense,
    _jw_matrices,
)

ORTHO_TOL = 1e-10


def num_qubits(a: np.ndarray) -> int:
    d = a.shape[0]
    if a.ndim != 2 or a.shape[1] != d or d & (d - 1) or d == 0:
        raise ValueError(f"expected a square power-of-two matrix, got shape {a.shape}")
    return d.bit_length() - 1


def jw_majorana(i: int, n: int) -> np.ndarray:
    """Dense gamma_i on n qubits (read-only view from a per-n cache)."""
    check_dense_cap(n, "jw_majorana")
    if not 1 <= i <= 2 * n:
        raise ValueError(f"generator index {i} outside 1..{2 * n}")
    return _jw_matrices(n)[i - 1]


def all_majoranas(n: int) -> tuple[np.ndarray, ...]:
    check_dense_cap(n, "all_majoranas")
    return _jw_matrices(n)


def is_orthogonal(o: np.ndarray, tol: float = ORTHO_TOL) -> bool:
    if o.ndim != 2 or o.shape[0] != o.shape[1]:
        return False
    if np.iscomplexobj(o) and np.abs(o.imag).max() > tol:
        return False
    o = np.real(o)
    return np.abs(o @ o.T - np.eye(o.shape[0])).max() <= tol


def rotation_matrix(two_n: int, i: int, j: int, phi: float) -> np.ndarray:
    """Plane rotation on 1-based axes (i, j): rows carry [[c, s], [-s, c]]."""
    if i == j or not (1 <= i <= two_n and 1 <= j <= two_n):
        raise ValueError(f"bad plane ({i}, {j}) for two_n={two_n}")
    r = np.eye(two_n)
    c, s = math.cos(phi), math.sin(phi)
    r[i - 1, i - 1] = c
    r[i - 1, j - 1] = s
    r[j - 1, i - 1] = -s
    r[j - 1, j - 1] = c
    return r


def reflection_action(two_n: int) -> np.ndarray:
    """diag(-1, 1, ..., 1): the canonical det=-1 factor."""
    d = np.eye(two_n)
    d[0, 0] = -1.0
    return d


def givens_decompose(
    o: np.ndarray, tol: float = ORTHO_TOL
) -> tuple[list[tuple[int, int, float]], bool]:
    """Factor O = D^r * prod_k R(i_k, i_k+1, phi_k) into adjacent plane rotations.

    Returns (rotations, reflect) with rotations in product order and
    reflect=True iff det(O) < 0, in which case D = diag(-1, 1, ..., 1) leads.
    Raises ValueError on non-orthogonal input.
    """
    o = np.asarray(o, dtype=float)
    if not is_orthogonal(o, tol):
        raise ValueError("givens_decompose needs an orthogonal matrix")
    two_n = o.shape[0]
    reflect = bool(np.linalg.det(o) < 0)
    a = o.copy()
    if reflect:
        a[0, :] *= -1.0
    left: list[tuple[int, int, float]] = []  # 0-based planes applied to A
    for col in range(two_n - 1):
        for row in range(two_n - 2, col - 1, -1):
            x, y = a[row, col], a[row + 1, col]
            if abs(y) <= 1e-15 and x >= 0:
                continue
            r = math.hypot(x, y)
            if r <= 1e-15:
                continue
            c, s = x / r, y / r
            upper = c * a[row, :] + s * a[row + 1, :]
            lower = -s * a[row, :] + c * a[row + 1, :]
            a[row, :], a[row + 1, :] = upper, lower
            left.append((row, row + 1, math.atan2(s, c)))
        if a[col, col] < 0:
            # pi rotation in the next plane flips the two remaining signs
            a[col, :] *= -1.0
            a[col + 1, :] *= -1.0
            left.append((col, col + 1, math.pi))
    # det(+1) and orthogonality force the residue to the identity
    if np.abs(a - np.eye(two_n)).max() > 1e-9:
        raise ValueError("rotation sweep failed to reach the identity")
    # L_K ... L_1 A = I  =>  A = L_1^T ... L_K^T, each transpose negating the angle
    rotations = [(i + 1, j + 1, -phi) for (i, j, phi) in left]
    return rotations, reflect


def exp_majorana(support: StringKey | Iterable[int], s: float, n: int) -> np.ndarray:
    """Dense exp(i s g~) for the Hermitian string g~ on the given support."""
    check_dense_cap(n, "exp_majorana")
    if isinstance(support, StringKey):
        key = support
        if key.two_n != 2 * n:
            raise ValueError("support key on wrong number of generators")
    else:
        key = StringKey.from_indices(support, 2 * n)
    d = 2**n
    if key.mask == 0:
        return np.exp(1j * s) * np.eye(d, dtype=complex)
    _, h = hermitize(key)
    g = h * string_to_dense(key)
    return math.cos(s) * np.eye(d, dtype=complex) + 1j * math.sin(s) * g


def reflection_unitary(n: int) -> np.ndarray:
    """Unitary with action diag(-1, 1, ..., 1): the Hermitian form of gamma_2..gamma_{2n}."""
    check_dense_cap(n, "reflection_unitary")
    key = StringKey(((1 << 2 * n) - 1) & ~1, 2 * n)
    _, h = hermitize(key)
    return h * string_to_dense(key)


def gaussian_unitary(o: np.ndarray, tol: float = ORTHO_TOL) -> np.ndarray:
    """A unitary G with U^dag gamma_i U action matrix o, via Givens synthesis.

    The global phase is not pinned down; compare actions or channels, not
    matrix entries.
    """
    o = np.asarray(o, dtype=float)
    two_n = o.shape[0]
    if two_n % 2:
        raise ValueError("action matrix must have even dimension")
    n = two_n // 2
    check_dense_cap(n, "gaussian_unitary")
    rotations, reflect = givens_decompose(o, tol)
    u = reflection_unitary(n) if reflect else np.eye(2**n, dtype=complex)
    for i, j, phi in rotations:
        u = u @ exp_majorana((i, j), -phi / 2.0, n)
    return u


# -- Pauli helpers -------------------------------------------------------

_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

PAULI_LABELS = "IXYZ"


def pauli_tensor(index: int, m: int) -> np.ndarray:
    """The index-th m-qubit Pauli in lexicographic {I,X,Y,Z}^m order.

    The first qubit is the most significant base-4 digit, matching row-major
    kron order.
    """
    if not 0 <= index < 4**m:
        raise ValueError(f"Pauli index {index} outside 0..{4**m - 1}")
    if m == 0:
        return np.ones((1, 1), dtype=complex)
    digits = [(index >> (2 * (m - 1 - q))) & 3 for q in range(m)]
    out = _PAULIS[digits[0]]
    for dgt in digits[1:]:
        out = np.kron(out, _PAULIS[dgt])
    return out


def pauli_label(index: int, m: int) -> str:
    return "".join(PAULI_LABELS[(index >> (2 * (m - 1 - q))) & 3] for q in range(m))


@lru_cache(maxsize=4)
def pauli_basis(m: int) -> tuple[np.ndarray, ...]:
    mats = tuple(pauli_tensor(a, m) for a in range(4**m))
    for mat in mats:
        mat.flags.writeable = False
    return mats


# -- Choi matrices and channel helpers -----------------------------------


@dataclass
class ChoiMatrix:
    """Choi matrix of an m-qubit channel, output register first.

    data[(a, i), (b, j)] = (1/d0) <a| E(|i><j|) |b> with d0 = 2^m; for the
    identity channel this is the maximally entangled projector.
    """

    m: int
    data: np.ndarray

    @property
    def d0(self) -> int:
        return 2**self.m

    def output_trace(self) -> np.ndarray:
        """Partial trace over the output register; I/d0 iff trace preserving."""
        d0 = self.d0
        t = self.data.reshape(d0, d0, d0, d0)
        return np.einsum("aiaj->ij", t)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T))[0])

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.data - self.data.conj().T).max())


def choi_of_unitary(u: np.ndarray) -> ChoiMatrix:
    """Choi matrix of conjugation by u. Dense in d^2, so capped well below
    the operator cap."""
    m = num_qubits(u)
    check_dense_cap(2 * m, "choi_of_unitary")
    d = 2**m
    v = u.reshape(-1) / math.sqrt(d)
    return ChoiMatrix(m, np.outer(v, v.conj()))


def choi_from_kraus(kraus: Iterable[np.ndarray]) -> ChoiMatrix:
    ks = list(kraus)
    m = num_qubits(ks[0])
    d = 2**m
    data = np.zeros((d * d, d * d), dtype=complex)
    for k in ks:
        v = k.reshape(-1) / math.sqrt(d)
        data += np.outer(v, v.conj())
    return ChoiMatrix(m, data)


class NormBundle(NamedTuple):
    spectral: float
    frobenius: float
    trace: float


def norms(a: np.ndarray) -> NormBundle:
    """Spectral, Frobenius, and trace norms from one SVD."""
    s = np.linalg.svd(np.asarray(a, dtype=complex), compute_uv=False)
    return NormBundle(float(s[0]) if s.size else 0.0, float(np.sqrt((s**2).sum())), float(s.sum()))


def partial_trace(a: np.ndarray, keep: Iterable[int]) -> np.ndarray:
    """Trace out all qubits except `keep` (0-based positions, order preserved
    ascending)."""
    n = num_qubits(a)
    keep = sorted(set(keep))
    if keep and (keep[0] < 0 or keep[-1] >= n):
        raise ValueError(f"keep positions {keep} outside 0..{n - 1}")
    rest = [q for q in range(n) if q not in keep]
    t = a.reshape((2,) * (2 * n))
    perm = keep + rest
    t = t.transpose(perm + [n + q for q in perm])
    dk, dr = 2 ** len(keep), 2 ** len(rest)
    t = t.reshape(dk, dr, dk, dr)
    return np.einsum("aibi->ab", t)
