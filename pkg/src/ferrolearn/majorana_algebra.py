"""Exact symbolic algebra of Majorana strings.

A system of n fermionic modes carries 2n Majorana operators gamma_1..gamma_{2n}
with {gamma_i, gamma_j} = 2 delta_ij. A *string* gamma_x for a subset x of
indices is the product of the gamma_i for i in x taken in ascending order; it
is encoded as an integer bitmask where bit (i-1) stands for gamma_i. The 4^n
strings are orthogonal under the normalized trace inner product and span the
full operator algebra, which is what makes a sparse dict-of-masks
representation exact.

Phase convention: coefficients are always stored against the *raw* ordered
products gamma_x, never against their Hermitian variants. `hermitize` returns
the phase (1 or 1j) relating the two, so callers that need Hermitian strings
apply it at the edge. Products of raw strings only ever produce +-1 signs,
which keeps the bookkeeping exact.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np

PRUNE_THRESHOLD = 1e-12

_DEFAULT_DENSE_CAP = 10


def dense_qubit_cap() -> int:
    """Largest qubit count for which dense 2^n x 2^n matrices may be built.

    Reads FERROLEARN_DENSE_CAP from the environment on every call so tests
    and long-running sessions can adjust it; defaults to 10.
    """
    raw = os.environ.get("FERROLEARN_DENSE_CAP")
    if raw is None or not raw.strip():
        return _DEFAULT_DENSE_CAP
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(
            f"FERROLEARN_DENSE_CAP must be an integer, got {raw!r}"
        ) from exc


class DimensionError(ValueError):
    """Operands live on different numbers of modes."""


class DenseCapExceeded(ValueError):
    """A dense matrix would exceed the configured qubit cap."""


def check_dense_cap(n: int, what: str = "dense operator") -> None:
    cap = dense_qubit_cap()
    if n > cap:
        raise DenseCapExceeded(
            f"{what} on {n} qubits exceeds the dense cap of {cap} "
            f"(override with FERROLEARN_DENSE_CAP)"
        )


class StringKey(NamedTuple):
    """A Majorana string: bitmask over the 2n generator indices.

    Bit (i-1) of `mask` set means gamma_i is a factor. `two_n` pins the
    ambient number of generators so keys from different systems cannot be
    mixed silently.
    """

    mask: int
    two_n: int

    @property
    def weight(self) -> int:
        return self.mask.bit_count()

    def indices(self) -> tuple[int, ...]:
        """1-based generator indices, ascending."""
        return tuple(i + 1 for i in range(self.two_n) if self.mask >> i & 1)

    @classmethod
    def from_indices(cls, indices: Iterable[int], two_n: int) -> "StringKey":
        mask = 0
        for i in indices:
            if not 1 <= i <= two_n:
                raise ValueError(f"generator index {i} outside 1..{two_n}")
            bit = 1 << (i - 1)
            if mask & bit:
                raise ValueError(f"repeated generator index {i}")
            mask |= bit
        return cls(mask, two_n)


def _product_sign(xmask: int, ymask: int) -> int:
    """Sign s with gamma_x gamma_y = s * gamma_{x XOR y} for raw strings.

    Counts inversions in the merge of the two ascending index lists; each
    crossing of distinct generators contributes one anticommutation sign,
    and coincident generators square to identity with no sign.
    """
    inv = 0
    y = ymask
    while y:
        p = (y & -y).bit_length() - 1
        inv += (xmask >> (p + 1)).bit_count()
        y &= y - 1
    return -1 if inv & 1 else 1


def string_product(x: StringKey, y: StringKey) -> tuple[StringKey, complex]:
    """gamma_x gamma_y as (key, coefficient); the coefficient is always +-1."""
    if x.two_n != y.two_n:
        raise DimensionError(f"mixing strings on 2n={x.two_n} and 2n={y.two_n}")
    sign = _product_sign(x.mask, y.mask)
    return StringKey(x.mask ^ y.mask, x.two_n), complex(sign)


def adjoint_parity(weight: int) -> int:
    """(-1)^{w(w-1)/2}: the sign relating gamma_x^dagger to gamma_x."""
    return -1 if (weight * (weight - 1) // 2) & 1 else 1


def hermitize(x: StringKey) -> tuple[StringKey, complex]:
    """Phase h in {1, 1j} making h * gamma_x Hermitian.

    gamma_x^dagger = (-1)^{w(w-1)/2} gamma_x, so strings of weight 0,1 mod 4
    are already Hermitian and the rest need a factor of i.
    """
    h = 1.0 + 0.0j if adjoint_parity(x.weight) == 1 else 1.0j
    return x, h


def _masks_commute(xmask: int, ymask: int) -> bool:
    """Raw strings commute iff w(x) w(y) - |x AND y| is even."""
    return (xmask.bit_count() * ymask.bit_count() - (xmask & ymask).bit_count()) % 2 == 0


@dataclass
class SparseOperator:
    """Linear combination of Majorana strings on n modes.

    `terms` maps bitmask -> complex coefficient against raw strings. Treat
    instances as immutable; arithmetic returns new operators.
    """

    n: int
    terms: dict[int, complex] = field(default_factory=dict)

    @property
    def two_n(self) -> int:
        return 2 * self.n

    def _check(self, other: "SparseOperator") -> None:
        if self.n != other.n:
            raise DimensionError(f"mixing operators on n={self.n} and n={other.n}")

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0.0) + c
        return SparseOperator(self.n, out)

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0.0) - c
        return SparseOperator(self.n, out)

    def __mul__(self, scalar: complex) -> "SparseOperator":
        return SparseOperator(self.n, {m: c * scalar for m, c in self.terms.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "SparseOperator":
        return self * (-1.0)

    def __matmul__(self, other: "SparseOperator") -> "SparseOperator":
        """Operator product, exact sign bookkeeping on string pairs."""
        self._check(other)
        out: dict[int, complex] = {}
        for mx, cx in self.terms.items():
            for my, cy in other.terms.items():
                m = mx ^ my
                c = cx * cy * _product_sign(mx, my)
                out[m] = out.get(m, 0.0) + c
        return SparseOperator(self.n, out)

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(
            self.n,
            {m: np.conj(c) * adjoint_parity(m.bit_count()) for m, c in self.terms.items()},
        )

    def prune(self, threshold: float = PRUNE_THRESHOLD) -> "SparseOperator":
        return SparseOperator(
            self.n, {m: c for m, c in self.terms.items() if abs(c) > threshold}
        )

    def coefficient(self, key: StringKey | int) -> complex:
        mask = key.mask if isinstance(key, StringKey) else key
        return self.terms.get(mask, 0.0 + 0.0j)

    def keys(self) -> list[StringKey]:
        return [StringKey(m, self.two_n) for m in sorted(self.terms)]

    def hs_norm(self) -> float:
        """Normalized Hilbert-Schmidt norm, sqrt(sum |c_x|^2) = ||A||_F / 2^{n/2}."""
        return math.sqrt(sum(abs(c) ** 2 for c in self.terms.values()))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return (self - self.adjoint()).hs_norm() <= tol


def zero(n: int) -> SparseOperator:
    return SparseOperator(n, {})


def identity(n: int) -> SparseOperator:
    return SparseOperator(n, {0: 1.0 + 0.0j})


def gamma(i: int, n: int) -> SparseOperator:
    """The single generator gamma_i on n modes."""
    if not 1 <= i <= 2 * n:
        raise ValueError(f"generator index {i} outside 1..{2 * n}")
    return SparseOperator(n, {1 << (i - 1): 1.0 + 0.0j})


def from_indices(indices: Iterable[int], n: int, coeff: complex = 1.0) -> SparseOperator:
    """The raw string on the given 1-based indices, scaled by coeff."""
    key = StringKey.from_indices(indices, 2 * n)
    return SparseOperator(n, {key.mask: complex(coeff)})


def commutator(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    return (a @ b) - (b @ a)


def majorana_weight(op: SparseOperator, threshold: float = PRUNE_THRESHOLD) -> int:
    """Largest string weight carried with coefficient magnitude above threshold."""
    w = 0
    for m, c in op.terms.items():
        if abs(c) > threshold:
            w = max(w, m.bit_count())
    return w


def conjugate_by_givens(
    op: SparseOperator, i: int, j: int, theta: float
) -> SparseOperator:
    """Image of op under G^dag (.) G for the plane rotation G = exp(theta gamma_i gamma_j).

    Acts per generator as gamma_i -> cos(2 theta) gamma_i + sin(2 theta) gamma_j
    and gamma_j -> -sin(2 theta) gamma_i + cos(2 theta) gamma_j. Strings holding
    both or neither of i, j are fixed; strings holding exactly one pick up the
    rotated pair, with a reordering sign counted from the generators strictly
    between i and j. String weight is exactly preserved.
    """
    two_n = op.two_n
    if i == j:
        raise ValueError("plane rotation needs two distinct indices")
    for k in (i, j):
        if not 1 <= k <= two_n:
            raise ValueError(f"generator index {k} outside 1..{two_n}")
    bi, bj = 1 << (i - 1), 1 << (j - 1)
    lo, hi = min(i, j), max(i, j)
    between = ((1 << (hi - 1)) - 1) & ~((1 << lo) - 1)
    c2, s2 = math.cos(2.0 * theta), math.sin(2.0 * theta)
    out: dict[int, complex] = {}

    def _acc(m: int, c: complex) -> None:
        out[m] = out.get(m, 0.0) + c

    for m, c in op.terms.items():
        has_i, has_j = bool(m & bi), bool(m & bj)
        if has_i == has_j:
            _acc(m, c)
            continue
        swap_sign = -1.0 if (m & between).bit_count() & 1 else 1.0
        if has_i:
            _acc(m, c2 * c)
            _acc(m ^ bi ^ bj, s2 * swap_sign * c)
        else:
            _acc(m, c2 * c)
            _acc(m ^ bi ^ bj, -s2 * swap_sign * c)
    return SparseOperator(op.n, out)


def conjugate_by_exp_string(
    op: SparseOperator, support: StringKey | Iterable[int], s: float
) -> SparseOperator:
    """Image of op under V (.) V^dag for V = exp(i s h gamma_R), h the Hermitian phase.

    With g = h gamma_R Hermitian and g^2 = I, V = cos(s) I + i sin(s) g, and
    per string either [g, gamma_y] = 0 (term fixed) or
    V gamma_y V^dag = cos(2s) gamma_y + i sin(2s) g gamma_y.
    """
    if isinstance(support, StringKey):
        key = support
        if key.two_n != op.two_n:
            raise DimensionError("support key on wrong number of generators")
    else:
        key = StringKey.from_indices(support, op.two_n)
    rmask = key.mask
    _, h = hermitize(key)
    c2, s2 = math.cos(2.0 * s), math.sin(2.0 * s)
    out: dict[int, complex] = {}
    for m, c in op.terms.items():
        if _masks_commute(rmask, m):
            out[m] = out.get(m, 0.0) + c
        else:
            out[m] = out.get(m, 0.0) + c2 * c
            pm = rmask ^ m
            cross = 1j * s2 * h * _product_sign(rmask, m) * c
            out[pm] = out.get(pm, 0.0) + cross
    return SparseOperator(op.n, out)


@lru_cache(maxsize=8)
def _jw_matrices(n: int) -> tuple[np.ndarray, ...]:
    """Dense Jordan-Wigner images of gamma_1..gamma_{2n}, cached per n."""
    ident = np.eye(2, dtype=complex)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    z = np.array([[1, 0], [0, -1]], dtype=complex)
    mats = []
    for k in range(1, n + 1):
        for tail in (x, y):
            factors = [z] * (k - 1) + [tail] + [ident] * (n - k)
            m = factors[0]
            for f in factors[1:]:
                m = np.kron(m, f)
            m.flags.writeable = False
            mats.append(m)
    return tuple(mats)


def to_dense(op: SparseOperator) -> np.ndarray:
    """Dense 2^n x 2^n matrix of op under the Jordan-Wigner embedding."""
    check_dense_cap(op.n, "to_dense")
    d = 2**op.n
    gammas = _jw_matrices(op.n)
    out = np.zeros((d, d), dtype=complex)
    for m, c in op.terms.items():
        if abs(c) == 0.0:
            continue
        acc = None
        mm = m
        while mm:
            p = (mm & -mm).bit_length() - 1
            acc = gammas[p] if acc is None else acc @ gammas[p]
            mm &= mm - 1
        out += c * (acc if acc is not None else np.eye(d, dtype=complex))
    return out


def string_to_dense(key: StringKey) -> np.ndarray:
    """Dense matrix of a single raw string."""
    if key.two_n % 2:
        raise ValueError("two_n must be even")
    return to_dense(SparseOperator(key.two_n // 2, {key.mask: 1.0 + 0.0j}))
