"""Promise-form circuit instances: alternating Gaussian and sparse non-Gaussian layers.

An instance on n modes with t non-Gaussian gates of generator weight at most
kappa is the product

    U = G_t K_t ... G_1 K_1 G_0

applied right to left, so layers[0] acts first. Gaussian layers are recorded
by their orthogonal action matrix, non-Gaussian layers by an even-weight
generator support and an angle: K = exp(i * angle * g~_support).

Derived sizes: M = kappa * t generators can be touched by the non-Gaussian
part after compression, m = M / 2 qubits host it, and propagated generator
images carry at most w = (kappa + 1)^t Majorana factors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .majorana_algebra import (
    DimensionError,
    SparseOperator,
    StringKey,
    conjugate_by_exp_string,
    conjugate_by_givens,
    _masks_commute,
)
from . import dense_sim

PATHS = ("fermionic", "qubit")

SCHEMA_VERSION = 1


@dataclass(eq=False)
class GaussianLayer:
    matrix: np.ndarray

    type: str = "gaussian"


@dataclass(eq=False)
class NonGaussianLayer:
    support: tuple[int, ...]
    angle: float

    type: str = "nongaussian"


@dataclass(eq=False)
class CircuitSpec:
    """A promise instance. Treat as immutable."""

    n: int
    t: int
    kappa: int
    path: str
    layers: tuple

    @property
    def M(self) -> int:
        """Generators the compressed non-Gaussian action may touch: kappa * t."""
        return self.kappa * self.t

    @property
    def m(self) -> int:
        """Qubits hosting the compressed non-Gaussian action: M / 2."""
        return self.M // 2

    @property
    def w(self) -> int:
        """Weight cap on propagated generator images: (kappa + 1)^t."""
        return (self.kappa + 1) ** self.t

    def __eq__(self, other) -> bool:
        if not isinstance(other, CircuitSpec):
            return NotImplemented
        return serialize(self) == serialize(other)


def haar_orthogonal(dim: int, rng: np.random.Generator, special: bool = False) -> np.ndarray:
    """Haar-random element of O(dim), or of SO(dim) when special is set.

    QR of a Gaussian matrix with the R-diagonal sign fix; the det<0 half is
    folded onto SO by flipping the last column, a measure-preserving move.
    """
    a = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if special and np.linalg.det(q) < 0:
        q[:, -1] *= -1.0
    return q


def _random_support(two_n: int, kappa: int, rng: np.random.Generator) -> tuple[int, ...]:
    weights = np.arange(2, kappa + 1, 2)
    counts = np.array([math.comb(two_n, int(k)) for k in weights], dtype=float)
    k = int(rng.choice(weights, p=counts / counts.sum()))
    idx = rng.choice(two_n, size=k, replace=False) + 1
    return tuple(sorted(int(i) for i in idx))


def random_instance(
    n: int, t: int, kappa: int, path: str, seed: int | None = None
) -> CircuitSpec:
    """Draw a random promise instance.

    Gaussian layers are Haar (SO(2n) on the fermionic path, O(2n) on the
    qubit path); supports are uniform over even-weight-<=kappa generator
    subsets (weight k with probability proportional to C(2n, k)); angles are
    uniform over [0, 2pi).
    """
    _check_shape_params(n, t, kappa, path)
    rng = np.random.default_rng(seed)
    special = path == "fermionic"
    layers: list = [GaussianLayer(haar_orthogonal(2 * n, rng, special))]
    for _ in range(t):
        support = _random_support(2 * n, kappa, rng)
        angle = float(rng.uniform(0.0, 2.0 * math.pi))
        layers.append(NonGaussianLayer(support, angle))
        layers.append(GaussianLayer(haar_orthogonal(2 * n, rng, special)))
    return CircuitSpec(n=n, t=t, kappa=kappa, path=path, layers=tuple(layers))


def _check_shape_params(n: int, t: int, kappa: int, path: str) -> None:
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if t < 0:
        raise ValueError(f"need t >= 0, got {t}")
    if path not in PATHS:
        raise ValueError(f"path must be one of {PATHS}, got {path!r}")
    if t > 0:
        if kappa < 2 or kappa % 2:
            raise ValueError(f"kappa must be a positive even integer, got {kappa}")
        if kappa * t > 2 * n:
            raise ValueError(
                f"infeasible shape: kappa*t = {kappa * t} exceeds 2n = {2 * n}"
            )
    elif kappa < 0:
        raise ValueError(f"kappa must be non-negative, got {kappa}")


def validate(spec: CircuitSpec) -> list[str]:
    """Structural and numerical checks; returns a list of problems, empty if clean."""
    problems: list[str] = []
    try:
        _check_shape_params(spec.n, spec.t, spec.kappa, spec.path)
    except ValueError as exc:
        problems.append(str(exc))
        return problems
    two_n = 2 * spec.n
    if len(spec.layers) != 2 * spec.t + 1:
        problems.append(
            f"expected {2 * spec.t + 1} alternating layers, got {len(spec.layers)}"
        )
        return problems
    for pos, layer in enumerate(spec.layers):
        want_gaussian = pos % 2 == 0
        if want_gaussian != isinstance(layer, GaussianLayer):
            problems.append(f"layer {pos}: wrong kind for alternating structure")
            continue
        if isinstance(layer, GaussianLayer):
            o = np.asarray(layer.matrix)
            if o.shape != (two_n, two_n):
                problems.append(f"layer {pos}: matrix shape {o.shape} != {(two_n, two_n)}")
                continue
            if not dense_sim.is_orthogonal(o):
                problems.append(f"layer {pos}: matrix is not orthogonal")
                continue
            if spec.path == "fermionic" and np.linalg.det(o) < 0:
                problems.append(f"layer {pos}: det=-1 forbidden on the fermionic path")
        else:
            sup = layer.support
            if len(sup) == 0 or len(sup) % 2 or len(sup) > spec.kappa:
                problems.append(
                    f"layer {pos}: support weight {len(sup)} not even in 2..{spec.kappa}"
                )
            if list(sup) != sorted(set(sup)) or any(
                not 1 <= i <= two_n for i in sup
            ):
                problems.append(f"layer {pos}: support must be sorted unique in 1..{two_n}")
            if not math.isfinite(layer.angle):
                problems.append(f"layer {pos}: non-finite angle")
    return problems


def assemble(spec: CircuitSpec) -> np.ndarray:
    """Dense unitary of the instance (layers applied right to left)."""
    n = spec.n
    d = 2**n
    u = np.eye(d, dtype=complex)
    for layer in spec.layers:
        if isinstance(layer, GaussianLayer):
            u = dense_sim.gaussian_unitary(np.asarray(layer.matrix, dtype=float)) @ u
        else:
            u = dense_sim.exp_majorana(layer.support, layer.angle, n) @ u
    return u


def _conjugate_by_reflection(op: SparseOperator) -> SparseOperator:
    """Image under conjugation by the canonical det=-1 factor gamma_2..gamma_{2n}."""
    smask = ((1 << op.two_n) - 1) & ~1
    return SparseOperator(
        op.n,
        {
            m: (c if _masks_commute(smask, m) else -c)
            for m, c in op.terms.items()
        },
    )


def heisenberg_image(
    spec: CircuitSpec, op: SparseOperator, adjoint: bool = True
) -> SparseOperator:
    """Propagate op through the instance symbolically.

    adjoint=True gives U^dag op U (Heisenberg picture), adjoint=False gives
    U op U^dag. Gaussian layers are expanded into their Givens schedule, so
    the result is exact up to float rounding and never touches a dense
    matrix.
    """
    if op.n != spec.n:
        raise DimensionError(f"operator on n={op.n}, instance on n={spec.n}")
    layers = reversed(spec.layers) if adjoint else spec.layers
    for layer in layers:
        if isinstance(layer, GaussianLayer):
            rotations, reflect = dense_sim.givens_decompose(
                np.asarray(layer.matrix, dtype=float)
            )
            if adjoint:
                # G = B^r u_1 ... u_K: conjugate by B first, then u_1 .. u_K
                if reflect:
                    op = _conjugate_by_reflection(op)
                for i, j, phi in rotations:
                    op = conjugate_by_givens(op, i, j, phi / 2.0)
            else:
                for i, j, phi in reversed(rotations):
                    op = conjugate_by_givens(op, i, j, -phi / 2.0)
                if reflect:
                    op = _conjugate_by_reflection(op)
        else:
            s = layer.angle if not adjoint else -layer.angle
            op = conjugate_by_exp_string(op, layer.support, s)
        op = op.prune()
    return op


# -- serialization --------------------------------------------------------


def serialize(spec: CircuitSpec) -> str:
    """JSON text for the instance; deterministic for equal instances."""
    layers = []
    for layer in spec.layers:
        if isinstance(layer, GaussianLayer):
            layers.append(
                {"type": "gaussian", "matrix": np.asarray(layer.matrix).tolist()}
            )
        else:
            layers.append(
                {
                    "type": "nongaussian",
                    "support": list(layer.support),
                    "angle": float(layer.angle),
                }
            )
    doc = {
        "version": SCHEMA_VERSION,
        "n": spec.n,
        "t": spec.t,
        "kappa": spec.kappa,
        "path": spec.path,
        "layers": layers,
    }
    return json.dumps(doc, indent=2)


def deserialize(text: str) -> CircuitSpec:
    """Parse instance JSON; raises ValueError on malformed or wrong-version input."""
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValueError("instance document must be a JSON object")
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise ValueError(
            f"unsupported instance schema version {version!r} (expected {SCHEMA_VERSION})"
        )
    for key in ("n", "t", "kappa", "path", "layers"):
        if key not in doc:
            raise ValueError(f"instance document missing key {key!r}")
    layers: list = []
    for pos, entry in enumerate(doc["layers"]):
        kind = entry.get("type")
        if kind == "gaussian":
            if "matrix" not in entry:
                raise ValueError(f"layer {pos}: gaussian layer missing 'matrix'")
            layers.append(GaussianLayer(np.asarray(entry["matrix"], dtype=float)))
        elif kind == "nongaussian":
            if "support" not in entry or "angle" not in entry:
                raise ValueError(f"layer {pos}: nongaussian layer missing fields")
            layers.append(
                NonGaussianLayer(
                    tuple(int(i) for i in entry["support"]), float(entry["angle"])
                )
            )
        else:
            raise ValueError(f"layer {pos}: unknown layer type {kind!r}")
    return CircuitSpec(
        n=int(doc["n"]),
        t=int(doc["t"]),
        kappa=int(doc["kappa"]),
        path=str(doc["path"]),
        layers=tuple(layers),
    )
