"""ferrolearn: simulate and learn fermionic unitaries with few non-Gaussian gates.

Desk-scale toolkit: exact Majorana-string algebra, dense Jordan-Wigner
simulation, random promise instances, exact and sampled tomography oracles,
the two-stage learner with certified error budgets, and the Gaussian
hierarchy probe. See the README for the CLI entry points.
"""

__version__ = "0.1.0"

from .majorana_algebra import (
    DenseCapExceeded,
    DimensionError,
    SparseOperator,
    StringKey,
    commutator,
    conjugate_by_exp_string,
    conjugate_by_givens,
    dense_qubit_cap,
    gamma,
    hermitize,
    majorana_weight,
    string_product,
    to_dense,
)

__all__ = [
    "DenseCapExceeded",
    "DimensionError",
    "SparseOperator",
    "StringKey",
    "__version__",
    "commutator",
    "conjugate_by_exp_string",
    "conjugate_by_givens",
    "dense_qubit_cap",
    "gamma",
    "hermitize",
    "majorana_weight",
    "string_product",
    "to_dense",
]
