"""Kronecker product decomposition of vectors, matrices and hypermatrices."""
from .hyper_kpd import (
    PairedShape,
    outer_kpd,
    outer_product,
    paired_kpd,
    paired_multifold_kpd,
    paired_product,
    paired_sum_kpd,
    partition_kpd,
    partition_product,
)
from .hypermatrix import Hypermatrix, IndexSplit, matrix_expression, normal_form, sigma_transpose
from .index_monoid import DimProfile, MultiIndex, idx_product, linear_to_multi, multi_to_linear
from .matrix_kpd import (
    enumerate_matrix_shapes,
    matrix_approx_kpd,
    matrix_exact_kpd,
    matrix_multifold_kpd,
    matrix_sum_kpd,
)
from .stp import PermSpec, apply_perm, delta_listing, perm_matrix, stp, swap_matrix
from .vector_kpd import (
    DEFAULT_CONFIG,
    KpdError,
    KpdFactorization,
    NonFiniteError,
    NotDecomposableError,
    SolverConfig,
    SumKpd,
    ZeroVectorError,
    approx_kpd,
    exact_kpd,
    finite_sum_kpd,
    head_info,
)

__version__ = "0.1.0"
