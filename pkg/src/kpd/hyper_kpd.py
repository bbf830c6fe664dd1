"""Kronecker products of hypermatrices and their decompositions.

Outer product
    ``c_{i,j} = a_i b_j`` over the concatenated profile; ``V(C) = V(A) (x) V(B)``.
Partition-based product
    Both operands share an order and a row/column split; the product is the
    hypermatrix over ``(m_k n_k)`` whose matrix expression under that split is
    ``M(A) (x) M(B)``.
Paired product
    ``c_{k_1..k_d} = a_{i_1..i_d} b_{j_1..j_d}`` with ``k_s = (i_s - 1) n_s + j_s``.

Every decomposition is reduced to the vector case by a coordinate permutation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hypermatrix import (
    Hypermatrix,
    IndexSplit,
    from_matrix_expression,
    matrix_expression,
    normal_row_count,
)
from .index_monoid import DimProfile, as_profile
from .matrix_kpd import (
    KronDecomposition,
    KronSum,
    matrix_approx_kpd,
    matrix_exact_kpd,
)
from .stp import PermSpec, apply_perm, apply_perm_transpose
from .vector_kpd import (
    DEFAULT_CONFIG,
    KpdFactorization,
    NotDecomposableError,
    SolverConfig,
    approx_kpd,
    exact_kpd,
    finite_sum_kpd,
)

MODES = ("exact", "approx")


def _solve(v, profile, mode: str, cfg: SolverConfig) -> KpdFactorization:
    if mode == "exact":
        return exact_kpd(v, profile, cfg)
    if mode == "approx":
        return approx_kpd(v, profile, cfg)
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def _pad(dims: Sequence[int], d: int) -> tuple[int, ...]:
    return tuple(dims) + (1,) * (d - len(dims))


# ---------------------------------------------------------------------------
# outer product


def outer_product(A: Hypermatrix, B: Hypermatrix) -> Hypermatrix:
    profile = A.profile.concat(B.profile)
    return Hypermatrix(profile, np.kron(A.data, B.data))


def outer_kpd(
    C: Hypermatrix, r: int, cfg: SolverConfig = DEFAULT_CONFIG, mode: str = "exact"
) -> KronDecomposition:
    """``C ~ A o B`` with ``A`` over the first ``r`` axes of ``C``."""
    if not 0 <= r <= C.order:
        raise ValueError(f"split point {r} out of range for order {C.order}")
    left, right = DimProfile(C.dims[:r]), DimProfile(C.dims[r:])

    def build(f: KpdFactorization) -> KronDecomposition:
        A = Hypermatrix(left, f.coefficient * f.components[0])
        B = Hypermatrix(right, f.components[1])
        res = float(np.linalg.norm(C.data - np.kron(A.data, B.data)))
        return KronDecomposition((A, B), f.coefficient, res, f)

    try:
        f = _solve(C.data, (left.total, right.total), mode, cfg)
    except NotDecomposableError as exc:
        cand = build(exc.candidate)
        raise NotDecomposableError(cand, cand.residual_norm) from None
    return build(f)


# ---------------------------------------------------------------------------
# partition-based product


def partition_product(
    A: Hypermatrix, split_a: IndexSplit, B: Hypermatrix, split_b: IndexSplit
) -> Hypermatrix:
    if A.order != B.order or split_a != split_b:
        raise ValueError(
            "partition-based product needs operands of equal order under the same split"
        )
    split_a.validate(A.order)
    M = np.kron(matrix_expression(A, split_a), matrix_expression(B, split_b))
    profile = DimProfile(m * n for m, n in zip(A.dims, B.dims))
    return from_matrix_expression(M, split_a, profile)


def partition_kpd(
    C: Hypermatrix,
    split: IndexSplit,
    left_profile,
    right_profile,
    cfg: SolverConfig = DEFAULT_CONFIG,
    mode: str = "exact",
) -> KronDecomposition:
    """Solve ``C = A [x] B`` under ``split`` via matrix KPD of ``M^{split}(C)``."""
    u, v = as_profile(left_profile), as_profile(right_profile)
    if not (u.order == v.order == C.order):
        raise ValueError("factor profiles must have the order of C")
    if any(c != a * b for c, a, b in zip(C.dims, u.dims, v.dims)):
        raise ValueError(f"dims {C.dims} are not the products of {u.dims} and {v.dims}")
    split.validate(C.order)
    (ur, uc), (vr, vc) = split.shape(u), split.shape(v)
    M = matrix_expression(C, split)

    def lift(dec: KronDecomposition) -> KronDecomposition:
        A = from_matrix_expression(dec.factors[0], split, u)
        B = from_matrix_expression(dec.factors[1], split, v)
        return KronDecomposition((A, B), dec.coefficient, dec.residual_norm, dec.vector)

    if mode == "approx":
        return lift(matrix_approx_kpd(M, (ur, uc, vr, vc), cfg))
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    try:
        return lift(matrix_exact_kpd(M, (ur, uc, vr, vc), cfg))
    except NotDecomposableError as exc:
        cand = lift(exc.candidate)
        raise NotDecomposableError(cand, cand.residual_norm) from None


# ---------------------------------------------------------------------------
# paired product


@dataclass(frozen=True)
class PairedShape:
    """Factor profiles ``(m_1..m_d)`` and ``(n_1..n_d)``; shorter one padded with 1s."""

    left: DimProfile
    right: DimProfile

    def __init__(self, left, right):
        left, right = as_profile(left), as_profile(right)
        d = max(left.order, right.order)
        object.__setattr__(self, "left", DimProfile(_pad(left.dims, d)))
        object.__setattr__(self, "right", DimProfile(_pad(right.dims, d)))

    @property
    def order(self) -> int:
        return self.left.order

    @property
    def target(self) -> DimProfile:
        return DimProfile(m * n for m, n in zip(self.left.dims, self.right.dims))


def interleave(d: int) -> tuple[int, ...]:
    """One-line image ``(1, d+1, 2, d+2, ..., d, 2d)``.

    Reorders axes ``i_1..i_d j_1..j_d`` into ``i_1 j_1 ... i_d j_d``.
    """
    out: list[int] = []
    for k in range(1, d + 1):
        out += [k, d + k]
    return tuple(out)


def paired_psi(shape: PairedShape) -> PermSpec:
    """``Psi`` with ``V(A (x)_d B) = Psi (V(A) (x) V(B))``."""
    return PermSpec(shape.left.concat(shape.right), interleave(shape.order))


def paired_product(A: Hypermatrix, B: Hypermatrix) -> Hypermatrix:
    shape = PairedShape(A.profile, B.profile)
    d = shape.order
    a = A.data.reshape(shape.left.dims)
    b = B.data.reshape(shape.right.dims)
    # a on even slots, b on odd slots of an order-2d grid, then merge pairs
    a = a.reshape([x for m in shape.left.dims for x in (m, 1)])
    b = b.reshape([x for n in shape.right.dims for x in (1, n)])
    c = (a * b).reshape(shape.target.dims) if d else a * b
    return Hypermatrix(shape.target, c.ravel())


def paired_product_via_forms(A: Hypermatrix, B: Hypermatrix, rows: int | None = None) -> np.ndarray:
    """Matrix form of ``A (x)_d B`` computed as ``W_L (M(A) (x) M(B)) W_R^T``.

    ``rows`` is the number of leading axes in the row group (default: the
    normal form's).
    """
    shape = PairedShape(A.profile, B.profile)
    d = shape.order
    s = normal_row_count(d) if rows is None else rows
    split = IndexSplit.leading(d, s)
    A = Hypermatrix(shape.left, A.data)
    B = Hypermatrix(shape.right, B.data)
    E = np.kron(matrix_expression(A, split), matrix_expression(B, split))
    m, u = shape.left.dims, shape.right.dims
    w_left = PermSpec(m[:s] + u[:s], interleave(s))
    w_right = PermSpec(m[s:] + u[s:], interleave(d - s))
    return E[w_left.index_map()][:, w_right.index_map()]


def paired_vector_path(A: Hypermatrix, B: Hypermatrix) -> np.ndarray:
    """``Psi (V(A) (x) V(B))``."""
    shape = PairedShape(A.profile, B.profile)
    return apply_perm(np.kron(A.data, B.data), paired_psi(shape))


def _paired_factors(f: KpdFactorization, C: Hypermatrix, shape: PairedShape) -> KronDecomposition:
    A = Hypermatrix(shape.left, f.coefficient * f.components[0])
    B = Hypermatrix(shape.right, f.components[1])
    res = float(np.linalg.norm(C.data - paired_product(A, B).data))
    return KronDecomposition((A, B), f.coefficient, res, f)


def _check_paired(C: Hypermatrix, shape: PairedShape) -> Hypermatrix:
    target = shape.target
    dims = _pad(C.dims, target.order)
    if dims != target.dims:
        raise ValueError(f"dims {C.dims} do not match paired shape {shape.left} | {shape.right}")
    return Hypermatrix(target, C.data)


def paired_rearranged_vector(C: Hypermatrix, shape: PairedShape) -> np.ndarray:
    """``Psi^T V(C)``."""
    C = _check_paired(C, shape)
    return apply_perm_transpose(C.data, paired_psi(shape))


def paired_kpd(
    C: Hypermatrix, shape: PairedShape, cfg: SolverConfig = DEFAULT_CONFIG, mode: str = "exact"
) -> KronDecomposition:
    """Solve ``C = A (x)_d B`` (or its least-squares version with ``mode='approx'``)."""
    C = _check_paired(C, shape)
    v = paired_rearranged_vector(C, shape)
    try:
        f = _solve(v, (shape.left.total, shape.right.total), mode, cfg)
    except NotDecomposableError as exc:
        cand = _paired_factors(exc.candidate, C, shape)
        raise NotDecomposableError(cand, cand.residual_norm) from None
    return _paired_factors(f, C, shape)


def paired_sum_kpd(C: Hypermatrix, shape: PairedShape, cfg: SolverConfig = DEFAULT_CONFIG) -> KronSum:
    C = _check_paired(C, shape)
    s = finite_sum_kpd(
        paired_rearranged_vector(C, shape), (shape.left.total, shape.right.total), cfg
    )
    terms = [_paired_factors(t, C, shape) for t in s.terms]
    recon = np.zeros_like(C.data)
    for t in terms:
        recon += paired_product(*t.factors).data
    return KronSum(terms, float(np.linalg.norm(C.data - recon)), s.heads)


def paired_multifold_kpd(
    C: Hypermatrix, profiles: Sequence, cfg: SolverConfig = DEFAULT_CONFIG
) -> list[Hypermatrix]:
    """``C = A_1 (x)_d A_2 (x)_d ... (x)_d A_k`` by left-to-right two-fold splits.

    The overall scalar is kept in ``A_1``. A failing split raises
    :class:`NotDecomposableError` with its 1-based ``stage``.
    """
    profiles = [as_profile(p) for p in profiles]
    if not profiles:
        raise ValueError("need at least one factor profile")
    d = max([C.order] + [p.order for p in profiles])
    profiles = [DimProfile(_pad(p.dims, d)) for p in profiles]
    expected = tuple(int(np.prod(col)) for col in zip(*(p.dims for p in profiles)))
    if _pad(C.dims, d) != expected:
        raise ValueError(f"dims {C.dims} are not the axiswise product of {[p.dims for p in profiles]}")

    rest = Hypermatrix(expected, C.data)
    factors: list[Hypermatrix] = []
    scale = 1.0
    for stage, p in enumerate(profiles[:-1], start=1):
        tail = DimProfile(r // m for r, m in zip(rest.dims, p.dims))
        try:
            dec = paired_kpd(rest, PairedShape(p, tail), cfg)
        except NotDecomposableError as exc:
            raise NotDecomposableError(exc.candidate, exc.residual, stage=stage) from None
        A, B = dec.factors
        scale *= dec.coefficient
        factors.append(Hypermatrix(p, dec.vector.components[0]))
        rest = B
    factors.append(rest)
    factors[0] = factors[0].scaled(scale)
    return factors
