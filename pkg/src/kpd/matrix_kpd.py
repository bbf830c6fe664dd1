"""Matrix KPD ``N ~ B (x) C`` reduced to vector KPD.

With column stacking ``V_c``, ``V_c(B (x) C) = Psi (V_c(B) (x) V_c(C))`` where
``Psi = I_n (x) W_[m,q] (x) I_p`` for ``B`` of shape ``m x n`` and ``C`` of
shape ``p x q``. So ``N`` decomposes iff ``Psi^T V_c(N)`` does over
``mn x pq``, and the vector solvers carry over unchanged.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .hypermatrix import col_stack, from_col_stack
from .index_monoid import divisor_pairs
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


@dataclass
class KronDecomposition:
    """Two-factor decomposition ``target ~ factors[0] (x) factors[1]``.

    The head coefficient is folded into ``factors[0]``; ``vector`` is the
    underlying monic vector factorization.
    """

    factors: tuple[Any, Any]
    coefficient: float
    residual_norm: float
    vector: KpdFactorization

    @property
    def objective(self) -> float:
        return self.vector.objective

    @property
    def iterations(self) -> int:
        return self.vector.iterations


@dataclass
class KronSum:
    terms: list[KronDecomposition]
    residual_norm: float
    heads: list[int]


def psi_matrix(m: int, n: int, p: int, q: int) -> PermSpec:
    """``Psi = I_n (x) W_[m,q] (x) I_p`` as a permutation of the profile ``n x m x q x p``."""
    return PermSpec((n, m, q, p), (1, 3, 2, 4))


def _check_shape(N, shape) -> tuple[np.ndarray, tuple[int, int, int, int]]:
    N = np.asarray(N, dtype=float)
    m, n, p, q = (int(s) for s in shape)
    if min(m, n, p, q) < 1:
        raise ValueError(f"factor shape {shape} must be positive")
    if N.ndim != 2 or N.shape != (m * p, n * q):
        raise ValueError(
            f"matrix of shape {N.shape} does not match factors {m}x{n} and {p}x{q}"
        )
    return N, (m, n, p, q)


def rearranged_vector(N, shape) -> np.ndarray:
    """``Psi^T V_c(N)``, the vector whose KPD over ``mn x pq`` is the matrix KPD."""
    N, (m, n, p, q) = _check_shape(N, shape)
    return apply_perm_transpose(col_stack(N), psi_matrix(m, n, p, q))


def _to_matrices(f: KpdFactorization, N, shape) -> KronDecomposition:
    m, n, p, q = shape
    B = f.coefficient * from_col_stack(f.components[0], m, n)
    C = from_col_stack(f.components[1], p, q)
    residual = float(np.linalg.norm(N - np.kron(B, C)))
    return KronDecomposition((B, C), f.coefficient, residual, f)


def matrix_exact_kpd(N, shape, cfg: SolverConfig = DEFAULT_CONFIG) -> KronDecomposition:
    N, shape = _check_shape(N, shape)
    v = rearranged_vector(N, shape)
    m, n, p, q = shape
    try:
        f = exact_kpd(v, (m * n, p * q), cfg)
    except NotDecomposableError as exc:
        cand = _to_matrices(exc.candidate, N, shape)
        raise NotDecomposableError(cand, cand.residual_norm) from None
    return _to_matrices(f, N, shape)


def matrix_approx_kpd(N, shape, cfg: SolverConfig = DEFAULT_CONFIG) -> KronDecomposition:
    N, shape = _check_shape(N, shape)
    m, n, p, q = shape
    f = approx_kpd(rearranged_vector(N, shape), (m * n, p * q), cfg)
    return _to_matrices(f, N, shape)


def matrix_sum_kpd(N, shape, cfg: SolverConfig = DEFAULT_CONFIG) -> KronSum:
    """``N = sum_k B_k (x) C_k`` by finite-sum KPD of the rearranged vector."""
    N, shape = _check_shape(N, shape)
    m, n, p, q = shape
    s = finite_sum_kpd(rearranged_vector(N, shape), (m * n, p * q), cfg)
    terms = [_to_matrices(t, N, shape) for t in s.terms]
    recon = sum((np.kron(*t.factors) for t in terms), np.zeros_like(N))
    return KronSum(terms, float(np.linalg.norm(N - recon)), s.heads)


def matrix_multifold_kpd(N, shapes: Sequence[tuple[int, int]], cfg: SolverConfig = DEFAULT_CONFIG):
    """``N = B_1 (x) ... (x) B_k`` by two-fold splits taken left to right.

    ``shapes`` lists ``(rows, cols)`` of each factor. The scalar is kept in
    ``B_1``. A failing split raises :class:`NotDecomposableError` with its
    1-based ``stage``.
    """
    N = np.asarray(N, dtype=float)
    shapes = [(int(r), int(c)) for r, c in shapes]
    if len(shapes) < 1:
        raise ValueError("need at least one factor shape")
    rows = int(np.prod([r for r, _ in shapes]))
    cols = int(np.prod([c for _, c in shapes]))
    if N.shape != (rows, cols):
        raise ValueError(f"matrix of shape {N.shape} does not match factor shapes {shapes}")

    factors = []
    rest = N
    scale = 1.0
    for stage, (r, c) in enumerate(shapes[:-1], start=1):
        tail_r, tail_c = rest.shape[0] // r, rest.shape[1] // c
        try:
            dec = matrix_exact_kpd(rest, (r, c, tail_r, tail_c), cfg)
        except NotDecomposableError as exc:
            raise NotDecomposableError(exc.candidate, exc.residual, stage=stage) from None
        B, C = dec.factors
        scale *= dec.coefficient
        factors.append(B / dec.coefficient if dec.coefficient else B)
        rest = C
    factors.append(rest)
    factors[0] = scale * factors[0]
    return factors


@dataclass
class ShapeCandidate:
    shape: tuple[int, int, int, int]
    residual_norm: float


def enumerate_matrix_shapes(
    N, cfg: SolverConfig = DEFAULT_CONFIG, threads: int = 1
) -> list[ShapeCandidate]:
    """Least-squares residual for every nontrivial ``(m, n, p, q)`` split of ``N``.

    Splits where either factor is ``1 x 1`` are skipped. Sorted by residual.
    """
    N = np.asarray(N, dtype=float)
    shapes = [
        (m, n, p, q)
        for m, p in divisor_pairs(N.shape[0])
        for n, q in divisor_pairs(N.shape[1])
        if m * n > 1 and p * q > 1
    ]

    def score(shape):
        if not np.any(N):
            return ShapeCandidate(shape, 0.0)
        return ShapeCandidate(shape, matrix_approx_kpd(N, shape, cfg).residual_norm)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            found = list(pool.map(score, shapes))
    else:
        found = [score(s) for s in shapes]
    return sorted(found, key=lambda c: c.residual_norm)


def matrix_kron_vector(B, C) -> np.ndarray:
    """``Psi (V_c(B) (x) V_c(C))``, which equals ``V_c(B (x) C)``."""
    B, C = np.asarray(B, float), np.asarray(C, float)
    (m, n), (p, q) = B.shape, C.shape
    return apply_perm(np.kron(col_stack(B), col_stack(C)), psi_matrix(m, n, p, q))
