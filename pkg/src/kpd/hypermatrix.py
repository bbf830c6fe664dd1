"""Hypermatrices as profile plus alphabetic-order data, and their matrix views."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .index_monoid import DimProfile, MultiIndex, as_profile, multi_to_linear
from .stp import PermSpec, apply_perm


class Hypermatrix:
    """Order-``d`` data set ``a_{i_1...i_d}`` stored in alphabetic order.

    A hypermatrix is not tied to any matrix arrangement; every matrix form
    (:func:`matrix_expression`, :func:`normal_form`) is a derived view.
    """

    __slots__ = ("profile", "data")

    def __init__(self, profile, data):
        profile = as_profile(profile)
        data = np.array(data, dtype=float).ravel()
        if data.size != profile.total:
            raise ValueError(
                f"data has {data.size} entries, profile {profile.dims} needs {profile.total}"
            )
        data.flags.writeable = False
        self.profile = profile
        self.data = data

    @classmethod
    def from_array(cls, arr) -> "Hypermatrix":
        arr = np.asarray(arr, dtype=float)
        return cls(arr.shape, arr.ravel())

    @property
    def dims(self) -> tuple[int, ...]:
        return self.profile.dims

    @property
    def order(self) -> int:
        return self.profile.order

    def to_array(self) -> np.ndarray:
        """Writable ``numpy`` copy with shape ``dims``."""
        return self.data.reshape(self.dims).copy()

    def __getitem__(self, idx: Sequence[int] | int) -> float:
        """Element at a 1-based multi-index (a bare int for order 1)."""
        if isinstance(idx, (int, np.integer)):
            idx = (idx,)
        return float(self.data[multi_to_linear(MultiIndex(idx, self.profile)) - 1])

    def __repr__(self) -> str:
        return f"Hypermatrix(dims={self.dims}, data={self.data.tolist()})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hypermatrix):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.data, other.data)

    def scaled(self, c: float) -> "Hypermatrix":
        return Hypermatrix(self.profile, c * self.data)


@dataclass(frozen=True)
class IndexSplit:
    """Row and column axis groups (1-based, order significant) of a matrix expression."""

    row_axes: tuple[int, ...]
    col_axes: tuple[int, ...]

    def __init__(self, row_axes: Sequence[int] = (), col_axes: Sequence[int] = ()):
        object.__setattr__(self, "row_axes", tuple(int(a) for a in row_axes))
        object.__setattr__(self, "col_axes", tuple(int(a) for a in col_axes))

    @classmethod
    def leading(cls, d: int, r: int) -> "IndexSplit":
        """First ``r`` axes as rows, the remaining ``d - r`` as columns."""
        if not 0 <= r <= d:
            raise ValueError(f"cannot take {r} row axes from an order-{d} hypermatrix")
        return cls(range(1, r + 1), range(r + 1, d + 1))

    def validate(self, d: int) -> None:
        axes = self.row_axes + self.col_axes
        if sorted(axes) != list(range(1, d + 1)):
            raise ValueError(f"split {self.row_axes} x {self.col_axes} is not a partition of 1..{d}")

    def shape(self, profile: DimProfile) -> tuple[int, int]:
        rows = cols = 1
        for a in self.row_axes:
            rows *= profile.dims[a - 1]
        for a in self.col_axes:
            cols *= profile.dims[a - 1]
        return rows, cols


def normal_row_count(d: int) -> int:
    """Row-group size of the normal form: ``[d/2] + 1`` for odd ``d``, ``[d/2]`` for even."""
    return d // 2 + 1 if d % 2 else d // 2


def matrix_expression(A: Hypermatrix, split: IndexSplit) -> np.ndarray:
    split.validate(A.order)
    axes = [a - 1 for a in split.row_axes + split.col_axes]
    arr = A.data.reshape(A.dims).transpose(axes)
    return np.ascontiguousarray(arr).reshape(split.shape(A.profile))


def from_matrix_expression(M, split: IndexSplit, profile) -> Hypermatrix:
    profile = as_profile(profile)
    split.validate(profile.order)
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.shape != split.shape(profile):
        raise ValueError(
            f"matrix of shape {M.shape} does not match split of {profile.dims}: "
            f"expected {split.shape(profile)}"
        )
    axes = [a - 1 for a in split.row_axes + split.col_axes]
    arr = M.reshape([profile.dims[a] for a in axes])
    return Hypermatrix(profile, arr.transpose(np.argsort(axes)).ravel())


def vector_form(A: Hypermatrix) -> np.ndarray:
    return A.data.copy()


def sigma_transpose(A: Hypermatrix, sigma: Sequence[int]) -> Hypermatrix:
    """``A^sigma``: axis ``k`` of the result is axis ``sigma[k]`` of ``A``."""
    spec = PermSpec(A.profile, sigma)
    return Hypermatrix(spec.target_profile, apply_perm(A.data, spec))


def normal_form(A: Hypermatrix) -> np.ndarray:
    return matrix_expression(A, IndexSplit.leading(A.order, normal_row_count(A.order)))


def from_normal_form(M, profile) -> Hypermatrix:
    profile = as_profile(profile)
    split = IndexSplit.leading(profile.order, normal_row_count(profile.order))
    return from_matrix_expression(M, split, profile)


def row_stack(M) -> np.ndarray:
    """``V_r(M)``: rows concatenated top to bottom."""
    return np.asarray(M, dtype=float).ravel(order="C")


def col_stack(M) -> np.ndarray:
    """``V_c(M)``: columns concatenated left to right."""
    return np.asarray(M, dtype=float).ravel(order="F")


def from_col_stack(v, rows: int, cols: int) -> np.ndarray:
    return np.asarray(v, dtype=float).reshape((rows, cols), order="F")
