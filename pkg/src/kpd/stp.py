"""Dense kernels: Kronecker and semi-tensor products, swap and permutation matrices.

Permutations of coordinates are kept as index maps; the dense 0/1 matrix is
only built on request by :func:`perm_matrix` and :func:`swap_matrix`.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import lcm
from typing import Sequence

import numpy as np

from .index_monoid import DimProfile, as_profile, checked_product


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        return A.reshape(-1, 1)
    if A.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {A.shape}")
    return A


def kron(A, B) -> np.ndarray:
    """Kronecker product; column vectors stay column vectors."""
    A, B = _as_matrix(A), _as_matrix(B)
    checked_product([A.shape[0], B.shape[0], A.shape[1], B.shape[1]])
    return np.kron(A, B)


def stp(A, B) -> np.ndarray:
    """Left semi-tensor product ``(A (x) I_{t/n}) (B (x) I_{t/p})``, ``t = lcm(n, p)``.

    1-D inputs are read as column vectors, so for two vectors this is their
    Kronecker product.
    """
    A, B = _as_matrix(A), _as_matrix(B)
    n, p = A.shape[1], B.shape[0]
    t = lcm(n, p)
    checked_product([A.shape[0], t // n, B.shape[1], t // p])
    left = A if t == n else np.kron(A, np.eye(t // n))
    right = B if t == p else np.kron(B, np.eye(t // p))
    return left @ right


def stp_chain(factors: Sequence) -> np.ndarray:
    """``factors[0] |x factors[1] |x ...`` as a flat vector when all are vectors."""
    out = np.ones(1)
    for f in factors:
        out = np.kron(out, np.asarray(f, dtype=float).ravel())
    return out


@dataclass(frozen=True)
class PermSpec:
    """Axis permutation of a hypermatrix over ``profile``.

    ``sigma`` is a 1-based one-line image list: axis ``k`` of the permuted
    hypermatrix is axis ``sigma[k]`` of the original, so the permuted profile
    is ``(n_sigma(1), ..., n_sigma(d))``. With this reading the profile
    ``3x4x2`` and ``sigma = (3, 1, 2)`` give the matrix listed as
    ``delta_24[1, 13, 2, 14, ...]``.
    """

    profile: DimProfile
    sigma: tuple[int, ...]

    def __init__(self, profile, sigma: Sequence[int]):
        profile = as_profile(profile)
        sigma = tuple(int(s) for s in sigma)
        if sorted(sigma) != list(range(1, profile.order + 1)):
            raise ValueError(f"sigma {sigma} is not a permutation of 1..{profile.order}")
        object.__setattr__(self, "profile", profile)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def identity(cls, profile) -> "PermSpec":
        profile = as_profile(profile)
        return cls(profile, range(1, profile.order + 1))

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(s - 1 for s in self.sigma)

    @property
    def target_profile(self) -> DimProfile:
        return DimProfile(self.profile.dims[a] for a in self.axes)

    def inverse(self) -> "PermSpec":
        """Permutation over :attr:`target_profile` undoing this one."""
        inv = [0] * len(self.sigma)
        for k, s in enumerate(self.sigma, start=1):
            inv[s - 1] = k
        return PermSpec(self.target_profile, inv)

    def index_map(self) -> np.ndarray:
        """0-based gather map ``g`` with ``(W x)[k] = x[g[k]]``."""
        n = self.profile.total
        return np.arange(n).reshape(self.profile.dims).transpose(self.axes).ravel()


def apply_perm(x, spec: PermSpec) -> np.ndarray:
    """``W^sigma x`` by relabelling coordinates, without building ``W``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != spec.profile.total:
        raise ValueError(
            f"vector of shape {x.shape} does not match profile {spec.profile.dims}"
        )
    return x.reshape(spec.profile.dims).transpose(spec.axes).ravel()


def apply_perm_transpose(x, spec: PermSpec) -> np.ndarray:
    """``(W^sigma)^T x``."""
    return apply_perm(x, spec.inverse())


def perm_matrix(spec: PermSpec) -> np.ndarray:
    n = spec.profile.total
    W = np.zeros((n, n))
    W[np.arange(n), spec.index_map()] = 1.0
    return W


def swap_matrix(m: int, n: int) -> np.ndarray:
    """``W_[m,n]`` with ``W (x (x) y) = y (x) x`` for ``x`` in R^m, ``y`` in R^n."""
    if m < 1 or n < 1:
        raise ValueError("swap matrix dimensions must be positive")
    return perm_matrix(PermSpec((m, n), (2, 1)))


def delta_listing(W) -> list[int]:
    """Column listing ``[i_1, ..., i_n]`` of a 0/1 matrix ``W = delta_n[i_1, ..., i_n]``.

    Column ``c`` of ``W`` is the unit vector ``delta_n^{i_c}`` (1-based).
    """
    W = np.asarray(W)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("delta listing needs a square matrix")
    if not (np.all((W == 0) | (W == 1)) and np.all(W.sum(axis=0) == 1)):
        raise ValueError("matrix is not a logical (delta) matrix")
    return [int(r) + 1 for r in np.argmax(W, axis=0)]


def from_delta_listing(listing: Sequence[int]) -> np.ndarray:
    n = len(listing)
    W = np.zeros((n, n))
    W[np.asarray(listing) - 1, np.arange(n)] = 1.0
    return W
