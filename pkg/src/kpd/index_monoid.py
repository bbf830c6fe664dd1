"""Index monoid: products of 1-based indexes and multi-index conversion.

Elements of a hypermatrix over dims ``(n_1, ..., n_d)`` are arranged in
alphabetic (lexicographic) order of their multi-index. Every public index
here is 1-based; the empty profile ``()`` is the dummy index and acts as the
identity of the index product.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

INT64_MAX = 2**63 - 1


def checked_product(values: Iterable[int]) -> int:
    """Product of positive integers, raising ``OverflowError`` past int64."""
    total = 1
    for v in values:
        total *= int(v)
        if total > INT64_MAX:
            raise OverflowError("index space exceeds 64-bit range")
    return total


@dataclass(frozen=True)
class DimProfile:
    """Ordered positive dimensions ``(n_1, ..., n_d)`` of a multi-index space."""

    dims: tuple[int, ...]
    total: int = field(init=False, repr=False, compare=False)

    def __init__(self, dims: Iterable[int] = ()):
        dims = tuple(int(n) for n in dims)
        if any(n < 1 for n in dims):
            raise ValueError(f"dimensions must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "total", checked_product(dims))

    @property
    def order(self) -> int:
        return len(self.dims)

    def __len__(self) -> int:
        return len(self.dims)

    def __iter__(self):
        return iter(self.dims)

    def __getitem__(self, k):
        return self.dims[k]

    def concat(self, other: "DimProfile") -> "DimProfile":
        """Profile of the index product ``self x other``."""
        return DimProfile(self.dims + as_profile(other).dims)

    def __str__(self) -> str:
        return "x".join(map(str, self.dims)) if self.dims else "()"


EMPTY = DimProfile(())


def as_profile(p: DimProfile | Sequence[int]) -> DimProfile:
    return p if isinstance(p, DimProfile) else DimProfile(p)


@dataclass(frozen=True)
class MultiIndex:
    values: tuple[int, ...]
    profile: DimProfile

    def __init__(self, values: Iterable[int], profile: DimProfile | Sequence[int]):
        values = tuple(int(v) for v in values)
        profile = as_profile(profile)
        if len(values) != profile.order:
            raise ValueError(
                f"index {values} has length {len(values)}, profile has order {profile.order}"
            )
        for v, n in zip(values, profile.dims):
            if not 1 <= v <= n:
                raise ValueError(f"index {values} out of range for dims {profile.dims}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "profile", profile)


def idx_product(i: int, m: int, j: int, n: int) -> int:
    """Single index ``k = (i-1)*n + j`` of the pair ``(i, j)`` over ``m x n``."""
    if not (1 <= i <= m and 1 <= j <= n):
        raise ValueError(f"index pair ({i}, {j}) out of range for {m} x {n}")
    return (i - 1) * n + j


def multi_to_linear(idx: MultiIndex) -> int:
    """1-based alphabetic position of a multi-index (Horner form)."""
    j = 0
    for v, n in zip(idx.values, idx.profile.dims):
        j = j * n + (v - 1)
    return j + 1


def linear_to_multi(j: int, profile: DimProfile | Sequence[int]) -> MultiIndex:
    """Inverse of :func:`multi_to_linear` by repeated integer division.

    Peels the last axis first: ``i_k = j' - [j'/n_k] n_k + 1`` with
    ``j' <- [j'/n_k]``, starting from ``j' = j - 1``.
    """
    profile = as_profile(profile)
    if not 1 <= j <= profile.total:
        raise ValueError(f"linear index {j} out of range 1..{profile.total}")
    rest = j - 1
    values = [0] * profile.order
    for k in range(profile.order - 1, -1, -1):
        n = profile.dims[k]
        q = rest // n
        values[k] = rest - q * n + 1
        rest = q
    return MultiIndex(values, profile)


def divisor_pairs(n: int) -> list[tuple[int, int]]:
    """All ordered factorizations ``n = a*b`` with positive integers."""
    return [(a, n // a) for a in range(1, n + 1) if n % a == 0]
