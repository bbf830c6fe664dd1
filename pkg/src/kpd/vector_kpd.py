"""Kronecker product decomposition of vectors.

Three solvers share one parametrization of monic components:

* :func:`exact_kpd` -- the monic decomposition algorithm (MDA). The head
  index of ``x`` fixes the head index of every component; each component is
  read off as a slice of ``x / h0`` through the heads of the other axes.
  The decomposition exists iff the reconstruction from these slices is exact.
* :func:`approx_kpd` -- least-squares fit by fixed-step gradient descent,
  started from the MDA slices.
* :func:`finite_sum_kpd` -- repeated least-squares fits on the residual until
  it vanishes; the residual's head index strictly increases each round.
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .index_monoid import DimProfile, as_profile, linear_to_multi
from .stp import stp_chain


class KpdError(Exception):
    """Base class for decomposition failures."""


class ZeroVectorError(KpdError, ValueError):
    pass


class NonFiniteError(KpdError, FloatingPointError):
    pass


class NotDecomposableError(KpdError):
    """No exact decomposition; carries the MDA candidate and its residual norm.

    ``stage`` is set by multi-fold decompositions to the 1-based two-fold
    step that failed.
    """

    def __init__(self, candidate, residual: float, stage: int | None = None):
        self.candidate = candidate
        self.residual = float(residual)
        self.stage = stage
        where = f" at stage {stage}" if stage is not None else ""
        super().__init__(f"not decomposable{where}: residual norm {self.residual:.6g}")


@dataclass(frozen=True)
class SolverConfig:
    zero_tol: float = 1e-12
    exact_tol: float = 1e-9
    step: float = 0.05
    max_iters: int = 100_000
    grad_tol: float = 1e-10
    sum_epsilon: float = 1e-9
    max_terms: int | None = None  # None: the profile total
    halve_on_increase: bool = False

    def __post_init__(self):
        for name in ("zero_tol", "exact_tol", "grad_tol", "sum_epsilon"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.max_terms is not None and self.max_terms < 1:
            raise ValueError("max_terms must be positive")


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class HeadInfo:
    e: int
    h0: float
    component_heads: tuple[int, ...]


@dataclass
class KpdFactorization:
    """``x ~ coefficient * x_1 |x ... |x x_d`` with monic components.

    ``residual_norm`` is ``||x - coefficient * prod||``; ``objective`` is the
    squared error of the normalized problem ``||x/h0 - prod||^2`` that the
    descent minimizes.
    """

    coefficient: float
    components: tuple[np.ndarray, ...]
    profile: DimProfile
    residual_norm: float
    objective: float = 0.0
    iterations: int = 0
    objective_trace: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    def reconstruct(self) -> np.ndarray:
        return self.coefficient * stp_chain(self.components)

    def is_exact(self, tol: float) -> bool:
        return self.residual_norm <= tol


@dataclass
class SumKpd:
    """``x = sum_k terms[k].reconstruct()`` up to ``residual_norm``.

    ``heads[k]`` is the head index of the residual that term ``k`` fitted.
    """

    terms: list[KpdFactorization]
    residual_norm: float
    heads: list[int]
    profile: DimProfile

    def reconstruct(self) -> np.ndarray:
        out = np.zeros(self.profile.total)
        for t in self.terms:
            out += t.reconstruct()
        return out

    @property
    def coefficients(self) -> list[float]:
        return [t.coefficient for t in self.terms]


def _check_vector(x, profile) -> tuple[np.ndarray, DimProfile]:
    profile = as_profile(profile)
    x = np.asarray(x, dtype=float).ravel()
    if x.size != profile.total:
        raise ValueError(f"vector of length {x.size} does not match profile {profile.dims}")
    return x, profile


def _threshold(x: np.ndarray, zero_tol: float) -> float:
    scale = float(np.max(np.abs(x))) if x.size else 0.0
    return zero_tol * max(1.0, scale)


def head_info(x, profile, zero_tol: float = DEFAULT_CONFIG.zero_tol) -> HeadInfo:
    x, profile = _check_vector(x, profile)
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("vector has non-finite entries")
    nz = np.flatnonzero(np.abs(x) > _threshold(x, zero_tol))
    if nz.size == 0:
        raise ZeroVectorError("vector is numerically zero")
    e = int(nz[0]) + 1
    return HeadInfo(e, float(x[e - 1]), linear_to_multi(e, profile).values)


def mda_project(x0, profile, heads: Sequence[int], axis: int) -> np.ndarray:
    """Slice of ``x0`` along ``axis`` (1-based) with every other axis at its head."""
    x0, profile = _check_vector(x0, profile)
    d = profile.order
    if not 1 <= axis <= d:
        raise ValueError(f"axis {axis} out of range 1..{d}")
    if len(heads) != d:
        raise ValueError("need one head index per axis")
    sel = tuple(slice(None) if k == axis - 1 else heads[k] - 1 for k in range(d))
    return x0.reshape(profile.dims)[sel].copy()


def _monic(v: np.ndarray, head: int) -> np.ndarray:
    v = v.copy()
    v[: head - 1] = 0.0
    v[head - 1] = 1.0
    return v


def _zero_factorization(profile: DimProfile) -> KpdFactorization:
    comps = tuple(np.eye(n)[0] for n in profile.dims)
    return KpdFactorization(0.0, comps, profile, 0.0)


def mda_candidate(x, profile, cfg: SolverConfig = DEFAULT_CONFIG) -> KpdFactorization:
    """MDA components of ``x`` whether or not ``x`` is decomposable."""
    x, profile = _check_vector(x, profile)
    head = head_info(x, profile, cfg.zero_tol)
    x0 = x / head.h0
    comps = tuple(
        _monic(mda_project(x0, profile, head.component_heads, i + 1), head.component_heads[i])
        for i in range(profile.order)
    )
    prod = stp_chain(comps)
    return KpdFactorization(
        head.h0,
        comps,
        profile,
        float(np.linalg.norm(x - head.h0 * prod)),
        objective=float(np.sum((x0 - prod) ** 2)),
    )


def exact_kpd(x, profile, cfg: SolverConfig = DEFAULT_CONFIG) -> KpdFactorization:
    """Exact monic decomposition; raises :class:`NotDecomposableError` otherwise.

    The zero vector decomposes as ``0 * delta^1 |x ... |x delta^1``.
    """
    x, profile = _check_vector(x, profile)
    try:
        cand = mda_candidate(x, profile, cfg)
    except ZeroVectorError:
        return _zero_factorization(profile)
    if cand.residual_norm <= cfg.exact_tol * np.linalg.norm(x):
        return cand
    raise NotDecomposableError(cand, cand.residual_norm)


# ---------------------------------------------------------------------------
# least squares


def _contract_except(R: np.ndarray, comps: Sequence[np.ndarray], axis: int) -> np.ndarray:
    letters = string.ascii_letters
    d = R.ndim
    if d > len(letters):
        raise ValueError("too many axes for contraction")
    subs = [letters[k] for k in range(d)]
    operands = [R]
    spec = ["".join(subs)]
    for k in range(d):
        if k != axis:
            operands.append(comps[k])
            spec.append(subs[k])
    return np.einsum(",".join(spec) + "->" + subs[axis], *operands)


def pack_params(components: Sequence[np.ndarray], heads: Sequence[int]) -> np.ndarray:
    """Free entries (after each head) of monic components, concatenated."""
    return np.concatenate([np.asarray(c, float)[h:] for c, h in zip(components, heads)])


def unpack_params(u, profile, heads: Sequence[int]) -> tuple[np.ndarray, ...]:
    profile = as_profile(profile)
    u = np.asarray(u, dtype=float)
    comps, pos = [], 0
    for n, h in zip(profile.dims, heads):
        c = np.zeros(n)
        c[h - 1] = 1.0
        c[h:] = u[pos : pos + n - h]
        pos += n - h
        comps.append(c)
    if pos != u.size:
        raise ValueError("parameter vector length does not match heads")
    return tuple(comps)


def square_error(u, x0, profile, heads: Sequence[int]) -> float:
    """``E(u) = ||x0 - x_1 |x ... |x x_d||^2`` for components built from ``u``."""
    comps = unpack_params(u, profile, heads)
    r = np.asarray(x0, float) - stp_chain(comps)
    return float(r @ r)


def square_error_gradient(u, x0, profile, heads: Sequence[int]) -> np.ndarray:
    """Closed-form gradient of :func:`square_error` in the free entries."""
    profile = as_profile(profile)
    comps = unpack_params(u, profile, heads)
    R = (np.asarray(x0, float) - stp_chain(comps)).reshape(profile.dims)
    grads = [-2.0 * _contract_except(R, comps, k)[h:] for k, h in enumerate(heads)]
    return np.concatenate(grads) if grads else np.zeros(0)


def approx_kpd(x, profile, cfg: SolverConfig = DEFAULT_CONFIG) -> KpdFactorization:
    """Least-squares monic decomposition by gradient descent from the MDA slices.

    Iterates ``u <- u - h * grad E(u)`` and stops at the first step that does
    not decrease ``E``, once ``||grad E|| <= grad_tol``, or after
    ``max_iters`` accepted steps. With ``halve_on_increase`` a rejected step
    is retried at half length instead of stopping.

    The scalar stays pinned at ``h0``, so the fit always matches ``x`` at its
    head entry.
    """
    x, profile = _check_vector(x, profile)
    head = head_info(x, profile, cfg.zero_tol)
    heads = head.component_heads
    x0 = x / head.h0
    start = mda_candidate(x, profile, cfg)
    u = pack_params(start.components, heads)

    E = square_error(u, x0, profile, heads)
    trace = [E]
    step = cfg.step
    iters = 0
    while iters < cfg.max_iters and u.size:
        g = square_error_gradient(u, x0, profile, heads)
        if np.linalg.norm(g) <= cfg.grad_tol:
            break
        with np.errstate(over="ignore", invalid="ignore"):
            u_new = u - step * g
            E_new = square_error(u_new, x0, profile, heads)
        if not np.isfinite(E_new):
            raise NonFiniteError(f"square error diverged at iteration {iters + 1}; reduce the step")
        if E_new < E:
            u, E = u_new, E_new
            trace.append(E)
            iters += 1
        elif cfg.halve_on_increase and step > 1e-12 * cfg.step:
            step /= 2
        else:
            break

    comps = unpack_params(u, profile, heads)
    return KpdFactorization(
        head.h0,
        comps,
        profile,
        float(np.linalg.norm(x - head.h0 * stp_chain(comps))),
        objective=E,
        iterations=iters,
        objective_trace=np.asarray(trace),
    )


def finite_sum_kpd(x, profile, cfg: SolverConfig = DEFAULT_CONFIG) -> SumKpd:
    """Exact finite sum of decomposable terms.

    Each round fits the residual by :func:`approx_kpd` (or :func:`exact_kpd`
    when the residual is already decomposable, which ends the loop). Stops
    when ``||residual|| <= sum_epsilon`` or after ``max_terms`` terms.
    """
    x, profile = _check_vector(x, profile)
    max_terms = cfg.max_terms or profile.total
    residual = x.copy()
    terms: list[KpdFactorization] = []
    heads: list[int] = []
    while len(terms) < max_terms and np.linalg.norm(residual) > cfg.sum_epsilon:
        try:
            head = head_info(residual, profile, cfg.zero_tol)
        except ZeroVectorError:
            break
        # sub-threshold entries ahead of the head count as zero; dropping them
        # keeps the head index of later residuals increasing
        residual[: head.e - 1] = 0.0
        try:
            term, done = exact_kpd(residual, profile, cfg), True
        except NotDecomposableError:
            term, done = approx_kpd(residual, profile, cfg), False
        terms.append(term)
        heads.append(head.e)
        residual = residual - term.reconstruct()
        if done:
            break
    recon = np.zeros_like(x)
    for t in terms:
        recon += t.reconstruct()
    return SumKpd(terms, float(np.linalg.norm(x - recon)), heads, profile)


@dataclass
class StrategyComparison:
    simultaneous: KpdFactorization
    stepwise_coefficient: float
    stepwise_components: tuple[np.ndarray, ...]
    simultaneous_error: float
    stepwise_error: float


def stepwise_vs_simultaneous(x, profile, cfg: SolverConfig = DEFAULT_CONFIG) -> StrategyComparison:
    """Compare the d-factor least-squares fit with a cascade of two-factor fits.

    The cascade splits ``x ~ x_1 |x z`` over ``n_1 x (n_2...n_d)``, then
    ``z ~ x_2 |x z'`` and so on. Both errors are ``||x - reconstruction||^2``.
    """
    x, profile = _check_vector(x, profile)
    if profile.order < 3:
        raise ValueError("strategy comparison needs at least three factors")
    simultaneous = approx_kpd(x, profile, cfg)

    coefficient = 1.0
    comps: list[np.ndarray] = []
    rest = x
    dims = profile.dims
    for k in range(len(dims) - 1):
        tail = DimProfile(dims[k + 1 :]).total
        fit = approx_kpd(rest, (dims[k], tail), cfg)
        coefficient *= fit.coefficient
        comps.append(fit.components[0])
        rest = fit.components[1]
    comps.append(rest)
    stepwise_recon = coefficient * stp_chain(comps)

    return StrategyComparison(
        simultaneous,
        coefficient,
        tuple(comps),
        float(np.sum((x - simultaneous.reconstruct()) ** 2)),
        float(np.sum((x - stepwise_recon) ** 2)),
    )
