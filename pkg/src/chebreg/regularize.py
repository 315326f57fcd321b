"""TSVE and Tikhonov regularization on a singular value expansion.

All solvers work on the projection of the data onto the left singular
functions, so residual norms, solution norms and errors are cheap closed-form
sums. The component of the data outside the span of the ``phi_i`` enters every
residual through ``g_perp_norm_sq``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .bivariate import LowRankKernel
from .errors import DomainMismatch, OutOfRange, UnattainableDiscrepancy, ZeroExactNorm
from .funapprox import FuncApprox, Interval, PiecewiseFunc, distance, evaluate_many, gram, inner, lincomb, norm
from .sve import SveExpansion

LAMBDA_LO = 1e-12
LAMBDA_HI = 10.0
BRENT_XATOL = 1e-12
BRENT_MAXITER = 200


@dataclass(frozen=True)
class TruncationIndex:
    ell: int

    def __float__(self):
        return float(self.ell)


@dataclass(frozen=True)
class TikhonovLambda:
    lam: float

    def __float__(self):
        return float(self.lam)


Param = Union[TruncationIndex, TikhonovLambda]


@dataclass(frozen=True)
class RhsProjection:
    """Coefficients ``c_i = <phi_i, g>`` and the squared norm of what remains."""

    c: np.ndarray
    g_perp_norm_sq: float
    g_norm_sq: float

    @property
    def g_perp_norm(self) -> float:
        return math.sqrt(self.g_perp_norm_sq)


@dataclass(frozen=True, eq=False)
class RegularizedSolution:
    """``x(t) = sum_j betas[j] * basis[j](t)`` together with the parameter that produced it."""

    betas: np.ndarray
    basis: tuple[FuncApprox, ...]
    param: Param
    residual_norm: float
    attained: bool = True

    def __post_init__(self):
        if len(self.betas) > len(self.basis):
            raise ValueError("more coefficients than basis functions")

    def function(self) -> FuncApprox:
        if len(self.betas) == 0:
            return FuncApprox.zero(self.basis[0].domain)
        return lincomb(self.basis[: len(self.betas)], self.betas)

    def __call__(self, t):
        return self.function()(t)

    def norm(self) -> float:
        """``||x||``, exact because the basis is orthonormal."""
        return float(np.linalg.norm(self.betas))


def project_rhs(S: SveExpansion, g: FuncApprox) -> RhsProjection:
    """Project ``g`` onto the left singular functions.

    The out-of-span part is measured as ``||g - sum c_i phi_i||`` directly,
    which avoids the cancellation in ``||g||^2 - sum c_i^2``.
    """
    if g.domain != S.domain_s:
        raise DomainMismatch(f"g lives on {g.domain}, singular functions on {S.domain_s}")
    c = gram(S.phis, [g])[:, 0]
    g_norm_sq = norm(g) ** 2
    perp = norm(g - lincomb(S.phis, c)) ** 2 if np.any(c) else g_norm_sq
    return RhsProjection(c, float(perp), float(g_norm_sq))


# ---------------------------------------------------------------------------
# 1D solvers
# ---------------------------------------------------------------------------


def tsve_residuals(P: RhsProjection) -> np.ndarray:
    """``residual(ell)`` for ``ell = 0 .. r``; non-increasing by construction."""
    c2 = np.asarray(P.c) ** 2
    tails = np.concatenate((np.cumsum(c2[::-1])[::-1], [0.0]))
    return np.sqrt(tails + P.g_perp_norm_sq)


def tsve_solve(S: SveExpansion, P: RhsProjection, ell: int) -> RegularizedSolution:
    """Truncated expansion keeping the first ``ell`` terms."""
    if not 1 <= ell <= S.rank:
        raise OutOfRange(f"ell={ell} outside [1, {S.rank}]")
    betas = np.asarray(P.c[:ell]) / S.sigmas[:ell]
    return RegularizedSolution(betas, S.psis, TruncationIndex(ell), float(tsve_residuals(P)[ell]))


def tikhonov_filter(sigmas: np.ndarray, lam: float) -> np.ndarray:
    """``lam^2 / (sigma^2 + lam^2)``, the fraction of each data coefficient left in the residual."""
    s2 = sigmas**2
    return lam**2 / (s2 + lam**2)


def tikhonov_residual(sigmas: np.ndarray, P: RhsProjection, lam: float) -> float:
    f = tikhonov_filter(sigmas, lam)
    return math.sqrt(float(np.sum((f * P.c) ** 2)) + P.g_perp_norm_sq)


def tikhonov_solve(S: SveExpansion, P: RhsProjection, lam: float) -> RegularizedSolution:
    """Tikhonov solution ``beta_j = sigma_j c_j / (sigma_j^2 + lam^2)``."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    betas = S.sigmas * P.c / (S.sigmas**2 + lam**2)
    return RegularizedSolution(betas, S.psis, TikhonovLambda(float(lam)), tikhonov_residual(S.sigmas, P, lam))


def discrepancy_truncation(S: SveExpansion, P: RhsProjection, delta: float, eta: float = 1.0) -> tuple[int, bool]:
    """Smallest ``ell >= 1`` with ``residual(ell) <= eta * delta``.

    Returns:
        ``(ell, attained)``. When even the full expansion misses the level,
        ``ell`` is the full rank, ``attained`` is False and an
        :class:`UnattainableDiscrepancy` warning is issued.
    """
    _check_discrepancy_args(delta, eta)
    res = tsve_residuals(P)
    level = eta * delta
    hits = np.flatnonzero(res[1:] <= level)
    if hits.size == 0:
        warnings.warn(
            f"full-rank residual {res[-1]:.3e} exceeds eta*delta = {level:.3e}",
            UnattainableDiscrepancy,
            stacklevel=2,
        )
        return S.rank, False
    return int(hits[0]) + 1, True


def sigma_rule_truncation(S: SveExpansion, delta: float, eta: float = 3.0) -> int:
    """Largest ``ell`` with ``sigma_ell >= eta * delta`` (at least 1).

    Balances the two terms of the a-priori TSVE error bound: propagated noise
    ``delta / sigma_ell`` stays below ``1 / eta``.
    """
    _check_discrepancy_args(delta, 1.0)
    return max(1, int(np.count_nonzero(S.sigmas >= eta * delta)))


def discrepancy_lambda(S: SveExpansion, P: RhsProjection, delta: float, eta: float = 1.0) -> tuple[float, bool]:
    """Tikhonov parameter whose residual matches ``eta * delta``.

    Minimises ``(residual(lam) - eta delta)^2`` over ``log lam`` in
    ``[1e-12 sigma_1, 10 sigma_1]`` with bounded Brent. The residual increases
    with ``lam``, so when the level lies strictly between the residuals at the
    two ends the minimiser is its root.

    Returns:
        ``(lam, attained)``; on failure a boundary value and a warning.
    """
    _check_discrepancy_args(delta, eta)
    level = eta * delta
    lo, hi = LAMBDA_LO * S.sigmas[0], LAMBDA_HI * S.sigmas[0]
    r_lo = tikhonov_residual(S.sigmas, P, lo)
    r_hi = tikhonov_residual(S.sigmas, P, hi)
    if level <= r_lo:
        warnings.warn(
            f"residual at the smallest lambda {r_lo:.3e} exceeds eta*delta = {level:.3e}",
            UnattainableDiscrepancy,
            stacklevel=2,
        )
        return lo, False
    if level >= r_hi:
        warnings.warn(
            f"eta*delta = {level:.3e} exceeds the residual {r_hi:.3e} at the largest lambda",
            UnattainableDiscrepancy,
            stacklevel=2,
        )
        return hi, False
    return _match_level(lambda lam: tikhonov_residual(S.sigmas, P, lam), level, lo, hi), True


def _match_level(residual, level: float, lo: float, hi: float) -> float:
    """Brent minimisation of ``(residual(lam) - level)^2`` over ``log lam``.

    The result is nudged down until ``residual <= level``, so the returned
    parameter never overshoots the discrepancy level by rounding.
    """
    out = minimize_scalar(
        lambda u: (residual(math.exp(u)) - level) ** 2,
        bounds=(math.log(lo), math.log(hi)),
        method="bounded",
        options={"xatol": BRENT_XATOL, "maxiter": BRENT_MAXITER},
    )
    u, step = float(out.x), BRENT_XATOL
    while residual(math.exp(u)) > level and u > math.log(lo):
        u = max(u - step, math.log(lo))
        step *= 2
    return math.exp(u)


def _check_discrepancy_args(delta: float, eta: float):
    if not delta > 0:
        raise ValueError("delta must be > 0")
    if eta < 1:
        raise ValueError("eta must be >= 1")


def exact_betas(S: SveExpansion, g: FuncApprox) -> np.ndarray:
    """Coefficients ``<phi_i, g> / sigma_i`` of the noise-free solution."""
    return project_rhs(S, g).c / S.sigmas


def tsve_error_bound(
    S: SveExpansion, betas_exact: np.ndarray, ell: int, delta: float, x_norm: float | None = None
) -> float:
    """A-priori bound ``(delta^2 / sigma_ell^2 + sum_{i > ell} beta_i^2)^(1/2)`` on the TSVE error.

    The sum runs over the retained expansion. If the exact solution is not in
    the span of the retained ``psi_i`` (a discontinuous ``x``, say), pass
    ``x_norm = ||x||``: the unresolved part ``||x||^2 - sum_i beta_i^2`` is then
    added to the tail, which is the same sum taken over the infinite expansion.
    """
    if not 1 <= ell <= S.rank:
        raise OutOfRange(f"ell={ell} outside [1, {S.rank}]")
    b2 = np.asarray(betas_exact, dtype=float) ** 2
    tail = float(np.sum(b2[ell:]))
    if x_norm is not None:
        tail += max(x_norm**2 - float(np.sum(b2)), 0.0)
    return math.sqrt((delta / S.sigmas[ell - 1]) ** 2 + tail)


# ---------------------------------------------------------------------------
# 2D separable problems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RectIndicator:
    """Indicator of ``[a1, b1] x [a2, b2]`` on the rectangle ``dom1 x dom2``."""

    dom1: Interval
    dom2: Interval
    rect: tuple[float, float, float, float]

    def __call__(self, t1, t2):
        a1, b1, a2, b2 = self.rect
        t1, t2 = np.asarray(t1), np.asarray(t2)
        return ((t1 > a1) & (t1 < b1) & (t2 > a2) & (t2 < b2)).astype(float)

    def factors(self) -> tuple[PiecewiseFunc, PiecewiseFunc]:
        a1, b1, a2, b2 = self.rect
        f1 = PiecewiseFunc.from_pieces([self.dom1.lo, a1, b1, self.dom1.hi], [0.0, 1.0, 0.0])
        f2 = PiecewiseFunc.from_pieces([self.dom2.lo, a2, b2, self.dom2.hi], [0.0, 1.0, 0.0])
        return f1, f2

    def norm(self) -> float:
        a1, b1, a2, b2 = self.rect
        return math.sqrt((b1 - a1) * (b2 - a2))


@dataclass(frozen=True)
class RhsProjection2D:
    """``C[i, j] = <phi_i^(1) phi_j^(2), g>`` and the squared out-of-span norm."""

    C: np.ndarray
    g_perp_norm_sq: float
    g_norm_sq: float


@dataclass(frozen=True, eq=False)
class Solution2D:
    """``x(t1, t2) = sum_kl betas[k, l] psi_k^(1)(t1) psi_l^(2)(t2)``."""

    betas: np.ndarray
    bases: tuple[tuple[FuncApprox, ...], tuple[FuncApprox, ...]]
    param: Param
    residual_norm: float
    attained: bool = True

    def __post_init__(self):
        r1, r2 = self.betas.shape
        if r1 > len(self.bases[0]) or r2 > len(self.bases[1]):
            raise ValueError("beta matrix larger than the bases")

    def grid(self, t1, t2) -> np.ndarray:
        """Samples on the tensor grid ``t1 x t2``."""
        r1, r2 = self.betas.shape
        P1 = evaluate_many(self.bases[0][:r1], np.asarray(t1, dtype=float))
        P2 = evaluate_many(self.bases[1][:r2], np.asarray(t2, dtype=float))
        return P1 @ self.betas @ P2.T

    def norm(self) -> float:
        return float(np.linalg.norm(self.betas))


def project_rhs_2d(S1: SveExpansion, S2: SveExpansion, G: LowRankKernel) -> RhsProjection2D:
    """Coefficients of a low-rank ``g(s1, s2)`` in the product basis ``phi^(1) x phi^(2)``.

    With ``G = U D V^T``, ``C = (Phi1^T U) D (Phi2^T V)^T``. The out-of-span
    norm is ``||g||^2 - ||C||_F^2`` clamped at zero.
    """
    if (G.domain_s, G.domain_t) != (S1.domain_s, S2.domain_s):
        raise DomainMismatch("data and singular functions live on different rectangles")
    g_norm_sq = G.norm() ** 2
    if G.rank == 0:
        return RhsProjection2D(np.zeros((S1.rank, S2.rank)), 0.0, 0.0)
    A = gram(S1.phis, G.cols)
    B = gram(S2.phis, G.rows)
    C = A @ G.middle @ B.T
    perp = max(g_norm_sq - float(np.sum(C**2)), 0.0)
    return RhsProjection2D(C, perp, g_norm_sq)


def product_spectrum(S1: SveExpansion, S2: SveExpansion) -> np.ndarray:
    return np.outer(S1.sigmas, S2.sigmas)


def _product_order(S1: SveExpansion, S2: SveExpansion) -> np.ndarray:
    """Flat indices of the product spectrum, largest first (stable for ties)."""
    return np.argsort(-product_spectrum(S1, S2).ravel(), kind="stable")


def tsve_residuals_2d(S1: SveExpansion, S2: SveExpansion, P: RhsProjection2D) -> np.ndarray:
    """Residual when keeping the top ``m`` products, ``m = 0 .. r1*r2``."""
    c2 = P.C.ravel()[_product_order(S1, S2)] ** 2
    tails = np.concatenate((np.cumsum(c2[::-1])[::-1], [0.0]))
    return np.sqrt(tails + P.g_perp_norm_sq)


def tsve_solve_2d(S1: SveExpansion, S2: SveExpansion, P: RhsProjection2D, m: int) -> Solution2D:
    """Keep the ``m`` largest products ``sigma_i mu_j``."""
    total = S1.rank * S2.rank
    if not 1 <= m <= total:
        raise OutOfRange(f"m={m} outside [1, {total}]")
    keep = _product_order(S1, S2)[:m]
    betas = np.zeros(total)
    betas[keep] = P.C.ravel()[keep] / product_spectrum(S1, S2).ravel()[keep]
    res = float(tsve_residuals_2d(S1, S2, P)[m])
    return Solution2D(betas.reshape(S1.rank, S2.rank), (S1.psis, S2.psis), TruncationIndex(m), res)


def tikhonov_residual_2d(S1: SveExpansion, S2: SveExpansion, P: RhsProjection2D, lam: float) -> float:
    f = tikhonov_filter(product_spectrum(S1, S2), lam)
    return math.sqrt(float(np.sum((f * P.C) ** 2)) + P.g_perp_norm_sq)


def tikhonov_solve_2d(S1: SveExpansion, S2: SveExpansion, P: RhsProjection2D, lam: float) -> Solution2D:
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    sm = product_spectrum(S1, S2)
    betas = sm * P.C / (sm**2 + lam**2)
    res = tikhonov_residual_2d(S1, S2, P, lam)
    return Solution2D(betas, (S1.psis, S2.psis), TikhonovLambda(float(lam)), res)


def discrepancy_truncation_2d(
    S1: SveExpansion, S2: SveExpansion, P: RhsProjection2D, delta: float, eta: float = 10.0
) -> tuple[int, bool]:
    _check_discrepancy_args(delta, eta)
    res = tsve_residuals_2d(S1, S2, P)
    hits = np.flatnonzero(res[1:] <= eta * delta)
    if hits.size == 0:
        warnings.warn(
            f"full-rank residual {res[-1]:.3e} exceeds eta*delta = {eta * delta:.3e}",
            UnattainableDiscrepancy,
            stacklevel=2,
        )
        return res.size - 1, False
    return int(hits[0]) + 1, True


def discrepancy_lambda_2d(
    S1: SveExpansion, S2: SveExpansion, P: RhsProjection2D, delta: float, eta: float = 10.0
) -> tuple[float, bool]:
    _check_discrepancy_args(delta, eta)
    level = eta * delta
    top = S1.sigmas[0] * S2.sigmas[0]
    lo, hi = LAMBDA_LO * top, LAMBDA_HI * top
    r_lo = tikhonov_residual_2d(S1, S2, P, lo)
    r_hi = tikhonov_residual_2d(S1, S2, P, hi)
    if level <= r_lo or level >= r_hi:
        warnings.warn(
            f"eta*delta = {level:.3e} outside the residual range [{r_lo:.3e}, {r_hi:.3e}]",
            UnattainableDiscrepancy,
            stacklevel=2,
        )
        return (lo if level <= r_lo else hi), False
    return _match_level(lambda lam: tikhonov_residual_2d(S1, S2, P, lam), level, lo, hi), True


def solve_2d_tsve(
    S1: SveExpansion, S2: SveExpansion, G: LowRankKernel, delta: float | None = None, eta: float = 10.0, m: int | None = None
) -> Solution2D:
    """2D TSVE with ``m`` given or chosen by the discrepancy principle."""
    P = project_rhs_2d(S1, S2, G)
    attained = True
    if m is None:
        if delta is None:
            raise ValueError("give either m or delta")
        m, attained = discrepancy_truncation_2d(S1, S2, P, delta, eta)
    sol = tsve_solve_2d(S1, S2, P, m)
    return Solution2D(sol.betas, sol.bases, sol.param, sol.residual_norm, attained)


def solve_2d_tikhonov(
    S1: SveExpansion, S2: SveExpansion, G: LowRankKernel, delta: float | None = None, eta: float = 10.0, lam: float | None = None
) -> Solution2D:
    """2D Tikhonov with ``lam`` given or chosen by the discrepancy principle."""
    P = project_rhs_2d(S1, S2, G)
    attained = True
    if lam is None:
        if delta is None:
            raise ValueError("give either lam or delta")
        lam, attained = discrepancy_lambda_2d(S1, S2, P, delta, eta)
    sol = tikhonov_solve_2d(S1, S2, P, lam)
    return Solution2D(sol.betas, sol.bases, sol.param, sol.residual_norm, attained)


# ---------------------------------------------------------------------------
# errors
# ---------------------------------------------------------------------------


def _integrals_over(fs: Sequence[FuncApprox], ind: PiecewiseFunc) -> np.ndarray:
    """``int f * ind`` for each ``f``, splitting at the indicator's breakpoints."""
    return np.array([inner(f, ind) for f in fs])


def relative_error(x_hat, x_exact) -> float:
    """``||x_hat - x_exact|| / ||x_exact||`` in L2.

    1D: ``x_hat`` is a :class:`RegularizedSolution` or a function, ``x_exact`` a
    :class:`FuncApprox` or :class:`PiecewiseFunc`; the difference is integrated
    piece by piece. 2D: ``x_hat`` is a :class:`Solution2D` and ``x_exact`` a
    :class:`RectIndicator`; ``||x_hat||^2 - 2 <x_hat, x> + ||x||^2`` is
    evaluated exactly from the singular-function integrals over the rectangle.

    Raises:
        ZeroExactNorm: ``||x_exact|| == 0``.
    """
    if isinstance(x_exact, RectIndicator):
        nx = x_exact.norm()
        if nx == 0:
            raise ZeroExactNorm("exact solution has zero norm")
        r1, r2 = x_hat.betas.shape
        f1, f2 = x_exact.factors()
        m1 = _integrals_over(x_hat.bases[0][:r1], f1)
        m2 = _integrals_over(x_hat.bases[1][:r2], f2)
        cross = float(m1 @ x_hat.betas @ m2)
        err2 = x_hat.norm() ** 2 - 2 * cross + nx**2
        return math.sqrt(max(err2, 0.0)) / nx
    nx = norm(x_exact)
    if nx == 0:
        raise ZeroExactNorm("exact solution has zero norm")
    f = x_hat.function() if isinstance(x_hat, RegularizedSolution) else x_hat
    return distance(f, x_exact) / nx
