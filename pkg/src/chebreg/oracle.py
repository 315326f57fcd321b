"""Discrete cross-check: symmetric quadrature-weighted collocation.

The matrix ``sqrt(w_s) K(s_i, t_j) sqrt(w_t)`` on Gauss-Legendre nodes has
singular values that converge to those of the integral operator, and its
singular vectors divided by ``sqrt(w)`` sample the singular functions. This
gives an independent, brute-force route to everything the continuous solvers
compute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ZeroExactNorm
from .funapprox import Interval
from .regularize import (
    RhsProjection,
    TikhonovLambda,
    TruncationIndex,
    discrepancy_lambda,
    discrepancy_truncation,
)

GRADED_PANELS = 16
GRADED_RATIO = 0.15


def gauss_rule(domain: Interval, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``n``-point Gauss-Legendre nodes and weights on ``domain``."""
    z, w = leggauss(n)
    return domain.from_unit(z), w * domain.length / 2


def graded_rule(
    domain: Interval, n: int, panels: int = GRADED_PANELS, ratio: float = GRADED_RATIO
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre on panels shrinking geometrically toward ``domain.lo``.

    Panel edges are ``lo + L * ratio**k``; the ``n`` nodes are shared as evenly
    as possible between panels. Resolves algebraic singularities at ``lo``.
    """
    panels = max(1, min(panels, n // 2))
    edges = domain.lo + domain.length * np.concatenate(([0.0], ratio ** np.arange(panels - 1, -1, -1)))
    counts = np.full(panels, n // panels)
    counts[: n % panels] += 1
    nodes, weights = [], []
    for a, b, k in zip(edges[:-1], edges[1:], counts):
        x, w = gauss_rule(Interval(float(a), float(b)), int(k))
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


RULES = {"gauss": gauss_rule, "graded": graded_rule}


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Weighted collocation matrix ``matrix[i, j] = sqrt(ws_i) k(s_i, t_j) sqrt(wt_j)``."""

    nodes_s: np.ndarray
    nodes_t: np.ndarray
    weights_s: np.ndarray
    weights_t: np.ndarray
    matrix: np.ndarray

    def svd(self):
        """Cached thin SVD ``(U, s, Vt)``."""
        cache = self.__dict__.get("_svd")
        if cache is None:
            cache = np.linalg.svd(self.matrix)
            object.__setattr__(self, "_svd", cache)
        return cache

    @property
    def singular_values(self) -> np.ndarray:
        return self.svd()[1]

    def weigh_s(self, values) -> np.ndarray:
        """``sqrt(w_s) * values``: samples of a data-space function to the weighted vector."""
        return np.sqrt(self.weights_s) * np.asarray(values, dtype=float)

    def unweigh_t(self, vec) -> np.ndarray:
        """Weighted solution vector back to samples at ``nodes_t``."""
        return np.asarray(vec) / np.sqrt(self.weights_t)


def discretize_kernel(kernel, domain_s: Interval, domain_t: Interval, n: int, rule: str = "gauss") -> DiscreteOperator:
    if n < 2:
        raise ValueError("n must be >= 2")
    make = RULES[rule]
    s, ws = make(domain_s, n)
    t, wt = make(domain_t, n)
    A = np.broadcast_to(kernel(s[:, None], t[None, :]), (n, n))
    M = np.sqrt(ws)[:, None] * A * np.sqrt(wt)[None, :]
    return DiscreteOperator(s, t, ws, wt, np.ascontiguousarray(M))


def discretize(P, n: int = 400, rule: str | None = None) -> DiscreteOperator:
    """Discretise a test problem; ``rule`` defaults to the problem's preferred quadrature."""
    return discretize_kernel(P.kernel, P.omega2, P.omega1, n, rule or P.oracle_rule)


@dataclass(frozen=True)
class DiscreteSolution:
    """Solution samples at ``nodes_t`` and the weighted coefficient vector behind them."""

    x: np.ndarray
    coeffs: np.ndarray
    param: TruncationIndex | TikhonovLambda
    residual_norm: float
    attained: bool


class _Spectrum:
    # duck-typed stand-in for SveExpansion in the shared discrepancy helpers
    def __init__(self, sigmas):
        self.sigmas = sigmas
        self.rank = len(sigmas)


def _project(D: DiscreteOperator, g_samples) -> tuple[np.ndarray, np.ndarray, RhsProjection, int]:
    U, s, Vt = D.svd()
    keep = int(np.count_nonzero(s > 0))
    gw = D.weigh_s(g_samples)
    c = U[:, :keep].T @ gw
    perp = float(np.sum((gw - U[:, :keep] @ c) ** 2))
    return s[:keep], Vt[:keep], RhsProjection(c, perp, float(gw @ gw)), keep


def discrete_tsvd_solve(
    D: DiscreteOperator, g_samples, delta: float | None = None, eta: float = 1.0, ell: int | None = None
) -> DiscreteSolution:
    """Matrix TSVD; ``ell`` given or chosen by the discrepancy principle."""
    s, Vt, P, _ = _project(D, g_samples)
    attained = True
    if ell is None:
        ell, attained = discrepancy_truncation(_Spectrum(s), P, delta, eta)
    coeffs = Vt[:ell].T @ (P.c[:ell] / s[:ell])
    res = math.sqrt(float(np.sum(P.c[ell:] ** 2)) + P.g_perp_norm_sq)
    return DiscreteSolution(D.unweigh_t(coeffs), coeffs, TruncationIndex(int(ell)), res, attained)


def discrete_tikhonov_solve(
    D: DiscreteOperator, g_samples, delta: float | None = None, eta: float = 1.0, lam: float | None = None
) -> DiscreteSolution:
    """Matrix Tikhonov; ``lam`` given or chosen by the discrepancy principle."""
    s, Vt, P, _ = _project(D, g_samples)
    attained = True
    if lam is None:
        lam, attained = discrepancy_lambda(_Spectrum(s), P, delta, eta)
    coeffs = Vt.T @ (s * P.c / (s**2 + lam**2))
    f = lam**2 / (s**2 + lam**2)
    res = math.sqrt(float(np.sum((f * P.c) ** 2)) + P.g_perp_norm_sq)
    return DiscreteSolution(D.unweigh_t(coeffs), coeffs, TikhonovLambda(float(lam)), res, attained)


def discrete_relative_error(D: DiscreteOperator, x_samples, x_exact_samples) -> float:
    """Quadrature-weighted ``||x - x_exact|| / ||x_exact||`` at ``nodes_t``."""
    w = D.weights_t
    nx = math.sqrt(float(np.sum(w * np.asarray(x_exact_samples) ** 2)))
    if nx == 0:
        raise ZeroExactNorm("exact solution has zero norm")
    diff = np.asarray(x_samples) - np.asarray(x_exact_samples)
    return math.sqrt(float(np.sum(w * diff**2))) / nx


def compare_spectra(sigmas_sve: np.ndarray, sigmas_disc: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    """Relative differences ``|s_disc - s_sve| / s_sve`` for ``s_sve >= floor * s_1``."""
    k = int(np.count_nonzero(sigmas_sve >= floor * sigmas_sve[0]))
    k = min(k, len(sigmas_disc))
    return np.abs(sigmas_disc[:k] - sigmas_sve[:k]) / sigmas_sve[:k]


__all__ = [
    "DiscreteOperator",
    "DiscreteSolution",
    "compare_spectra",
    "discrete_relative_error",
    "discrete_tikhonov_solve",
    "discrete_tsvd_solve",
    "discretize",
    "discretize_kernel",
    "gauss_rule",
    "graded_rule",
]
