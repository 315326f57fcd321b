"""Singular value expansion of a low-rank kernel.

The column and row quasimatrices of a :class:`LowRankKernel` are
orthonormalised by a continuous QR factorisation; the small core
``R_c D R_r^T`` then has a dense SVD whose factors rotate the orthonormal
bases into left and right singular functions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .bivariate import LowRankKernel, aca
from .errors import DomainMismatch, EmptyExpansion, OutOfRange
from .funapprox import (
    FuncApprox,
    Interval,
    _fast_size,
    cc_weights,
    coeff_matrix,
    coeffs2vals,
    evaluate_many,
    vals2coeffs,
)

CUTOFF_EPS = 1e-10
RANK_TOL = 1e-14
SIGN_PROBES = 1001


class QRResult(NamedTuple):
    """Continuous QR ``fs[j] = sum_i q[i] * r[i, j]``.

    ``dropped`` lists input columns found numerically dependent on earlier
    ones; they have no row of their own in ``r``.
    """

    q: list[FuncApprox]
    r: np.ndarray
    dropped: list[int]


def qr_quasimatrix(fs: Sequence[FuncApprox], rank_tol: float = RANK_TOL) -> QRResult:
    """Modified Gram-Schmidt with one full reorthogonalisation pass.

    Inner products are computed exactly by Clenshaw-Curtis quadrature on enough
    Chebyshev points to integrate any product of two inputs. ``R`` has a
    nonnegative diagonal. Columns whose orthogonal remainder falls below
    ``rank_tol`` times the largest diagonal entry are dropped.
    """
    fs = list(fs)
    if not fs:
        raise ValueError("need at least one function")
    dom = fs[0].domain
    if any(f.domain != dom for f in fs):
        raise DomainMismatch("quasimatrix columns must share a domain")
    m = max(len(f) for f in fs)
    n = _fast_size(2 * m - 1)
    sw = np.sqrt(0.5 * dom.length * cc_weights(n))
    A = sw[:, None] * coeffs2vals(coeff_matrix(fs, n))

    k = A.shape[1]
    Q = np.zeros_like(A)
    R = np.zeros((k, k))
    kept: list[int] = []
    dropped: list[int] = []
    rmax = 0.0
    for j in range(k):
        v = A[:, j].copy()
        for _ in range(2):
            for i in kept:
                h = Q[:, i] @ v
                R[i, j] += h
                v -= h * Q[:, i]
        r = float(np.linalg.norm(v))
        rmax = max(rmax, r)
        if r <= rank_tol * rmax:
            dropped.append(j)
            continue
        R[j, j] = r
        Q[:, j] = v / r
        kept.append(j)

    coeffs = vals2coeffs(Q[:, kept] / sw[:, None])[:m]
    q = [FuncApprox(coeffs[:, i], dom) for i in range(len(kept))]
    return QRResult(q, R[kept, :], dropped)


@dataclass(frozen=True, eq=False)
class SveExpansion:
    """Truncated singular value expansion ``sum_i sigmas[i] phis[i](s) psis[i](t)``.

    ``phis`` live on the data domain (``s``), ``psis`` on the solution domain
    (``t``). Both families are orthonormal and ``sigmas`` is non-increasing.
    """

    sigmas: np.ndarray
    phis: tuple[FuncApprox, ...]
    psis: tuple[FuncApprox, ...]
    cutoff_eps: float = CUTOFF_EPS

    def __post_init__(self):
        if not (len(self.sigmas) == len(self.phis) == len(self.psis)):
            raise ValueError("sigmas, phis and psis must have equal length")

    @property
    def rank(self) -> int:
        return len(self.sigmas)

    @property
    def domain_s(self) -> Interval:
        return self.phis[0].domain

    @property
    def domain_t(self) -> Interval:
        return self.psis[0].domain

    def __repr__(self):
        return f"SveExpansion(rank={self.rank}, sigma_1={self.sigmas[0]:.4e}, sigma_r={self.sigmas[-1]:.4e})"

    def phi_values(self, s) -> np.ndarray:
        return evaluate_many(self.phis, s)

    def psi_values(self, t) -> np.ndarray:
        return evaluate_many(self.psis, t)

    def to_dict(self) -> dict:
        return {
            "cutoff_eps": self.cutoff_eps,
            "sigmas": self.sigmas.tolist(),
            "phis": [f.to_dict() for f in self.phis],
            "psis": [f.to_dict() for f in self.psis],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SveExpansion":
        return cls(
            np.array(d["sigmas"], dtype=float),
            tuple(FuncApprox.from_dict(f) for f in d["phis"]),
            tuple(FuncApprox.from_dict(f) for f in d["psis"]),
            float(d["cutoff_eps"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _combine(q: list[FuncApprox], U: np.ndarray) -> list[FuncApprox]:
    C = coeff_matrix(q) @ U
    return [FuncApprox(C[:, i], q[0].domain) for i in range(U.shape[1])]


def sve_from_lowrank(K: LowRankKernel, cutoff_eps: float = CUTOFF_EPS) -> SveExpansion:
    """SVE of ``K`` keeping singular values above ``cutoff_eps * sigma_1``.

    Sign convention: each ``phi_i`` is positive at its largest-magnitude point
    on an equispaced probe grid, with ``psi_i`` flipped along with it.

    Raises:
        EmptyExpansion: ``K`` has rank 0 or nothing survives the cut-off.
    """
    if K.rank == 0:
        raise EmptyExpansion("kernel has rank 0")
    qc, Rc, drop_c = qr_quasimatrix(K.cols)
    qr_, Rr, drop_r = qr_quasimatrix(K.rows)
    core = Rc @ K.middle @ Rr.T
    U, s, Vt = np.linalg.svd(core)
    if s.size == 0 or s[0] == 0.0:
        raise EmptyExpansion("kernel is numerically zero")
    keep = int(np.count_nonzero(s > cutoff_eps * s[0]))
    if keep == 0:
        raise EmptyExpansion("no singular value above the cut-off")
    U, s, V = U[:, :keep], s[:keep], Vt[:keep].T

    phis = _combine(qc, U)
    psis = _combine(qr_, V)

    probe = np.linspace(K.domain_s.lo, K.domain_s.hi, SIGN_PROBES)
    P = evaluate_many(phis, probe)
    signs = np.sign(P[np.argmax(np.abs(P), axis=0), np.arange(keep)])
    signs[signs == 0] = 1.0
    phis = tuple(f * sg for f, sg in zip(phis, signs))
    psis = tuple(f * sg for f, sg in zip(psis, signs))
    return SveExpansion(s.copy(), phis, psis, cutoff_eps)


def reconstruct(S: SveExpansion, ell: int) -> LowRankKernel:
    """Rank-``ell`` partial sum of the expansion."""
    if not 1 <= ell <= S.rank:
        raise OutOfRange(f"ell={ell} outside [1, {S.rank}]")
    return LowRankKernel(S.phis[:ell], np.diag(S.sigmas[:ell]), S.psis[:ell])


def compute_sve(
    kernel: Callable,
    domain_s,
    domain_t,
    aca_tol: float = 1e-14,
    cutoff_eps: float = CUTOFF_EPS,
    **aca_options,
) -> SveExpansion:
    """Cross approximation followed by :func:`sve_from_lowrank`."""
    K, _ = aca(kernel, domain_s, domain_t, tol=aca_tol, **aca_options)
    return sve_from_lowrank(K, cutoff_eps)
