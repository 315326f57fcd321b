"""Continuous adaptive cross approximation of bivariate kernels.

A kernel ``k(s, t)`` on ``domain_s x domain_t`` is approximated as
``C(s) @ D @ R(t).T`` where ``C`` and ``R`` are lists of univariate
:class:`~chebreg.funapprox.FuncApprox` slices of the kernel residual and ``D``
is a small dense matrix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainMismatch, NonFinite, OutOfDomain, RankOverflow
from .funapprox import (
    CHOP_TOL,
    FuncApprox,
    PiecewiseFunc,
    approximate,
    as_interval,
    chebpts,
    evaluate_many,
    gram,
    inner,
    lincomb,
)

logger = logging.getLogger(__name__)

ACA_GRID = 65
ACA_SWEEPS = 3
ACA_REFINE = 1025
MAX_RANK = 200


class LowRankKernel:
    """Bivariate function ``sum_pq cols[p](s) * middle[p, q] * rows[q](t)``.

    A rank-0 instance (no columns) represents the zero kernel.
    """

    __slots__ = ("cols", "middle", "rows", "domain_s", "domain_t")

    def __init__(
        self,
        cols: Sequence[FuncApprox],
        middle,
        rows: Sequence[FuncApprox],
        domain_s=None,
        domain_t=None,
    ):
        cols, rows = tuple(cols), tuple(rows)
        D = np.array(middle, dtype=float).reshape(len(cols), len(rows))
        if len(cols) != len(rows):
            raise ValueError("need as many column functions as row functions")
        if domain_s is None or domain_t is None:
            if not cols:
                raise ValueError("rank-0 kernel needs explicit domains")
            domain_s, domain_t = cols[0].domain, rows[0].domain
        self.domain_s = as_interval(domain_s)
        self.domain_t = as_interval(domain_t)
        if any(c.domain != self.domain_s for c in cols):
            raise DomainMismatch("column functions must share domain_s")
        if any(r.domain != self.domain_t for r in rows):
            raise DomainMismatch("row functions must share domain_t")
        D.setflags(write=False)
        self.cols, self.middle, self.rows = cols, D, rows

    @classmethod
    def zero(cls, domain_s, domain_t) -> "LowRankKernel":
        return cls((), np.zeros((0, 0)), (), domain_s, domain_t)

    @classmethod
    def outer(cls, u: FuncApprox, v: FuncApprox, scale: float = 1.0) -> "LowRankKernel":
        """Rank-1 kernel ``scale * u(s) * v(t)``."""
        return cls([u], [[scale]], [v])

    @property
    def rank(self) -> int:
        return len(self.cols)

    def __repr__(self):
        return (
            f"LowRankKernel(rank={self.rank}, s=[{self.domain_s.lo:g}, {self.domain_s.hi:g}], "
            f"t=[{self.domain_t.lo:g}, {self.domain_t.hi:g}])"
        )

    def __call__(self, s, t):
        return eval2(self, s, t)

    def grid(self, s, t) -> np.ndarray:
        """Values on the tensor grid ``s x t``, shape ``(len(s), len(t))``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.rank == 0:
            return np.zeros((s.size, t.size))
        return evaluate_many(self.cols, s) @ self.middle @ evaluate_many(self.rows, t).T

    def norm(self) -> float:
        """L2 (Hilbert-Schmidt) norm over the rectangle."""
        if self.rank == 0:
            return 0.0
        Gc, Gr = gram(self.cols), gram(self.rows)
        D = self.middle
        return float(np.sqrt(max(np.trace(Gc @ D @ Gr @ D.T), 0.0)))

    def transpose(self) -> "LowRankKernel":
        return LowRankKernel(self.rows, self.middle.T, self.cols, self.domain_t, self.domain_s)

    def scaled(self, alpha: float) -> "LowRankKernel":
        return LowRankKernel(self.cols, alpha * self.middle, self.rows, self.domain_s, self.domain_t)

    def __add__(self, other: "LowRankKernel") -> "LowRankKernel":
        if (self.domain_s, self.domain_t) != (other.domain_s, other.domain_t):
            raise DomainMismatch("kernels live on different rectangles")
        k1, k2 = self.rank, other.rank
        D = np.zeros((k1 + k2, k1 + k2))
        D[:k1, :k1] = self.middle
        D[k1:, k1:] = other.middle
        return LowRankKernel(
            self.cols + other.cols, D, self.rows + other.rows, self.domain_s, self.domain_t
        )

    def to_dict(self) -> dict:
        return {
            "domain_s": [self.domain_s.lo, self.domain_s.hi],
            "domain_t": [self.domain_t.lo, self.domain_t.hi],
            "cols": [c.to_dict() for c in self.cols],
            "middle": self.middle.tolist(),
            "rows": [r.to_dict() for r in self.rows],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LowRankKernel":
        cols = [FuncApprox.from_dict(c) for c in d["cols"]]
        rows = [FuncApprox.from_dict(r) for r in d["rows"]]
        k = len(cols)
        return cls(cols, np.array(d["middle"], dtype=float).reshape(k, k), rows, d["domain_s"], d["domain_t"])


@dataclass
class PivotTrace:
    """Per-step ACA diagnostics: pivot location and residual magnitude.

    The last entry is the pivot that triggered termination (not added to the
    approximation) unless the run stopped on ``max_rank``.
    """

    steps: list[tuple[float, float, float]] = field(default_factory=list)
    zero_kernel: bool = False

    @property
    def magnitudes(self) -> np.ndarray:
        return np.array([m for _, _, m in self.steps])

    def __len__(self):
        return len(self.steps)


def aca(
    kernel: Callable,
    domain_s,
    domain_t,
    tol: float = 1e-14,
    max_rank: int = MAX_RANK,
    grid: int = ACA_GRID,
    sweeps: int = ACA_SWEEPS,
    refine: int = ACA_REFINE,
    slice_tol: float = CHOP_TOL,
) -> tuple[LowRankKernel, PivotTrace]:
    """Cross approximation ``kernel ~ C D R^T`` with function-valued pivots.

    Each step takes the largest residual entry on a ``grid x grid`` Chebyshev
    tensor grid, polishes the location by alternating 1D maximisation of the
    residual column and row slices (each sampled at ``refine`` Chebyshev
    points), and subtracts the cross
    ``e(s, y) e(x, t) / e(x, y)``. Iteration stops once the pivot magnitude is
    at most ``tol`` times the first pivot.

    ``kernel`` must broadcast over numpy arrays ``(s, t)``.

    Returns:
        The low-rank kernel (``D`` diagonal with reciprocal pivots) and the
        pivot trace. A kernel that vanishes on the search grid yields a rank-0
        result with ``trace.zero_kernel`` set.

    Raises:
        RankOverflow: ``max_rank`` crosses taken without reaching ``tol``.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError("tol must lie in (0, 1)")
    if max_rank < 1:
        raise ValueError("max_rank must be >= 1")
    ds, dt = as_interval(domain_s), as_interval(domain_t)
    sg = ds.from_unit(chebpts(grid))
    tg = dt.from_unit(chebpts(grid))
    E = np.array(np.broadcast_to(kernel(sg[:, None], tg[None, :]), (grid, grid)), dtype=float)
    if not np.all(np.isfinite(E)):
        raise NonFinite("kernel returned non-finite values on the pivot grid")

    cols: list[FuncApprox] = []
    rows: list[FuncApprox] = []
    pivots: list[float] = []
    trace = PivotTrace()

    def residual_col(y: float) -> FuncApprox:
        base = approximate(lambda s: kernel(s, y), ds, slice_tol)
        if not cols:
            return base
        w = np.array([r(y) / p for r, p in zip(rows, pivots)])
        return lincomb([base, *cols], np.concatenate(([1.0], -w)))

    def residual_row(x: float) -> FuncApprox:
        base = approximate(lambda t: kernel(x, t), dt, slice_tol)
        if not rows:
            return base
        w = np.array([c(x) / p for c, p in zip(cols, pivots)])
        return lincomb([base, *rows], np.concatenate(([1.0], -w)))

    first = None
    while True:
        i, j = np.unravel_index(np.argmax(np.abs(E)), E.shape)
        x, y = float(sg[i]), float(tg[j])
        if first is None and E[i, j] == 0.0:
            trace.steps.append((x, y, 0.0))
            trace.zero_kernel = True
            return LowRankKernel.zero(ds, dt), trace

        col = residual_col(y)
        row = None
        for _ in range(sweeps):
            x_new = col.argmax_abs(refine)[0]
            row = residual_row(x_new)
            y_new = row.argmax_abs(refine)[0]
            moved = (x_new != x) or (y_new != y)
            x = x_new
            if y_new != y:
                y = y_new
                col = residual_col(y)
            if not moved:
                break
        if row is None:
            row = residual_row(x)
        piv = float(col(x))
        trace.steps.append((x, y, abs(piv)))

        if first is None:
            first = abs(piv)
            if first == 0.0:
                trace.zero_kernel = True
                return LowRankKernel.zero(ds, dt), trace
        if abs(piv) <= tol * first:
            break
        if len(cols) >= max_rank:
            raise RankOverflow(
                f"rank {max_rank} reached with relative pivot {abs(piv) / first:.3e} > {tol:g}"
            )
        cols.append(col)
        rows.append(row)
        pivots.append(piv)
        E -= np.outer(col(sg), row(tg)) / piv
        logger.debug("aca step %d: pivot %.3e at (%.6g, %.6g)", len(cols), piv, x, y)

    return LowRankKernel(cols, np.diag(1.0 / np.array(pivots)), rows, ds, dt), trace


def eval2(K: LowRankKernel, s, t):
    """Pointwise value ``K(s, t)``; ``s`` and ``t`` broadcast elementwise."""
    s_arr, t_arr = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    if K.rank == 0:
        if not (np.all(K.domain_s.contains(s_arr)) and np.all(K.domain_t.contains(t_arr))):
            raise OutOfDomain("evaluation point outside the kernel rectangle")
        out = np.zeros(s_arr.shape)
    else:
        C = evaluate_many(K.cols, s_arr.ravel())
        R = evaluate_many(K.rows, t_arr.ravel())
        out = np.einsum("ip,pq,iq->i", C, K.middle, R).reshape(s_arr.shape)
    if out.ndim == 0:
        return float(out)
    return out


def apply(K: LowRankKernel, x) -> FuncApprox:
    """Integral operator ``(Kx)(s) = int K(s, t) x(t) dt``.

    ``x`` may be a :class:`FuncApprox` or :class:`PiecewiseFunc` on ``domain_t``.
    """
    if x.domain != K.domain_t:
        raise DomainMismatch(f"x lives on {x.domain}, kernel expects {K.domain_t}")
    if K.rank == 0:
        return FuncApprox.zero(K.domain_s)
    if isinstance(x, PiecewiseFunc):
        w = np.array([inner(r, x) for r in K.rows])
    else:
        w = gram(K.rows, [x])[:, 0]
    return lincomb(K.cols, K.middle @ w)


def probe_residual(K: LowRankKernel, kernel: Callable, n: int = 200) -> tuple[float, float]:
    """Max ``|kernel - K|`` and max ``|kernel|`` on an ``n x n`` equispaced grid."""
    s = np.linspace(K.domain_s.lo, K.domain_s.hi, n)
    t = np.linspace(K.domain_t.lo, K.domain_t.hi, n)
    exact = np.broadcast_to(kernel(s[:, None], t[None, :]), (n, n))
    return float(np.abs(exact - K.grid(s, t)).max()), float(np.abs(exact).max())
