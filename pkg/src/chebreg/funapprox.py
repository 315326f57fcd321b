"""Adaptive Chebyshev approximation of univariate functions.

A :class:`FuncApprox` stores the Chebyshev-T coefficients of a polynomial on an
interval ``[lo, hi]``. Construction samples the target at Chebyshev points of
the second kind, doubling the sample count until the coefficient tail has
decayed below a relative tolerance, then chops the negligible tail.

Integrals, inner products and norms are exact for the stored polynomials:
products are formed in value space on enough points to represent the product
degree and integrated with Clenshaw-Curtis weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy import fft

from .errors import DomainMismatch, NonConvergence, NonFinite, OutOfDomain

CHOP_TOL = 1e-14
MAX_DEGREE = 2**16
TAIL_WINDOW = 3

# roundoff slack for evaluation points on the boundary, relative to interval length
_EDGE_SLACK = 1e-12
# irrational-looking unit points, off every Chebyshev grid
_ALIAS_PROBES = np.array([-0.8917, -0.4263, 0.1373, 0.5491, 0.9137])
_ALIAS_SLACK = 1e3


@dataclass(frozen=True)
class Interval:
    """Closed finite interval ``[lo, hi]`` with ``lo < hi``."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError(f"interval endpoints must be finite, got [{lo}, {hi}]")
        if not lo < hi:
            raise ValueError(f"require lo < hi, got [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def to_unit(self, t):
        """Map points of the interval to ``[-1, 1]``."""
        return (2.0 * (np.asarray(t, dtype=float) - self.lo) / self.length) - 1.0

    def from_unit(self, x):
        """Map points of ``[-1, 1]`` to the interval."""
        return self.lo + 0.5 * (np.asarray(x, dtype=float) + 1.0) * self.length

    def contains(self, t) -> np.ndarray:
        slack = _EDGE_SLACK * self.length
        t = np.asarray(t, dtype=float)
        return (t >= self.lo - slack) & (t <= self.hi + slack)

    def __iter__(self):
        yield self.lo
        yield self.hi

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


def as_interval(domain) -> Interval:
    if isinstance(domain, Interval):
        return domain
    lo, hi = domain
    return Interval(lo, hi)


# ---------------------------------------------------------------------------
# Chebyshev point / coefficient transforms
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _chebpts_cached(n: int) -> np.ndarray:
    if n == 1:
        pts = np.zeros(1)
    else:
        # sin form is symmetric to machine precision
        m = n - 1
        pts = np.sin(np.pi * np.arange(-m, m + 1, 2) / (2 * m))
    pts.setflags(write=False)
    return pts


def chebpts(n: int) -> np.ndarray:
    """Chebyshev points of the second kind on ``[-1, 1]``, ascending."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _chebpts_cached(int(n))


def vals2coeffs(values) -> np.ndarray:
    """Chebyshev coefficients of the interpolant through ascending Chebyshev points."""
    v = np.asarray(values, dtype=float)
    n = v.shape[0]
    if n == 1:
        return v.copy()
    c = fft.dct(v[::-1], type=1, axis=0) / (n - 1)
    c[0] /= 2.0
    c[-1] /= 2.0
    return c


def coeffs2vals(coeffs) -> np.ndarray:
    """Values of a Chebyshev series at the ascending Chebyshev points of its length."""
    c = np.array(coeffs, dtype=float)
    n = c.shape[0]
    if n == 1:
        return c
    c[1:-1] /= 2.0
    return fft.dct(c, type=1, axis=0)[::-1]


@lru_cache(maxsize=64)
def _cc_weights_cached(n: int) -> np.ndarray:
    if n == 1:
        w = np.array([2.0])
    else:
        # transpose of vals2coeffs applied to the moments; scipy's DCT-I doubles
        # interior columns, so halve interior entries going in and double coming out
        moments = _integrals_of_T(n) / 2.0
        w = fft.dct(moments, type=1)
        w[1:-1] *= 2.0
        w = (w / (n - 1))[::-1].copy()
    w.setflags(write=False)
    return w


def cc_weights(n: int) -> np.ndarray:
    """Clenshaw-Curtis weights on ``[-1, 1]`` matching :func:`chebpts`."""
    return _cc_weights_cached(int(n))


def _fast_size(n: int) -> int:
    """Smallest size >= n whose DCT-I is cheap."""
    if n <= 2:
        return n
    return fft.next_fast_len(n - 1) + 1


def _integrals_of_T(n: int) -> np.ndarray:
    out = np.zeros(n)
    k = np.arange(0, n, 2, dtype=float)
    out[::2] = 2.0 / (1.0 - k**2)
    return out


def chop_length(coeffs: np.ndarray, tol: float, scale: float | None = None) -> int:
    """Number of coefficients to keep so that the discarded tail is below ``tol*scale``."""
    c = np.abs(np.asarray(coeffs))
    if scale is None:
        scale = c.max(initial=0.0)
    if scale == 0.0:
        return 1
    big = np.nonzero(c > tol * scale)[0]
    return int(big[-1]) + 1 if big.size else 1


# ---------------------------------------------------------------------------
# FuncApprox
# ---------------------------------------------------------------------------


class FuncApprox:
    """Chebyshev series on an interval.

    Instances are immutable; arithmetic returns new objects.

    Attributes:
        coeffs: read-only array of Chebyshev-T coefficients, index 0 is the constant term.
        domain: the :class:`Interval` the series lives on.
    """

    __slots__ = ("coeffs", "domain")

    def __init__(self, coeffs, domain):
        c = np.array(coeffs, dtype=float).ravel()
        if c.size == 0:
            raise ValueError("coefficient list must be nonempty")
        c.setflags(write=False)
        self.coeffs = c
        self.domain = as_interval(domain)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_values(cls, values, domain) -> "FuncApprox":
        """Interpolant through values at the ascending Chebyshev points of ``domain``."""
        return cls(vals2coeffs(values), domain)

    @classmethod
    def constant(cls, value: float, domain) -> "FuncApprox":
        return cls([float(value)], domain)

    @classmethod
    def identity(cls, domain) -> "FuncApprox":
        d = as_interval(domain)
        return cls([0.5 * (d.lo + d.hi), 0.5 * d.length], d)

    @classmethod
    def zero(cls, domain) -> "FuncApprox":
        return cls([0.0], domain)

    # -- basic properties -------------------------------------------------

    def __len__(self):
        return self.coeffs.size

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __repr__(self):
        return f"FuncApprox(len={len(self)}, domain=[{self.domain.lo:g}, {self.domain.hi:g}])"

    def _check_same_domain(self, other: "FuncApprox"):
        if self.domain != other.domain:
            raise DomainMismatch(f"{self.domain} vs {other.domain}")

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t):
        return evaluate(self, t)

    def values(self, n: int | None = None) -> np.ndarray:
        """Values at ``n`` ascending Chebyshev points (default: own length)."""
        n = len(self) if n is None else int(n)
        if n >= len(self):
            return coeffs2vals(_pad(self.coeffs, n))
        return npcheb.chebval(chebpts(n), self.coeffs)

    def points(self, n: int | None = None) -> np.ndarray:
        n = len(self) if n is None else int(n)
        return self.domain.from_unit(chebpts(n))

    def argmax_abs(self, n: int | None = None) -> tuple[float, float]:
        """Approximate location and value of ``max |f|`` by sampling.

        Samples at ``n`` Chebyshev points (default: four times oversampled).
        """
        if n is None:
            n = _fast_size(max(4 * len(self) + 1, 129))
        vals = self.values(n)
        i = int(np.argmax(np.abs(vals)))
        return float(self.domain.from_unit(chebpts(n)[i])), float(vals[i])

    def sup_norm(self) -> float:
        return abs(self.argmax_abs()[1])

    # -- calculus -----------------------------------------------------------

    def integrate(self) -> float:
        return integrate(self)

    def inner(self, other) -> float:
        return inner(self, other)

    def norm(self) -> float:
        return norm(self)

    def restrict(self, sub) -> "FuncApprox":
        """Re-expand the same polynomial on a subinterval (exact up to roundoff)."""
        sub = as_interval(sub)
        if not (self.domain.contains(sub.lo) and self.domain.contains(sub.hi)):
            raise OutOfDomain(f"{sub} is not inside {self.domain}")
        if sub == self.domain:
            return self
        n = len(self)
        t = np.clip(sub.from_unit(chebpts(n)), self.domain.lo, self.domain.hi)
        return FuncApprox.from_values(self(t), sub)

    def simplify(self, tol: float = CHOP_TOL, scale: float | None = None) -> "FuncApprox":
        """Drop trailing coefficients below ``tol * scale`` (``scale`` defaults to max|coeff|)."""
        k = chop_length(self.coeffs, tol, scale)
        if k == len(self):
            return self
        return FuncApprox(self.coeffs[:k], self.domain)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, FuncApprox):
            return lincomb([self, other], [1.0, 1.0])
        c = self.coeffs.copy()
        c[0] += float(other)
        return FuncApprox(c, self.domain)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, FuncApprox):
            return lincomb([self, other], [1.0, -1.0])
        return self + (-float(other))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return FuncApprox(-self.coeffs, self.domain)

    def __mul__(self, other):
        if isinstance(other, FuncApprox):
            return multiply(self, other)
        return FuncApprox(float(other) * self.coeffs, self.domain)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return FuncApprox(self.coeffs / float(other), self.domain)

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {"domain": [self.domain.lo, self.domain.hi], "coeffs": self.coeffs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FuncApprox":
        return cls(d["coeffs"], d["domain"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "FuncApprox":
        return cls.from_dict(json.loads(s))


def _pad(c: np.ndarray, n: int) -> np.ndarray:
    if c.shape[0] >= n:
        return c[:n] if c.shape[0] > n else c
    out = np.zeros((n,) + c.shape[1:])
    out[: c.shape[0]] = c
    return out


def approximate(
    f: Callable,
    domain,
    tol: float = CHOP_TOL,
    max_degree: int = MAX_DEGREE,
) -> FuncApprox:
    """Adaptively build a Chebyshev approximation of ``f`` on ``domain``.

    ``f`` must accept a numpy array of points and return values of the same
    shape (a scalar return is broadcast). Sampling starts at 9 Chebyshev points
    and doubles until the last three coefficients fall below ``tol`` times the
    largest coefficient.

    Raises:
        NonFinite: ``f`` returned NaN or infinity.
        NonConvergence: ``max_degree`` reached without tail decay.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError("tol must lie in (0, 1)")
    domain = as_interval(domain)
    n = 9
    while True:
        t = domain.from_unit(chebpts(n))
        v = np.broadcast_to(np.asarray(f(t), dtype=float), t.shape)
        if not np.all(np.isfinite(v)):
            raise NonFinite(f"function returned non-finite values on {domain}")
        c = vals2coeffs(v)
        scale = np.abs(c).max()
        if scale == 0.0:
            return FuncApprox.zero(domain)
        if np.abs(c[-TAIL_WINDOW:]).max() <= tol * scale and _off_grid_ok(f, c, domain, tol, v):
            return FuncApprox(c[: chop_length(c, tol, scale)], domain)
        if n - 1 >= max_degree:
            raise NonConvergence(
                f"no tail decay below {tol:g} with {n} points on {domain}"
            )
        n = 2 * n - 1


def _off_grid_ok(f: Callable, c: np.ndarray, domain: Interval, tol: float, v: np.ndarray) -> bool:
    """Guard against aliasing: the series must also match ``f`` between the samples.

    A polynomial of degree ``>= n - 1`` can coincide with a lower-degree one on
    ``n`` Chebyshev points (``T_16`` equals ``T_0`` on 9 points, for instance).
    """
    t = domain.from_unit(_ALIAS_PROBES)
    fv = np.broadcast_to(np.asarray(f(t), dtype=float), t.shape)
    vscale = max(np.abs(v).max(), np.abs(fv).max())
    return bool(np.abs(npcheb.chebval(_ALIAS_PROBES, c) - fv).max() <= _ALIAS_SLACK * tol * vscale)


def evaluate(f: FuncApprox, t):
    """Evaluate by Clenshaw recurrence at points of the domain (scalar or array)."""
    t_arr = np.asarray(t, dtype=float)
    if not np.all(f.domain.contains(t_arr)):
        raise OutOfDomain(f"evaluation point outside {f.domain}")
    x = np.clip(f.domain.to_unit(t_arr), -1.0, 1.0)
    out = npcheb.chebval(x, f.coeffs)
    if np.ndim(t) == 0:
        return float(out)
    return out


def evaluate_many(fs: Sequence[FuncApprox], t) -> np.ndarray:
    """Evaluate several series sharing a domain; returns shape ``(len(t), len(fs))``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if not fs:
        return np.zeros((t.size, 0))
    dom = fs[0].domain
    if any(f.domain != dom for f in fs):
        raise DomainMismatch("functions do not share a domain")
    if not np.all(dom.contains(t)):
        raise OutOfDomain(f"evaluation point outside {dom}")
    x = np.clip(dom.to_unit(t), -1.0, 1.0)
    return npcheb.chebval(x, coeff_matrix(fs)).T


def integrate(f: FuncApprox) -> float:
    """Exact integral of the Chebyshev series over its domain."""
    c = f.coeffs
    return float(0.5 * f.domain.length * np.dot(_integrals_of_T(c.size), c))


def _product_values(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    return coeffs2vals(_pad(a, n)) * coeffs2vals(_pad(b, n))


def inner(a, b) -> float:
    """L2 inner product over the common domain.

    Either argument may be a :class:`PiecewiseFunc`; the other is then split at
    its breakpoints.
    """
    if isinstance(a, PiecewiseFunc) or isinstance(b, PiecewiseFunc):
        return _inner_piecewise(a, b)
    a._check_same_domain(b)
    n = _fast_size(len(a) + len(b) - 1)
    vals = _product_values(a.coeffs, b.coeffs, n)
    return float(0.5 * a.domain.length * np.dot(cc_weights(n), vals))


def gram(fs: Sequence[FuncApprox], gs: Sequence[FuncApprox] | None = None) -> np.ndarray:
    """Matrix of inner products ``<fs[i], gs[j]>`` evaluated in one quadrature pass."""
    same = gs is None
    gs = fs if same else gs
    if not fs or not gs:
        return np.zeros((len(fs), len(gs)))
    dom = fs[0].domain
    for g in list(fs) + list(gs):
        if g.domain != dom:
            raise DomainMismatch(f"{g.domain} vs {dom}")
    la = max(len(f) for f in fs)
    lb = max(len(g) for g in gs)
    n = _fast_size(la + lb - 1)
    A = coeffs2vals(coeff_matrix(fs, n))
    B = A if same else coeffs2vals(coeff_matrix(gs, n))
    w = 0.5 * dom.length * cc_weights(n)
    return A.T @ (w[:, None] * B)


def coeff_matrix(fs: Sequence[FuncApprox], n: int | None = None) -> np.ndarray:
    """Stack coefficients as columns of an ``n x len(fs)`` array, zero padded."""
    n = max(len(f) for f in fs) if n is None else n
    M = np.zeros((n, len(fs)))
    for j, f in enumerate(fs):
        k = min(len(f), n)
        M[:k, j] = f.coeffs[:k]
    return M


def norm(f) -> float:
    """L2 norm; for a :class:`PiecewiseFunc` the root of summed squared piece norms."""
    if isinstance(f, PiecewiseFunc):
        return float(np.sqrt(sum(norm(p) ** 2 for p in f.funcs)))
    return float(np.sqrt(max(inner(f, f), 0.0)))


def lincomb(fs: Sequence[FuncApprox], weights: Iterable[float]) -> FuncApprox:
    """``sum_i weights[i] * fs[i]`` in coefficient space."""
    fs = list(fs)
    w = np.asarray(list(weights), dtype=float)
    if len(fs) != w.size or not fs:
        raise ValueError("need one weight per function and at least one function")
    dom = fs[0].domain
    for f in fs[1:]:
        if f.domain != dom:
            raise DomainMismatch(f"{f.domain} vs {dom}")
    return FuncApprox(coeff_matrix(fs) @ w, dom)


def axpy(alpha: float, x: FuncApprox, y: FuncApprox) -> FuncApprox:
    return lincomb([x, y], [alpha, 1.0])


def multiply(a: FuncApprox, b: FuncApprox) -> FuncApprox:
    """Pointwise product, exact: formed on ``deg a + deg b + 1`` points."""
    a._check_same_domain(b)
    n = len(a) + len(b) - 1
    return FuncApprox.from_values(_product_values(a.coeffs, b.coeffs, n), a.domain)


# ---------------------------------------------------------------------------
# Piecewise functions
# ---------------------------------------------------------------------------


class PiecewiseFunc:
    """Abutting :class:`FuncApprox` pieces covering a larger interval.

    Used for exact solutions with jumps, so that norms and inner products can be
    computed exactly piece by piece.
    """

    __slots__ = ("funcs",)

    def __init__(self, funcs: Sequence[FuncApprox]):
        funcs = tuple(funcs)
        if not funcs:
            raise ValueError("PiecewiseFunc needs at least one piece")
        for left, right in zip(funcs, funcs[1:]):
            if not np.isclose(left.domain.hi, right.domain.lo, rtol=0, atol=1e-14):
                raise ValueError("pieces must abut without gaps or overlaps")
        self.funcs = funcs

    @classmethod
    def from_pieces(cls, breakpoints: Sequence[float], fns: Sequence, tol: float = CHOP_TOL):
        """Approximate ``fns[i]`` on ``[breakpoints[i], breakpoints[i+1]]``.

        A float entry in ``fns`` gives a constant piece.
        """
        if len(breakpoints) != len(fns) + 1:
            raise ValueError("need len(breakpoints) == len(fns) + 1")
        funcs = []
        for lo, hi, fn in zip(breakpoints[:-1], breakpoints[1:], fns):
            dom = Interval(lo, hi)
            if callable(fn):
                funcs.append(approximate(fn, dom, tol))
            else:
                funcs.append(FuncApprox.constant(fn, dom))
        return cls(funcs)

    @classmethod
    def single(cls, f: FuncApprox) -> "PiecewiseFunc":
        return cls([f])

    @property
    def pieces(self) -> list[tuple[Interval, FuncApprox]]:
        return [(f.domain, f) for f in self.funcs]

    @property
    def domain(self) -> Interval:
        return Interval(self.funcs[0].domain.lo, self.funcs[-1].domain.hi)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([f.domain.lo for f in self.funcs] + [self.funcs[-1].domain.hi])

    def __call__(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if not np.all(self.domain.contains(t_arr)):
            raise OutOfDomain(f"evaluation point outside {self.domain}")
        interior = self.breakpoints[1:-1]
        idx = np.searchsorted(interior, t_arr, side="right")
        out = np.empty_like(t_arr)
        for k, f in enumerate(self.funcs):
            mask = idx == k
            if mask.any():
                out[mask] = f(np.clip(t_arr[mask], f.domain.lo, f.domain.hi))
        if np.ndim(t) == 0:
            return float(out[0])
        return out

    def norm(self) -> float:
        return norm(self)

    def integrate(self) -> float:
        return sum(integrate(f) for f in self.funcs)

    def __repr__(self):
        return f"PiecewiseFunc(breakpoints={self.breakpoints.tolist()})"

    def to_dict(self) -> dict:
        return {"pieces": [f.to_dict() for f in self.funcs]}


def _inner_piecewise(a, b) -> float:
    if isinstance(a, PiecewiseFunc) and isinstance(b, PiecewiseFunc):
        if a.domain != b.domain:
            raise DomainMismatch(f"{a.domain} vs {b.domain}")
        bps = np.union1d(a.breakpoints, b.breakpoints)
        total = 0.0
        for lo, hi in zip(bps[:-1], bps[1:]):
            sub = Interval(lo, hi)
            total += inner(_piece_on(a, sub), _piece_on(b, sub))
        return total
    pw, f = (a, b) if isinstance(a, PiecewiseFunc) else (b, a)
    if pw.domain != f.domain:
        raise DomainMismatch(f"{pw.domain} vs {f.domain}")
    return sum(inner(f.restrict(g.domain), g) for g in pw.funcs)


def _piece_on(pw: PiecewiseFunc, sub: Interval) -> FuncApprox:
    mid = 0.5 * (sub.lo + sub.hi)
    for f in pw.funcs:
        if f.domain.lo <= mid <= f.domain.hi:
            return f.restrict(sub)
    raise OutOfDomain(f"{sub} not covered")


def distance(f: FuncApprox, g) -> float:
    """``||f - g||`` where ``g`` may be piecewise; exact for polynomial pieces."""
    if isinstance(g, FuncApprox):
        return norm(f - g)
    if f.domain != g.domain:
        raise DomainMismatch(f"{f.domain} vs {g.domain}")
    return float(np.sqrt(sum(norm(f.restrict(p.domain) - p) ** 2 for p in g.funcs)))
