"""Named benchmark problems and band-limited smooth noise.

The five 1D problems follow the classic Regularization Tools definitions
(baart, foxgood, gravity, shaw, wing); ``blur2d`` is a separable Gaussian
blur of a rectangular indicator image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erf

from .bivariate import LowRankKernel, aca, apply
from .errors import UnknownProblem, ZeroNoiseNorm
from .funapprox import FuncApprox, Interval, PiecewiseFunc, approximate, norm
from .regularize import RectIndicator
from .sve import CUTOFF_EPS, SveExpansion, sve_from_lowrank

PROBLEMS_1D = ("baart", "foxgood", "gravity", "shaw", "wing")
PROBLEMS = PROBLEMS_1D + ("blur2d",)

VARTHETA = 1e-2
NOISE_RANK_2D = 10
CONSISTENCY_TOL = 1e-8
BLUR_SIGMA = 0.2


@dataclass(frozen=True)
class NoiseSpec:
    """Noise level ``alpha``, wavelength scale ``vartheta`` and generator seed."""

    alpha: float
    vartheta: float = VARTHETA
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.vartheta <= 0:
            raise ValueError("vartheta must be > 0")


@dataclass(frozen=True, eq=False)
class TestProblem:
    """First-kind equation ``int_omega1 kernel(s, t) x(t) dt = g(s)`` for ``s`` in omega2."""

    __test__ = False  # keep pytest from collecting this class

    name: str
    kernel: Callable
    omega1: Interval
    omega2: Interval
    x_exact: PiecewiseFunc
    g_exact: FuncApprox
    oracle_rule: str = "gauss"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def lowrank(self, aca_tol: float = 1e-14, **aca_options) -> LowRankKernel:
        """Cross approximation of the kernel on ``omega2 x omega1`` (memoised)."""
        key = ("aca", aca_tol, tuple(sorted(aca_options.items())))
        if key not in self._cache:
            self._cache[key] = aca(self.kernel, self.omega2, self.omega1, tol=aca_tol, **aca_options)[0]
        return self._cache[key]

    def sve(self, aca_tol: float = 1e-14, cutoff_eps: float = CUTOFF_EPS, **aca_options) -> SveExpansion:
        key = ("sve", aca_tol, cutoff_eps, tuple(sorted(aca_options.items())))
        if key not in self._cache:
            self._cache[key] = sve_from_lowrank(self.lowrank(aca_tol, **aca_options), cutoff_eps)
        return self._cache[key]

    def consistency_error(self, aca_tol: float = 1e-14) -> float:
        """``||A x_exact - g_exact|| / ||g_exact||`` using the low-rank kernel."""
        Ax = apply(self.lowrank(aca_tol), self.x_exact)
        return norm(Ax - self.g_exact) / norm(self.g_exact)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "omega1": [self.omega1.lo, self.omega1.hi],
            "omega2": [self.omega2.lo, self.omega2.hi],
            "x_exact": self.x_exact.to_dict(),
            "g_exact": self.g_exact.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class BlurProblem:
    """Separable Gaussian blur on ``dom1 x dom2`` of a rectangular indicator image."""

    name: str
    kernel1: Callable
    dom1: Interval
    dom2: Interval
    x_exact: RectIndicator
    g1: FuncApprox
    g2: FuncApprox
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def g_exact(self) -> LowRankKernel:
        return LowRankKernel.outer(self.g1, self.g2)

    def sves(self, aca_tol: float = 1e-14, cutoff_eps: float = CUTOFF_EPS) -> tuple[SveExpansion, SveExpansion]:
        key = (aca_tol, cutoff_eps)
        if key not in self._cache:
            s1 = sve_from_lowrank(aca(self.kernel1, self.dom1, self.dom1, tol=aca_tol)[0], cutoff_eps)
            s2 = sve_from_lowrank(aca(self.kernel1, self.dom2, self.dom2, tol=aca_tol)[0], cutoff_eps)
            self._cache[key] = (s1, s2)
        return self._cache[key]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dom1": [self.dom1.lo, self.dom1.hi],
            "dom2": [self.dom2.lo, self.dom2.hi],
            "rect": list(self.x_exact.rect),
            "blur_sigma": BLUR_SIGMA,
            "g1": self.g1.to_dict(),
            "g2": self.g2.to_dict(),
        }


# ---------------------------------------------------------------------------
# problem definitions
# ---------------------------------------------------------------------------


def _quadrature_rhs(kernel, x, omega1: Interval, omega2: Interval, n: int = 256) -> FuncApprox:
    """``g(s) = int kernel(s, t) x(t) dt`` by Gauss-Legendre quadrature, then Chebyshev-fitted."""
    z, w = leggauss(n)
    t = omega1.from_unit(z)
    w = w * omega1.length / 2
    xt = x(t)

    def g(s):
        return kernel(np.asarray(s)[:, None], t[None, :]) @ (w * xt)

    return approximate(g, omega2, tol=1e-15)


def _sinhc2(s):
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 1e-4
    safe = np.where(small, 1.0, s)
    return np.where(small, 2.0 + s**2 / 3.0, 2.0 * np.sinh(safe) / safe)


def _wing_rhs(s):
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 1e-8
    safe = np.where(small, 1.0, s)
    return np.where(small, 1.0 / 6.0 - 65.0 * s / 1944.0, (np.expm1(-safe / 9) - np.expm1(-4 * safe / 9)) / (2 * safe))


def _baart() -> TestProblem:
    o1, o2 = Interval(0.0, math.pi), Interval(0.0, math.pi / 2)
    return TestProblem(
        "baart",
        lambda s, t: np.exp(s * np.cos(t)),
        o1,
        o2,
        PiecewiseFunc.single(approximate(np.sin, o1)),
        approximate(_sinhc2, o2),
    )


def _foxgood() -> TestProblem:
    o = Interval(0.0, 1.0)
    return TestProblem(
        "foxgood",
        lambda s, t: np.sqrt(s**2 + t**2),
        o,
        o,
        PiecewiseFunc.single(FuncApprox.identity(o)),
        approximate(lambda s: ((1 + s**2) ** 1.5 - s**3) / 3, o),
        oracle_rule="graded",
    )


def _gravity() -> TestProblem:
    o = Interval(0.0, 1.0)
    d = 0.25

    def kernel(s, t):
        return d * (d**2 + (s - t) ** 2) ** -1.5

    def x(t):
        return np.sin(np.pi * t) + 0.5 * np.sin(2 * np.pi * t)

    return TestProblem("gravity", kernel, o, o, PiecewiseFunc.single(approximate(x, o)), _quadrature_rhs(kernel, x, o, o))


def _shaw() -> TestProblem:
    o = Interval(-math.pi / 2, math.pi / 2)

    def kernel(s, t):
        # np.sinc(z) = sin(pi z)/(pi z), so this is (sin u / u)^2 with u = pi (sin s + sin t)
        return (np.cos(s) + np.cos(t)) ** 2 * np.sinc(np.sin(s) + np.sin(t)) ** 2

    def x(t):
        return 2.0 * np.exp(-6.0 * (t - 0.8) ** 2) + np.exp(-2.0 * (t + 0.5) ** 2)

    return TestProblem("shaw", kernel, o, o, PiecewiseFunc.single(approximate(x, o)), _quadrature_rhs(kernel, x, o, o))


def _wing() -> TestProblem:
    o = Interval(0.0, 1.0)
    return TestProblem(
        "wing",
        lambda s, t: t * np.exp(-s * t**2),
        o,
        o,
        PiecewiseFunc.from_pieces([0.0, 1 / 3, 2 / 3, 1.0], [0.0, 1.0, 0.0]),
        approximate(_wing_rhs, o),
    )


def gaussian_blur_kernel(sigma: float = BLUR_SIGMA) -> Callable:
    def kernel(s, t):
        return np.exp(-((t - s) ** 2) / (2 * sigma**2)) / math.sqrt(2 * math.pi * sigma**2)

    return kernel


def _blur_factor(a: float, b: float, dom: Interval, sigma: float) -> FuncApprox:
    """``int_a^b kernel(s, t) dt`` as an erf difference."""
    r = sigma * math.sqrt(2)
    return approximate(lambda s: 0.5 * (erf((b - s) / r) - erf((a - s) / r)), dom)


def _blur2d() -> BlurProblem:
    d1, d2 = Interval(-1.0, 1.0), Interval(-2.0, 2.0)
    rect = (-0.5, 0.2, -0.6, -0.2)
    return BlurProblem(
        "blur2d",
        gaussian_blur_kernel(BLUR_SIGMA),
        d1,
        d2,
        RectIndicator(d1, d2, rect),
        _blur_factor(rect[0], rect[1], d1, BLUR_SIGMA),
        _blur_factor(rect[2], rect[3], d2, BLUR_SIGMA),
    )


_BUILDERS = {
    "baart": _baart,
    "foxgood": _foxgood,
    "gravity": _gravity,
    "shaw": _shaw,
    "wing": _wing,
    "blur2d": _blur2d,
}


@lru_cache(maxsize=None)
def make_problem(name: str, check: bool = False):
    """Build (and memoise) a named problem.

    With ``check=True`` the 1D consistency ``||A x - g|| <= 1e-8 ||g||`` is
    verified against the cross-approximated kernel.

    Raises:
        UnknownProblem: ``name`` is not one of :data:`PROBLEMS`.
    """
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownProblem(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}") from None
    if check and name != "blur2d":
        prob = make_problem(name)
        err = prob.consistency_error()
        if err > CONSISTENCY_TOL:
            raise AssertionError(f"{name}: ||Ax - g|| / ||g|| = {err:.2e} exceeds {CONSISTENCY_TOL:g}")
        return prob
    return builder()


# ---------------------------------------------------------------------------
# noise
# ---------------------------------------------------------------------------


def noise_coefficients(domain: Interval, spec: NoiseSpec, rng: np.random.Generator | None = None):
    """Random trigonometric coefficients ``(a, b)`` of length ``m + 1``, ``m = ceil(L / vartheta)``."""
    m = math.ceil(domain.length / spec.vartheta)
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    return rng.standard_normal(m + 1), rng.standard_normal(m + 1)


def _trig_sum(domain: Interval, a: np.ndarray, b: np.ndarray) -> FuncApprox:
    omega = 2 * math.pi / domain.length
    k = np.arange(a.size)

    def F(s):
        phase = omega * np.outer(np.asarray(s) - domain.lo, k)
        return np.cos(phase) @ a + np.sin(phase) @ b

    return approximate(F, domain)


def smooth_noise(domain, spec: NoiseSpec) -> FuncApprox:
    """Band-limited random function with maximum angular frequency about ``2 pi / vartheta``.

    ``F(s) = sum_k a_k cos(k w (s - lo)) + b_k sin(k w (s - lo))`` with
    ``w = 2 pi / L`` and iid standard normal ``a_k, b_k``; deterministic per seed.
    """
    domain = domain if isinstance(domain, Interval) else Interval(*domain)
    a, b = noise_coefficients(domain, spec)
    return _trig_sum(domain, a, b)


def contaminate(g: FuncApprox, spec: NoiseSpec) -> tuple[FuncApprox, float]:
    """``g + alpha ||g|| / ||F|| F`` and the realised ``delta = ||g_delta - g||``."""
    if spec.alpha == 0:
        return g, 0.0
    F = smooth_noise(g.domain, spec)
    nF = norm(F)
    if nF == 0:
        raise ZeroNoiseNorm("noise draw has zero norm")
    noise = F * (spec.alpha * norm(g) / nF)
    g_delta = g + noise
    return g_delta, norm(noise)


def smooth_noise_2d(dom1, dom2, spec: NoiseSpec, rank: int = NOISE_RANK_2D) -> LowRankKernel:
    """Sum of ``rank`` products of independent 1D noise draws (unnormalised)."""
    dom1 = dom1 if isinstance(dom1, Interval) else Interval(*dom1)
    dom2 = dom2 if isinstance(dom2, Interval) else Interval(*dom2)
    rng = np.random.default_rng(spec.seed)
    us, vs = [], []
    for _ in range(rank):
        us.append(_trig_sum(dom1, *noise_coefficients(dom1, spec, rng)))
        vs.append(_trig_sum(dom2, *noise_coefficients(dom2, spec, rng)))
    return LowRankKernel(us, np.eye(rank), vs)


def contaminate_2d(G: LowRankKernel, spec: NoiseSpec, rank: int = NOISE_RANK_2D) -> tuple[LowRankKernel, float]:
    """2D analogue of :func:`contaminate`; the result stays in low-rank form."""
    if spec.alpha == 0:
        return G, 0.0
    F = smooth_noise_2d(G.domain_s, G.domain_t, spec, rank)
    nF = F.norm()
    if nF == 0:
        raise ZeroNoiseNorm("noise draw has zero norm")
    noise = F.scaled(spec.alpha * G.norm() / nF)
    return G + noise, noise.norm()
