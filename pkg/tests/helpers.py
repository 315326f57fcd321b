"""Shared test data: the named kernels and a brute-force reference."""

import numpy as np
from scipy.signal import fftconvolve

from chebreg.problems import PROBLEMS_1D, gaussian_blur_kernel, make_problem


def named_kernels():
    """``name -> (kernel, s-domain, t-domain)`` for the five 1D problems and both blur factors."""
    out = {}
    for name in PROBLEMS_1D:
        P = make_problem(name)
        out[name] = (P.kernel, P.omega2, P.omega1)
    blur = gaussian_blur_kernel()
    out["blur_x1"] = (blur, (-1.0, 1.0), (-1.0, 1.0))
    out["blur_x2"] = (blur, (-2.0, 2.0), (-2.0, 2.0))
    return out


KERNEL_NAMES = tuple(PROBLEMS_1D) + ("blur_x1", "blur_x2")


def bisect_root(f, lo, hi, iters=200):
    """Plain bisection for an increasing ``f`` with ``f(lo) < 0 < f(hi)``."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def probe(dom, n=200):
    lo, hi = dom
    return np.linspace(float(lo), float(hi), n)


def gram_by_convolution(fs):
    """Exact Gram matrix of Chebyshev series via ``T_j T_k = (T_{j+k} + T_{|j-k|}) / 2``.

    Integrates coefficient products against the moments ``int T_m = 2 / (1 - m^2)``
    (even ``m``), so it avoids both sampling and the library's quadrature.
    """
    n = max(len(f.coeffs) for f in fs)
    A = np.zeros((len(fs), n))
    for i, f in enumerate(fs):
        A[i, : len(f.coeffs)] = f.coeffs
    m = np.arange(2 * n - 1)
    mu = np.zeros(2 * n - 1)
    even = m % 2 == 0
    mu[even] = 2.0 / (1.0 - m[even].astype(float) ** 2)
    mu_diff = mu[np.abs(m - (n - 1))]
    G = np.empty((len(fs), len(fs)))
    for i in range(len(fs)):
        for j in range(i, len(fs)):
            total = fftconvolve(A[i], A[j]) @ mu + fftconvolve(A[i], A[j][::-1]) @ mu_diff
            G[i, j] = G[j, i] = 0.25 * fs[0].domain.length * total
    return G
