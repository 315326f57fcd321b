import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chebreg.bivariate import LowRankKernel, aca, apply, eval2, probe_residual
from chebreg.errors import DomainMismatch, OutOfDomain, RankOverflow
from chebreg.funapprox import FuncApprox, Interval, approximate, norm

from helpers import probe

UNIT = Interval(0.0, 1.0)


def baart_kernel(s, t):
    return np.exp(s * np.cos(t))


class TestAca:
    def test_separable_is_rank_one(self):
        K, trace = aca(lambda s, t: np.exp(s) * np.cos(t), UNIT, UNIT)
        assert K.rank == 1
        err, _ = probe_residual(K, lambda s, t: np.exp(s) * np.cos(t))
        assert err <= 1e-13

    def test_sum_of_two_products_is_rank_two(self):
        K, _ = aca(lambda s, t: s * t + s**2 * t**2, UNIT, UNIT)
        assert K.rank == 2

    def test_baart_resolved(self):
        K, trace = aca(baart_kernel, (0.0, math.pi / 2), (0.0, math.pi), tol=1e-14)
        err, scale = probe_residual(K, baart_kernel)
        assert err <= 1e-12 * scale

    def test_final_pivot_below_tolerance(self):
        tol = 1e-12
        _, trace = aca(baart_kernel, (0.0, math.pi / 2), (0.0, math.pi), tol=tol)
        mags = trace.magnitudes
        assert mags[-1] <= tol * mags[0]

    def test_zero_kernel_gives_rank_zero(self):
        K, trace = aca(lambda s, t: 0.0 * s * t, UNIT, UNIT)
        assert K.rank == 0
        assert trace.zero_kernel
        assert eval2(K, 0.5, 0.5) == 0.0

    def test_rank_overflow(self):
        with pytest.raises(RankOverflow):
            aca(baart_kernel, (0.0, math.pi / 2), (0.0, math.pi), tol=1e-14, max_rank=3)

    @pytest.mark.parametrize("tol", [0.0, 1.0, -1e-3])
    def test_bad_tolerance(self, tol):
        with pytest.raises(ValueError):
            aca(baart_kernel, UNIT, UNIT, tol=tol)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(1, 4), st.integers(0, 2**31 - 1))
    def test_rank_of_sum_of_products(self, r, seed):
        rng = np.random.default_rng(seed)
        a = rng.uniform(0.5, 3.0, r)
        b = rng.uniform(0.5, 3.0, r)
        w = rng.uniform(0.5, 2.0, r)

        def kernel(s, t):
            s, t = np.broadcast_arrays(s, t)
            return sum(w[k] * np.exp(a[k] * s) * np.cos(b[k] * t + k) for k in range(r))

        K, _ = aca(kernel, UNIT, UNIT, tol=1e-13)
        assert K.rank <= r + 1


class TestEval2:
    def test_rank_zero(self):
        K = LowRankKernel.zero(UNIT, UNIT)
        assert np.all(eval2(K, np.array([0.1, 0.9]), 0.3) == 0.0)

    def test_rank_zero_checks_domain(self):
        with pytest.raises(OutOfDomain):
            eval2(LowRankKernel.zero(UNIT, UNIT), 2.0, 0.5)

    def test_rank_one_matches(self):
        u = approximate(np.exp, UNIT)
        v = approximate(np.cos, UNIT)
        K = LowRankKernel.outer(u, v)
        s = np.linspace(0, 1, 37)
        t = np.linspace(0, 1, 37)[::-1]
        assert np.allclose(eval2(K, s, t), np.exp(s) * np.cos(t), atol=1e-13)

    def test_reproduces_kernel_at_pivots(self):
        K, trace = aca(baart_kernel, (0.0, math.pi / 2), (0.0, math.pi), tol=1e-14)
        for x, y, _ in trace.steps[: K.rank]:
            assert abs(eval2(K, x, y) - baart_kernel(x, y)) <= 1e-10

    def test_grid_matches_pointwise(self):
        K, _ = aca(baart_kernel, (0.0, math.pi / 2), (0.0, math.pi))
        s, t = np.linspace(0, math.pi / 2, 7), np.linspace(0, math.pi, 5)
        G = K.grid(s, t)
        S, T = np.meshgrid(s, t, indexing="ij")
        assert np.allclose(G, eval2(K, S, T), atol=1e-15)


class TestApply:
    def test_zero_input(self):
        K, _ = aca(baart_kernel, (0.0, math.pi / 2), (0.0, math.pi))
        out = apply(K, FuncApprox.zero(Interval(0.0, math.pi)))
        assert norm(out) == 0.0

    def test_rank_one(self):
        u = approximate(np.exp, UNIT)
        v = approximate(np.sin, UNIT)
        out = apply(LowRankKernel.outer(u, v), v)
        t = np.linspace(0, 1, 50)
        assert np.allclose(out(t), np.exp(t) * norm(v) ** 2, atol=1e-14)

    def test_baart_sin_gives_rhs(self):
        K, _ = aca(baart_kernel, (0.0, math.pi / 2), (0.0, math.pi), tol=1e-14)
        g = apply(K, approximate(np.sin, Interval(0.0, math.pi)))
        s = np.linspace(1e-3, math.pi / 2, 200)
        assert np.abs(g(s) - 2 * np.sinh(s) / s).max() <= 1e-10

    def test_domain_mismatch(self):
        K, _ = aca(baart_kernel, (0.0, math.pi / 2), (0.0, math.pi))
        with pytest.raises(DomainMismatch):
            apply(K, FuncApprox.constant(1.0, UNIT))

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-5, 5), st.integers(0, 2**31 - 1))
    def test_linear(self, a, seed):
        K, _ = aca(baart_kernel, (0.0, math.pi / 2), (0.0, math.pi))
        rng = np.random.default_rng(seed)
        dom = Interval(0.0, math.pi)
        x = FuncApprox(rng.standard_normal(12), dom)
        y = FuncApprox(rng.standard_normal(9), dom)
        lhs = apply(K, x * a + y)
        rhs = apply(K, x) * a + apply(K, y)
        assert norm(lhs - rhs) <= 1e-12 * max(norm(lhs), norm(rhs), 1e-300)


class TestLowRankKernel:
    def test_norm_matches_quadrature(self):
        K, _ = aca(baart_kernel, (0.0, math.pi / 2), (0.0, math.pi))
        z, w = np.polynomial.legendre.leggauss(80)
        s = (z + 1) * math.pi / 4
        t = (z + 1) * math.pi / 2
        W = np.outer(w * math.pi / 4, w * math.pi / 2)
        ref = math.sqrt(np.sum(W * baart_kernel(s[:, None], t[None, :]) ** 2))
        assert abs(K.norm() - ref) <= 1e-12 * ref

    def test_json_round_trip(self):
        K, _ = aca(lambda s, t: s * t + s**2 * t**2, UNIT, UNIT)
        K2 = LowRankKernel.from_dict(K.to_dict())
        s = probe(UNIT, 13)
        assert np.array_equal(K.grid(s, s), K2.grid(s, s))

    def test_sum_and_scaling(self):
        u = approximate(np.exp, UNIT)
        v = approximate(np.cos, UNIT)
        K = LowRankKernel.outer(u, v) + LowRankKernel.outer(v, u).scaled(2.0)
        s = probe(UNIT, 11)
        ref = np.exp(s)[:, None] * np.cos(s)[None, :] + 2 * np.cos(s)[:, None] * np.exp(s)[None, :]
        assert np.allclose(K.grid(s, s), ref, atol=1e-13)

    def test_transpose(self):
        K, _ = aca(baart_kernel, (0.0, math.pi / 2), (0.0, math.pi))
        s, t = np.linspace(0, math.pi / 2, 5), np.linspace(0, math.pi, 4)
        assert np.allclose(K.transpose().grid(t, s), K.grid(s, t).T)
