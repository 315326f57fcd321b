"""End-to-end acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line; the lines are repeated in an
"acceptance criteria" section at the end of the pytest run. Where a quantity
is also computed by the library, the check recomputes it by an independent
route: Gauss-Legendre quadrature on the raw kernel or on sampled functions,
or exact convolution of Chebyshev coefficients for inner products.
"""

import math
import time
import warnings

import numpy as np
import pytest

from chebreg.bivariate import aca
from chebreg.cli import ExperimentConfig, run_bench, run_blur2d, solve_cell, summarize
from chebreg.errors import UnattainableDiscrepancy
from chebreg.funapprox import lincomb, norm
from chebreg.oracle import discretize, gauss_rule
from chebreg.problems import PROBLEMS_1D, NoiseSpec, contaminate, make_problem
from chebreg.regularize import (
    discrepancy_lambda,
    discrepancy_truncation,
    project_rhs,
    tikhonov_solve,
    tsve_error_bound,
    tsve_solve,
)
from chebreg.sve import compute_sve

from helpers import KERNEL_NAMES, gram_by_convolution, named_kernels

ALPHAS = (1e-3, 1e-2, 1e-1)
SEEDS = tuple(range(10))

# reference median relative errors, (problem, alpha) -> RE
REFERENCE_RE = {
    "tsve": {
        ("baart", 1e-3): 1.1479e-1, ("baart", 1e-2): 1.6644e-1, ("baart", 1e-1): 3.4644e-1,
        ("foxgood", 1e-3): 9.8653e-3, ("foxgood", 1e-2): 3.1575e-2, ("foxgood", 1e-1): 7.5813e-2,
        ("gravity", 1e-3): 1.9939e-2, ("gravity", 1e-2): 4.0751e-2, ("gravity", 1e-1): 6.6607e-2,
        ("shaw", 1e-3): 4.1005e-2, ("shaw", 1e-2): 1.3087e-1, ("shaw", 1e-1): 1.5267e-1,
        ("wing", 1e-3): 6.0280e-1, ("wing", 1e-2): 6.0280e-1, ("wing", 1e-1): 6.1542e-1,
    },
    "tikhonov": {
        ("baart", 1e-3): 1.3220e-1, ("baart", 1e-2): 1.7067e-1, ("baart", 1e-1): 2.2769e-1,
        ("foxgood", 1e-3): 1.2250e-2, ("foxgood", 1e-2): 2.3124e-2, ("foxgood", 1e-1): 5.4079e-2,
        ("gravity", 1e-3): 1.5298e-2, ("gravity", 1e-2): 2.8708e-2, ("gravity", 1e-1): 8.8507e-2,
        ("shaw", 1e-3): 4.4253e-2, ("shaw", 1e-2): 1.0998e-1, ("shaw", 1e-1): 1.6106e-1,
        ("wing", 1e-3): 6.0277e-1, ("wing", 1e-2): 6.0340e-1, ("wing", 1e-1): 6.5836e-1,
    },
}  # fmt: skip

# reference medians of the TSVE error bound at alpha = 1e-2, problem -> (lhs, rhs)
REFERENCE_BOUND = {
    "baart": (0.209830752166255, 0.250507045532956),
    "foxgood": (0.017964227827709, 1.901536166479170),
    "gravity": (0.036927582968480, 1.874650936624351),
    "shaw": (0.086674859374278, 1.518125686327245),
    "wing": (0.348049438529407, 0.423628546907915),
}


def _within(value, ref, factor):
    return ref / factor <= value <= ref * factor


def _piecewise_rule(x_exact, n=400):
    """Gauss nodes/weights on each smooth piece of ``x_exact`` plus ``x_exact`` there."""
    nodes, weights, vals = [], [], []
    for dom, f in x_exact.pieces:
        t, w = gauss_rule(dom, n)
        nodes.append(t)
        weights.append(w)
        vals.append(f(t))
    return np.concatenate(nodes), np.concatenate(weights), np.concatenate(vals)


@pytest.fixture(scope="module")
def full_grid():
    t0 = time.perf_counter()
    rows = run_bench(ExperimentConfig(), write=False)
    elapsed = time.perf_counter() - t0
    med = {(s["problem"], s["method"], s["alpha"]): s["median_RE"] for s in summarize(rows)}
    return rows, med, elapsed


class TestAcceptance:
    def test_criterion_1_sve_correctness(self, report):
        t0 = time.perf_counter()
        worst_ortho = worst_sigma = 0.0
        monotone = True
        for name in PROBLEMS_1D:
            P = make_problem(name)
            S = compute_sve(P.kernel, P.omega2, P.omega1)
            # pointwise quadrature cannot resolve the high-degree foxgood functions to 1e-10
            for fam in (S.phis, S.psis):
                G = gram_by_convolution(fam)
                worst_ortho = max(worst_ortho, float(np.abs(G - np.eye(S.rank)).max()))
            monotone &= bool(np.all(np.diff(S.sigmas) <= 0))
            sd = discretize(P, 400).singular_values
            k = int(np.count_nonzero(S.sigmas >= 1e-8 * S.sigmas[0]))
            worst_sigma = max(worst_sigma, float((np.abs(sd[:k] - S.sigmas[:k]) / S.sigmas[:k]).max()))
        elapsed = time.perf_counter() - t0
        ok = worst_ortho <= 1e-10 and monotone and worst_sigma <= 1e-6 and elapsed < 60
        report(
            1,
            ok,
            f"max orthonormality defect {worst_ortho:.2e} (<= 1e-10), sigma non-increasing {monotone}, "
            f"max oracle rel diff {worst_sigma:.2e} (<= 1e-6), {elapsed:.1f} s (< 60 s)",
        )
        assert ok

    def test_criterion_2_aca_reconstruction(self, report):
        tol = 1e-13
        t0 = time.perf_counter()
        worst, detail = 0.0, []
        for name, (kernel, ds, dt) in named_kernels().items():
            K, _ = aca(kernel, ds, dt, tol=tol)
            s = np.linspace(*map(float, ds), 200)
            t = np.linspace(*map(float, dt), 200)
            exact = kernel(s[:, None], t[None, :])
            ratio = float(np.abs(exact - K.grid(s, t)).max() / (tol * np.abs(exact).max()))
            worst = max(worst, ratio)
            detail.append(f"{name} {ratio:.2f}")
        elapsed = time.perf_counter() - t0
        ok = worst <= 10 and len(detail) == len(KERNEL_NAMES)
        report(2, ok, f"residual / (tol max|kappa|) per kernel: {', '.join(detail)} (<= 10), {elapsed:.1f} s")
        assert ok

    def test_criterion_3_error_bound(self, report):
        t0 = time.perf_counter()
        violations, meds, lib_gap = 0, {}, 0.0
        for name in PROBLEMS_1D:
            P = make_problem(name)
            S = P.sve()
            t, w, x_t = _piecewise_rule(P.x_exact)
            Psi = S.psi_values(t)
            betas = Psi.T @ (w * x_t)
            x_norm_sq = float(w @ x_t**2)
            lhs, rhs = [], []
            for seed in SEEDS:
                g_delta, delta = contaminate(P.g_exact, NoiseSpec(1e-2, seed=seed))
                proj = project_rhs(S, g_delta)
                ell, _ = discrepancy_truncation(S, proj, delta)
                x_ell = tsve_solve(S, proj, ell)(t)
                l = math.sqrt(float(w @ (x_ell - x_t) ** 2))
                tail = max(x_norm_sq - float(np.sum(betas[:ell] ** 2)), 0.0)
                r = math.sqrt((delta / S.sigmas[ell - 1]) ** 2 + tail)
                lib = tsve_error_bound(S, betas, ell, delta, math.sqrt(x_norm_sq))
                lib_gap = max(lib_gap, abs(lib - r) / r)
                violations += l > r
                lhs.append(l)
                rhs.append(r)
            meds[name] = (float(np.median(lhs)), float(np.median(rhs)))
        elapsed = time.perf_counter() - t0
        off = [
            f"{n} {'lhs' if i == 0 else 'rhs'} {meds[n][i]:.4g} vs {REFERENCE_BOUND[n][i]:.4g}"
            for n in PROBLEMS_1D
            for i in (0, 1)
            if not _within(meds[n][i], REFERENCE_BOUND[n][i], 2)
        ]
        ok = violations == 0 and not off and lib_gap <= 1e-6 and elapsed < 120
        summary = ", ".join(f"{n} {l:.4f}/{r:.4f}" for n, (l, r) in meds.items())
        report(
            3,
            ok,
            f"{violations} per-run violations; median lhs/rhs {summary}; "
            f"outside factor 2: {'; '.join(off) or 'none'}; {elapsed:.1f} s (< 120 s)",
        )
        assert ok

    def test_criterion_4_table_reproduction(self, report, full_grid):
        rows, med, elapsed = full_grid
        off = []
        for method, ref in REFERENCE_RE.items():
            for (name, alpha), value in ref.items():
                factor = 1.5 if name == "wing" else 3.0
                if not _within(med[(name, method, alpha)], value, factor):
                    off.append(f"{name}/{method}/{alpha:g} {med[(name, method, alpha)]:.4g} vs {value:.4g}")
        errors = sum(bool(r.error) for r in rows)
        ok = not off and errors == 0 and len(rows) == 300 and elapsed < 600
        report(
            4,
            ok,
            f"{len(rows)} runs, {errors} errors, cells outside tolerance: {'; '.join(off) or 'none'}, "
            f"{elapsed:.1f} s (< 600 s)",
        )
        assert ok

    def test_criterion_5_discrepancy_contracts(self, report):
        bad_trunc = bad_lam = bad_mono = checked = 0
        for name in PROBLEMS_1D:
            P = make_problem(name)
            S = P.sve()
            for alpha in ALPHAS:
                for seed in range(3):
                    g_delta, delta = contaminate(P.g_exact, NoiseSpec(alpha, seed=seed))
                    proj = project_rhs(S, g_delta)
                    g_norm = norm(g_delta)

                    # residual of a solution computed as a function-level norm, not from coefficients
                    def residual(betas, k):
                        return norm(lincomb(S.phis[:k], S.sigmas[:k] * betas[:k]) - g_delta)

                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", UnattainableDiscrepancy)
                        ell, ok_t = discrepancy_truncation(S, proj, delta)
                        lam, ok_l = discrepancy_lambda(S, proj, delta)
                    if ok_t:
                        checked += 1
                        r_ell = residual(tsve_solve(S, proj, ell).betas, ell)
                        r_prev = g_norm if ell == 1 else residual(tsve_solve(S, proj, ell - 1).betas, ell - 1)
                        bad_trunc += not (r_ell <= delta * (1 + 1e-10) and delta < r_prev)
                    if ok_l:
                        r_lam = residual(tikhonov_solve(S, proj, lam).betas, S.rank)
                        bad_lam += abs(r_lam - delta) > 1e-6 * g_norm
            g_delta, delta = contaminate(P.g_exact, NoiseSpec(1e-2, seed=0))
            proj = project_rhs(S, g_delta)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UnattainableDiscrepancy)
                scan = [discrepancy_lambda(S, proj, f * delta)[0] for f in np.geomspace(1.0, 20.0, 15)]
            bad_mono += not np.all(np.diff(scan) > 0)
        ok = bad_trunc == 0 and bad_lam == 0 and bad_mono == 0 and checked > 0
        report(
            5,
            ok,
            f"truncation bracket failures {bad_trunc}/{checked}, lambda residual mismatches {bad_lam}, "
            f"non-monotone lambda scans {bad_mono}/5",
        )
        assert ok

    def test_criterion_6_noise_trend(self, report, full_grid):
        _, med, _ = full_grid
        parts, ok = [], True
        for name in ("gravity", "foxgood"):
            for method in ("tsve", "tikhonov"):
                seq = [med[(name, method, a)] for a in ALPHAS]
                inc = seq[0] < seq[1] < seq[2]
                ok &= inc
                parts.append(f"{name}/{method} " + " < ".join(f"{v:.3g}" for v in seq) + ("" if inc else " (not increasing)"))
        report(6, ok, "; ".join(parts))
        assert ok

    def test_criterion_7_blur2d(self, report, tmp_path):
        cfg = ExperimentConfig(problems=["blur2d"], seeds=[0], output_dir=str(tmp_path))
        make_problem("blur2d")._cache.clear()
        t0 = time.perf_counter()
        rows, _ = run_blur2d(cfg, alpha=1e-2)
        elapsed = time.perf_counter() - t0
        by = {r.method: r for r in rows}
        resid_ok = all(not r.error and r.residual <= cfg.eta_2d * r.delta * (1 + 1e-12) for r in rows)
        ratio = by["tsve"].RE / by["tikhonov"].RE
        ok = resid_ok and 1 / 1.5 <= ratio <= 1.5 and elapsed < 300
        report(
            7,
            ok,
            f"residual/(eta delta) tsve {by['tsve'].residual / (10 * by['tsve'].delta):.3f}, "
            f"tikhonov {by['tikhonov'].residual / (10 * by['tikhonov'].delta):.3f} (<= 1); "
            f"RE tsve {by['tsve'].RE:.4f}, tikhonov {by['tikhonov'].RE:.4f}, ratio {ratio:.3f} in [0.667, 1.5]; "
            f"{elapsed:.1f} s (< 300 s)",
        )
        assert ok

    def test_criterion_8_exact_data(self, report):
        cfg = ExperimentConfig()
        res = {}
        for name in ("gravity", "foxgood", "shaw", "baart"):
            row = solve_cell(name, "tsve", 0.0, 0, cfg)
            res[name] = row.RE if not row.error else math.inf
        ok = all(v <= 1e-6 for v in res.values())
        report(8, ok, "full-rank RE with alpha = 0: " + ", ".join(f"{n} {v:.2e}" for n, v in res.items()) + " (<= 1e-6)")
        assert ok

    def test_criterion_9_noise_projection(self, report):
        draws, worst = 0, -math.inf
        per_problem = 200
        for name in PROBLEMS_1D:
            P = make_problem(name)
            S = P.sve()
            s, w = gauss_rule(P.omega2, 2000)
            Phi = S.phi_values(s)
            g_s = P.g_exact(s)
            for seed in range(per_problem):
                g_delta, _ = contaminate(P.g_exact, NoiseSpec(1e-2, seed=seed))
                n_s = g_delta(s) - g_s
                c = Phi.T @ (w * n_s)
                n_sq = float(w @ n_s**2)
                worst = max(worst, float(np.sum(c**2)) / n_sq - 1.0)
                draws += 1
        ok = draws == 1000 and worst <= 1e-10
        report(9, ok, f"{draws} draws, max (sum c_i^2 / ||n||^2 - 1) = {worst:.2e} (<= 1e-10)")
        assert ok
