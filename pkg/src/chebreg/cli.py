"""Command-line entry point and benchmark harness.

Subcommands::

    chebreg solve    --problem baart --method tsve --alpha 1e-2 --seed 0
    chebreg bench    [--config cfg.json] [--output-dir out]
    chebreg sve      --problem shaw
    chebreg oracle   --problem gravity --n 400
    chebreg bound    [--seeds 10]
    chebreg blur2d   [--output-dir out]
    chebreg problems list
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import ChebregError, ConfigError, UnattainableDiscrepancy
from .funapprox import distance, norm
from .oracle import compare_spectra, discretize
from .problems import (
    NOISE_RANK_2D,
    PROBLEMS,
    PROBLEMS_1D,
    VARTHETA,
    NoiseSpec,
    contaminate,
    contaminate_2d,
    make_problem,
)
from .regularize import (
    discrepancy_lambda,
    discrepancy_truncation,
    exact_betas,
    project_rhs,
    relative_error,
    sigma_rule_truncation,
    solve_2d_tikhonov,
    solve_2d_tsve,
    tikhonov_solve,
    tsve_error_bound,
    tsve_solve,
)
from .sve import CUTOFF_EPS

logger = logging.getLogger("chebreg")

METHODS = ("tsve", "tikhonov")
RULES = ("discrepancy", "sigma")
DEFAULT_ALPHAS = (1e-3, 1e-2, 1e-1)
DEFAULT_SEEDS = tuple(range(10))
SIGMA_RULE_ETA = 3.0
GRID_2D = 256


@dataclass
class ExperimentConfig:
    """Grid of benchmark cells plus solver settings; loadable from JSON."""

    problems: list = field(default_factory=lambda: list(PROBLEMS_1D))
    alphas: list = field(default_factory=lambda: list(DEFAULT_ALPHAS))
    methods: list = field(default_factory=lambda: list(METHODS))
    seeds: list = field(default_factory=lambda: list(DEFAULT_SEEDS))
    eta: float = 1.0
    eta_2d: float = 10.0
    rule: str = "discrepancy"
    cutoff_eps: float = CUTOFF_EPS
    aca_tol: float = 1e-14
    aca_grid: int = 65
    max_rank: int = 200
    vartheta: float = VARTHETA
    noise_rank_2d: int = NOISE_RANK_2D
    output_dir: str = "results"

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("problems", "alphas", "methods", "seeds"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be a nonempty list")
        unknown = [p for p in self.problems if p not in PROBLEMS]
        if unknown:
            raise ConfigError(f"unknown problems {unknown}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}")
        if self.rule not in RULES:
            raise ConfigError(f"rule must be one of {RULES}")
        if any(a < 0 for a in self.alphas):
            raise ConfigError("alphas must be >= 0")
        for name in ("cutoff_eps", "aca_tol"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1)")
        if self.eta < 1 or self.eta_2d < 1:
            raise ConfigError("eta must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    def aca_options(self) -> dict:
        return {"grid": self.aca_grid, "max_rank": self.max_rank}


@dataclass
class ResultRow:
    problem: str
    method: str
    alpha: float
    seed: int
    param: float | None = None
    RE: float | None = None
    residual: float | None = None
    delta: float | None = None
    bound_lhs: float | None = None
    bound_rhs: float | None = None
    attained: bool | None = None
    wall_time_ms: float | None = None
    error: str = ""


ROW_FIELDS = [f.name for f in fields(ResultRow)]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows(rows: Sequence[ResultRow], path: Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROW_FIELDS)
        for r in rows:
            w.writerow([_fmt(getattr(r, k)) for k in ROW_FIELDS])


# ---------------------------------------------------------------------------
# single 1D cell
# ---------------------------------------------------------------------------


def solve_cell(problem: str, method: str, alpha: float, seed: int, cfg: ExperimentConfig) -> ResultRow:
    """Run one (problem, method, alpha, seed) cell; solver errors land in ``row.error``."""
    row = ResultRow(problem, method, float(alpha), int(seed))
    t0 = time.perf_counter()
    try:
        P = make_problem(problem)
        S = P.sve(cfg.aca_tol, cfg.cutoff_eps, **cfg.aca_options())
        g_delta, delta = contaminate(P.g_exact, NoiseSpec(alpha, cfg.vartheta, seed))
        proj = project_rhs(S, g_delta)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", UnattainableDiscrepancy)
            if delta == 0:
                ell, lam, attained = S.rank, 0.0, True
            elif method == "tsve" and cfg.rule == "sigma":
                eta = cfg.eta if cfg.eta > 1 else SIGMA_RULE_ETA
                ell, attained = sigma_rule_truncation(S, delta, eta), True
            elif method == "tsve":
                ell, attained = discrepancy_truncation(S, proj, delta, cfg.eta)
            else:
                lam, attained = discrepancy_lambda(S, proj, delta, cfg.eta)
        for w in caught:
            logger.warning("%s/%s/%g/%d: %s", problem, method, alpha, seed, w.message)
        if method == "tsve":
            sol = tsve_solve(S, proj, ell)
            row.param = float(ell)
            row.bound_lhs = distance(sol.function(), P.x_exact)
            row.bound_rhs = tsve_error_bound(S, exact_betas(S, P.g_exact), ell, delta, norm(P.x_exact))
        else:
            sol = tikhonov_solve(S, proj, lam)
            row.param = float(lam)
        row.RE = relative_error(sol, P.x_exact)
        row.residual = sol.residual_norm
        row.delta = delta
        row.attained = attained
    except (ChebregError, ValueError, ArithmeticError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        logger.error("%s/%s/%g/%d failed: %s", problem, method, alpha, seed, row.error)
    row.wall_time_ms = 1e3 * (time.perf_counter() - t0)
    return row


# ---------------------------------------------------------------------------
# benchmark grid
# ---------------------------------------------------------------------------


def summarize(rows: Sequence[ResultRow]) -> list[dict]:
    """Per (problem, method, alpha) medians over seeds."""
    cells: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        cells.setdefault((r.problem, r.method, r.alpha), []).append(r)
    out = []
    for (p, m, a), rs in cells.items():
        ok = [r for r in rs if not r.error]

        def med(key):
            vals = [getattr(r, key) for r in ok if getattr(r, key) is not None]
            return float(np.median(vals)) if vals else None

        out.append(
            {
                "problem": p,
                "method": m,
                "alpha": a,
                "runs": len(rs),
                "errors": len(rs) - len(ok),
                "median_RE": med("RE"),
                "median_param": med("param"),
                "median_residual": med("residual"),
                "median_delta": med("delta"),
                "median_bound_lhs": med("bound_lhs"),
                "median_bound_rhs": med("bound_rhs"),
                "median_wall_time_ms": med("wall_time_ms"),
            }
        )
    return out


def run_bench(cfg: ExperimentConfig, write: bool = True) -> list[ResultRow]:
    """One row per (problem, method, alpha, seed); writes ``results.csv`` and ``summary.json``."""
    problems = [p for p in cfg.problems if p in PROBLEMS_1D]
    if not problems:
        raise ConfigError("bench needs at least one 1D problem")
    rows = []
    for p in problems:
        for m in cfg.methods:
            for a in cfg.alphas:
                for s in cfg.seeds:
                    rows.append(solve_cell(p, m, a, s, cfg))
    if write:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_rows(rows, out / "results.csv")
        (out / "summary.json").write_text(json.dumps(summarize(rows), indent=2) + "\n")
    return rows


def run_bound_figure(cfg: ExperimentConfig, alpha: float = 1e-2, write: bool = True) -> list[dict]:
    """Median LHS / RHS of the TSVE error bound per problem at noise level ``alpha``."""
    out_rows = []
    for p in [p for p in cfg.problems if p in PROBLEMS_1D]:
        rows = [solve_cell(p, "tsve", alpha, s, cfg) for s in cfg.seeds]
        ok = [r for r in rows if not r.error]
        lhs = [r.bound_lhs for r in ok]
        rhs = [r.bound_rhs for r in ok]
        out_rows.append(
            {
                "problem": p,
                "lhs": float(np.median(lhs)) if ok else math.nan,
                "rhs": float(np.median(rhs)) if ok else math.nan,
                "runs": len(ok),
                "violations": sum(l > r for l, r in zip(lhs, rhs)),
                "errors": len(rows) - len(ok),
            }
        )
    if write:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "bound.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(out_rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(out_rows)
    return out_rows


def run_blur2d(cfg: ExperimentConfig, alpha: float = 1e-2, n: int = GRID_2D, write: bool = True):
    """2D deblurring with both methods; returns ``(rows, grids)``.

    ``grids`` holds ``n x n`` samples of the exact image, the noisy data and
    the two reconstructions for the first seed.
    """
    B = make_problem("blur2d")
    t_sve = time.perf_counter()
    S1, S2 = B.sves(cfg.aca_tol, cfg.cutoff_eps)
    sve_ms = 1e3 * (time.perf_counter() - t_sve)
    t1 = np.linspace(B.dom1.lo, B.dom1.hi, n)
    t2 = np.linspace(B.dom2.lo, B.dom2.hi, n)
    rows, grids = [], {}
    for seed in cfg.seeds:
        G, delta = contaminate_2d(B.g_exact, NoiseSpec(alpha, cfg.vartheta, seed), cfg.noise_rank_2d)
        for method in METHODS:
            row = ResultRow("blur2d", method, float(alpha), int(seed))
            t0 = time.perf_counter()
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", UnattainableDiscrepancy)
                    solve = solve_2d_tsve if method == "tsve" else solve_2d_tikhonov
                    sol = solve(S1, S2, G, delta=delta, eta=cfg.eta_2d)
                row.param = float(sol.param)
                row.RE = relative_error(sol, B.x_exact)
                row.residual = sol.residual_norm
                row.delta = delta
                row.attained = sol.attained
                if method not in grids:
                    grids[method] = sol.grid(t1, t2)
            except (ChebregError, ValueError, ArithmeticError) as exc:
                row.error = f"{type(exc).__name__}: {exc}"
            row.wall_time_ms = 1e3 * (time.perf_counter() - t0) + sve_ms
            rows.append(row)
        if "g_delta" not in grids:
            grids["g_delta"] = G.grid(t1, t2)
    grids["exact"] = B.x_exact(t1[:, None], t2[None, :])
    if write:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_rows(rows, out / "blur2d.csv")
        for name, arr in grids.items():
            np.savetxt(out / f"blur2d_{name}.csv", arr, delimiter=",", fmt="%.17g")
    return rows, grids


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_solver_flags(p: argparse.ArgumentParser):
    p.add_argument("--eta", type=float, help="discrepancy factor (default 1 in 1D, 10 in 2D)")
    p.add_argument("--tol", "--aca-tol", dest="aca_tol", type=float, help="cross approximation tolerance")
    p.add_argument("--cutoff", dest="cutoff_eps", type=float, help="relative singular value cut-off")
    p.add_argument("--aca-grid", type=int, help="ACA pivot search grid size")
    p.add_argument("--max-rank", type=int, help="ACA rank ceiling")
    p.add_argument("--rule", choices=RULES, help="TSVE truncation rule")
    p.add_argument("--vartheta", type=float, help="noise wavelength scale")


def _add_grid_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--output-dir", help="directory for CSV/JSON output")
    p.add_argument("--problems", nargs="+")
    p.add_argument("--alphas", nargs="+", type=float)
    p.add_argument("--methods", nargs="+", choices=METHODS)
    p.add_argument("--seeds", type=int, help="use seeds 0 .. N-1")
    p.add_argument("--seed", type=int, help="use this single seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chebreg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one noisy problem instance, print JSON")
    p.add_argument("--problem", required=True, choices=PROBLEMS_1D)
    p.add_argument("--method", default="tsve", choices=METHODS)
    p.add_argument("--alpha", type=float, default=1e-2)
    p.add_argument("--seed", type=int, default=0)
    _add_solver_flags(p)

    p = sub.add_parser("bench", help="run the problem x method x alpha x seed grid")
    _add_grid_flags(p)
    _add_solver_flags(p)

    p = sub.add_parser("sve", help="print singular values of a problem kernel as CSV")
    p.add_argument("--problem", required=True, choices=PROBLEMS_1D)
    p.add_argument("--json", action="store_true", help="dump the full expansion as JSON")
    _add_solver_flags(p)

    p = sub.add_parser("oracle", help="compare SVE singular values with the discrete oracle")
    p.add_argument("--problem", required=True, choices=PROBLEMS_1D)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--rule-quad", choices=("gauss", "graded"), help="override the quadrature rule")
    _add_solver_flags(p)

    p = sub.add_parser("bound", help="median LHS/RHS of the TSVE error bound per problem")
    p.add_argument("--alpha", type=float, default=1e-2)
    _add_grid_flags(p)
    _add_solver_flags(p)

    p = sub.add_parser("blur2d", help="2D Gaussian deblurring with both methods")
    p.add_argument("--alpha", type=float, default=1e-2)
    p.add_argument("--n", type=int, default=GRID_2D, help="samples per axis in the output grids")
    _add_grid_flags(p)
    _add_solver_flags(p)

    p = sub.add_parser("problems", help="problem registry")
    p.add_argument("action", choices=("list",))
    p.add_argument("--json", action="store_true", help="dump full problem definitions")
    return parser


def config_from_args(args, **defaults) -> ExperimentConfig:
    base = ExperimentConfig.from_json(args.config).__dict__ if getattr(args, "config", None) else {}
    d = {**defaults, **base}
    overrides = {
        "problems": getattr(args, "problems", None),
        "alphas": getattr(args, "alphas", None),
        "methods": getattr(args, "methods", None),
        "output_dir": getattr(args, "output_dir", None),
        "aca_tol": args.aca_tol,
        "cutoff_eps": args.cutoff_eps,
        "aca_grid": args.aca_grid,
        "max_rank": args.max_rank,
        "rule": args.rule,
        "vartheta": args.vartheta,
    }
    if getattr(args, "seeds", None) is not None:
        overrides["seeds"] = list(range(args.seeds))
    if getattr(args, "seed", None) is not None:
        overrides["seeds"] = [args.seed]
    if args.eta is not None:
        overrides["eta_2d" if args.command == "blur2d" else "eta"] = args.eta
    d.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(d)


def _cmd_solve(args) -> int:
    cfg = config_from_args(args, problems=[args.problem], methods=[args.method], alphas=[args.alpha], seeds=[args.seed])
    t0 = time.perf_counter()
    make_problem(args.problem).sve(cfg.aca_tol, cfg.cutoff_eps, **cfg.aca_options())
    sve_ms = 1e3 * (time.perf_counter() - t0)
    row = solve_cell(args.problem, args.method, args.alpha, args.seed, cfg)
    out = {
        "problem": row.problem,
        "method": row.method,
        "alpha": row.alpha,
        "seed": row.seed,
        "param": row.param,
        "residual": row.residual,
        "delta": row.delta,
        "RE": row.RE,
        "bound_lhs": row.bound_lhs,
        "bound_rhs": row.bound_rhs,
        "attained": row.attained,
        "timings": {"sve_ms": sve_ms, "solve_ms": row.wall_time_ms},
    }
    if row.error:
        out["error"] = row.error
    print(json.dumps(out, indent=2))
    return 1 if row.error else 0


def _cmd_bench(args) -> int:
    cfg = config_from_args(args)
    rows = run_bench(cfg)
    print(f"{'problem':>8} {'method':>9} {'alpha':>7} {'median RE':>11} {'errors':>6}")
    for s in summarize(rows):
        re_ = f"{s['median_RE']:.4e}" if s["median_RE"] is not None else "-"
        print(f"{s['problem']:>8} {s['method']:>9} {s['alpha']:>7g} {re_:>11} {s['errors']:>6}")
    print(f"wrote {len(rows)} rows to {Path(cfg.output_dir) / 'results.csv'}")
    return 1 if any(r.error for r in rows) else 0


def _cmd_sve(args) -> int:
    cfg = config_from_args(args)
    S = make_problem(args.problem).sve(cfg.aca_tol, cfg.cutoff_eps, **cfg.aca_options())
    if args.json:
        print(S.to_json())
        return 0
    print("i,sigma")
    for i, s in enumerate(S.sigmas, 1):
        print(f"{i},{float(s)!r}")
    return 0


def _cmd_oracle(args) -> int:
    cfg = config_from_args(args)
    P = make_problem(args.problem)
    S = P.sve(cfg.aca_tol, cfg.cutoff_eps, **cfg.aca_options())
    D = discretize(P, args.n, args.rule_quad)
    sd = D.singular_values
    rel = compare_spectra(S.sigmas, sd)
    print("i,sigma_sve,sigma_discrete,rel_diff")
    for i in range(S.rank):
        r = repr(float(rel[i])) if i < rel.size else ""
        print(f"{i + 1},{float(S.sigmas[i])!r},{float(sd[i])!r},{r}")
    return 0


def _cmd_bound(args) -> int:
    cfg = config_from_args(args)
    rows = run_bound_figure(cfg, args.alpha)
    print("problem,lhs,rhs,runs,violations,errors")
    for r in rows:
        print(f"{r['problem']},{r['lhs']:.6g},{r['rhs']:.6g},{r['runs']},{r['violations']},{r['errors']}")
    return 1 if any(r["violations"] or r["errors"] for r in rows) else 0


def _cmd_blur2d(args) -> int:
    cfg = config_from_args(args, problems=["blur2d"], seeds=[0])
    rows, _ = run_blur2d(cfg, args.alpha, args.n)
    print("method,seed,param,RE,residual,eta*delta,wall_time_ms")
    for r in rows:
        if r.error:
            print(f"{r.method},{r.seed},error: {r.error}")
        else:
            print(f"{r.method},{r.seed},{r.param:.6g},{r.RE:.6g},{r.residual:.6g},{cfg.eta_2d * r.delta:.6g},{r.wall_time_ms:.0f}")
    return 1 if any(r.error for r in rows) else 0


def _cmd_problems(args) -> int:
    if args.json:
        print(json.dumps([make_problem(p).to_dict() for p in PROBLEMS], indent=2))
        return 0
    for p in PROBLEMS:
        P = make_problem(p)
        if p == "blur2d":
            print(f"{p:8s} [{P.dom1.lo:g}, {P.dom1.hi:g}] x [{P.dom2.lo:g}, {P.dom2.hi:g}]  separable Gaussian blur")
        else:
            print(f"{p:8s} t in [{P.omega1.lo:.6g}, {P.omega1.hi:.6g}], s in [{P.omega2.lo:.6g}, {P.omega2.hi:.6g}]")
    return 0


COMMANDS = {
    "solve": _cmd_solve,
    "bench": _cmd_bench,
    "sve": _cmd_sve,
    "oracle": _cmd_oracle,
    "bound": _cmd_bound,
    "blur2d": _cmd_blur2d,
    "problems": _cmd_problems,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
