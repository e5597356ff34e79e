"""Command-line entry point for the case studies.

Subcommands: quadrature (node-placement case study), pde-design (elliptic
design search with contour-grid export), discrete (finite-state criteria
report, including the built-in counterexample) and regression (alphabet
criteria comparison for linear-Gaussian candidates).

Exit codes: 0 success, 2 invalid arguments/input, 3 numerical failure.
All outputs are deterministic given flags and seed; OPTINFO_SEED is used
as a fallback when --seed is not passed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import criteria, discrete, pde, quadrature
from .criteria import MonteCarloConfig
from .errors import InvalidSpec, OptinfoError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _default_seed() -> int:
    env = os.environ.get("OPTINFO_SEED")
    try:
        return int(env) if env is not None else 0
    except ValueError:
        return 0


def _dump(doc: dict, output: str | None):
    text = json.dumps(doc, indent=2, sort_keys=True)
    if output:
        Path(output).write_text(text + "\n")
    else:
        print(text)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


def cmd_quadrature(args) -> int:
    if args.nodes is None and not args.optimize:
        raise UsageError("either --nodes or --optimize is required")
    if args.nodes is not None and args.optimize:
        raise UsageError("--nodes and --optimize are mutually exclusive")
    if args.optimize:
        if args.n is None:
            raise UsageError("--optimize requires --n")
        design = quadrature.optimize_design(args.n, optimizer="closed-form")
    else:
        design = quadrature.QuadratureDesign(args.nodes)
    mc = None
    if args.mc:
        cfg = MonteCarloConfig(seed=args.seed, n_outer=args.n_outer, n_inner=args.n_inner)
        mc = quadrature.bpn_monte_carlo(design, cfg)
    report = quadrature.design_report(design, mc=mc)
    report["seed"] = args.seed
    _dump(report, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# pde-design
# ---------------------------------------------------------------------------


def _p_label(p: float) -> str:
    return "inf" if p == np.inf else f"{p:g}"


def cmd_pde_design(args) -> int:
    p = np.inf if args.p == "inf" else float(args.p)
    if p not in (2.0, np.inf):
        raise UsageError("--p must be 2 or inf")
    problem = pde.EllipticDesignProblem(
        eval_grid=args.eval_grid,
        candidate_grid=args.candidate_grid,
        n_boundary=args.n_boundary,
        p=p,
    )
    cfg = MonteCarloConfig(seed=args.seed, n_outer=args.samples)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    state, contours, trace = pde.greedy_design(problem, args.m, cfg, threads=args.threads)
    cands = problem.candidates
    label = _p_label(p)
    for k, grid in enumerate(contours, start=1):
        lines = ["x,y,bpn"]
        flat = grid.ravel()
        for (x, y), v in zip(cands, flat):
            lines.append(f"{x!r},{y!r},{v!r}")
        (outdir / f"step_{k}_p{label}.csv").write_text("\n".join(lines) + "\n")
    summary = {
        "points": [list(map(float, pt)) for pt in state.points],
        "bpn_trace": trace,
        "config": {
            "m": args.m,
            "p": label,
            "eval_grid": args.eval_grid,
            "candidate_grid": args.candidate_grid,
            "n_boundary": args.n_boundary,
            "samples": args.samples,
        },
        "seed": args.seed,
    }
    _dump(summary, str(outdir / "design.json"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# discrete
# ---------------------------------------------------------------------------


def cmd_discrete(args) -> int:
    if (args.problem is None) == (args.counterexample is None):
        raise UsageError("exactly one of --problem or --counterexample is required")
    if args.counterexample is not None:
        p1, p2, p3 = args.counterexample
        problem = discrete.build_counterexample(discrete.CounterexampleSpec(p1, p2, p3))
    else:
        problem = discrete.load_problem(args.problem)
    reports = discrete.criteria_report(problem)
    doc = {name: rep.to_json_dict() for name, rep in reports.items()}
    _dump(doc, args.output)
    # Human-readable table on stderr.
    ids = problem.experiment_ids()
    header = "criterion".ljust(10) + "".join(str(e).rjust(14) for e in ids) + "  optimal"
    print(header, file=sys.stderr)
    for name, rep in doc.items():
        row = name.ljust(10)
        row += "".join(f"{rep['values'][str(e)]:14.6g}" for e in ids)
        row += "  {" + ", ".join(rep["optimal_set"]) + "}"
        print(row, file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# regression
# ---------------------------------------------------------------------------


def cmd_regression(args) -> int:
    with open(args.config) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidSpec(f"$: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    for key in ("prior_cov", "candidates"):
        if key not in doc:
            raise InvalidSpec(f"$.{key}: missing required key")
    prior_cov = np.asarray(doc["prior_cov"], dtype=float)
    d = prior_cov.shape[0]
    lam = np.asarray(doc.get("lambda", np.eye(d).tolist()), dtype=float)
    direction = None if "c" not in doc else np.asarray(doc["c"], dtype=float)
    which = ["A", "E", "D"] + (["c"] if direction is not None else [])

    from .gaussian import GaussianDensity, conjugate_posterior

    prior = GaussianDensity(np.zeros(d), prior_cov)
    values: dict = {w: {} for w in which}
    for cid, A in doc["candidates"].items():
        A = np.asarray(A, dtype=float)
        post = conjugate_posterior(prior, A, np.eye(A.shape[0]), np.zeros(A.shape[0]))
        for w in which:
            values[w][cid] = criteria.alphabet(post.cov, lam, w, direction=direction)
    out = {
        w: criteria.make_report(f"{w}-optimality", vals).to_json_dict()
        for w, vals in values.items()
    }
    _dump(out, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optinfo",
        description="Optimality criteria for probabilistic numerical methods",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    seed = _default_seed()

    q = sub.add_parser("quadrature", help="node-placement case study")
    q.add_argument("--n", type=int, default=None, help="number of intervals")
    q.add_argument("--nodes", type=float, nargs="+", default=None,
                   help="explicit interior nodes in [0, 1]")
    q.add_argument("--optimize", action="store_true", help="use the optimal equispaced nodes")
    q.add_argument("--mc", action="store_true", help="add a Monte Carlo criterion estimate")
    q.add_argument("--seed", type=int, default=seed)
    q.add_argument("--n-outer", type=int, default=20000)
    q.add_argument("--n-inner", type=int, default=4)
    q.add_argument("--output", default=None, help="write the JSON report to this file")
    q.set_defaults(func=cmd_quadrature)

    g = sub.add_parser("pde-design", help="elliptic design search with contour export")
    g.add_argument("--m", type=int, required=True, help="number of interior points")
    g.add_argument("--p", default="2", help="loss exponent: 2 or inf")
    g.add_argument("--eval-grid", type=int, default=32)
    g.add_argument("--candidate-grid", type=int, default=25)
    g.add_argument("--n-boundary", type=int, default=32)
    g.add_argument("--samples", type=int, default=128, help="pair samples per candidate (p=inf)")
    g.add_argument("--seed", type=int, default=seed)
    g.add_argument("--threads", type=int, default=1,
                   help="parallel candidate evaluation; never changes results")
    g.add_argument("--outdir", required=True)
    g.set_defaults(func=cmd_pde_design)

    d = sub.add_parser("discrete", help="finite-state criteria report")
    d.add_argument("--problem", default=None, help="problem description JSON file")
    d.add_argument("--counterexample", type=float, nargs=3, default=None,
                   metavar=("P1", "P2", "P3"),
                   help="built-in two-experiment counterexample with these cell probabilities")
    d.add_argument("--output", default=None)
    d.set_defaults(func=cmd_discrete)

    r = sub.add_parser("regression", help="alphabet-criteria comparison")
    r.add_argument("--config", required=True,
                   help="JSON with prior_cov, candidates {id: design matrix}, "
                        "optional lambda and c")
    r.add_argument("--output", default=None)
    r.set_defaults(func=cmd_regression)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, InvalidSpec, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OptinfoError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
