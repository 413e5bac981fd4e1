"""Command-line interface: hypothesis checking, single solves, and penalty
sweeps with limit problems, all driven by one JSON configuration.

Exit codes: 0 success, 1 numeric or hypothesis failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import report as rp
from .config import RunConfig, load_config
from .errors import ConfigError, MultibumpError
from .model import check_hypotheses
from .nehari import build_seed, compute_constants
from .operators import compute_spectral_data
from .solver import concentration_gap, minimize, mu_sweep, solve_limit_problems

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_USAGE = 2


def _prepare(cfg: RunConfig):
    """Shared pipeline: problem objects, spectral data, hypothesis report."""
    spec = cfg.build()
    spectral = compute_spectral_data(spec.A, spec.weights)
    hyp = check_hypotheses(spec, spectral)
    return spec, spectral, hyp


def _constants(cfg, spec, spectral):
    seed = build_seed(spec, tol_fiber=cfg.solver.tol_fiber)
    consts = compute_constants(spec, spectral, spec.energy(seed.u))
    return seed, consts


def cmd_check(args) -> int:
    try:
        cfg = load_config(args.config)
        spec, spectral, hyp = _prepare(cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except MultibumpError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    print("hypotheses:")
    for line in hyp.lines():
        print(line)
    for name, lam in spectral.eigenvalues.items():
        print(f"  eigenvalue[{name}] = {lam:.10g}")
    if hyp.all_passed:
        try:
            _, consts = _constants(cfg, spec, spectral)
            print("constants:")
            for name, value in consts.table():
                print(f"  {name:28s} = {value:.10g}")
        except MultibumpError as err:
            print(f"constants unavailable: {err}")
            return EXIT_NUMERIC
        return EXIT_OK
    print("hypothesis check failed")
    return EXIT_NUMERIC


def _emit_solution(out: Path, cfg: RunConfig, spec, report, stem: str = "") -> None:
    tag = f"_{stem}" if stem else ""
    if "csv" in cfg.formats:
        rp.write_solution_csv(out / f"solution{tag}.csv", spec.mesh, spec.weights,
                              report.u)
    if "json" in cfg.formats:
        rp.dump_json(out / f"report{tag}.json", rp.report_to_dict(report))
    if "png" in cfg.formats:
        rp.render_solution_figure(out / f"solution{tag}.png", spec.mesh,
                                  spec.weights, report.u,
                                  title=f"mu = {report.mu:g} ({report.status})")
        rp.render_trace_figure(out / f"trace{tag}.png", report)


def cmd_solve(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.out:
            cfg = replace(cfg, out_dir=args.out)
        if args.seed is not None:
            cfg = replace(cfg, rng_seed=args.seed)
        spec, spectral, hyp = _prepare(cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except MultibumpError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not hyp.all_passed:
        print("hypothesis check failed:", file=sys.stderr)
        for line in hyp.lines():
            print(line, file=sys.stderr)
        return EXIT_NUMERIC
    mu = args.mu if args.mu is not None else cfg.mu_values[-1]
    if mu < 0:
        print(f"usage error: mu must be nonnegative, got {mu}", file=sys.stderr)
        return EXIT_USAGE
    spec = spec.with_mu(mu)
    try:
        seed, consts = _constants(cfg, spec, spectral)
        report = minimize(spec, seed, cfg.solver, consts, rng=cfg.rng())
    except MultibumpError as err:
        rp.dump_json(out / "report.json",
                     rp.error_report(err, getattr(err, "trace", None)))
        print(f"solve failed: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit_solution(out, cfg, spec, report)
    print(f"mu = {mu:g}: {report.status}, energy = {report.energy:.10g}, "
          f"grad norm = {report.grad_norm:.3e}")
    print(f"artifacts in {out}/")
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.out:
            cfg = replace(cfg, out_dir=args.out)
        if args.seed is not None:
            cfg = replace(cfg, rng_seed=args.seed)
        if not args.limit_only and len(cfg.mu_values) < 2:
            print("usage error: sweep needs >= 2 mu values", file=sys.stderr)
            return EXIT_USAGE
        spec, spectral, hyp = _prepare(cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except MultibumpError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not hyp.all_passed:
        print("hypothesis check failed", file=sys.stderr)
        return EXIT_NUMERIC

    try:
        limit = solve_limit_problems(spec, cfg.solver, rng=cfg.rng())
    except MultibumpError as err:
        rp.dump_json(out / "limit.json", rp.error_report(err))
        print(f"limit problems failed: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    limit_doc = {
        "nodal": rp.report_to_dict(limit.report_nodal),
        "positive": rp.report_to_dict(limit.report_positive),
        "energy_sum": limit.energy_sum,
    }
    if "json" in cfg.formats:
        rp.dump_json(out / "limit.json", limit_doc)
    if "png" in cfg.formats:
        rp.render_limit_figure(out / "limit.png", spec.mesh, spec.weights, limit)
    if args.limit_only:
        print(f"limit energies: nodal = {limit.energy_nodal:.10g}, "
              f"positive = {limit.energy_positive:.10g}")
        return EXIT_OK

    seed, consts = _constants(cfg, spec, spectral)
    failure = None
    try:
        reports = mu_sweep(spec, cfg.mu_values, cfg.solver, consts,
                           rng=cfg.rng(), seed=seed)
    except MultibumpError as err:
        reports = getattr(err, "partial", [])
        failure = err
    for i, repod in enumerate(reports):
        _emit_solution(out, cfg, spec.with_mu(repod.mu), repod, stem=f"mu{i}")
    gap_table = concentration_gap(reports, limit, spec)
    sweep_doc = {
        "mu_values": cfg.mu_values,
        "limit_energy_sum": limit.energy_sum,
        "gap_table": gap_table,
    }
    if failure is not None:
        sweep_doc["failed_entry"] = {
            "mu_index": getattr(failure, "mu_index", None),
            "message": str(failure),
        }
    rp.dump_json(out / "sweep.json", sweep_doc)
    if "png" in cfg.formats and gap_table:
        rp.render_sweep_figure(out / "sweep.png", gap_table)
    for row in gap_table:
        print(f"mu = {row['mu']:g}: gap = {row['energy_gap']:.6g}, "
              f"off-support = {row['off_support_norm']:.6g}, "
              f"penalty = {row['penalty_residual']:.6g} [{row['status']}]")
    if failure is not None:
        print(f"sweep failed at entry {getattr(failure, 'mu_index', '?')}: {failure}",
              file=sys.stderr)
        return EXIT_NUMERIC
    print(f"artifacts in {out}/")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multibump",
        description="Multibump sign-changing solutions of indefinite "
                    "semilinear Dirichlet problems")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="verify hypotheses and print constants")
    p_check.add_argument("config", help="path to the JSON configuration")
    p_check.set_defaults(fn=cmd_check)

    p_solve = sub.add_parser("solve", help="minimize at one penalty strength")
    p_solve.add_argument("config")
    p_solve.add_argument("--mu", type=float, default=None,
                         help="override the penalty strength "
                              "(default: last entry of parameters.mu)")
    p_solve.add_argument("--out", default=None, help="output directory")
    p_solve.add_argument("--seed", type=int, default=None, help="RNG seed override")
    p_solve.set_defaults(fn=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="ascending penalty sweep plus "
                                           "limit problems and gap table")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--limit-only", action="store_true",
                         help="solve only the component limit problems")
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.set_defaults(fn=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, matching our convention
        return int(exc.code) if exc.code else EXIT_USAGE
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
