"""Command line front end.

Every subcommand reads a config file, prints a JSON report on stdout and
optionally writes a CSV artifact.  Exit codes: 0 success, 2 validation
error, 3 solver nonconvergence.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import __version__
from .bundle import is_closed
from .chambers import (
    RADIUS_WARNING,
    Label,
    certified_radius,
    classify,
    sample_ball,
    sign_conditions,
    write_grid_csv,
)
from .cones import (
    candidate_dual_generators,
    dual_cone,
    interior_membership,
    partition_form,
    primitive,
    weight_cone,
)
from .config import ConfigError, parse_config
from .momentmap import (
    OrbitModel,
    SolverError,
    Status,
    degeneration_filtration,
    geometric_samples,
    kempf_ness_solve,
    limit_support_check,
    loglog_fit,
    moment_origin,
    solve_path,
    straight_path,
    write_path_csv,
)

FORMAT_VERSION = 1
EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3


def _eps(text: str, m: int) -> list[Fraction]:
    try:
        vals = [Fraction(s.strip()) for s in text.split(",")]
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed rational list {text!r}") from exc
    if len(vals) != m:
        raise ValueError(f"expected {m} coordinates, got {len(vals)}")
    return vals


def _set(s) -> str:
    return "{" + ",".join(str(i + 1) for i in sorted(s)) + "}"


def _edge(e) -> str:
    return f"{e[0] + 1},{e[1] + 1}"


def _chamber_json(chamber) -> dict:
    return {
        "label": chamber.label.value,
        "min_nu": None if chamber.min_nu is None else str(chamber.min_nu),
        "witnesses": [w.label() for w in chamber.witnesses],
        "nu": {s.label(): str(v) for s, v in chamber.values},
    }


def _solution_json(orbit, sol) -> dict:
    return {
        "status": sol.status.value,
        "reason": sol.reason,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "x": None if sol.x is None else [float(v) for v in sol.x],
        "t": None if sol.t is None else {_edge(e): v for e, v in zip(orbit.edges, sol.t)},
        "sum_t": sol.total,
    }


def cmd_classify(args, cfg, gb):
    eps = _eps(args.eps, gb.n_directions)
    chamber = classify(gb, eps)
    radius = certified_radius(gb, eps)
    results = _chamber_json(chamber)
    results["eps"] = [str(e) for e in eps]
    results["certified_l1_radius"] = None if radius is None else str(radius)
    return EXIT_OK, results, [RADIUS_WARNING]


def cmd_chambers(args, cfg, gb):
    if args.plane == "all":
        plane = "all"
    else:
        try:
            plane = tuple(int(s) - 1 for s in args.plane.split(","))
        except ValueError as exc:
            raise ValueError(f"malformed plane {args.plane!r}") from exc
    samples = sample_ball(gb, Fraction(args.radius), plane, args.grid, threads=args.threads)
    if args.out:
        write_grid_csv(samples, args.out)
    counts = {lab.value: 0 for lab in Label}
    for s in samples:
        if s.in_ball:
            counts[s.chamber.label.value] += 1
    results = {
        "radius": str(Fraction(args.radius)),
        "plane": args.plane,
        "points": len(samples),
        "in_ball_counts": counts,
        "sign_conditions": sign_conditions(gb),
        "csv": args.out,
    }
    return EXIT_OK, results, [RADIUS_WARNING]


def cmd_cone(args, cfg, gb):
    sigma = weight_cone(gb)
    results = {
        "weight_cone": {"rays": [list(r) for r in sigma.rays], "facets": [list(f) for f in sigma.facets]},
    }
    if args.dual or args.check_partition:
        dual = dual_cone(sigma, gb.ranks)
        results["dual_cone"] = {"rays": [list(r) for r in dual.rays], "facets": [list(f) for f in dual.facets]}
    if args.check_partition:
        candidates = {primitive(c.vector) for c in candidate_dual_generators(gb)}
        checks = []
        for ray in dual.rays:
            part = partition_form(ray, gb.ranks)
            checks.append(
                {
                    "ray": list(ray),
                    "two_valued": part is not None,
                    "plus": None if part is None else _set(part.plus),
                    "minus": None if part is None else _set(part.minus),
                    "plus_closed": None if part is None else is_closed(gb.edges, part.plus),
                    "is_candidate": tuple(ray) in candidates,
                }
            )
        results["partition_checks"] = checks
        results["candidates"] = [list(c) for c in sorted(candidates, reverse=True)]
    return EXIT_OK, results, []


def _orbit(cfg, gb):
    return OrbitModel.from_bundle(gb, cfg.edge_magnitudes() or None)


def cmd_solve(args, cfg, gb):
    eps = _eps(args.eps, gb.n_directions)
    orbit = _orbit(cfg, gb)
    w = moment_origin(gb, eps).w
    sol = kempf_ness_solve(orbit, w, tol=args.tol, max_iter=args.max_iter)
    results = {
        "eps": [str(e) for e in eps],
        "w": [str(v) for v in w],
        "membership": interior_membership(weight_cone(gb), [-v for v in w]).value,
        "label": classify(gb, eps).label.value,
    }
    results.update(_solution_json(orbit, sol))
    code = EXIT_NONCONVERGED if sol.status is Status.MAX_ITERATIONS else EXIT_OK
    return code, results, []


def cmd_path(args, cfg, gb):
    m = gb.n_directions
    a, b = _eps(args.eps_from, m), _eps(args.eps_to, m)
    if args.steps < 2:
        raise ValueError("--steps must be at least 2")
    if args.linear:
        samples = [Fraction(args.steps - k, args.steps) for k in range(args.steps)]
    else:
        samples = geometric_samples(Fraction(1), Fraction(args.ratio), args.steps)
    orbit = _orbit(cfg, gb)
    result = solve_path(gb, orbit, straight_path(a, b), samples, tol=args.tol, max_iter=args.max_iter)
    if args.out:
        write_path_csv(result, args.out)
    warnings = []
    statuses = [s.solution.status for s in result.samples]
    for s in result.samples:
        if s.chamber.label is not Label.STABLE:
            warnings.append(f"sample t={s.t!r} is {s.chamber.label.value}, not Stable")
    results = {
        "eps_from": [str(v) for v in a],
        "eps_to": [str(v) for v in b],
        "samples": len(samples),
        "statuses": {st.value: statuses.count(st) for st in Status},
        "final": _solution_json(orbit, result.samples[-1].solution),
        "csv": args.out,
    }
    solved = [s for s in result.samples if s.solution.status is Status.SOLVED and s.solution.total > 0]
    if len(solved) >= 2:
        exponent, const = loglog_fit([s.t for s in solved], [s.solution.total for s in solved])
        results["loglog_fit"] = {"exponent": exponent, "constant": const}
    if classify(gb, b).label is Label.STRICTLY_SEMISTABLE:
        report = degeneration_filtration(gb, b)
        verdict = limit_support_check(result, report)
        results["degeneration"] = _report_json(report)
        results["limit_support"] = {"confirmed": verdict.confirmed, "mismatches": list(verdict.mismatches)}
    code = EXIT_NONCONVERGED if Status.MAX_ITERATIONS in statuses else EXIT_OK
    return code, results, warnings


def _report_json(report) -> dict:
    return {
        "filtration": ["{}"] + [_set(s) for s in report.filtration],
        "surviving_edges": [_edge(e) for e in report.surviving_edges],
        "dying_edges": [_edge(e) for e in report.dying_edges],
        "limit_pieces": [
            {"indices": _set(s), "rank": r, "wall_slope": str(mu)} for s, r, mu in report.limit_pieces
        ],
        "ties": list(report.ties),
    }


def cmd_filtration(args, cfg, gb):
    eps = _eps(args.eps, gb.n_directions)
    report = degeneration_filtration(gb, eps)
    return EXIT_OK, _report_json(report), []


COMMANDS = {
    "classify": cmd_classify,
    "chambers": cmd_chambers,
    "cone": cmd_cone,
    "solve": cmd_solve,
    "path": cmd_path,
    "filtration": cmd_filtration,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wallcross",
        description="Stability chambers, weight cones and moment-map zeros near a semistable polarisation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="JSON bundle description")
        return p

    p = add("classify", "label one perturbed class")
    p.add_argument("--eps", required=True, help="comma separated rationals, e.g. 0,1/3 (use --eps=-1,0 for a leading minus)")

    p = add("chambers", "label a grid around omega")
    p.add_argument("--radius", default="1")
    p.add_argument("--plane", default="1,2", help="two 1-based directions, or 'all'")
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--out")
    p.add_argument("--threads", type=int, default=1)

    p = add("cone", "weight cone and its dual")
    p.add_argument("--dual", action="store_true")
    p.add_argument("--check-partition", action="store_true")

    p = add("solve", "zero of the moment map at one class")
    p.add_argument("--eps", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=200)

    p = add("path", "warm-started solves along a straight path")
    p.add_argument("--eps-from", required=True)
    p.add_argument("--eps-to", required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--geometric", action="store_true", help="t_k = ratio^k (default)")
    mode.add_argument("--linear", action="store_true", help="t_k = 1 - k/steps")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--ratio", default="1/10")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--out")

    p = add("filtration", "degeneration filtration at a wall")
    p.add_argument("--eps", required=True)
    return parser


def run(argv=None) -> tuple[int, dict]:
    args = build_parser().parse_args(argv)
    echo = {k: v for k, v in sorted(vars(args).items())}
    report = {"format_version": FORMAT_VERSION, "command": echo, "input_digest": None, "results": None, "warnings": []}
    try:
        cfg = parse_config(args.config)
        report["input_digest"] = cfg.digest()
        code, results, warnings = COMMANDS[args.command](args, cfg, cfg.to_bundle())
    except ConfigError as exc:
        report["errors"] = exc.errors
        return EXIT_INVALID, report
    except (ValueError, OSError) as exc:
        report["errors"] = [str(exc)]
        return EXIT_INVALID, report
    except SolverError as exc:
        report["errors"] = [str(exc)]
        return EXIT_NONCONVERGED, report
    report["results"] = results
    report["warnings"] = warnings
    return code, report


def main(argv=None) -> int:
    code, report = run(argv)
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
