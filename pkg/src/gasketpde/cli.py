"""Command-line interface.

Subcommands: ``gasket build`` (graph export), ``check-assumptions``,
``solve {min,ball,mpa,double}``, ``oracle``, ``sweep`` and ``report``.
Exit codes: 0 success, 1 validation error, 2 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import harness, solvers, storage
from .config import (
    ConfigError,
    config_hash,
    effective_dict,
    parse_config,
    realize,
    realize_field,
)
from .energy import build_form
from .geometry import ResourceLimitError, build_prefractal
from .problem import AssumptionGrid, ProblemValidationError, check_assumptions

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NOT_CONVERGED = 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gasketpde",
        description=(
            "Minimization and mountain-pass solves for semilinear Dirichlet "
            "problems on gasket prefractals"
        ),
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--verbose", action="store_true", help="chatty progress output"
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gasket", help="prefractal graph utilities")
    gsub = g.add_subparsers(dest="gasket_command", required=True)
    gb = gsub.add_parser(
        "build", parents=[common], help="build a prefractal graph and export JSON"
    )
    gb.add_argument("--n", type=int, required=True, help="number of simplex corners")
    gb.add_argument("--level", type=int, required=True, help="refinement level m")
    gb.add_argument("--out", type=Path, required=True, help="output JSON path")
    gb.add_argument(
        "--dump-stiffness",
        type=Path,
        default=None,
        help="also write the stiffness matrix as row/col/value triplets",
    )

    ca = sub.add_parser(
        "check-assumptions", parents=[common], help="grid-check the hypotheses"
    )
    ca.add_argument("--config", type=Path, required=True)
    ca.add_argument("--grid", type=int, default=401, help="sample points per axis")
    ca.add_argument("--vmax", type=float, default=4.0, help="half-width of the v grid")

    sv = sub.add_parser("solve", parents=[common], help="run a critical-point solver")
    sv.add_argument("kind", choices=("min", "ball", "mpa", "double"))
    sv.add_argument("--config", type=Path, required=True)
    sv.add_argument("--out", type=Path, required=True, help="run directory")
    sv.add_argument("--seed", type=int, default=None, help="override config seed")
    sv.add_argument("--r", type=float, default=None, help="ball/sphere radius")
    sv.add_argument(
        "--xstar",
        default=None,
        help="path endpoint: a solution file or 'auto' for a probe scan",
    )

    orc = sub.add_parser(
        "oracle", parents=[common], help="brute-force critical points (<= 4 DOFs)"
    )
    orc.add_argument("--config", type=Path, required=True)
    orc.add_argument("--out", type=Path, required=True)
    orc.add_argument("--box", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    orc.add_argument("--res", type=int, default=41, help="grid points per DOF")
    orc.add_argument("--seed", type=int, default=None)

    sw = sub.add_parser(
        "sweep", parents=[common], help="perturbation sweep and convergence table"
    )
    sw.add_argument("--config", type=Path, required=True)
    sw.add_argument("--out", type=Path, required=True)
    sw.add_argument("--schedule", default=None, choices=harness.SCHEDULES)
    sw.add_argument("--delta", type=float, default=None)
    sw.add_argument("--nmax", type=int, default=None)
    sw.add_argument("--solver", default=None, choices=harness.SOLVER_KINDS)
    sw.add_argument("--seed", type=int, default=None)
    sw.add_argument("--r", type=float, default=None)
    sw.add_argument(
        "--plot-data",
        action="store_true",
        help="write (n, distance, value-gap) columns ready for plotting",
    )

    rp = sub.add_parser(
        "report", parents=[common], help="collate a sweep directory into one CSV"
    )
    rp.add_argument("sweep_dir", type=Path)
    rp.add_argument("--out", type=Path, default=None, help="default: stdout")

    return p


def _load(config_path, seed_override=None):
    config = parse_config(config_path)
    if seed_override is not None:
        config.raw["seed"] = int(seed_override)
        config.seed = int(seed_override)
    graph, form, problem = realize(config)
    return config, graph, form, problem


def _write_run_metadata(out_dir: Path, config, graph):
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = effective_dict(config)
    payload["config_hash"] = config_hash(config)
    with open(out_dir / "effective_config.json", "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(out_dir / "graph_summary.json", "w") as fh:
        json.dump(
            {
                "n_maps": graph.n_maps,
                "level": graph.level,
                "n_vertices": graph.n_vertices,
                "n_edges": len(graph.edges),
                "n_cells": len(graph.cells),
            },
            fh,
            indent=1,
            sort_keys=True,
        )
        fh.write("\n")


def _cmd_gasket_build(args) -> int:
    graph = build_prefractal(args.n, args.level)
    storage.save_graph(graph, args.out)
    if args.dump_stiffness is not None:
        storage.dump_stiffness(build_form(graph), args.dump_stiffness)
    if args.verbose:
        print(
            f"level-{args.level} gasket on {args.n} corners: "
            f"{graph.n_vertices} vertices, {len(graph.edges)} edges, "
            f"{len(graph.cells)} cells -> {args.out}"
        )
    return EXIT_OK


def _cmd_check_assumptions(args) -> int:
    _, _, _, problem = _load(args.config)
    grid = AssumptionGrid(n_points=args.grid, v_max=args.vmax, n_u=args.grid)
    report = check_assumptions(problem, grid)
    print(json.dumps(report.to_dict(), indent=1, sort_keys=True))
    return EXIT_OK


def _resolve_x_star(args, config, graph, problem, r, opts):
    if args.xstar is None or args.xstar == "auto":
        probe = solvers.geometry_probe(problem, r, 64, seed=config.seed)
        if probe.x_star is None:
            raise ProblemValidationError(
                ["no far point with negative action found by the probe scan"]
            )
        return probe.x_star
    return storage.load_field(args.xstar, graph)


def _cmd_solve(args) -> int:
    config, graph, form, problem = _load(args.config, args.seed)
    opts = config.solver_options()
    if args.seed is not None:
        opts = replace(opts, seed=int(args.seed))
    r = args.r if args.r is not None else config.r
    out_dir = Path(args.out)
    _write_run_metadata(out_dir, config, graph)
    chash = config_hash(config)

    results = {}
    if args.kind == "min":
        results["minimizer"] = solvers.minimize(problem, opts)
    elif args.kind == "ball":
        results["minimizer"] = solvers.minimize_in_ball(problem, r, opts)
    elif args.kind == "mpa":
        x_star = _resolve_x_star(args, config, graph, problem, r, opts)
        results["mountain_pass"] = solvers.mountain_pass(problem, x_star, opts)
    else:
        x_star = None
        if args.xstar not in (None, "auto"):
            x_star = storage.load_field(args.xstar, graph)
        double = solvers.double_critical_points(problem, r, x_star, opts)
        results["minimizer"] = double.minimizer
        results["mountain_pass"] = double.saddle
        with open(out_dir / "geometry_report.json", "w") as fh:
            json.dump(
                {
                    "r": double.geometry.r,
                    "sphere_inf": double.geometry.sphere_inf,
                    "ball_inf": double.geometry.ball_inf,
                    "distinct": double.distinct,
                    "distance": double.distance,
                    "messages": double.messages,
                },
                fh,
                indent=1,
                sort_keys=True,
            )
            fh.write("\n")

    all_converged = True
    for name, res in sorted(results.items()):
        storage.save_solution(
            out_dir / f"solution_{name}.json", res, form, chash, config.seed
        )
        storage.save_trace(out_dir / f"trace_{name}.csv", res.trace)
        all_converged &= res.converged
        if args.verbose:
            print(
                f"{name}: J = {res.value:.12g}, |grad| = {res.dual_grad_norm:.3e}, "
                f"converged = {res.converged}"
            )
    return EXIT_OK if all_converged else EXIT_NOT_CONVERGED


def _cmd_oracle(args) -> int:
    config, graph, form, problem = _load(args.config, args.seed)
    opts = config.solver_options()
    results = solvers.brute_force_critical_points(
        problem, tuple(args.box), args.res, opts
    )
    out_dir = Path(args.out)
    _write_run_metadata(out_dir, config, graph)
    chash = config_hash(config)
    index = []
    for k, res in enumerate(results):
        path = out_dir / f"oracle_{k:03d}.json"
        storage.save_solution(path, res, form, chash, config.seed)
        index.append(
            {
                "file": path.name,
                "value": res.value,
                "dual_grad_norm": res.dual_grad_norm,
                "energy_norm": res.flags["energy_norm"],
            }
        )
    with open(out_dir / "oracle_index.json", "w") as fh:
        json.dump(
            {"box": list(args.box), "resolution": args.res, "roots": index},
            fh,
            indent=1,
            sort_keys=True,
        )
        fh.write("\n")
    if args.verbose:
        print(f"{len(results)} critical points -> {out_dir}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config, graph, form, problem = _load(args.config, args.seed)
    hconf = dict(config.harness)
    if args.schedule is not None:
        hconf["schedule"] = args.schedule
    if args.delta is not None:
        hconf["delta"] = args.delta
    if args.nmax is not None:
        hconf["n_max"] = args.nmax
    if args.solver is not None:
        hconf["solver"] = args.solver
    config.harness = hconf
    opts = config.solver_options()
    r = args.r if args.r is not None else config.r

    w = realize_field(hconf["w"], graph)
    schedule = harness.PerturbationSchedule(
        name=hconf["schedule"], delta=hconf["delta"], w=w
    )
    seq = harness.build_sequence(problem, schedule, int(hconf["n_max"]))
    table = harness.run_convergence_experiment(
        seq,
        hconf["solver"],
        opts,
        r=r,
        final_tol=float(hconf["final_tol"]),
        n_sample_fields=int(hconf["sample_fields"]),
        seed=config.seed,
    )

    out_dir = Path(args.out)
    _write_run_metadata(out_dir, config, graph)
    storage.write_csv(out_dir / "table.csv", table.CSV_HEADER, table.csv_rows())
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(table.summary(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    if args.plot_data:
        rows = [
            (
                row.n,
                row.distance_to_limit,
                abs(row.value_limit_functional - table.rows[0].value_limit_functional),
            )
            for row in table.rows[1:]
        ]
        storage.write_csv(
            out_dir / "plot_data.csv", ("n", "distance", "value_gap"), rows
        )
    if args.verbose:
        print(
            f"sweep {hconf['schedule']} delta={hconf['delta']} n_max={hconf['n_max']}: "
            f"final distance {table.final_distance:.3e} "
            f"({'ok' if table.final_ok else 'above tolerance'})"
        )
    return EXIT_OK if all(r.converged for r in table.rows) else EXIT_NOT_CONVERGED


def _cmd_report(args) -> int:
    sweep_dir = Path(args.sweep_dir)
    table_path = sweep_dir / "table.csv"
    summary_path = sweep_dir / "summary.json"
    if not table_path.exists():
        print(f"error: {table_path} not found", file=sys.stderr)
        return EXIT_VALIDATION
    lines = table_path.read_text().splitlines()
    if summary_path.exists():
        with open(summary_path) as fh:
            summary = json.load(fh)
        extra = ",".join(f"{k}={summary[k]}" for k in sorted(summary))
        lines.append(f"# {extra}")
    out = "\n".join(lines) + "\n"
    if args.out is None:
        sys.stdout.write(out)
    else:
        Path(args.out).write_text(out)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "gasket":
            return _cmd_gasket_build(args)
        if args.command == "check-assumptions":
            return _cmd_check_assumptions(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "report":
            return _cmd_report(args)
        raise AssertionError(f"unhandled command {args.command}")
    except (
        ConfigError,
        ProblemValidationError,
        ResourceLimitError,
        storage.AddressMismatchError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
