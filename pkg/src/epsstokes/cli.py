"""Command-line front end.

Subcommands: solve, sweep-eps, sweep-h, verify, export-vtk.  A JSON config
file may preset any flag; explicit flags override it.  Exit codes:
0 success, 1 acceptance-criterion failure, 2 config/input error,
3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import sparse
from .drivers import (Discretization, IncompatibleDataError, solve_es,
                      solve_pp, solve_stokes)
from .harness import (DEFAULT_EPS_GRID, DEFAULT_N, ConfigError, RunConfig,
                      export_vtk, problem_input, run_acceptance, run_sweep_eps,
                      run_sweep_h)
from .mesh import MeshError, build_structured_mesh
from .sparse import DEFAULT_TOL, SolverError
from . import verification as ver

EXIT_OK = 0
EXIT_CRITERION = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _parse_floats(text):
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _parse_ints(text):
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="epsstokes",
        description="Stokes / pressure-Poisson / coupled-parameter flow lab "
                    "on triangulated domains.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, need_eps=True):
        p.add_argument("--config", help="JSON file presetting any flag")
        p.add_argument("--case", help="manufactured case name (default ms1)")
        p.add_argument("--problem", help="S, PP, ES or all (default ES)")
        p.add_argument("--n", help="mesh subdivisions; list for sweep-h, e.g. 8,16,32")
        if need_eps:
            p.add_argument("--eps", help="comma-separated epsilon list")
        p.add_argument("--delta", type=float, help="trace-mismatch amplitude override")
        p.add_argument("--tol", type=float, help="solver relative-residual tolerance")
        p.add_argument("--out", help="output path (table, report or VTK file)")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"),
                       help="table format (default csv)")
        p.add_argument("--dump-matrix", dest="dump_matrix",
                       help="prefix for MatrixMarket dumps of each solved system")

    add_common(sub.add_parser("solve", help="run one problem and print a summary"))
    add_common(sub.add_parser("sweep-eps", help="epsilon sweep against fixed references"))
    add_common(sub.add_parser("sweep-h", help="mesh-refinement sweep with fitted rates"))
    add_common(sub.add_parser("verify", help="run the acceptance suite"))
    add_common(sub.add_parser("export-vtk", help="solve and write a VTK file"))
    return parser


def _make_config(args) -> RunConfig:
    settings = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_conf = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}")
        if not isinstance(file_conf, dict):
            raise ConfigError("config file must hold a JSON object")
        settings.update(file_conf)

    if args.case is not None:
        settings["case"] = args.case
    if args.problem is not None:
        settings["problem"] = args.problem
    if args.n is not None:
        settings["n"] = args.n
    if getattr(args, "eps", None) is not None:
        settings["eps"] = args.eps
    if args.delta is not None:
        settings["delta"] = args.delta
    if args.tol is not None:
        settings["tol"] = args.tol
    if args.out is not None:
        settings["out"] = args.out
    if args.fmt is not None:
        settings["format"] = args.fmt
    if args.dump_matrix is not None:
        settings["dump_matrix"] = args.dump_matrix

    n_raw = settings.get("n", DEFAULT_N)
    if isinstance(n_raw, str):
        n_values = _parse_ints(n_raw)
    elif isinstance(n_raw, (list, tuple)):
        n_values = tuple(int(v) for v in n_raw)
    else:
        n_values = (int(n_raw),)
    if not n_values:
        raise ConfigError("empty n list")

    eps_raw = settings.get("eps", DEFAULT_EPS_GRID)
    if isinstance(eps_raw, str):
        eps_values = _parse_floats(eps_raw)
    else:
        eps_values = tuple(float(v) for v in eps_raw)

    try:
        return RunConfig(
            case=settings.get("case", "ms1"),
            problem=settings.get("problem", "ES"),
            n=n_values[0],
            n_list=n_values,
            eps_list=eps_values,
            delta=settings.get("delta"),
            tol=float(settings.get("tol", DEFAULT_TOL)),
            out=settings.get("out"),
            fmt=settings.get("format", "csv"),
            dump_matrix=settings.get("dump_matrix"),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc))


def _solve_one(config: RunConfig):
    case = config.manufactured_case()
    mesh = build_structured_mesh(config.n)
    disc = Discretization(mesh)
    problems = ("S", "PP", "ES") if config.problem == "all" else (config.problem,)
    results = {}
    for prob in problems:
        if prob == "S":
            res = solve_stokes(problem_input(case, mesh), disc, config.tol)
        elif prob == "PP":
            res = solve_pp(problem_input(case, mesh), disc, config.tol)
        else:
            eps = config.eps_list[0] if config.eps_list else 1.0
            res = solve_es(problem_input(case, mesh, epsilon=eps), disc, config.tol)
        results[prob] = res
    return case, results


def _summary(case, results) -> dict:
    out = {}
    for prob, res in results.items():
        out[prob] = {
            "epsilon": res.epsilon,
            "rel_residual": res.report.rel_residual,
            "solver": res.report.method,
            "wall_time": res.report.wall_time,
            "err_u_H1_vs_exact": ver.error_h1(res.u, case.u_exact, case.grad_u_exact),
            "err_p_L2R_vs_exact": ver.quotient_norm_l2(res.p, case.p_exact),
            "div_u_L2": ver.div_l2(res.u),
        }
    return out


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _make_config(args)
        if config.dump_matrix:
            sparse.configure_debug_dump(config.dump_matrix)
        try:
            return _dispatch(args.command, config)
        finally:
            if config.dump_matrix:
                sparse.configure_debug_dump(None)
    except (ConfigError, IncompatibleDataError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def _print_table(table, config: RunConfig) -> None:
    if config.fmt == "json":
        print(json.dumps(table.to_json_obj(), indent=2))
    else:
        print(table.to_csv_text(), end="")


def _dispatch(command: str, config: RunConfig) -> int:
    if command == "solve":
        case, results = _solve_one(config)
        payload = json.dumps(_summary(case, results), indent=2)
        if config.out:
            with open(config.out, "w") as fh:
                fh.write(payload + "\n")
        print(payload)
        return EXIT_OK

    if command == "sweep-eps":
        table, _ = run_sweep_eps(config)
        if config.out is None:
            _print_table(table, config)
        return EXIT_OK

    if command == "sweep-h":
        if not config.n_list or len(config.n_list) < 1:
            raise ConfigError("sweep-h needs --n with one or more values")
        table, _ = run_sweep_h(config)
        if config.out is None:
            _print_table(table, config)
        return EXIT_OK

    if command == "verify":
        report = run_acceptance(config)
        for line in report.summary_lines():
            print(line)
        if config.out:
            with open(config.out, "w") as fh:
                json.dump(report.to_json_obj(), fh, indent=2)
                fh.write("\n")
        return EXIT_OK if report.all_passed else EXIT_CRITERION

    if command == "export-vtk":
        if not config.out:
            raise ConfigError("export-vtk needs --out for the VTK path")
        if config.problem == "all":
            raise ConfigError("export-vtk writes a single problem, not 'all'")
        _, results = _solve_one(config)
        export_vtk(next(iter(results.values())), config.out)
        return EXIT_OK

    raise ConfigError(f"unknown command {command!r}")


if __name__ == "__main__":
    sys.exit(main())
