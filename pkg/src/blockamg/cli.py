"""Command line entry point: ``blockamg {bench,solve,generate,info}``."""

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench, io
from .elasticity import generate_hex_elasticity, rigid_body_modes
from .errors import AmgError


def _grid(text):
    try:
        parts = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be NX,NY,NZ, got {text!r}") from None
    if len(parts) != 3 or min(parts) < 1:
        raise argparse.ArgumentTypeError(f"grid must be three positive integers, got {text!r}")
    return parts


def _solvers(text):
    names = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in names if s not in bench.ALL_SOLVERS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown solver(s) {bad}; choose from {','.join(bench.ALL_SOLVERS)}")
    return names


def _add_problem_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", help="MatrixMarket system matrix")
    src.add_argument("--grid", type=_grid, help="generate a unit-cube hex problem, e.g. 8,8,8")
    p.add_argument("--coords", help="node coordinates, 3 per line (needed by ns-* with --matrix)")
    p.add_argument("--rhs", default="ones", help="'ones', 'body-force' or a vector file (default: ones)")
    p.add_argument("--young", type=float, default=1.0)
    p.add_argument("--poisson", type=float, default=0.3)
    p.add_argument("--no-clamp", dest="clamp", action="store_false", help="leave the x=0 face free")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--eps-strong", type=float, default=0.08)
    p.add_argument("--omega", type=float, default=2.0 / 3.0)
    p.add_argument("--coarse-enough", type=int, default=3000)


def _config(args, solvers, repeat):
    return bench.BenchConfig(
        matrix=args.matrix, grid=args.grid, young=args.young, poisson=args.poisson, clamp=args.clamp,
        coords=args.coords, rhs=args.rhs, solvers=solvers, tol=args.tol, max_iterations=args.max_iters,
        eps_strong=args.eps_strong, omega=args.omega, coarse_enough=args.coarse_enough, repeat=repeat,
    )


def _emit(text, output):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_bench(args):
    config = _config(args, args.solvers, args.repeat)
    problem = bench.load_problem(config)
    rows = bench.run_benchmark(config, problem)
    _emit(bench.format_report(rows, args.format, bench.metadata(config, problem)), args.output)
    return 0 if all(r.converged for r in rows) else 1


def cmd_solve(args):
    config = _config(args, [args.solver], 1)
    problem = bench.load_problem(config)
    B = rigid_body_modes(problem.coords) if problem.coords is not None else None
    row, u = bench.solve_one(problem, args.solver, config, B)
    sys.stdout.write(bench.format_report([row], args.format, bench.metadata(config, problem)))
    if args.output and u is not None:
        io.write_vector(u, args.output)
    return 0 if row.converged else 1


def cmd_generate(args):
    nx, ny, nz = args.grid
    bundle = generate_hex_elasticity(nx, ny, nz, args.young, args.poisson, args.clamp)
    prefix = Path(args.output)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    io.write_matrix_market(bundle.A, f"{prefix}.mtx", comment=f"hex elasticity {nx}x{ny}x{nz}")
    io.write_coordinates(bundle.coords, f"{prefix}.coords")
    io.write_vector(bundle.rhs, f"{prefix}.rhs")
    print(f"wrote {prefix}.mtx ({bundle.A.nrows} unknowns, {bundle.A.nnz} nonzeros), {prefix}.coords, {prefix}.rhs")
    return 0


def cmd_info(args):
    A = io.read_matrix_market(args.matrix)
    report = bench.info(A)
    if args.format == "json":
        _emit(json.dumps(report, indent=2) + "\n", args.output)
    else:
        _emit("".join(f"{k}: {v}\n" for k, v in report.items()), args.output)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="blockamg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="run the six-solver comparison")
    _add_problem_args(p)
    p.add_argument("--solvers", type=_solvers, default=list(bench.ALL_SOLVERS))
    p.add_argument("--format", choices=("md", "csv", "json"), default="md")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("solve", help="solve with one pipeline")
    _add_problem_args(p)
    p.add_argument("--solver", choices=bench.ALL_SOLVERS, default="ns-block")
    p.add_argument("--format", choices=("md", "csv", "json"), default="md")
    p.add_argument("--output", help="write the solution vector here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("generate", help="write a generated elasticity problem")
    p.add_argument("--grid", type=_grid, required=True)
    p.add_argument("--young", type=float, default=1.0)
    p.add_argument("--poisson", type=float, default=0.3)
    p.add_argument("--no-clamp", dest="clamp", action="store_false")
    p.add_argument("--output", required=True, help="path prefix for .mtx, .coords and .rhs")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("info", help="report the structure of a matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--output")
    p.set_defaults(func=cmd_info)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (AmgError, OSError, ValueError) as exc:
        print(f"blockamg: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
