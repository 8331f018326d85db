"""Command-line front end.

Subcommands: solve (run a config), convergence (grid-refinement study),
bench-tdu (cost-per-degree-of-freedom metric), tables (dump the basis
operators).  Exit codes: 0 success, 1 configuration error, 2 runtime
failure.
"""

import argparse
import os
import sys
import time

from . import convergence, output
from .basis import basis_tables
from .config import ConfigError, assemble, parse_config
from .kernels import throughput_per_dof


def _load_config(path):
    try:
        with open(path) as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError([f"cannot read config '{path}': {exc}"])
    cfg = parse_config(text)
    for message in cfg.warnings:
        print(f"warning: {message}", file=sys.stderr)
    return cfg


def _cmd_solve(args):
    cfg = _load_config(args.config)
    sim, tend = assemble(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)

    def on_step(s):
        if cfg.output_every > 0 and s.step_count % cfg.output_every == 0:
            output.write_snapshot(s, cfg.output_dir, cfg.output_prefix,
                                  cfg.output_format)

    if cfg.output_every > 0:
        output.write_snapshot(sim, cfg.output_dir, cfg.output_prefix,
                              cfg.output_format)
    sim.run(tend, on_step=on_step)
    diag = output.write_diagnostics(
        os.path.join(cfg.output_dir, "diagnostics.csv"),
        sim.history, sim.system.quantity_names)
    print(f"completed {sim.step_count} steps to t = {sim.t:.6g}; "
          f"diagnostics in {diag}")
    if sim.exact_solution is not None:
        norms = sim.error_norms()
        k = cfg.error_var
        print(f"errors for '{sim.system.quantity_names[k]}': "
              f"l1 = {norms['l1'][k]:.6e}, l2 = {norms['l2'][k]:.6e}, "
              f"linf = {norms['linf'][k]:.6e}")
    return 0


def _cmd_convergence(args):
    cfg = _load_config(args.config)
    degree = cfg.degree if cfg.degree is not None else 3

    def progress(row):
        note = f"l1 = {row['l1']:.4e}" if "l1" in row \
            else f"FAILED: {row['error']}"
        print(f"grid {row['grid']}: {note}", file=sys.stderr)

    rows = convergence.run_study(cfg, args.grids, progress=progress)
    os.makedirs(cfg.output_dir, exist_ok=True)
    path = os.path.join(cfg.output_dir, "convergence.csv")
    with open(path, "w") as handle:
        handle.write(convergence.report_csv(rows))
    print(convergence.report_text(rows, degree=degree), end="")
    print(f"report written to {path}")
    return 0 if any("error" not in row for row in rows) else 2


def _cmd_bench(args):
    cfg = _load_config(args.config)
    sim, _ = assemble(cfg)
    start = time.perf_counter()
    sim.run(float("inf"), max_steps=args.steps)
    wct = time.perf_counter() - start
    tdu = throughput_per_dof(wct, sim.mesh.n_elements, sim.step_count,
                             sim.tables.degree, sim.mesh.dim)
    print("wct_s,elements,steps,order,dim,tdu_us")
    print(",".join([output.fmt(wct), str(sim.mesh.n_elements),
                    str(sim.step_count), str(sim.tables.degree),
                    str(sim.mesh.dim), output.fmt(tdu)]))
    return 0


def _print_matrix(name, mat):
    print(f"{name} =")
    for row in mat:
        print("  " + ",".join(output.fmt(v) for v in row))


def _cmd_tables(args):
    t = basis_tables(args.order)
    print(f"degree = {t.degree}")
    print("nodes = " + ",".join(output.fmt(v) for v in t.nodes))
    print("weights = " + ",".join(output.fmt(v) for v in t.weights))
    print("left_vals = " + ",".join(output.fmt(v) for v in t.left_vals))
    print("right_vals = " + ",".join(output.fmt(v) for v in t.right_vals))
    _print_matrix("diff", t.diff)
    _print_matrix("sub_project", t.sub_project)
    _print_matrix("sub_recover", t.sub_recover)
    return 0


def _grid_list(text):
    try:
        grids = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got '{text}'")
    if not grids or any(n < 1 for n in grids):
        raise argparse.ArgumentTypeError("grids must be positive integers")
    return grids


def build_parser():
    parser = argparse.ArgumentParser(
        prog="aderdg",
        description="High-order one-step solver with subcell limiting.")
    sub = parser.add_subparsers(dest="command")

    p_solve = sub.add_parser("solve", help="run one configuration")
    p_solve.add_argument("--config", required=True)
    p_solve.set_defaults(func=_cmd_solve)

    p_conv = sub.add_parser("convergence", help="grid-refinement study")
    p_conv.add_argument("--config", required=True)
    p_conv.add_argument("--grids", required=True, type=_grid_list,
                        help="comma-separated cell counts, e.g. 25,50")
    p_conv.set_defaults(func=_cmd_convergence)

    p_bench = sub.add_parser("bench-tdu",
                             help="measure cost per degree of freedom")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--steps", type=int, default=10)
    p_bench.set_defaults(func=_cmd_bench)

    p_tables = sub.add_parser("tables", help="dump the basis operators")
    p_tables.add_argument("--order", type=int, required=True)
    p_tables.set_defaults(func=_cmd_tables)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except ConfigError as exc:
        for message in exc.errors:
            print(f"config error: {message}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
