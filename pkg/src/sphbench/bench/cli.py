"""Command-line interface: `run` (one simulation), `bench` (configuration
matrix), `occupancy` (analytic SM model), `mem` (neighbor-range memory).

Exit codes: 0 ok, 1 usage error, 2 physics divergence, 3 engine-equivalence
failure.  Flags can also be supplied through a key-value config file
(`--config FILE`, lines like `dp = 0.005`); explicit flags win.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .. import physics
from ..engines import EngineConfig
from ..model import SimParams
from ..sim import DivergenceError, Scenario, make_params, run_simulation
from . import figures
from .harness import EquivalenceError, run_benchmark, standard_matrix
from .memory import DEVICE_MEMORY, bytes_per_cell, estimate_range_memory
from .occupancy import DEVICE_TABLE, best_block_size, device, occupancy, occupancy_table
from .snapshots import snapshot_of, stats_line, write_snapshot

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIVERGENCE = 2
EXIT_EQUIVALENCE = 3

CELLS_TO_SUBDIV = {"h": 1, "h/2": 2}
DEFAULT_BASELINE = "cellpairs-off-l1-single"


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def load_config_file(path) -> dict:
    """Key-value text file mirroring flag names (dashes or underscores)."""
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"bad config line: {raw.strip()!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


def _add_scenario_flags(p):
    p.add_argument("--dp", type=float, default=0.01, help="particle spacing [m]")
    p.add_argument("--hdp", type=float, default=2.0, help="smoothing length / dp")
    p.add_argument("--c0", type=float, default=None,
                   help="sound speed [m/s]; default 10*sqrt(g*fill_height)")
    p.add_argument("--cfl", type=float, default=0.3)


def _add_engine_flags(p):
    p.add_argument("--engine", choices=["cellpairs", "gather"], default="cellpairs")
    p.add_argument("--symmetry", choices=["on", "off"], default="on")
    p.add_argument("--lanes", type=int, choices=[1, 4], default=1)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--threading",
                   choices=["single", "asymmetric", "symmetric", "slices"],
                   default="single")
    p.add_argument("--cells", choices=["h", "h/2"], default="h",
                   help="cell size for cell-pairs engines")
    p.add_argument("--gather-variant",
                   choices=["fastcellshalf", "slowcellshalf", "slowcellsh"],
                   default="fastcellshalf")
    p.add_argument("--derived", choices=["precomputed", "recomputed"],
                   default="precomputed")


def build_parser() -> _Parser:
    parser = _Parser(prog="sphbench",
                     description="Weakly-compressible SPH force-engine benchmark")
    parser.add_argument("--config", default=None,
                        help="key-value config file mirroring flag names")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one simulation")
    _add_scenario_flags(run_p)
    _add_engine_flags(run_p)
    run_p.add_argument("--steps", type=int, default=None)
    run_p.add_argument("--tend", type=float, default=None)
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--snap-every", type=int, default=0)
    run_p.add_argument("--verify", action="store_true",
                       help="also run the baseline engine and compare snapshots")

    bench_p = sub.add_parser("bench", help="run the configuration matrix")
    _add_scenario_flags(bench_p)
    bench_p.add_argument("--steps", type=int, default=10)
    bench_p.add_argument("--warmup", type=int, default=2)
    bench_p.add_argument("--threads", type=int, default=2)
    bench_p.add_argument("--baseline", default=DEFAULT_BASELINE)
    bench_p.add_argument("--out", default=None)
    bench_p.add_argument("--no-plots", action="store_true")

    occ_p = sub.add_parser("occupancy", help="analytic SM occupancy model")
    occ_p.add_argument("--registers", type=int, required=True)
    occ_p.add_argument("--block", type=int, default=None,
                       help="threads per block; omit to search for the best")
    occ_p.add_argument("--capability", choices=sorted(DEVICE_TABLE), default="1.3")
    occ_p.add_argument("--out", default=None)

    mem_p = sub.add_parser("mem", help="neighbor-range memory estimator")
    mem_p.add_argument("--ncells", type=int, required=True,
                       help="cell count of the coarse (cells=h) grid")
    mem_p.add_argument("--cells", choices=["h", "h/2"], default="h")
    mem_p.add_argument("--device", choices=sorted(DEVICE_MEMORY), default=None)
    mem_p.add_argument("--out", default=None)
    return parser


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        file_vals = load_config_file(args.config)
        # Flags given on the command line win; fill the rest from the file.
        given = {a.lstrip("-").split("=")[0].replace("-", "_")
                 for a in argv if a.startswith("--")}
        for key, val in file_vals.items():
            if key in given or not hasattr(args, key):
                continue
            current = getattr(args, key)
            if isinstance(current, bool):
                setattr(args, key, val.lower() in ("1", "true", "yes", "on"))
            else:
                setattr(args, key, _coerce(val))
    return args


def _coerce(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def engine_config_from(args) -> EngineConfig:
    return EngineConfig(
        engine=args.engine,
        symmetry=args.symmetry == "on",
        lane_batch=args.lanes,
        threading=args.threading,
        thread_count=args.threads,
        gather_variant=args.gather_variant,
        derived_mode=args.derived,
    ).validated()


def scenario_params_from(args, n_subdiv: int) -> tuple[Scenario, SimParams]:
    scenario = Scenario(dp=args.dp)
    params = make_params(scenario, hdp=args.hdp, n_subdiv=n_subdiv,
                         cfl=args.cfl, c0=args.c0)
    return scenario, params


class _DirSink:
    def __init__(self, out_dir):
        self.out_dir = out_dir
        figures.ensure_dir(out_dir)

    def emit(self, step, system, derived):
        path = os.path.join(self.out_dir, f"snapshot_{step:06d}.csv")
        write_snapshot(path, snapshot_of(system, derived))


def cmd_run(args) -> int:
    if args.steps is None and args.tend is None:
        raise UsageError("run needs --steps or --tend")
    config = engine_config_from(args)
    n_subdiv = config.required_n_subdiv() or CELLS_TO_SUBDIV[args.cells]
    scenario, params = scenario_params_from(args, n_subdiv)

    sink = _DirSink(args.out) if args.out else None
    stats_fh = open(os.path.join(args.out, "stats.jsonl"), "w") if args.out else None
    stats_sink = (lambda s: stats_fh.write(stats_line(s) + "\n")) if stats_fh else None
    try:
        system, stats = run_simulation(
            scenario, params, config, max_steps=args.steps, t_end=args.tend,
            snapshot_every=args.snap_every, snapshot_sink=sink,
            stats_sink=stats_sink)
    finally:
        if stats_fh:
            stats_fh.close()

    derived = physics.compute_derived(system.rho, params)
    if args.out:
        write_snapshot(os.path.join(args.out, "snapshot_final.csv"),
                       snapshot_of(system, derived))
    wall = sum(s.wall_seconds for s in stats)
    sps = len(stats) / wall if wall else float("inf")
    print(f"{config.tag}: {len(stats)} steps, {wall:.3f} s wall, "
          f"{sps:.2f} steps/s, c0={params.c0:.2f} m/s, h={params.h:.4g} m")

    if args.verify:
        base_cfg = EngineConfig(symmetry=False).validated()
        base_params = scenario_params_from(args, 1)[1]
        base_sys, _ = run_simulation(scenario, base_params, base_cfg,
                                     max_steps=len(stats))
        from .snapshots import compare_snapshots
        report = compare_snapshots(
            snapshot_of(base_sys, physics.compute_derived(base_sys.rho, base_params)),
            snapshot_of(system, derived))
        print(report)
        if not report.passed:
            raise EquivalenceError(base_cfg.tag, config.tag, report)
        print("verify: ok")
    return EXIT_OK


def cmd_bench(args) -> int:
    scenario, params = scenario_params_from(args, 1)
    configs = standard_matrix(threads=args.threads)
    report = run_benchmark(configs, scenario, params, steps=args.steps,
                           warmup=args.warmup, baseline_tag=args.baseline)
    print(report.format_table())
    if args.out:
        figures.ensure_dir(args.out)
        report.to_csv(os.path.join(args.out, "report.csv"))
        if not args.no_plots:
            figures.save_speedup_figure(report, os.path.join(args.out, "speedup.png"))
            figures.save_stage_figure(report.stats_by_tag,
                                      os.path.join(args.out, "stages.png"))
        print(f"report written to {args.out}")
    return EXIT_OK


def cmd_occupancy(args) -> int:
    dev = device(args.capability)
    if args.block is not None:
        occ = occupancy(args.registers, args.block, dev)
        print(f"capability {dev.capability}, {args.registers} registers, "
              f"{args.block} threads/block: occupancy {occ:.4f} ({occ:.0%})")
    else:
        block, occ = best_block_size(args.registers, dev)
        print(f"capability {dev.capability}, {args.registers} registers: "
              f"best block {block} threads, occupancy {occ:.4f} ({occ:.0%})")
    if args.out:
        figures.ensure_dir(args.out)
        rows = occupancy_table(range(16, 65), dev)
        csv_path = os.path.join(args.out, f"occupancy_{dev.capability.replace('.', '')}.csv")
        with open(csv_path, "w") as fh:
            fh.write("registers,occupancy_fixed256,best_block,occupancy_best\n")
            for r in rows:
                fh.write(f"{r['registers']},{r['occupancy_fixed']:.6f},"
                         f"{r['best_block']},{r['occupancy_best']:.6f}\n")
        figures.save_occupancy_figure(dev, os.path.join(
            args.out, f"occupancy_{dev.capability.replace('.', '')}.png"))
        print(f"occupancy table and figure written to {args.out}")
    return EXIT_OK


def cmd_mem(args) -> int:
    n_subdiv = CELLS_TO_SUBDIV[args.cells]
    total = estimate_range_memory(args.ncells, n_subdiv)
    cells = args.ncells * n_subdiv ** 3
    print(f"{cells} cells at {bytes_per_cell(n_subdiv)} bytes/cell: "
          f"{total} bytes ({total / 1024**2:.2f} MiB)")
    if args.device:
        dm = DEVICE_MEMORY[args.device]
        frac = total / dm.usable_bytes if dm.usable_bytes else float("inf")
        print(f"{dm.name}: {dm.total_bytes / 1024**3:.1f} GiB total, "
              f"~{dm.usable_bytes / 1024**3:.1f} GiB usable "
              f"({frac:.1%} of usable)")
    if args.out:
        figures.ensure_dir(args.out)
        csv_path = os.path.join(args.out, "memory.csv")
        with open(csv_path, "w") as fh:
            fh.write("base_cells,n_subdiv,bytes\n")
            for c in np.linspace(0, max(args.ncells, 1), 11).astype(int):
                for n in (1, 2):
                    fh.write(f"{c},{n},{estimate_range_memory(int(c), n)}\n")
        figures.save_memory_figure(os.path.join(args.out, "memory.png"),
                                   max_base_cells=max(args.ncells, 1),
                                   device_tag=args.device)
        print(f"memory table and figure written to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "bench":
            return cmd_bench(args)
        if args.command == "occupancy":
            return cmd_occupancy(args)
        if args.command == "mem":
            return cmd_mem(args)
        raise UsageError(f"unknown command {args.command!r}")
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"physics divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except EquivalenceError as exc:
        print(f"equivalence failure: {exc}", file=sys.stderr)
        return EXIT_EQUIVALENCE


if __name__ == "__main__":
    sys.exit(main())
