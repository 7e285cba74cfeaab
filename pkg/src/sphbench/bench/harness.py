"""Benchmark harness: run a matrix of engine configurations on the identical
initial state, report steps/second and speedups against a named baseline, and
refuse to report if the engines disagree on the physics."""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace

from .. import physics
from ..engines import EngineConfig
from ..model import SimParams
from ..sim import Scenario, run_simulation
from .snapshots import (CompareReport, Snapshot, compare_snapshots, snapshot_of)


class EquivalenceError(RuntimeError):
    """Engines disagreed beyond tolerance; carries the comparison report."""

    def __init__(self, tag_a: str, tag_b: str, report: CompareReport):
        worst = report.worst()
        super().__init__(
            f"{tag_a} vs {tag_b}: field {worst.field} diverges by rel "
            f"{worst.max_rel:.3e} at particle id {worst.worst_id}")
        self.report = report


@dataclass
class BenchRow:
    tag: str
    n_particles: int
    steps: int
    wall_seconds: float
    steps_per_second: float
    speedup: float
    candidate_pairs: int   # summed over the measured steps
    true_pairs: int
    force_evals: int
    est_read_bytes: int

    CSV_FIELDS = ("tag", "n_particles", "steps", "wall_seconds",
                  "steps_per_second", "speedup", "candidate_pairs",
                  "true_pairs", "force_evals", "est_read_bytes")


@dataclass
class BenchReport:
    rows: list
    baseline_tag: str
    stats_by_tag: dict = None   # per-config StepStats of the measured steps

    def row(self, tag: str) -> BenchRow:
        for r in self.rows:
            if r.tag == tag:
                return r
        raise KeyError(tag)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(BenchRow.CSV_FIELDS) + "\n")
            for r in self.rows:
                fh.write(",".join(str(getattr(r, f)) for f in BenchRow.CSV_FIELDS) + "\n")

    def format_table(self) -> str:
        head = (f"{'config':38s} {'N':>7s} {'steps':>6s} {'wall[s]':>9s} "
                f"{'steps/s':>9s} {'speedup':>8s} {'true pairs':>11s}")
        lines = [head, "-" * len(head)]
        for r in self.rows:
            mark = " *" if r.tag == self.baseline_tag else ""
            lines.append(f"{r.tag:38s} {r.n_particles:7d} {r.steps:6d} "
                         f"{r.wall_seconds:9.3f} {r.steps_per_second:9.2f} "
                         f"{r.speedup:8.2f} {r.true_pairs:11d}{mark}")
        lines.append(f"(* baseline: {self.baseline_tag})")
        return "\n".join(lines)


def standard_matrix(threads: int = 2) -> list[EngineConfig]:
    """Every optimization strategy: cell pairs across symmetry, lane batching
    and the threading strategies, plus the three gather variants."""
    configs = [
        EngineConfig(symmetry=False, lane_batch=1),
        EngineConfig(symmetry=True, lane_batch=1),
        EngineConfig(symmetry=False, lane_batch=4),
        EngineConfig(symmetry=True, lane_batch=4),
        EngineConfig(symmetry=False, lane_batch=4, threading="asymmetric",
                     thread_count=threads),
        EngineConfig(symmetry=True, lane_batch=4, threading="symmetric",
                     thread_count=threads),
        EngineConfig(symmetry=True, lane_batch=4, threading="slices",
                     thread_count=threads),
        EngineConfig(engine="gather", symmetry=False, gather_variant="slowcellsh",
                     thread_count=threads),
        EngineConfig(engine="gather", symmetry=False, gather_variant="slowcellshalf",
                     thread_count=threads),
        EngineConfig(engine="gather", symmetry=False, gather_variant="fastcellshalf",
                     thread_count=threads),
    ]
    return configs


def run_benchmark(configs, scenario: Scenario, params: SimParams, steps: int,
                  warmup: int, baseline_tag: str,
                  tolerances: dict | None = None) -> BenchReport:
    """Run every configuration on the identical initial state, discard warmup
    steps from the timing, and verify snapshot agreement against the baseline
    before reporting.  Configurations run sequentially so timings stay clean.
    """
    configs = [c.validated() for c in configs]
    tags = [c.tag for c in configs]
    if len(set(tags)) != len(tags):
        raise ValueError("duplicate configuration tags in the matrix")
    if baseline_tag not in tags:
        raise ValueError(f"baseline tag {baseline_tag!r} not in the matrix")

    scenario.validate()
    finals: dict[str, Snapshot] = {}
    stats_by_tag = {}
    rows = []
    for cfg in configs:
        prm = params
        need_n = cfg.required_n_subdiv()
        if need_n is not None and prm.n_subdiv != need_n:
            prm = dc_replace(params, n_subdiv=need_n)
        system, stats = run_simulation(scenario, prm, cfg,
                                       max_steps=warmup + steps)
        measured = stats[warmup:]
        stats_by_tag[cfg.tag] = measured
        wall = sum(s.wall_seconds for s in measured)
        sps = len(measured) / wall if wall > 0 else float("inf")
        finals[cfg.tag] = snapshot_of(system, physics.compute_derived(system.rho, prm))
        rows.append(BenchRow(
            tag=cfg.tag, n_particles=system.n, steps=len(measured),
            wall_seconds=wall, steps_per_second=sps, speedup=0.0,
            candidate_pairs=sum(s.candidate_pairs for s in measured),
            true_pairs=sum(s.true_pairs for s in measured),
            force_evals=sum(s.force_evals for s in measured),
            est_read_bytes=sum(s.est_read_bytes for s in measured),
        ))

    base_snap = finals[baseline_tag]
    for cfg in configs:
        if cfg.tag == baseline_tag:
            continue
        report = compare_snapshots(base_snap, finals[cfg.tag], tolerances)
        if not report.passed:
            raise EquivalenceError(baseline_tag, cfg.tag, report)

    apply_speedups(rows, baseline_tag)
    return BenchReport(rows=rows, baseline_tag=baseline_tag,
                       stats_by_tag=stats_by_tag)


def apply_speedups(rows, baseline_tag: str) -> None:
    """speedup = steps/s of the row over steps/s of the baseline; scale-free
    in the wall times."""
    base_sps = next(r for r in rows if r.tag == baseline_tag).steps_per_second
    for r in rows:
        r.speedup = r.steps_per_second / base_sps
