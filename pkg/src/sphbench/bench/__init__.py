"""Benchmark harness, occupancy model, memory estimator, snapshot tooling and
the CLI."""

from .harness import (BenchReport, BenchRow, EquivalenceError, run_benchmark,
                      standard_matrix)
from .memory import DEVICE_MEMORY, estimate_range_memory
from .occupancy import (DEVICE_TABLE, DeviceSpec, best_block_size, device,
                        occupancy)
from .snapshots import (Snapshot, compare_snapshots, read_snapshot, read_stats,
                        snapshot_of, stats_line, write_snapshot)

__all__ = [
    "BenchReport", "BenchRow", "EquivalenceError", "run_benchmark",
    "standard_matrix", "DEVICE_MEMORY", "estimate_range_memory",
    "DEVICE_TABLE", "DeviceSpec", "best_block_size", "device", "occupancy",
    "Snapshot", "compare_snapshots", "read_snapshot", "read_stats",
    "snapshot_of", "stats_line", "write_snapshot",
]
