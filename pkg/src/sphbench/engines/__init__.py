"""Interchangeable force-computation backends.

Every engine maps (system, derived, grid, cell index, params) to per-particle
acceleration and density-rate arrays plus counters; backends differ only in
traversal strategy, so any two must agree on the physics.
"""

from __future__ import annotations

from .balance import initial_slice_bounds, merge_accumulators, rebalance_slices
from .cellpairs import CellPairsEngine
from .config import (DERIVED_PRECOMPUTED, DERIVED_RECOMPUTED, ENGINE_CELLPAIRS,
                     ENGINE_GATHER, GATHER_FAST_HALF, GATHER_SLOW_H,
                     GATHER_SLOW_HALF, GATHER_VARIANTS, NEIGHBOR_BYTES,
                     THREADING_ASYMMETRIC, THREADING_SINGLE, THREADING_SLICES,
                     THREADING_SYMMETRIC, THREADINGS, EngineConfig, ForceOutput)
from .gather import GatherEngine

__all__ = [
    "EngineConfig", "ForceOutput", "CellPairsEngine", "GatherEngine",
    "make_engine", "compute_forces_cellpairs", "compute_forces_gather",
    "merge_accumulators", "rebalance_slices", "initial_slice_bounds",
    "ENGINE_CELLPAIRS", "ENGINE_GATHER", "THREADINGS", "THREADING_SINGLE",
    "THREADING_ASYMMETRIC", "THREADING_SYMMETRIC", "THREADING_SLICES",
    "GATHER_VARIANTS", "GATHER_FAST_HALF", "GATHER_SLOW_HALF", "GATHER_SLOW_H",
    "DERIVED_PRECOMPUTED", "DERIVED_RECOMPUTED", "NEIGHBOR_BYTES",
]


def make_engine(config: EngineConfig):
    cfg = config.validated()
    if cfg.engine == ENGINE_GATHER:
        return GatherEngine(cfg)
    return CellPairsEngine(cfg)


def compute_forces_cellpairs(system, derived, grid, cindex, params,
                             config: EngineConfig) -> ForceOutput:
    """One-shot cell-pairs force computation (slice bounds start even)."""
    return CellPairsEngine(config).compute(system, derived, grid, cindex, params)


def compute_forces_gather(system, derived, grid, cindex, ranges, params,
                          config: EngineConfig) -> ForceOutput:
    """One-shot gather force computation; `ranges` may be None for the
    cell-sweep variants."""
    return GatherEngine(config).compute(system, derived, grid, cindex, params,
                                        ranges=ranges)
