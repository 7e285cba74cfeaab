"""Engine configuration and the common force-output record."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..model import StepStats

ENGINE_CELLPAIRS = "cellpairs"
ENGINE_GATHER = "gather"

THREADING_SINGLE = "single"
THREADING_ASYMMETRIC = "asymmetric"
THREADING_SYMMETRIC = "symmetric"
THREADING_SLICES = "slices"
THREADINGS = (THREADING_SINGLE, THREADING_ASYMMETRIC, THREADING_SYMMETRIC,
              THREADING_SLICES)

GATHER_FAST_HALF = "fastcellshalf"
GATHER_SLOW_HALF = "slowcellshalf"
GATHER_SLOW_H = "slowcellsh"
GATHER_VARIANTS = (GATHER_FAST_HALF, GATHER_SLOW_HALF, GATHER_SLOW_H)

DERIVED_PRECOMPUTED = "precomputed"
DERIVED_RECOMPUTED = "recomputed"

# Modeled bytes read per neighbor interaction: six separate arrays versus two
# packed ones with csound/prrho/tensil recomputed from press and rho.
NEIGHBOR_BYTES = {DERIVED_PRECOMPUTED: 40, DERIVED_RECOMPUTED: 32}


@dataclass(frozen=True)
class EngineConfig:
    engine: str = ENGINE_CELLPAIRS
    symmetry: bool = True
    lane_batch: int = 1
    threading: str = THREADING_SINGLE
    thread_count: int = 1
    gather_variant: str = GATHER_FAST_HALF
    block_of_cells: int = 10
    derived_mode: str = DERIVED_PRECOMPUTED

    def validated(self) -> "EngineConfig":
        """Check the configuration and normalize it (asymmetric threading
        forces symmetry off; gather never uses symmetry or lane batching)."""
        if self.engine not in (ENGINE_CELLPAIRS, ENGINE_GATHER):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.lane_batch not in (1, 4):
            raise ValueError("lane_batch must be 1 or 4")
        if self.threading not in THREADINGS:
            raise ValueError(f"unknown threading {self.threading!r}")
        if self.thread_count < 1:
            raise ValueError("thread_count must be at least 1")
        if self.block_of_cells < 1:
            raise ValueError("block_of_cells must be at least 1")
        if self.derived_mode not in (DERIVED_PRECOMPUTED, DERIVED_RECOMPUTED):
            raise ValueError(f"unknown derived_mode {self.derived_mode!r}")
        cfg = self
        if cfg.engine == ENGINE_GATHER:
            if cfg.symmetry:
                raise ValueError("gather engine cannot apply symmetry: "
                                 "per-particle work items may not scatter")
            if cfg.gather_variant not in GATHER_VARIANTS:
                raise ValueError(f"unknown gather variant {cfg.gather_variant!r}")
            return cfg
        if cfg.threading == THREADING_SYMMETRIC and not cfg.symmetry:
            raise ValueError("symmetric threading requires symmetry on")
        if cfg.threading == THREADING_ASYMMETRIC and cfg.symmetry:
            cfg = replace(cfg, symmetry=False)
        return cfg

    @property
    def tag(self) -> str:
        if self.engine == ENGINE_GATHER:
            tag = f"gather-{self.gather_variant}"
        else:
            sym = "on" if self.symmetry else "off"
            tag = f"cellpairs-{sym}-l{self.lane_batch}-{self.threading}"
        if self.threading != THREADING_SINGLE or self.engine == ENGINE_GATHER:
            tag += f"{self.thread_count}"
        if self.derived_mode == DERIVED_RECOMPUTED:
            tag += "-rc"
        return tag

    def required_n_subdiv(self):
        """Cell subdivision the engine needs, or None if any works."""
        if self.engine == ENGINE_GATHER:
            return 1 if self.gather_variant == GATHER_SLOW_H else 2
        return None


@dataclass
class ForceOutput:
    """Per-particle acceleration (gravity excluded; zero for boundary
    particles), density rate, the per-particle viscous time-step bound, and
    the instrumentation record."""

    accel: np.ndarray     # (n, 3) float64
    drho_dt: np.ndarray   # (n,) float64
    visc_dt: np.ndarray   # (n,) float64, max |mu_ab| over neighbors
    stats: StepStats
