"""sphbench: a weakly-compressible SPH solver with interchangeable,
instrumented force engines, plus benchmark tooling (occupancy model, memory
estimator, snapshot comparison, CLI)."""

from .engines import EngineConfig, ForceOutput, make_engine
from .model import (DerivedQuantities, ParticleKind, ParticleSystem, SimParams,
                    StepStats, validate)
from .sim import Scenario, build_dam_break, make_params, run_simulation

__version__ = "0.1.0"

__all__ = [
    "EngineConfig", "ForceOutput", "make_engine",
    "DerivedQuantities", "ParticleKind", "ParticleSystem", "SimParams",
    "StepStats", "validate",
    "Scenario", "build_dam_break", "make_params", "run_simulation",
    "__version__",
]
