"""Shared domain types: particle state, simulation parameters, step instrumentation."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

# Particle arrays are single precision; force accumulators are double (each
# engine declares its accumulator precision in its docstring).
STATE_DTYPE = np.float32

# Memory layout of the two particle lists inside the shared arrays.
LAYOUT_BOUNDARY_FIRST = "boundary-first"


class ParticleKind(IntEnum):
    BOUNDARY = 0
    FLUID = 1


@dataclass
class ParticleSystem:
    """Structure-of-arrays particle state for one fluid plus one boundary list.

    Boundary particles occupy indices [0, count_boundary) and fluid particles
    [count_boundary, n); both blocks are kept cell-sorted independently so each
    behaves as its own list. `id` is a stable identifier so sorted snapshots
    remain comparable across engines.
    """

    count_fluid: int
    count_boundary: int
    pos: np.ndarray          # (n, 3) float32 [m]
    vel: np.ndarray          # (n, 3) float32 [m/s]
    rho: np.ndarray          # (n,) float32 [kg/m^3]
    mass_fluid: float        # [kg], uniform for the fluid list
    mass_boundary: float     # [kg], uniform for the boundary list
    ptype: np.ndarray        # (n,) uint8, ParticleKind values
    id: np.ndarray           # (n,) int64, stable identifiers
    layout: str = LAYOUT_BOUNDARY_FIRST

    @property
    def n(self) -> int:
        return self.count_fluid + self.count_boundary

    @property
    def fluid(self) -> slice:
        return slice(self.count_boundary, self.n)

    @property
    def boundary(self) -> slice:
        return slice(0, self.count_boundary)

    def validate(self) -> "ParticleSystem":
        n = self.n
        for name, arr, shape in [
            ("pos", self.pos, (n, 3)),
            ("vel", self.vel, (n, 3)),
            ("rho", self.rho, (n,)),
            ("ptype", self.ptype, (n,)),
            ("id", self.id, (n,)),
        ]:
            if arr.shape != shape:
                raise ValueError(f"{name} shape {arr.shape} != {shape}")
        if self.layout != LAYOUT_BOUNDARY_FIRST:
            raise ValueError(f"unknown layout {self.layout!r}")
        nb = self.count_boundary
        if not np.all(self.ptype[:nb] == ParticleKind.BOUNDARY):
            raise ValueError("boundary block contains non-boundary particles")
        if not np.all(self.ptype[nb:] == ParticleKind.FLUID):
            raise ValueError("fluid block contains non-fluid particles")
        if not np.all(self.rho > 0):
            raise ValueError("rho must be positive for every particle")
        if not np.isfinite(self.pos).all() or not np.isfinite(self.vel).all():
            raise ValueError("pos/vel contain NaN or Inf")
        if len(np.unique(self.id)) != n:
            raise ValueError("id array contains duplicates")
        return self

    def copy(self) -> "ParticleSystem":
        return copy.deepcopy(self)


@dataclass
class DerivedQuantities:
    """Per-particle quantities derived from density via the equation of state."""

    press: np.ndarray    # (n,) float32 [Pa]
    csound: np.ndarray   # (n,) float32 [m/s]
    prrho: np.ndarray    # (n,) float32, press/rho^2
    tensil: np.ndarray   # (n,) float32, per-particle tensile-correction factor

    def validate(self) -> "DerivedQuantities":
        if not np.all(self.csound > 0):
            raise ValueError("csound must be positive everywhere")
        return self


@dataclass
class SimParams:
    """Physical and numerical parameters shared by every module."""

    h: float                     # smoothing length [m]; kernel support is 2h
    dp: float                    # initial particle spacing [m]
    rho0: float                  # reference density [kg/m^3]
    c0: float                    # reference sound speed [m/s]
    gamma: float                 # EOS exponent
    alpha: float                 # artificial viscosity coefficient
    g: np.ndarray                # (3,) gravity [m/s^2]
    cfl: float                   # time-step safety factor
    domain_min: np.ndarray       # (3,) [m]
    domain_max: np.ndarray       # (3,) [m]
    n_subdiv: int = 1            # cells per support radius along one axis
    verlet_corrector_stride: int = 40
    dt_min: float = 1e-8
    dt_max: float = 1e-3

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=np.float64)
        self.domain_min = np.asarray(self.domain_min, dtype=np.float64)
        self.domain_max = np.asarray(self.domain_max, dtype=np.float64)

    @property
    def support_radius(self) -> float:
        """Interaction cutoff of the cubic-spline kernel."""
        return 2.0 * self.h

    @property
    def cell_size(self) -> float:
        """Cell side; the coarse setting (n_subdiv=1) matches the cutoff so a
        one-cell stencil covers every neighbor, n_subdiv=2 halves it."""
        return self.support_radius / self.n_subdiv

    @property
    def eta2(self) -> float:
        return 0.01 * self.h * self.h

    @property
    def tait_b(self) -> float:
        return self.c0 * self.c0 * self.rho0 / self.gamma


def validate(params: SimParams) -> SimParams:
    """Return `params` unchanged iff every invariant holds.

    Raises ValueError naming the first violated field.
    """
    if not params.h > 0:
        raise ValueError("h must be positive")
    if not params.dp > 0:
        raise ValueError("dp must be positive")
    if not params.n_subdiv >= 1:
        raise ValueError("n_subdiv must be at least 1")
    if not 0 < params.cfl < 1:
        raise ValueError("cfl in (0,1)")
    if not params.gamma >= 1:
        raise ValueError("gamma must be at least 1")
    if not params.alpha >= 0:
        raise ValueError("alpha must be nonnegative")
    if not params.rho0 > 0:
        raise ValueError("rho0 must be positive")
    if not params.c0 > 0:
        raise ValueError("c0 must be positive")
    if not np.all(params.domain_min < params.domain_max):
        raise ValueError("domain_min must be componentwise below domain_max")
    if not params.verlet_corrector_stride >= 1:
        raise ValueError("verlet_corrector_stride must be at least 1")
    if not 0 < params.dt_min <= params.dt_max:
        raise ValueError("dt bounds must satisfy 0 < dt_min <= dt_max")
    return params


@dataclass
class StepStats:
    """Instrumentation record for one force computation / time step.

    `true_pairs` counts unordered interacting pairs; `force_evals` counts pair
    evaluations actually performed (equal to true_pairs with symmetry, twice
    that without, in between for slice threading whose cross-slice pairs are
    evaluated from both sides). `neighbor_bytes` is the modeled per-neighbor
    read volume: 40 bytes when derived quantities are precomputed arrays,
    32 when recomputed from press and rho in the loop.
    """

    step: int = 0
    dt: float = 0.0
    candidate_pairs: int = 0
    true_pairs: int = 0
    force_evals: int = 0
    ff_force_evals: int = 0
    wall_seconds: float = 0.0
    engine_tag: str = ""
    stage_nl_s: float = 0.0
    stage_pi_s: float = 0.0
    stage_su_s: float = 0.0
    per_slice_seconds: list = field(default_factory=list)
    neighbor_bytes: int = 40

    @property
    def est_read_bytes(self) -> int:
        """Modeled neighbor-data traffic of the interaction pass."""
        return self.force_evals * self.neighbor_bytes

    def validate(self) -> "StepStats":
        if self.true_pairs > self.candidate_pairs:
            raise ValueError("true_pairs exceeds candidate_pairs")
        if not self.true_pairs <= self.force_evals <= 2 * self.true_pairs:
            raise ValueError("force_evals outside [true_pairs, 2*true_pairs]")
        return self
