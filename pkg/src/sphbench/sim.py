"""Time integration and the step loop: cell rebuild, reorder, force pass,
variable time step via chunked min reductions, Verlet update with a periodic
single-step corrector, plus the dam-break scenario builder."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import physics
from .engines import EngineConfig, ForceOutput, make_engine
from .grid import (assign_cells, build_cell_index, build_dual_ranges, reorder)
from .model import (ParticleKind, ParticleSystem, SimParams, StepStats,
                    validate)

TINY_FORCE = 1e-30


class DivergenceError(RuntimeError):
    """A particle left the domain or the state went non-finite."""

    def __init__(self, message: str, step: int, particle_id: int | None = None):
        super().__init__(message)
        self.step = step
        self.particle_id = particle_id


@dataclass
class VerletState:
    """Previous-step velocity and density, permuted alongside the system."""

    vel_prev: np.ndarray   # (n, 3) float32
    rho_prev: np.ndarray   # (n,) float32
    step: int = 0
    corrector_stride: int = 40

    @classmethod
    def from_system(cls, system: ParticleSystem, stride: int) -> "VerletState":
        return cls(vel_prev=system.vel.copy(), rho_prev=system.rho.copy(),
                   corrector_stride=stride)


@dataclass
class Scenario:
    """Dam-break geometry: a water column inside an open-top tank.

    The fill box must be a strict subset of the tank.  `hydrostatic` seeds
    densities with the equilibrium profile of the resting column (boundary
    particles included) instead of uniform rho0.
    """

    tank_min: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tank_size: np.ndarray = field(default_factory=lambda: np.array([0.3, 0.2, 0.24]))
    fill_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    fill_size: np.ndarray = field(default_factory=lambda: np.array([0.1, 0.2, 0.15]))
    dp: float = 0.01
    hydrostatic: bool = True

    def __post_init__(self):
        self.tank_min = np.asarray(self.tank_min, dtype=np.float64)
        self.tank_size = np.asarray(self.tank_size, dtype=np.float64)
        self.fill_offset = np.asarray(self.fill_offset, dtype=np.float64)
        self.fill_size = np.asarray(self.fill_size, dtype=np.float64)

    @property
    def tank_max(self) -> np.ndarray:
        return self.tank_min + self.tank_size

    @property
    def fill_min(self) -> np.ndarray:
        return self.tank_min + self.fill_offset

    @property
    def fill_max(self) -> np.ndarray:
        return self.fill_min + self.fill_size

    @property
    def fill_height(self) -> float:
        return float(self.fill_size[2])

    def lattice_counts(self) -> np.ndarray:
        return np.maximum(np.round(self.fill_size / self.dp).astype(np.int64), 0)

    def wall_counts(self) -> np.ndarray:
        return np.maximum(np.round(self.tank_size / self.dp).astype(np.int64), 1)

    @property
    def fluid_count(self) -> int:
        return int(np.prod(self.lattice_counts()))

    @property
    def boundary_count(self) -> int:
        nx, ny, nz = (int(v) for v in self.wall_counts())
        floor = (nx + 1) * (ny + 1)
        walls = nz * (2 * (nx + ny))
        return floor + walls

    def validate(self) -> "Scenario":
        if self.dp <= 0:
            raise ValueError("dp must be positive")
        if np.any(self.dp > self.tank_size) or np.any(self.dp > self.fill_size):
            raise ValueError("dp larger than a box dimension")
        inside = np.all(self.fill_min >= self.tank_min) and \
            np.all(self.fill_max <= self.tank_max) and \
            float(np.prod(self.fill_size)) < float(np.prod(self.tank_size))
        if not inside:
            raise ValueError("fill box must lie strictly inside the tank")
        if self.fluid_count <= 0 or self.boundary_count <= 0:
            raise ValueError("scenario produces no particles")
        return self


def make_params(scenario: Scenario, hdp: float = 2.0, n_subdiv: int = 1,
                cfl: float = 0.3, alpha: float = 0.25, gamma: float = 7.0,
                rho0: float = 1000.0, c0: float | None = None,
                gravity: float = 9.81, **overrides) -> SimParams:
    """Parameters derived from a scenario.  c0 defaults to the
    weak-compressibility convention 10*sqrt(g*fill_height); pass c0 explicitly
    to pin a stiffer fluid."""
    h = hdp * scenario.dp
    if c0 is None:
        c0 = 10.0 * math.sqrt(gravity * scenario.fill_height)
    pad = 2.0 * 2.0 * h
    domain_min = scenario.tank_min - pad
    domain_max = scenario.tank_max + pad
    domain_max[2] += 2.0 * pad  # splash headroom
    params = SimParams(h=h, dp=scenario.dp, rho0=rho0, c0=c0, gamma=gamma,
                       alpha=alpha, g=np.array([0.0, 0.0, -gravity]), cfl=cfl,
                       domain_min=domain_min, domain_max=domain_max,
                       n_subdiv=n_subdiv, **overrides)
    return validate(params)


def build_dam_break(scenario: Scenario, params: SimParams) -> ParticleSystem:
    """Fluid on a cubic lattice filling the fill box; a single boundary layer
    tiling the tank floor and four walls at spacing dp.  Ordering is by
    lattice index, so rebuilding the scenario is deterministic."""
    scenario.validate()
    dp = scenario.dp
    fx, fy, fz = (int(v) for v in scenario.lattice_counts())
    ii, jj, kk = np.meshgrid(np.arange(fx), np.arange(fy), np.arange(fz),
                             indexing="ij")
    fluid_pos = np.stack([
        scenario.fill_min[0] + (ii.ravel() + 0.5) * dp,
        scenario.fill_min[1] + (jj.ravel() + 0.5) * dp,
        scenario.fill_min[2] + (kk.ravel() + 0.5) * dp,
    ], axis=1)

    nx, ny, nz = (int(v) for v in scenario.wall_counts())
    t0 = scenario.tank_min
    rows = []
    gi, gj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), indexing="ij")
    rows.append(np.stack([t0[0] + gi.ravel() * dp, t0[1] + gj.ravel() * dp,
                          np.full(gi.size, t0[2])], axis=1))
    for k in range(1, nz + 1):
        z = t0[2] + k * dp
        xs = np.arange(nx + 1) * dp + t0[0]
        ys = np.arange(1, ny) * dp + t0[1]
        rows.append(np.stack([xs, np.full(nx + 1, t0[1]), np.full(nx + 1, z)], axis=1))
        rows.append(np.stack([xs, np.full(nx + 1, t0[1] + ny * dp), np.full(nx + 1, z)], axis=1))
        rows.append(np.stack([np.full(ny - 1, t0[0]), ys, np.full(ny - 1, z)], axis=1))
        rows.append(np.stack([np.full(ny - 1, t0[0] + nx * dp), ys, np.full(ny - 1, z)], axis=1))
    bound_pos = np.concatenate(rows, axis=0)

    n_fluid = fluid_pos.shape[0]
    n_bound = bound_pos.shape[0]
    pos = np.concatenate([bound_pos, fluid_pos], axis=0).astype(np.float32)
    rho = np.full(n_bound + n_fluid, params.rho0, dtype=np.float64)
    if scenario.hydrostatic:
        surface = scenario.fill_max[2]
        depth = np.maximum(surface - pos[:, 2].astype(np.float64), 0.0)
        gmag = float(np.linalg.norm(params.g))
        rho = params.rho0 * (1.0 + params.rho0 * gmag * depth / params.tait_b
                             ) ** (1.0 / params.gamma)

    mass = params.rho0 * params.dp ** 3
    ptype = np.concatenate([
        np.full(n_bound, ParticleKind.BOUNDARY, dtype=np.uint8),
        np.full(n_fluid, ParticleKind.FLUID, dtype=np.uint8),
    ])
    system = ParticleSystem(
        count_fluid=n_fluid, count_boundary=n_bound,
        pos=pos, vel=np.zeros((n_bound + n_fluid, 3), dtype=np.float32),
        rho=rho.astype(np.float32), mass_fluid=mass, mass_boundary=mass,
        ptype=ptype, id=np.arange(n_bound + n_fluid, dtype=np.int64),
    )
    return system.validate()


# --------------------------------------------------------------------------
# Reductions and the variable time step.

def tree_min(values: np.ndarray, block: int = 4096) -> float:
    """Chunked tree reduction: repeatedly min-reduce fixed-size blocks until
    one block remains.  Matches np.min; the blocked structure is what a
    parallel reduction would execute."""
    a = np.asarray(values, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError("empty reduction")
    while a.size > block:
        nblocks = -(-a.size // block)
        padded = np.full(nblocks * block, np.inf)
        padded[:a.size] = a
        a = padded.reshape(nblocks, block).min(axis=1)
    return float(a.min())


def tree_max(values: np.ndarray, block: int = 4096) -> float:
    return -tree_min(-np.asarray(values, dtype=np.float64), block=block)


def compute_dt(forces: ForceOutput, system: ParticleSystem, derived,
               params: SimParams) -> float:
    """dt = cfl * min(dt_f, dt_cv), clamped to [dt_min, dt_max].

    dt_f = min over fluid of sqrt(h / |f|) with gravity included in f;
    dt_cv = min over all particles of h / (csound + max_neighbors |mu|).
    """
    fl = system.fluid
    f = forces.accel[fl] + params.g[None, :]
    fmag = np.sqrt((f * f).sum(axis=1))
    fmag = np.maximum(fmag, TINY_FORCE)
    dt_f = tree_min(np.sqrt(params.h / fmag)) if fmag.size else np.inf

    denom = derived.csound.astype(np.float64) + forces.visc_dt
    dt_cv = tree_min(params.h / denom)

    dt = params.cfl * min(dt_f, dt_cv)
    return float(min(max(dt, params.dt_min), params.dt_max))


def verlet_update(state: VerletState, system: ParticleSystem,
                  forces: ForceOutput, params: SimParams, dt: float) -> None:
    """Two-step Verlet with a periodic single-step corrector (also used to
    bootstrap step 0).  Fluid moves; boundary particles only update density."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    nb = system.count_boundary
    corrector = state.step % state.corrector_stride == 0

    vel_f = system.vel[nb:].astype(np.float64)
    a = forces.accel[nb:] + params.g[None, :]
    new_pos = system.pos[nb:].astype(np.float64) + dt * vel_f + 0.5 * dt * dt * a
    if corrector:
        new_vel = vel_f + dt * a
        new_rho = system.rho.astype(np.float64) + dt * forces.drho_dt
    else:
        new_vel = state.vel_prev[nb:].astype(np.float64) + 2.0 * dt * a
        new_rho = state.rho_prev.astype(np.float64) + 2.0 * dt * forces.drho_dt

    state.vel_prev = system.vel.copy()
    state.rho_prev = system.rho.copy()
    system.pos[nb:] = new_pos.astype(np.float32)
    system.vel[nb:] = new_vel.astype(np.float32)
    system.rho = new_rho.astype(np.float32)
    state.step += 1


# --------------------------------------------------------------------------
# The step loop.

class SnapshotSink:
    """Receives (step, system, derived) copies at the configured cadence."""

    def emit(self, step: int, system: ParticleSystem, derived) -> None:  # pragma: no cover
        raise NotImplementedError


def run_simulation(scenario_or_system, params: SimParams, config: EngineConfig,
                   max_steps: int | None = None, t_end: float | None = None,
                   snapshot_every: int = 0, snapshot_sink=None,
                   stats_sink=None):
    """NL -> PI -> SU loop.

    Returns (system, stats_list).  Aborts with DivergenceError on the first
    out-of-domain particle or non-finite state, reporting step and particle
    id.  Per-stage wall times are recorded on every StepStats.
    """
    if max_steps is None and t_end is None:
        raise ValueError("need max_steps or t_end")
    validate(params)
    cfg = config.validated()
    need_n = cfg.required_n_subdiv()
    if need_n is not None and params.n_subdiv != need_n:
        raise ValueError(f"config {cfg.tag} needs n_subdiv={need_n}")

    if isinstance(scenario_or_system, Scenario):
        system = build_dam_break(scenario_or_system, params)
    else:
        system = scenario_or_system
    state = VerletState.from_system(system, params.verlet_corrector_stride)
    engine = make_engine(cfg)
    use_ranges = cfg.engine == "gather" and cfg.gather_variant == "fastcellshalf"

    stats_out: list[StepStats] = []
    t_sim = 0.0
    step = 0
    while True:
        if max_steps is not None and step >= max_steps:
            break
        if t_end is not None and t_sim >= t_end:
            break
        t_step0 = time.perf_counter()

        # NL: cells, reorder, per-cell ranges.
        grid = assign_cells(system.pos, params)
        outside = grid.out_of_domain
        if outside.size:
            pid = int(system.id[outside[0]])
            raise DivergenceError(
                f"particle id {pid} left the domain at step {step}", step, pid)
        reorder(system, grid, extra_arrays=(state.vel_prev, state.rho_prev))
        cindex = build_cell_index(system, grid)
        ranges = build_dual_ranges(cindex, grid.dims, params.n_subdiv) \
            if use_ranges else None
        t_nl = time.perf_counter()

        # PI: EOS pass plus pairwise interactions.
        derived = physics.compute_derived(system.rho, params)
        forces = engine.compute(system, derived, grid, cindex, params,
                                ranges=ranges)
        t_pi = time.perf_counter()

        # SU: time step from reductions, then integration.
        if not np.isfinite(forces.accel).all() or not np.isfinite(forces.drho_dt).all():
            raise DivergenceError(f"non-finite forces at step {step}", step)
        dt = compute_dt(forces, system, derived, params)
        verlet_update(state, system, forces, params, dt)
        if not np.isfinite(system.rho).all() or not np.isfinite(system.vel).all():
            raise DivergenceError(f"non-finite state at step {step}", step)
        t_su = time.perf_counter()

        stats = forces.stats
        stats.step = step
        stats.dt = dt
        stats.stage_nl_s = t_nl - t_step0
        stats.stage_pi_s = t_pi - t_nl
        stats.stage_su_s = t_su - t_pi

        step += 1
        t_sim += dt
        if snapshot_every and step % snapshot_every == 0 and snapshot_sink is not None:
            snapshot_sink.emit(step, system.copy(),
                               physics.compute_derived(system.rho, params))
        stats.wall_seconds = time.perf_counter() - t_step0
        if stats_sink is not None:
            stats_sink(stats)
        stats_out.append(stats)
    return system, stats_out
