import numpy as np
import pytest

from sphbench import Scenario, build_dam_break, make_params
from sphbench.grid import (assign_cells, build_cell_index, build_dual_ranges,
                           reorder)
from sphbench.model import ParticleKind, ParticleSystem
from sphbench import physics


def make_frame(dp=0.02, n_subdiv=1, c0=None, scenario=None, hdp=2.0):
    """A reordered dam-break frame with everything an engine needs."""
    scenario = scenario or Scenario(dp=dp)
    params = make_params(scenario, hdp=hdp, n_subdiv=n_subdiv, c0=c0)
    system = build_dam_break(scenario, params)
    grid = assign_cells(system.pos, params)
    reorder(system, grid)
    cindex = build_cell_index(system, grid)
    derived = physics.compute_derived(system.rho, params)
    ranges = build_dual_ranges(cindex, grid.dims, n_subdiv) if n_subdiv == 2 else None
    return {"system": system, "params": params, "grid": grid,
            "cindex": cindex, "derived": derived, "ranges": ranges,
            "scenario": scenario}


def make_uniform_fluid(n, box=1.0, h=0.05, seed=7, vel_scale=0.1,
                       n_subdiv=1, rho0=1000.0, c0=20.0):
    """Fluid-only frame with uniform random positions, for counting and
    threading checks."""
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0.0, box, size=(n, 3)).astype(np.float32)
    vel = rng.normal(0.0, vel_scale, size=(n, 3)).astype(np.float32)
    rho = rng.uniform(0.98 * rho0, 1.02 * rho0, size=n).astype(np.float32)
    dp = h / 2.0
    system = ParticleSystem(
        count_fluid=n, count_boundary=0, pos=pos, vel=vel, rho=rho,
        mass_fluid=rho0 * dp ** 3, mass_boundary=rho0 * dp ** 3,
        ptype=np.full(n, ParticleKind.FLUID, dtype=np.uint8),
        id=np.arange(n, dtype=np.int64))
    params = make_params(Scenario(dp=dp), hdp=h / dp, n_subdiv=n_subdiv, c0=c0)
    # Domain box covering the particles exactly.
    from dataclasses import replace
    params = replace(params, domain_min=np.zeros(3) - 1e-6,
                     domain_max=np.full(3, box) + 1e-6)
    grid = assign_cells(system.pos, params)
    reorder(system, grid)
    cindex = build_cell_index(system, grid)
    derived = physics.compute_derived(system.rho, params)
    ranges = build_dual_ranges(cindex, grid.dims, n_subdiv) if n_subdiv == 2 else None
    return {"system": system, "params": params, "grid": grid,
            "cindex": cindex, "derived": derived, "ranges": ranges}


def strip_boundary(frame):
    """Fluid-only view of a frame: recomputes the grid structures with the
    boundary list removed (suppresses every fluid-boundary interaction)."""
    system = frame["system"]
    nb = system.count_boundary
    fluid = ParticleSystem(
        count_fluid=system.count_fluid, count_boundary=0,
        pos=system.pos[nb:].copy(), vel=system.vel[nb:].copy(),
        rho=system.rho[nb:].copy(), mass_fluid=system.mass_fluid,
        mass_boundary=system.mass_boundary,
        ptype=system.ptype[nb:].copy(), id=system.id[nb:].copy())
    params = frame["params"]
    grid = assign_cells(fluid.pos, params)
    reorder(fluid, grid)
    cindex = build_cell_index(fluid, grid)
    derived = physics.compute_derived(fluid.rho, params)
    n2 = params.n_subdiv == 2
    ranges = build_dual_ranges(cindex, grid.dims, 2) if n2 else None
    return {"system": fluid, "params": params, "grid": grid,
            "cindex": cindex, "derived": derived, "ranges": ranges}


@pytest.fixture(scope="session")
def frame_small():
    return make_frame(dp=0.02, n_subdiv=1)


@pytest.fixture(scope="session")
def frame_small_n2():
    return make_frame(dp=0.02, n_subdiv=2)
