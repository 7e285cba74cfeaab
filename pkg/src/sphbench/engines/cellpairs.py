"""Cell-pair force engine: the traversal unit is the cell, with optional
pairwise symmetry, pack-of-4 lane batching, and four threading strategies.

Accumulation is double precision throughout; particle state stays float32.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..grid import CellGrid, CellIndex
from ..model import DerivedQuantities, ParticleSystem, SimParams, StepStats
from ..physics import pack_params
from .balance import initial_slice_bounds, merge_accumulators, rebalance_slices
from .config import (DERIVED_RECOMPUTED, NEIGHBOR_BYTES, THREADING_ASYMMETRIC,
                     THREADING_SINGLE, THREADING_SLICES, THREADING_SYMMETRIC,
                     EngineConfig, ForceOutput)
from .kernels import run_cells_asymmetric, run_cells_slices, run_cells_symmetric

_EMPTY_CELLS = np.empty(0, dtype=np.int64)


class CellPairsEngine:
    """Owns per-call worker threads; slice bounds persist across calls so the
    rebalancer can act on the previous step's measured times."""

    def __init__(self, config: EngineConfig):
        self.config = config.validated()
        if self.config.engine != "cellpairs":
            raise ValueError("CellPairsEngine requires a cellpairs config")
        self._slice_bounds = None

    @property
    def tag(self) -> str:
        return self.config.tag

    def compute(self, system: ParticleSystem, derived: DerivedQuantities,
                grid: CellGrid, cindex: CellIndex, params: SimParams,
                ranges=None) -> ForceOutput:
        cfg = self.config
        n = system.n
        if grid.cell_of.shape[0] != n:
            raise ValueError("grid/system length mismatch")
        nb = system.count_boundary
        pp = pack_params(params, system.mass_fluid, system.mass_boundary)
        dmode = 1 if cfg.derived_mode == DERIVED_RECOMPUTED else 0
        nx, ny, nz = (int(d) for d in grid.dims)
        reach = params.n_subdiv

        acc = np.zeros((n, 3))
        drho = np.zeros(n)
        viscdt = np.zeros(n)
        args_tail = (cfg.lane_batch, dmode, nb, system.pos, system.vel,
                     system.rho, derived.press, derived.prrho, derived.csound,
                     derived.tensil, pp)

        per_slice = []
        if cfg.threading == THREADING_SINGLE:
            cells = np.arange(grid.ncells, dtype=np.int64)
            kern = run_cells_symmetric if cfg.symmetry else run_cells_asymmetric
            raw = np.array(kern(cells, nx, ny, nz, reach,
                                cindex.fluid.begin, cindex.fluid.end,
                                cindex.boundary.begin, cindex.boundary.end,
                                *args_tail, acc, drho, viscdt), dtype=np.int64)
            counters = self._normalize(raw, symmetric=cfg.symmetry)
        elif cfg.threading == THREADING_ASYMMETRIC:
            counters = self._run_asymmetric(grid, cindex, args_tail, nx, ny, nz,
                                            reach, acc, drho, viscdt)
        elif cfg.threading == THREADING_SYMMETRIC:
            counters, acc, drho, viscdt = self._run_symmetric(
                grid, cindex, args_tail, nx, ny, nz, reach, n)
        elif cfg.threading == THREADING_SLICES:
            counters, per_slice = self._run_slices(grid, cindex, args_tail,
                                                   nx, ny, nz, reach,
                                                   acc, drho, viscdt)
        else:  # pragma: no cover - validated() excludes this
            raise ValueError(cfg.threading)

        stats = StepStats(candidate_pairs=int(counters[0]),
                          true_pairs=int(counters[1]),
                          force_evals=int(counters[2]),
                          ff_force_evals=int(counters[3]),
                          engine_tag=self.tag,
                          per_slice_seconds=per_slice,
                          neighbor_bytes=NEIGHBOR_BYTES[cfg.derived_mode])
        return ForceOutput(accel=acc, drho_dt=drho, visc_dt=viscdt, stats=stats)

    @staticmethod
    def _normalize(raw: np.ndarray, symmetric: bool) -> np.ndarray:
        """Report unordered true-pair counts; one-sided traversals find each
        pair exactly twice."""
        out = raw.copy()
        if not symmetric:
            out[1] //= 2
        return out

    def _warm(self, kern, cindex, args_tail, nx, ny, nz, reach, outs):
        # First call compiles under the GIL; do it once before spawning workers.
        kern(_EMPTY_CELLS, nx, ny, nz, reach,
             cindex.fluid.begin, cindex.fluid.end,
             cindex.boundary.begin, cindex.boundary.end, *args_tail, *outs)

    def _run_asymmetric(self, grid, cindex, args_tail, nx, ny, nz, reach,
                        acc, drho, viscdt):
        """Dynamic scheduling: worker threads pull blocks of cells from a
        shared queue as they run out of work.  Each cell's outputs are written
        only by whichever worker processes it, so the result does not depend
        on the schedule."""
        cfg = self.config
        ncells = grid.ncells
        cells = np.arange(ncells, dtype=np.int64)
        block = cfg.block_of_cells
        nblocks = -(-ncells // block)
        self._warm(run_cells_asymmetric, cindex, args_tail, nx, ny, nz, reach,
                   (acc, drho, viscdt))

        lock = threading.Lock()
        next_block = [0]

        def worker():
            local = np.zeros(4, dtype=np.int64)
            while True:
                with lock:
                    b = next_block[0]
                    next_block[0] += 1
                if b >= nblocks:
                    return local
                sub = cells[b * block:(b + 1) * block]
                raw = run_cells_asymmetric(sub, nx, ny, nz, reach,
                                           cindex.fluid.begin, cindex.fluid.end,
                                           cindex.boundary.begin, cindex.boundary.end,
                                           *args_tail, acc, drho, viscdt)
                local += np.array(raw, dtype=np.int64)

        with ThreadPoolExecutor(max_workers=cfg.thread_count) as pool:
            totals = [f.result() for f in
                      [pool.submit(worker) for _ in range(cfg.thread_count)]]
        return self._normalize(sum(totals), symmetric=False)

    def _run_symmetric(self, grid, cindex, args_tail, nx, ny, nz, reach, n):
        """Private-accumulator threading: blocks of cells are assigned to
        threads in a fixed cyclic order, every thread scatters symmetrically
        into its own full-length buffers, and the buffers are merged in thread
        order afterward — bit-deterministic at a fixed thread count."""
        cfg = self.config
        ncells = grid.ncells
        cells = np.arange(ncells, dtype=np.int64)
        block = cfg.block_of_cells
        nblocks = -(-ncells // block)
        nthreads = cfg.thread_count

        thread_cells = []
        for t in range(nthreads):
            picks = [cells[b * block:(b + 1) * block]
                     for b in range(t, nblocks, nthreads)]
            thread_cells.append(np.concatenate(picks) if picks else _EMPTY_CELLS)

        priv = [(np.zeros((n, 3)), np.zeros(n), np.zeros(n)) for _ in range(nthreads)]
        self._warm(run_cells_symmetric, cindex, args_tail, nx, ny, nz, reach,
                   priv[0])

        def worker(t):
            a, d, v = priv[t]
            raw = run_cells_symmetric(thread_cells[t], nx, ny, nz, reach,
                                      cindex.fluid.begin, cindex.fluid.end,
                                      cindex.boundary.begin, cindex.boundary.end,
                                      *args_tail, a, d, v)
            return np.array(raw, dtype=np.int64)

        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            totals = list(pool.map(worker, range(nthreads)))

        acc = merge_accumulators([p[0] for p in priv], workers=nthreads)
        drho = merge_accumulators([p[1] for p in priv], workers=nthreads)
        viscdt = priv[0][2].copy()
        for _, _, v in priv[1:]:
            np.maximum(viscdt, v, out=viscdt)
        return self._normalize(sum(totals), symmetric=True), acc, drho, viscdt

    def _run_slices(self, grid, cindex, args_tail, nx, ny, nz, reach,
                    acc, drho, viscdt):
        """X-slab threading: symmetry inside each slab, one-sided across slab
        boundaries, slab widths carried over from the previous step's
        rebalancing."""
        cfg = self.config
        nslices = cfg.thread_count
        if self._slice_bounds is None or len(self._slice_bounds) != nslices + 1 \
                or self._slice_bounds[-1] != nx:
            self._slice_bounds = initial_slice_bounds(nx, nslices)
        bounds = self._slice_bounds

        yz = (np.arange(ny * nz, dtype=np.int64) * nx)

        def slab_cells(x0, x1):
            xs = np.arange(x0, x1, dtype=np.int64)
            return (xs[None, :] + yz[:, None]).ravel()

        self._warm_slices(cindex, args_tail, nx, ny, nz, reach,
                          (acc, drho, viscdt))

        times = [0.0] * nslices
        raws = [None] * nslices

        def worker(s):
            x0, x1 = int(bounds[s]), int(bounds[s + 1])
            t0 = time.perf_counter()
            raw = run_cells_slices(slab_cells(x0, x1), x0, x1, nx, ny, nz, reach,
                                   cindex.fluid.begin, cindex.fluid.end,
                                   cindex.boundary.begin, cindex.boundary.end,
                                   *args_tail, acc, drho, viscdt)
            times[s] = time.perf_counter() - t0
            raws[s] = np.array(raw, dtype=np.int64)

        with ThreadPoolExecutor(max_workers=nslices) as pool:
            list(pool.map(worker, range(nslices)))

        total = sum(raws)
        sym, asym = total[:4], total[4:]
        counters = np.array([sym[0] + asym[0],
                             sym[1] + asym[1] // 2,
                             sym[2] + asym[2],
                             sym[3] + asym[3]], dtype=np.int64)
        # Feed the measured times forward so the next step's slabs even out.
        self._slice_bounds = rebalance_slices(bounds, np.maximum(times, 1e-9))
        return counters, list(times)

    def _warm_slices(self, cindex, args_tail, nx, ny, nz, reach, outs):
        run_cells_slices(_EMPTY_CELLS, 0, 0, nx, ny, nz, reach,
                         cindex.fluid.begin, cindex.fluid.end,
                         cindex.boundary.begin, cindex.boundary.end,
                         *args_tail, *outs)
