"""Spatial decomposition: cell assignment, cell-sorted reordering, per-cell
begin/end ranges, the forward half-stencil for symmetric traversal, and
precomputed interaction ranges for gather engines.

Cells are cubes of side support_radius/n_subdiv with linear index
x + nx*(y + ny*z) (X fastest, then Y, then Z); that ordering is what makes a
row of consecutive X cells one contiguous particle range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ParticleSystem, SimParams

OUT_OF_DOMAIN = -1


@dataclass
class CellGrid:
    cell_size: float
    dims: np.ndarray               # (3,) int64: cells per axis
    origin: np.ndarray             # (3,) float64: domain_min
    cell_of: np.ndarray            # (n,) int64 linear cell index, -1 outside
    sort_perm: np.ndarray | None = None   # new index -> old index, set by reorder

    @property
    def ncells(self) -> int:
        return int(self.dims[0] * self.dims[1] * self.dims[2])

    @property
    def out_of_domain(self) -> np.ndarray:
        return np.nonzero(self.cell_of == OUT_OF_DOMAIN)[0]


@dataclass
class CellBeginEnd:
    """Per-cell half-open [begin, end) particle ranges into sorted arrays."""

    begin: np.ndarray   # (ncells,) int64
    end: np.ndarray     # (ncells,) int64


@dataclass
class CellIndex:
    """Dual-list cell ranges: one CellBeginEnd per particle list, with global
    particle indices (boundary block first, then fluid block)."""

    fluid: CellBeginEnd
    boundary: CellBeginEnd


@dataclass
class InteractionRanges:
    """Per-cell contiguous particle ranges covering the candidate block:
    9 ranges for n_subdiv=1 (27 cells), 25 for n_subdiv=2 (125 cells).
    Out-of-grid rows contribute empty ranges."""

    begin: np.ndarray   # (ncells, nranges) int64
    end: np.ndarray     # (ncells, nranges) int64
    n_subdiv: int

    @property
    def nranges(self) -> int:
        return self.begin.shape[1]


def ranges_per_cell(n_subdiv: int) -> int:
    if n_subdiv not in (1, 2):
        raise ValueError("interaction ranges support n_subdiv in {1, 2} only")
    return (2 * n_subdiv + 1) ** 2


def assign_cells(positions: np.ndarray, params: SimParams) -> CellGrid:
    """Map every particle to its cell; out-of-domain particles are flagged
    with -1, never clamped.  Points exactly on the upper domain face belong to
    the last cell (half-open, lower-inclusive cells)."""
    cs = params.cell_size
    origin = params.domain_min
    extent = params.domain_max - origin
    dims = np.maximum(np.ceil(extent / cs - 1e-12).astype(np.int64), 1)

    p = positions.astype(np.float64)
    idx = np.floor((p - origin) / cs).astype(np.int64)
    # Upper-face ties (and float round-up at the last cell) fold into dims-1.
    idx = np.minimum(idx, dims - 1)
    inside = np.all((p >= origin) & (p <= params.domain_max), axis=1)
    linear = idx[:, 0] + dims[0] * (idx[:, 1] + dims[1] * idx[:, 2])
    cell_of = np.where(inside, linear, OUT_OF_DOMAIN)
    return CellGrid(cell_size=cs, dims=dims, origin=origin.copy(), cell_of=cell_of)


def reorder(system: ParticleSystem, grid: CellGrid,
            extra_arrays: tuple = ()) -> tuple[ParticleSystem, np.ndarray]:
    """Stable sort by cell index, separately for the boundary and fluid lists.

    Mutates the system arrays (and any extra per-particle arrays passed in,
    e.g. integrator history) in place, records the permutation on the grid,
    and returns (system, inverse_permutation) with inverse[old] = new.
    """
    if np.any(grid.cell_of == OUT_OF_DOMAIN):
        raise ValueError("cannot reorder with out-of-domain particles present")
    nb = system.count_boundary
    perm = np.empty(system.n, dtype=np.int64)
    perm[:nb] = np.argsort(grid.cell_of[:nb], kind="stable")
    perm[nb:] = nb + np.argsort(grid.cell_of[nb:], kind="stable")

    for name in ("pos", "vel", "rho", "ptype", "id"):
        setattr(system, name, getattr(system, name)[perm])
    for arr in extra_arrays:
        arr[:] = arr[perm]
    grid.cell_of = grid.cell_of[perm]
    grid.sort_perm = perm

    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(system.n)
    return system, inverse


def build_cell_begin_end(cell_of_sorted: np.ndarray, ncells: int) -> CellBeginEnd:
    """Half-open per-cell ranges from a nondecreasing cell-index array.

    Counting-based, so empty cells cost nothing extra; consecutive ranges are
    contiguous and partition [0, len(cell_of_sorted))."""
    cells = np.asarray(cell_of_sorted, dtype=np.int64)
    if cells.size and np.any(np.diff(cells) < 0):
        raise ValueError("cell_of must be nondecreasing")
    counts = np.bincount(cells, minlength=ncells) if cells.size else np.zeros(ncells, np.int64)
    end = np.cumsum(counts).astype(np.int64)
    begin = end - counts
    return CellBeginEnd(begin=begin, end=end)


def build_cell_index(system: ParticleSystem, grid: CellGrid) -> CellIndex:
    """Dual-list CellBeginEnd over the reordered system (global indices)."""
    nb = system.count_boundary
    bound = build_cell_begin_end(grid.cell_of[:nb], grid.ncells)
    fluid = build_cell_begin_end(grid.cell_of[nb:], grid.ncells)
    fluid.begin += nb
    fluid.end += nb
    return CellIndex(fluid=fluid, boundary=bound)


def forward_offsets(reach: int = 1) -> np.ndarray:
    """Lexicographically positive half of the (2*reach+1)^3 stencil: every
    unordered cell pair is visited exactly once when each cell scans these
    offsets, with the cell itself handled by ordered intra-cell pairs."""
    offs = []
    for dz in range(0, reach + 1):
        for dy in range(-reach if dz > 0 else 0, reach + 1):
            for dx in range(-reach if (dz > 0 or dy > 0) else 1, reach + 1):
                offs.append((dx, dy, dz))
    return np.array(offs, dtype=np.int64)


def forward_cells(coords, dims, reach: int = 1) -> np.ndarray:
    """Forward-neighbor cells of `coords`, clipped to the grid (at most 13 for
    reach 1); the cell itself additionally interacts with its own ordered
    intra-cell pairs."""
    cx, cy, cz = int(coords[0]), int(coords[1]), int(coords[2])
    offs = forward_offsets(reach)
    cells = offs + np.array([cx, cy, cz])
    ok = np.all((cells >= 0) & (cells < np.asarray(dims)), axis=1)
    return cells[ok]


def build_ranges(cbe: CellBeginEnd, dims, n_subdiv: int) -> InteractionRanges:
    """Precompute, for every cell, the (2n+1)^2 contiguous particle ranges
    that cover its candidate block: one range per (y, z) row, spanning the
    consecutive X cells, clipped to the grid."""
    nr = ranges_per_cell(n_subdiv)
    nx, ny, nz = int(dims[0]), int(dims[1]), int(dims[2])
    ncells = nx * ny * nz
    if cbe.begin.shape[0] != ncells:
        raise ValueError("cell ranges inconsistent with grid dims")
    n = n_subdiv

    cell = np.arange(ncells, dtype=np.int64)
    cz, rem = np.divmod(cell, nx * ny)
    cy, cx = np.divmod(rem, nx)
    xlo = np.maximum(cx - n, 0)
    xhi = np.minimum(cx + n, nx - 1)

    begin = np.zeros((ncells, nr), dtype=np.int64)
    end = np.zeros((ncells, nr), dtype=np.int64)
    k = 0
    for dz in range(-n, n + 1):
        zz = cz + dz
        for dy in range(-n, n + 1):
            yy = cy + dy
            ok = (zz >= 0) & (zz < nz) & (yy >= 0) & (yy < ny)
            row = xlo + nx * (yy + ny * zz)
            row_end = xhi + nx * (yy + ny * zz)
            begin[:, k] = np.where(ok, cbe.begin[np.where(ok, row, 0)], 0)
            end[:, k] = np.where(ok, cbe.end[np.where(ok, row_end, 0)], 0)
            k += 1
    return InteractionRanges(begin=begin, end=end, n_subdiv=n_subdiv)


@dataclass
class DualRanges:
    """Interaction ranges per particle list (same cells, two tables)."""

    fluid: InteractionRanges
    boundary: InteractionRanges


def build_dual_ranges(cindex: CellIndex, dims, n_subdiv: int) -> DualRanges:
    return DualRanges(fluid=build_ranges(cindex.fluid, dims, n_subdiv),
                      boundary=build_ranges(cindex.boundary, dims, n_subdiv))


def search_volume_ratio(n_subdiv: float) -> float:
    """Candidate-to-true volume ratio of a cell search at subdivision n:
    (2 + 1/n)^3 / (4/3 pi).  Tends to 6/pi as n grows."""
    return (2.0 + 1.0 / n_subdiv) ** 3 / (4.0 / 3.0 * math.pi)
