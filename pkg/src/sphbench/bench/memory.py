"""Memory estimator for the precomputed neighbor-range tables.

A range is two 8-byte indices; a cell needs 9 ranges at the coarse subdivision
(144 bytes) and 25 at the halved cell size (400 bytes), where halving also
multiplies the cell count by 8.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..grid import ranges_per_cell

BYTES_PER_RANGE = 16


@dataclass(frozen=True)
class DeviceMemory:
    name: str
    total_bytes: int
    usable_bytes: int   # allocatable headroom observed in practice


DEVICE_MEMORY = {
    "gtx480": DeviceMemory("GTX 480", int(1.5 * 1024 ** 3), int(1.4 * 1024 ** 3)),
    "tesla1060": DeviceMemory("Tesla 1060", 4 * 1024 ** 3, 4 * 1024 ** 3),
}


def bytes_per_cell(n_subdiv: int) -> int:
    return ranges_per_cell(n_subdiv) * BYTES_PER_RANGE


def estimate_range_memory(ncells_base: int, n_subdiv: int) -> int:
    """Bytes needed for the range tables, given the cell count of the coarse
    (n_subdiv=1) grid over the same domain; halving cells at n_subdiv=2 means
    8x the cells at 400 bytes each."""
    if ncells_base < 0:
        raise ValueError("ncells must be nonnegative")
    cells = ncells_base * n_subdiv ** 3
    return cells * bytes_per_cell(n_subdiv)
