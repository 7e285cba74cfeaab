"""Analytic occupancy model for streaming multiprocessors.

Occupancy is the ratio of resident warps to the hardware maximum per SM; the
resident-block count is limited by the block cap, the register file, and the
thread cap.  Register allocation is modeled as the plain product
registers_per_thread * threads_per_block (no allocation granularity).
"""

from __future__ import annotations

from dataclasses import dataclass

WARP_SIZE = 32


@dataclass(frozen=True)
class DeviceSpec:
    capability: str
    max_threads_per_block: int
    max_blocks_per_sm: int
    max_warps_per_sm: int
    max_threads_per_sm: int
    registers_per_sm: int

    def validate(self) -> "DeviceSpec":
        for name in ("max_threads_per_block", "max_blocks_per_sm",
                     "max_warps_per_sm", "max_threads_per_sm",
                     "registers_per_sm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        return self


DEVICE_TABLE = {
    "1.0": DeviceSpec("1.0", 512, 8, 24, 768, 8 * 1024),
    "1.1": DeviceSpec("1.1", 512, 8, 24, 768, 8 * 1024),
    "1.2": DeviceSpec("1.2", 512, 8, 32, 1024, 16 * 1024),
    "1.3": DeviceSpec("1.3", 512, 8, 32, 1024, 16 * 1024),
    "2.x": DeviceSpec("2.x", 1024, 8, 48, 1536, 32 * 1024),
}


def device(capability: str) -> DeviceSpec:
    try:
        return DEVICE_TABLE[capability]
    except KeyError:
        raise ValueError(f"unknown compute capability {capability!r}") from None


def occupancy(registers_per_thread: int, threads_per_block: int,
              dev: DeviceSpec) -> float:
    """Fraction of the SM's warp capacity kept resident by this kernel shape.

    Zero when a single block's registers exceed the register file.
    """
    if registers_per_thread < 1:
        raise ValueError("registers_per_thread must be at least 1")
    if threads_per_block < WARP_SIZE or threads_per_block % WARP_SIZE != 0 \
            or threads_per_block > dev.max_threads_per_block:
        raise ValueError("invalid block size")
    blocks = min(dev.max_blocks_per_sm,
                 dev.registers_per_sm // (registers_per_thread * threads_per_block),
                 dev.max_threads_per_sm // threads_per_block)
    if blocks <= 0:
        return 0.0
    return blocks * (threads_per_block // WARP_SIZE) / dev.max_warps_per_sm


def best_block_size(registers_per_thread: int, dev: DeviceSpec) -> tuple[int, float]:
    """Block size maximizing occupancy, ties broken toward the smallest block.

    Returns (threads_per_block, occupancy); occupancy 0 when no block fits.
    """
    best = (WARP_SIZE, 0.0)
    for tpb in range(WARP_SIZE, dev.max_threads_per_block + 1, WARP_SIZE):
        occ = occupancy(registers_per_thread, tpb, dev)
        if occ > best[1]:
            best = (tpb, occ)
    return best


def occupancy_table(registers: range, dev: DeviceSpec,
                    fixed_block: int = 256) -> list[dict]:
    """Occupancy across register counts, for a fixed block and the best block."""
    rows = []
    for regs in registers:
        tpb, occ = best_block_size(regs, dev)
        rows.append({
            "registers": regs,
            "fixed_block": fixed_block,
            "occupancy_fixed": occupancy(regs, fixed_block, dev),
            "best_block": tpb,
            "occupancy_best": occ,
        })
    return rows
