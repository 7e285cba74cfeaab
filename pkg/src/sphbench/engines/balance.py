"""Accumulator merging for private-buffer threading and the slice rebalancer."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

MERGE_CHUNK = 1 << 16


def merge_accumulators(accumulators, workers: int = 1, chunk: int = MERGE_CHUNK) -> np.ndarray:
    """Elementwise sum of per-thread accumulators, in thread-index order.

    The reduction is split over index chunks that may run on several workers;
    because every element is still summed in the same fixed order, the result
    is bit-deterministic for a given accumulator list.
    """
    accs = list(accumulators)
    if not accs:
        raise ValueError("no accumulators to merge")
    shape = accs[0].shape
    for a in accs:
        if a.shape != shape:
            raise ValueError("accumulator length mismatch")
    out = accs[0].copy()
    rest = accs[1:]
    if not rest:
        return out

    n = out.shape[0]

    def merge_span(lo, hi):
        for a in rest:
            out[lo:hi] += a[lo:hi]

    if workers <= 1 or n <= chunk:
        merge_span(0, n)
    else:
        spans = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda s: merge_span(*s), spans))
    return out


def initial_slice_bounds(ncells_x: int, nslices: int) -> np.ndarray:
    """Even partition of the X cell range into `nslices` slabs of whole cells."""
    if ncells_x < nslices:
        raise ValueError("fewer cells than slices")
    return np.round(np.linspace(0, ncells_x, nslices + 1)).astype(np.int64)


def rebalance_slices(bounds, times) -> np.ndarray:
    """Move slab boundaries toward equal per-slab time.

    Measured times are spread uniformly over each slab's cell columns, giving
    a piecewise-linear cumulative cost; new boundaries are placed at equal
    cost quantiles, rounded to whole cells, each slab kept at least one cell
    wide.  Slice count is preserved.
    """
    bounds = np.asarray(bounds, dtype=np.int64)
    times = np.asarray(times, dtype=np.float64)
    nslices = bounds.size - 1
    if times.size != nslices:
        raise ValueError("one time per slice required")
    if np.any(times <= 0):
        raise ValueError("slice times must be positive")
    ncells = int(bounds[-1] - bounds[0])
    if ncells < nslices:
        raise ValueError("fewer cells than slices")

    widths = np.diff(bounds).astype(np.float64)
    cum = np.concatenate(([0.0], np.cumsum(times)))
    total = cum[-1]

    new = bounds.copy()
    for k in range(1, nslices):
        target = total * k / nslices
        s = int(np.searchsorted(cum, target, side="right") - 1)
        s = min(s, nslices - 1)
        frac = (target - cum[s]) / times[s]
        new[k] = int(round(bounds[s] + frac * widths[s]))
    # Keep every slab at least one cell wide.
    for k in range(1, nslices):
        new[k] = max(new[k], new[k - 1] + 1)
    for k in range(nslices - 1, 0, -1):
        new[k] = min(new[k], new[k + 1] - 1)
    return new
