"""Figure rendering for the report paths; every figure lands next to the
delimited output it illustrates."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .memory import DEVICE_MEMORY, estimate_range_memory
from .occupancy import DeviceSpec, occupancy_table


def save_occupancy_figure(dev: DeviceSpec, out_png, fixed_block: int = 256,
                          registers=range(16, 65)) -> str:
    rows = occupancy_table(registers, dev, fixed_block=fixed_block)
    regs = [r["registers"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(regs, [100 * r["occupancy_fixed"] for r in rows],
            "--", label=f"{fixed_block} threads/block")
    ax.plot(regs, [100 * r["occupancy_best"] for r in rows],
            "-", label="best block size")
    ax.set_xlabel("registers per thread")
    ax.set_ylabel("occupancy [%]")
    ax.set_title(f"SM occupancy, capability {dev.capability}")
    ax.set_ylim(0, 105)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return str(out_png)


def save_memory_figure(out_png, max_base_cells: int = 2_000_000,
                       device_tag: str | None = None) -> str:
    cells = np.linspace(0, max_base_cells, 200).astype(np.int64)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for n, style in ((1, "-"), (2, "--")):
        label = "cell = cutoff" if n == 1 else "cell = cutoff/2"
        mb = [estimate_range_memory(int(c), n) / 1024 ** 2 for c in cells]
        ax.plot(cells, mb, style, label=label)
    if device_tag:
        dm = DEVICE_MEMORY[device_tag]
        ax.axhline(dm.usable_bytes / 1024 ** 2, color="k", lw=1,
                   label=f"{dm.name} usable")
    ax.set_xlabel("cells of the coarse grid")
    ax.set_ylabel("range-table memory [MiB]")
    ax.set_title("Neighbor-range memory")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return str(out_png)


def save_speedup_figure(report, out_png) -> str:
    tags = [r.tag for r in report.rows]
    speed = [r.speedup for r in report.rows]
    fig, ax = plt.subplots(figsize=(7.2, 0.5 * len(tags) + 2.0))
    ypos = np.arange(len(tags))
    ax.barh(ypos, speed, color=["#1f77b4" if t != report.baseline_tag else "#999999"
                                for t in tags])
    ax.set_yticks(ypos, tags, fontsize=8)
    ax.invert_yaxis()
    ax.axvline(1.0, color="k", lw=1)
    ax.set_xlabel(f"steps/s speedup vs {report.baseline_tag}")
    ax.grid(axis="x", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return str(out_png)


def save_stage_figure(stats_by_tag: dict, out_png) -> str:
    """Stacked per-step stage times (neighbor list, interaction, update,
    bookkeeping) for each configuration."""
    tags = list(stats_by_tag)
    nl, pi, su, bk = [], [], [], []
    for tag in tags:
        stats = stats_by_tag[tag]
        steps = max(len(stats), 1)
        t_nl = sum(s.stage_nl_s for s in stats) / steps
        t_pi = sum(s.stage_pi_s for s in stats) / steps
        t_su = sum(s.stage_su_s for s in stats) / steps
        t_total = sum(s.wall_seconds for s in stats) / steps
        nl.append(t_nl)
        pi.append(t_pi)
        su.append(t_su)
        bk.append(max(t_total - t_nl - t_pi - t_su, 0.0))
    fig, ax = plt.subplots(figsize=(7.2, 0.5 * len(tags) + 2.0))
    ypos = np.arange(len(tags))
    left = np.zeros(len(tags))
    for name, vals in (("neighbor list", nl), ("interaction", pi),
                       ("update", su), ("bookkeeping", bk)):
        ax.barh(ypos, vals, left=left, label=name)
        left += np.asarray(vals)
    ax.set_yticks(ypos, tags, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("seconds per step")
    ax.legend(fontsize=8)
    ax.grid(axis="x", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return str(out_png)


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return str(path)
