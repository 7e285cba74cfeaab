"""Snapshot CSV files, the stats JSON-lines stream, and snapshot comparison.

Snapshot format: a header line, then one row per particle
`id,type,x,y,z,vx,vy,vz,rho,press` in decimal text with enough digits to
round-trip float32 exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..model import DerivedQuantities, ParticleSystem, StepStats

SNAPSHOT_HEADER = "id,type,x,y,z,vx,vy,vz,rho,press"
STATS_KEYS = ("step", "dt", "wall_s", "candidate_pairs", "true_pairs",
              "force_evals", "stage_nl_s", "stage_pi_s", "stage_su_s")


@dataclass
class Snapshot:
    id: np.ndarray      # (n,) int64
    ptype: np.ndarray   # (n,) uint8
    pos: np.ndarray     # (n, 3) float32
    vel: np.ndarray     # (n, 3) float32
    rho: np.ndarray     # (n,) float32
    press: np.ndarray   # (n,) float32

    FIELDS = ("pos", "vel", "rho", "press")


def snapshot_of(system: ParticleSystem, derived: DerivedQuantities) -> Snapshot:
    return Snapshot(id=system.id.copy(), ptype=system.ptype.copy(),
                    pos=system.pos.copy(), vel=system.vel.copy(),
                    rho=system.rho.copy(), press=derived.press.copy())


def write_snapshot(path, snap: Snapshot) -> None:
    # %.9g round-trips any float32 value.
    with open(path, "w") as fh:
        fh.write(SNAPSHOT_HEADER + "\n")
        for k in range(snap.id.shape[0]):
            vals = (snap.pos[k, 0], snap.pos[k, 1], snap.pos[k, 2],
                    snap.vel[k, 0], snap.vel[k, 1], snap.vel[k, 2],
                    snap.rho[k], snap.press[k])
            fh.write(f"{snap.id[k]},{snap.ptype[k]},"
                     + ",".join("%.9g" % v for v in vals) + "\n")


def read_snapshot(path) -> Snapshot:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != SNAPSHOT_HEADER:
            raise ValueError(f"unexpected snapshot header {header!r}")
        rows = [line.split(",") for line in fh if line.strip()]
    ids = np.array([int(r[0]) for r in rows], dtype=np.int64)
    ptype = np.array([int(r[1]) for r in rows], dtype=np.uint8)
    data = np.array([[float(v) for v in r[2:]] for r in rows], dtype=np.float32)
    return Snapshot(id=ids, ptype=ptype, pos=data[:, 0:3], vel=data[:, 3:6],
                    rho=data[:, 6], press=data[:, 7])


@dataclass
class FieldDiff:
    field: str
    max_abs: float
    max_rel: float
    worst_id: int
    passed: bool


@dataclass
class CompareReport:
    fields: list
    passed: bool

    def worst(self) -> FieldDiff:
        return max(self.fields, key=lambda f: f.max_rel)

    def __str__(self) -> str:
        lines = [f"{f.field:6s} max_abs={f.max_abs:.3e} max_rel={f.max_rel:.3e} "
                 f"worst_id={f.worst_id} {'ok' if f.passed else 'FAIL'}"
                 for f in self.fields]
        return "\n".join(lines)


DEFAULT_TOLERANCES = {"pos": 1e-5, "vel": 1e-5, "rho": 1e-5, "press": 1e-4}


def compare_snapshots(a: Snapshot, b: Snapshot,
                      tolerances: dict | None = None) -> CompareReport:
    """Per-field L-infinity differences after aligning particles by id
    (engines may reorder).  Relative differences are scaled by the field's
    maximum magnitude.  Raises on particle-count or id-set mismatch."""
    tol = dict(DEFAULT_TOLERANCES)
    if tolerances:
        tol.update(tolerances)
    if a.id.shape[0] != b.id.shape[0]:
        raise ValueError("snapshot particle counts differ")
    order_a = np.argsort(a.id, kind="stable")
    order_b = np.argsort(b.id, kind="stable")
    if not np.array_equal(a.id[order_a], b.id[order_b]):
        raise ValueError("snapshot id sets differ")
    ids = a.id[order_a]

    fields = []
    for name in Snapshot.FIELDS:
        va = getattr(a, name)[order_a].astype(np.float64)
        vb = getattr(b, name)[order_b].astype(np.float64)
        diff = np.abs(va - vb)
        if diff.ndim > 1:
            diff = diff.max(axis=1)
        scale = max(np.abs(va).max(initial=0.0), np.abs(vb).max(initial=0.0), 1e-30)
        worst = int(np.argmax(diff))
        max_abs = float(diff[worst])
        max_rel = max_abs / scale
        fields.append(FieldDiff(field=name, max_abs=max_abs, max_rel=max_rel,
                                worst_id=int(ids[worst]),
                                passed=max_rel <= tol[name]))
    return CompareReport(fields=fields, passed=all(f.passed for f in fields))


def stats_line(stats: StepStats) -> str:
    rec = {
        "step": stats.step,
        "dt": stats.dt,
        "wall_s": stats.wall_seconds,
        "candidate_pairs": stats.candidate_pairs,
        "true_pairs": stats.true_pairs,
        "force_evals": stats.force_evals,
        "stage_nl_s": stats.stage_nl_s,
        "stage_pi_s": stats.stage_pi_s,
        "stage_su_s": stats.stage_su_s,
    }
    return json.dumps(rec)


def read_stats(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
