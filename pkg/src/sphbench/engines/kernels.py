"""Compiled traversal kernels for the force engines.

All kernels release the GIL so Python-level worker threads run them in
parallel; outputs they write are disjoint per call (cell-pair scatter writes
only to particles of the processed cells, gather items write only their own
slot) except for the symmetric strategy, which hands each thread private
accumulators.

State counters are packed in a small int64 array: candidate checks, true
pairs found (raw, per traversal), pair evaluations, fluid-fluid evaluations,
and the lane-queue fill level.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ..physics import (PP_MASSB, PP_MASSF, PP_SUP2, load_side, pair_eval)

CAND = 0
TRUE = 1
EVAL = 2
FF = 3
NPAR = 4
NSTATE = 5


@njit(cache=True, inline="always")
def eval_scatter(i, j, both, dmode, nb,
                 pos, vel, rho, press, prrho, csound, tensil, pp,
                 acc, drho, viscdt, st):
    """Evaluate pair (i, j) and scatter to i, and to j as well when `both`.

    Boundary particles (index < nb) accumulate only density rate; the j side
    is the negated i-side vector scaled by mass, never re-derived.
    """
    xi, yi, zi, vxi, vyi, vzi, rhi, pri, csi, tei = load_side(
        i, dmode, pos, vel, rho, press, prrho, csound, tensil, pp)
    xj, yj, zj, vxj, vyj, vzj, rhj, prj, csj, tej = load_side(
        j, dmode, pos, vel, rho, press, prrho, csound, tensil, pp)
    dx = xi - xj
    dy = yi - yj
    dz = zi - zj
    r2 = dx * dx + dy * dy + dz * dz
    fx, fy, fz, drc, mu = pair_eval(dx, dy, dz, r2,
                                    vxi - vxj, vyi - vyj, vzi - vzj,
                                    rhi, rhj, pri, prj, csi, csj, tei, tej, pp)
    mi = pp[PP_MASSB] if i < nb else pp[PP_MASSF]
    mj = pp[PP_MASSB] if j < nb else pp[PP_MASSF]
    if i >= nb:
        acc[i, 0] -= mj * fx
        acc[i, 1] -= mj * fy
        acc[i, 2] -= mj * fz
    drho[i] += mj * drc
    if mu > viscdt[i]:
        viscdt[i] = mu
    st[EVAL] += 1
    if i >= nb and j >= nb:
        st[FF] += 1
    if both:
        if j >= nb:
            acc[j, 0] += mi * fx
            acc[j, 1] += mi * fy
            acc[j, 2] += mi * fz
        drho[j] += mi * drc
        if mu > viscdt[j]:
            viscdt[j] = mu


@njit(cache=True, inline="always")
def scan_block(i0, i1, j0, j1, ordered, skip_self, both, lanes, dmode, nb,
               pos, vel, rho, press, prrho, csound, tensil, pp,
               qi, qj, st, acc, drho, viscdt):
    """Distance-test every (i, j) of two particle ranges and evaluate hits.

    With lanes == 4 true pairs are queued and evaluated in packs of four, the
    remainder flushed singly at the end of the block; with lanes == 1 each hit
    is evaluated immediately.  `ordered` restricts to j > i (intra-cell use,
    valid only when both ranges coincide).
    """
    sup2 = pp[PP_SUP2]
    for i in range(i0, i1):
        xi = np.float64(pos[i, 0])
        yi = np.float64(pos[i, 1])
        zi = np.float64(pos[i, 2])
        js = i + 1 if ordered else j0
        for j in range(js, j1):
            if skip_self and j == i:
                continue
            st[CAND] += 1
            dx = xi - np.float64(pos[j, 0])
            dy = yi - np.float64(pos[j, 1])
            dz = zi - np.float64(pos[j, 2])
            r2 = dx * dx + dy * dy + dz * dz
            if r2 < sup2 and r2 > 0.0:
                st[TRUE] += 1
                if lanes == 4:
                    k = st[NPAR]
                    qi[k] = i
                    qj[k] = j
                    st[NPAR] = k + 1
                    if st[NPAR] == 4:
                        for p in range(4):
                            eval_scatter(qi[p], qj[p], both, dmode, nb,
                                         pos, vel, rho, press, prrho, csound,
                                         tensil, pp, acc, drho, viscdt, st)
                        st[NPAR] = 0
                else:
                    eval_scatter(i, j, both, dmode, nb,
                                 pos, vel, rho, press, prrho, csound,
                                 tensil, pp, acc, drho, viscdt, st)
    if lanes == 4:
        for p in range(st[NPAR]):
            eval_scatter(qi[p], qj[p], both, dmode, nb,
                         pos, vel, rho, press, prrho, csound,
                         tensil, pp, acc, drho, viscdt, st)
        st[NPAR] = 0


@njit(cache=True, nogil=True)
def run_cells_symmetric(cell_ids, nx, ny, nz, reach, fbeg, fend, bbeg, bend,
                        lanes, dmode, nb,
                        pos, vel, rho, press, prrho, csound, tensil, pp,
                        acc, drho, viscdt):
    """Symmetric cell-pair traversal: each unordered pair is found once (via
    the forward half-stencil plus ordered intra-cell pairs) and scattered to
    both particles.  Raw counters are unordered counts."""
    st = np.zeros(NSTATE, np.int64)
    qi = np.empty(4, np.int64)
    qj = np.empty(4, np.int64)
    nxy = nx * ny
    for t in range(cell_ids.shape[0]):
        c = cell_ids[t]
        cz = c // nxy
        rem = c - cz * nxy
        cy = rem // nx
        cx = rem - cy * nx
        cf0 = fbeg[c]
        cf1 = fend[c]
        cb0 = bbeg[c]
        cb1 = bend[c]
        if cf1 == cf0 and cb1 == cb0:
            continue
        scan_block(cf0, cf1, cf0, cf1, True, False, True, lanes, dmode, nb,
                   pos, vel, rho, press, prrho, csound, tensil, pp,
                   qi, qj, st, acc, drho, viscdt)
        scan_block(cf0, cf1, cb0, cb1, False, False, True, lanes, dmode, nb,
                   pos, vel, rho, press, prrho, csound, tensil, pp,
                   qi, qj, st, acc, drho, viscdt)
        for dz in range(0, reach + 1):
            zz = cz + dz
            if zz >= nz:
                continue
            dy0 = -reach if dz > 0 else 0
            for dy in range(dy0, reach + 1):
                yy = cy + dy
                if yy < 0 or yy >= ny:
                    continue
                dx0 = -reach if (dz > 0 or dy > 0) else 1
                for dxo in range(dx0, reach + 1):
                    xx = cx + dxo
                    if xx < 0 or xx >= nx:
                        continue
                    d = xx + nx * (yy + ny * zz)
                    scan_block(cf0, cf1, fbeg[d], fend[d], False, False, True,
                               lanes, dmode, nb, pos, vel, rho, press, prrho,
                               csound, tensil, pp, qi, qj, st, acc, drho, viscdt)
                    scan_block(cf0, cf1, bbeg[d], bend[d], False, False, True,
                               lanes, dmode, nb, pos, vel, rho, press, prrho,
                               csound, tensil, pp, qi, qj, st, acc, drho, viscdt)
                    scan_block(cb0, cb1, fbeg[d], fend[d], False, False, True,
                               lanes, dmode, nb, pos, vel, rho, press, prrho,
                               csound, tensil, pp, qi, qj, st, acc, drho, viscdt)
    return st[CAND], st[TRUE], st[EVAL], st[FF]


@njit(cache=True, nogil=True)
def run_cells_asymmetric(cell_ids, nx, ny, nz, reach, fbeg, fend, bbeg, bend,
                         lanes, dmode, nb,
                         pos, vel, rho, press, prrho, csound, tensil, pp,
                         acc, drho, viscdt):
    """One-sided traversal: particles of each processed cell scan their full
    candidate block (as contiguous X rows) and accumulate onto themselves
    only, so writes stay inside the owned cell.  Every unordered pair is
    found twice; raw counters are ordered counts."""
    st = np.zeros(NSTATE, np.int64)
    qi = np.empty(4, np.int64)
    qj = np.empty(4, np.int64)
    nxy = nx * ny
    for t in range(cell_ids.shape[0]):
        c = cell_ids[t]
        cz = c // nxy
        rem = c - cz * nxy
        cy = rem // nx
        cx = rem - cy * nx
        cf0 = fbeg[c]
        cf1 = fend[c]
        cb0 = bbeg[c]
        cb1 = bend[c]
        if cf1 == cf0 and cb1 == cb0:
            continue
        xlo = cx - reach if cx - reach > 0 else 0
        xhi = cx + reach if cx + reach < nx - 1 else nx - 1
        for dz in range(-reach, reach + 1):
            zz = cz + dz
            if zz < 0 or zz >= nz:
                continue
            for dy in range(-reach, reach + 1):
                yy = cy + dy
                if yy < 0 or yy >= ny:
                    continue
                base = nx * (yy + ny * zz)
                jf0 = fbeg[xlo + base]
                jf1 = fend[xhi + base]
                jb0 = bbeg[xlo + base]
                jb1 = bend[xhi + base]
                scan_block(cf0, cf1, jf0, jf1, False, True, False, lanes,
                           dmode, nb, pos, vel, rho, press, prrho, csound,
                           tensil, pp, qi, qj, st, acc, drho, viscdt)
                scan_block(cf0, cf1, jb0, jb1, False, False, False, lanes,
                           dmode, nb, pos, vel, rho, press, prrho, csound,
                           tensil, pp, qi, qj, st, acc, drho, viscdt)
                scan_block(cb0, cb1, jf0, jf1, False, False, False, lanes,
                           dmode, nb, pos, vel, rho, press, prrho, csound,
                           tensil, pp, qi, qj, st, acc, drho, viscdt)
    return st[CAND], st[TRUE], st[EVAL], st[FF]


@njit(cache=True, nogil=True)
def run_cells_slices(cell_ids, slice_xlo, slice_xhi, nx, ny, nz, reach,
                     fbeg, fend, bbeg, bend, lanes, dmode, nb,
                     pos, vel, rho, press, prrho, csound, tensil, pp,
                     acc, drho, viscdt):
    """One X-slab of cells: symmetric among cells of the slab, one-sided for
    pairs reaching outside it (each side of a cross-slab pair is accumulated
    by the slab that owns it, so writes never leave the slab).

    Returns symmetric counters then one-sided counters.
    """
    st_s = np.zeros(NSTATE, np.int64)
    st_a = np.zeros(NSTATE, np.int64)
    qi = np.empty(4, np.int64)
    qj = np.empty(4, np.int64)
    nxy = nx * ny
    for t in range(cell_ids.shape[0]):
        c = cell_ids[t]
        cz = c // nxy
        rem = c - cz * nxy
        cy = rem // nx
        cx = rem - cy * nx
        cf0 = fbeg[c]
        cf1 = fend[c]
        cb0 = bbeg[c]
        cb1 = bend[c]
        if cf1 == cf0 and cb1 == cb0:
            continue
        scan_block(cf0, cf1, cf0, cf1, True, False, True, lanes, dmode, nb,
                   pos, vel, rho, press, prrho, csound, tensil, pp,
                   qi, qj, st_s, acc, drho, viscdt)
        scan_block(cf0, cf1, cb0, cb1, False, False, True, lanes, dmode, nb,
                   pos, vel, rho, press, prrho, csound, tensil, pp,
                   qi, qj, st_s, acc, drho, viscdt)
        # Forward neighbors inside the slab: full symmetry.
        for dz in range(0, reach + 1):
            zz = cz + dz
            if zz >= nz:
                continue
            dy0 = -reach if dz > 0 else 0
            for dy in range(dy0, reach + 1):
                yy = cy + dy
                if yy < 0 or yy >= ny:
                    continue
                dx0 = -reach if (dz > 0 or dy > 0) else 1
                for dxo in range(dx0, reach + 1):
                    xx = cx + dxo
                    if xx < slice_xlo or xx >= slice_xhi or xx >= nx:
                        continue
                    d = xx + nx * (yy + ny * zz)
                    scan_block(cf0, cf1, fbeg[d], fend[d], False, False, True,
                               lanes, dmode, nb, pos, vel, rho, press, prrho,
                               csound, tensil, pp, qi, qj, st_s, acc, drho, viscdt)
                    scan_block(cf0, cf1, bbeg[d], bend[d], False, False, True,
                               lanes, dmode, nb, pos, vel, rho, press, prrho,
                               csound, tensil, pp, qi, qj, st_s, acc, drho, viscdt)
                    scan_block(cb0, cb1, fbeg[d], fend[d], False, False, True,
                               lanes, dmode, nb, pos, vel, rho, press, prrho,
                               csound, tensil, pp, qi, qj, st_s, acc, drho, viscdt)
        # Stencil rows outside the slab, both directions: accumulate onto own
        # particles only.
        for dz in range(-reach, reach + 1):
            zz = cz + dz
            if zz < 0 or zz >= nz:
                continue
            for dy in range(-reach, reach + 1):
                yy = cy + dy
                if yy < 0 or yy >= ny:
                    continue
                base = nx * (yy + ny * zz)
                lx0 = cx - reach if cx - reach > 0 else 0
                lx1 = slice_xlo - 1 if slice_xlo - 1 < cx + reach else cx + reach
                rx0 = slice_xhi if slice_xhi > cx - reach else cx - reach
                rx1 = cx + reach if cx + reach < nx - 1 else nx - 1
                for seg in range(2):
                    x0 = lx0 if seg == 0 else rx0
                    x1 = lx1 if seg == 0 else rx1
                    if x1 < x0:
                        continue
                    jf0 = fbeg[x0 + base]
                    jf1 = fend[x1 + base]
                    jb0 = bbeg[x0 + base]
                    jb1 = bend[x1 + base]
                    scan_block(cf0, cf1, jf0, jf1, False, False, False, lanes,
                               dmode, nb, pos, vel, rho, press, prrho, csound,
                               tensil, pp, qi, qj, st_a, acc, drho, viscdt)
                    scan_block(cf0, cf1, jb0, jb1, False, False, False, lanes,
                               dmode, nb, pos, vel, rho, press, prrho, csound,
                               tensil, pp, qi, qj, st_a, acc, drho, viscdt)
                    scan_block(cb0, cb1, jf0, jf1, False, False, False, lanes,
                               dmode, nb, pos, vel, rho, press, prrho, csound,
                               tensil, pp, qi, qj, st_a, acc, drho, viscdt)
    return (st_s[CAND], st_s[TRUE], st_s[EVAL], st_s[FF],
            st_a[CAND], st_a[TRUE], st_a[EVAL], st_a[FF])


@njit(cache=True, nogil=True)
def gather_fluid_cells(i0, i1, reach, cell_of, nx, ny, nz,
                       fbeg, fend, bbeg, bend, dmode, nb,
                       pos, vel, rho, press, prrho, csound, tensil, pp,
                       acc, drho, viscdt):
    """Fused fluid pass, cell-sweep variant: one work item per fluid particle,
    its state loaded once into locals, fluid and boundary contributions
    accumulated locally and written back once."""
    cand = np.int64(0)
    true = np.int64(0)
    evals = np.int64(0)
    ff = np.int64(0)
    sup2 = pp[PP_SUP2]
    massf = pp[PP_MASSF]
    massb = pp[PP_MASSB]
    nxy = nx * ny
    for i in range(i0, i1):
        xi, yi, zi, vxi, vyi, vzi, rhi, pri, csi, tei = load_side(
            i, dmode, pos, vel, rho, press, prrho, csound, tensil, pp)
        ax = 0.0
        ay = 0.0
        az = 0.0
        dr = 0.0
        vd = 0.0
        c = cell_of[i]
        cz = c // nxy
        rem = c - cz * nxy
        cy = rem // nx
        cx = rem - cy * nx
        xlo = cx - reach if cx - reach > 0 else 0
        xhi = cx + reach if cx + reach < nx - 1 else nx - 1
        for dz in range(-reach, reach + 1):
            zz = cz + dz
            if zz < 0 or zz >= nz:
                continue
            for dy in range(-reach, reach + 1):
                yy = cy + dy
                if yy < 0 or yy >= ny:
                    continue
                base = nx * (yy + ny * zz)
                j0 = fbeg[xlo + base]
                j1 = fend[xhi + base]
                for j in range(j0, j1):
                    if j == i:
                        continue
                    cand += 1
                    dx = xi - np.float64(pos[j, 0])
                    dy_ = yi - np.float64(pos[j, 1])
                    dz_ = zi - np.float64(pos[j, 2])
                    r2 = dx * dx + dy_ * dy_ + dz_ * dz_
                    if r2 < sup2 and r2 > 0.0:
                        true += 1
                        evals += 1
                        ff += 1
                        xj, yj, zj, vxj, vyj, vzj, rhj, prj, csj, tej = load_side(
                            j, dmode, pos, vel, rho, press, prrho, csound, tensil, pp)
                        fx, fy, fz, drc, mu = pair_eval(
                            dx, dy_, dz_, r2, vxi - vxj, vyi - vyj, vzi - vzj,
                            rhi, rhj, pri, prj, csi, csj, tei, tej, pp)
                        ax -= massf * fx
                        ay -= massf * fy
                        az -= massf * fz
                        dr += massf * drc
                        if mu > vd:
                            vd = mu
                j0 = bbeg[xlo + base]
                j1 = bend[xhi + base]
                for j in range(j0, j1):
                    cand += 1
                    dx = xi - np.float64(pos[j, 0])
                    dy_ = yi - np.float64(pos[j, 1])
                    dz_ = zi - np.float64(pos[j, 2])
                    r2 = dx * dx + dy_ * dy_ + dz_ * dz_
                    if r2 < sup2 and r2 > 0.0:
                        true += 1
                        evals += 1
                        xj, yj, zj, vxj, vyj, vzj, rhj, prj, csj, tej = load_side(
                            j, dmode, pos, vel, rho, press, prrho, csound, tensil, pp)
                        fx, fy, fz, drc, mu = pair_eval(
                            dx, dy_, dz_, r2, vxi - vxj, vyi - vyj, vzi - vzj,
                            rhi, rhj, pri, prj, csi, csj, tei, tej, pp)
                        ax -= massb * fx
                        ay -= massb * fy
                        az -= massb * fz
                        dr += massb * drc
                        if mu > vd:
                            vd = mu
        acc[i, 0] = ax
        acc[i, 1] = ay
        acc[i, 2] = az
        drho[i] = dr
        viscdt[i] = vd
    return cand, true, evals, ff


@njit(cache=True, nogil=True)
def gather_fluid_ranges(i0, i1, cell_of,
                        frange_b, frange_e, brange_b, brange_e, dmode, nb,
                        pos, vel, rho, press, prrho, csound, tensil, pp,
                        acc, drho, viscdt):
    """Fused fluid pass over precomputed interaction ranges: the candidate
    rows come straight from the per-cell range table."""
    cand = np.int64(0)
    true = np.int64(0)
    evals = np.int64(0)
    ff = np.int64(0)
    sup2 = pp[PP_SUP2]
    massf = pp[PP_MASSF]
    massb = pp[PP_MASSB]
    nr = frange_b.shape[1]
    for i in range(i0, i1):
        xi, yi, zi, vxi, vyi, vzi, rhi, pri, csi, tei = load_side(
            i, dmode, pos, vel, rho, press, prrho, csound, tensil, pp)
        ax = 0.0
        ay = 0.0
        az = 0.0
        dr = 0.0
        vd = 0.0
        c = cell_of[i]
        for rr in range(nr):
            j1 = frange_e[c, rr]
            for j in range(frange_b[c, rr], j1):
                if j == i:
                    continue
                cand += 1
                dx = xi - np.float64(pos[j, 0])
                dy_ = yi - np.float64(pos[j, 1])
                dz_ = zi - np.float64(pos[j, 2])
                r2 = dx * dx + dy_ * dy_ + dz_ * dz_
                if r2 < sup2 and r2 > 0.0:
                    true += 1
                    evals += 1
                    ff += 1
                    xj, yj, zj, vxj, vyj, vzj, rhj, prj, csj, tej = load_side(
                        j, dmode, pos, vel, rho, press, prrho, csound, tensil, pp)
                    fx, fy, fz, drc, mu = pair_eval(
                        dx, dy_, dz_, r2, vxi - vxj, vyi - vyj, vzi - vzj,
                        rhi, rhj, pri, prj, csi, csj, tei, tej, pp)
                    ax -= massf * fx
                    ay -= massf * fy
                    az -= massf * fz
                    dr += massf * drc
                    if mu > vd:
                        vd = mu
        for rr in range(nr):
            j1 = brange_e[c, rr]
            for j in range(brange_b[c, rr], j1):
                cand += 1
                dx = xi - np.float64(pos[j, 0])
                dy_ = yi - np.float64(pos[j, 1])
                dz_ = zi - np.float64(pos[j, 2])
                r2 = dx * dx + dy_ * dy_ + dz_ * dz_
                if r2 < sup2 and r2 > 0.0:
                    true += 1
                    evals += 1
                    xj, yj, zj, vxj, vyj, vzj, rhj, prj, csj, tej = load_side(
                        j, dmode, pos, vel, rho, press, prrho, csound, tensil, pp)
                    fx, fy, fz, drc, mu = pair_eval(
                        dx, dy_, dz_, r2, vxi - vxj, vyi - vyj, vzi - vzj,
                        rhi, rhj, pri, prj, csi, csj, tei, tej, pp)
                    ax -= massb * fx
                    ay -= massb * fy
                    az -= massb * fz
                    dr += massb * drc
                    if mu > vd:
                        vd = mu
        acc[i, 0] = ax
        acc[i, 1] = ay
        acc[i, 2] = az
        drho[i] = dr
        viscdt[i] = vd
    return cand, true, evals, ff


@njit(cache=True, nogil=True)
def gather_boundary_cells(i0, i1, reach, cell_of, nx, ny, nz, fbeg, fend,
                          dmode, nb,
                          pos, vel, rho, press, prrho, csound, tensil, pp,
                          drho, viscdt):
    """Specialized boundary pass, cell-sweep variant: boundary items read
    fluid neighbors and accumulate density rate only."""
    cand = np.int64(0)
    true = np.int64(0)
    evals = np.int64(0)
    sup2 = pp[PP_SUP2]
    massf = pp[PP_MASSF]
    nxy = nx * ny
    for i in range(i0, i1):
        xi, yi, zi, vxi, vyi, vzi, rhi, pri, csi, tei = load_side(
            i, dmode, pos, vel, rho, press, prrho, csound, tensil, pp)
        dr = 0.0
        vd = 0.0
        c = cell_of[i]
        cz = c // nxy
        rem = c - cz * nxy
        cy = rem // nx
        cx = rem - cy * nx
        xlo = cx - reach if cx - reach > 0 else 0
        xhi = cx + reach if cx + reach < nx - 1 else nx - 1
        for dz in range(-reach, reach + 1):
            zz = cz + dz
            if zz < 0 or zz >= nz:
                continue
            for dy in range(-reach, reach + 1):
                yy = cy + dy
                if yy < 0 or yy >= ny:
                    continue
                base = nx * (yy + ny * zz)
                j0 = fbeg[xlo + base]
                j1 = fend[xhi + base]
                for j in range(j0, j1):
                    cand += 1
                    dx = xi - np.float64(pos[j, 0])
                    dy_ = yi - np.float64(pos[j, 1])
                    dz_ = zi - np.float64(pos[j, 2])
                    r2 = dx * dx + dy_ * dy_ + dz_ * dz_
                    if r2 < sup2 and r2 > 0.0:
                        true += 1
                        evals += 1
                        xj, yj, zj, vxj, vyj, vzj, rhj, prj, csj, tej = load_side(
                            j, dmode, pos, vel, rho, press, prrho, csound, tensil, pp)
                        fx, fy, fz, drc, mu = pair_eval(
                            dx, dy_, dz_, r2, vxi - vxj, vyi - vyj, vzi - vzj,
                            rhi, rhj, pri, prj, csi, csj, tei, tej, pp)
                        dr += massf * drc
                        if mu > vd:
                            vd = mu
        drho[i] = dr
        viscdt[i] = vd
    return cand, true, evals, np.int64(0)


@njit(cache=True, nogil=True)
def gather_boundary_ranges(i0, i1, cell_of, frange_b, frange_e, dmode, nb,
                           pos, vel, rho, press, prrho, csound, tensil, pp,
                           drho, viscdt):
    """Specialized boundary pass over precomputed fluid ranges."""
    cand = np.int64(0)
    true = np.int64(0)
    evals = np.int64(0)
    sup2 = pp[PP_SUP2]
    massf = pp[PP_MASSF]
    nr = frange_b.shape[1]
    for i in range(i0, i1):
        xi, yi, zi, vxi, vyi, vzi, rhi, pri, csi, tei = load_side(
            i, dmode, pos, vel, rho, press, prrho, csound, tensil, pp)
        dr = 0.0
        vd = 0.0
        c = cell_of[i]
        for rr in range(nr):
            j1 = frange_e[c, rr]
            for j in range(frange_b[c, rr], j1):
                cand += 1
                dx = xi - np.float64(pos[j, 0])
                dy_ = yi - np.float64(pos[j, 1])
                dz_ = zi - np.float64(pos[j, 2])
                r2 = dx * dx + dy_ * dy_ + dz_ * dz_
                if r2 < sup2 and r2 > 0.0:
                    true += 1
                    evals += 1
                    xj, yj, zj, vxj, vyj, vzj, rhj, prj, csj, tej = load_side(
                        j, dmode, pos, vel, rho, press, prrho, csound, tensil, pp)
                    fx, fy, fz, drc, mu = pair_eval(
                        dx, dy_, dz_, r2, vxi - vxj, vyi - vyj, vzi - vzj,
                        rhi, rhj, pri, prj, csi, csj, tei, tej, pp)
                    dr += massf * drc
                    if mu > vd:
                        vd = mu
        drho[i] = dr
        viscdt[i] = vd
    return cand, true, evals, np.int64(0)
