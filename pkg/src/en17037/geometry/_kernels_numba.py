"""numba kernels: watertight ray/triangle test and BVH traversal."""
from __future__ import annotations

import numpy as np
from numba import njit, prange

from .constants import SELF_EPS

_STACK = 128


@njit(cache=True, inline="always")
def _axes(dx, dy, dz):
    ax, ay, az = abs(dx), abs(dy), abs(dz)
    if ax >= ay and ax >= az:
        kz = 0
    elif ay >= az:
        kz = 1
    else:
        kz = 2
    kx = (kz + 1) % 3
    ky = (kx + 1) % 3
    dk = dx if kz == 0 else (dy if kz == 1 else dz)
    if dk < 0.0:
        kx, ky = ky, kx
    return kx, ky, kz


@njit(cache=True, inline="always")
def _tri_t(o, d, kx, ky, kz, sx, sy, sz, v0, v1, v2, j):
    """Distance to triangle ``j`` or -1.0.  Edges are inclusive."""
    az_ = v0[j, kz] - o[kz]
    bz_ = v1[j, kz] - o[kz]
    cz_ = v2[j, kz] - o[kz]
    ax = (v0[j, kx] - o[kx]) - sx * az_
    ay = (v0[j, ky] - o[ky]) - sy * az_
    bx = (v1[j, kx] - o[kx]) - sx * bz_
    by = (v1[j, ky] - o[ky]) - sy * bz_
    cx = (v2[j, kx] - o[kx]) - sx * cz_
    cy = (v2[j, ky] - o[ky]) - sy * cz_
    u = cx * by - cy * bx
    v = ax * cy - ay * cx
    w = bx * ay - by * ax
    if (u < 0.0 or v < 0.0 or w < 0.0) and (u > 0.0 or v > 0.0 or w > 0.0):
        return -1.0
    det = u + v + w
    if det == 0.0:
        return -1.0
    return sz * (u * az_ + v * bz_ + w * cz_) / det


@njit(cache=True, inline="always")
def _box_entry(o, d, inv, nmin, nmax, node, lo, hi):
    """Entry distance of the slab test, or +inf when the box is missed."""
    tmin = lo
    tmax = hi
    for a in range(3):
        if d[a] == 0.0:
            if o[a] < nmin[node, a] or o[a] > nmax[node, a]:
                return np.inf
        else:
            t1 = (nmin[node, a] - o[a]) * inv[a]
            t2 = (nmax[node, a] - o[a]) * inv[a]
            if t1 > t2:
                t1, t2 = t2, t1
            t2 *= 1.0 + 1e-12
            if t1 > tmin:
                tmin = t1
            if t2 < tmax:
                tmax = t2
            if tmin > tmax:
                return np.inf
    return tmin


@njit(cache=True)
def _nearest_group(o, d, t_lo, t_hi, skip, nmin, nmax, nleft, nright, nfirst, ncount,
                   v0, v1, v2, tri_id, tri_layer, stack, entry):
    kx, ky, kz = _axes(d[0], d[1], d[2])
    sz = 1.0 / d[kz]
    sx = d[kx] * sz
    sy = d[ky] * sz
    inv = np.empty(3)
    for a in range(3):
        inv[a] = 1.0 / d[a] if d[a] != 0.0 else np.inf

    best_t = np.inf
    best = -1
    ambiguous = False
    e = _box_entry(o, d, inv, nmin, nmax, 0, t_lo, t_hi)
    if e == np.inf:
        return -1, np.inf, np.inf
    sp = 0
    stack[0] = 0
    entry[0] = e
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if entry[sp] > best_t + SELF_EPS:
            continue
        if nleft[node] < 0:
            f = nfirst[node]
            for j in range(f, f + ncount[node]):
                if skip[tri_layer[j]]:
                    continue
                t = _tri_t(o, d, kx, ky, kz, sx, sy, sz, v0, v1, v2, j)
                if t <= t_lo or t > t_hi:
                    continue
                if t < best_t:
                    if best_t <= t + SELF_EPS:
                        ambiguous = True
                    best_t = t
                    best = j
                elif t <= best_t + SELF_EPS:
                    ambiguous = True
        else:
            hi = min(t_hi, best_t + SELF_EPS)
            a = nleft[node]
            b = nright[node]
            ea = _box_entry(o, d, inv, nmin, nmax, a, t_lo, hi)
            eb = _box_entry(o, d, inv, nmin, nmax, b, t_lo, hi)
            if ea > eb:
                a, b = b, a
                ea, eb = eb, ea
            # far child first so the near one is popped next
            if eb != np.inf:
                stack[sp] = b
                entry[sp] = eb
                sp += 1
            if ea != np.inf:
                stack[sp] = a
                entry[sp] = ea
                sp += 1
    if best < 0:
        return -1, np.inf, np.inf
    if not ambiguous:
        return tri_id[best], best_t, best_t

    # Several hits within SELF_EPS of the nearest: the smallest triangle
    # index wins, reported at its own distance.
    lim = min(best_t + SELF_EPS, t_hi)
    lo = best_t * (1.0 - 1e-12) if best_t > 0 else best_t
    rep = tri_id[best]
    rep_t = best_t
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if _box_entry(o, d, inv, nmin, nmax, node, lo, lim) == np.inf:
            continue
        if nleft[node] < 0:
            f = nfirst[node]
            for j in range(f, f + ncount[node]):
                if skip[tri_layer[j]] or tri_id[j] >= rep:
                    continue
                t = _tri_t(o, d, kx, ky, kz, sx, sy, sz, v0, v1, v2, j)
                if t < best_t or t <= t_lo or t > lim:
                    continue
                rep = tri_id[j]
                rep_t = t
        else:
            stack[sp] = nleft[node]
            stack[sp + 1] = nright[node]
            sp += 2
    return rep, rep_t, best_t


@njit(cache=True, parallel=True)
def _batch(origins, dirs, t_lo, t_hi, skip, nmin, nmax, nleft, nright, nfirst, ncount,
           v0, v1, v2, tri_id, tri_layer):
    n = origins.shape[0]
    out_tri = np.empty(n, dtype=np.int64)
    out_t = np.empty(n, dtype=np.float64)
    out_start = np.empty(n, dtype=np.float64)
    for i in prange(n):
        stack = np.empty(_STACK, dtype=np.int64)
        entry = np.empty(_STACK, dtype=np.float64)
        k, t, t0 = _nearest_group(origins[i], dirs[i], t_lo[i], t_hi[i], skip, nmin, nmax,
                              nleft, nright, nfirst, ncount, v0, v1, v2, tri_id,
                              tri_layer, stack, entry)
        out_tri[i] = k
        out_t[i] = t
        out_start[i] = t0
    return out_tri, out_t, out_start


@njit(cache=True)
def _intersect_one(o, d, v0, v1, v2):
    kx, ky, kz = _axes(d[0], d[1], d[2])
    sz = 1.0 / d[kz]
    sx = d[kx] * sz
    sy = d[ky] * sz
    return _tri_t(o, d, kx, ky, kz, sx, sy, sz, v0, v1, v2, 0)


def intersect_one(o, d, v0, v1, v2) -> float:
    return float(_intersect_one(o, d, v0.reshape(1, 3), v1.reshape(1, 3), v2.reshape(1, 3)))


def nearest_group(bvh, origins, dirs, t_lo, t_hi, skip):
    """Representative hit of the nearest coincident-hit group per ray.

    Returns ``(tri, t, t_start)``: original triangle index (-1 on a miss),
    its distance, and the distance of the nearest hit in the group.
    """
    return _batch(origins, dirs, t_lo, t_hi, skip, bvh.node_min, bvh.node_max,
                  bvh.node_left, bvh.node_right, bvh.node_first, bvh.node_count,
                  bvh.v0, bvh.v1, bvh.v2, bvh.tri_id, bvh.tri_layer)
