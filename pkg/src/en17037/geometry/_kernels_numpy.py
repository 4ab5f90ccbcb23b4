"""Pure-numpy fallback: wavefront BVH traversal over batches of rays.

Same contract and arithmetic as the numba kernels, but without per-ray
closest-hit culling, so it enumerates every candidate leaf a ray touches.
"""
from __future__ import annotations

import numpy as np

from .constants import SELF_EPS

CHUNK = 1024
_NO_TRI = np.iinfo(np.int64).max


def _axes(d):
    kz = np.argmax(np.abs(d), axis=1)
    kx = (kz + 1) % 3
    ky = (kx + 1) % 3
    neg = np.take_along_axis(d, kz[:, None], axis=1)[:, 0] < 0.0
    kx, ky = np.where(neg, ky, kx), np.where(neg, kx, ky)
    return kx, ky, kz


def woop_t(o, d, v0, v1, v2):
    """Row-wise watertight intersection distance, -1.0 on a miss."""
    kx, ky, kz = _axes(d)

    def comp(a, k):
        return np.take_along_axis(a, k[:, None], axis=1)[:, 0]

    dz = comp(d, kz)
    sz = 1.0 / dz
    sx = comp(d, kx) * sz
    sy = comp(d, ky) * sz
    ox, oy, oz = comp(o, kx), comp(o, ky), comp(o, kz)
    az_ = comp(v0, kz) - oz
    bz_ = comp(v1, kz) - oz
    cz_ = comp(v2, kz) - oz
    ax = (comp(v0, kx) - ox) - sx * az_
    ay = (comp(v0, ky) - oy) - sy * az_
    bx = (comp(v1, kx) - ox) - sx * bz_
    by = (comp(v1, ky) - oy) - sy * bz_
    cx = (comp(v2, kx) - ox) - sx * cz_
    cy = (comp(v2, ky) - oy) - sy * cz_
    u = cx * by - cy * bx
    v = ax * cy - ay * cx
    w = bx * ay - by * ax
    mixed = ((u < 0) | (v < 0) | (w < 0)) & ((u > 0) | (v > 0) | (w > 0))
    det = u + v + w
    ok = ~mixed & (det != 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = sz * (u * az_ + v * bz_ + w * cz_) / det
    return np.where(ok, t, -1.0)


def _box_hit(o, d, inv, bmin, bmax, lo, hi):
    tmin = lo.copy()
    tmax = hi.copy()
    ok = np.ones(o.shape[0], dtype=bool)
    for a in range(3):
        flat = d[:, a] == 0.0
        ok &= ~(flat & ((o[:, a] < bmin[:, a]) | (o[:, a] > bmax[:, a])))
        with np.errstate(invalid="ignore"):
            t1 = (bmin[:, a] - o[:, a]) * inv[:, a]
            t2 = (bmax[:, a] - o[:, a]) * inv[:, a]
        near = np.minimum(t1, t2)
        far = np.maximum(t1, t2) * (1.0 + 1e-12)
        tmin = np.where(flat, tmin, np.maximum(tmin, near))
        tmax = np.where(flat, tmax, np.minimum(tmax, far))
    return ok & (tmin <= tmax)


def _candidates(bvh, o, d, inv, t_lo, t_hi):
    """(ray, leaf-ordered triangle) pairs whose leaf boxes the rays enter."""
    rays = np.arange(o.shape[0])
    nodes = np.zeros_like(rays)
    leaf_rays, leaf_nodes = [], []
    while rays.size:
        hit = _box_hit(o[rays], d[rays], inv[rays], bvh.node_min[nodes], bvh.node_max[nodes],
                       t_lo[rays], t_hi[rays])
        rays, nodes = rays[hit], nodes[hit]
        leaf = bvh.node_left[nodes] < 0
        leaf_rays.append(rays[leaf])
        leaf_nodes.append(nodes[leaf])
        inner_r, inner_n = rays[~leaf], nodes[~leaf]
        rays = np.concatenate([inner_r, inner_r])
        nodes = np.concatenate([bvh.node_left[inner_n], bvh.node_right[inner_n]])
    r = np.concatenate(leaf_rays)
    n = np.concatenate(leaf_nodes)
    counts = bvh.node_count[n]
    pair_ray = np.repeat(r, counts)
    starts = np.repeat(bvh.node_first[n], counts)
    offsets = np.arange(pair_ray.size) - np.repeat(np.cumsum(counts) - counts, counts)
    return pair_ray, starts + offsets


def _chunk(bvh, o, d, t_lo, t_hi, skip):
    n = o.shape[0]
    with np.errstate(divide="ignore"):
        inv = np.where(d != 0.0, 1.0 / np.where(d != 0.0, d, 1.0), np.inf)
    out_tri = np.full(n, -1, dtype=np.int64)
    out_t = np.full(n, np.inf)
    out_start = np.full(n, np.inf)
    r, j = _candidates(bvh, o, d, inv, t_lo, t_hi)
    if r.size == 0:
        return out_tri, out_t, out_start
    keep = ~skip[bvh.tri_layer[j]]
    r, j = r[keep], j[keep]
    t = woop_t(o[r], d[r], bvh.v0[j], bvh.v1[j], bvh.v2[j])
    valid = (t > t_lo[r]) & (t <= t_hi[r])
    r, j, t = r[valid], j[valid], t[valid]
    if r.size == 0:
        return out_tri, out_t, out_start
    tstar = np.full(n, np.inf)
    np.minimum.at(tstar, r, t)
    in_group = t <= np.minimum(tstar[r] + SELF_EPS, t_hi[r])
    r, j, t = r[in_group], j[in_group], t[in_group]
    ids = bvh.tri_id[j]
    rep = np.full(n, _NO_TRI, dtype=np.int64)
    np.minimum.at(rep, r, ids)
    sel = ids == rep[r]
    out_tri[r[sel]] = ids[sel]
    out_t[r[sel]] = t[sel]
    hit = out_tri >= 0
    out_start[hit] = tstar[hit]
    return out_tri, out_t, out_start


def intersect_one(o, d, v0, v1, v2) -> float:
    row = lambda a: np.asarray(a, dtype=np.float64).reshape(1, 3)  # noqa: E731
    return float(woop_t(row(o), row(d), row(v0), row(v1), row(v2))[0])


def nearest_group(bvh, origins, dirs, t_lo, t_hi, skip):
    n = origins.shape[0]
    out_tri = np.empty(n, dtype=np.int64)
    out_t = np.empty(n)
    out_start = np.empty(n)
    for s in range(0, n, CHUNK):
        e = min(n, s + CHUNK)
        out_tri[s:e], out_t[s:e], out_start[s:e] = _chunk(
            bvh, origins[s:e], dirs[s:e], t_lo[s:e], t_hi[s:e], skip)
    return out_tri, out_t, out_start
