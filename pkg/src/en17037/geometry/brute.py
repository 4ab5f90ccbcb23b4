"""Brute-force reference tracer.

Tests every triangle with a vectorised Moller-Trumbore test and groups
hits by sorting, sharing neither traversal nor intersection code with the
accelerated path.  Slow; meant for cross-checking.
"""
from __future__ import annotations

import numpy as np

from .constants import SELF_EPS


def moller_trumbore(origin, direction, vertices: np.ndarray) -> np.ndarray:
    """Distance from one ray to each triangle of ``vertices`` (M, 3, 3); NaN on a miss."""
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    a, b, c = vertices[:, 0], vertices[:, 1], vertices[:, 2]
    e1 = b - a
    e2 = c - a
    p = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        s = o - a
        u = np.einsum("ij,ij->i", s, p) * inv
        q = np.cross(s, e1)
        v = (q @ d) * inv
        t = np.einsum("ij,ij->i", e2, q) * inv
    ok = (det != 0.0) & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0)
    return np.where(ok, t, np.nan)


def all_hits(origin, direction, t_max, vertices, layers, skip_layers=()) -> list[tuple[float, int]]:
    """Collapsed ``(t, triangle_index)`` pairs in ascending ``t``.

    Layers in ``skip_layers`` are removed before grouping.  A group starts
    at the smallest remaining ``t`` and absorbs every hit within SELF_EPS of
    it; the smallest triangle index in the group represents it.
    """
    t = moller_trumbore(origin, direction, vertices)
    idx = np.flatnonzero((t > SELF_EPS) & (t <= t_max))
    if skip_layers:
        idx = idx[~np.isin(np.asarray(layers)[idx], list(skip_layers))]
    order = idx[np.lexsort((idx, t[idx]))]
    out = []
    i = 0
    while i < order.size:
        start = t[order[i]]
        j = i
        while j < order.size and t[order[j]] <= start + SELF_EPS:
            j += 1
        rep = int(order[i:j].min())
        out.append((float(t[rep]), rep))
        i = j
    return out
