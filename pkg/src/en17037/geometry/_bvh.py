"""Flat bounding-volume hierarchy over a triangle soup.

Nodes live in parallel arrays so both kernel backends can walk them.
Inner nodes have ``left >= 0``; leaves have ``left == -1`` and own the
leaf-ordered triangles ``v0[first:first + count]`` (etc.).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF_SIZE = 4
# Boxes are padded so the slab test stays conservative for flat,
# axis-aligned triangles and for hits lying exactly on a box face.
_PAD_ABS = 1e-7
_PAD_REL = 1e-9


@dataclass(frozen=True)
class BVHArrays:
    node_min: np.ndarray  # (N, 3)
    node_max: np.ndarray  # (N, 3)
    node_left: np.ndarray  # (N,) int64, -1 for leaves
    node_right: np.ndarray  # (N,) int64
    node_first: np.ndarray  # (N,) int64
    node_count: np.ndarray  # (N,) int64
    v0: np.ndarray  # (M, 3) triangle vertices in leaf order
    v1: np.ndarray
    v2: np.ndarray
    tri_id: np.ndarray  # (M,) original triangle index, leaf order
    tri_layer: np.ndarray  # (M,) layer id, leaf order

    @property
    def n_nodes(self) -> int:
        return int(self.node_left.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.tri_id.shape[0])

    def depth(self) -> int:
        best = 0
        stack = [(0, 1)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if self.node_left[node] >= 0:
                stack.append((int(self.node_left[node]), d + 1))
                stack.append((int(self.node_right[node]), d + 1))
        return best


def build_bvh(vertices: np.ndarray, layers: np.ndarray, leaf_size: int = LEAF_SIZE) -> BVHArrays:
    """Median-split BVH over ``vertices`` of shape (M, 3, 3)."""
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    m = vertices.shape[0]
    if m == 0:
        raise ValueError("empty scene")
    tri_min = vertices.min(axis=1)
    tri_max = vertices.max(axis=1)
    centroid = vertices.mean(axis=1)

    node_min, node_max = [], []
    node_left, node_right, node_first, node_count = [], [], [], []
    order_chunks: list[np.ndarray] = []
    n_ordered = 0

    def new_node() -> int:
        node_min.append(None)
        node_max.append(None)
        node_left.append(-1)
        node_right.append(-1)
        node_first.append(0)
        node_count.append(0)
        return len(node_left) - 1

    root = new_node()
    # explicit stack keeps deep, degenerate inputs off the Python call stack
    stack = [(root, np.arange(m))]
    while stack:
        node, idx = stack.pop()
        lo = tri_min[idx].min(axis=0)
        hi = tri_max[idx].max(axis=0)
        node_min[node] = lo - (_PAD_ABS + _PAD_REL * np.abs(lo))
        node_max[node] = hi + (_PAD_ABS + _PAD_REL * np.abs(hi))
        if idx.size <= leaf_size:
            node_first[node] = n_ordered
            node_count[node] = idx.size
            order_chunks.append(idx)
            n_ordered += idx.size
            continue
        c = centroid[idx]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        ranked = idx[np.argsort(c[:, axis], kind="stable")]
        half = ranked.size // 2
        left, right = new_node(), new_node()
        node_left[node] = left
        node_right[node] = right
        # push right first so the left subtree is laid out (and ordered) first
        stack.append((right, ranked[half:]))
        stack.append((left, ranked[:half]))

    order = np.concatenate(order_chunks)
    ordered = vertices[order]
    return BVHArrays(
        node_min=np.ascontiguousarray(node_min, dtype=np.float64),
        node_max=np.ascontiguousarray(node_max, dtype=np.float64),
        node_left=np.asarray(node_left, dtype=np.int64),
        node_right=np.asarray(node_right, dtype=np.int64),
        node_first=np.asarray(node_first, dtype=np.int64),
        node_count=np.asarray(node_count, dtype=np.int64),
        v0=np.ascontiguousarray(ordered[:, 0]),
        v1=np.ascontiguousarray(ordered[:, 1]),
        v2=np.ascontiguousarray(ordered[:, 2]),
        tri_id=order.astype(np.int64),
        tri_layer=np.asarray(layers, dtype=np.int64)[order],
    )
