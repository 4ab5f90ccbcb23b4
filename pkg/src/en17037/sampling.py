"""Direction sets (geodesic icosphere, horizontal ring) and vantage grids."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import SceneError, points_in_polygon, polygon_centroid

MAX_LEVEL = 8
MIN_RING = 8
DEFAULT_LEVEL = 5
DEFAULT_RING = 3600
DEFAULT_SPACING = 0.5
EYE_HEIGHTS = (1.2, 1.7)


@dataclass(frozen=True)
class DirectionSet:
    directions: np.ndarray  # (N, 3) unit vectors
    weights: np.ndarray  # (N,) steradians for spheres, radians of arc for rings
    kind: str  # "sphere" | "ring"

    def __len__(self) -> int:
        return self.directions.shape[0]


def _icosahedron():
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    v = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def icosphere_mesh(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Vertices and faces of an icosahedron subdivided ``level`` times."""
    if level < 0:
        raise ValueError("level must be >= 0")
    if level > MAX_LEVEL:
        raise ValueError("subdivision too deep")
    verts, faces = _icosahedron()
    for _ in range(level):
        edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        edges.sort(axis=1)
        uniq, inverse = np.unique(edges, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        mid = verts[uniq[:, 0]] + verts[uniq[:, 1]]
        mid /= np.linalg.norm(mid, axis=1, keepdims=True)
        base = verts.shape[0]
        nf = faces.shape[0]
        ab = base + inverse[:nf]
        bc = base + inverse[nf:2 * nf]
        ca = base + inverse[2 * nf:]
        a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
        faces = np.concatenate([
            np.stack([a, ab, ca], axis=1),
            np.stack([b, bc, ab], axis=1),
            np.stack([c, ca, bc], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ])
        verts = np.concatenate([verts, mid])
    return verts, faces


def icosphere(level: int = DEFAULT_LEVEL) -> DirectionSet:
    """Icosphere vertex directions, each weighted 4*pi / count."""
    verts, _ = icosphere_mesh(level)
    n = verts.shape[0]
    return DirectionSet(verts, np.full(n, 4.0 * math.pi / n), "sphere")


def horizontal_ring(n: int = DEFAULT_RING) -> DirectionSet:
    if n < MIN_RING:
        raise ValueError(f"ring needs at least {MIN_RING} directions")
    az = 2.0 * math.pi * np.arange(n) / n
    dirs = np.stack([np.cos(az), np.sin(az), np.zeros(n)], axis=1)
    return DirectionSet(dirs, np.full(n, 2.0 * math.pi / n), "ring")


def vantage_grid(room_floor_polygon, spacing: float = DEFAULT_SPACING, height: float = 1.2,
                 floor_height: float | None = None) -> np.ndarray:
    """Grid points ``height`` above the floor, strictly inside the polygon.

    The lattice has a node on the polygon centroid, so it is symmetric about
    it.  Each kept point is at least half a spacing from every wall, i.e. its
    grid cell lies inside the room.  ``room_floor_polygon`` may be (K, 2) or (K, 3); for the 2D form the
    floor level comes from ``floor_height`` (default 0).  Points are ordered
    row by row, y then x.
    """
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    if not height > 0:
        raise ValueError("height must be positive")
    poly = np.asarray(room_floor_polygon, dtype=np.float64)
    if poly.ndim != 2 or poly.shape[0] < 3 or poly.shape[1] not in (2, 3):
        raise SceneError("floor polygon must be a list of at least 3 points")
    if floor_height is None:
        floor_height = float(poly[:, 2].mean()) if poly.shape[1] == 3 else 0.0
        if poly.shape[1] == 3 and np.ptp(poly[:, 2]) > 1e-3:
            raise SceneError("floor polygon is not horizontal")
    xy = poly[:, :2]
    cx, cy = polygon_centroid(xy)
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    ki = np.arange(math.floor((lo[0] - cx) / spacing) - 1, math.ceil((hi[0] - cx) / spacing) + 2)
    kj = np.arange(math.floor((lo[1] - cy) / spacing) - 1, math.ceil((hi[1] - cy) / spacing) + 2)
    jj, ii = np.meshgrid(kj, ki, indexing="ij")
    pts = np.stack([cx + ii.ravel() * spacing, cy + jj.ravel() * spacing], axis=1)
    pts = pts[points_in_polygon(pts, xy, margin=0.5 * spacing * (1 - 1e-9))]
    if pts.shape[0] == 0:
        raise SceneError("empty grid")
    z = np.full((pts.shape[0], 1), floor_height + height)
    return np.hstack([pts, z])
