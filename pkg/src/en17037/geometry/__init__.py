"""Triangle-mesh ray casting.

Intersections are double-sided and watertight along shared edges.  Hits
closer than :data:`SELF_EPS` to the ray origin are ignored, and hits within
``SELF_EPS`` of each other collapse into the one with the smallest triangle
index.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .. import _backend
from . import brute
from ._bvh import BVHArrays, build_bvh
from .constants import SELF_EPS

__all__ = [
    "SELF_EPS",
    "AccelStructure",
    "Hit",
    "Ray",
    "Triangle",
    "brute_force_trace_all",
    "brute_force_trace_first",
    "build_accel",
    "intersect_triangle",
    "trace_all",
    "trace_first",
]

_UNIT_TOL = 1e-9


def _vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64).reshape(3)
    a.setflags(write=False)
    return a


def triangle_areas(vertices: np.ndarray) -> np.ndarray:
    e1 = vertices[:, 1] - vertices[:, 0]
    e2 = vertices[:, 2] - vertices[:, 0]
    return 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)


@dataclass(frozen=True)
class Triangle:
    v0: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    layer_id: int = 0

    def __post_init__(self):
        for name in ("v0", "v1", "v2"):
            object.__setattr__(self, name, _vec3(getattr(self, name)))
        if not all(np.isfinite(v).all() for v in (self.v0, self.v1, self.v2)):
            raise ValueError("triangle has non-finite vertices")
        if self.area <= 0.0:
            raise ValueError("degenerate triangle (zero area)")

    @property
    def area(self) -> float:
        return float(0.5 * np.linalg.norm(np.cross(self.v1 - self.v0, self.v2 - self.v0)))

    def as_array(self) -> np.ndarray:
        return np.stack([self.v0, self.v1, self.v2])


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray
    t_max: float = np.inf

    def __post_init__(self):
        object.__setattr__(self, "origin", _vec3(self.origin))
        object.__setattr__(self, "direction", _vec3(self.direction))
        if abs(np.linalg.norm(self.direction) - 1.0) > _UNIT_TOL:
            raise ValueError("ray direction must be a unit vector")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


@dataclass(frozen=True)
class Hit:
    t: float
    triangle_index: int
    layer_id: int
    point: np.ndarray = field(repr=False)


def intersect_triangle(ray: Ray, tri: Triangle, index: int = 0) -> Hit | None:
    """Intersection of one ray with one triangle, within ``(SELF_EPS, t_max]``."""
    t = _backend.kernels().intersect_one(ray.origin, ray.direction, tri.v0, tri.v1, tri.v2)
    if not (SELF_EPS < t <= ray.t_max):
        return None
    return Hit(t, index, tri.layer_id, ray.at(t))


class AccelStructure:
    """Immutable BVH over a triangle soup with per-triangle layer ids."""

    def __init__(self, vertices: np.ndarray, layers: np.ndarray):
        vertices = np.array(vertices, dtype=np.float64).reshape(-1, 3, 3)
        layers = np.array(layers, dtype=np.int64).reshape(-1)
        if vertices.shape[0] == 0:
            raise ValueError("empty scene")
        if layers.shape[0] != vertices.shape[0]:
            raise ValueError("one layer id per triangle required")
        if not np.isfinite(vertices).all():
            raise ValueError("non-finite vertex")
        if (triangle_areas(vertices) <= 0).any():
            raise ValueError("degenerate triangle (zero area)")
        if (layers < 0).any():
            raise ValueError("negative layer id")
        vertices.setflags(write=False)
        layers.setflags(write=False)
        self.vertices = vertices
        self.layers = layers
        self.n_layers = int(layers.max()) + 1
        self.bvh: BVHArrays = build_bvh(vertices, layers)

    def __len__(self) -> int:
        return self.vertices.shape[0]

    def _skip_mask(self, skip_layers: Iterable[int]) -> np.ndarray:
        mask = np.zeros(self.n_layers, dtype=np.bool_)
        for layer in skip_layers:
            if 0 <= layer < self.n_layers:
                mask[layer] = True
        return mask

    def nearest(self, origins, dirs, t_max, skip_layers: Iterable[int] = (), t_min=SELF_EPS):
        """Batched nearest collapsed hit in ``(t_min, t_max]``.

        Returns ``(tri, t, t_start)`` arrays; ``tri`` is -1 for a miss.
        """
        origins = np.ascontiguousarray(origins, dtype=np.float64).reshape(-1, 3)
        dirs = np.ascontiguousarray(dirs, dtype=np.float64).reshape(-1, 3)
        n = origins.shape[0]
        if dirs.shape[0] != n:
            origins = np.ascontiguousarray(np.broadcast_to(origins, dirs.shape))
            n = dirs.shape[0]
        t_hi = np.ascontiguousarray(np.broadcast_to(np.asarray(t_max, dtype=np.float64), (n,)))
        t_lo = np.ascontiguousarray(np.broadcast_to(np.asarray(t_min, dtype=np.float64), (n,)))
        if n == 0:
            return np.empty(0, np.int64), np.empty(0), np.empty(0)
        return _backend.kernels().nearest_group(
            self.bvh, origins, dirs, t_lo, t_hi, self._skip_mask(skip_layers))

    def first_hits(self, origins, dirs, t_max, skip_layers: Iterable[int] = ()):
        """Batched :func:`trace_first`: ``(tri, t)`` arrays, ``tri == -1`` on a miss."""
        tri, t, _ = self.nearest(origins, dirs, t_max, skip_layers)
        return tri, t

    def all_hits(self, origins, dirs, t_max, max_hits: int = 1 << 20):
        """Batched :func:`trace_all` as a list of ``(t, tri)`` array pairs per ray."""
        origins = np.ascontiguousarray(origins, dtype=np.float64).reshape(-1, 3)
        dirs = np.ascontiguousarray(dirs, dtype=np.float64).reshape(-1, 3)
        if origins.shape[0] != dirs.shape[0]:
            origins = np.ascontiguousarray(np.broadcast_to(origins, dirs.shape))
        n = dirs.shape[0]
        t_hi = np.broadcast_to(np.asarray(t_max, dtype=np.float64), (n,)).copy()
        lo = np.full(n, SELF_EPS)
        ts: list[list[float]] = [[] for _ in range(n)]
        tris: list[list[int]] = [[] for _ in range(n)]
        active = np.arange(n)
        for _ in range(max_hits):
            if active.size == 0:
                break
            tri, t, start = self.nearest(origins[active], dirs[active], t_hi[active],
                                         t_min=lo[active])
            hit = tri >= 0
            for i, k, tt in zip(active[hit], tri[hit], t[hit]):
                ts[i].append(float(tt))
                tris[i].append(int(k))
            lo[active[hit]] = start[hit] + SELF_EPS
            active = active[hit]
        return [(np.asarray(a), np.asarray(b, dtype=np.int64)) for a, b in zip(ts, tris)]

    def _hit(self, ray: Ray, tri: int, t: float) -> Hit:
        return Hit(float(t), int(tri), int(self.layers[tri]), ray.at(t))


def build_accel(triangles: Sequence[Triangle]) -> AccelStructure:
    if len(triangles) == 0:
        raise ValueError("empty scene")
    vertices = np.stack([tri.as_array() for tri in triangles])
    layers = np.array([tri.layer_id for tri in triangles], dtype=np.int64)
    return AccelStructure(vertices, layers)


def trace_all(ray: Ray, scene: AccelStructure) -> list[Hit]:
    """Every collapsed hit along ``ray`` up to ``t_max``, nearest first."""
    t, tri = scene.all_hits(ray.origin, ray.direction[None], ray.t_max)[0]
    return [scene._hit(ray, k, tt) for tt, k in zip(t, tri)]


def trace_first(ray: Ray, scene: AccelStructure, skip_layers: Iterable[int] = ()) -> Hit | None:
    """Nearest hit whose layer is not in ``skip_layers``."""
    tri, t = scene.first_hits(ray.origin, ray.direction[None], ray.t_max, skip_layers)
    if tri[0] < 0:
        return None
    return scene._hit(ray, tri[0], t[0])


def brute_force_trace_all(ray: Ray, scene: AccelStructure, skip_layers: Iterable[int] = ()) -> list[Hit]:
    hits = brute.all_hits(ray.origin, ray.direction, ray.t_max, scene.vertices, scene.layers,
                          tuple(skip_layers))
    return [scene._hit(ray, k, t) for t, k in hits]


def brute_force_trace_first(ray: Ray, scene: AccelStructure, skip_layers: Iterable[int] = ()) -> Hit | None:
    hits = brute_force_trace_all(ray, scene, skip_layers)
    return hits[0] if hits else None
