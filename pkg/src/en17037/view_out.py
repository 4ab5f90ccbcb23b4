"""View-out indicators: sight angle, distance to obstructions, view layers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .geometry import SELF_EPS, Hit
from .sampling import DirectionSet
from .scene import LayerTag, SceneError, SemanticScene, WindowAperture, far_cap, points_in_polygon

FOUR_PI = 4.0 * math.pi
# Outcome keys of a view ray; "blocked" rays never leave the room.
OUTCOMES = ("ground", "landscape", "sky", "interior", "blocked")
VIEW_LAYERS = ("ground", "landscape", "sky")
_GROUND, _LANDSCAPE, _SKY, _INTERIOR, _BLOCKED = range(5)
_TAG_OUTCOME = {
    LayerTag.GROUND: _GROUND,
    LayerTag.LANDSCAPE: _LANDSCAPE,
    LayerTag.INTERIOR: _INTERIOR,
}

WINDOW_SAMPLES = 5
WINDOW_INSET = 0.05
# Window surface samples start this far indoors so their rays cross the pane.
WINDOW_STANDOFF = 0.01
_POINT_BATCH = 8


@dataclass(frozen=True)
class ObstructionStats:
    min: float
    median: float
    max: float
    sample_count: int

    @classmethod
    def from_distances(cls, d) -> "ObstructionStats | None":
        d = np.asarray(d, dtype=np.float64)
        if d.size == 0:
            return None
        return cls(float(d.min()), float(np.median(d)), float(d.max()), int(d.size))


@dataclass
class ViewPointResult:
    point: np.ndarray
    sight_angle_deg: float
    layer_solid_angles: dict[str, float]
    visible_layers: int
    threshold_sr: float
    # window-passing sphere rays; sky escapes are capped at the far cap
    per_ray_obstruction_distances: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    obstructed: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0, bool))

    def visible_layers_at(self, threshold_sr: float) -> int:
        return count_visible(self.layer_solid_angles, threshold_sr)


@dataclass
class WindowSampleRays:
    """Per-ray records from the window-surface obstruction sampling."""

    sample: np.ndarray  # (R,) window sample index
    origin: np.ndarray  # (R, 3)
    direction: np.ndarray  # (R, 3)
    delta0: np.ndarray
    delta1: np.ndarray
    outcome: np.ndarray  # index into OUTCOMES
    distance: np.ndarray

    @property
    def obstructed(self) -> np.ndarray:
        return self.outcome != _SKY


@dataclass
class ViewAssessment:
    grids: dict[float, list[ViewPointResult]]
    stats: ObstructionStats | None
    window_rays: WindowSampleRays
    far_cap: float
    threshold_sr: float


def count_visible(solid_angles: Mapping[str, float], threshold_sr: float) -> int:
    """Ground/landscape/sky layers that are present and reach ``threshold_sr``."""
    return sum(1 for k in VIEW_LAYERS if solid_angles.get(k, 0.0) > 0 and solid_angles[k] >= threshold_sr)


def ray_passes_window(hits: Sequence[Hit], scene_or_window_layers, far: float):
    """``(delta0, delta1)`` for a ray whose first hit is a window, else ``None``.

    ``delta1`` is the first non-window hit beyond the window, or ``far`` when
    the ray escapes to the sky.
    """
    window_layers = _window_layer_set(scene_or_window_layers)
    if not hits or hits[0].layer_id not in window_layers:
        return None
    for h in hits[1:]:
        if h.layer_id not in window_layers:
            return hits[0].t, h.t
    return hits[0].t, far


def _window_layer_set(obj) -> set[int]:
    if isinstance(obj, SemanticScene):
        return set(obj.layers_with(LayerTag.WINDOW))
    return set(obj)


def obstruction_distance(delta0: float, delta1: float, ray_dir, window_normal) -> float:
    """Distance to the obstruction measured perpendicular to the window."""
    cos = float(np.dot(ray_dir, window_normal))
    return max(0.0, (delta1 - delta0) * cos)


def trace_through_window(scene: SemanticScene, origins, dirs, far: float):
    """Batched window passage test.

    Returns ``(outcome, delta0, delta1)``: outcome indexes :data:`OUTCOMES`;
    ``delta0``/``delta1`` are NaN for blocked rays and ``delta1 == far`` for
    sky escapes.
    """
    origins = np.ascontiguousarray(np.broadcast_to(origins, np.shape(dirs)), dtype=np.float64)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    n = dirs.shape[0]
    is_window = np.zeros(len(scene.layer_table), dtype=bool)
    is_window[scene.layers_with(LayerTag.WINDOW)] = True
    outcome_of_layer = np.array([_TAG_OUTCOME.get(info.tag, -1) for info in scene.layer_table])

    outcome = np.full(n, _BLOCKED, dtype=np.int64)
    delta0 = np.full(n, np.nan)
    delta1 = np.full(n, np.nan)
    tri, t, start = scene.accel.nearest(origins, dirs, far)
    passing = np.flatnonzero((tri >= 0) & is_window[scene.layer_ids[np.maximum(tri, 0)]])
    delta0[passing] = t[passing]
    lo = start[passing] + SELF_EPS
    active = passing
    while active.size:
        tri, t, start = scene.accel.nearest(origins[active], dirs[active], far, t_min=lo)
        miss = tri < 0
        outcome[active[miss]] = _SKY
        delta1[active[miss]] = far
        layer = scene.layer_ids[np.maximum(tri, 0)]
        window = ~miss & is_window[layer]
        done = ~miss & ~window
        outcome[active[done]] = outcome_of_layer[layer[done]]
        delta1[active[done]] = t[done]
        lo = start[window] + SELF_EPS
        active = active[window]
    return outcome, delta0, delta1


def _require_window(scene: SemanticScene):
    if not scene.layers_with(LayerTag.WINDOW):
        raise SceneError("scene has no window-tagged geometry")


def horizontal_sight_angle(vantage, scene: SemanticScene, ring: DirectionSet,
                           far: float | None = None) -> float:
    """Degrees of the horizontal circle whose rays pass the window."""
    if ring.kind != "ring":
        raise ValueError("horizontal sight angle needs a ring direction set")
    far = far_cap(scene) if far is None else far
    outcome, _, _ = trace_through_window(scene, np.asarray(vantage, float), ring.directions, far)
    passing = int((outcome != _BLOCKED).sum())
    return 360.0 * passing / len(ring)


def _solid_angles(outcome: np.ndarray, weights: np.ndarray) -> dict[str, float]:
    sums = np.bincount(outcome, weights=weights, minlength=len(OUTCOMES))
    return {k: float(v) for k, v in zip(OUTCOMES, sums)}


def view_layers(vantage, scene: SemanticScene, sphere: DirectionSet, threshold_sr: float = 0.0,
                far: float | None = None) -> tuple[int, dict[str, float]]:
    """Visible view-layer count and the solid angle of every ray outcome."""
    if sphere.kind != "sphere":
        raise ValueError("view layers need a sphere direction set")
    if threshold_sr < 0:
        raise ValueError("threshold must be non-negative")
    far = far_cap(scene) if far is None else far
    outcome, _, _ = trace_through_window(scene, np.asarray(vantage, float), sphere.directions, far)
    sa = _solid_angles(outcome, sphere.weights)
    return count_visible(sa, threshold_sr), sa


def window_samples(window: WindowAperture, count: int = WINDOW_SAMPLES,
                   inset: float = WINDOW_INSET) -> np.ndarray:
    """Regular ``count`` x ``count`` grid on the window, ``inset`` from its edges."""
    uv = window.to_plane(window.boundary)
    lo = uv.min(axis=0) + inset
    hi = uv.max(axis=0) - inset
    if (hi < lo).any():
        raise SceneError("window too small for the sampling inset")
    u = np.linspace(lo[0], hi[0], count) if count > 1 else np.array([(lo[0] + hi[0]) / 2])
    v = np.linspace(lo[1], hi[1], count) if count > 1 else np.array([(lo[1] + hi[1]) / 2])
    vv, uu = np.meshgrid(v, u, indexing="ij")
    grid = np.stack([uu.ravel(), vv.ravel()], axis=1)
    grid = grid[points_in_polygon(grid, uv, margin=inset * (1 - 1e-9))]
    if grid.shape[0] == 0:
        raise SceneError("no window samples inside the boundary")
    return window.from_plane(grid)


def sample_window_obstructions(scene: SemanticScene, window: WindowAperture, sphere: DirectionSet,
                               far: float, count: int = WINDOW_SAMPLES, inset: float = WINDOW_INSET,
                               mode: str = "hemisphere") -> WindowSampleRays:
    """Trace rays outwards from a grid of points on the window's inner face."""
    pts = window_samples(window, count, inset) - WINDOW_STANDOFF * window.normal
    if mode == "hemisphere":
        fan = sphere.directions[sphere.directions @ window.normal > 0]
    elif mode == "normal":
        fan = window.normal[None, :]
    else:
        raise ValueError(f"unknown obstruction sampling mode {mode!r}")
    origins = np.repeat(pts, fan.shape[0], axis=0)
    dirs = np.tile(fan, (pts.shape[0], 1))
    sample = np.repeat(np.arange(pts.shape[0]), fan.shape[0])
    outcome, d0, d1 = trace_through_window(scene, origins, dirs, far)
    keep = outcome != _BLOCKED
    cos = dirs[keep] @ window.normal
    dist = np.maximum(0.0, (d1[keep] - d0[keep]) * cos)
    return WindowSampleRays(sample[keep], origins[keep], dirs[keep], d0[keep], d1[keep],
                            outcome[keep], dist)


def assess_view(scene: SemanticScene, window: WindowAperture, grids: Mapping[float, np.ndarray],
                sphere: DirectionSet, ring: DirectionSet, threshold_sr: float = 0.0,
                far: float | None = None, window_sample_count: int = WINDOW_SAMPLES,
                window_inset: float = WINDOW_INSET, obstruction_mode: str = "hemisphere",
                ) -> ViewAssessment:
    """All three view indicators for every grid point, plus obstruction statistics.

    ``grids`` maps eye height to an (N, 3) array of vantage points.
    """
    _require_window(scene)
    if sphere.kind != "sphere" or ring.kind != "ring":
        raise ValueError("assess_view needs a sphere and a ring direction set")
    if not grids or any(len(np.atleast_2d(p)) == 0 or np.size(p) == 0 for p in grids.values()):
        raise SceneError("empty grid")
    far = far_cap(scene) if far is None else far
    n_sphere = len(sphere)
    n_ring = len(ring)
    out: dict[float, list[ViewPointResult]] = {}
    for height, pts in grids.items():
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        results = []
        for s in range(0, len(pts), _POINT_BATCH):
            batch = pts[s:s + _POINT_BATCH]
            k = len(batch)
            o_sphere = np.repeat(batch, n_sphere, axis=0)
            d_sphere = np.tile(sphere.directions, (k, 1))
            oc, d0, d1 = trace_through_window(scene, o_sphere, d_sphere, far)
            o_ring = np.repeat(batch, n_ring, axis=0)
            d_ring = np.tile(ring.directions, (k, 1))
            oc_ring, _, _ = trace_through_window(scene, o_ring, d_ring, far)
            for i, p in enumerate(batch):
                sl = slice(i * n_sphere, (i + 1) * n_sphere)
                o_i = oc[sl]
                sa = _solid_angles(o_i, sphere.weights)
                passing = o_i != _BLOCKED
                cos = sphere.directions[passing] @ window.normal
                dist = np.maximum(0.0, (d1[sl][passing] - d0[sl][passing]) * cos)
                rho = int((oc_ring[i * n_ring:(i + 1) * n_ring] != _BLOCKED).sum())
                results.append(ViewPointResult(
                    point=p.copy(),
                    sight_angle_deg=360.0 * rho / n_ring,
                    layer_solid_angles=sa,
                    visible_layers=count_visible(sa, threshold_sr),
                    threshold_sr=threshold_sr,
                    per_ray_obstruction_distances=dist,
                    obstructed=o_i[passing] != _SKY,
                ))
        out[float(height)] = results
    rays = sample_window_obstructions(scene, window, sphere, far, window_sample_count,
                                      window_inset, obstruction_mode)
    stats = ObstructionStats.from_distances(rays.distance[rays.obstructed])
    return ViewAssessment(out, stats, rays, far, threshold_sr)
