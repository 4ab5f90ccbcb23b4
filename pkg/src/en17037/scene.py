"""Semantic scene loading: Wavefront OBJ geometry plus a layer-map config."""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import yaml

from .geometry import AccelStructure, triangle_areas

log = logging.getLogger(__name__)

PLANARITY_TOL = 1e-3


class SceneError(ValueError):
    """Invalid scene geometry or layer configuration."""


class LayerTag(str, enum.Enum):
    WINDOW = "window"
    INTERIOR = "interior"
    GROUND = "ground"
    LANDSCAPE = "landscape"


# Sky is a ray miss and never tags geometry.
SKY = "sky"


@dataclass(frozen=True)
class LayerInfo:
    tag: LayerTag
    name: str


@dataclass(frozen=True)
class WindowAperture:
    boundary: np.ndarray  # (K, 3)
    normal: np.ndarray  # unit, pointing outdoors
    sill_height_m: float
    floor_height_m: float

    def __post_init__(self):
        b = np.array(self.boundary, dtype=np.float64).reshape(-1, 3)
        n = np.array(self.normal, dtype=np.float64).reshape(3)
        if b.shape[0] < 3 or not np.isfinite(b).all():
            raise SceneError("window boundary needs at least 3 finite vertices")
        norm = np.linalg.norm(n)
        if not np.isfinite(norm) or norm == 0:
            raise SceneError("window normal must be a non-zero vector")
        n = n / norm
        c = b.mean(axis=0)
        if np.abs((b - c) @ n).max() > PLANARITY_TOL:
            raise SceneError("window boundary is not planar within 1 mm of its normal plane")
        if _polygon_area(self._to_2d(b, c, n)) <= 0:
            raise SceneError("window boundary is degenerate")
        b.setflags(write=False)
        n.setflags(write=False)
        object.__setattr__(self, "boundary", b)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "sill_height_m", float(self.sill_height_m))
        object.__setattr__(self, "floor_height_m", float(self.floor_height_m))

    @staticmethod
    def _axes(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        up = np.array([0.0, 0.0, 1.0])
        h = np.cross(up, n)
        if np.linalg.norm(h) < 1e-9:  # roof light: any horizontal axis will do
            h = np.array([1.0, 0.0, 0.0])
        h = h / np.linalg.norm(h)
        return h, np.cross(n, h)

    @classmethod
    def _to_2d(cls, pts, origin, n):
        h, v = cls._axes(n)
        d = np.asarray(pts) - origin
        return np.stack([d @ h, d @ v], axis=-1)

    @property
    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        """In-plane (horizontal, upward) unit axes."""
        return self._axes(self.normal)

    @property
    def origin(self) -> np.ndarray:
        return self.boundary.mean(axis=0)

    def to_plane(self, pts) -> np.ndarray:
        return self._to_2d(pts, self.origin, self.normal)

    def from_plane(self, uv) -> np.ndarray:
        h, v = self.axes
        uv = np.asarray(uv, dtype=np.float64)
        return self.origin + uv[..., :1] * h + uv[..., 1:2] * v

    def contains(self, pts, margin: float = 0.0) -> np.ndarray:
        """In-plane containment of points already on the window plane."""
        return points_in_polygon(self.to_plane(pts), self.to_plane(self.boundary), margin)

    @property
    def top_z(self) -> float:
        return float(self.boundary[:, 2].max())

    @property
    def bottom_z(self) -> float:
        return float(self.boundary[:, 2].min())


@dataclass(frozen=True)
class LayerConfig:
    layers: Mapping[str, LayerTag]
    windows: Sequence[WindowAperture] = ()


@dataclass(frozen=True)
class SemanticScene:
    vertices: np.ndarray  # (M, 3, 3)
    layer_ids: np.ndarray  # (M,)
    layer_table: Sequence[LayerInfo]
    accel: AccelStructure = field(repr=False)
    extent: float
    windows: Sequence[WindowAperture] = ()
    dropped_faces: int = 0

    @classmethod
    def from_arrays(cls, vertices, layer_ids, layer_table, windows=()) -> "SemanticScene":
        vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3, 3)
        layer_ids = np.asarray(layer_ids, dtype=np.int64)
        table = tuple(layer_table)
        if layer_ids.size and (layer_ids.min() < 0 or layer_ids.max() >= len(table)):
            raise SceneError("layer id without an entry in the layer table")
        accel = AccelStructure(vertices, layer_ids)
        return cls(accel.vertices, accel.layers, table, accel, bounding_diameter(vertices),
                   tuple(windows))

    def __len__(self) -> int:
        return self.vertices.shape[0]

    def tag_of(self, layer_id: int) -> LayerTag:
        return self.layer_table[layer_id].tag

    def layers_with(self, tag: LayerTag) -> list[int]:
        return [i for i, info in enumerate(self.layer_table) if info.tag is tag]

    @property
    def triangle_tags(self) -> list[LayerTag]:
        return [self.layer_table[i].tag for i in self.layer_ids]

    def tag_codes(self) -> np.ndarray:
        """Per-layer-id index into ``list(LayerTag)``."""
        order = list(LayerTag)
        return np.array([order.index(info.tag) for info in self.layer_table], dtype=np.int64)


def bounding_diameter(vertices: np.ndarray) -> float:
    """Diameter of the sphere centred on the bounding box that holds every vertex."""
    pts = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    centre = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
    return float(2.0 * np.sqrt(((pts - centre) ** 2).sum(axis=1).max()))


def far_cap(scene: SemanticScene, override: float | None = None) -> float:
    """Maximum ray distance: ``override`` when given, else the scene extent."""
    if override is None:
        return scene.extent
    override = float(override)
    if not override > 0:
        raise SceneError("far-cap override must be positive")
    return override


# -- polygons ---------------------------------------------------------------

def _polygon_area(poly2d: np.ndarray) -> float:
    x, y = poly2d[:, 0], poly2d[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def polygon_centroid(poly2d) -> np.ndarray:
    p = np.asarray(poly2d, dtype=np.float64)
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2.0
    if a == 0:
        raise SceneError("degenerate polygon")
    return np.array([((x + xn) * cross).sum() / (6 * a), ((y + yn) * cross).sum() / (6 * a)])


def _segment_distance(pts, a, b):
    ab = b - a
    denom = float(ab @ ab)
    t = np.clip(((pts - a) @ ab) / denom, 0.0, 1.0) if denom > 0 else np.zeros(len(pts))
    proj = a + t[:, None] * ab
    return np.linalg.norm(pts - proj, axis=1)


def points_in_polygon(pts, poly, margin: float = 0.0) -> np.ndarray:
    """Even-odd containment that also rejects points within ``margin`` of an edge.

    A tiny floor on ``margin`` makes the test strict: points on the boundary
    are outside.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))[:, :2]
    poly = np.asarray(poly, dtype=np.float64)[:, :2]
    scale = max(1.0, float(np.abs(poly).max()))
    margin = max(margin, 1e-9 * scale)
    inside = np.zeros(len(pts), dtype=bool)
    near = np.zeros(len(pts), dtype=bool)
    x, y = pts[:, 0], pts[:, 1]
    k = len(poly)
    for i in range(k):
        a, b = poly[i], poly[(i + 1) % k]
        crosses = (a[1] > y) != (b[1] > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
        inside ^= crosses & (x < xint)
        near |= _segment_distance(pts, a, b) <= margin
    return inside & ~near


# -- loading ----------------------------------------------------------------

def _parse_tag(name: str, value) -> LayerTag:
    try:
        return LayerTag(str(value).strip().lower())
    except ValueError:
        allowed = "|".join(t.value for t in LayerTag)
        raise SceneError(f"layer {name!r}: unknown tag {value!r} (expected {allowed})") from None


def load_layer_config(path: str | Path) -> LayerConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"layer map not found: {path}")
    with path.open(encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict) or not isinstance(raw.get("layers"), dict):
        raise SceneError(f"{path}: missing 'layers' mapping")
    layers = {str(k): _parse_tag(str(k), v) for k, v in raw["layers"].items()}
    windows = []
    for i, w in enumerate(raw.get("windows") or []):
        try:
            windows.append(WindowAperture(
                boundary=w["boundary"], normal=w["normal"],
                sill_height_m=w["sill_height_m"], floor_height_m=w["floor_height_m"]))
        except KeyError as exc:
            raise SceneError(f"{path}: window {i} lacks field {exc.args[0]!r}") from None
    return LayerConfig(layers, tuple(windows))


@dataclass
class _ObjData:
    vertices: list
    faces: list  # (vertex indices, group, material, line number)


def _parse_index(token: str, n_vertices: int, lineno: int) -> int:
    ref = token.split("/")[0]
    try:
        i = int(ref)
    except ValueError:
        raise SceneError(f"line {lineno}: bad face index {token!r}") from None
    if i < 0:
        i = n_vertices + i
    else:
        i -= 1
    if not 0 <= i < n_vertices:
        raise SceneError(f"line {lineno}: face index {token!r} out of range")
    return i


def read_obj(path: str | Path) -> _ObjData:
    """Parse the ``v``/``f``/``g``/``usemtl`` subset of Wavefront OBJ."""
    vertices: list = []
    faces: list = []
    group = material = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split("#", 1)[0].split()
            if not parts:
                continue
            kind = parts[0]
            if kind == "v":
                try:
                    xyz = [float(s) for s in parts[1:4]]
                except ValueError:
                    raise SceneError(f"line {lineno}: malformed vertex") from None
                if len(xyz) != 3:
                    raise SceneError(f"line {lineno}: vertex needs 3 coordinates")
                if not all(math.isfinite(c) for c in xyz):
                    raise SceneError(f"line {lineno}: non-finite vertex")
                vertices.append(xyz)
            elif kind == "f":
                idx = [_parse_index(tok, len(vertices), lineno) for tok in parts[1:]]
                if len(idx) < 3:
                    raise SceneError(f"line {lineno}: face needs at least 3 vertices")
                faces.append((idx, group, material, lineno))
            elif kind == "g":
                group = " ".join(parts[1:]) or None
            elif kind == "usemtl":
                material = " ".join(parts[1:]) or None
    return _ObjData(vertices, faces)


def load_scene(mesh_file: str | Path, layer_map: LayerConfig | str | Path) -> SemanticScene:
    """Load an OBJ mesh and tag every face through ``layer_map``.

    A face's group name is looked up first, then its material name.  Polygons
    are fan-triangulated; zero-area triangles are dropped and counted.
    """
    if not isinstance(layer_map, LayerConfig):
        layer_map = load_layer_config(layer_map)
    mesh_file = Path(mesh_file)
    if not mesh_file.is_file():
        raise FileNotFoundError(f"scene file not found: {mesh_file}")
    obj = read_obj(mesh_file)

    names: dict[str, int] = {}
    table: list[LayerInfo] = []
    unmapped: list[str] = []
    tris: list[list[int]] = []
    tri_layer: list[int] = []
    for idx, group, material, _ in obj.faces:
        name = next((n for n in (group, material) if n is not None and n in layer_map.layers), None)
        if name is None:
            missing = [n for n in (group, material) if n is not None] or ["(unnamed)"]
            unmapped.extend(n for n in missing if n not in unmapped)
            continue
        if name not in names:
            names[name] = len(table)
            table.append(LayerInfo(layer_map.layers[name], name))
        for k in range(1, len(idx) - 1):
            tris.append([idx[0], idx[k], idx[k + 1]])
            tri_layer.append(names[name])
    if unmapped:
        raise SceneError("unmapped group/material names: " + ", ".join(sorted(unmapped)))
    if not tris:
        raise SceneError("empty scene")

    verts = np.asarray(obj.vertices, dtype=np.float64)[np.asarray(tris)]
    keep = triangle_areas(verts) > 0
    dropped = int((~keep).sum())
    if dropped:
        log.warning("dropped %d degenerate triangle(s) from %s", dropped, mesh_file)
    scene = SemanticScene.from_arrays(verts[keep], np.asarray(tri_layer)[keep], table,
                                      layer_map.windows)
    return SemanticScene(scene.vertices, scene.layer_ids, scene.layer_table, scene.accel,
                         scene.extent, scene.windows, dropped)


def export_triangles(scene: SemanticScene) -> list[tuple[np.ndarray, LayerTag]]:
    return [(scene.vertices[i], scene.tag_of(int(k))) for i, k in enumerate(scene.layer_ids)]
