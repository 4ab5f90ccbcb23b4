"""Synthetic test scenes: a shoebox room with one window and optional context.

The bundled fixture mirrors a typical assessment: a 3.6 x 8.2 x 2.9 m room
on the third floor, a south-facing window in the y = 0 wall, a facade slab
16 m in front of it and a handful of surrounding blocks on a flat ground.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .scene import LayerConfig, LayerInfo, LayerTag, SemanticScene, WindowAperture

Quad = np.ndarray  # (4, 3)


def grid_quads(origin, u, v, nu: int = 1, nv: int = 1) -> list[Quad]:
    """Split the parallelogram ``origin + s*u + t*v`` into ``nu`` x ``nv`` quads."""
    o, u, v = (np.asarray(a, dtype=np.float64) for a in (origin, u, v))
    out = []
    for i in range(nu):
        for j in range(nv):
            a = o + u * (i / nu) + v * (j / nv)
            du, dv = u / nu, v / nv
            out.append(np.array([a, a + du, a + du + dv, a + dv]))
    return out


def rect_xz(x0, x1, z0, z1, y, cell: float | None = None) -> list[Quad]:
    nu, nv = _cells(x1 - x0, cell), _cells(z1 - z0, cell)
    return grid_quads([x0, y, z0], [x1 - x0, 0, 0], [0, 0, z1 - z0], nu, nv)


def _cells(length: float, cell: float | None) -> int:
    return 1 if cell is None else max(1, math.ceil(length / cell - 1e-9))


def box_quads(lo, hi, cell: float | None = None, bottom: bool = True) -> list[Quad]:
    """The faces of an axis-aligned box, each split into ``cell``-sized quads."""
    (x0, y0, z0), (x1, y1, z1) = lo, hi
    dx, dy, dz = x1 - x0, y1 - y0, z1 - z0
    c = lambda n: _cells(n, cell)  # noqa: E731
    faces = [
        grid_quads([x0, y0, z1], [dx, 0, 0], [0, dy, 0], c(dx), c(dy)),
        grid_quads([x0, y0, z0], [dx, 0, 0], [0, 0, dz], c(dx), c(dz)),
        grid_quads([x0, y1, z0], [dx, 0, 0], [0, 0, dz], c(dx), c(dz)),
        grid_quads([x0, y0, z0], [0, dy, 0], [0, 0, dz], c(dy), c(dz)),
        grid_quads([x1, y0, z0], [0, dy, 0], [0, 0, dz], c(dy), c(dz)),
    ]
    if bottom:
        faces.append(grid_quads([x0, y0, z0], [dx, 0, 0], [0, dy, 0], c(dx), c(dy)))
    return [q for f in faces for q in f]


@dataclass
class MeshParts:
    """Named groups of quads, each mapped to a layer tag."""

    groups: dict[str, list[Quad]] = field(default_factory=dict)
    tags: dict[str, LayerTag] = field(default_factory=dict)
    windows: list[WindowAperture] = field(default_factory=list)

    def add(self, name: str, tag: LayerTag, quads: list[Quad]) -> None:
        self.groups.setdefault(name, []).extend(quads)
        self.tags[name] = tag

    @property
    def triangle_count(self) -> int:
        return 2 * sum(len(q) for q in self.groups.values())

    def triangles(self) -> tuple[np.ndarray, np.ndarray, list[LayerInfo]]:
        tris, ids, table = [], [], []
        for k, (name, quads) in enumerate(self.groups.items()):
            table.append(LayerInfo(self.tags[name], name))
            for q in quads:
                tris += [q[[0, 1, 2]], q[[0, 2, 3]]]
                ids += [k, k]
        return np.asarray(tris), np.asarray(ids, dtype=np.int64), table

    def to_scene(self) -> SemanticScene:
        verts, ids, table = self.triangles()
        return SemanticScene.from_arrays(verts, ids, table, tuple(self.windows))

    def layer_config(self) -> LayerConfig:
        return LayerConfig(dict(self.tags), tuple(self.windows))

    def write_obj(self, path: str | Path) -> None:
        lines = ["# synthetic assessment scene"]
        base = 1
        for name, quads in self.groups.items():
            lines.append(f"g {name}")
            for q in quads:
                lines += [f"v {x:.6f} {y:.6f} {z:.6f}" for x, y, z in q]
            for i in range(len(quads)):
                a = base + 4 * i
                lines.append(f"f {a} {a + 1} {a + 2} {a + 3}")
            base += 4 * len(quads)
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

    def write_layer_map(self, path: str | Path) -> None:
        doc = {
            "layers": {name: tag.value for name, tag in self.tags.items()},
            "windows": [{
                "boundary": np.asarray(w.boundary).round(6).tolist(),
                "normal": np.asarray(w.normal).round(12).tolist(),
                "sill_height_m": float(w.sill_height_m),
                "floor_height_m": float(w.floor_height_m),
            } for w in self.windows],
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yaml.safe_dump(doc, fh, sort_keys=False)


@dataclass(frozen=True)
class Shoebox:
    width: float = 3.6  # along x
    depth: float = 8.2  # along y, away from the window wall
    height: float = 2.9
    floor_z: float = 7.0
    window_width: float = 3.0
    sill: float = 0.8
    head: float = 2.6
    window_offset: float = 0.0  # window centre shift along x from the wall centre

    @property
    def window_x(self) -> tuple[float, float]:
        c = self.width / 2 + self.window_offset
        return c - self.window_width / 2, c + self.window_width / 2

    @property
    def floor_polygon(self) -> list[list[float]]:
        return [[0.0, 0.0], [self.width, 0.0], [self.width, self.depth], [0.0, self.depth]]

    def window(self) -> WindowAperture:
        x0, x1 = self.window_x
        z0, z1 = self.floor_z + self.sill, self.floor_z + self.head
        return WindowAperture(
            boundary=np.array([[x0, 0, z0], [x1, 0, z0], [x1, 0, z1], [x0, 0, z1]], dtype=float),
            normal=np.array([0.0, -1.0, 0.0]),
            sill_height_m=self.sill, floor_height_m=self.floor_z)

    def parts(self, cell: float | None = None) -> MeshParts:
        w, d, h, f = self.width, self.depth, self.height, self.floor_z
        x0, x1 = self.window_x
        s, t = f + self.sill, f + self.head
        if not (0 <= x0 < x1 <= w and 0 <= self.sill < self.head <= h):
            raise ValueError("window does not fit in the wall")
        room = box_quads([0, 0, f], [w, d, f + h], cell)
        # the box's y = 0 wall is replaced by a wall with an opening
        room = [q for q in room if not np.allclose(q[:, 1], 0.0)]
        wall = []
        for a, b, c, e in ((0, w, f, s), (0, w, t, f + h), (0, x0, s, t), (x1, w, s, t)):
            if b - a > 1e-9 and e - c > 1e-9:
                wall += rect_xz(a, b, c, e, 0.0, cell)
        parts = MeshParts()
        parts.add("room", LayerTag.INTERIOR, room + wall)
        parts.add("window", LayerTag.WINDOW, rect_xz(x0, x1, s, t, 0.0))
        parts.windows.append(self.window())
        return parts


def add_ground(parts: MeshParts, half: float = 180.0, cells: int = 36, z: float = 0.0,
               centre=(0.0, 0.0)) -> MeshParts:
    cx, cy = centre
    parts.add("ground", LayerTag.GROUND,
              grid_quads([cx - half, cy - half, z], [2 * half, 0, 0], [0, 2 * half, 0], cells, cells))
    return parts


# (name, lower corner, upper corner) of the context blocks around the room
CONTEXT = (
    ("building_host", (-6.0, 0.05, 0.0), (9.6, 14.0, 6.9)),
    ("building_facade", (-20.0, -19.0, 0.0), (24.0, -16.0, 12.0)),
    ("building_tower", (30.0, -70.0, 0.0), (45.0, -50.0, 40.0)),
    ("building_low", (-60.0, -45.0, 0.0), (-30.0, -25.0, 8.0)),
)


def fixture_scene(box: Shoebox | None = None, context: bool = True, cell: float = 2.5,
                  ground_cells: int = 36) -> MeshParts:
    """The bundled assessment scene: room, ground and four context buildings."""
    box = box or Shoebox()
    parts = box.parts(cell=1.0)
    add_ground(parts, cells=ground_cells, centre=(box.width / 2, 0.0))
    if context:
        for name, lo, hi in CONTEXT:
            parts.add(name, LayerTag.LANDSCAPE, box_quads(lo, hi, cell, bottom=False))
    return parts


def run_config(box: Shoebox, scene_file: str = "shoebox.obj",
               layer_file: str = "layers.yaml") -> dict:
    return {
        "scene": scene_file,
        "layer_map": layer_file,
        "location": {"latitude": 51.92, "longitude": 4.48, "utc_offset": 1.0,
                     "north_azimuth_deg": 0.0},
        "room": {"floor_polygon": box.floor_polygon, "floor_height_m": box.floor_z},
        "grid": {"spacing_m": 0.5, "heights_m": [1.2, 1.7]},
        "view": {"window": 0, "icosphere_level": 5, "ring_size": 3600,
                 "thresholds_sr": [0.0, 0.01, 0.05, 0.1, 0.5], "layer_threshold_sr": 0.0,
                 "distance_rule": "median", "far_cap_m": None,
                 "obstruction_sampling": "hemisphere", "window_samples": 5,
                 "window_inset_m": 0.05},
        "sunlight": {"timestep_min": 5, "year": 2023, "period": None, "evaluation_day": None},
        "output_dir": "out",
    }


def write_fixture(directory: str | Path, box: Shoebox | None = None, context: bool = True) -> Path:
    """Write ``shoebox.obj``, ``layers.yaml`` and ``run.yaml``; return the config path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    box = box or Shoebox()
    parts = fixture_scene(box, context=context)
    parts.write_obj(directory / "shoebox.obj")
    parts.write_layer_map(directory / "layers.yaml")
    cfg = directory / "run.yaml"
    with open(cfg, "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(run_config(box), fh, sort_keys=False)
    return cfg


if __name__ == "__main__":
    import sys

    print(write_fixture(sys.argv[1] if len(sys.argv) > 1 else "fixtures/shoebox"))
