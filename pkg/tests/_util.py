from __future__ import annotations

import math

import numpy as np

from en17037.fixtures import MeshParts, Shoebox, add_ground, box_quads, fixture_scene
from en17037.scene import LayerTag


def random_soup(rng: np.random.Generator, n: int, size: float = 10.0, spread: float = 2.0):
    centres = rng.uniform(-size, size, (n, 1, 3))
    return centres + rng.normal(scale=spread, size=(n, 3, 3))


def random_rays(rng: np.random.Generator, n: int, size: float = 10.0):
    origins = rng.uniform(-1.5 * size, 1.5 * size, (n, 3))
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return origins, dirs


def plane_oracle(o, d, v0, v1, v2):
    """Ray/triangle distance from the plane equation and signed sub-areas.

    Returns (t, min_barycentric) or None for a ray parallel to the plane.
    Plain Python floats, no numpy.
    """
    sub = lambda a, b: [a[i] - b[i] for i in range(3)]  # noqa: E731
    dot = lambda a, b: sum(a[i] * b[i] for i in range(3))  # noqa: E731

    def cross(a, b):
        return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]

    n = cross(sub(v1, v0), sub(v2, v0))
    denom = dot(n, d)
    if abs(denom) < 1e-12 * math.sqrt(dot(n, n)):
        return None
    t = dot(n, sub(v0, o)) / denom
    p = [o[i] + t * d[i] for i in range(3)]
    area2 = dot(n, n)
    bary = [dot(cross(sub(b, a), sub(p, a)), n) / area2 for a, b in ((v1, v2), (v2, v0), (v0, v1))]
    return t, min(bary)


def open_field(half: float = 2000.0, eye: float = 1.7, box: float = 1.0) -> tuple:
    """Ground plane with a window-tagged cube around the vantage point."""
    parts = MeshParts()
    parts.add("glass", LayerTag.WINDOW,
              box_quads((-box, -box, eye - box), (box, box, eye + box)))
    add_ground(parts, half=half, cells=4)
    return parts.to_scene(), np.array([0.0, 0.0, eye])


def room_scene(width: float, depth: float = 8.0, window_width: float | None = None,
               ground: bool = False) -> tuple:
    box = Shoebox(width=width, depth=depth, window_width=window_width or width)
    parts = box.parts()
    if ground:
        add_ground(parts, half=200.0, cells=4)
    return box, parts.to_scene()


def fixture_parts(**kw) -> MeshParts:
    return fixture_scene(**kw)
