import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from en17037.sampling import horizontal_ring, icosphere, icosphere_mesh, vantage_grid
from en17037.scene import SceneError, points_in_polygon


def nn_ratio(dirs):
    _, idx = cKDTree(dirs).query(dirs, k=2)
    ang = np.arccos(np.clip(np.einsum("ij,ij->i", dirs, dirs[idx[:, 1]]), -1, 1))
    return ang.max() / ang.min()


@pytest.mark.parametrize("level", range(7))
def test_icosphere_count_and_weights(level):
    s = icosphere(level)
    assert len(s) == 10 * 4 ** level + 2
    assert s.weights.sum() == pytest.approx(4 * math.pi, rel=1e-9)
    np.testing.assert_allclose(np.linalg.norm(s.directions, axis=1), 1.0, atol=1e-12)
    assert len(np.unique(s.directions.round(12), axis=0)) == len(s)


@pytest.mark.parametrize("level", range(1, 7))
def test_icosphere_homogeneity(level):
    assert nn_ratio(icosphere(level).directions) <= 1.3


def test_icosphere_faces_are_closed_surface():
    verts, faces = icosphere_mesh(3)
    assert len(verts) - 3 * len(faces) // 2 + len(faces) == 2  # Euler characteristic


def test_icosphere_too_deep():
    with pytest.raises(ValueError, match="subdivision too deep"):
        icosphere(9)


def test_ring():
    r = horizontal_ring(8)
    assert np.allclose(r.directions[0], [1, 0, 0]) and np.allclose(r.directions[2], [0, 1, 0])
    r = horizontal_ring(3600)
    az = np.degrees(np.arctan2(r.directions[:, 1], r.directions[:, 0])) % 360
    np.testing.assert_allclose(np.diff(az), 0.1, atol=1e-9)
    assert np.abs(r.directions[:, 2]).max() <= 1e-12
    assert np.linalg.norm(r.directions.sum(axis=0)) < 1e-9
    with pytest.raises(ValueError):
        horizontal_ring(4)


def test_grid_shoebox():
    poly = [[0, 0], [3.6, 0], [3.6, 8.2], [0, 8.2]]
    pts = vantage_grid(poly, 0.6, 1.7, floor_height=7.0)
    assert len(pts) == 5 * 13
    assert np.allclose(pts[:, 2], 8.7)
    assert points_in_polygon(pts[:, :2], np.array(poly, float)).all()
    # symmetric about the centroid
    np.testing.assert_allclose(pts[:, :2].mean(axis=0), [1.8, 4.1], atol=1e-12)
    # ordered by y, then x
    order = np.lexsort((pts[:, 0], pts[:, 1]))
    assert (order == np.arange(len(pts))).all()


def test_grid_enumeration_oracle():
    """Brute enumeration of lattice nodes against an L-shaped room."""
    poly = np.array([[0, 0], [5, 0], [5, 2], [2, 2], [2, 4], [0, 4]], float)
    spacing = 0.5
    pts = vantage_grid(poly, spacing, 1.2)
    # area-weighted centroid of the two rectangles [0,5]x[0,2] and [0,2]x[2,4]
    cx = (10 * 2.5 + 4 * 1.0) / 14
    cy = (10 * 1.0 + 4 * 3.0) / 14
    expected = []
    for j in range(-20, 21):
        for i in range(-20, 21):
            x, y = cx + i * spacing, cy + j * spacing
            in_a = 0.25 <= x <= 4.75 and 0.25 <= y <= 1.75
            in_b = 0.25 <= x <= 1.75 and 0.25 <= y <= 3.75
            in_corner = x <= 1.75 and 1.75 < y <= 2.25  # where the two rectangles join
            if in_a or in_b or in_corner and x >= 0.25:
                expected.append((x, y))
    assert sorted(map(tuple, pts[:, :2].round(9))) == sorted((round(x, 9), round(y, 9)) for x, y in expected)
    assert points_in_polygon(pts[:, :2], poly).all()


def test_grid_empty():
    with pytest.raises(SceneError, match="empty grid"):
        vantage_grid([[0, 0], [1, 0], [1, 1], [0, 1]], 2.0, 1.2)
