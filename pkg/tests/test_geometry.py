import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from en17037 import _backend
from en17037.geometry import (SELF_EPS, AccelStructure, Ray, Triangle, brute_force_trace_all,
                              brute_force_trace_first, build_accel, intersect_triangle, trace_all,
                              trace_first)
from en17037.geometry._bvh import LEAF_SIZE, build_bvh
from _util import plane_oracle, random_rays, random_soup

coord = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
point = st.tuples(coord, coord, coord)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


class TestTypes:
    def test_ray_requires_unit_direction(self):
        with pytest.raises(ValueError):
            Ray((0, 0, 0), (0, 0, 2))

    def test_ray_requires_positive_t_max(self):
        with pytest.raises(ValueError):
            Ray((0, 0, 0), (0, 0, 1), t_max=0.0)

    def test_degenerate_triangle_rejected(self):
        with pytest.raises(ValueError):
            Triangle((0, 0, 0), (1, 1, 1), (2, 2, 2))

    def test_non_finite_triangle_rejected(self):
        with pytest.raises(ValueError):
            Triangle((0, 0, math.nan), (1, 0, 0), (0, 1, 0))

    def test_empty_scene(self):
        with pytest.raises(ValueError, match="empty scene"):
            build_accel([])


class TestIntersectTriangle:
    tri = Triangle((-1, -1, 5), (3, -1, 5), (-1, 3, 5))

    def test_axis_aligned_hit(self, backend):
        hit = intersect_triangle(Ray((0, 0, 0), (0, 0, 1)), self.tri)
        assert hit is not None and hit.t == pytest.approx(5.0, abs=1e-12)
        np.testing.assert_allclose(hit.point, [0, 0, 5], atol=1e-12)

    def test_behind_origin(self, backend):
        assert intersect_triangle(Ray((0, 0, 0), (0, 0, -1)), self.tri) is None

    def test_double_sided(self, backend):
        hit = intersect_triangle(Ray((0, 0, 10), (0, 0, -1)), self.tri)
        assert hit.t == pytest.approx(5.0)

    def test_t_max_inclusive(self, backend):
        assert intersect_triangle(Ray((0, 0, 0), (0, 0, 1), t_max=5.0), self.tri) is not None
        assert intersect_triangle(Ray((0, 0, 0), (0, 0, 1), t_max=4.999), self.tri) is None

    def test_self_epsilon(self, backend):
        assert intersect_triangle(Ray((0, 0, 5 - SELF_EPS / 2), (0, 0, 1)), self.tri) is None
        assert intersect_triangle(Ray((0, 0, 5 - 2 * SELF_EPS), (0, 0, 1)), self.tri) is not None

    def test_parallel_ray_misses(self, backend):
        assert intersect_triangle(Ray((0, 0, 5), (1, 0, 0)), self.tri) is None

    @settings(max_examples=300, deadline=None)
    @given(point, point, point, point, point)
    def test_matches_plane_oracle(self, a, b, c, o, target):
        area = np.linalg.norm(np.cross(np.subtract(b, a), np.subtract(c, a)))
        assume(area > 1.0)
        tri = Triangle(a, b, c)
        d = np.subtract(target, o)
        assume(np.linalg.norm(d) > 1e-3)
        d = unit(d)
        ref = plane_oracle(list(o), list(d), list(a), list(b), list(c))
        for name in ("numba", "numpy"):
            with _backend.use_backend(name):
                hit = intersect_triangle(Ray(o, d, t_max=1e4), tri)
            if ref is None:
                continue
            t, margin = ref
            if margin > 1e-6 and t > 1e-3:
                assert hit is not None, name
                assert hit.t == pytest.approx(t, rel=1e-7, abs=1e-7)
            elif margin < -1e-6 or t < -1e-3:
                assert hit is None, name


class TestWatertight:
    """Rays through shared edges and vertices of a closed fan never slip through."""

    def fan(self, k=12, r=2.0, z=3.0):
        ang = 2 * np.pi * np.arange(k) / k
        rim = np.stack([r * np.cos(ang), r * np.sin(ang), np.full(k, z)], axis=1)
        centre = np.array([0.0, 0.0, z])
        return np.stack([[centre, rim[i], rim[(i + 1) % k]] for i in range(k)]), rim

    def test_shared_edges(self, backend):
        verts, rim = self.fan()
        accel = AccelStructure(verts, np.zeros(len(verts), int))
        rng = np.random.default_rng(3)
        targets = np.concatenate([np.linspace(0, 1, 25)[1:-1, None] * rim[i] + (1 - np.linspace(0, 1, 25)[1:-1, None]) * [0, 0, 3.0]
                                  for i in range(len(rim))] + [[[0.0, 0.0, 3.0]]])
        origins = rng.uniform(-1, 1, (len(targets), 3)) * [1, 1, 0.5]
        dirs = targets - origins
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        tri, t = accel.first_hits(origins, dirs, 100.0)
        assert (tri >= 0).all()
        hits = accel.all_hits(origins, dirs, 100.0)
        assert all(len(h[0]) == 1 for h in hits)

    def test_quad_diagonal(self, backend):
        quad = np.array([[[0, 0, 0], [1, 0, 0], [1, 1, 0]], [[0, 0, 0], [1, 1, 0], [0, 1, 0]]], float)
        accel = AccelStructure(quad, [0, 0])
        s = np.linspace(0.01, 0.99, 199)
        targets = np.stack([s, s, np.zeros_like(s)], axis=1)
        origins = targets + [0.3, -0.7, 2.0]
        dirs = targets - origins
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        tri, _ = accel.first_hits(origins, dirs, 10.0)
        assert (tri >= 0).all()


class TestTrace:
    def window_facade(self):
        window = Triangle((-5, 2, -5), (5, 2, -5), (0, 2, 5), layer_id=0)
        facade = Triangle((-50, 18, -50), (50, 18, -50), (0, 18, 50), layer_id=1)
        return build_accel([window, facade])

    def test_window_then_facade(self, backend):
        hits = trace_all(Ray((0, 0, 0), (0, 1, 0), t_max=500), self.window_facade())
        assert [h.layer_id for h in hits] == [0, 1]
        assert [h.t for h in hits] == pytest.approx([2, 18])

    def test_escape_is_empty(self, backend):
        assert trace_all(Ray((0, 0, 0), (0, -1, 0), t_max=500), self.window_facade()) == []

    def test_skip_window(self, backend):
        scene = self.window_facade()
        hit = trace_first(Ray((0, 0, 0), (0, 1, 0), t_max=500), scene, {0})
        assert hit.layer_id == 1 and hit.t == pytest.approx(18)
        assert trace_first(Ray((0, 0, 0), (0, 1, 0), t_max=10), scene, {0}) is None

    def test_hit_invariants(self, backend):
        rng = np.random.default_rng(11)
        scene = AccelStructure(random_soup(rng, 200), rng.integers(0, 3, 200))
        origins, dirs = random_rays(rng, 200)
        for o, d in zip(origins, dirs):
            ray = Ray(o, d, t_max=30.0)
            hits = trace_all(ray, scene)
            ts = [h.t for h in hits]
            assert ts == sorted(ts)
            for h in hits:
                assert SELF_EPS < h.t <= 30.0
                np.testing.assert_allclose(h.point, o + h.t * d, atol=1e-6)

    def test_coincident_surfaces_collapse(self, backend):
        a = Triangle((-1, -1, 2), (1, -1, 2), (0, 1, 2), layer_id=2)
        b = Triangle((-1, -1, 2), (1, -1, 2), (0, 1, 2.00001), layer_id=1)
        c = Triangle((-1, -1, 4), (1, -1, 4), (0, 1, 4), layer_id=0)
        scene = build_accel([c, b, a])
        hits = trace_all(Ray((0, 0, 0), (0, 0, 1)), scene)
        assert [h.triangle_index for h in hits] == [1, 0]
        ref = brute_force_trace_all(Ray((0, 0, 0), (0, 0, 1)), scene)
        assert [h.triangle_index for h in ref] == [1, 0]

    def test_trace_first_is_min_of_filtered_trace_all(self, backend):
        rng = np.random.default_rng(5)
        scene = AccelStructure(random_soup(rng, 300), rng.integers(0, 4, 300))
        origins, dirs = random_rays(rng, 300)
        for o, d in zip(origins, dirs):
            ray = Ray(o, d, t_max=40.0)
            first = trace_first(ray, scene, {1, 3})
            ref = brute_force_trace_first(ray, scene, {1, 3})
            if ref is None:
                assert first is None
            else:
                assert first.triangle_index == ref.triangle_index
                assert first.t == pytest.approx(ref.t, rel=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_backends_agree(seed):
    rng = np.random.default_rng(100 + seed)
    scene = AccelStructure(random_soup(rng, 400), rng.integers(0, 3, 400))
    origins, dirs = random_rays(rng, 500)
    out = {}
    for name in ("numba", "numpy"):
        with _backend.use_backend(name):
            out[name] = (scene.nearest(origins, dirs, 50.0), scene.nearest(origins, dirs, 50.0, {0}),
                         scene.all_hits(origins, dirs, 50.0))
    for a, b in zip(out["numba"][:2], out["numpy"][:2]):
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_allclose(a[1], b[1], rtol=1e-12)
    for (ta, ka), (tb, kb) in zip(out["numba"][2], out["numpy"][2]):
        np.testing.assert_array_equal(ka, kb)
        np.testing.assert_allclose(ta, tb, rtol=1e-12)


class TestBVH:
    def test_structure(self):
        rng = np.random.default_rng(0)
        verts = random_soup(rng, 1000)
        bvh = build_bvh(verts, np.zeros(1000, np.int64))
        assert sorted(bvh.tri_id.tolist()) == list(range(1000))
        leaves = bvh.node_left < 0
        assert bvh.node_count[leaves].sum() == 1000
        assert bvh.node_count[leaves].max() <= LEAF_SIZE
        assert bvh.depth() <= 2 * math.ceil(math.log2(1000 / LEAF_SIZE)) + 2
        for i in np.flatnonzero(leaves):
            f, c = bvh.node_first[i], bvh.node_count[i]
            pts = np.concatenate([bvh.v0[f:f + c], bvh.v1[f:f + c], bvh.v2[f:f + c]])
            assert (pts >= bvh.node_min[i]).all() and (pts <= bvh.node_max[i]).all()
        for i in np.flatnonzero(~leaves):
            for child in (bvh.node_left[i], bvh.node_right[i]):
                assert (bvh.node_min[child] >= bvh.node_min[i]).all()
                assert (bvh.node_max[child] <= bvh.node_max[i]).all()

    def test_scales_sublinearly(self):
        """Work per ray grows far slower than the triangle count."""
        import time

        rng = np.random.default_rng(1)
        timings = []
        for n in (1000, 16000):
            verts = random_soup(rng, n, size=50.0, spread=0.5)
            scene = AccelStructure(verts, np.zeros(n, int))
            origins, dirs = random_rays(rng, 2000, size=50.0)
            scene.nearest(origins[:10], dirs[:10], 200.0)
            t0 = time.perf_counter()
            scene.nearest(origins, dirs, 200.0)
            timings.append(time.perf_counter() - t0)
        assert timings[1] < 8 * timings[0] + 0.05
