import unittest

import numpy as np
import trimesh

from mfk.geometry import (closest_points_on_triangles, segment_aabb_hits, segment_segment_distance,
                          segment_triangle_hits, wrap_angle, yaw_matrix)


class ClosestPointTest(unittest.TestCase):

    def test_matches_trimesh(self):
        rng = np.random.default_rng(0)
        tri = rng.normal(size=(500, 3, 3))
        p = rng.normal(scale=2.0, size=(500, 3))
        ours = closest_points_on_triangles(p, tri[:, 0], tri[:, 1], tri[:, 2])
        ref = trimesh.triangles.closest_point(tri, p)
        np.testing.assert_allclose(ours, ref, atol=1e-9)

    def test_interior(self):
        a, b, c = np.array([0.0, 0, 0]), np.array([1.0, 0, 0]), np.array([0.0, 1, 0])
        np.testing.assert_allclose(closest_points_on_triangles((0.2, 0.2, 3.0), a, b, c), (0.2, 0.2, 0.0))

    def test_vertex_and_edge(self):
        a, b, c = np.array([0.0, 0, 0]), np.array([1.0, 0, 0]), np.array([0.0, 1, 0])
        np.testing.assert_allclose(closest_points_on_triangles((-1.0, -1.0, 0.5), a, b, c), a)
        np.testing.assert_allclose(closest_points_on_triangles((0.5, -1.0, 0.0), a, b, c), (0.5, 0.0, 0.0))
        np.testing.assert_allclose(closest_points_on_triangles((1.0, 1.0, 0.0), a, b, c), (0.5, 0.5, 0.0))

    def test_broadcast(self):
        rng = np.random.default_rng(1)
        tri = rng.normal(size=(7, 3, 3))
        p = rng.normal(size=(4, 1, 3))
        self.assertEqual(closest_points_on_triangles(p, tri[:, 0], tri[:, 1], tri[:, 2]).shape, (4, 7, 3))


class SegmentDistanceTest(unittest.TestCase):

    def test_against_sampling(self):
        rng = np.random.default_rng(2)
        s = np.linspace(0.0, 1.0, 401)
        for _ in range(30):
            p0, p1, q0, q1 = rng.normal(size=(4, 3))
            d = segment_segment_distance(p0, p1, q0, q1)
            P = p0 + s[:, None] * (p1 - p0)
            Q = q0 + s[:, None] * (q1 - q0)
            sampled = np.linalg.norm(P[:, None] - Q[None], axis=2).min()
            self.assertLessEqual(d, sampled + 1e-12)
            self.assertGreater(d, sampled - 0.01)

    def test_crossing(self):
        self.assertAlmostEqual(segment_segment_distance((-1, 0, 0), (1, 0, 0), (0, -1, 1), (0, 1, 1)), 1.0)

    def test_parallel(self):
        self.assertAlmostEqual(segment_segment_distance((0, 0, 0), (1, 0, 0), (0.5, 2, 0), (3, 2, 0)), 2.0)

    def test_degenerate(self):
        self.assertAlmostEqual(segment_segment_distance((0, 0, 0), (0, 0, 0), (1, 0, 0), (1, 0, 0)), 1.0)
        self.assertAlmostEqual(segment_segment_distance((0, 3, 0), (0, 3, 0), (-1, 0, 0), (1, 0, 0)), 3.0)


class SegmentHitTest(unittest.TestCase):

    def setUp(self):
        self.v0 = np.array([[-1.0, -1.0, 0.5]])
        self.v1 = np.array([[1.0, -1.0, 0.5]])
        self.v2 = np.array([[0.0, 1.0, 0.5]])

    def test_hit_and_miss(self):
        origins = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [5.0, 0.0, 0.0]])
        dirs = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.4], [0.0, 0.0, 1.0]])
        hits = segment_triangle_hits(origins, dirs, self.v0, self.v1, self.v2)
        np.testing.assert_array_equal(hits[:, 0], [True, False, False])

    def test_aabb(self):
        origins = np.array([[0.0, 0.0, -1.0], [2.0, 2.0, -1.0], [0.0, 0.0, -1.0]])
        dirs = np.array([[0.0, 0.0, 2.0], [0.0, 0.0, 2.0], [0.0, 0.0, 0.5]])
        hits = segment_aabb_hits(origins, dirs, np.array([-0.5, -0.5, -0.1]), np.array([0.5, 0.5, 0.1]))
        np.testing.assert_array_equal(hits, [True, False, False])


class AngleTest(unittest.TestCase):

    def test_yaw(self):
        R = yaw_matrix(np.pi / 2)
        np.testing.assert_allclose(R @ (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), atol=1e-12)
        self.assertEqual(yaw_matrix(np.zeros(5)).shape, (5, 3, 3))

    def test_wrap(self):
        np.testing.assert_allclose(wrap_angle([3 * np.pi / 2, -3 * np.pi / 2, 0.1]),
                                   [-np.pi / 2, np.pi / 2, 0.1])
