import unittest

import numpy as np
import pytest

from mfk.camera import CameraModel, make_rig
from mfk.config import Config
from mfk.errors import DegenerateGeometry, InconsistentDetections, InsufficientViews
from mfk.multiview import (CornerDetection, TriangulatedCorner, reprojection_report, triangulate,
                           triangulate_all, triangulate_frame)

from .TestUtilities import project_corners


class TriangulateTest(unittest.TestCase):

    def setUp(self):
        self.rig = make_rig(10, seed=4)
        self.rng = np.random.default_rng(11)

    def test_noiseless_recovery(self):
        for _ in range(20):
            p = self.rng.uniform(-0.5, 0.5, size=3) + (0, 0, 1)
            dets = project_corners(self.rig, p[None], [(5, 2)])
            c = triangulate(dets, self.rig)
            np.testing.assert_allclose(c.position, p, atol=1e-6)
            self.assertLess(c.reprojection_rms, 1e-6)
            self.assertEqual(c.key, (5, 2))

    def test_order_of_views_does_not_matter(self):
        p = np.array([0.2, 0.1, 0.9])
        dets = project_corners(self.rig, p[None], [(1, 0)], noise=0.8, rng=self.rng)
        ref = triangulate(dets, self.rig)
        for _ in range(5):
            order = self.rng.permutation(len(dets))
            rig = [self.rig[i] for i in self.rng.permutation(len(self.rig))]
            c = triangulate([dets[i] for i in order], rig)
            np.testing.assert_allclose(c.position, ref.position, atol=1e-9)
            self.assertEqual(c.camera_ids, ref.camera_ids)

    def test_extra_exact_view(self):
        for _ in range(20):
            p = self.rng.uniform(-0.5, 0.5, size=3) + (0, 0, 1)
            dets = project_corners(self.rig, p[None], [(0, 1)])
            self.assertGreater(len(dets), 2)
            fewer = np.linalg.norm(triangulate(dets[:-1], self.rig).position - p)
            more = np.linalg.norm(triangulate(dets, self.rig).position - p)
            self.assertLessEqual(more, fewer + 1e-9)

    def test_single_view(self):
        dets = project_corners(self.rig[:1], np.array([[0.0, 0.0, 1.0]]), [(0, 0)])
        with self.assertRaises(InsufficientViews):
            triangulate(dets, self.rig)

    def test_no_detections(self):
        with self.assertRaises(InsufficientViews):
            triangulate([], self.rig)

    def test_mixed_corners(self):
        dets = [CornerDetection(0, 1, 0, (10, 10), 0), CornerDetection(1, 1, 1, (10, 10), 0)]
        with self.assertRaises(InconsistentDetections):
            triangulate(dets, self.rig)

    def test_duplicate_camera(self):
        dets = [CornerDetection(0, 1, 0, (10, 10), 0), CornerDetection(0, 1, 0, (12, 10), 0)]
        with self.assertRaises(InconsistentDetections):
            triangulate(dets, self.rig)

    def test_parallel_rays(self):
        # the same camera registered twice under different ids sees along identical rays
        cam = self.rig[0]
        twin = CameraModel(99, cam.intrinsics, cam.extrinsics, cam.resolution)
        rig = [cam, twin]
        dets = [CornerDetection(0, 1, 0, (1000, 700), 0), CornerDetection(99, 1, 0, (1000, 700), 0)]
        with self.assertRaises(DegenerateGeometry):
            triangulate(dets, rig)

    def test_outlier_view_dropped(self):
        p = np.array([0.1, -0.2, 1.1])
        dets = project_corners(self.rig, p[None], [(3, 1)])
        self.assertGreater(len(dets), 4)
        bad = dets[0]
        dets[0] = CornerDetection(bad.camera_id, 3, 1, bad.pixel + (40.0, -35.0), 0)
        c = triangulate(dets, self.rig)
        self.assertLess(c.n_views, len(dets))
        self.assertNotIn(bad.camera_id, c.camera_ids)
        np.testing.assert_allclose(c.position, p, atol=1e-6)

    def test_outlier_factor_from_config(self):
        p = np.array([0.1, -0.2, 1.1])
        dets = project_corners(self.rig, p[None], [(3, 1)])
        bad = dets[0]
        dets[0] = CornerDetection(bad.camera_id, 3, 1, bad.pixel + (40.0, -35.0), 0)
        conf = Config({'multiview.outlier_factor': 1e9, 'multiview.outlier_floor_px': 1e9})
        self.assertEqual(triangulate(dets, self.rig, conf).n_views, len(dets))


class TriangulateFrameTest(unittest.TestCase):

    def test_skips_single_view_corners(self):
        rig = make_rig(8, seed=1)
        pts = np.array([[0.0, 0.0, 1.0], [0.1, 0.0, 1.0]])
        dets = project_corners(rig, pts, [(0, 0), (0, 1)])
        dets = [d for d in dets if d.key == (0, 0)] + [d for d in dets if d.key == (0, 1)][:1]
        res = triangulate_frame(dets, rig)
        self.assertEqual([c.key for c in res], [(0, 0)])

    def test_all_frames_in_order(self):
        rig = make_rig(8, seed=1)
        dets = []
        for f in range(5):
            dets += project_corners(rig, np.array([[0.0, 0.01 * f, 1.0]]), [(2, 3)], frame=f)
        res = triangulate_all(dets, rig, workers=3)
        self.assertEqual(sorted(res), list(range(5)))
        for f, cs in res.items():
            np.testing.assert_allclose(cs[0].position, (0.0, 0.01 * f, 1.0), atol=1e-6)


class ReprojectionReportTest(unittest.TestCase):

    def test_manipulation_frames(self):
        tri = {0: [TriangulatedCorner(0, 0, 0, (0, 0, 0), 0.5, 3)],
               1: [TriangulatedCorner(0, 0, 1, (0, 0, 0), 1.5, 5)]}
        report = reprojection_report(tri, {1})
        self.assertAlmostEqual(report.rms, 1.0)
        self.assertAlmostEqual(report.mean_views, 4.0)
        self.assertAlmostEqual(report.manipulation_rms, 1.5)
        self.assertIsNone(reprojection_report(tri).manipulation_rms)

    def test_dict_round_trip(self):
        c = TriangulatedCorner(4, 2, 9, (0.1, 0.2, 0.3), 0.25, 4, (1, 3, 5, 7))
        self.assertEqual(TriangulatedCorner.from_dict(c.to_dict()), c)


@pytest.mark.slow
class TriangulationNoiseTest(unittest.TestCase):

    def test_pixel_noise_rms_corridor(self):
        rng = np.random.default_rng(0)
        rig = make_rig(10, seed=0)
        rms = []
        for _ in range(1000):
            p = rng.uniform(-0.5, 0.5, size=3) + (0, 0, 1)
            dets = project_corners(rig, p[None], [(0, 0)], noise=1.0, rng=rng)
            if len(dets) < 3:
                continue
            rms.append(triangulate(dets, rig).reprojection_rms)
        # the fitted point absorbs three degrees of freedom of the noise
        self.assertGreater(np.mean(rms), 0.4)
        self.assertLess(np.mean(rms), 1.3)
