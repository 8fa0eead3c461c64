import unittest

import numpy as np

from mfk.camera import CameraModel, LENS_FAMILIES, intrinsics_for, look_at, make_rig
from mfk.errors import BehindCamera, InvariantViolation
from mfk.transform import RigidTransform


class CameraModelTest(unittest.TestCase):

    def setUp(self):
        self.cam = CameraModel(0, intrinsics_for(5.0), look_at((3, 0, 1), (0, 0, 1)), (2048, 1536))

    def test_target_projects_to_principal_point(self):
        np.testing.assert_allclose(self.cam.project((0, 0, 1)), (1024, 768), atol=1e-9)

    def test_center(self):
        np.testing.assert_allclose(self.cam.center, (3, 0, 1), atol=1e-12)

    def test_behind_camera(self):
        with self.assertRaises(BehindCamera):
            self.cam.project((5, 0, 1))

    def test_project_many_marks_behind_with_nan(self):
        pix, depth = self.cam.project_many(np.array([[0, 0, 1], [5, 0, 1]], dtype=float))
        self.assertTrue(np.all(np.isfinite(pix[0])))
        self.assertTrue(np.all(np.isnan(pix[1])))
        self.assertLess(depth[1], 0)

    def test_ray_through_projection(self):
        p = np.array([0.2, -0.3, 1.4])
        ray = self.cam.ray(self.cam.project(p))
        d = p - self.cam.center
        np.testing.assert_allclose(ray, d / np.linalg.norm(d), atol=1e-9)

    def test_bad_focal_length(self):
        K = intrinsics_for(5.0)
        K[0, 0] = -1
        with self.assertRaises(InvariantViolation):
            CameraModel(1, K, RigidTransform(), (2048, 1536))

    def test_dict_round_trip(self):
        self.assertEqual(CameraModel.from_dict(self.cam.to_dict()), self.cam)


class MakeRigTest(unittest.TestCase):

    def test_lens_proportions(self):
        rig = make_rig(70, seed=1)
        focals = sorted({round(c.intrinsics[0, 0], 6) for c in rig})
        self.assertEqual(len(focals), len(LENS_FAMILIES))
        counts = {f: sum(1 for c in rig if round(c.intrinsics[0, 0], 6) == f) for f in focals}
        self.assertEqual(sorted(counts.values()), [20, 20, 30])

    def test_cameras_see_the_center(self):
        for cam in make_rig(24, seed=2):
            self.assertTrue(cam.in_frustum(np.array([[0.0, 0.0, 1.0]]))[0])

    def test_unique_ids(self):
        rig = make_rig(12)
        self.assertEqual(len({c.id for c in rig}), 12)

    def test_deterministic(self):
        self.assertEqual(make_rig(10, seed=5), make_rig(10, seed=5))
