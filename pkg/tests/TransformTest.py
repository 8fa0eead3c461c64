import unittest

import numpy as np
from scipy.spatial.transform import Rotation

from mfk.errors import InvariantViolation, LengthMismatch
from mfk.transform import PoseSequence, RigidTransform, interpolate

from .TestUtilities import random_transform


class RigidTransformTest(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(3)

    def test_identity_leaves_points(self):
        p = self.rng.normal(size=(5, 3))
        np.testing.assert_allclose(RigidTransform().apply(p), p)

    def test_compose_applies_right_first(self):
        a = random_transform(self.rng)
        b = random_transform(self.rng)
        p = self.rng.normal(size=(4, 3))
        np.testing.assert_allclose(a.compose(b).apply(p), a.apply(b.apply(p)), atol=1e-12)

    def test_compose_is_associative(self):
        a, b, c = (random_transform(self.rng) for _ in range(3))
        self.assertTrue(a.compose(b).compose(c).almost_equal(a.compose(b.compose(c)), atol=1e-10))

    def test_yaw_angles_add(self):
        def rz(deg):
            return RigidTransform.from_rotation(Rotation.from_euler('z', deg, degrees=True))
        self.assertTrue(rz(30).compose(rz(60)).almost_equal(rz(90), atol=1e-12))

    def test_inverse(self):
        a = random_transform(self.rng)
        self.assertTrue(a.compose(a.inverse()).almost_equal(RigidTransform(), atol=1e-12))

    def test_quaternion_sign_is_canonical(self):
        t = RigidTransform((-0.5, -0.5, -0.5, -0.5))
        self.assertGreaterEqual(t.rotation[0], 0.0)
        self.assertEqual(t, RigidTransform((0.5, 0.5, 0.5, 0.5)))

    def test_quaternion_normalized(self):
        t = RigidTransform((2.0, 0.0, 0.0, 0.0), (1, 2, 3))
        np.testing.assert_allclose(t.rotation, [1, 0, 0, 0])

    def test_non_finite_translation(self):
        with self.assertRaises(InvariantViolation):
            RigidTransform(None, (np.nan, 0, 0))

    def test_dict_round_trip(self):
        a = random_transform(self.rng)
        self.assertEqual(RigidTransform.from_dict(a.to_dict()), a)

    def test_angle_to(self):
        a = RigidTransform.from_rotvec((0, 0, 0.3))
        b = RigidTransform.from_rotvec((0, 0, 0.5))
        self.assertAlmostEqual(a.angle_to(b), 0.2)

    def test_interpolate_endpoints(self):
        a = random_transform(self.rng)
        b = random_transform(self.rng)
        ends = interpolate(a, b, [0.0, 1.0])
        self.assertTrue(ends[0].almost_equal(a, atol=1e-9))
        self.assertTrue(ends[1].almost_equal(b, atol=1e-9))

    def test_interpolate_midpoint_translation(self):
        a = RigidTransform(None, (0, 0, 0))
        b = RigidTransform(None, (2, 0, 0))
        np.testing.assert_allclose(interpolate(a, b, 0.5).translation, (1, 0, 0))


class PoseSequenceTest(unittest.TestCase):

    def test_missing_frames(self):
        seq = PoseSequence.from_transforms([RigidTransform(), None, RigidTransform(None, (1, 0, 0))])
        self.assertIsNone(seq[1])
        self.assertEqual(list(seq.valid), [True, False, True])

    def test_length_mismatch(self):
        with self.assertRaises(LengthMismatch):
            PoseSequence(np.zeros((3, 3)), np.tile([1.0, 0, 0, 0], (2, 1)))

    def test_invalidate_copies(self):
        seq = PoseSequence.from_transforms([RigidTransform()] * 4)
        dropped = seq.invalidate([1, 2])
        self.assertTrue(seq.valid.all())
        self.assertEqual(list(dropped.valid), [True, False, False, True])

    def test_apply(self):
        seq = PoseSequence.from_transforms([RigidTransform(None, (t, 0, 0)) for t in range(3)])
        pts = np.zeros((3, 2, 3))
        np.testing.assert_allclose(seq.apply(pts)[:, 0, 0], [0, 1, 2])
