import unittest

import numpy as np

from mfk.errors import InvariantViolation, TooFewCorners
from mfk.multiview import TriangulatedCorner
from mfk.objects import ArticulatedObject, ObjectPart, track_object
from mfk.synthetic import make_object, part_poses
from mfk.transform import RigidTransform

from .TestUtilities import random_transform


def observed_corners(obj, poses, skip_parts=()):
    out = []
    for i, (part, pose) in enumerate(zip(obj.parts, poses)):
        if i in skip_parts:
            continue
        for cube in part.cubes:
            for key, p in zip(cube.corner_keys(), pose.apply(cube.corner_points())):
                out.append(TriangulatedCorner(key[0], key[1], 0, p, 0.1, 4))
    return out


class ArticulatedObjectTest(unittest.TestCase):

    def test_base_without_joint(self):
        obj = make_object('drawer')
        with self.assertRaises(InvariantViolation):
            ArticulatedObject('bad', [obj.parts[1]])

    def test_articulated_part_needs_joint(self):
        obj = make_object('drawer')
        with self.assertRaises(InvariantViolation):
            ArticulatedObject('bad', [obj.base, ObjectPart('loose', obj.parts[1].cubes)])

    def test_catalog_parts(self):
        self.assertEqual(len(make_object('drawer').articulated_parts), 2)
        self.assertEqual(len(make_object('box').articulated_parts), 0)

    def test_marker_ids_disjoint_between_objects(self):
        a = make_object('laptop', 0)
        b = make_object('drawer', len(a.parts))
        self.assertFalse(a.marker_ids & b.marker_ids)


class TrackObjectTest(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(2)

    def test_recovers_base_and_states(self):
        obj = make_object('drawer')
        base = random_transform(self.rng)
        states = [0.12, 0.05]
        st = track_object(obj, observed_corners(obj, part_poses(obj, base, states)))
        self.assertTrue(st.pose.almost_equal(base, atol=1e-9))
        np.testing.assert_allclose(st.part_states, states, atol=1e-9)

    def test_revolute_door(self):
        obj = make_object('laptop')
        base = random_transform(self.rng)
        st = track_object(obj, observed_corners(obj, part_poses(obj, base, [0.8])))
        np.testing.assert_allclose(st.part_states, [0.8], atol=1e-9)

    def test_hidden_part_is_nan(self):
        obj = make_object('drawer')
        base = RigidTransform()
        st = track_object(obj, observed_corners(obj, part_poses(obj, base, [0.1, 0.2]), skip_parts=(2,)))
        self.assertAlmostEqual(st.part_states[0], 0.1)
        self.assertTrue(np.isnan(st.part_states[1]))

    def test_hidden_base(self):
        obj = make_object('laptop')
        with self.assertRaises(TooFewCorners):
            track_object(obj, observed_corners(obj, part_poses(obj, RigidTransform(), [0.2]), skip_parts=(0,)))
