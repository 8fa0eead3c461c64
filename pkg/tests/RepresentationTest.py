import unittest

import numpy as np
from scipy.spatial.transform import Rotation

from mfk.body import BodySkeleton, fk_body
from mfk.errors import DimensionMismatch, InvariantViolation, TooShort
from mfk.geometry import wrap_angle, yaw_matrix
from mfk.mesh import TriangleMesh
from mfk.representation import (ContactRecord, FeatureSequence, PartTrack, build_features, compute_contacts,
                                default_parties, feature_dimension, heading, reconstruct_root_trajectory,
                                relative_state, rotation_6d, rotation_from_6d)
from mfk.state import SkeletonStream
from mfk.synthetic import rom_calibration
from mfk.transform import PoseSequence, RigidTransform

from .TestUtilities import random_transform


def moved_stream(stream, yaw, shift):
    R = yaw_matrix(yaw)
    pos = np.einsum('ij,tnj->tni', R, stream.positions) + shift
    rot = np.einsum('ij,tnjk->tnik', R, stream.rotations)
    return SkeletonStream(pos, rot, stream.parents, stream.joint_names)


class FeatureLayoutTest(unittest.TestCase):

    def test_dimension(self):
        self.assertEqual(feature_dimension(23), 8 + 12 * 23)
        fs = FeatureSequence(np.zeros((2, 284)), 23)
        self.assertEqual(fs.layout.slices['foot_contacts'], slice(280, 284))
        self.assertEqual(fs.frame(0).joint_rotations.shape, (23, 6))

    def test_wrong_width(self):
        with self.assertRaises(DimensionMismatch):
            FeatureSequence(np.zeros((2, 283)), 23)


class Rotation6dTest(unittest.TestCase):

    def test_decode(self):
        R = Rotation.random(50, random_state=0).as_matrix()
        np.testing.assert_allclose(rotation_from_6d(rotation_6d(R)), R, atol=1e-12)

    def test_decode_orthonormalizes(self):
        x = rotation_6d(np.eye(3)) + np.array([0.0, 0.1, 0.0, 0.05, 0.0, 0.0])
        R = rotation_from_6d(x)
        np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
        self.assertAlmostEqual(np.linalg.det(R), 1.0)


class BuildFeaturesTest(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        _, body = rom_calibration(BodySkeleton(), n_frames=40, seed=2)
        cls.stream = body.stream

    def test_shape(self):
        fs = build_features(self.stream)
        self.assertEqual(fs.data.shape, (39, feature_dimension(23)))
        fs.validate()

    def test_invariant_to_yaw_and_floor_shift(self):
        a = build_features(self.stream)
        b = build_features(moved_stream(self.stream, 1.3, (2.0, -1.0, 0.0)))
        np.testing.assert_allclose(a.data, b.data, atol=1e-9)

    def test_root_trajectory(self):
        fs = build_features(self.stream)
        root = self.stream.positions[:, 0]
        yaw = heading(self.stream.rotations[:, 0])
        traj = reconstruct_root_trajectory(fs, (root[0, 0], root[0, 1], yaw[0]))
        np.testing.assert_allclose(traj[:, :2], root[:, :2], atol=1e-9)
        np.testing.assert_allclose(wrap_angle(traj[:, 2] - yaw), 0.0, atol=1e-9)

    def test_root_height(self):
        fs = build_features(self.stream)
        np.testing.assert_allclose(fs.block('root_height')[:, 0], self.stream.positions[:-1, 0, 2])

    def test_standing_feet_touch(self):
        sk = BodySkeleton()
        fk = fk_body(sk, np.zeros((5, 23, 3)))
        lift = 0.02 - fk.joint_positions[0, sk.joint_index('right_foot'), 2]
        stream = SkeletonStream(fk.joint_positions + (0.0, 0.0, lift), fk.joint_rotations, sk.parents,
                                sk.joint_names)
        fs = build_features(stream)
        self.assertTrue(np.all(fs.block('foot_contacts') == 1.0))
        jumping = moved_stream(stream, 0.0, (0.0, 0.0, 1.0))
        self.assertTrue(np.all(build_features(jumping).block('foot_contacts') == 0.0))

    def test_turning_on_the_spot(self):
        omega = 0.05
        root = self.stream.positions[0, 0]
        R = yaw_matrix(omega * np.arange(12))
        pos = np.einsum('kij,nj->kni', R, self.stream.positions[0] - root) + root
        rot = np.einsum('kij,njl->knil', R, self.stream.rotations[0])
        fs = build_features(SkeletonStream(pos, rot, self.stream.parents, self.stream.joint_names))
        np.testing.assert_allclose(fs.block('root_angular_velocity')[:, 0], omega, atol=1e-12)
        np.testing.assert_allclose(fs.block('root_linear_velocity'), 0.0, atol=1e-12)
        np.testing.assert_allclose(fs.block('joint_positions'), fs.block('joint_positions')[:1], atol=1e-12)

    def test_validate_rejects_bad_rotation(self):
        fs = build_features(self.stream)
        fs.data[0, fs.layout.slices['joint_rotations'].start] += 0.5
        with self.assertRaises(InvariantViolation):
            fs.validate()

    def test_too_short(self):
        one = SkeletonStream(self.stream.positions[:1], self.stream.rotations[:1], self.stream.parents,
                             self.stream.joint_names)
        with self.assertRaises(TooShort):
            build_features(one)


def hand_stream(xs):
    T = len(xs)
    pos = np.zeros((T, 3, 3))
    pos[:, 0] = (0.0, 0.0, 2.0)
    pos[:, 1] = (-2.0, 0.0, 0.0)
    pos[:, 2, 0] = xs
    rot = np.broadcast_to(np.eye(3), (T, 3, 3, 3)).copy()
    return SkeletonStream(pos, rot, (-1, 0, 0), ('pelvis', 'left_hand', 'right_hand'))


class ContactTest(unittest.TestCase):

    def setUp(self):
        self.box = TriangleMesh.box((0.2, 0.2, 0.2))

    def track(self, n):
        return PartTrack('box', 0, self.box, PoseSequence.from_transforms([RigidTransform.identity()] * n))

    def test_threshold_inclusive(self):
        stream = hand_stream([0.105, 0.11, 0.12])
        contacts = compute_contacts(stream, [self.track(3)])
        self.assertEqual(contacts, [ContactRecord(0, 'right_hand', 'box', 0),
                                    ContactRecord(1, 'right_hand', 'box', 0)])

    def test_monotone_in_threshold(self):
        stream = hand_stream(np.linspace(0.1, 0.2, 21))
        small = compute_contacts(stream, [self.track(21)], config={'representation.contact_threshold': 0.02})
        large = compute_contacts(stream, [self.track(21)], config={'representation.contact_threshold': 0.05})
        self.assertLess(len(small), len(large))
        self.assertTrue(all(c in large for c in small))

    def test_unknown_pose_skipped(self):
        stream = hand_stream([0.1, 0.1])
        track = PartTrack('box', 0, self.box, PoseSequence.from_transforms([None, RigidTransform.identity()]))
        self.assertEqual([c.frame for c in compute_contacts(stream, [track])], [1])

    def test_length_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            compute_contacts(hand_stream([0.1]), [self.track(2)])

    def test_default_parties(self):
        stream = SkeletonStream.from_fk(fk_body(BodySkeleton(), np.zeros((1, 23, 3))))
        parties = default_parties(stream)
        self.assertEqual(parties['right_hand'], [stream.joint_index('right_hand')])
        self.assertEqual(len(parties['body']), 21)

    def test_record_dict(self):
        c = ContactRecord(3, 'body', 'drawer', 1)
        self.assertEqual(ContactRecord.from_dict(c.to_dict()), c)


class RelativeStateTest(unittest.TestCase):

    def test_in_object_frame(self):
        rng = np.random.default_rng(4)
        root, obj = random_transform(rng), random_transform(rng)
        rel = relative_state(root, obj)
        self.assertTrue(obj.compose(rel).almost_equal(root, atol=1e-9))
