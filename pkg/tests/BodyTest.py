import unittest

import numpy as np
import pytest

from mfk.body import (INSTRUMENTED_PARTS, JOINT_NAMES, PARENTS, BodyCalibrationSequence, BodySkeleton,
                      calibrate_body, capture_visibility_mask, fk_body, mocap_to_camera)
from mfk.errors import DimensionMismatch, InvariantViolation, LengthMismatch, NoVisibleMarkers
from mfk.synthetic import perturb_skeleton, rom_calibration

from .TestUtilities import random_transform


class BodySkeletonTest(unittest.TestCase):

    def test_defaults(self):
        sk = BodySkeleton()
        self.assertEqual(sk.n_joints, 23)
        self.assertEqual(len(sk.markers), 11)
        # two hands with three markers, nine parts with four
        self.assertEqual(sk.n_corners, (2 * 3 + 9 * 4) * 4)
        self.assertEqual(len(set(sk.corner_keys)), sk.n_corners)

    def test_parent_after_child(self):
        parents = list(PARENTS)
        parents[1] = 5
        with self.assertRaises(InvariantViolation):
            BodySkeleton(joint_names=JOINT_NAMES, parents=parents)

    def test_two_roots(self):
        parents = list(PARENTS)
        parents[6] = -1
        with self.assertRaises(InvariantViolation):
            BodySkeleton(parents=parents)

    def test_missing_part_markers(self):
        markers = dict(BodySkeleton().markers)
        del markers['t8']
        with self.assertRaises(InvariantViolation):
            BodySkeleton(markers=markers)

    def test_too_many_markers(self):
        markers = dict(BodySkeleton().markers)
        markers['t8'] = np.concatenate([markers['t8'], markers['t8'][:1]])
        with self.assertRaises(InvariantViolation):
            BodySkeleton(markers=markers)

    def test_non_finite_offsets(self):
        offsets = BodySkeleton().offsets.copy()
        offsets[3, 1] = np.nan
        with self.assertRaises(InvariantViolation):
            BodySkeleton(offsets)

    def test_dict_round_trip(self):
        sk = perturb_skeleton(BodySkeleton(), 0.01, np.random.default_rng(0))
        self.assertEqual(BodySkeleton.from_dict(sk.to_dict()), sk)

    def test_observable_joints_exclude_gauge_and_leaves(self):
        sk = BodySkeleton()
        obs = {sk.joint_names[j] for j in sk.observable_joints()}
        self.assertNotIn('pelvis', obs)
        self.assertNotIn('l5', obs)
        self.assertNotIn('head', obs)
        self.assertNotIn('right_toe', obs)
        self.assertIn('right_forearm', obs)
        self.assertIn('t8', obs)

    def test_with_params_corners(self):
        sk = BodySkeleton()
        moved = sk.with_params(corner_local=sk.corner_local + 0.01)
        np.testing.assert_allclose(moved.corner_local, sk.corner_local + 0.01)
        np.testing.assert_array_equal(moved.offsets, sk.offsets)


class FKTest(unittest.TestCase):

    def test_rest_pose_chain(self):
        sk = BodySkeleton()
        fk = fk_body(sk, np.zeros((23, 3)))
        np.testing.assert_allclose(fk.joint_positions[sk.joint_index('right_hand')],
                                   (0.0, -0.72, 0.52), atol=1e-12)
        np.testing.assert_allclose(fk.joint_rotations, np.broadcast_to(np.eye(3), (23, 3, 3)), atol=1e-12)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(1)
        angles = rng.normal(scale=0.3, size=(4, 23, 3))
        sk = BodySkeleton()
        batch = fk_body(sk, angles)
        for t in range(4):
            single = fk_body(sk, angles[t])
            np.testing.assert_allclose(batch.corners[t], single.corners, atol=1e-12)
            np.testing.assert_allclose(batch.joint_positions[t], single.joint_positions, atol=1e-12)

    def test_bone_lengths_preserved(self):
        rng = np.random.default_rng(2)
        sk = BodySkeleton()
        fk = fk_body(sk, rng.normal(scale=0.5, size=(23, 3)))
        for j, p in enumerate(sk.parents):
            if p >= 0:
                self.assertAlmostEqual(np.linalg.norm(fk.joint_positions[j] - fk.joint_positions[p]),
                                       np.linalg.norm(sk.offsets[j]))

    def test_root_transform(self):
        rng = np.random.default_rng(3)
        sk = BodySkeleton()
        angles = rng.normal(scale=0.3, size=(23, 3))
        root = random_transform(rng)
        local = fk_body(sk, angles)
        world = fk_body(sk, angles, root)
        np.testing.assert_allclose(world.corners, root.apply(local.corners), atol=1e-12)

    def test_marker_corners_shape(self):
        fk = fk_body(BodySkeleton(), np.zeros((23, 3)))
        self.assertEqual(fk.marker_corners('right_hand').shape, (3, 4, 3))
        self.assertEqual(fk.marker_corners('t8').shape, (4, 4, 3))

    def test_bad_shape(self):
        with self.assertRaises(DimensionMismatch):
            fk_body(BodySkeleton(), np.zeros((22, 3)))

    def test_corner_map_needs_single_frame(self):
        fk = fk_body(BodySkeleton(), np.zeros((2, 23, 3)))
        with self.assertRaises(DimensionMismatch):
            fk.corner_map()


class MocapToCameraTest(unittest.TestCase):

    def test_recovers_root(self):
        rng = np.random.default_rng(4)
        sk = BodySkeleton()
        fk = fk_body(sk, rng.normal(scale=0.3, size=(23, 3)))
        root = random_transform(rng)
        observed = {k: root.apply(p) for k, p in fk.corner_map().items()}
        self.assertTrue(mocap_to_camera(fk, observed).almost_equal(root, atol=1e-8))

    def test_partial_view(self):
        rng = np.random.default_rng(5)
        sk = BodySkeleton()
        fk = fk_body(sk, np.zeros((23, 3)))
        root = random_transform(rng)
        ids = set(sk.marker_ids('t8')[:2])
        observed = {k: root.apply(p) for k, p in fk.corner_map().items() if k[0] in ids}
        self.assertTrue(mocap_to_camera(fk, observed).almost_equal(root, atol=1e-8))

    def test_no_marker(self):
        fk = fk_body(BodySkeleton(), np.zeros((23, 3)))
        key = next(iter(fk.corner_map()))
        with self.assertRaises(NoVisibleMarkers):
            mocap_to_camera(fk, {key: np.zeros(3)})


class CaptureVisibilityTest(unittest.TestCase):

    def test_removed_markers(self):
        sk = BodySkeleton()
        mask = capture_visibility_mask(sk)
        kept = {m for (m, _), keep in zip(sk.corner_keys, mask) if keep}
        for part in ('right_upper_leg', 'left_upper_leg'):
            self.assertFalse(kept & set(sk.marker_ids(part)))
        self.assertEqual(set(sk.marker_ids('t8')), kept & set(sk.marker_ids('t8')))
        self.assertEqual(len(kept & set(sk.marker_ids('right_forearm'))), 3)
        # eight upper-leg markers and one from each of six segments come off
        total = sum(len(sk.markers[p]) for p in INSTRUMENTED_PARTS)
        self.assertEqual(len(kept), total - 8 - 6)


class BodyCalibrationSequenceTest(unittest.TestCase):

    def test_length_mismatch(self):
        with self.assertRaises(LengthMismatch):
            BodyCalibrationSequence(np.zeros((3, 23, 3)), np.zeros((4, 168, 3)))

    def test_bad_shape(self):
        with self.assertRaises(DimensionMismatch):
            BodyCalibrationSequence(np.zeros((3, 23)), np.zeros((3, 168, 3)))

    def test_visible(self):
        obs = np.zeros((2, 168, 3))
        obs[1, 5, 0] = np.nan
        seq = BodyCalibrationSequence(np.zeros((2, 23, 3)), obs)
        self.assertEqual(seq.visible.sum(), 2 * 168 - 1)

    def test_corner_count_mismatch(self):
        seq = BodyCalibrationSequence(np.zeros((2, 23, 3)), np.zeros((2, 10, 3)))
        with self.assertRaises(DimensionMismatch):
            calibrate_body(seq)

    def test_no_usable_frames(self):
        seq = BodyCalibrationSequence(np.zeros((2, 23, 3)), np.full((2, 168, 3), np.nan))
        with self.assertRaises(NoVisibleMarkers):
            calibrate_body(seq)


@pytest.mark.slow
class CalibrateBodyTest(unittest.TestCase):

    def setUp(self):
        self.truth = BodySkeleton()
        self.seq, _ = rom_calibration(self.truth, n_frames=120, seed=3)
        self.init = perturb_skeleton(self.truth, 0.02, np.random.default_rng(9))

    def test_loss_never_rises(self):
        res = calibrate_body(self.seq, self.init, {'body.epochs': 10}, seed=1)
        self.assertLessEqual(len(res.loss_history), 12)
        for a, b in zip(res.loss_history, res.loss_history[1:]):
            self.assertLessEqual(b, a)
        self.assertLess(res.loss_history[-1], res.loss_history[0] * 0.8)

    def test_result_parts(self):
        res = calibrate_body(self.seq, self.init, {'body.epochs': 2}, seed=1)
        self.assertEqual(len(res.transforms), len(self.seq))
        self.assertEqual(len(res.marker_rms), 42)
        self.assertTrue(all(np.isfinite(v) for v in res.marker_rms.values()))
        np.testing.assert_array_equal(res.skeleton.offsets[0], self.init.offsets[0])
        np.testing.assert_array_equal(res.skeleton.offsets[1], self.init.offsets[1])

    def test_deterministic(self):
        a = calibrate_body(self.seq, self.init, {'body.epochs': 2}, seed=5)
        b = calibrate_body(self.seq, self.init, {'body.epochs': 2}, seed=5)
        self.assertEqual(a.loss_history, b.loss_history)
        np.testing.assert_array_equal(a.skeleton.offsets, b.skeleton.offsets)

    def test_truth_is_a_fixed_point(self):
        res = calibrate_body(self.seq, self.truth, seed=1)
        self.assertLess(res.loss_history[-1], 1e-10)
        np.testing.assert_allclose(res.skeleton.offsets, self.truth.offsets, atol=1e-6)
        np.testing.assert_allclose(res.skeleton.corner_local, self.truth.corner_local, atol=1e-6)

    def test_frame_without_markers_has_no_transform(self):
        observed = self.seq.observed.copy()
        observed[4] = np.nan
        seq = BodyCalibrationSequence(self.seq.angles, observed)
        res = calibrate_body(seq, self.truth, seed=1)
        self.assertIsNone(res.transforms[4])
        self.assertIsNotNone(res.transforms[5])
        self.assertTrue(all(np.isfinite(v) for v in res.marker_rms.values()))


@pytest.mark.slow
def test_recovers_perturbed_offsets():
    truth = BodySkeleton()
    seq, _ = rom_calibration(truth, n_frames=300, seed=3)
    init = perturb_skeleton(truth, 0.02, np.random.default_rng(9))
    res = calibrate_body(seq, init, seed=1)
    history = res.loss_history
    assert all(b <= a for a, b in zip(history, history[1:]))
    err = np.linalg.norm(res.skeleton.offsets - truth.offsets, axis=1)
    assert err.max() < 0.003
