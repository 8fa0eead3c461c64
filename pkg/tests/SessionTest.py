import unittest

import numpy as np

from mfk.camera import make_rig
from mfk.config import Config
from mfk.errors import CorruptStream, DimensionMismatch, EmptySession, InvalidSpec, InvariantViolation
from mfk.multiview import CornerDetection
from mfk.session import Annotation, Artifact, CaptureSession, MocapStream


def still_body(n_frames):
    return np.zeros((n_frames, 23, 3))


def turning_stream(frames, angles, rate=60.0):
    body = still_body(len(frames))
    body[:, 0, 2] = angles
    return MocapStream(frames, body, rate=rate)


class MocapStreamTest(unittest.TestCase):

    def test_frames_must_increase(self):
        with self.assertRaises(CorruptStream):
            MocapStream([0, 2, 2], still_body(3))

    def test_body_shape(self):
        with self.assertRaises(DimensionMismatch):
            MocapStream([0, 1], np.zeros((2, 22, 3)))

    def test_hand_shape(self):
        with self.assertRaises(DimensionMismatch):
            MocapStream([0, 1], still_body(2), left_hand=np.zeros((2, 23, 3)))

    def test_needs_body(self):
        with self.assertRaises(InvalidSpec):
            MocapStream([0], None)

    def test_finite(self):
        body = still_body(2)
        body[1, 3, 0] = np.nan
        with self.assertRaises(InvariantViolation):
            MocapStream([0, 1], body)

    def test_resample_exact_frames(self):
        angles = np.linspace(0.0, 0.9, 10)
        stream = turning_stream(np.arange(10), angles)
        camera = stream.resample(np.arange(5))
        self.assertEqual(camera.rate, 30.0)
        np.testing.assert_array_equal(camera.body, stream.body[::2])

    def test_resample_slerp(self):
        stream = turning_stream([0, 2], [0.0, 0.2])
        mid = stream.resample([1], rate=60.0)
        np.testing.assert_allclose(mid.body[0, 0], (0.0, 0.0, 0.1), atol=1e-12)
        np.testing.assert_allclose(mid.body[0, 1:], 0.0, atol=1e-12)

    def test_resample_holds_ends(self):
        stream = turning_stream([0, 2], [0.0, 0.2])
        after = stream.resample([5], rate=60.0)
        np.testing.assert_allclose(after.body[0, 0], (0.0, 0.0, 0.2), atol=1e-12)

    def test_resample_empty(self):
        with self.assertRaises(EmptySession):
            MocapStream([], np.zeros((0, 23, 3))).resample([0])


class AnnotationTest(unittest.TestCase):

    def test_dict(self):
        a = Annotation(3, 9, 'open the drawer')
        self.assertEqual(Annotation.from_dict(a.to_dict()), a)

    def test_reversed(self):
        with self.assertRaises(InvariantViolation):
            Annotation(5, 4, 'x')


class ArtifactTest(unittest.TestCase):

    def test_needs_config_hash(self):
        with self.assertRaises(InvariantViolation):
            Artifact('poses', [], '')


class CaptureSessionTest(unittest.TestCase):

    def setUp(self):
        self.rig = make_rig(4)

    def detection(self, frame, camera=0, marker=7, corner=0):
        return CornerDetection(camera, marker, corner, (10.0, 20.0), frame)

    def test_orders_within_frame(self):
        dets = [self.detection(0, camera=2), self.detection(0, camera=1), self.detection(1, corner=3),
                self.detection(1, corner=1)]
        session = CaptureSession(self.rig, dets)
        self.assertEqual([(d.frame, d.camera_id, d.corner_index) for d in session.detections],
                         [(0, 1, 0), (0, 2, 0), (1, 0, 1), (1, 0, 3)])
        self.assertEqual(session.n_frames, 2)
        self.assertEqual(sorted(session.detections_by_frame()), [0, 1])

    def test_duplicate_detection(self):
        with self.assertRaises(CorruptStream):
            CaptureSession(self.rig, [self.detection(0), self.detection(0)])

    def test_decreasing_frames(self):
        with self.assertRaises(CorruptStream):
            CaptureSession(self.rig, [self.detection(2), self.detection(1)])

    def test_unknown_camera(self):
        with self.assertRaises(CorruptStream):
            CaptureSession(self.rig, [self.detection(0, camera=99)])

    def test_duplicate_camera_ids(self):
        with self.assertRaises(InvariantViolation):
            CaptureSession(self.rig + self.rig[:1])

    def test_mocap_rate_mismatch(self):
        with self.assertRaises(InvalidSpec):
            CaptureSession(self.rig, mocap=MocapStream([0], still_body(1), rate=100.0))

    def test_camera_mocap(self):
        stream = turning_stream(np.arange(10), np.linspace(0.0, 0.9, 10))
        session = CaptureSession(self.rig, mocap=stream)
        self.assertEqual(session.n_frames, 5)
        np.testing.assert_array_equal(session.camera_mocap().body, stream.body[::2])

    def test_camera_mocap_missing(self):
        with self.assertRaises(EmptySession):
            CaptureSession(self.rig).camera_mocap()

    def test_artifacts(self):
        session = CaptureSession(self.rig)
        art = session.add_artifact('poses', [1, 2], {'rigid.rms_weighting': False})
        self.assertEqual(art.config_hash, Config({'rigid.rms_weighting': False}).digest())
        self.assertNotEqual(art.config_hash, Config().digest())
        self.assertIs(session.artifact('poses'), art)
        with self.assertRaises(EmptySession):
            session.artifact('features')

    def test_empty(self):
        self.assertEqual(CaptureSession(self.rig).n_frames, 0)
