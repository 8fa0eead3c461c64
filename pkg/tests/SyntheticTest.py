import unittest

from mfk.errors import InvalidSpec
from mfk.synthetic import GroundTruth, SceneSpec, generate_capture


def small_spec(**kwargs):
    values = dict(n_cameras=6, n_frames=8, objects=('box', 'drawer'), hands=False)
    values.update(kwargs)
    return SceneSpec(**values)


class SceneSpecTest(unittest.TestCase):

    def test_defaults(self):
        spec = SceneSpec()
        self.assertEqual(spec.n_cameras, 24)
        self.assertEqual(spec.objects, ('box', 'laptop', 'drawer'))

    def test_dict_round_trip(self):
        spec = small_spec(pixel_noise=0.5)
        self.assertEqual(SceneSpec.from_dict(spec.to_dict()), spec)

    def test_unknown_parameter(self):
        with self.assertRaises(InvalidSpec):
            SceneSpec(n_cams=3)

    def test_too_few_cameras(self):
        with self.assertRaises(InvalidSpec):
            SceneSpec(n_cameras=1)

    def test_unknown_object(self):
        with self.assertRaises(InvalidSpec):
            SceneSpec(objects=('piano',))

    def test_duplicate_object(self):
        with self.assertRaises(InvalidSpec):
            SceneSpec(objects=('box', 'box'))

    def test_negative_noise(self):
        with self.assertRaises(InvalidSpec):
            SceneSpec(pixel_noise=-1.0)

    def test_malformed(self):
        with self.assertRaises(InvalidSpec):
            SceneSpec(n_frames='many')

    def test_from_non_mapping(self):
        with self.assertRaises(InvalidSpec):
            SceneSpec.from_dict([('n_frames', 4)])


class GenerateCaptureTest(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.capture = generate_capture(small_spec(), seed=4)

    def test_deterministic(self):
        again = generate_capture(small_spec(), seed=4)
        self.assertEqual(again.session.detections, self.capture.session.detections)
        self.assertEqual(again.session.mocap, self.capture.session.mocap)

    def test_seed_matters(self):
        other = generate_capture(small_spec(), seed=5)
        self.assertNotEqual(other.session.mocap, self.capture.session.mocap)

    def test_detections_ordered(self):
        dets = self.capture.session.detections
        self.assertTrue(dets)
        keys = [(d.frame, d.camera_id, d.marker_id, d.corner_index) for d in dets]
        self.assertEqual(keys, sorted(keys))
        self.assertEqual(self.capture.session.n_frames, 8)

    def test_mocap_runs_at_twice_the_camera_rate(self):
        self.assertEqual(len(self.capture.session.mocap), 16)

    def test_carry_annotated(self):
        self.assertEqual(self.capture.truth.carry, (2, 6))
        texts = [a.text for a in self.capture.session.annotations]
        self.assertEqual(len(texts), 2)

    def test_no_hands(self):
        self.assertEqual(self.capture.session.touches, {})
        self.assertIsNone(self.capture.session.structure)

    def test_accepts_dict(self):
        capture = generate_capture(small_spec().to_dict(), seed=4)
        self.assertEqual(capture.spec, small_spec())


class GroundTruthTest(unittest.TestCase):

    def test_dict_round_trip(self):
        truth = generate_capture(small_spec(carry=False), seed=1).truth
        back = GroundTruth.from_dict(truth.to_dict())
        self.assertEqual(back.to_dict(), truth.to_dict())
        self.assertIsNone(back.carry)

    def test_object_track(self):
        capture = generate_capture(small_spec(carry=False), seed=1)
        track = capture.truth.object_track('drawer')
        self.assertEqual(len(track), 8)
        self.assertTrue(track.valid.all())
