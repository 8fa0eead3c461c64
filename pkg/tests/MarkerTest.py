import unittest

import numpy as np

from mfk.errors import InvariantViolation
from mfk.marker import MarkerCube, canonical_lookup, cube_face_corners
from mfk.transform import RigidTransform


class MarkerCubeTest(unittest.TestCase):

    def test_corner_distance_from_face_center(self):
        coords = cube_face_corners(0.06)
        d = np.linalg.norm(coords - coords.mean(axis=1, keepdims=True), axis=2)
        np.testing.assert_allclose(d, 0.06 * np.sqrt(2) / 2)

    def test_faces_counter_clockwise_from_outside(self):
        coords = cube_face_corners(0.06)
        for face in coords:
            n = np.cross(face[1] - face[0], face[2] - face[1])
            self.assertGreater(np.dot(n, face.mean(axis=0)), 0)

    def test_marker_ids(self):
        self.assertEqual(MarkerCube(2, 0.06).marker_ids, list(range(12, 18)))

    def test_mount_moves_corners(self):
        cube = MarkerCube(0, 0.06, RigidTransform(None, (1, 0, 0)))
        np.testing.assert_allclose(cube.corner_points().mean(axis=0), (1, 0, 0), atol=1e-12)

    def test_reversed_face_rejected(self):
        coords = cube_face_corners(0.06).copy()
        coords[0] = coords[0][::-1]
        with self.assertRaises(InvariantViolation):
            MarkerCube(0, 0.06, face_corner_coords=coords)

    def test_non_positive_edge(self):
        with self.assertRaises(InvariantViolation):
            MarkerCube(0, 0.0)

    def test_canonical_lookup(self):
        cubes = [MarkerCube(0, 0.06), MarkerCube(1, 0.06, RigidTransform(None, (0.5, 0, 0)))]
        lookup = canonical_lookup(cubes)
        self.assertEqual(len(lookup), 48)
        np.testing.assert_allclose(lookup[(6, 0)], cubes[1].corner_points()[0])

    def test_dict_round_trip(self):
        cube = MarkerCube(3, 0.06, RigidTransform.from_rotvec((0, 0, 0.4), (0.1, 0.2, 0.3)))
        self.assertEqual(MarkerCube.from_dict(cube.to_dict()), cube)
