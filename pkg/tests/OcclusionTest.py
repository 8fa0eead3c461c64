import unittest

import numpy as np
import trimesh

from mfk.body import BodySkeleton, fk_body
from mfk.mesh import TriangleMesh
from mfk.occlusion import BVH, CapsuleOccluder, MeshOccluder, brute_force_hits
from mfk.state import SkeletonStream
from mfk.transform import PoseSequence, RigidTransform


def random_segments(rng, n, spread=1.5):
    origins = rng.uniform(-spread, spread, size=(n, 3))
    ends = rng.uniform(-spread, spread, size=(n, 3))
    return origins, ends - origins


class BVHTest(unittest.TestCase):

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        tri = trimesh.creation.icosphere(subdivisions=2, radius=0.7).triangles
        bvh = BVH(tri, leaf_size=4)
        origins, dirs = random_segments(rng, 2000)
        hits = bvh.segment_hits(origins, dirs)
        np.testing.assert_array_equal(hits, brute_force_hits(tri, origins, dirs))
        self.assertTrue(hits.any())
        self.assertFalse(hits.all())

    def test_scattered_triangles(self):
        rng = np.random.default_rng(1)
        centers = rng.uniform(-1, 1, size=(300, 1, 3))
        tri = centers + rng.normal(scale=0.05, size=(300, 3, 3))
        bvh = BVH(tri)
        origins, dirs = random_segments(rng, 1000)
        np.testing.assert_array_equal(bvh.segment_hits(origins, dirs), brute_force_hits(tri, origins, dirs))

    def test_leaves_hold_every_triangle_once(self):
        tri = trimesh.creation.icosphere(subdivisions=1).triangles
        bvh = BVH(tri, leaf_size=3)
        leaves = bvh.left < 0
        self.assertEqual(bvh.count[leaves].sum(), len(tri))
        self.assertTrue(np.all(bvh.count[leaves] <= 3))
        self.assertEqual(sorted(bvh.order), list(range(len(tri))))

    def test_empty(self):
        bvh = BVH(np.zeros((0, 3, 3)))
        self.assertEqual(len(bvh), 0)
        self.assertFalse(bvh.segment_hits(np.zeros((2, 3)), np.ones((2, 3))).any())

    def test_segment_end_is_excluded(self):
        tri = np.array([[[-1.0, -1.0, 1.0], [1.0, -1.0, 1.0], [0.0, 1.0, 1.0]]])
        bvh = BVH(tri)
        hits = bvh.segment_hits([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]], [[0.0, 0.0, 1.0], [0.0, 0.0, 2.0]])
        np.testing.assert_array_equal(hits, [False, True])


class MeshOccluderTest(unittest.TestCase):

    def test_moving_mesh(self):
        box = TriangleMesh.box((0.2, 0.2, 0.2))
        poses = PoseSequence.from_transforms([RigidTransform(None, (0.0, 0.0, 1.0)),
                                              RigidTransform(None, (3.0, 0.0, 1.0)),
                                              None])
        occ = MeshOccluder(box, poses)
        origins = np.array([[0.0, 0.0, 0.0]])
        dirs = np.array([[0.0, 0.0, 2.0]])
        self.assertTrue(occ.segment_hits(0, origins, dirs)[0])
        self.assertFalse(occ.segment_hits(1, origins, dirs)[0])
        self.assertFalse(occ.segment_hits(2, origins, dirs)[0])
        self.assertTrue(occ.segment_hits(0, origins, dirs, brute_force=True)[0])


class CapsuleOccluderTest(unittest.TestCase):

    def test_radius(self):
        occ = CapsuleOccluder([[[0.0, 0.0, 0.0]]], [[[0.0, 0.0, 1.0]]], [0.1])
        origins = np.array([[-1.0, 0.05, 0.5], [-1.0, 0.2, 0.5], [-1.0, 0.0, 1.5]])
        dirs = np.array([[2.0, 0.0, 0.0]] * 3)
        np.testing.assert_array_equal(occ.segment_hits(0, origins, dirs), [True, False, False])

    def test_from_skeleton(self):
        sk = BodySkeleton()
        stream = SkeletonStream.from_fk(fk_body(sk, np.zeros((2, 23, 3))))
        occ = CapsuleOccluder.from_skeleton(stream, {'head': 0.09})
        self.assertEqual(occ.starts.shape, (2, 22, 3))
        self.assertIn(0.09, occ.radii)
        self.assertEqual(np.count_nonzero(occ.radii == 0.05), 21)
