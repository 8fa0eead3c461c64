'''
Line-of-sight occlusion tests against triangle meshes and capsule chains
'''
import logging

import numpy as np

from .geometry import segment_aabb_hits, segment_segment_distance, segment_triangle_hits


L = logging.getLogger(__name__)

SEGMENT_END = 1.0 - 1e-6
''' Fraction of a camera-to-point segment that is tested, so the target does not hide itself '''


class BVH(object):
    '''
    Bounding volume hierarchy over the triangles of a mesh

    Nodes are stored in flat arrays. Internal nodes have two children; leaves reference a
    contiguous range of `order`.

    Parameters
    ----------
    triangles : numpy.ndarray
        ``(M, 3, 3)``
    leaf_size : int
    '''

    def __init__(self, triangles, leaf_size=8):
        self.triangles = np.asarray(triangles, dtype=float)
        self.leaf_size = int(leaf_size)
        centroids = self.triangles.mean(axis=1)
        self.order = np.arange(len(self.triangles))
        bmin, bmax, left, right, start, count = [], [], [], [], [], []

        def build(lo, hi):
            node = len(bmin)
            idx = self.order[lo:hi]
            tri = self.triangles[idx]
            bmin.append(tri.min(axis=(0, 1)))
            bmax.append(tri.max(axis=(0, 1)))
            left.append(-1)
            right.append(-1)
            start.append(lo)
            count.append(hi - lo)
            if hi - lo <= self.leaf_size:
                return node
            c = centroids[idx]
            axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
            self.order[lo:hi] = idx[np.argsort(c[:, axis], kind='stable')]
            mid = (lo + hi) // 2
            left[node] = build(lo, mid)
            right[node] = build(mid, hi)
            count[node] = 0
            return node

        if len(self.triangles):
            build(0, len(self.triangles))
        self.bmin = np.array(bmin).reshape(-1, 3)
        self.bmax = np.array(bmax).reshape(-1, 3)
        self.left = np.array(left, dtype=int)
        self.right = np.array(right, dtype=int)
        self.start = np.array(start, dtype=int)
        self.count = np.array(count, dtype=int)

    def __len__(self):
        return len(self.bmin)

    def segment_hits(self, origins, dirs, t_max=SEGMENT_END):
        '''
        Whether each segment ``origin + t * dir``, ``t`` in ``(0, t_max)``, hits any triangle

        Traversal is stack based over packets of segments: each node is tested against the
        packet that reached it and only the segments that hit its box descend further.

        Returns
        -------
        numpy.ndarray
            ``(R,)`` boolean
        '''
        origins = np.asarray(origins, dtype=float).reshape(-1, 3)
        dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
        hit = np.zeros(len(origins), dtype=bool)
        if not len(self) or not len(origins):
            return hit
        stack = [(0, np.arange(len(origins)))]
        while stack:
            node, rays = stack.pop()
            rays = rays[~hit[rays]]
            if not len(rays):
                continue
            inside = segment_aabb_hits(origins[rays], dirs[rays], self.bmin[node], self.bmax[node], t_max)
            rays = rays[inside]
            if not len(rays):
                continue
            if self.left[node] < 0:
                tri = self.triangles[self.order[self.start[node]:self.start[node] + self.count[node]]]
                h = segment_triangle_hits(origins[rays], dirs[rays], tri[:, 0], tri[:, 1], tri[:, 2], t_max)
                hit[rays[h.any(axis=1)]] = True
            else:
                stack.append((self.right[node], rays))
                stack.append((self.left[node], rays))
        return hit


def brute_force_hits(triangles, origins, dirs, t_max=SEGMENT_END, chunk=4096):
    ''' Reference segment/triangle test over every triangle '''
    triangles = np.asarray(triangles, dtype=float)
    origins = np.asarray(origins, dtype=float).reshape(-1, 3)
    dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
    hit = np.zeros(len(origins), dtype=bool)
    if not len(triangles):
        return hit
    step = max(1, chunk // max(1, len(triangles)))
    for i in range(0, len(origins), step):
        h = segment_triangle_hits(origins[i:i + step], dirs[i:i + step],
                                  triangles[:, 0], triangles[:, 1], triangles[:, 2], t_max)
        hit[i:i + step] = h.any(axis=1)
    return hit


class MeshOccluder(object):
    '''
    A triangle mesh occluder, static or moving with per-frame poses

    Segments are moved into the mesh frame so the hierarchy is built once.

    Parameters
    ----------
    mesh : TriangleMesh
    poses : PoseSequence, optional
        Mesh frame to world frame per frame. A static mesh is already in world coordinates
    leaf_size : int
    '''

    def __init__(self, mesh, poses=None, leaf_size=8):
        self.mesh = mesh
        self.poses = poses
        self.bvh = BVH(mesh.triangles, leaf_size)

    def segment_hits(self, frame, origins, dirs, brute_force=False):
        if self.poses is not None:
            pose = self.poses[frame]
            if pose is None:
                return np.zeros(len(origins), dtype=bool)
            inv = pose.inverse()
            origins = inv.apply(origins)
            dirs = inv.apply_vector(dirs)
        if brute_force:
            return brute_force_hits(self.mesh.triangles, origins, dirs)
        return self.bvh.segment_hits(origins, dirs)


class CapsuleOccluder(object):
    '''
    A chain of capsules approximating a person, with per-frame endpoints

    Parameters
    ----------
    starts : array_like
        ``(T, K, 3)`` capsule axis start points
    ends : array_like
        ``(T, K, 3)`` capsule axis end points
    radii : array_like
        ``(K,)``
    '''

    def __init__(self, starts, ends, radii):
        self.starts = np.asarray(starts, dtype=float)
        self.ends = np.asarray(ends, dtype=float)
        self.radii = np.asarray(radii, dtype=float).reshape(-1)

    @classmethod
    def from_skeleton(cls, stream, radii):
        '''
        Capsules along every parent-child bone of a skeleton stream

        Parameters
        ----------
        stream : SkeletonStream
        radii : dict
            Child joint name to capsule radius; bones to unnamed joints get 0.05 m
        '''
        pairs = [(p, j) for j, p in enumerate(stream.parents) if p >= 0]
        starts = stream.positions[:, [p for p, _ in pairs]]
        ends = stream.positions[:, [j for _, j in pairs]]
        r = [radii.get(stream.joint_names[j], 0.05) for _, j in pairs]
        return cls(starts, ends, r)

    def segment_hits(self, frame, origins, dirs, brute_force=False):
        origins = np.asarray(origins, dtype=float).reshape(-1, 3)
        ends = origins + np.asarray(dirs, dtype=float).reshape(-1, 3) * SEGMENT_END
        d = segment_segment_distance(origins[:, None], ends[:, None],
                                     self.starts[frame][None], self.ends[frame][None])
        return np.any(d < self.radii[None], axis=1)
