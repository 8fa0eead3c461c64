'''
Triangle meshes of scanned objects and furniture
'''
import numpy as np
from scipy.spatial import cKDTree

from .errors import InvariantViolation
from .geometry import closest_points_on_triangles


class TriangleMesh(object):
    '''
    An indexed triangle mesh

    Parameters
    ----------
    vertices : array_like
        ``(V, 3)``
    faces : array_like
        ``(F, 3)`` vertex indices
    '''

    def __init__(self, vertices, faces):
        self.vertices = np.array(vertices, dtype=float).reshape(-1, 3)
        self.faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise InvariantViolation('Mesh faces reference missing vertices')
        self._tree = None

    @classmethod
    def box(cls, extents, center=(0.0, 0.0, 0.0)):
        ''' An axis-aligned box with outward-facing triangles '''
        h = np.asarray(extents, dtype=float) / 2.0
        c = np.asarray(center, dtype=float)
        signs = np.array([[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)], dtype=float)
        verts = c + signs * h
        faces = [[0, 1, 3], [0, 3, 2],   # -x
                 [4, 6, 7], [4, 7, 5],   # +x
                 [0, 4, 5], [0, 5, 1],   # -y
                 [2, 3, 7], [2, 7, 6],   # +y
                 [0, 2, 6], [0, 6, 4],   # -z
                 [1, 5, 7], [1, 7, 3]]   # +z
        return cls(verts, faces)

    @property
    def triangles(self):
        return self.vertices[self.faces]

    @property
    def face_areas(self):
        tri = self.triangles
        return 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)

    @property
    def face_normals(self):
        tri = self.triangles
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        norm[norm == 0] = 1.0
        return n / norm

    @property
    def area(self):
        return float(self.face_areas.sum())

    def __eq__(self, other):
        # Vertices survive a text round trip to within the last printed digit
        return (isinstance(other, TriangleMesh) and np.array_equal(self.faces, other.faces) and
                self.vertices.shape == other.vertices.shape and
                np.allclose(self.vertices, other.vertices, rtol=0.0, atol=1e-12))

    __hash__ = None

    def transformed(self, transform):
        return TriangleMesh(transform.apply(self.vertices), self.faces)

    def sample_surface(self, count, rng):
        '''
        Area-weighted uniform samples on the surface

        Returns
        -------
        points : numpy.ndarray
            ``(count, 3)``
        normals : numpy.ndarray
            ``(count, 3)`` face normals of the sampled triangles
        '''
        areas = self.face_areas
        face = rng.choice(len(self.faces), size=count, p=areas / areas.sum())
        r1 = np.sqrt(rng.random(count))
        r2 = rng.random(count)
        tri = self.triangles[face]
        pts = ((1 - r1)[:, None] * tri[:, 0] +
               (r1 * (1 - r2))[:, None] * tri[:, 1] +
               (r1 * r2)[:, None] * tri[:, 2])
        return pts, self.face_normals[face]

    def _centroid_tree(self):
        if self._tree is None:
            tri = self.triangles
            cent = tri.mean(axis=1)
            self._tree = cKDTree(cent)
            self._circum = float(np.linalg.norm(tri - cent[:, None, :], axis=2).max())
        return self._tree

    def distance(self, points, max_distance=None):
        '''
        Unsigned distance from each point to the surface

        Parameters
        ----------
        points : array_like
            ``(N, 3)``
        max_distance : float, optional
            When given, points farther than this are reported as `numpy.inf` and the search is
            restricted to nearby triangles

        Returns
        -------
        numpy.ndarray
            ``(N,)``
        '''
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        tri = self.triangles
        res = np.full(len(points), np.inf)
        if max_distance is None:
            for i, p in enumerate(points):
                cp = closest_points_on_triangles(p, tri[:, 0], tri[:, 1], tri[:, 2])
                res[i] = np.linalg.norm(cp - p, axis=1).min()
            return res
        tree = self._centroid_tree()
        candidates = tree.query_ball_point(points, max_distance + self._circum)
        for i, cand in enumerate(candidates):
            if not cand:
                continue
            t = tri[cand]
            cp = closest_points_on_triangles(points[i], t[:, 0], t[:, 1], t[:, 2])
            d = np.linalg.norm(cp - points[i], axis=1).min()
            if d <= max_distance:
                res[i] = d
        return res
