'''
Marker cubes and flat square markers

A marker cube carries one square fiducial per face. Face corners are listed
counter-clockwise as seen from outside the cube, so that ``(c1 - c0) x (c2 - c1)`` points
along the outward face normal.
'''
import numpy as np

from .errors import InvariantViolation
from .transform import RigidTransform

FACES_PER_CUBE = 6
CORNERS_PER_FACE = 4

_FACE_AXES = (
    # normal, u, v with u x v = normal
    ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
    ((-1, 0, 0), (0, 0, 1), (0, 1, 0)),
    ((0, 1, 0), (0, 0, 1), (1, 0, 0)),
    ((0, -1, 0), (1, 0, 0), (0, 0, 1)),
    ((0, 0, 1), (1, 0, 0), (0, 1, 0)),
    ((0, 0, -1), (0, 1, 0), (1, 0, 0)),
)


def square_corners(center, u, v, edge):
    '''
    Corners of a square with the given center and in-plane axes, counter-clockwise about
    ``u x v``
    '''
    c = np.asarray(center, dtype=float)
    u = np.asarray(u, dtype=float) * edge / 2.0
    v = np.asarray(v, dtype=float) * edge / 2.0
    return np.array([c - u - v, c + u - v, c + u + v, c - u + v])


def cube_face_corners(edge_length):
    ''' ``(6, 4, 3)`` corner coordinates of a cube centered on the origin '''
    h = edge_length / 2.0
    return np.array([square_corners(np.multiply(n, h), u, v, edge_length) for n, u, v in _FACE_AXES])


def face_normals():
    return np.array([n for n, _, _ in _FACE_AXES], dtype=float)


class MarkerCube(object):
    '''
    A rigid cube with one square marker per face

    Parameters
    ----------
    id : int
        Cube identifier. The marker on face ``f`` has id ``6 * id + f``
    edge_length : float
        Edge length in meters
    mount : RigidTransform, optional
        Cube frame to host (object part) frame. Defaults to the identity
    face_corner_coords : array_like, optional
        ``(6, 4, 3)`` corners in the cube frame. Defaults to the ideal cube
    '''

    def __init__(self, id, edge_length, mount=None, face_corner_coords=None):
        if edge_length <= 0:
            raise InvariantViolation('Cube {} has non-positive edge length'.format(id))
        self.id = int(id)
        self.edge_length = float(edge_length)
        self.mount = mount if mount is not None else RigidTransform()
        if face_corner_coords is None:
            coords = cube_face_corners(self.edge_length)
        else:
            coords = np.array(face_corner_coords, dtype=float).reshape(FACES_PER_CUBE, CORNERS_PER_FACE, 3)
            self._check_coords(coords)
        coords.flags.writeable = False
        self.face_corner_coords = coords

    def _check_coords(self, coords):
        expect = self.edge_length * np.sqrt(2) / 2.0
        centers = coords.mean(axis=1)
        dist = np.linalg.norm(coords - centers[:, None, :], axis=2)
        if not np.allclose(dist, expect, atol=1e-6):
            raise InvariantViolation('Cube {} corners are not at edge*sqrt(2)/2 from face centers'.format(self.id))
        for f in range(FACES_PER_CUBE):
            c = coords[f]
            n = np.cross(c[1] - c[0], c[2] - c[1])
            if np.dot(n, centers[f] - centers.mean(axis=0)) <= 0:
                raise InvariantViolation('Cube {} face {} corners are not counter-clockwise from outside'
                                         .format(self.id, f))

    def face_marker_id(self, face):
        return FACES_PER_CUBE * self.id + face

    @property
    def marker_ids(self):
        return [self.face_marker_id(f) for f in range(FACES_PER_CUBE)]

    def corner_keys(self):
        ''' ``(marker_id, corner_index)`` pairs in the order of `corner_points` '''
        return [(self.face_marker_id(f), c) for f in range(FACES_PER_CUBE) for c in range(CORNERS_PER_FACE)]

    def corner_points(self):
        ''' ``(24, 3)`` corners in the host frame '''
        return self.mount.apply(self.face_corner_coords.reshape(-1, 3))

    def corner_normals(self):
        ''' Outward face normal of each corner in the host frame '''
        return self.mount.apply_vector(np.repeat(face_normals(), CORNERS_PER_FACE, axis=0))

    def to_dict(self):
        return {'id': self.id, 'edge_length': self.edge_length, 'mount': self.mount.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(d['id'], d['edge_length'], RigidTransform.from_dict(d['mount']))

    def __eq__(self, other):
        return (isinstance(other, MarkerCube) and self.id == other.id and
                self.edge_length == other.edge_length and self.mount == other.mount)

    __hash__ = None

    def __repr__(self):
        return 'MarkerCube(id={}, edge_length={})'.format(self.id, self.edge_length)


def canonical_lookup(cubes):
    ''' Map ``(marker_id, corner_index)`` to host-frame corner positions for some cubes '''
    res = {}
    for cube in cubes:
        for key, p in zip(cube.corner_keys(), cube.corner_points()):
            res[key] = p
    return res
