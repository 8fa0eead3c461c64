'''
Pinhole camera models and synthetic rig layouts
'''
import logging

import numpy as np

from .errors import BehindCamera, InvariantViolation
from .transform import RigidTransform


L = logging.getLogger(__name__)

MIN_DEPTH = 1e-9

PIXEL_PITCH = 0.00345
''' Sensor pixel pitch in millimeters for the default machine-vision sensor '''

LENS_FAMILIES = ((3.0, 30), (5.0, 20), (6.0, 20))
''' Focal lengths in millimeters and how many cameras of the full rig carry each '''

DEFAULT_RESOLUTION = (2048, 1536)


class CameraModel(object):
    '''
    A calibrated pinhole camera

    Parameters
    ----------
    id : int or str
        Camera identifier, unique within a rig
    intrinsics : array_like
        3x3 upper-triangular matrix with positive focal lengths
    extrinsics : RigidTransform
        World-to-camera transform
    resolution : tuple of int
        ``(width, height)`` in pixels
    '''

    def __init__(self, id, intrinsics, extrinsics, resolution):
        K = np.array(intrinsics, dtype=float).reshape(3, 3)
        if K[0, 0] <= 0 or K[1, 1] <= 0:
            raise InvariantViolation('Camera {} has a non-positive focal length'.format(id))
        if K[1, 0] != 0 or K[2, 0] != 0 or K[2, 1] != 0 or K[2, 2] != 1:
            raise InvariantViolation('Camera {} intrinsics are not upper triangular with K[2,2] = 1'.format(id))
        width, height = (int(x) for x in resolution)
        if width <= 0 or height <= 0:
            raise InvariantViolation('Camera {} has an empty resolution'.format(id))
        if not (0 <= K[0, 2] <= width and 0 <= K[1, 2] <= height):
            raise InvariantViolation('Camera {} principal point lies outside the image'.format(id))
        if not isinstance(extrinsics, RigidTransform):
            raise InvariantViolation('Camera {} extrinsics must be a RigidTransform'.format(id))
        K.flags.writeable = False
        self.id = id
        self.intrinsics = K
        self.extrinsics = extrinsics
        self.resolution = (width, height)

    @property
    def center(self):
        ''' Camera center in world coordinates '''
        return self.extrinsics.inverse().translation

    @property
    def projection_matrix(self):
        return self.intrinsics @ np.hstack([self.extrinsics.matrix, self.extrinsics.translation[:, None]])

    def to_camera(self, points):
        return self.extrinsics.apply(points)

    def project_many(self, points):
        '''
        Project world points without raising for points behind the camera

        Returns
        -------
        pixels : numpy.ndarray
            ``(..., 2)``. Entries for points behind the camera are NaN
        depth : numpy.ndarray
            ``(...)`` camera-frame depth
        '''
        pc = self.to_camera(points)
        depth = pc[..., 2]
        uvw = pc @ self.intrinsics.T
        with np.errstate(divide='ignore', invalid='ignore'):
            pix = uvw[..., :2] / uvw[..., 2:3]
        pix[depth <= MIN_DEPTH] = np.nan
        return pix, depth

    def project(self, point):
        '''
        Project world points to pixels

        Parameters
        ----------
        point : array_like
            ``(3,)`` or ``(N, 3)``

        Raises
        ------
        BehindCamera
            If any point has non-positive depth
        '''
        pix, depth = self.project_many(point)
        if np.any(depth <= MIN_DEPTH):
            raise BehindCamera('Point lies behind camera {}'.format(self.id))
        return pix

    def in_frustum(self, points):
        pix, depth = self.project_many(points)
        w, h = self.resolution
        with np.errstate(invalid='ignore'):
            return ((depth > MIN_DEPTH) &
                    (pix[..., 0] >= 0) & (pix[..., 0] < w) &
                    (pix[..., 1] >= 0) & (pix[..., 1] < h))

    def contains_pixel(self, pixel):
        w, h = self.resolution
        return 0 <= pixel[0] <= w and 0 <= pixel[1] <= h

    def ray(self, pixel):
        ''' Unit direction in world coordinates of the ray through `pixel` '''
        d = np.linalg.solve(self.intrinsics, np.array([pixel[0], pixel[1], 1.0]))
        d = self.extrinsics.matrix.T @ d
        return d / np.linalg.norm(d)

    def to_dict(self):
        return {'id': self.id,
                'K': self.intrinsics.tolist(),
                'extrinsics': self.extrinsics.to_dict(),
                'resolution': list(self.resolution)}

    @classmethod
    def from_dict(cls, d):
        return cls(d['id'], d['K'], RigidTransform.from_dict(d['extrinsics']), d['resolution'])

    def __eq__(self, other):
        return (isinstance(other, CameraModel) and self.id == other.id and
                np.array_equal(self.intrinsics, other.intrinsics) and
                self.extrinsics == other.extrinsics and self.resolution == other.resolution)

    __hash__ = None

    def __repr__(self):
        return 'CameraModel(id={!r}, center={})'.format(self.id, np.round(self.center, 3).tolist())


def project(camera, point):
    return camera.project(point)


def look_at(eye, target, up=(0.0, 0.0, 1.0)):
    '''
    World-to-camera transform for a camera at `eye` looking at `target`

    The camera frame has +z forward, +x right and +y down in the image.
    '''
    eye = np.asarray(eye, dtype=float)
    fwd = np.asarray(target, dtype=float) - eye
    fwd /= np.linalg.norm(fwd)
    right = np.cross(fwd, up)
    if np.linalg.norm(right) < 1e-9:
        right = np.cross(fwd, (1.0, 0.0, 0.0))
    right /= np.linalg.norm(right)
    down = np.cross(fwd, right)
    R = np.vstack([right, down, fwd])
    return RigidTransform.from_matrix(R, -R @ eye)


def intrinsics_for(focal_mm, resolution=DEFAULT_RESOLUTION, pixel_pitch=PIXEL_PITCH):
    f = focal_mm / pixel_pitch
    w, h = resolution
    return np.array([[f, 0.0, w / 2.0],
                     [0.0, f, h / 2.0],
                     [0.0, 0.0, 1.0]])


def make_rig(n_cameras=70, room=(4.0, 4.0, 3.0), target=(0.0, 0.0, 1.0), seed=0,
             resolution=DEFAULT_RESOLUTION):
    '''
    Lay out cameras on the walls and ceiling edge of a box-shaped room

    Cameras alternate between a low ring and a high ring around the perimeter and all
    aim near `target`. Lenses are assigned in the proportions of `LENS_FAMILIES`.

    Parameters
    ----------
    n_cameras : int
    room : tuple of float
        Room extent ``(x, y, z)`` in meters, centered on the origin in x and y
    target : tuple of float
        Point the cameras aim at
    seed : int
        Seed for the small jitter applied to aim points and lens assignment

    Returns
    -------
    list of CameraModel
    '''
    rng = np.random.default_rng(seed)
    total = sum(c for _, c in LENS_FAMILIES)
    focals = []
    for focal, count in LENS_FAMILIES:
        focals += [focal] * int(round(count * n_cameras / total))
    focals = (focals + [LENS_FAMILIES[0][0]] * n_cameras)[:n_cameras]
    focals = list(rng.permutation(focals))

    hx, hy, hz = room[0] / 2.0, room[1] / 2.0, room[2]
    rig = []
    for i in range(n_cameras):
        ang = 2 * np.pi * i / n_cameras
        d = np.array([np.cos(ang), np.sin(ang)])
        # project the direction onto the room walls
        s = 1.0 / max(abs(d[0]) / hx, abs(d[1]) / hy)
        height = 0.4 if i % 2 == 0 else hz - 0.4
        eye = np.array([d[0] * s * 0.95, d[1] * s * 0.95, height])
        aim = np.asarray(target, dtype=float) + rng.normal(scale=0.1, size=3)
        rig.append(CameraModel(i, intrinsics_for(focals[i], resolution), look_at(eye, aim), resolution))
    L.debug('Built a rig of %d cameras', n_cameras)
    return rig


def rig_by_id(rig):
    if isinstance(rig, dict):
        return rig
    return {c.id: c for c in rig}
