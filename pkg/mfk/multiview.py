'''
Multi-view triangulation of marker corners
'''
import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .camera import MIN_DEPTH, rig_by_id
from .config import as_config
from .errors import (BehindCamera, DegenerateGeometry, EmptySession, InconsistentDetections,
                     InsufficientViews, InvariantViolation, MFKError)
from .utils import worker_count


L = logging.getLogger(__name__)


class CornerDetection(object):
    '''
    A 2D detection of one corner of one square marker in one camera image

    Parameters
    ----------
    camera_id : int or str
    marker_id : int
    corner_index : int
        0 to 3
    pixel : array_like
        ``(u, v)``
    frame : int
    '''

    __slots__ = ('camera_id', 'marker_id', 'corner_index', 'pixel', 'frame')

    def __init__(self, camera_id, marker_id, corner_index, pixel, frame):
        if corner_index not in (0, 1, 2, 3):
            raise InvariantViolation('Corner index must be in 0..3, got {}'.format(corner_index))
        pixel = np.array(pixel, dtype=float).reshape(2)
        if not np.all(np.isfinite(pixel)):
            raise InvariantViolation('Detection pixel is not finite')
        self.camera_id = camera_id
        self.marker_id = int(marker_id)
        self.corner_index = int(corner_index)
        self.pixel = pixel
        self.frame = int(frame)

    @property
    def key(self):
        return (self.marker_id, self.corner_index)

    def to_dict(self):
        return {'frame': self.frame, 'camera': self.camera_id, 'marker': self.marker_id,
                'corner': self.corner_index, 'uv': self.pixel.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d['camera'], d['marker'], d['corner'], d['uv'], d['frame'])

    def __eq__(self, other):
        return (isinstance(other, CornerDetection) and self.camera_id == other.camera_id and
                self.key == other.key and self.frame == other.frame and
                np.array_equal(self.pixel, other.pixel))

    __hash__ = None

    def __repr__(self):
        return 'CornerDetection(cam={!r}, marker={}, corner={}, frame={}, uv={})'.format(
            self.camera_id, self.marker_id, self.corner_index, self.frame, self.pixel.tolist())


class TriangulatedCorner(object):
    '''
    A 3D corner position solved from two or more views
    '''

    __slots__ = ('marker_id', 'corner_index', 'frame', 'position', 'reprojection_rms', 'n_views',
                 'camera_ids')

    def __init__(self, marker_id, corner_index, frame, position, reprojection_rms, n_views,
                 camera_ids=()):
        if n_views < 2:
            raise InvariantViolation('A triangulated corner needs at least two views')
        if reprojection_rms < 0:
            raise InvariantViolation('Negative reprojection error')
        self.marker_id = int(marker_id)
        self.corner_index = int(corner_index)
        self.frame = int(frame)
        self.position = np.array(position, dtype=float).reshape(3)
        self.reprojection_rms = float(reprojection_rms)
        self.n_views = int(n_views)
        self.camera_ids = tuple(camera_ids)

    @property
    def key(self):
        return (self.marker_id, self.corner_index)

    @property
    def weight(self):
        ''' Confidence weight used when fitting rigid transforms '''
        return 1.0 / (1.0 + self.reprojection_rms)

    def to_dict(self):
        return {'frame': self.frame, 'marker': self.marker_id, 'corner': self.corner_index,
                'position': self.position.tolist(), 'rms': self.reprojection_rms,
                'n_views': self.n_views, 'cameras': list(self.camera_ids)}

    @classmethod
    def from_dict(cls, d):
        return cls(d['marker'], d['corner'], d['frame'], d['position'], d['rms'], d['n_views'],
                   d.get('cameras', ()))

    def __eq__(self, other):
        return (isinstance(other, TriangulatedCorner) and self.key == other.key and
                self.frame == other.frame and np.array_equal(self.position, other.position) and
                self.reprojection_rms == other.reprojection_rms and self.n_views == other.n_views and
                self.camera_ids == other.camera_ids)

    __hash__ = None

    def __repr__(self):
        return 'TriangulatedCorner(marker={}, corner={}, frame={}, rms={:.3f}, n_views={})'.format(
            self.marker_id, self.corner_index, self.frame, self.reprojection_rms, self.n_views)


def _dlt(Ps, normalized):
    rows = []
    for P, (x, y) in zip(Ps, normalized):
        r1 = x * P[2] - P[0]
        r2 = y * P[2] - P[1]
        rows.append(r1 / np.linalg.norm(r1))
        rows.append(r2 / np.linalg.norm(r2))
    _, _, vt = np.linalg.svd(np.array(rows))
    X = vt[-1]
    if abs(X[3]) < 1e-12:
        raise DegenerateGeometry('Triangulated point lies at infinity')
    return X[:3] / X[3]


def _residuals(X, cams, pixels):
    ''' Reprojection residuals ``(n, 2)`` and the stacked Jacobian ``(2n, 3)`` '''
    res = np.empty((len(cams), 2))
    jac = np.empty((len(cams), 2, 3))
    for i, (cam, uv) in enumerate(zip(cams, pixels)):
        R = cam.extrinsics.matrix
        K = cam.intrinsics
        xc = R @ X + cam.extrinsics.translation
        if xc[2] <= MIN_DEPTH:
            raise BehindCamera('Triangulated point lies behind camera {}'.format(cam.id))
        p = K @ xc
        u, v = p[0] / p[2], p[1] / p[2]
        res[i] = (u - uv[0], v - uv[1])
        jac[i, 0] = ((K[0] - u * K[2]) / p[2]) @ R
        jac[i, 1] = ((K[1] - v * K[2]) / p[2]) @ R
    return res, jac


def _solve(cams, pixels, conf):
    normalized = []
    for cam, uv in zip(cams, pixels):
        n = np.linalg.solve(cam.intrinsics, np.array([uv[0], uv[1], 1.0]))
        normalized.append(n[:2] / n[2])
    Ps = [np.hstack([c.extrinsics.matrix, c.extrinsics.translation[:, None]]) for c in cams]
    X = _dlt(Ps, normalized)
    try:
        res, jac = _residuals(X, cams, pixels)
    except BehindCamera:
        raise DegenerateGeometry('Linear triangulation placed the point behind a camera')
    for _ in range(int(conf['multiview.gn_max_steps'])):
        J = jac.reshape(-1, 3)
        step = np.linalg.lstsq(J, -res.reshape(-1), rcond=None)[0]
        try:
            new_res, new_jac = _residuals(X + step, cams, pixels)
        except BehindCamera:
            break
        if np.sum(new_res ** 2) > np.sum(res ** 2):
            break
        X = X + step
        res, jac = new_res, new_jac
        if np.linalg.norm(step) < conf['multiview.gn_step_tol']:
            break
    return X, res


def _max_ray_angle(cams, pixels):
    rays = np.array([c.ray(uv) for c, uv in zip(cams, pixels)])
    cos = np.clip(np.abs(rays @ rays.T), 0.0, 1.0)
    return float(np.arccos(cos.min()))


def triangulate(detections, rig, config=None):
    '''
    Triangulate one marker corner from its detections in several cameras

    A linear solve seeds a few Gauss-Newton steps on the reprojection error. Views whose
    error exceeds ``outlier_factor`` times the median (and at least ``outlier_floor_px``) are
    dropped once, and the corner is solved again from the remaining views.

    Parameters
    ----------
    detections : list of CornerDetection
        Detections of the same corner of the same marker at the same frame
    rig : list of CameraModel or dict
    config : Config, optional

    Returns
    -------
    TriangulatedCorner
        `~TriangulatedCorner.reprojection_rms` is the per-coordinate RMS in pixels over the
        views kept
    '''
    conf = as_config(config)
    cams_by_id = rig_by_id(rig)
    detections = list(detections)
    if not detections:
        raise InsufficientViews('No detections to triangulate')
    first = detections[0]
    if any(d.key != first.key or d.frame != first.frame for d in detections):
        raise InconsistentDetections('Detections mix different corners or frames')
    seen = set()
    for d in detections:
        if d.camera_id in seen:
            raise InconsistentDetections('Camera {} contributes more than one detection of marker {}'
                                         ' corner {}'.format(d.camera_id, d.marker_id, d.corner_index))
        seen.add(d.camera_id)
        if d.camera_id not in cams_by_id:
            raise InconsistentDetections('Detection from unknown camera {}'.format(d.camera_id))
    if len(seen) < 2:
        raise InsufficientViews('Marker {} corner {} at frame {} seen by {} camera(s)'
                                .format(first.marker_id, first.corner_index, first.frame, len(seen)))

    cams = [cams_by_id[d.camera_id] for d in detections]
    pixels = [d.pixel for d in detections]
    if _max_ray_angle(cams, pixels) < conf['multiview.parallel_tol_rad']:
        raise DegenerateGeometry('All viewing rays are parallel')

    X, res = _solve(cams, pixels, conf)
    err = np.linalg.norm(res, axis=1)
    if len(err) > 2:
        thresh = max(conf['multiview.outlier_factor'] * np.median(err), conf['multiview.outlier_floor_px'])
        keep = err <= thresh
        if not keep.all() and keep.sum() >= 2:
            L.debug('Dropping %d outlier view(s) of marker %d corner %d at frame %d',
                    (~keep).sum(), first.marker_id, first.corner_index, first.frame)
            cams = [c for c, k in zip(cams, keep) if k]
            pixels = [p for p, k in zip(pixels, keep) if k]
            detections = [d for d, k in zip(detections, keep) if k]
            if _max_ray_angle(cams, pixels) < conf['multiview.parallel_tol_rad']:
                raise DegenerateGeometry('All remaining viewing rays are parallel')
            X, res = _solve(cams, pixels, conf)

    rms = float(np.sqrt(np.mean(res ** 2)))
    return TriangulatedCorner(first.marker_id, first.corner_index, first.frame, X, rms,
                              len(detections), sorted((d.camera_id for d in detections), key=str))


def group_detections(detections):
    ''' Group detections by ``(frame, marker_id, corner_index)`` '''
    groups = defaultdict(list)
    for d in detections:
        groups[(d.frame,) + d.key].append(d)
    return groups


def triangulate_frame(detections, rig, config=None):
    '''
    Triangulate every corner with at least two views, skipping corners that fail

    Returns
    -------
    list of TriangulatedCorner
    '''
    res = []
    for (frame, marker, corner), group in sorted(group_detections(detections).items()):
        if len({d.camera_id for d in group}) < 2:
            continue
        try:
            res.append(triangulate(group, rig, config))
        except MFKError as e:
            L.debug('Skipping marker %d corner %d at frame %d: %s', marker, corner, frame, e)
    return res


def triangulate_all(detections, rig, config=None, workers=None):
    '''
    Triangulate every frame of a detection stream on a thread pool

    Returns
    -------
    dict
        Frame number to list of `TriangulatedCorner`
    '''
    by_frame = defaultdict(list)
    for d in detections:
        by_frame[d.frame].append(d)
    frames = sorted(by_frame)
    with ThreadPoolExecutor(max_workers=worker_count(workers)) as ex:
        solved = list(ex.map(lambda f: triangulate_frame(by_frame[f], rig, config), frames))
    return dict(zip(frames, solved))


class ReprojectionReport(object):
    '''
    Reprojection statistics over a session

    Attributes
    ----------
    per_frame : dict
        Frame to ``(mean rms, mean view count)``
    rms : float
        Mean per-corner reprojection RMS in pixels over all frames
    mean_views : float
    manipulation_rms : float or None
        The same over frames flagged as in manipulation
    manipulation_views : float or None
    '''

    def __init__(self, per_frame, rms, mean_views, manipulation_rms, manipulation_views):
        self.per_frame = per_frame
        self.rms = rms
        self.mean_views = mean_views
        self.manipulation_rms = manipulation_rms
        self.manipulation_views = manipulation_views

    def as_dict(self):
        return {'rms_px': self.rms, 'mean_views': self.mean_views,
                'manipulation_rms_px': self.manipulation_rms,
                'manipulation_mean_views': self.manipulation_views}


def reprojection_report(triangulated, manipulation_frames=()):
    '''
    Summarize reprojection error and view counts

    Parameters
    ----------
    triangulated : dict
        Frame to list of `TriangulatedCorner`
    manipulation_frames : iterable of int
        Frames with a contact flag

    Returns
    -------
    ReprojectionReport
    '''
    corners = [c for cs in triangulated.values() for c in cs]
    if not corners:
        raise EmptySession('No triangulated corners to report on')
    per_frame = {}
    for f, cs in triangulated.items():
        if cs:
            per_frame[f] = (float(np.mean([c.reprojection_rms for c in cs])),
                            float(np.mean([c.n_views for c in cs])))
    manip = set(manipulation_frames)
    mcorners = [c for c in corners if c.frame in manip]
    return ReprojectionReport(
        per_frame,
        float(np.mean([c.reprojection_rms for c in corners])),
        float(np.mean([c.n_views for c in corners])),
        float(np.mean([c.reprojection_rms for c in mcorners])) if mcorners else None,
        float(np.mean([c.n_views for c in mcorners])) if mcorners else None)
