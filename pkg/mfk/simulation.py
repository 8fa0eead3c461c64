'''
Visibility accounting and capture-system studies on synthetic scenes

A scene is a camera rig, a set of occluders and a set of target points (marker cube
corners or virtual surface markers), each optionally moving per frame. A target point is
visible to a camera when it projects inside the image, its surface faces the camera and
the segment between them crosses no occluder.
'''
import csv
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import as_config
from .errors import InvalidSpec
from .occlusion import MeshOccluder
from .utils import worker_count


L = logging.getLogger(__name__)

MARKER_STANDOFF = 1e-3
''' Height of a virtual surface marker above the mesh surface, in meters '''


class TargetSet(object):
    '''
    Points whose visibility is queried, in a local frame with optional per-frame poses

    Parameters
    ----------
    name : str
    points : array_like
        ``(P, 3)`` in the target frame, or ``(T, P, 3)`` world points per frame for targets
        that deform, such as the markers of a moving body
    normals : array_like, optional
        Outward surface normals shaped like `points`. Points without normals are not
        facing-tested
    poses : PoseSequence, optional
        Target frame to world frame. Without poses the points are in world coordinates
    '''

    def __init__(self, name, points, normals=None, poses=None):
        self.name = name
        points = np.asarray(points, dtype=float)
        self.per_frame = points.ndim == 3
        if self.per_frame and poses is not None:
            raise InvalidSpec('Target {} has per-frame points and poses'.format(name))
        self.points = points if self.per_frame else points.reshape(-1, 3)
        self.normals = None if normals is None else np.asarray(normals, dtype=float).reshape(self.points.shape)
        self.poses = poses

    def __len__(self):
        return self.points.shape[-2]

    def subset(self, count):
        ''' The first `count` points, keeping the poses '''
        return TargetSet(self.name, self.points[..., :count, :],
                         None if self.normals is None else self.normals[..., :count, :], self.poses)

    def world(self, frame):
        '''
        Returns
        -------
        tuple
            World points and normals at `frame`, or ``(None, None)`` if the pose is unknown
        '''
        if self.per_frame:
            return self.points[frame], None if self.normals is None else self.normals[frame]
        if self.poses is None:
            return self.points, self.normals
        pose = self.poses[frame]
        if pose is None:
            return None, None
        normals = None if self.normals is None else pose.apply_vector(self.normals)
        return pose.apply(self.points), normals


def surface_markers(name, mesh, count, rng, poses=None):
    '''
    Virtual markers sampled uniformly over a mesh surface, raised `MARKER_STANDOFF` off it
    '''
    points, normals = mesh.sample_surface(count, rng)
    return TargetSet(name, points + MARKER_STANDOFF * normals, normals, poses)


class SyntheticScene(object):
    '''
    Cameras, occluders and targets over a number of frames

    Parameters
    ----------
    rig : list of CameraModel
    occluders : list
        `~mfk.occlusion.MeshOccluder` or `~mfk.occlusion.CapsuleOccluder`
    targets : list of TargetSet
    n_frames : int
    seed : int
    '''

    def __init__(self, rig, occluders=(), targets=(), n_frames=1, seed=0):
        if not rig:
            raise InvalidSpec('A scene needs at least one camera')
        if n_frames < 1:
            raise InvalidSpec('A scene needs at least one frame')
        names = [t.name for t in targets]
        if len(set(names)) != len(names):
            raise InvalidSpec('Target names must be unique: {}'.format(names))
        self.rig = list(rig)
        self.occluders = list(occluders)
        self.targets = list(targets)
        self.n_frames = int(n_frames)
        self.seed = seed
        self.camera_ids = np.array([c.id for c in self.rig])
        self.centers = np.array([c.center for c in self.rig])

    def target(self, name):
        for t in self.targets:
            if t.name == name:
                return t
        raise KeyError(name)

    def with_targets(self, targets):
        return SyntheticScene(self.rig, self.occluders, targets, self.n_frames, self.seed)

    def with_rig(self, rig):
        return SyntheticScene(rig, self.occluders, self.targets, self.n_frames, self.seed)


class VisibilityRecord(object):
    '''
    Which cameras see each point of one target at one frame

    Attributes
    ----------
    frame : int
    target : str
    mask : numpy.ndarray
        ``(P, C)`` boolean, columns in rig order
    camera_ids : list of list
        Per point, the ids of the cameras that see it
    '''

    def __init__(self, frame, target, mask, rig_ids):
        self.frame = frame
        self.target = target
        self.mask = mask
        self.camera_ids = [[int(i) for i in rig_ids[row]] for row in mask]

    def counts(self):
        return self.mask.sum(axis=1)

    def __eq__(self, other):
        return (isinstance(other, VisibilityRecord) and self.frame == other.frame and
                self.target == other.target and np.array_equal(self.mask, other.mask))

    __hash__ = None


def visibility_mask(scene, frame, points, normals=None, brute_force=False):
    '''
    Camera visibility of world points at one frame

    Returns
    -------
    numpy.ndarray
        ``(P, C)`` boolean
    '''
    P = len(points)
    mask = np.zeros((P, len(scene.rig)), dtype=bool)
    if not P:
        return mask
    for c, cam in enumerate(scene.rig):
        mask[:, c] = cam.in_frustum(points)
    if normals is not None:
        facing = np.einsum('pi,cpi->pc', normals, scene.centers[:, None, :] - points[None, :, :])
        mask &= facing > 0.0
    p_idx, c_idx = np.nonzero(mask)
    if len(p_idx):
        origins = scene.centers[c_idx]
        dirs = points[p_idx] - origins
        blocked = np.zeros(len(p_idx), dtype=bool)
        for occ in scene.occluders:
            open_ = ~blocked
            blocked[open_] |= occ.segment_hits(frame, origins[open_], dirs[open_], brute_force=brute_force)
        mask[p_idx[blocked], c_idx[blocked]] = False
    return mask


def visibility(scene, frame, brute_force=False):
    '''
    Visibility of every target at one frame

    Parameters
    ----------
    scene : SyntheticScene
    frame : int
    brute_force : bool
        Test every occluder triangle instead of walking the hierarchy

    Returns
    -------
    dict
        Target name to `VisibilityRecord`. Targets without a pose at `frame` are left out
    '''
    out = {}
    for target in scene.targets:
        points, normals = target.world(frame)
        if points is None:
            continue
        mask = visibility_mask(scene, frame, points, normals, brute_force)
        out[target.name] = VisibilityRecord(frame, target.name, mask, scene.camera_ids)
    return out


def _stacked_masks(scene, frames, workers=None):
    ''' Visibility masks of all targets over `frames`, stacked per target as ``(F, P, C)`` '''
    def one(f):
        return visibility(scene, f)

    with ThreadPoolExecutor(max_workers=worker_count(workers)) as ex:
        records = list(ex.map(one, frames))
    out = {}
    for target in scene.targets:
        masks = [r[target.name].mask if target.name in r
                 else np.zeros((len(target), len(scene.rig)), dtype=bool)
                 for r in records]
        out[target.name] = np.stack(masks)
    return out


class StudyRow(object):
    '''
    One line of a study table

    Attributes
    ----------
    key : int
        Subset size or marker count
    mean : float
    std : float
    samples : int
    '''

    def __init__(self, key, mean, std, samples):
        self.key = int(key)
        self.mean = float(mean)
        self.std = float(std)
        self.samples = int(samples)

    def as_dict(self):
        return {'key': self.key, 'mean': self.mean, 'std': self.std, 'samples': self.samples}

    def __eq__(self, other):
        return isinstance(other, StudyRow) and self.as_dict() == other.as_dict()

    __hash__ = None

    def __repr__(self):
        return 'StudyRow({key}, mean={mean:.4f}, std={std:.4f}, samples={samples})'.format(**self.as_dict())


def camera_count_study(scene, subset_sizes, n_samples=None, seed=0, frames=None, config=None,
                       workers=None):
    '''
    Ratio of detected target points under random camera subsets to those detected by the
    full rig

    A point is detected when at least ``simulation.detect_min_views`` cameras see it. Each
    sample draws a random ordering of the rig and takes its first ``k`` cameras for each
    subset size ``k``, so within a sample detection can only grow with ``k``.

    Parameters
    ----------
    scene : SyntheticScene
    subset_sizes : list of int
    n_samples : int, optional
        Subsets per size, default ``simulation.subset_samples``
    seed : int
    frames : iterable of int, optional
        Default all frames of the scene

    Returns
    -------
    list of StudyRow
        Keyed by subset size, in the order given
    '''
    conf = as_config(config)
    n_samples = int(n_samples or conf['simulation.subset_samples'])
    min_views = int(conf['simulation.detect_min_views'])
    C = len(scene.rig)
    for k in subset_sizes:
        if not 1 <= k <= C:
            raise InvalidSpec('Subset size {} outside 1..{}'.format(k, C))
    frames = list(range(scene.n_frames)) if frames is None else list(frames)
    masks = _stacked_masks(scene, frames, workers)
    V = np.concatenate([m.reshape(-1, C) for m in masks.values()]) if masks else np.zeros((0, C), bool)
    full = int(np.count_nonzero(V.sum(axis=1) >= min_views))
    if not full:
        L.warning('No target point is detected by the full rig; ratios are undefined')
    rng = np.random.default_rng(seed)
    ratios = np.empty((n_samples, len(subset_sizes)))
    for s in range(n_samples):
        order = rng.permutation(C)
        for i, k in enumerate(subset_sizes):
            detected = np.count_nonzero(V[:, order[:k]].sum(axis=1) >= min_views)
            ratios[s, i] = detected / full if full else np.nan
    rows = [StudyRow(k, ratios[:, i].mean(), ratios[:, i].std(), n_samples)
            for i, k in enumerate(subset_sizes)]
    for r in rows:
        L.info('%d cameras: detected ratio %.4f ± %.4f', r.key, r.mean, r.std)
    return rows


def window_starts(n_frames, window, stride):
    if window > n_frames:
        L.warning('Window of %d frames is longer than the %d-frame sequence; using the whole sequence',
                  window, n_frames)
        window = n_frames
    return list(range(0, n_frames - window + 1, stride)), window


def tracked_marker_counts(mask, track_min_views):
    '''
    Number of tracked markers per frame for every prefix of the marker list

    Parameters
    ----------
    mask : numpy.ndarray
        ``(F, P, C)`` visibility
    track_min_views : int

    Returns
    -------
    numpy.ndarray
        ``(F, P)``; column ``n - 1`` counts tracked markers among the first ``n``
    '''
    tracked = mask.sum(axis=2) >= track_min_views
    return np.cumsum(tracked, axis=1)


def virtual_marker_study(scene, target, counts, window=None, stride=None, starts=None, config=None,
                         workers=None):
    '''
    Ratio of sampled windows in which an object stays trackable with a given number of
    surface markers

    A marker is tracked at a frame when at least ``simulation.track_min_views`` cameras see
    it. A window fails when any of its frames has fewer than
    ``simulation.min_tracked_markers`` tracked markers. Marker sets for smaller counts are
    prefixes of the set for the largest count.

    Parameters
    ----------
    scene : SyntheticScene
    target : str
        Name of a target holding at least ``max(counts)`` points, e.g. from `surface_markers`
    counts : list of int
    window : int, optional
        Frames per window, default ``simulation.window``
    stride : int, optional
        Spacing of window starts, default ``simulation.stride``
    starts : list of int, optional
        Explicit window starts; overrides `stride`

    Returns
    -------
    list of StudyRow
        Keyed by marker count; ``std`` is over windows
    '''
    conf = as_config(config)
    window = int(window or conf['simulation.window'])
    stride = int(stride or conf['simulation.stride'])
    min_views = int(conf['simulation.track_min_views'])
    min_markers = int(conf['simulation.min_tracked_markers'])
    tgt = scene.target(target)
    if max(counts) > len(tgt):
        raise InvalidSpec('Target {} has {} markers, study asks for {}'
                          .format(target, len(tgt), max(counts)))
    if min(counts) < 1:
        raise InvalidSpec('Marker counts must be positive')
    sub = scene.with_targets([tgt.subset(max(counts))])
    mask = _stacked_masks(sub, range(scene.n_frames), workers)[target]
    per_frame = tracked_marker_counts(mask, min_views)

    if starts is None:
        starts, window = window_starts(scene.n_frames, window, stride)
    else:
        starts = [int(s) for s in starts]
        if any(s < 0 or s + window > scene.n_frames for s in starts):
            raise InvalidSpec('Window starts must leave a full window inside the sequence')
    rows = []
    for n in counts:
        ok = per_frame[:, n - 1] >= min_markers
        success = np.array([ok[s:s + window].all() for s in starts], dtype=float)
        rows.append(StudyRow(n, success.mean(), success.std(), len(starts)))
        L.info('%d markers: tracked ratio %.4f over %d windows', n, rows[-1].mean, len(starts))
    return rows


def write_study_csv(rows, path, key='subset_size'):
    '''
    Write study rows as CSV with columns `key`, ``mean``, ``stddev``

    Parameters
    ----------
    rows : list of StudyRow
    path : str
    key : str
        ``subset_size`` or ``marker_count``
    '''
    with open(path, 'w', newline='') as f:
        w = csv.writer(f, lineterminator='\n')
        w.writerow([key, 'mean', 'stddev'])
        for r in rows:
            w.writerow([r.key, repr(r.mean), repr(r.std)])


def read_study_csv(path):
    with open(path, newline='') as f:
        rd = csv.reader(f)
        next(rd)
        return [StudyRow(int(k), float(m), float(s), 0) for k, m, s in rd]


def mesh_occluder(mesh, poses=None, config=None):
    ''' A `~mfk.occlusion.MeshOccluder` with the configured hierarchy leaf size '''
    conf = as_config(config)
    return MeshOccluder(mesh, poses, leaf_size=conf['simulation.bvh_leaf_size'])
