'''
Post-processing of tracked streams: wrist fusion, object gap filling and jitter analysis
'''
import logging

import numpy as np
from scipy.spatial.transform import Rotation

from . import CAMERA_RATE
from .config import as_config
from .errors import (InvariantViolation, LengthMismatch, MissingBoundary, NoAnchor, NoNearbyJoint,
                     TooShort)
from .representation import rotation_6d
from .transform import PoseSequence, interpolate


L = logging.getLogger(__name__)

NO_ANCHOR = 'no_anchor'
NO_NEARBY_JOINT = 'no_nearby_joint'
STATIC = 'static'


def confidence_weight(n_views, rms):
    '''
    Confidence of a marker-derived pose in ``[0, 1)``

    ``n / (n + 3) * 1 / (1 + rms)`` for ``n`` contributing views and reprojection RMS in
    pixels. Zero views give zero confidence.
    '''
    n = np.asarray(n_views, dtype=float)
    rms = np.asarray(rms, dtype=float)
    return np.where(n > 0, n / (n + 3.0) / (1.0 + np.nan_to_num(rms, nan=np.inf)), 0.0)


class FusionResult(object):
    '''
    Attributes
    ----------
    poses : PoseSequence
    flags : list of str
    '''

    def __init__(self, poses, flags):
        self.poses = poses
        self.flags = flags


def _untracked_runs(tracked):
    runs, start = [], None
    for t, ok in enumerate(tracked):
        if not ok and start is None:
            start = t
        elif ok and start is not None:
            runs.append((start, t - 1))
            start = None
    if start is not None:
        runs.append((start, len(tracked) - 1))
    return runs


def fuse_wrist(marker, mocap, confidence, config=None, strict=False):
    '''
    Fuse a marker-tracked wrist stream with the suit's wrist stream

    The suit provides the motion; the marker stream corrects its placement. The correction
    is the confidence-weighted, Gaussian-smoothed offset between the two streams, taken
    within each run of tracked frames. Its bandwidth shrinks to zero as confidence reaches
    one, so fully trusted frames follow the markers exactly. Frames where marker tracking
    failed follow the suit rigidly, re-anchored with the correction of the nearest tracked
    frame.

    Parameters
    ----------
    marker : PoseSequence
        Wrist poses from markers; invalid where tracking failed
    mocap : PoseSequence
        Wrist poses from the suit, already in the camera frame
    confidence : array_like
        ``(T,)`` in ``[0, 1]``, see `confidence_weight`
    config : Config, optional
    strict : bool
        Raise `NoAnchor` instead of flagging one-sided or missing anchors

    Returns
    -------
    FusionResult
    '''
    conf = as_config(config)
    n = len(mocap)
    if len(marker) != n:
        raise LengthMismatch('Marker stream has {} frames, suit stream {}'.format(len(marker), n))
    c = np.clip(np.asarray(confidence, dtype=float).reshape(-1), 0.0, 1.0)
    if len(c) != n:
        raise LengthMismatch('{} confidence values for {} frames'.format(len(c), n))
    c = np.where(marker.valid & mocap.valid, c, 0.0)
    tracked = c > 0
    flags = []
    if not tracked.any():
        msg = 'No tracked marker frame to anchor the suit stream'
        if strict:
            raise NoAnchor(msg)
        L.warning(msg)
        return FusionResult(mocap.copy(), [NO_ANCHOR])
    runs = _untracked_runs(tracked)
    if runs and (runs[0][0] == 0 or runs[-1][1] == n - 1):
        msg = 'Marker tracking is missing at a sequence boundary; anchoring on one side only'
        if strict:
            raise NoAnchor(msg)
        L.warning(msg)
        flags.append(NO_ANCHOR)

    mocap_rot = mocap.rotations
    off_t = marker.translations - mocap.translations
    off_r = marker.rotations * mocap_rot.inv()
    tracked_idx = np.flatnonzero(tracked)
    # tracked frames separated by a gap belong to different runs
    run_of = np.cumsum(np.r_[0, np.diff(tracked_idx) > 1])
    sigma_max = float(conf['postprocess.fusion_max_sigma'])

    corr_t = np.empty((n, 3))
    corr_r = [None] * n
    for k, t in enumerate(tracked_idx):
        sigma = sigma_max * (1.0 - c[t])
        if sigma < 1e-9:
            corr_t[t], corr_r[t] = off_t[t], off_r[t]
            continue
        h = int(np.ceil(3 * sigma))
        lo, hi = np.searchsorted(tracked_idx, [t - h, t + h + 1])
        win = tracked_idx[lo:hi][run_of[lo:hi] == run_of[k]]
        w = np.exp(-0.5 * ((win - t) / sigma) ** 2) * c[win]
        corr_t[t] = w @ off_t[win] / w.sum()
        corr_r[t] = off_r[win].mean(weights=w)
    for t in np.flatnonzero(~tracked):
        # rigid re-anchoring on the nearest tracked frame
        a = tracked_idx[np.argmin(np.abs(tracked_idx - t))]
        corr_t[t], corr_r[t] = corr_t[a], corr_r[a]

    trans = mocap.translations + corr_t
    rots = [corr_r[t] * mocap_rot[t] for t in range(n)]
    fused = PoseSequence.from_rotations(Rotation.concatenate(rots), trans, mocap.valid.copy())
    return FusionResult(fused, flags)


class TrackGap(object):
    '''
    A run of frames ``t0 .. t1`` (inclusive) where an object track is missing

    An empty gap has ``t1 == t0 - 1``.
    '''

    def __init__(self, track_id, t0, t1, n_frames=None):
        if t1 < t0 - 1:
            raise InvariantViolation('Gap end {} precedes its start {}'.format(t1, t0))
        if t0 < 0 or (n_frames is not None and t1 >= n_frames):
            raise InvariantViolation('Gap {}..{} lies outside the session'.format(t0, t1))
        self.track_id = track_id
        self.t0 = int(t0)
        self.t1 = int(t1)

    @property
    def frames(self):
        return list(range(self.t0, self.t1 + 1))

    def __len__(self):
        return self.t1 - self.t0 + 1

    def __repr__(self):
        return 'TrackGap({!r}, {}, {})'.format(self.track_id, self.t0, self.t1)


def baseline_interpolate(gap, pose_before, pose_after):
    '''
    Linear translation and slerp rotation between the poses bounding a gap

    Parameters
    ----------
    gap : TrackGap
    pose_before : RigidTransform
        Pose at ``t0 - 1``
    pose_after : RigidTransform
        Pose at ``t1 + 1``

    Returns
    -------
    list of RigidTransform
    '''
    if pose_before is None or pose_after is None:
        raise MissingBoundary('Gap {} lacks a pose on {} side'.format(
            gap, 'the leading' if pose_before is None else 'the trailing'))
    if len(gap) == 0:
        return []
    span = float(gap.t1 - gap.t0 + 2)
    alpha = (np.arange(gap.t0, gap.t1 + 1) - (gap.t0 - 1)) / span
    return interpolate(pose_before, pose_after, alpha)


class GapFill(object):
    '''
    Attributes
    ----------
    gap : TrackGap
    poses : list of RigidTransform
        One per gap frame
    joint : int or None
        The skeleton joint the object was attached to, if any
    flags : list of str
    '''

    def __init__(self, gap, poses, joint, flags):
        self.gap = gap
        self.poses = poses
        self.joint = joint
        self.flags = flags


def _moved(a, b, conf):
    dt, da = a.distance_to(b)
    return dt > conf['postprocess.moved_translation'] or da > np.deg2rad(conf['postprocess.moved_rotation_deg'])


def _nearest_joint(joints, pose, surface, radius):
    local = pose.inverse().apply(joints)
    d = surface.distance(local, max_distance=radius)
    j = int(np.argmin(d))
    return j if np.isfinite(d[j]) else None


def fill_object_gap(gap, skeleton, track, surface, config=None, strict=False):
    '''
    Fill a gap in an object track using the skeleton joint that carries the object

    If the object moved across the gap and the same joint is nearest the object surface,
    within ``postprocess.proximity_radius``, at both boundary frames, the object follows that
    joint. Its joint-relative pose is blended between the two boundaries. Otherwise the gap
    is filled by `baseline_interpolate`, or by holding the only known boundary pose.

    Parameters
    ----------
    gap : TrackGap
    skeleton : SkeletonStream
    track : PoseSequence
        Object poses; the gap frames are ignored
    surface : TriangleMesh
        Object surface in the object's frame
    config : Config, optional
    strict : bool
        Raise `NoAnchor` or `NoNearbyJoint` instead of flagging a fallback

    Returns
    -------
    GapFill
    '''
    conf = as_config(config)
    n = len(track)
    if len(skeleton) != n:
        raise LengthMismatch('Skeleton has {} frames, track {}'.format(len(skeleton), n))
    if len(gap) == 0:
        return GapFill(gap, [], None, [])
    a, b = gap.t0 - 1, gap.t1 + 1
    before = track[a] if a >= 0 else None
    after = track[b] if b < n else None
    if before is None and after is None:
        raise MissingBoundary('Gap {} has no known pose on either side'.format(gap))
    flags = []
    if before is None or after is None:
        if strict:
            raise NoAnchor('Gap {} touches the sequence boundary'.format(gap))
        flags.append(NO_ANCHOR)
    elif not _moved(before, after, conf):
        return GapFill(gap, baseline_interpolate(gap, before, after), None, [STATIC])

    radius = float(conf['postprocess.proximity_radius'])
    bounds = [(f, p) for f, p in ((a, before), (b, after)) if p is not None]
    near = {_nearest_joint(skeleton.positions[f], p, surface, radius) for f, p in bounds}
    if len(near) != 1 or None in near:
        msg = 'No single joint stays near the object across gap {}'.format(gap)
        if strict:
            raise NoNearbyJoint(msg)
        L.info(msg)
        flags.append(NO_NEARBY_JOINT)
        if before is not None and after is not None:
            return GapFill(gap, baseline_interpolate(gap, before, after), None, flags)
        held = before if before is not None else after
        return GapFill(gap, [held] * len(gap), None, flags)

    j = near.pop()
    rel = {f: skeleton.joint_pose(f, j).inverse().compose(p) for f, p in bounds}
    if len(rel) == 2:
        alpha = (np.arange(gap.t0, gap.t1 + 1) - a) / float(b - a)
        rel_t = interpolate(rel[a], rel[b], alpha)
    else:
        rel_t = [next(iter(rel.values()))] * len(gap)
    poses = [skeleton.joint_pose(t, j).compose(r) for t, r in zip(gap.frames, rel_t)]
    return GapFill(gap, poses, j, flags)


def find_gaps(track, track_id=None):
    ''' The runs of invalid frames of a pose sequence '''
    return [TrackGap(track_id, s, e, len(track)) for s, e in _untracked_runs(track.valid)]


def fill_track(track, skeleton, surface, config=None, track_id=None):
    '''
    Fill every gap of an object track

    Returns
    -------
    filled : PoseSequence
    fills : list of GapFill
    '''
    fills = []
    filled = track
    for gap in find_gaps(track, track_id):
        try:
            fill = fill_object_gap(gap, skeleton, track, surface, config)
        except MissingBoundary as e:
            L.warning('Leaving gap unfilled: %s', e)
            continue
        fills.append(fill)
        filled = filled.replace(gap.frames, fill.poses)
    return filled, fills


class JerkProfile(object):
    '''
    Per-frame third-derivative magnitude

    Attributes
    ----------
    values : numpy.ndarray
        ``(T - 3,)`` in units per second cubed
    centers : numpy.ndarray
        Frame position of each value, halfway between frames
    '''

    def __init__(self, values, centers):
        self.values = values
        self.centers = centers

    @property
    def mean(self):
        return float(np.mean(self.values))


def jerk_profile(positions, rate=CAMERA_RATE):
    '''
    Jerk magnitude by central third differences

    Each value is centered between two frames and uses the two frames on either side, so
    the first and last frames carry no value.

    Parameters
    ----------
    positions : array_like
        ``(T, 3)``, ``T >= 4``
    rate : float
        Frames per second

    Returns
    -------
    JerkProfile
    '''
    x = np.asarray(positions, dtype=float)
    if len(x) < 4:
        raise TooShort('Jerk needs at least four frames, got {}'.format(len(x)))
    d3 = x[3:] - 3 * x[2:-1] + 3 * x[1:-2] - x[:-3]
    vals = np.linalg.norm(d3.reshape(len(d3), -1), axis=1) * rate ** 3
    return JerkProfile(vals, np.arange(len(d3)) + 1.5)


def jitter_comparison(streams, rate=CAMERA_RATE):
    ''' Mean jerk of each named position stream '''
    return {name: jerk_profile(pos, rate).mean for name, pos in streams.items()}


def pose_errors(estimated, truth):
    '''
    Translation and rotation errors between two lists of transforms

    Returns
    -------
    dict
        Mean translation error in meters, and mean rotation error as the distance between
        6-value rotation encodings and in degrees
    '''
    if len(estimated) != len(truth):
        raise LengthMismatch('Cannot compare {} poses with {}'.format(len(estimated), len(truth)))
    if not estimated:
        return {'translation': 0.0, 'rotation_6d': 0.0, 'rotation_deg': 0.0}
    te = [np.linalg.norm(e.translation - g.translation) for e, g in zip(estimated, truth)]
    r6 = [np.linalg.norm(rotation_6d(e.matrix) - rotation_6d(g.matrix)) for e, g in zip(estimated, truth)]
    rd = [np.rad2deg(e.angle_to(g)) for e, g in zip(estimated, truth)]
    return {'translation': float(np.mean(te)), 'rotation_6d': float(np.mean(r6)),
            'rotation_deg': float(np.mean(rd))}


def _drop_starts(n, window, count, rng):
    hi = n - window - 1
    if hi < 1:
        raise TooShort('A window of {} frames does not fit in {} frames'.format(window, n))
    return rng.integers(1, hi + 1, size=count)


def drop_and_recover(track, skeleton, surface, windows, drops_per_window=10, seed=0, config=None):
    '''
    Drop windows of a complete object track and compare recovery against the baseline

    Parameters
    ----------
    track : PoseSequence
        A fully valid ground-truth object track
    skeleton : SkeletonStream
    surface : TriangleMesh
    windows : list of int
        Window lengths in frames
    drops_per_window : int
    seed : int

    Returns
    -------
    list of dict
        One row per window length with the mean errors of the fill and of the baseline
    '''
    rng = np.random.default_rng(seed)
    truth = track.transforms()
    rows = []
    for w in windows:
        fill_err, base_err = [], []
        for s in _drop_starts(len(track), w, drops_per_window, rng):
            gap = TrackGap('object', s, s + w - 1, len(track))
            dropped = track.invalidate(gap.frames)
            fill = fill_object_gap(gap, skeleton, dropped, surface, config)
            base = baseline_interpolate(gap, dropped[gap.t0 - 1], dropped[gap.t1 + 1])
            gt = truth[gap.t0:gap.t1 + 1]
            fill_err.append(pose_errors(fill.poses, gt))
            base_err.append(pose_errors(base, gt))
        row = {'window': int(w)}
        for k in ('translation', 'rotation_6d', 'rotation_deg'):
            row['fill_' + k] = float(np.mean([e[k] for e in fill_err]))
            row['baseline_' + k] = float(np.mean([e[k] for e in base_err]))
        rows.append(row)
        L.debug('Drop window %d: %s', w, row)
    return rows


def drop_and_recover_wrist(marker, mocap, confidence, windows, drops_per_window=10, seed=0, config=None):
    '''
    Drop windows of marker tracking on the wrist and measure the fused stream's error
    against the undropped fusion

    Returns
    -------
    list of dict
        One row per window length with the mean and maximum translation error in meters
    '''
    rng = np.random.default_rng(seed)
    reference = fuse_wrist(marker, mocap, confidence, config).poses
    rows = []
    for w in windows:
        errs = []
        for s in _drop_starts(len(marker), w, drops_per_window, rng):
            frames = list(range(s, s + w))
            fused = fuse_wrist(marker.invalidate(frames), mocap, confidence, config).poses
            errs.append(np.linalg.norm(fused.translations[frames] - reference.translations[frames], axis=1))
        errs = np.concatenate(errs)
        rows.append({'window': int(w), 'mean_translation': float(errs.mean()),
                     'max_translation': float(errs.max())})
    return rows


def mocap_wrist_track(calibration_transforms, wrist_local):
    '''
    Wrist poses in the camera frame from per-frame person-to-camera transforms

    Parameters
    ----------
    calibration_transforms : list of RigidTransform
    wrist_local : list of RigidTransform
        Wrist poses in the person frame

    Returns
    -------
    PoseSequence
    '''
    return PoseSequence.from_transforms([None if (T is None or w is None) else T.compose(w)
                                         for T, w in zip(calibration_transforms, wrist_local)])


