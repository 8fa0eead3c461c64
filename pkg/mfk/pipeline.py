'''
Session-level steps: each takes a `~mfk.session.CaptureSession` (and the artifacts earlier
steps stored on it) and returns the data of a new artifact

The command line runs these in order: triangulate and track objects, fit articulations,
calibrate the body and hands, post-process, then derive features and contacts.
'''
import logging

import numpy as np

from .articulation import REVOLUTE, PartObservationSet, fit_revolute, fit_sliding, part_state
from .body import BodyCalibrationSequence, BodySkeleton, fk_body
from .config import as_config
from .data_trans.common_data import nan_to_none, none_to_nan
from .errors import EmptySession, MFKError, NoVisibleMarkers, TooFewCorners
from .hand import CalibrationStructure, HandSkeleton, calibrate_hand
from .multiview import TriangulatedCorner, reprojection_report, triangulate_all
from .objects import track_object
from .postprocess import confidence_weight, fill_track, fuse_wrist, jitter_comparison
from .representation import PartTrack, build_features, compute_contacts
from .rigid_tracking import MarkerCorrespondence, kabsch
from .state import SkeletonStream
from .transform import PoseSequence, RigidTransform


L = logging.getLogger(__name__)

WRIST_JOINTS = {'left': 'left_hand', 'right': 'right_hand'}


# Triangulation and object tracking

def triangulate_session(session, config=None, workers=None):
    '''
    Returns
    -------
    dict
        Frame number to list of `TriangulatedCorner`
    '''
    if not session.detections:
        raise EmptySession('The session has no detections')
    return triangulate_all(session.detections, session.rig, config, workers)


def triangulated_records(triangulated):
    return [c.to_dict() for f in sorted(triangulated) for c in triangulated[f]]


def triangulated_from_records(records):
    out = {}
    for r in records:
        c = TriangulatedCorner.from_dict(r)
        out.setdefault(c.frame, []).append(c)
    return out


def session_triangulation(session, config=None, workers=None):
    ''' The stored triangulation if there is one, else a fresh one '''
    if 'triangulated' in session.artifacts:
        return triangulated_from_records(session.artifact('triangulated').data)
    return triangulate_session(session, config, workers)


def manipulation_frames(session):
    ''' Frames with at least one contact record, if contacts have been computed '''
    if 'contacts' not in session.artifacts:
        return set()
    return {r['frame'] for r in session.artifact('contacts').data}


def session_report(session, triangulated):
    return reprojection_report(triangulated, manipulation_frames(session))


def track_objects(session, triangulated, config=None):
    '''
    Base pose and part states of every object at every frame where its base is visible

    Returns
    -------
    list of dict
        ``poses.jsonl`` records, sorted by frame and object
    '''
    records = []
    for frame in range(session.n_frames):
        now = triangulated.get(frame, [])
        for name in sorted(session.objects):
            try:
                state = track_object(session.objects[name], now, config)
            except MFKError as e:
                L.debug('No pose for %s at frame %d: %s', name, frame, e)
                continue
            records.append({'frame': frame, 'object': name, 'l': state.translation.tolist(),
                            'q': state.orientation.tolist(), 'states': nan_to_none(state.part_states.tolist())})
    return records


def object_tracks(records, n_frames):
    '''
    Per-object base tracks and part states from pose records

    Returns
    -------
    dict
        Object name to ``(PoseSequence, numpy.ndarray)``; part states are ``(T, n)`` with NaN
        where unknown
    '''
    by_object = {}
    for r in records:
        by_object.setdefault(r['object'], []).append(r)
    out = {}
    for name, recs in by_object.items():
        n_parts = len(recs[0]['states'])
        t = np.zeros((n_frames, 3))
        q = np.tile([1.0, 0.0, 0.0, 0.0], (n_frames, 1))
        valid = np.zeros(n_frames, dtype=bool)
        states = np.full((n_frames, n_parts), np.nan)
        for r in recs:
            f = r['frame']
            t[f], q[f], valid[f] = r['l'], r['q'], True
            states[f] = none_to_nan(r['states'])
        out[name] = (PoseSequence(t, q, valid), states)
    return out


def pose_records(tracks):
    ''' Inverse of `object_tracks` '''
    records = []
    for name in sorted(tracks):
        poses, states = tracks[name]
        for f in np.flatnonzero(poses.valid):
            records.append({'frame': int(f), 'object': name, 'l': poses.translations[f].tolist(),
                            'q': poses.quaternions[f].tolist(), 'states': nan_to_none(states[f].tolist())})
    records.sort(key=lambda r: (r['frame'], r['object']))
    return records


# Articulation

def fit_articulations(session, triangulated, records, config=None, min_configurations=3,
                      max_configurations=12):
    '''
    Refit the joint of every articulated part from its tracked motion

    At each frame where the base is tracked and the part shows three or more corners, the
    part's cube corners are placed by a rigid fit to the visible ones and moved into the base
    frame. Up to `max_configurations` evenly spaced frames are fitted with a joint of the
    part's declared kind.

    Returns
    -------
    dict
        Object name to a list of ``{'part', 'frames', 'joint', 'states'}``; parts that could
        not be fitted carry an ``'error'`` code instead of a joint
    '''
    tracks = object_tracks(records, session.n_frames)
    out = {}
    for name in sorted(session.objects):
        obj = session.objects[name]
        if name not in tracks or not obj.articulated_parts:
            continue
        base, _ = tracks[name]
        fitted = []
        for part in obj.articulated_parts:
            can = np.concatenate([c.corner_points() for c in part.cubes])
            index = {k: i for i, k in enumerate(k for c in part.cubes for k in c.corner_keys())}
            corners, part_poses, base_poses, frames = [], [], [], []
            for f in np.flatnonzero(base.valid):
                seen = [c for c in triangulated.get(int(f), []) if c.key in index]
                if len(seen) < 3:
                    continue
                try:
                    pose = kabsch(MarkerCorrespondence([can[index[c.key]] for c in seen],
                                                       [c.position for c in seen],
                                                       [c.weight for c in seen]))
                except MFKError:
                    continue
                corners.append(pose.apply(can))
                part_poses.append(pose)
                base_poses.append(base[f])
                frames.append(int(f))
            if len(frames) > max_configurations:
                keep = np.unique(np.linspace(0, len(frames) - 1, max_configurations).round().astype(int))
                corners = [corners[i] for i in keep]
                part_poses = [part_poses[i] for i in keep]
                base_poses = [base_poses[i] for i in keep]
                frames = [frames[i] for i in keep]
            entry = {'part': part.name, 'frames': frames}
            try:
                if len(frames) < min_configurations:
                    raise TooFewCorners('Part {} of {} was seen in only {} frames'
                                        .format(part.name, name, len(frames)))
                obs = PartObservationSet.from_camera(corners, base_poses)
                if part.joint.kind == REVOLUTE:
                    joint, _ = fit_revolute(obs, config)
                else:
                    joint = fit_sliding(obs, config)
                entry['joint'] = joint.to_dict()
                entry['states'] = [part_state(b, p, joint, config, strict=False).value
                                   for b, p in zip(base_poses, part_poses)]
            except MFKError as e:
                L.warning('Could not fit %s of %s: %s', part.name, name, e)
                entry['error'] = e.code
            fitted.append(entry)
        out[name] = fitted
    return out


# Body and hands

def body_sequence(session, triangulated, skeleton=None):
    '''
    Suit angles and observed body marker corners at every camera frame

    Returns
    -------
    BodyCalibrationSequence
    '''
    skeleton = skeleton or BodySkeleton()
    angles = session.camera_mocap().body
    index = {k: i for i, k in enumerate(skeleton.corner_keys)}
    observed = np.full((len(angles), len(index), 3), np.nan)
    for f, corners in triangulated.items():
        if f >= len(angles):
            continue
        for c in corners:
            i = index.get(c.key)
            if i is not None:
                observed[f, i] = c.position
    return BodyCalibrationSequence(angles, observed)


def body_calibration_data(calibration):
    return {'skeleton': calibration.skeleton.to_dict(),
            'loss_history': [float(x) for x in calibration.loss_history],
            'marker_rms': {str(k): (None if not np.isfinite(v) else v) for k, v in calibration.marker_rms.items()},
            'transforms': [None if t is None else t.to_dict() for t in calibration.transforms]}


def stored_body(session):
    '''
    Calibrated skeleton and per-frame person-to-camera transforms of the session

    Returns
    -------
    skeleton : BodySkeleton
    transforms : list of RigidTransform
        None at frames the markers did not align
    '''
    data = session.artifact('body_calibration').data
    return (BodySkeleton.from_dict(data['skeleton']),
            [None if t is None else RigidTransform.from_dict(t) for t in data['transforms']])


def hold_nearest(transforms):
    ''' Replace missing per-frame transforms with the one of the nearest frame that has one '''
    have = np.array([t is not None for t in transforms], dtype=bool)
    if not have.any():
        raise NoVisibleMarkers('No frame of the body calibration was aligned to the cameras')
    idx = np.flatnonzero(have)
    frames = np.arange(len(transforms))
    pos = np.clip(np.searchsorted(idx, frames), 1, max(len(idx) - 1, 1))
    left, right = idx[pos - 1], idx[np.minimum(pos, len(idx) - 1)]
    nearest = np.where(frames - left <= right - frames, left, right)
    return [transforms[i] for i in nearest]


def body_stream(skeleton, angles, transforms):
    '''
    World-frame joints of a calibrated body

    Frames without a transform take the one of the nearest aligned frame.

    Returns
    -------
    SkeletonStream
    '''
    transforms = hold_nearest(transforms)
    fk = fk_body(skeleton, angles)
    R = np.array([t.matrix for t in transforms])
    t = np.array([t.translation for t in transforms])
    G = np.einsum('tij,tkjl->tkil', R, fk.joint_rotations)
    P = np.einsum('tij,tkj->tki', R, fk.joint_positions) + t[:, None]
    return SkeletonStream(P, G, skeleton.parents, skeleton.joint_names)


def session_body_stream(session):
    skeleton, transforms = stored_body(session)
    angles = session.camera_mocap().body[:len(transforms)]
    return body_stream(skeleton, angles, transforms)


def calibrate_hands(session, sides=('left', 'right'), config=None):
    '''
    Returns
    -------
    dict
        Side to the calibrated hand's data
    '''
    if session.structure is None:
        raise EmptySession('The session has no calibration structure')
    out = {}
    structure = session.structure
    if not isinstance(structure, CalibrationStructure):
        structure = CalibrationStructure.from_dict(structure)
    for side in sides:
        events = session.touches.get(side)
        if not events:
            raise EmptySession('The session has no touch events for the {} hand'.format(side))
        res = calibrate_hand(events, structure, HandSkeleton(side), config)
        out[side] = {'skeleton': res.skeleton.to_dict(),
                     'loss_history': [float(x) for x in res.loss_history],
                     'residual': float(res.residual)}
    return out


# Post-processing

def marker_wrist(skeleton, triangulated, side, n_frames):
    '''
    Wrist poses from the markers on the hand, with their confidence

    Returns
    -------
    poses : PoseSequence
    confidence : numpy.ndarray
    '''
    joint = WRIST_JOINTS[side]
    j = skeleton.joint_index(joint)
    local = {k: skeleton.corner_local[i] for i, k in enumerate(skeleton.corner_keys)
             if skeleton.corner_joints[i] == j}
    poses = []
    conf = np.zeros(n_frames)
    for f in range(n_frames):
        seen = [c for c in triangulated.get(f, []) if c.key in local]
        if len(seen) < 3:
            poses.append(None)
            continue
        try:
            pose = kabsch(MarkerCorrespondence([local[c.key] for c in seen], [c.position for c in seen],
                                               [c.weight for c in seen]))
        except MFKError as e:
            L.debug('No %s wrist pose at frame %d: %s', side, f, e)
            poses.append(None)
            continue
        poses.append(pose)
        conf[f] = float(confidence_weight(np.mean([c.n_views for c in seen]),
                                          np.mean([c.reprojection_rms for c in seen])))
    return PoseSequence.from_transforms(poses), conf


def postprocess_session(session, triangulated, config=None):
    '''
    Fill object track gaps from the body and fuse the wrists with their markers

    Returns
    -------
    records : list of dict
        Filled pose records
    report : dict
        Gap fills, fused wrist tracks and jitter summaries
    '''
    conf = as_config(config)
    skeleton, _ = stored_body(session)
    stream = session_body_stream(session)
    n = len(stream)
    tracks = object_tracks(session.artifact('poses').data, session.n_frames)
    fills = []
    for name in sorted(tracks):
        poses, states = tracks[name]
        mesh = session.objects[name].base.mesh
        if mesh is None:
            continue
        filled, gap_fills = fill_track(poses, stream, mesh, conf, track_id=name)
        for g in gap_fills:
            fills.append({'object': name, 't0': g.gap.t0, 't1': g.gap.t1,
                          'joint': None if g.joint is None else stream.joint_names[g.joint],
                          'flags': list(g.flags)})
        tracks[name] = (filled, states)

    wrists = {}
    for side, joint in sorted(WRIST_JOINTS.items()):
        marker, confidence = marker_wrist(skeleton, triangulated, side, n)
        j = stream.joint_index(joint)
        mocap = PoseSequence.from_transforms([stream.joint_pose(t, j) for t in range(n)])
        fused = fuse_wrist(marker, mocap, confidence, conf)
        valid = marker.valid
        jerk = {'mocap': jitter_comparison({'x': mocap.translations})['x'],
                'fused': jitter_comparison({'x': fused.poses.translations})['x']}
        if valid.all():
            jerk['marker'] = jitter_comparison({'x': marker.translations})['x']
        wrists[side] = {'flags': list(fused.flags), 'tracked_frames': int(valid.sum()),
                        'jerk': jerk,
                        'poses': [{'frame': t, 'l': fused.poses.translations[t].tolist(),
                                   'q': fused.poses.quaternions[t].tolist()} for t in range(n)]}
    return pose_records(tracks), {'fills': fills, 'wrists': wrists}


# Representation

def session_part_tracks(session, records):
    '''
    Pose of every object part with a mesh, from pose records

    Articulated parts follow their base through their joint; frames with an unknown state
    are invalid.

    Returns
    -------
    list of PartTrack
    '''
    tracks = object_tracks(records, session.n_frames)
    out = []
    for name in sorted(tracks):
        base, states = tracks[name]
        obj = session.objects[name]
        for i, part in enumerate(obj.parts):
            if part.mesh is None:
                continue
            if i == 0:
                out.append(PartTrack(name, 0, part.mesh, base))
                continue
            poses = []
            for f in range(len(base)):
                b = base[f]
                s = states[f, i - 1] if states.shape[1] >= i else np.nan
                poses.append(None if (b is None or not np.isfinite(s)) else b.compose(part.joint.transform(s)))
            out.append(PartTrack(name, i, part.mesh, PoseSequence.from_transforms(poses)))
    return out


def session_features(session, config=None):
    return build_features(session_body_stream(session), config=config, rate=session.camera_rate)


def session_contacts(session, config=None):
    '''
    Returns
    -------
    list of dict
        ``contacts.jsonl`` records
    '''
    stream = session_body_stream(session)
    tracks = session_part_tracks(session, session.artifact('poses').data)
    n = len(stream)
    trimmed = []
    for tr in tracks:
        if len(tr.poses) > n:
            tr = PartTrack(tr.object, tr.part, tr.mesh, PoseSequence(tr.poses.translations[:n],
                                                                     tr.poses.quaternions[:n],
                                                                     tr.poses.valid[:n]))
        trimmed.append(tr)
    return [r.to_dict() for r in compute_contacts(stream, trimmed, config=config)]
