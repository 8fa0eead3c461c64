'''
Comparisons against the ground truth stored in synthetic sessions
'''
import numpy as np

from ..postprocess import pose_errors
from ..synthetic import GroundTruth


def session_truth(session):
    ''' The `GroundTruth` of a synthetic session, or `None` for a recorded one '''
    art = session.artifacts.get('truth')
    if art is None:
        return None
    return GroundTruth.from_dict(art.data)


def track_errors(tracks, truth):
    '''
    Base pose errors of tracked objects over the frames where they were tracked

    Parameters
    ----------
    tracks : dict
        Object name to ``(PoseSequence, states)`` as from `mfk.pipeline.object_tracks`
    truth : GroundTruth
    '''
    out = {}
    for name, (poses, _) in sorted(tracks.items()):
        if name not in truth.object_states:
            continue
        gt = truth.object_track(name)
        frames = [int(f) for f in np.flatnonzero(poses.valid) if f < len(gt)]
        out[name] = pose_errors([poses[f] for f in frames], [gt[f] for f in frames])
    return out


def joint_errors(fitted, truth_joint):
    ''' Axis angle in degrees, ignoring sign, and pivot distance from the true axis line '''
    axis = np.asarray(fitted['axis'])
    cos = min(abs(float(np.dot(axis, truth_joint.axis))), 1.0)
    out = {'axis_deg': float(np.rad2deg(np.arccos(cos)))}
    if fitted.get('pivot') is not None and truth_joint.pivot is not None:
        d = np.asarray(fitted['pivot']) - truth_joint.pivot
        out['pivot_m'] = float(np.linalg.norm(d - np.dot(d, truth_joint.axis) * truth_joint.axis))
    return out
