'''
Motion features, contact labels and human-object relative states

Per-frame motion features use a root-local frame aligned with the root's heading (yaw
about +z). The layout of one feature row is::

    root angular velocity (1)     yaw change to the next frame, rad/frame
    root linear velocity (2)      planar motion to the next frame, heading-aligned
    root height (1)
    joint positions (3J)          heading-aligned, relative to the root's floor projection
    joint rotations (6J)          parent-relative, first two matrix columns
    joint velocities (3J)         motion to the next frame, heading-aligned
    foot contacts (4)             left heel, left toe, right heel, right toe

for ``8 + 12J`` values per frame.
'''
import logging

import numpy as np

from . import CAMERA_RATE
from .config import as_config
from .errors import DimensionMismatch, InvariantViolation, TooShort
from .geometry import wrap_angle, yaw_matrix


L = logging.getLogger(__name__)

FOOT_CONTACT_JOINTS = ('left_foot', 'left_toe', 'right_foot', 'right_toe')


def feature_dimension(n_joints):
    return 8 + 12 * n_joints


def rotation_6d(R):
    ''' Continuous 6-value encoding of rotation matrices ``(..., 3, 3)``: the first two columns '''
    R = np.asarray(R, dtype=float)
    return np.concatenate([R[..., :, 0], R[..., :, 1]], axis=-1)


def rotation_from_6d(x):
    ''' Rotation matrices from the 6-value encoding by Gram-Schmidt '''
    x = np.asarray(x, dtype=float)
    a1, a2 = x[..., :3], x[..., 3:]
    b1 = a1 / np.linalg.norm(a1, axis=-1, keepdims=True)
    b2 = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    b2 /= np.linalg.norm(b2, axis=-1, keepdims=True)
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-1)


def heading(rotations):
    ''' Yaw of the body x axis projected on the floor, for ``(..., 3, 3)`` root rotations '''
    fwd = rotations[..., :, 0]
    return np.arctan2(fwd[..., 1], fwd[..., 0])


class FeatureLayout(object):

    def __init__(self, n_joints):
        J = n_joints
        self.n_joints = J
        edges = np.cumsum([0, 1, 2, 1, 3 * J, 6 * J, 3 * J, 4])
        names = ('root_angular_velocity', 'root_linear_velocity', 'root_height', 'joint_positions',
                 'joint_rotations', 'joint_velocities', 'foot_contacts')
        self.slices = {n: slice(int(a), int(b)) for n, a, b in zip(names, edges[:-1], edges[1:])}
        self.dimension = int(edges[-1])

    def to_dict(self):
        return {'n_joints': self.n_joints,
                'slices': {k: [s.start, s.stop] for k, s in self.slices.items()}}


class MotionFeatureFrame(object):
    ''' One row of a `FeatureSequence`, split into its named blocks '''

    def __init__(self, row, layout):
        J = layout.n_joints
        s = layout.slices
        self.root_angular_velocity = float(row[s['root_angular_velocity']][0])
        self.root_linear_velocity = row[s['root_linear_velocity']]
        self.root_height = float(row[s['root_height']][0])
        self.joint_positions = row[s['joint_positions']].reshape(J, 3)
        self.joint_rotations = row[s['joint_rotations']].reshape(J, 6)
        self.joint_velocities = row[s['joint_velocities']].reshape(J, 3)
        self.foot_contacts = row[s['foot_contacts']].astype(bool)


class FeatureSequence(object):
    '''
    Per-frame motion features

    Parameters
    ----------
    data : array_like
        ``(F, 8 + 12J)``
    n_joints : int
    rate : float, optional
        Frames per second. Defaults to the camera rate
    '''

    def __init__(self, data, n_joints, rate=CAMERA_RATE):
        self.data = np.asarray(data, dtype=float)
        self.rate = float(rate)
        if not self.rate > 0:
            raise InvariantViolation('Feature rate must be positive, got {}'.format(rate))
        self.layout = FeatureLayout(n_joints)
        if self.data.ndim != 2 or self.data.shape[1] != self.layout.dimension:
            raise DimensionMismatch('Expected features of width {} for {} joints, got shape {}'
                                    .format(self.layout.dimension, n_joints, self.data.shape))

    @property
    def n_joints(self):
        return self.layout.n_joints

    def __len__(self):
        return len(self.data)

    def frame(self, i):
        return MotionFeatureFrame(self.data[i], self.layout)

    def block(self, name):
        return self.data[:, self.layout.slices[name]]

    def validate(self, atol=1e-6):
        ''' Check that every rotation block decodes to a proper rotation close to its encoding '''
        x = self.block('joint_rotations').reshape(len(self), self.n_joints, 6)
        R = rotation_from_6d(x)
        if not np.allclose(rotation_6d(R), x, atol=atol):
            raise InvariantViolation('Rotation blocks are not orthonormal column pairs')
        flags = self.block('foot_contacts')
        if not np.all((flags == 0) | (flags == 1)):
            raise InvariantViolation('Foot contact flags must be 0 or 1')

    def __eq__(self, other):
        return (isinstance(other, FeatureSequence) and self.n_joints == other.n_joints and
                self.rate == other.rate and
                np.array_equal(self.data, other.data))

    __hash__ = None


def _foot_indices(stream, foot_joints):
    if foot_joints is None:
        foot_joints = FOOT_CONTACT_JOINTS
    idx = [stream.joint_index(j) if isinstance(j, str) else int(j) for j in foot_joints]
    if len(idx) != 4:
        raise DimensionMismatch('Foot contacts need exactly four joints')
    return idx


def build_features(stream, foot_joints=None, config=None, rate=CAMERA_RATE):
    '''
    Motion features of a skeleton stream

    Velocities are forward differences, so a stream of ``T`` frames yields ``T - 1`` rows.

    Parameters
    ----------
    stream : SkeletonStream
        World-frame joints; joint 0 is the root
    foot_joints : sequence, optional
        Names or indices of the left heel, left toe, right heel and right toe joints
    config : Config, optional
    rate : float
        Frame rate of the stream, recorded on the result

    Returns
    -------
    FeatureSequence
    '''
    conf = as_config(config)
    if len(stream) < 2:
        raise TooShort('Features need at least two frames, got {}'.format(len(stream)))
    feet = _foot_indices(stream, foot_joints)
    X = stream.positions
    Rg = stream.rotations
    T, J = X.shape[:2]
    root = X[:, 0]
    yaw = heading(Rg[:, 0])
    Rinv = yaw_matrix(-yaw[:-1])  # (T-1, 3, 3)

    r_w = wrap_angle(np.diff(yaw))[:, None]
    droot = np.diff(root, axis=0)
    r_v = np.einsum('tij,tj->ti', Rinv, droot)[:, :2]
    r_h = root[:-1, 2:3]

    floor = root[:-1].copy()
    floor[:, 2] = 0.0
    j_p = np.einsum('tij,tnj->tni', Rinv, X[:-1] - floor[:, None])

    local = np.empty_like(Rg[:-1])
    for j, p in enumerate(stream.parents):
        if p < 0:
            local[:, j] = Rinv @ Rg[:-1, j]
        else:
            local[:, j] = np.swapaxes(Rg[:-1, p], 1, 2) @ Rg[:-1, j]
    j_w = rotation_6d(local)

    dX = np.diff(X, axis=0)
    j_v = np.einsum('tij,tnj->tni', Rinv, dX)

    height = X[:-1, feet, 2]
    speed = np.linalg.norm(dX[:, feet], axis=2)
    t_f = ((height < conf['representation.foot_height']) &
           (speed < conf['representation.foot_speed'])).astype(float)

    data = np.concatenate([r_w, r_v, r_h, j_p.reshape(T - 1, -1), j_w.reshape(T - 1, -1),
                           j_v.reshape(T - 1, -1), t_f], axis=1)
    return FeatureSequence(data, J, rate)


def reconstruct_root_trajectory(features, initial=(0.0, 0.0, 0.0)):
    '''
    Integrate root velocities back into a planar root trajectory

    Parameters
    ----------
    features : FeatureSequence
    initial : tuple of float
        Root ``(x, y, yaw)`` at the first frame

    Returns
    -------
    numpy.ndarray
        ``(F + 1, 3)`` root ``x``, ``y`` and yaw per frame
    '''
    r_w = features.block('root_angular_velocity')[:, 0]
    r_v = features.block('root_linear_velocity')
    out = np.empty((len(features) + 1, 3))
    out[0] = initial
    for t in range(len(features)):
        x, y, psi = out[t]
        c, s = np.cos(psi), np.sin(psi)
        out[t + 1] = (x + c * r_v[t, 0] - s * r_v[t, 1], y + s * r_v[t, 0] + c * r_v[t, 1],
                      wrap_angle(psi + r_w[t]))
    return out


class ContactRecord(object):
    '''
    A body party within the contact threshold of an object part at one frame
    '''

    __slots__ = ('frame', 'party', 'object', 'part')

    def __init__(self, frame, party, object, part):
        self.frame = int(frame)
        self.party = party
        self.object = object
        self.part = int(part)

    def to_dict(self):
        return {'frame': self.frame, 'party': self.party, 'object': self.object, 'part': self.part}

    @classmethod
    def from_dict(cls, d):
        return cls(d['frame'], d['party'], d['object'], d['part'])

    def __eq__(self, other):
        return isinstance(other, ContactRecord) and self.to_dict() == other.to_dict()

    __hash__ = None

    def __repr__(self):
        return 'ContactRecord({frame}, {party!r}, {object!r}, {part})'.format(**self.to_dict())


def default_parties(stream):
    ''' Left hand, right hand and the rest of the body, by joint name '''
    names = stream.joint_names
    hands = {'left_hand': [j for j, n in enumerate(names) if n.startswith('left_hand')],
             'right_hand': [j for j, n in enumerate(names) if n.startswith('right_hand')]}
    used = set(hands['left_hand'] + hands['right_hand'])
    parties = {k: v for k, v in hands.items() if v}
    parties['body'] = [j for j in range(len(names)) if j not in used]
    return parties


class PartTrack(object):
    '''
    Geometry and per-frame pose of one object part

    Parameters
    ----------
    object : str
    part : int
    mesh : TriangleMesh
        In the part's own frame
    poses : PoseSequence
        Part frame to world frame
    '''

    def __init__(self, object, part, mesh, poses):
        self.object = object
        self.part = int(part)
        self.mesh = mesh
        self.poses = poses


CONTACT_EPS = 1e-12


def compute_contacts(stream, part_tracks, parties=None, config=None):
    '''
    Label contacts between body parties and object parts

    A party touches a part at a frame when any of its joints lies within
    ``representation.contact_threshold`` of the part surface. The boundary is inclusive.

    Parameters
    ----------
    stream : SkeletonStream
    part_tracks : list of PartTrack
    parties : dict, optional
        Party name to joint indices. Defaults to `default_parties`

    Returns
    -------
    list of ContactRecord
        Sorted by frame, party, object and part
    '''
    conf = as_config(config)
    thresh = float(conf['representation.contact_threshold'])
    parties = parties or default_parties(stream)
    records = []
    for track in part_tracks:
        if len(track.poses) != len(stream):
            raise DimensionMismatch('Part track of {} has {} frames, skeleton has {}'
                                    .format(track.object, len(track.poses), len(stream)))
        for t in range(len(stream)):
            pose = track.poses[t]
            if pose is None:
                continue
            local = pose.inverse().apply(stream.positions[t])
            d = track.mesh.distance(local, max_distance=thresh + CONTACT_EPS)
            for party, joints in parties.items():
                if np.any(d[joints] <= thresh + CONTACT_EPS):
                    records.append(ContactRecord(t, party, track.object, track.part))
    records.sort(key=lambda r: (r.frame, r.party, r.object, r.part))
    L.debug('Found %d contact records', len(records))
    return records


def relative_state(root_pose, object_pose):
    ''' Root pose expressed in the object's frame: ``inverse(object) ∘ root`` '''
    return object_pose.inverse().compose(root_pose)
