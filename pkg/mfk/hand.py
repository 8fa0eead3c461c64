'''
Hand skeleton and glove calibration against a rigid touch structure

The performer touches the corners of a rigid structure with their fingertips following
a fixed protocol. Each touch pins fingertip positions in the camera frame. Calibration
refines the wrist marker placements, per-segment bone scales and small offsets of the
palm-area joints so that the glove's forward kinematics reaches the touched corners.
'''
import logging

import numpy as np
import torch
from scipy.spatial.transform import Rotation

from .body import fk_tree
from .config import as_config
from .errors import (ConstraintViolation, DimensionMismatch, InvariantViolation, NoEvents,
                     NonConvergence)
from .marker import square_corners
from .rigid_tracking import kabsch_batch


L = logging.getLogger(__name__)

FINGERS = ('thumb', 'index', 'middle', 'ring', 'little')
_SEGMENTS = {
    'thumb': ('cmc', 'mcp', 'ip', 'tip'),
    'index': ('mcp', 'pip', 'dip', 'tip'),
    'middle': ('mcp', 'pip', 'dip', 'tip'),
    'ring': ('mcp', 'pip', 'dip', 'tip'),
    'little': ('mcp', 'pip', 'dip', 'tip'),
}
JOINT_NAMES = tuple('{}_{}'.format(f, s) for f in FINGERS for s in _SEGMENTS[f])
PARENTS = tuple(-1 if k == 0 else 4 * i + k - 1 for i in range(len(FINGERS)) for k in range(4))
TIP_JOINTS = tuple(4 * i + 3 for i in range(len(FINGERS)))
PALM_JOINTS = tuple(4 * i for i in range(len(FINGERS)))
''' Palm-area joints that may carry a small offset correction '''

SCALE_BOUNDS = (0.8, 1.2)
OFFSET_BOUND = 0.01

_TEMPLATE_RIGHT = np.array([
    (0.020, 0.025, -0.010), (0.035, 0.020, 0.0), (0.030, 0.012, 0.0), (0.025, 0.008, 0.0),
    (0.090, 0.025, 0.0), (0.040, 0.0, 0.0), (0.025, 0.0, 0.0), (0.020, 0.0, 0.0),
    (0.090, 0.000, 0.0), (0.045, 0.0, 0.0), (0.030, 0.0, 0.0), (0.022, 0.0, 0.0),
    (0.085, -0.020, 0.0), (0.040, 0.0, 0.0), (0.027, 0.0, 0.0), (0.020, 0.0, 0.0),
    (0.075, -0.040, 0.0), (0.032, 0.0, 0.0), (0.020, 0.0, 0.0), (0.018, 0.0, 0.0),
])
''' Bone vectors of the right hand. x toward the fingers, y toward the thumb, z dorsal '''

HAND_MARKER_EDGE = 0.02


def template_offsets(side):
    t = _TEMPLATE_RIGHT.copy()
    if side == 'left':
        t[:, 1] *= -1
    return t


def default_wrist_markers(side):
    ''' Three square markers on the back of the hand near the wrist, ``(3, 4, 3)`` '''
    y = 1.0 if side == 'right' else -1.0
    centers = [(0.025, 0.02 * y, 0.02), (0.025, -0.02 * y, 0.02), (0.055, 0.0, 0.025)]
    return np.array([square_corners(c, (1, 0, 0), (0, 1, 0), HAND_MARKER_EDGE) for c in centers])


class HandSkeleton(object):
    '''
    Per-subject hand model

    The effective bone vector of joint ``i`` is ``scales[i] * template[i] + offsets[i]``.

    Parameters
    ----------
    side : str
        ``'left'`` or ``'right'``
    scales : array_like, optional
        ``(20,)`` in `SCALE_BOUNDS`. Defaults to ones
    offsets : array_like, optional
        ``(20, 3)`` with every component within `OFFSET_BOUND`. Defaults to zeros
    markers : array_like, optional
        ``(3, 4, 3)`` wrist marker corners in the hand frame
    template : array_like, optional
        ``(20, 3)`` template bone vectors
    '''

    def __init__(self, side, scales=None, offsets=None, markers=None, template=None):
        if side not in ('left', 'right'):
            raise InvariantViolation('Hand side must be left or right, got {!r}'.format(side))
        self.side = side
        n = len(JOINT_NAMES)
        self.template = template_offsets(side) if template is None else np.array(template, dtype=float).reshape(n, 3)
        self.scales = np.ones(n) if scales is None else np.array(scales, dtype=float).reshape(n)
        self.offsets = np.zeros((n, 3)) if offsets is None else np.array(offsets, dtype=float).reshape(n, 3)
        self.markers = default_wrist_markers(side) if markers is None else np.array(markers, dtype=float).reshape(3, 4, 3)
        lo, hi = SCALE_BOUNDS
        if np.any(self.scales < lo - 1e-12) or np.any(self.scales > hi + 1e-12):
            raise ConstraintViolation('Bone scales must lie in [{}, {}]'.format(lo, hi))
        if np.any(np.abs(self.offsets) > OFFSET_BOUND + 1e-12):
            raise ConstraintViolation('Joint offsets must lie within {} m'.format(OFFSET_BOUND))

    @property
    def n_joints(self):
        return len(JOINT_NAMES)

    @property
    def parents(self):
        return PARENTS

    @property
    def effective_offsets(self):
        return self.scales[:, None] * self.template + self.offsets

    @property
    def marker_corners(self):
        return self.markers.reshape(-1, 3)

    def to_dict(self):
        return {'side': self.side, 'scales': self.scales.tolist(), 'offsets': self.offsets.tolist(),
                'markers': self.markers.tolist(), 'template': self.template.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d['side'], d['scales'], d['offsets'], d['markers'], d.get('template'))

    def __eq__(self, other):
        return (isinstance(other, HandSkeleton) and self.side == other.side and
                np.array_equal(self.scales, other.scales) and np.array_equal(self.offsets, other.offsets) and
                np.array_equal(self.markers, other.markers) and np.array_equal(self.template, other.template))

    __hash__ = None


class HandFK(object):
    '''
    Forward kinematics of one hand

    Attributes
    ----------
    joint_rotations : numpy.ndarray
        ``(..., 20, 3, 3)``
    joint_positions : numpy.ndarray
        ``(..., 20, 3)``
    '''

    def __init__(self, joint_rotations, joint_positions):
        self.joint_rotations = joint_rotations
        self.joint_positions = joint_positions

    @property
    def tips(self):
        ''' ``(..., 5, 3)`` fingertip positions, thumb first '''
        return self.joint_positions[..., TIP_JOINTS, :]


def fk_hand(skeleton, angles, wrist=None):
    '''
    Forward kinematics of a hand from glove angles

    Parameters
    ----------
    skeleton : HandSkeleton
    angles : array_like
        ``(20, 3)`` or ``(T, 20, 3)`` axis-angle local joint rotations
    wrist : RigidTransform, optional
        Hand frame to camera frame

    Returns
    -------
    HandFK
    '''
    angles = np.asarray(angles, dtype=float)
    if angles.shape[-2:] != (skeleton.n_joints, 3) or angles.ndim not in (2, 3):
        raise DimensionMismatch('Expected hand angles of shape (..., {}, 3), got {}'
                                .format(skeleton.n_joints, angles.shape))
    single = angles.ndim == 2
    batch = angles[None] if single else angles
    R_local = Rotation.from_rotvec(batch.reshape(-1, 3)).as_matrix().reshape(batch.shape + (3,))
    with torch.no_grad():
        G, P = fk_tree(torch.from_numpy(R_local), torch.from_numpy(skeleton.effective_offsets), PARENTS)
        G, P = G.numpy(), P.numpy()
    if wrist is not None:
        R, t = wrist.matrix, wrist.translation
        G = np.einsum('ij,bkjl->bkil', R, G)
        P = P @ R.T + t
    if single:
        G, P = G[0], P[0]
    return HandFK(G, P)


STRUCTURE_CORNERS = np.array([
    (0.00, 0.00, 0.06),
    (0.06, 0.00, 0.06),
    (0.00, 0.06, 0.06),
    (0.06, 0.06, 0.06),
    (0.06, 0.03, 0.12),
    (0.00, 0.03, 0.12),
])
''' Corner layout of the standard touch structure in its own frame, in meters '''


class CalibrationStructure(object):
    '''
    A rigid structure with six numbered touch corners

    Parameters
    ----------
    corners : array_like
        ``(6, 3)`` corner positions in the camera frame
    normals : array_like
        ``(6, 3)`` outward unit normals at the corners
    template : array_like, optional
        ``(6, 3)`` declared corner layout. When given, pairwise corner distances must match
        it within a millimeter
    '''

    def __init__(self, corners, normals, template=None):
        self.corners = np.array(corners, dtype=float).reshape(6, 3)
        normals = np.array(normals, dtype=float).reshape(6, 3)
        self.normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
        if template is not None:
            tmpl = np.asarray(template, dtype=float).reshape(6, 3)
            d_obs = np.linalg.norm(self.corners[:, None] - self.corners[None], axis=2)
            d_tmpl = np.linalg.norm(tmpl[:, None] - tmpl[None], axis=2)
            if np.abs(d_obs - d_tmpl).max() > 1e-3:
                raise InvariantViolation('Structure corners do not match the declared layout')

    @classmethod
    def standard(cls, pose):
        ''' The standard structure placed by `pose` (structure frame to camera frame) '''
        normals = np.tile([0.0, 0.0, 1.0], (6, 1))
        return cls(pose.apply(STRUCTURE_CORNERS), pose.apply_vector(normals), STRUCTURE_CORNERS)

    def to_dict(self):
        return {'corners': self.corners.tolist(), 'normals': self.normals.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d['corners'], d['normals'])

    def __eq__(self, other):
        return (isinstance(other, CalibrationStructure) and np.array_equal(self.corners, other.corners) and
                np.array_equal(self.normals, other.normals))

    __hash__ = None


class TouchStep(object):
    '''
    One protocol step: the listed fingers touch the listed corners, pairwise in order

    Corners and fingers are zero-based; finger 0 is the thumb.
    '''

    def __init__(self, corners, fingers):
        if len(corners) != len(fingers):
            raise InvariantViolation('A touch step pairs each finger with one corner')
        self.corners = tuple(int(c) for c in corners)
        self.fingers = tuple(int(f) for f in fingers)

    def to_dict(self):
        return {'corners': list(self.corners), 'fingers': list(self.fingers)}

    @classmethod
    def from_dict(cls, d):
        return cls(d['corners'], d['fingers'])

    def __eq__(self, other):
        return isinstance(other, TouchStep) and (self.corners, self.fingers) == (other.corners, other.fingers)

    def __repr__(self):
        return 'TouchStep(corners={}, fingers={})'.format(self.corners, self.fingers)


_CORNER_PAIRS = {
    'right': ((1, 2), (1, 3), (2, 4), (5, 2), (6, 2)),
    'left': ((2, 1), (3, 1), (4, 2), (5, 2), (6, 2)),
}
_CORNER_TRIPLE = {'right': (6, 3, 2), 'left': (2, 5, 6)}
_FINGER_PAIRS = ((1, 2), (1, 3), (1, 4), (1, 5))
_FINGER_TRIPLES = ((1, 2, 3), (1, 3, 4), (1, 4, 5))


def default_protocol(side):
    '''
    The 23-step touch protocol for one hand

    Each corner pair is touched by the thumb together with each other finger in turn, then
    one corner triple is touched by three fingers at a time.

    Returns
    -------
    list of TouchStep
    '''
    if side not in _CORNER_PAIRS:
        raise InvariantViolation('Hand side must be left or right, got {!r}'.format(side))
    steps = []
    for corners in _CORNER_PAIRS[side]:
        for fingers in _FINGER_PAIRS:
            steps.append(TouchStep([c - 1 for c in corners], [f - 1 for f in fingers]))
    for fingers in _FINGER_TRIPLES:
        steps.append(TouchStep([c - 1 for c in _CORNER_TRIPLE[side]], [f - 1 for f in fingers]))
    return steps


class TouchEvent(object):
    '''
    Glove and marker observations at the frame of one protocol step

    Parameters
    ----------
    step : TouchStep
    glove_angles : array_like
        ``(20, 3)``
    marker_corners : array_like
        ``(12, 3)`` triangulated wrist marker corners, NaN where not seen
    body_wrist : array_like
        ``(3,)`` wrist position from the calibrated body, in the camera frame
    '''

    def __init__(self, step, glove_angles, marker_corners, body_wrist):
        self.step = step
        self.glove_angles = np.asarray(glove_angles, dtype=float).reshape(len(JOINT_NAMES), 3)
        self.marker_corners = np.asarray(marker_corners, dtype=float).reshape(12, 3)
        self.body_wrist = np.asarray(body_wrist, dtype=float).reshape(3)

    def to_dict(self):
        # JSON has no NaN; unseen corners become null
        corners = [None if not np.all(np.isfinite(c)) else c.tolist() for c in self.marker_corners]
        return {'step': self.step.to_dict(), 'glove_angles': self.glove_angles.tolist(),
                'marker_corners': corners, 'body_wrist': self.body_wrist.tolist()}

    @classmethod
    def from_dict(cls, d):
        corners = [[np.nan] * 3 if c is None else c for c in d['marker_corners']]
        return cls(TouchStep.from_dict(d['step']), d['glove_angles'], corners, d['body_wrist'])

    def __eq__(self, other):
        return (isinstance(other, TouchEvent) and self.step == other.step and
                np.array_equal(self.glove_angles, other.glove_angles) and
                np.array_equal(self.marker_corners, other.marker_corners, equal_nan=True) and
                np.array_equal(self.body_wrist, other.body_wrist))

    __hash__ = None


class HandCalibration(object):
    '''
    Result of `calibrate_hand`

    Attributes
    ----------
    skeleton : HandSkeleton
    loss_history : list of float
    residual : float
        Mean fingertip-to-corner distance over all touches, in meters
    '''

    def __init__(self, skeleton, loss_history, residual):
        self.skeleton = skeleton
        self.loss_history = loss_history
        self.residual = residual


def _kabsch_torch(P, Q, w):
    ''' Differentiable batched Kabsch, ``P`` ``(N, 3)`` shared, ``Q`` ``(K, N, 3)``, ``w`` ``(K, N)`` '''
    w = w / w.sum(dim=1, keepdim=True)
    pc = w @ P
    qc = torch.einsum('kn,kni->ki', w, Q)
    Pc = P[None] - pc[:, None]
    H = torch.einsum('kn,kni,knj->kij', w, Pc, Q - qc[:, None])
    U, _, Vh = torch.linalg.svd(H)
    V = Vh.transpose(1, 2)
    d = torch.sign(torch.linalg.det(V @ U.transpose(1, 2))).detach()
    d = torch.where(d == 0, torch.ones_like(d), d)
    D = torch.diag_embed(torch.stack([torch.ones_like(d), torch.ones_like(d), d], dim=1))
    R = V @ D @ U.transpose(1, 2)
    t = qc - torch.einsum('kij,kj->ki', R, pc)
    return R, t


def _touch_index(events):
    ev, fi, co = [], [], []
    for k, e in enumerate(events):
        for c, f in zip(e.step.corners, e.step.fingers):
            ev.append(k)
            fi.append(f)
            co.append(c)
    return np.array(ev), np.array(fi), np.array(co)


def _hand_frames(events):
    obs = np.array([e.marker_corners for e in events])
    vis = np.all(np.isfinite(obs), axis=2)
    if np.any(vis.sum(axis=1) < 3):
        raise NoEvents('A touch event has fewer than three visible wrist marker corners')
    return np.where(vis[..., None], obs, 0.0), vis.astype(float)


def calibrate_hand(events, structure, init, config=None):
    '''
    Calibrate a hand skeleton from protocol touch events

    The wrist markers are optimized from the first iteration, bone scales from
    ``hand.scale_start`` and palm-area offsets from ``hand.offset_start``. Scales and offsets
    are projected back into their bounds after every step. The tip and wrist terms are
    mean squared distances and the penetration term is a squared hinge on the cosine
    between the corner normal and the corner-to-tip vector. The parameters with the lowest
    loss seen, the starting point included, are returned.

    With ``hand.tie_finger_scales`` (the default) the four segments of a finger share one
    scale.

    Parameters
    ----------
    events : list of TouchEvent
    structure : CalibrationStructure
    init : HandSkeleton
    config : Config, optional

    Returns
    -------
    HandCalibration
    '''
    conf = as_config(config)
    events = list(events)
    if not events:
        raise NoEvents('No touch events to calibrate from')
    obs, vis = _hand_frames(events)
    obs_t, vis_t = torch.from_numpy(obs), torch.from_numpy(vis)
    angles = np.array([e.glove_angles for e in events])
    R_local = torch.from_numpy(
        Rotation.from_rotvec(angles.reshape(-1, 3)).as_matrix().reshape(angles.shape + (3,)))
    body_wrist = torch.from_numpy(np.array([e.body_wrist for e in events]))
    ev, fi, co = _touch_index(events)
    corners = torch.from_numpy(structure.corners[co])
    normals = torch.from_numpy(structure.normals[co])
    tips = torch.as_tensor([TIP_JOINTS[f] for f in fi])
    ev_t = torch.from_numpy(ev)
    template = torch.from_numpy(init.template)

    tied = bool(conf['hand.tie_finger_scales'])
    markers = torch.tensor(init.marker_corners, dtype=torch.float64, requires_grad=True)
    if tied:
        scales = torch.tensor(init.scales.reshape(len(FINGERS), 4).mean(axis=1), requires_grad=True)
    else:
        scales = torch.tensor(init.scales, dtype=torch.float64, requires_grad=True)
    palm = list(PALM_JOINTS)
    offsets = torch.tensor(init.offsets[palm], dtype=torch.float64, requires_grad=True)
    params = [markers, scales, offsets]
    fixed_offsets = torch.from_numpy(init.offsets)
    palm_mask = torch.zeros(len(JOINT_NAMES), 1, dtype=torch.float64)
    palm_mask[palm] = 1.0
    rho = float(conf['hand.pen_softening'])

    def full_offsets():
        s = scales.repeat_interleave(4) if tied else scales
        off = fixed_offsets * (1 - palm_mask)
        off = off.index_add(0, torch.as_tensor(palm), offsets)
        return s[:, None] * template + off

    def evaluate():
        R, t = _kabsch_torch(markers, obs_t, vis_t)
        _, P = fk_tree(R_local, full_offsets(), PARENTS)
        tip_local = P[ev_t, tips]
        tip_cam = torch.einsum('nij,nj->ni', R[ev_t], tip_local) + t[ev_t]
        d = tip_cam - corners
        sq = (d ** 2).sum(-1)
        l_tip = sq.mean()
        l_wrist = ((t - body_wrist) ** 2).sum(-1).mean()
        cos = (normals * d).sum(-1) / torch.sqrt(sq + rho ** 2)
        l_pen = (torch.relu(-cos) ** 2).mean()
        loss = (conf['hand.lambda_tip'] * l_tip + conf['hand.lambda_wrist'] * l_wrist +
                conf['hand.lambda_pen'] * l_pen)
        return loss, torch.sqrt(sq).mean()

    starts = (0, int(conf['hand.scale_start']), int(conf['hand.offset_start']))
    decay = float(conf['hand.lr_decay'])
    opt = torch.optim.Adam([
        {'params': [markers], 'lr': conf['hand.lr_markers']},
        {'params': [scales], 'lr': conf['hand.lr_scales']},
        {'params': [offsets], 'lr': conf['hand.lr_offsets']},
    ])
    sched = torch.optim.lr_scheduler.LambdaLR(
        opt, [lambda it, s=s: 0.0 if it < s else decay ** (it - s) for s in starts])

    history = []
    best = None
    lo, hi = SCALE_BOUNDS
    for it in range(int(conf['hand.iterations']) + 1):
        opt.zero_grad()
        loss, residual = evaluate()
        if not torch.isfinite(loss):
            raise NonConvergence('Hand calibration loss became non-finite at iteration {}'.format(it))
        history.append(float(loss))
        if best is None or history[-1] < best[0]:
            best = (history[-1], float(residual), [p.detach().clone() for p in params])
        if it == int(conf['hand.iterations']):
            break
        loss.backward()
        opt.step()
        sched.step()
        with torch.no_grad():
            scales.clamp_(lo, hi)
            offsets.clamp_(-OFFSET_BOUND, OFFSET_BOUND)

    _, residual, (m, s, o) = best
    if residual > conf['hand.max_residual']:
        raise NonConvergence('Mean fingertip residual {:.4f} m exceeds {:.4f} m'
                             .format(residual, conf['hand.max_residual']))
    s = (s.repeat_interleave(4) if tied else s).numpy().copy()
    off = init.offsets.copy()
    off[palm] = o.numpy()
    skeleton = HandSkeleton(init.side, np.clip(s, lo, hi), np.clip(off, -OFFSET_BOUND, OFFSET_BOUND),
                            m.numpy().reshape(3, 4, 3).copy(), init.template)
    L.info('Hand calibration (%s): mean fingertip residual %.4f m', init.side, residual)
    return HandCalibration(skeleton, history, residual)


class ApeEvent(object):
    '''
    A validation touch: one fingertip on a known target point

    Parameters
    ----------
    finger : int
        Zero-based finger index, 0 for the thumb
    target : array_like
        Touched point in the camera frame
    glove_angles : array_like
        ``(20, 3)``
    marker_corners : array_like
        ``(12, 3)`` wrist marker corners, NaN where not seen
    '''

    def __init__(self, finger, target, glove_angles, marker_corners):
        self.finger = int(finger)
        self.target = np.asarray(target, dtype=float).reshape(3)
        self.glove_angles = np.asarray(glove_angles, dtype=float)
        self.marker_corners = np.asarray(marker_corners, dtype=float).reshape(12, 3)


def validate_hand_ape(events, skeleton):
    '''
    Average position error of fingertips at validation touches

    Returns
    -------
    float
        Mean fingertip-to-target distance in meters
    '''
    events = list(events)
    if not events:
        raise NoEvents('No validation touches')
    obs, vis = _hand_frames(events)
    R, t = kabsch_batch(skeleton.marker_corners, obs, vis)
    fk = fk_hand(skeleton, np.array([e.glove_angles for e in events]))
    fingers = np.array([e.finger for e in events])
    tips = fk.tips[np.arange(len(events)), fingers]
    tips = np.einsum('kij,kj->ki', R, tips) + t
    err = np.linalg.norm(tips - np.array([e.target for e in events]), axis=1)
    return float(err.mean())
