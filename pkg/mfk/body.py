'''
Body skeleton, forward kinematics, and calibration of the suit against optical markers

The body is a tree of 23 joints in the layout of common inertial suits. Eleven segments
carry flat square markers whose corners are tracked by the camera rig. Calibration
refines the joint offsets and the marker placements so that the suit's forward
kinematics agrees with the triangulated marker corners and the feet stay on the floor.
'''
import logging

import numpy as np
import torch
from scipy.spatial.transform import Rotation

from .config import as_config
from .errors import (DimensionMismatch, InvariantViolation, LengthMismatch, NoVisibleMarkers,
                     NonDecreasingLoss, NumericalError)
from .marker import square_corners
from .rigid_tracking import MarkerCorrespondence, kabsch, kabsch_batch
from .transform import RigidTransform


L = logging.getLogger(__name__)

JOINT_NAMES = (
    'pelvis', 'l5', 'l3', 't12', 't8', 'neck', 'head',
    'right_shoulder', 'right_upper_arm', 'right_forearm', 'right_hand',
    'left_shoulder', 'left_upper_arm', 'left_forearm', 'left_hand',
    'right_upper_leg', 'right_lower_leg', 'right_foot', 'right_toe',
    'left_upper_leg', 'left_lower_leg', 'left_foot', 'left_toe',
)

PARENTS = (-1, 0, 1, 2, 3, 4, 5,
           4, 7, 8, 9,
           4, 11, 12, 13,
           0, 15, 16, 17,
           0, 19, 20, 21)

REST_OFFSETS = np.array([
    (0.0, 0.0, 0.0),
    (0.0, 0.0, 0.10), (0.0, 0.0, 0.10), (0.0, 0.0, 0.10), (0.0, 0.0, 0.10),
    (0.0, 0.0, 0.16), (0.0, 0.0, 0.10),
    (0.0, -0.04, 0.12), (0.0, -0.15, 0.0), (0.0, -0.28, 0.0), (0.0, -0.25, 0.0),
    (0.0, 0.04, 0.12), (0.0, 0.15, 0.0), (0.0, 0.28, 0.0), (0.0, 0.25, 0.0),
    (0.0, -0.09, 0.0), (0.0, 0.0, -0.42), (0.0, 0.0, -0.40), (0.14, 0.0, -0.06),
    (0.0, 0.09, 0.0), (0.0, 0.0, -0.42), (0.0, 0.0, -0.40), (0.14, 0.0, -0.06),
])
''' Rest-pose offset of each joint from its parent, in meters. x forward, y left, z up '''

INSTRUMENTED_PARTS = (
    't8', 'right_hand', 'left_hand', 'right_upper_arm', 'left_upper_arm',
    'right_forearm', 'left_forearm', 'right_upper_leg', 'left_upper_leg',
    'right_lower_leg', 'left_lower_leg',
)

FOOT_JOINTS = ('right_foot', 'right_toe', 'left_foot', 'left_toe')
SPINE_JOINTS = ('l3', 't12', 't8', 'neck')
GAUGE_JOINTS = ('pelvis', 'l5')
SYMMETRIC_PAIRS = (
    ('right_shoulder', 'left_shoulder'), ('right_upper_arm', 'left_upper_arm'),
    ('right_forearm', 'left_forearm'), ('right_hand', 'left_hand'),
    ('right_upper_leg', 'left_upper_leg'), ('right_lower_leg', 'left_lower_leg'),
    ('right_foot', 'left_foot'), ('right_toe', 'left_toe'),
)

BODY_MARKER_BASE = 1000
MARKER_EDGE = 0.05

_PART_GEOMETRY = {
    # part: (segment direction, segment length, radius, marker count)
    't8': ((0.0, 0.0, 1.0), 0.16, 0.12, 4),
    'right_hand': ((0.0, -1.0, 0.0), 0.08, 0.03, 3),
    'left_hand': ((0.0, 1.0, 0.0), 0.08, 0.03, 3),
    'right_upper_arm': ((0.0, -1.0, 0.0), 0.28, 0.05, 4),
    'left_upper_arm': ((0.0, 1.0, 0.0), 0.28, 0.05, 4),
    'right_forearm': ((0.0, -1.0, 0.0), 0.25, 0.04, 4),
    'left_forearm': ((0.0, 1.0, 0.0), 0.25, 0.04, 4),
    'right_upper_leg': ((0.0, 0.0, -1.0), 0.42, 0.08, 4),
    'left_upper_leg': ((0.0, 0.0, -1.0), 0.42, 0.08, 4),
    'right_lower_leg': ((0.0, 0.0, -1.0), 0.40, 0.06, 4),
    'left_lower_leg': ((0.0, 0.0, -1.0), 0.40, 0.06, 4),
}


def default_marker_layout():
    '''
    Marker corner placements around each instrumented segment

    Returns
    -------
    dict
        Part name to ``(n_markers, 4, 3)`` corners in the part's joint frame
    '''
    layout = {}
    for part in INSTRUMENTED_PARTS:
        direction, length, radius, count = _PART_GEOMETRY[part]
        u = np.asarray(direction, dtype=float)
        helper = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 0.0, 1.0])
        e1 = np.cross(u, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(u, e1)
        markers = []
        for k in range(count):
            ang = 2 * np.pi * k / count
            n = np.cos(ang) * e1 + np.sin(ang) * e2
            center = u * length * (0.5 + 0.1 * (k % 2)) + n * radius
            markers.append(square_corners(center, u, np.cross(n, u), MARKER_EDGE))
        layout[part] = np.array(markers)
    return layout


class BodySkeleton(object):
    '''
    Joint tree, joint offsets and marker placements of the body

    Parameters
    ----------
    offsets : array_like
        ``(23, 3)`` offsets from each joint's parent
    markers : dict
        Part name to ``(n_markers, 4, 3)`` marker corners in the part's joint frame. Each of
        the eleven instrumented parts carries three or four markers
    joint_names : tuple of str, optional
    parents : tuple of int, optional
    '''

    def __init__(self, offsets=None, markers=None, joint_names=JOINT_NAMES, parents=PARENTS):
        self.joint_names = tuple(joint_names)
        self.parents = tuple(int(p) for p in parents)
        if len(self.parents) != len(self.joint_names):
            raise InvariantViolation('Joint names and parents differ in length')
        roots = [j for j, p in enumerate(self.parents) if p < 0]
        if roots != [0]:
            raise InvariantViolation('The skeleton must have a single root at index 0')
        if any(p >= j for j, p in enumerate(self.parents) if p >= 0):
            raise InvariantViolation('Joints must be listed after their parents')
        offsets = REST_OFFSETS if offsets is None else offsets
        self.offsets = np.array(offsets, dtype=float).reshape(len(self.joint_names), 3)
        if not np.all(np.isfinite(self.offsets)):
            raise InvariantViolation('Joint offsets are not finite')
        markers = default_marker_layout() if markers is None else markers
        self.markers = {}
        for part in INSTRUMENTED_PARTS:
            if part not in markers:
                raise InvariantViolation('Instrumented part {} has no markers'.format(part))
            m = np.array(markers[part], dtype=float).reshape(-1, 4, 3)
            if len(m) not in (3, 4):
                raise InvariantViolation('Part {} carries {} markers, expected 3 or 4'.format(part, len(m)))
            self.markers[part] = m
        extra = set(markers) - set(INSTRUMENTED_PARTS)
        if extra:
            raise InvariantViolation('Markers given for parts that are not instrumented: {}'.format(sorted(extra)))
        self._layout()

    def _layout(self):
        keys, joints, local = [], [], []
        for k, part in enumerate(INSTRUMENTED_PARTS):
            j = self.joint_index(part)
            for m, corners in enumerate(self.markers[part]):
                for c in range(4):
                    keys.append((BODY_MARKER_BASE + 10 * k + m, c))
                    joints.append(j)
                    local.append(corners[c])
        self.corner_keys = keys
        self.corner_joints = np.array(joints)
        self.corner_local = np.array(local)

    @property
    def n_joints(self):
        return len(self.joint_names)

    @property
    def n_corners(self):
        return len(self.corner_keys)

    def joint_index(self, name):
        return self.joint_names.index(name)

    def marker_ids(self, part):
        k = INSTRUMENTED_PARTS.index(part)
        return [BODY_MARKER_BASE + 10 * k + m for m in range(len(self.markers[part]))]

    def subtree(self, j):
        res = {j}
        for k in range(j + 1, self.n_joints):
            if self.parents[k] in res:
                res.add(k)
        return res

    def observable_joints(self):
        '''
        Joints whose offsets the markers determine: not fixed by the gauge, and with an
        instrumented part in their subtree
        '''
        gauge = {self.joint_index(g) for g in GAUGE_JOINTS}
        inst = {self.joint_index(p) for p in INSTRUMENTED_PARTS}
        return [j for j in range(self.n_joints) if j not in gauge and self.subtree(j) & inst]

    def with_params(self, offsets=None, corner_local=None):
        ''' A copy with replaced offsets and/or flattened marker corners '''
        markers = self.markers
        if corner_local is not None:
            corner_local = np.asarray(corner_local, dtype=float).reshape(self.n_corners, 3)
            markers, i = {}, 0
            for part in INSTRUMENTED_PARTS:
                n = self.markers[part].size // 3
                markers[part] = corner_local[i:i + n].reshape(-1, 4, 3)
                i += n
        return BodySkeleton(self.offsets if offsets is None else offsets, markers,
                            self.joint_names, self.parents)

    def to_dict(self):
        return {'joint_names': list(self.joint_names), 'parents': list(self.parents),
                'offsets': self.offsets.tolist(),
                'markers': {p: m.tolist() for p, m in self.markers.items()}}

    @classmethod
    def from_dict(cls, d):
        return cls(d['offsets'], d['markers'], d['joint_names'], d['parents'])

    def __eq__(self, other):
        return (isinstance(other, BodySkeleton) and self.joint_names == other.joint_names and
                self.parents == other.parents and np.array_equal(self.offsets, other.offsets) and
                all(np.array_equal(self.markers[p], other.markers[p]) for p in INSTRUMENTED_PARTS))

    __hash__ = None


def fk_tree(R_local, offsets, parents):
    '''
    Global rotations and positions of a joint tree

    Parameters
    ----------
    R_local : torch.Tensor
        ``(B, J, 3, 3)``
    offsets : torch.Tensor
        ``(J, 3)``

    Returns
    -------
    G : torch.Tensor
        ``(B, J, 3, 3)``
    P : torch.Tensor
        ``(B, J, 3)``
    '''
    G, P = [], []
    for j, p in enumerate(parents):
        if p < 0:
            G.append(R_local[:, j])
            P.append(offsets[j].expand(R_local.shape[0], 3))
        else:
            G.append(G[p] @ R_local[:, j])
            P.append(P[p] + G[p] @ offsets[j])
    return torch.stack(G, dim=1), torch.stack(P, dim=1)


def _local_rotations(angles):
    angles = np.asarray(angles, dtype=float)
    return Rotation.from_rotvec(angles.reshape(-1, 3)).as_matrix().reshape(angles.shape[:-1] + (3, 3))


class BodyFK(object):
    '''
    Forward kinematics of the body for one or more frames

    Attributes
    ----------
    joint_rotations : numpy.ndarray
        ``(..., J, 3, 3)`` global joint rotations
    joint_positions : numpy.ndarray
        ``(..., J, 3)``
    corners : numpy.ndarray
        ``(..., N, 3)`` marker corners in the order of `BodySkeleton.corner_keys`
    '''

    def __init__(self, skeleton, joint_rotations, joint_positions, corners):
        self.skeleton = skeleton
        self.joint_rotations = joint_rotations
        self.joint_positions = joint_positions
        self.corners = corners

    def marker_corners(self, part):
        ''' ``(..., n_markers, 4, 3)`` corners of one part '''
        sel = self.skeleton.corner_joints == self.skeleton.joint_index(part)
        c = self.corners[..., sel, :]
        return c.reshape(c.shape[:-2] + (-1, 4, 3))

    def corner_map(self):
        ''' Single-frame corners keyed by ``(marker_id, corner_index)`` '''
        if self.corners.ndim != 2:
            raise DimensionMismatch('corner_map needs a single frame')
        return dict(zip(self.skeleton.corner_keys, self.corners))


def fk_body(skeleton, angles, root=None):
    '''
    Forward kinematics of the body

    Parameters
    ----------
    skeleton : BodySkeleton
    angles : array_like
        ``(23, 3)`` or ``(T, 23, 3)`` axis-angle local joint rotations
    root : RigidTransform, optional
        Person frame to camera frame. Defaults to the identity

    Returns
    -------
    BodyFK
    '''
    angles = np.asarray(angles, dtype=float)
    if angles.shape[-2:] != (skeleton.n_joints, 3) or angles.ndim not in (2, 3):
        raise DimensionMismatch('Expected angles of shape (..., {}, 3), got {}'
                                .format(skeleton.n_joints, angles.shape))
    single = angles.ndim == 2
    batch = angles[None] if single else angles
    R_local = torch.from_numpy(_local_rotations(batch))
    with torch.no_grad():
        G, P = fk_tree(R_local, torch.from_numpy(skeleton.offsets), skeleton.parents)
        G, P = G.numpy(), P.numpy()
    corners = P[:, skeleton.corner_joints] + np.einsum('bnij,nj->bni', G[:, skeleton.corner_joints],
                                                       skeleton.corner_local)
    if root is not None:
        R, t = root.matrix, root.translation
        G = np.einsum('ij,bkjl->bkil', R, G)
        P = P @ R.T + t
        corners = corners @ R.T + t
    if single:
        G, P, corners = G[0], P[0], corners[0]
    return BodyFK(skeleton, G, P, corners)


def mocap_to_camera(fk, observed, min_corners=3):
    '''
    Rigid transform aligning the suit's person frame with the camera frame

    Parameters
    ----------
    fk : BodyFK
        Single-frame forward kinematics in the person frame
    observed : dict or iterable of TriangulatedCorner
        Observed corners keyed by ``(marker_id, corner_index)``, or triangulated corners
    min_corners : int
        Corners a marker needs to count as visible

    Returns
    -------
    RigidTransform
    '''
    model = fk.corner_map()
    if isinstance(observed, dict):
        items = [(k, np.asarray(v, dtype=float), 1.0) for k, v in observed.items()]
    else:
        items = [(c.key, c.position, c.weight) for c in observed]
    items = [it for it in items if it[0] in model]
    per_marker = {}
    for (m, _), _, _ in items:
        per_marker[m] = per_marker.get(m, 0) + 1
    if not any(n >= min_corners for n in per_marker.values()):
        raise NoVisibleMarkers('No body marker has {} or more visible corners'.format(min_corners))
    return kabsch(MarkerCorrespondence([model[k] for k, _, _ in items],
                                       [p for _, p, _ in items],
                                       [w for _, _, w in items]))


def capture_visibility_mask(skeleton):
    '''
    Corners that stay on the suit after alignment

    All upper-leg markers come off, as does one marker each from the upper arms, forearms
    and lower legs.

    Returns
    -------
    numpy.ndarray
        Boolean mask over `BodySkeleton.corner_keys`
    '''
    removed = set()
    for part in INSTRUMENTED_PARTS:
        ids = skeleton.marker_ids(part)
        if part.endswith('upper_leg'):
            removed.update(ids)
        elif part.endswith(('upper_arm', 'forearm', 'lower_leg')):
            removed.add(ids[-1])
    return np.array([m not in removed for m, _ in skeleton.corner_keys])


class BodyCalibrationSequence(object):
    '''
    A capture of the alignment motion

    Parameters
    ----------
    angles : array_like
        ``(T, 23, 3)`` suit joint angles resampled to camera frames
    observed : array_like
        ``(T, N, 3)`` triangulated marker corners in `BodySkeleton.corner_keys` order; NaN
        where a corner was not triangulated
    '''

    def __init__(self, angles, observed):
        self.angles = np.asarray(angles, dtype=float)
        self.observed = np.asarray(observed, dtype=float)
        if self.angles.ndim != 3 or self.angles.shape[2] != 3:
            raise DimensionMismatch('Angles must have shape (T, J, 3)')
        if self.observed.ndim != 3 or self.observed.shape[2] != 3:
            raise DimensionMismatch('Observations must have shape (T, N, 3)')
        if len(self.angles) != len(self.observed):
            raise LengthMismatch('{} frames of angles and {} frames of observations'
                                 .format(len(self.angles), len(self.observed)))

    @property
    def visible(self):
        return np.all(np.isfinite(self.observed), axis=2)

    def __len__(self):
        return len(self.angles)


class BodyCalibration(object):
    '''
    Result of `calibrate_body`

    Attributes
    ----------
    skeleton : BodySkeleton
    loss_history : list of float
        Full-sequence loss before the first epoch, after each epoch, and after the final
        refinement when it lowered the loss
    marker_rms : dict
        Marker id to RMS corner residual in meters over the sequence
    transforms : list of RigidTransform
        Person-to-camera transform of each frame; None where fewer than three corners were
        triangulated
    '''

    def __init__(self, skeleton, loss_history, marker_rms, transforms):
        self.skeleton = skeleton
        self.loss_history = loss_history
        self.marker_rms = marker_rms
        self.transforms = transforms


class _BodyObjective(object):

    def __init__(self, sequence, init, conf):
        self.skeleton = init
        self.conf = conf
        vis = sequence.visible
        usable = vis.sum(axis=1) >= 3
        if not usable.any():
            raise NoVisibleMarkers('No frame has three or more triangulated body corners')
        if not usable.all():
            L.warning('Ignoring %d frame(s) with fewer than three triangulated corners', (~usable).sum())
        self.R_local = torch.from_numpy(_local_rotations(sequence.angles[usable]))
        self.obs = np.where(vis[usable][..., None], sequence.observed[usable], 0.0)
        self.mask = vis[usable].astype(float)
        self.obs_t = torch.from_numpy(self.obs)
        self.mask_t = torch.from_numpy(self.mask)
        self.offsets = torch.tensor(init.offsets, dtype=torch.float64, requires_grad=True)
        self.corner_local = torch.tensor(init.corner_local, dtype=torch.float64, requires_grad=True)
        self.params = [self.offsets, self.corner_local]
        self.init_lengths = torch.linalg.norm(torch.from_numpy(init.offsets), dim=1)
        self.cj = torch.from_numpy(init.corner_joints)
        self.foot = [init.joint_index(j) for j in FOOT_JOINTS]
        self.spine = [init.joint_index(j) for j in SPINE_JOINTS]
        self.pairs = [(init.joint_index(a), init.joint_index(b)) for a, b in SYMMETRIC_PAIRS]
        self.fixed = [init.joint_index(j) for j in GAUGE_JOINTS]
        self.every = torch.arange(len(self.obs))

    def __len__(self):
        return len(self.obs)

    def forward(self, idx):
        G, P = fk_tree(self.R_local[idx], self.offsets, self.skeleton.parents)
        corners = P[:, self.cj] + torch.einsum('bnij,nj->bni', G[:, self.cj], self.corner_local)
        with torch.no_grad():
            R, t = kabsch_batch(corners.detach().numpy(), self.obs[idx], self.mask[idx])
        return torch.from_numpy(R), torch.from_numpy(t), corners, P

    def loss(self, idx):
        conf = self.conf
        R, t, corners, P = self.forward(idx)
        moved = torch.einsum('bij,bnj->bni', R, corners) + t[:, None]
        mask = self.mask_t[idx]
        sq = ((moved - self.obs_t[idx]) ** 2).sum(-1) * mask
        l_body = sq.sum() / mask.sum()
        feet = torch.einsum('bij,bnj->bni', R, P[:, self.foot]) + t[:, None]
        z = feet[..., 2].min(dim=1).values
        band = conf['body.foot_band']
        l_foot = (torch.relu(-z) ** 2 + torch.relu(z - band) ** 2).mean()
        total = conf['body.lambda_body'] * l_body + conf['body.lambda_foot'] * l_foot
        lengths = torch.linalg.norm(self.offsets, dim=1)
        if conf['body.reg_spine']:
            total = total + conf['body.reg_spine'] * ((lengths[self.spine] - self.init_lengths[self.spine]) ** 2).sum()
        if conf['body.reg_symmetry']:
            a, b = zip(*self.pairs)
            total = total + conf['body.reg_symmetry'] * ((lengths[list(a)] - lengths[list(b)]) ** 2).sum()
        return total

    def backward(self, idx):
        for p in self.params:
            p.grad = None
        loss = self.loss(idx)
        loss.backward()
        self.offsets.grad[self.fixed] = 0.0
        return loss

    def full_loss(self):
        with torch.no_grad():
            return float(self.loss(self.every))

    def full_gradient_norm(self):
        self.backward(self.every)
        return float(max(p.grad.abs().max() for p in self.params))

    def snapshot(self):
        return [p.detach().clone() for p in self.params]

    def restore(self, values):
        with torch.no_grad():
            for p, v in zip(self.params, values):
                p.copy_(v)

    def adam(self, lr):
        return torch.optim.Adam(self.params, lr=lr)

    def refine(self, iterations):
        '''
        L-BFGS over the whole sequence; kept only when it lowers the loss

        Returns
        -------
        float
            The full-sequence loss afterwards
        '''
        start, before = self.snapshot(), self.full_loss()
        tol = float(self.conf['body.grad_tol'])
        opt = torch.optim.LBFGS(self.params, lr=1.0, max_iter=iterations, max_eval=2 * iterations,
                                tolerance_grad=tol, tolerance_change=0.0, history_size=20,
                                line_search_fn='strong_wolfe')
        opt.step(lambda: self.backward(self.every))
        after = self.full_loss()
        if not np.isfinite(after) or after >= before:
            self.restore(start)
            return before
        return after


def calibrate_body(sequence, init=None, config=None, seed=0):
    '''
    Refine joint offsets and marker placements against triangulated marker corners

    Adam runs over shuffled minibatches of frames at ``body.lr``. Per-frame person-to-camera
    transforms come from a Kabsch fit against the current parameters at every step. The
    root has no offset parameters and the first spine offset is held fixed, removing the
    global translation gauge.

    Each epoch ends on the iterate with the lowest full-sequence loss, so the loss never
    rises from one epoch to the next. An epoch that finds no lower loss is retried from
    its start with fresh moments and half the learning rate; once the retries run out the
    epochs stop. A final L-BFGS pass over the whole sequence polishes the result and is
    kept only when it lowers the loss. A loss at or below ``body.converged_loss`` ends the
    calibration at once. When nothing lowers the loss from a starting point whose gradient
    exceeds ``body.grad_tol``, `NonDecreasingLoss` is raised.

    Parameters
    ----------
    sequence : BodyCalibrationSequence
    init : BodySkeleton, optional
        Starting point. Defaults to the rest skeleton
    config : Config, optional
    seed : int
        Seed for minibatch shuffling

    Returns
    -------
    BodyCalibration
    '''
    conf = as_config(config)
    init = init or BodySkeleton()
    if sequence.angles.shape[1] != init.n_joints:
        raise DimensionMismatch('Sequence has {} joints, skeleton has {}'
                                .format(sequence.angles.shape[1], init.n_joints))
    if sequence.observed.shape[1] != init.n_corners:
        raise DimensionMismatch('Sequence has {} corners, skeleton has {}'
                                .format(sequence.observed.shape[1], init.n_corners))
    obj = _BodyObjective(sequence, init, conf)
    lr = float(conf['body.lr'])
    floor = float(conf['body.converged_loss'])
    opt = obj.adam(lr)
    gen = torch.Generator().manual_seed(int(seed))
    batch = int(conf['body.batch_frames']) or len(obj)

    history = [obj.full_loss()]
    if not np.isfinite(history[0]):
        raise NumericalError('Initial calibration loss is not finite')
    L.info('Body calibration: %d frames, initial loss %.6g', len(obj), history[0])
    for epoch in range(int(conf['body.epochs'])):
        if history[-1] <= floor:
            break
        start = obj.snapshot()
        best, best_params = history[-1], start
        for attempt in range(int(conf['body.max_retries']) + 1):
            for idx in torch.randperm(len(obj), generator=gen).split(batch):
                obj.backward(idx)
                opt.step()
                current = obj.full_loss()
                if current < best:
                    best, best_params = current, obj.snapshot()
            if best < history[-1]:
                break
            L.debug('Epoch %d found no lower loss than %.6g; retrying at half the learning rate',
                    epoch, history[-1])
            obj.restore(start)
            lr /= 2.0
            opt = obj.adam(lr)
        else:
            L.info('Body calibration settled after %d epoch(s) at loss %.6g', epoch, history[-1])
            break
        obj.restore(best_params)
        history.append(best)
        L.debug('Epoch %d loss %.6g', epoch, best)

    iterations = int(conf['body.refine_iterations'])
    if iterations > 0 and history[-1] > floor:
        refined = obj.refine(iterations)
        if refined < history[-1]:
            history.append(refined)
            L.debug('Refinement loss %.6g', refined)
    if len(history) == 1 and history[0] > floor and int(conf['body.epochs']) > 0:
        grad = obj.full_gradient_norm()
        if grad > conf['body.grad_tol']:
            raise NonDecreasingLoss('No epoch lowered the loss from {:.6g} (gradient {:.3g})'
                                    .format(history[0], grad))

    skeleton = init.with_params(obj.offsets.detach().numpy().copy(), obj.corner_local.detach().numpy().copy())
    marker_rms, transforms = _alignment(skeleton, sequence)
    L.info('Body calibration finished with loss %.6g', history[-1])
    return BodyCalibration(skeleton, history, marker_rms, transforms)


def _alignment(skeleton, sequence):
    ''' Per-marker RMS residuals and per-frame transforms of a calibrated skeleton '''
    fk = fk_body(skeleton, sequence.angles)
    visible = sequence.visible
    aligned = visible.sum(axis=1) >= 3
    R = np.tile(np.eye(3), (len(visible), 1, 1))
    t = np.zeros((len(visible), 3))
    if aligned.any():
        R[aligned], t[aligned] = kabsch_batch(fk.corners[aligned],
                                              np.where(visible[aligned][..., None], sequence.observed[aligned], 0.0),
                                              visible[aligned].astype(float))
    moved = np.einsum('bij,bnj->bni', R, fk.corners) + t[:, None]
    used = visible & aligned[:, None]
    err = np.where(used, np.sum((moved - np.nan_to_num(sequence.observed)) ** 2, axis=2), np.nan)
    marker_rms = {}
    for m in sorted({k[0] for k in skeleton.corner_keys}):
        cols = [i for i, k in enumerate(skeleton.corner_keys) if k[0] == m]
        vals = err[:, cols]
        marker_rms[m] = float(np.sqrt(np.nanmean(vals))) if np.isfinite(vals).any() else float('nan')
    transforms = [RigidTransform.from_matrix(R[i], t[i]) if aligned[i] else None for i in range(len(R))]
    if not aligned.all():
        L.warning('%d frame(s) have no person-to-camera transform', (~aligned).sum())
    return marker_rms, transforms
