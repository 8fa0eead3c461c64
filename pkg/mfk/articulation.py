'''
Joint models for articulated object parts

Two one-degree-of-freedom joints are supported. A revolute joint rotates a part about an
axis through a pivot; a sliding (prismatic) joint translates it along an axis. Joints are
fitted from the corner positions of the part's marker cubes, observed at several
configurations and expressed in the canonical frame of the object's base.
'''
import itertools
import logging

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation

from .config import as_config
from .errors import (InsufficientRotation, InvariantViolation, LengthMismatch, ModelViolation,
                     NoDisplacement, NonConvergence, RotationDetected, TooFewCorners)
from .rigid_tracking import _kabsch
from .transform import RigidTransform


L = logging.getLogger(__name__)

REVOLUTE = 'revolute'
SLIDING = 'sliding'

ARTICULATED_CATALOG = {
    'sink': (REVOLUTE, REVOLUTE),
    'laptop': (REVOLUTE,),
    'drawer': (SLIDING, SLIDING),
    'gas_stove': (REVOLUTE, REVOLUTE),
    'microwave': (REVOLUTE,),
    'trashbin': (REVOLUTE,),
    'washing_machine': (REVOLUTE,),
    'refrigerator': (REVOLUTE, REVOLUTE),
}
''' Joint kinds of the articulated parts of each captured furniture and appliance type '''


class JointSpec(object):
    '''
    A revolute or sliding joint

    Parameters
    ----------
    kind : str
        ``'revolute'`` or ``'sliding'``
    axis : array_like
        Unit 3-vector
    pivot : array_like, optional
        A point on the axis. Required for revolute joints
    '''

    def __init__(self, kind, axis, pivot=None):
        if kind not in (REVOLUTE, SLIDING):
            raise InvariantViolation('Unknown joint kind {!r}'.format(kind))
        axis = np.array(axis, dtype=float).reshape(3)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-6:
            raise InvariantViolation('Joint axis must be a unit vector, got norm {}'.format(np.linalg.norm(axis)))
        if kind == REVOLUTE:
            if pivot is None:
                raise InvariantViolation('A revolute joint needs a pivot')
            pivot = np.array(pivot, dtype=float).reshape(3)
        elif pivot is not None:
            raise InvariantViolation('A sliding joint has no pivot')
        self.kind = kind
        n = np.linalg.norm(axis)
        self.axis = axis if abs(n - 1.0) <= 4 * np.finfo(float).eps else axis / n
        self.pivot = pivot

    def transform(self, s):
        ''' Motion of the part at joint state `s`, relative to its canonical placement '''
        if self.kind == SLIDING:
            return RigidTransform(None, s * self.axis)
        rot = Rotation.from_rotvec(s * self.axis)
        return RigidTransform.from_rotation(rot, self.pivot - rot.apply(self.pivot))

    def to_dict(self):
        d = {'kind': self.kind, 'axis': self.axis.tolist()}
        if self.pivot is not None:
            d['pivot'] = self.pivot.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d['kind'], d['axis'], d.get('pivot'))

    def __eq__(self, other):
        return (isinstance(other, JointSpec) and self.kind == other.kind and
                np.array_equal(self.axis, other.axis) and
                (self.pivot is None) == (other.pivot is None) and
                (self.pivot is None or np.array_equal(self.pivot, other.pivot)))

    __hash__ = None

    def __repr__(self):
        return 'JointSpec({!r}, axis={}, pivot={})'.format(
            self.kind, np.round(self.axis, 6).tolist(),
            None if self.pivot is None else np.round(self.pivot, 6).tolist())


class PartObservationSet(object):
    '''
    Corner positions of one part at two or more configurations

    Parameters
    ----------
    states : list of array_like
        One ``(N, 3)`` array per configuration, rows in the same corner order
    '''

    def __init__(self, states):
        states = [np.array(s, dtype=float).reshape(-1, 3) for s in states]
        if len(states) < 2:
            raise TooFewCorners('At least two configurations are required, got {}'.format(len(states)))
        n = len(states[0])
        if any(len(s) != n for s in states):
            raise LengthMismatch('Configurations have different corner counts')
        if n < 3:
            raise TooFewCorners('At least three corners are required, got {}'.format(n))
        self.states = np.array(states)

    @classmethod
    def from_camera(cls, part_corners, base_poses):
        ''' Express per-configuration camera-frame corners in the base's canonical frame '''
        return cls([p.inverse().apply(c) for c, p in zip(part_corners, base_poses)])

    def __len__(self):
        return len(self.states)

    @property
    def centroid(self):
        return self.states.reshape(-1, 3).mean(axis=0)


def _relative_rotation_angle(a, b):
    R, _ = _kabsch(a, b, np.ones(len(a)))
    return Rotation.from_matrix(R).magnitude()


def fit_sliding(observations, config=None):
    '''
    Fit a sliding joint axis

    Pairwise corner displacements are oriented along the first observed motion, averaged
    and normalized. The axis points along the first motion.

    Parameters
    ----------
    observations : PartObservationSet
    config : Config, optional

    Returns
    -------
    JointSpec
    '''
    conf = as_config(config)
    S = observations.states
    max_rot = np.deg2rad(conf['articulation.sliding_max_rotation_deg'])
    pairs = list(itertools.combinations(range(len(S)), 2))
    for i, j in pairs:
        ang = _relative_rotation_angle(S[i], S[j])
        if ang > max_rot:
            raise RotationDetected('Configurations {} and {} differ by a {:.3f} degree rotation'
                                   .format(i, j, np.rad2deg(ang)))

    disp = np.array([(S[j] - S[i]).mean(axis=0) for i, j in pairs])
    mags = np.linalg.norm(disp, axis=1)
    if mags.max() < conf['articulation.min_displacement_m']:
        raise NoDisplacement('Largest displacement is {:.6f} m'.format(mags.max()))

    # reference: first motion in sequence order that is large enough to carry a direction
    ref = None
    for k in range(1, len(S)):
        d = (S[k] - S[0]).mean(axis=0)
        if np.linalg.norm(d) >= conf['articulation.min_displacement_m']:
            ref = d
            break
    if ref is None:
        ref = disp[np.argmax(mags)]
    oriented = np.where((disp @ ref < 0)[:, None], -disp, disp)
    axis = oriented.sum(axis=0)
    axis /= np.linalg.norm(axis)
    L.debug('Sliding axis %s from %d configurations', axis, len(S))
    return JointSpec(SLIDING, axis)


class RevoluteFit(object):
    '''
    Per-configuration angles of a fitted revolute joint

    Attributes
    ----------
    angles : numpy.ndarray
        Angle of each configuration relative to the first, in radians
    objective : float
        Sum of squared corner residuals over all configuration pairs
    '''

    def __init__(self, angles, objective):
        self.angles = angles
        self.objective = objective

    @property
    def pairwise(self):
        ''' ``delta[t, t'] = angles[t] - angles[t']`` '''
        return self.angles[:, None] - self.angles[None, :]


def _tangent_basis(a):
    helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(a, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    return e1, e2


def revolute_objective(observations, joint, angles):
    ''' Sum over configuration pairs of squared corner residuals under the joint model '''
    S = observations.states
    total = 0.0
    for i, j in itertools.combinations(range(len(S)), 2):
        T = JointSpec(REVOLUTE, joint.axis, joint.pivot).transform(angles[i] - angles[j])
        total += np.sum((S[i] - T.apply(S[j])) ** 2)
    return float(total)


def fit_revolute(observations, config=None):
    '''
    Fit a revolute joint axis and pivot

    The axis is seeded from the rotation between the two most separated configurations
    and the pivot from a least-squares solve over all pairwise rigid motions. Axis, pivot
    and per-configuration angles are then refined jointly over all configuration pairs.
    The reported pivot is the point on the axis nearest the corner centroid, and the axis
    sign makes the first motion positive.

    Parameters
    ----------
    observations : PartObservationSet
    config : Config, optional

    Returns
    -------
    joint : JointSpec
    fit : RevoluteFit
    '''
    conf = as_config(config)
    S = observations.states
    n = len(S)
    ones = np.ones(S.shape[1])

    # R_k maps configuration 0 onto configuration k
    motions = [_kabsch(S[0], S[k], ones) for k in range(n)]
    pairs = list(itertools.combinations(range(n), 2))
    angles = {(i, j): _relative_rotation_angle(S[i], S[j]) for i, j in pairs}
    i_max, j_max = max(angles, key=angles.get)
    if angles[(i_max, j_max)] < np.deg2rad(conf['articulation.revolute_min_rotation_deg']):
        raise InsufficientRotation('Largest rotation between configurations is {:.3f} degrees'
                                   .format(np.rad2deg(angles[(i_max, j_max)])))

    R_ij, _ = _kabsch(S[i_max], S[j_max], ones)
    a0 = Rotation.from_matrix(R_ij).as_rotvec()
    a0 /= np.linalg.norm(a0)

    A, b = [], []
    for i, j in pairs:
        R, t = _kabsch(S[i], S[j], ones)
        A.append(np.eye(3) - R)
        b.append(t)
    p0 = np.linalg.lstsq(np.vstack(A), np.concatenate(b), rcond=None)[0]

    s0 = np.array([Rotation.from_matrix(R).as_rotvec() @ a0 for R, _ in motions])
    s0 -= s0[0]

    e1, e2 = _tangent_basis(a0)

    def unpack(x):
        a = a0 + x[0] * e1 + x[1] * e2
        a /= np.linalg.norm(a)
        p = p0 + x[2] * e1 + x[3] * e2
        s = np.concatenate([[0.0], x[4:]])
        return a, p, s

    def residuals(x):
        a, p, s = unpack(x)
        out = []
        for i, j in pairs:
            rot = Rotation.from_rotvec((s[j] - s[i]) * a)
            pred = rot.apply(S[i] - p) + p
            out.append((pred - S[j]).reshape(-1))
        return np.concatenate(out)

    x0 = np.concatenate([np.zeros(4), s0[1:]])
    res = least_squares(residuals, x0, method='lm', xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        max_nfev=int(conf['articulation.max_nfev']))
    grad = np.linalg.norm(res.jac.T @ res.fun)
    if not np.isfinite(res.cost) or grad > conf['articulation.grad_tol']:
        raise NonConvergence('Revolute refinement stopped with gradient norm {:.3g}'.format(grad))

    a, p, s = unpack(res.x)
    for k in range(1, n):
        if abs(s[k]) > 1e-9:
            if s[k] < 0:
                a, s = -a, -s
            break
    c = observations.centroid
    p = p + ((c - p) @ a) * a
    joint = JointSpec(REVOLUTE, a, p)
    fit = RevoluteFit(s, 2.0 * res.cost)
    L.debug('Revolute axis %s pivot %s, objective %.3g', a, p, fit.objective)
    return joint, fit


class PartState(object):
    '''
    Scalar joint state of a part at one frame and the motion the joint does not explain

    Attributes
    ----------
    value : float
        Angle in radians or displacement in meters
    residual_translation : float
    residual_rotation : float
        Radians
    '''

    def __init__(self, value, residual_translation, residual_rotation):
        self.value = float(value)
        self.residual_translation = float(residual_translation)
        self.residual_rotation = float(residual_rotation)

    def __float__(self):
        return self.value

    def __repr__(self):
        return 'PartState({:.6f}, residual=({:.4g} m, {:.4g} rad))'.format(
            self.value, self.residual_translation, self.residual_rotation)


def part_state(base_pose, part_pose, joint, config=None, strict=True):
    '''
    Joint state of a part given the base and part poses

    Parameters
    ----------
    base_pose : RigidTransform
    part_pose : RigidTransform
        Both map their canonical frames into the camera frame
    joint : JointSpec
    config : Config, optional
    strict : bool
        Raise `ModelViolation` when the residual exceeds the configured thresholds. When
        false the violation is only logged

    Returns
    -------
    PartState
    '''
    conf = as_config(config)
    rel = base_pose.inverse().compose(part_pose)
    if joint.kind == REVOLUTE:
        q = rel.rotation
        # twist of the relative rotation about the joint axis
        s = 2.0 * np.arctan2(q[1:] @ joint.axis, q[0])
        s = (s + np.pi) % (2 * np.pi) - np.pi
    else:
        s = float(rel.translation @ joint.axis)
    residual = joint.transform(s).inverse().compose(rel)
    dt = float(np.linalg.norm(residual.translation))
    da = float(residual.scipy_rotation.magnitude())
    if dt > conf['articulation.max_residual_m'] or da > np.deg2rad(conf['articulation.max_residual_deg']):
        msg = 'Part motion departs from the {} joint by {:.4f} m / {:.2f} degrees'.format(
            joint.kind, dt, np.rad2deg(da))
        if strict:
            raise ModelViolation(msg)
        L.warning(msg)
    return PartState(s, dt, da)
