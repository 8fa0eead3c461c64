'''
Rigid transforms and pose sequences

Quaternions are stored scalar-first, ``(w, x, y, z)``, everywhere in mfk, including the
session files. scipy uses scalar-last internally, so conversions go through `wxyz_to_xyzw`
and `xyzw_to_wxyz`.
'''
import logging

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from .errors import InvariantViolation, LengthMismatch


L = logging.getLogger(__name__)

IDENTITY_QUATERNION = np.array([1.0, 0.0, 0.0, 0.0])


def wxyz_to_xyzw(q):
    return np.roll(np.asarray(q, dtype=float), -1, axis=-1)


def xyzw_to_wxyz(q):
    return np.roll(np.asarray(q, dtype=float), 1, axis=-1)


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


def _canonical_quaternion(q):
    q = np.asarray(q, dtype=float).reshape(4)
    if not np.all(np.isfinite(q)):
        raise InvariantViolation('Quaternion has non-finite entries: {}'.format(q))
    n = np.linalg.norm(q)
    if n < 1e-12:
        raise InvariantViolation('Quaternion has zero norm')
    if abs(n - 1.0) > 4 * np.finfo(float).eps:
        q = q / n
    if q[0] < 0:
        q = -q
    return q


class RigidTransform(object):
    '''
    A proper rigid transform: a unit quaternion rotation followed by a translation

    Instances are immutable. `compose` follows matrix convention: ``a.compose(b)`` applies
    `b` first.

    Parameters
    ----------
    rotation : array_like, optional
        Quaternion ``(w, x, y, z)``. Normalized on construction. Defaults to the identity
    translation : array_like, optional
        3-vector. Defaults to zero
    '''

    def __init__(self, rotation=None, translation=None):
        q = IDENTITY_QUATERNION if rotation is None else rotation
        t = np.zeros(3) if translation is None else np.asarray(translation, dtype=float).reshape(3)
        if not np.all(np.isfinite(t)):
            raise InvariantViolation('Translation has non-finite entries: {}'.format(t))
        self._q = _frozen(_canonical_quaternion(q))
        self._t = _frozen(t)

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def from_rotation(cls, rotation, translation=None):
        ''' Build from a scipy `~scipy.spatial.transform.Rotation` '''
        return cls(xyzw_to_wxyz(rotation.as_quat()), translation)

    @classmethod
    def from_matrix(cls, matrix, translation=None):
        return cls.from_rotation(Rotation.from_matrix(np.asarray(matrix, dtype=float)), translation)

    @classmethod
    def from_rotvec(cls, rotvec, translation=None):
        return cls.from_rotation(Rotation.from_rotvec(np.asarray(rotvec, dtype=float)), translation)

    @classmethod
    def from_homogeneous(cls, h):
        h = np.asarray(h, dtype=float)
        return cls.from_matrix(h[:3, :3], h[:3, 3])

    @property
    def rotation(self):
        ''' Unit quaternion ``(w, x, y, z)`` with ``w >= 0`` '''
        return self._q

    @property
    def translation(self):
        return self._t

    @property
    def scipy_rotation(self):
        return Rotation.from_quat(wxyz_to_xyzw(self._q))

    @property
    def matrix(self):
        return self.scipy_rotation.as_matrix()

    @property
    def rotvec(self):
        return self.scipy_rotation.as_rotvec()

    def homogeneous(self):
        h = np.eye(4)
        h[:3, :3] = self.matrix
        h[:3, 3] = self._t
        return h

    def apply(self, points):
        ''' Transform points of shape ``(..., 3)`` '''
        points = np.asarray(points, dtype=float)
        return points @ self.matrix.T + self._t

    def apply_vector(self, vectors):
        ''' Rotate direction vectors without translating them '''
        return np.asarray(vectors, dtype=float) @ self.matrix.T

    def compose(self, other):
        rot = self.scipy_rotation * other.scipy_rotation
        return RigidTransform.from_rotation(rot, self.apply(other.translation))

    __matmul__ = compose

    def inverse(self):
        inv = self.scipy_rotation.inv()
        return RigidTransform.from_rotation(inv, -inv.apply(self._t))

    def angle_to(self, other):
        ''' Rotation angle in radians between the two orientations '''
        return (self.scipy_rotation.inv() * other.scipy_rotation).magnitude()

    def distance_to(self, other):
        '''
        Translation and rotation distance to another transform

        Returns
        -------
        tuple of float
            Translation distance in meters and rotation angle in radians
        '''
        return float(np.linalg.norm(self._t - other.translation)), float(self.angle_to(other))

    def almost_equal(self, other, atol=1e-9):
        dt, da = self.distance_to(other)
        return dt <= atol and da <= atol

    def to_dict(self):
        return {'q': self._q.tolist(), 't': self._t.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d['q'], d['t'])

    def __eq__(self, other):
        return (isinstance(other, RigidTransform) and
                np.array_equal(self._q, other._q) and
                np.array_equal(self._t, other._t))

    def __ne__(self, other):
        return not self == other

    __hash__ = None

    def __repr__(self):
        return 'RigidTransform(q={}, t={})'.format(np.round(self._q, 6).tolist(),
                                                   np.round(self._t, 6).tolist())


def compose(a, b):
    ''' ``a ∘ b``: apply `b`, then `a` '''
    return a.compose(b)


def inverse(t):
    return t.inverse()


def interpolate(a, b, alpha):
    '''
    Blend two transforms, linearly in translation and by slerp in rotation

    Parameters
    ----------
    a : RigidTransform
    b : RigidTransform
    alpha : float or array_like
        Blend weights in ``[0, 1]``. 0 gives `a`

    Returns
    -------
    list of RigidTransform or RigidTransform
    '''
    scalar = np.ndim(alpha) == 0
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    slerp = Slerp([0.0, 1.0], Rotation.concatenate([a.scipy_rotation, b.scipy_rotation]))
    rots = slerp(np.clip(alpha, 0.0, 1.0))
    trans = (1.0 - alpha)[:, None] * a.translation + alpha[:, None] * b.translation
    res = [RigidTransform.from_rotation(rots[i], trans[i]) for i in range(len(alpha))]
    return res[0] if scalar else res


class PoseSequence(object):
    '''
    A per-frame stream of rigid poses with a validity mask

    Parameters
    ----------
    translations : array_like
        ``(T, 3)``
    quaternions : array_like
        ``(T, 4)``, scalar first
    valid : array_like of bool, optional
        Frames where the pose is known. Defaults to all frames
    '''

    def __init__(self, translations, quaternions, valid=None):
        translations = np.array(translations, dtype=float).reshape(-1, 3)
        quaternions = np.array(quaternions, dtype=float).reshape(-1, 4)
        if len(translations) != len(quaternions):
            raise LengthMismatch('{} translations and {} rotations'.format(len(translations),
                                                                           len(quaternions)))
        if valid is None:
            valid = np.ones(len(translations), dtype=bool)
        valid = np.array(valid, dtype=bool).reshape(-1)
        if len(valid) != len(translations):
            raise LengthMismatch('Validity mask does not match the number of poses')
        norms = np.linalg.norm(quaternions, axis=1)
        bad = valid & (norms < 1e-12)
        if bad.any():
            raise InvariantViolation('Zero quaternion at valid frames {}'.format(np.flatnonzero(bad)))
        norms[norms < 1e-12] = 1.0
        quaternions = quaternions / norms[:, None]
        quaternions[~valid] = IDENTITY_QUATERNION
        self.translations = translations
        self.quaternions = quaternions
        self.valid = valid

    @classmethod
    def from_transforms(cls, transforms):
        ''' Build from a list of `RigidTransform`, using `None` for missing frames '''
        n = len(transforms)
        t = np.zeros((n, 3))
        q = np.tile(IDENTITY_QUATERNION, (n, 1))
        valid = np.zeros(n, dtype=bool)
        for i, tr in enumerate(transforms):
            if tr is not None:
                t[i] = tr.translation
                q[i] = tr.rotation
                valid[i] = True
        return cls(t, q, valid)

    @classmethod
    def from_rotations(cls, rotations, translations, valid=None):
        return cls(translations, xyzw_to_wxyz(rotations.as_quat()), valid)

    def __len__(self):
        return len(self.translations)

    def __getitem__(self, i):
        if not self.valid[i]:
            return None
        return RigidTransform(self.quaternions[i], self.translations[i])

    def transforms(self):
        return [self[i] for i in range(len(self))]

    @property
    def rotations(self):
        return Rotation.from_quat(wxyz_to_xyzw(self.quaternions))

    def matrices(self):
        return self.rotations.as_matrix()

    def apply(self, points):
        ''' Apply pose ``t`` to ``points[t]``, for points of shape ``(T, ..., 3)`` '''
        mats = self.matrices()
        points = np.asarray(points, dtype=float)
        shape = points.shape
        pts = points.reshape(len(self), -1, 3)
        out = np.einsum('tij,tnj->tni', mats, pts) + self.translations[:, None, :]
        return out.reshape(shape)

    def copy(self):
        return PoseSequence(self.translations.copy(), self.quaternions.copy(), self.valid.copy())

    def replace(self, frames, transforms):
        ''' A copy with the given frames set to the given transforms '''
        res = self.copy()
        for f, tr in zip(frames, transforms):
            res.translations[f] = tr.translation
            res.quaternions[f] = tr.rotation
            res.valid[f] = True
        return res

    def invalidate(self, frames):
        res = self.copy()
        res.valid[np.asarray(list(frames), dtype=int)] = False
        res.quaternions[~res.valid] = IDENTITY_QUATERNION
        return res

    def __eq__(self, other):
        return (isinstance(other, PoseSequence) and
                np.array_equal(self.valid, other.valid) and
                np.array_equal(self.translations, other.translations) and
                np.array_equal(self.quaternions, other.quaternions))

    __hash__ = None
