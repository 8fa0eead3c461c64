'''
Per-frame states of the captured person and objects
'''
import numpy as np

from .errors import DimensionMismatch, InvariantViolation
from .transform import RigidTransform


class PersonState(object):
    '''
    Joint angles of the body and both hands at one frame, with the body root pose

    Parameters
    ----------
    body : array_like
        ``(J_b, 3)`` axis-angle joint rotations
    left_hand : array_like
        ``(J_h, 3)``
    right_hand : array_like
        ``(J_h, 3)``
    root : RigidTransform
        Person frame to camera frame
    '''

    def __init__(self, body, left_hand, right_hand, root=None):
        self.body = self._angles(body, 'body')
        self.left_hand = self._angles(left_hand, 'left_hand')
        self.right_hand = self._angles(right_hand, 'right_hand')
        self.root = root if root is not None else RigidTransform()

    @staticmethod
    def _angles(a, name):
        a = np.array(a, dtype=float)
        if a.ndim != 2 or a.shape[1] != 3:
            raise DimensionMismatch('{} angles must have shape (J, 3), got {}'.format(name, a.shape))
        if not np.all(np.isfinite(a)):
            raise InvariantViolation('{} angles are not finite'.format(name))
        a.flags.writeable = False
        return a

    def validate_against(self, body_skeleton, hand_skeleton=None):
        if len(self.body) != body_skeleton.n_joints:
            raise DimensionMismatch('Body state has {} joints, skeleton has {}'
                                    .format(len(self.body), body_skeleton.n_joints))
        if hand_skeleton is not None:
            for side in (self.left_hand, self.right_hand):
                if len(side) != hand_skeleton.n_joints:
                    raise DimensionMismatch('Hand state has {} joints, skeleton has {}'
                                            .format(len(side), hand_skeleton.n_joints))

    def __eq__(self, other):
        return (isinstance(other, PersonState) and
                np.array_equal(self.body, other.body) and
                np.array_equal(self.left_hand, other.left_hand) and
                np.array_equal(self.right_hand, other.right_hand) and
                self.root == other.root)

    __hash__ = None


class ObjectState(object):
    '''
    Pose of an object's base and the scalar states of its articulated parts

    Parameters
    ----------
    translation : array_like
        3-vector
    orientation : array_like
        Unit quaternion ``(w, x, y, z)``
    part_states : list of float, optional
        Revolute angles in radians or sliding displacements in meters
    allow_missing : bool
        Permit NaN for parts that could not be solved at this frame
    '''

    def __init__(self, translation, orientation, part_states=(), allow_missing=False):
        self.pose = RigidTransform(orientation, translation)
        ps = np.array(part_states, dtype=float).reshape(-1)
        bad = ~np.isfinite(ps)
        if allow_missing:
            bad &= ~np.isnan(ps)
        if bad.any():
            raise InvariantViolation('Part states are not finite')
        ps.flags.writeable = False
        self.part_states = ps

    @classmethod
    def from_pose(cls, pose, part_states=(), allow_missing=False):
        return cls(pose.translation, pose.rotation, part_states, allow_missing)

    @property
    def translation(self):
        return self.pose.translation

    @property
    def orientation(self):
        return self.pose.rotation

    def validate_parts(self, n_parts):
        if len(self.part_states) != n_parts:
            raise DimensionMismatch('Object state has {} part states for {} articulated parts'
                                    .format(len(self.part_states), n_parts))

    def __eq__(self, other):
        return (isinstance(other, ObjectState) and self.pose == other.pose and
                np.array_equal(self.part_states, other.part_states))

    __hash__ = None

    def __repr__(self):
        return 'ObjectState(pose={!r}, part_states={})'.format(self.pose, self.part_states.tolist())


class SkeletonStream(object):
    '''
    Global joint positions and rotations of a skeleton over time

    Parameters
    ----------
    positions : array_like
        ``(T, J, 3)``
    rotations : array_like
        ``(T, J, 3, 3)`` global joint rotations
    parents : tuple of int
    joint_names : tuple of str, optional
    '''

    def __init__(self, positions, rotations, parents, joint_names=None):
        self.positions = np.asarray(positions, dtype=float)
        self.rotations = np.asarray(rotations, dtype=float)
        if self.positions.ndim != 3 or self.positions.shape[2] != 3:
            raise DimensionMismatch('Joint positions must have shape (T, J, 3)')
        if self.rotations.shape != self.positions.shape[:2] + (3, 3):
            raise DimensionMismatch('Joint rotations must have shape (T, J, 3, 3)')
        self.parents = tuple(parents)
        if len(self.parents) != self.positions.shape[1]:
            raise DimensionMismatch('{} parents for {} joints'.format(len(self.parents), self.positions.shape[1]))
        self.joint_names = tuple(joint_names) if joint_names is not None else tuple(
            'joint_{}'.format(j) for j in range(len(self.parents)))

    @classmethod
    def from_fk(cls, fk):
        ''' Build from a batched `~mfk.body.BodyFK` '''
        return cls(fk.joint_positions, fk.joint_rotations, fk.skeleton.parents, fk.skeleton.joint_names)

    def __len__(self):
        return len(self.positions)

    @property
    def n_joints(self):
        return self.positions.shape[1]

    def joint_index(self, name):
        return self.joint_names.index(name)

    def joint_pose(self, frame, joint):
        return RigidTransform.from_matrix(self.rotations[frame, joint], self.positions[frame, joint])
