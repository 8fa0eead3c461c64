'''
Synthetic captures with full ground truth

Every generator here is deterministic given its seed. The generators produce both the
ground truth (skeleton parameters, joint angles, object poses and joint models) and the
corrupted observations the rest of the package consumes (pixel detections, suit and glove
angles, triangulated marker corners, touch events).
'''
import logging

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation

from . import CAMERA_RATE, MOCAP_RATE
from .articulation import ARTICULATED_CATALOG, REVOLUTE, SLIDING, JointSpec, PartObservationSet
from .body import FOOT_JOINTS, INSTRUMENTED_PARTS, JOINT_NAMES, BodyCalibrationSequence, BodySkeleton, fk_body
from .camera import make_rig
from .errors import InvalidSpec
from .geometry import yaw_matrix
from .hand import (FINGERS, ApeEvent, CalibrationStructure, HandSkeleton, TouchEvent, default_protocol,
                   fk_hand)
from .marker import MarkerCube
from .mesh import TriangleMesh
from .multiview import CornerDetection
from .objects import ArticulatedObject, ObjectPart
from .occlusion import CapsuleOccluder
from .postprocess import confidence_weight
from .simulation import SyntheticScene, TargetSet, mesh_occluder, surface_markers, visibility_mask
from .state import ObjectState, SkeletonStream
from .transform import PoseSequence, RigidTransform


L = logging.getLogger(__name__)

CUBE_EDGE = 0.06

CARRIED_BOX = (0.2, 0.12, 0.1)
''' Extents of the carried box, in meters '''

CARRY_OFFSET = (0.0, -0.09, 0.0)
''' Position of the carried box in the right hand's frame '''

HUMAN_CAPSULE_RADII = {
    'l5': 0.1, 'l3': 0.1, 't12': 0.1, 't8': 0.1, 'neck': 0.08, 'head': 0.09,
    'right_shoulder': 0.05, 'left_shoulder': 0.05,
    'right_upper_arm': 0.04, 'left_upper_arm': 0.04,
    'right_forearm': 0.04, 'left_forearm': 0.04,
    'right_hand': 0.03, 'left_hand': 0.03,
    'right_upper_leg': 0.07, 'left_upper_leg': 0.07,
    'right_lower_leg': 0.07, 'left_lower_leg': 0.07,
    'right_foot': 0.045, 'left_foot': 0.045,
    'right_toe': 0.03, 'left_toe': 0.03,
}
''' Capsule radius of the bone ending at each joint; thinner than the marker rings around it '''

_MOTION_AMPLITUDE = {
    'pelvis': 0.15, 'l5': 0.2, 'l3': 0.2, 't12': 0.2, 't8': 0.2, 'neck': 0.3, 'head': 0.3,
    'right_shoulder': 0.2, 'left_shoulder': 0.2, 'right_foot': 0.3, 'left_foot': 0.3,
    'right_toe': 0.2, 'left_toe': 0.2,
}


def joint_motion(times, rng, scale=1.0, harmonics=2):
    '''
    Smooth axis-angle joint trajectories from sums of sinusoids

    Parameters
    ----------
    times : array_like
        Sample times in seconds
    rng : numpy.random.Generator
    scale : float
        Multiplies every joint's amplitude
    harmonics : int

    Returns
    -------
    numpy.ndarray
        ``(len(times), 23, 3)``
    '''
    J = len(JOINT_NAMES)
    amp = np.array([_MOTION_AMPLITUDE.get(n, 0.6) for n in JOINT_NAMES]) * scale
    freq = rng.uniform(0.1, 0.5, size=(harmonics, J, 3))
    phase = rng.uniform(0.0, 2 * np.pi, size=(harmonics, J, 3))
    weight = rng.uniform(0.3, 1.0, size=(harmonics, J, 3)) / harmonics
    t = np.asarray(times, dtype=float)[:, None, None, None]
    a = (weight * np.sin(2 * np.pi * freq * t + phase)).sum(axis=1)
    return a * amp[None, :, None]


def walking_path(times, radius=0.5, speed=0.3, center=(0.0, 0.0), phase=0.0):
    '''
    Planar root positions and headings along a circle, facing the direction of travel

    Returns
    -------
    xy : numpy.ndarray
        ``(T, 2)``
    yaw : numpy.ndarray
        ``(T,)``
    '''
    t = np.asarray(times, dtype=float)
    ang = phase + speed / radius * t
    xy = np.stack([center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)], axis=1)
    return xy, ang + np.pi / 2


def place_on_floor(skeleton, angles, xy, yaw, foot_height=0.005):
    '''
    Person-to-world transforms that put the lowest foot joint at `foot_height`

    Returns
    -------
    list of RigidTransform
    '''
    fk = fk_body(skeleton, angles)
    foot = [skeleton.joint_index(j) for j in FOOT_JOINTS]
    z = fk.joint_positions[:, foot, 2].min(axis=1)
    R = yaw_matrix(yaw)
    return [RigidTransform.from_matrix(R[t], (xy[t, 0], xy[t, 1], foot_height - z[t]))
            for t in range(len(angles))]


def corner_normals_local(skeleton):
    ''' Outward normal of each body marker corner in its joint's frame, ``(N, 3)`` '''
    out = []
    for part in INSTRUMENTED_PARTS:
        for c in skeleton.markers[part]:
            n = np.cross(c[1] - c[0], c[2] - c[1])
            out += [n / np.linalg.norm(n)] * 4
    return np.array(out)


class WorldBody(object):
    '''
    Forward kinematics of a body moved into the world frame, frame by frame

    Attributes
    ----------
    stream : SkeletonStream
    corners : numpy.ndarray
        ``(T, N, 3)`` marker corners
    normals : numpy.ndarray
        ``(T, N, 3)`` marker corner normals
    roots : list of RigidTransform
    '''

    def __init__(self, skeleton, angles, roots):
        fk = fk_body(skeleton, angles)
        R = np.array([r.matrix for r in roots])
        t = np.array([r.translation for r in roots])
        G = np.einsum('tij,tkjl->tkil', R, fk.joint_rotations)
        P = np.einsum('tij,tkj->tki', R, fk.joint_positions) + t[:, None]
        self.corners = np.einsum('tij,tkj->tki', R, fk.corners) + t[:, None]
        n_local = corner_normals_local(skeleton)
        self.normals = np.einsum('tkij,kj->tki', G[:, skeleton.corner_joints], n_local)
        self.stream = SkeletonStream(P, G, skeleton.parents, skeleton.joint_names)
        self.roots = list(roots)
        self.skeleton = skeleton


def perturb_skeleton(skeleton, magnitude, rng):
    '''
    Move the offset of every marker-observable joint by `magnitude` in a random direction
    '''
    offsets = skeleton.offsets.copy()
    for j in skeleton.observable_joints():
        d = rng.normal(size=3)
        offsets[j] += magnitude * d / np.linalg.norm(d)
    return skeleton.with_params(offsets=offsets)


def rom_calibration(skeleton, n_frames=300, seed=0, noise=0.0, foot_height=0.005):
    '''
    A range-of-motion capture of a body with known skeleton

    Parameters
    ----------
    skeleton : BodySkeleton
        The true skeleton
    n_frames : int
    seed : int
    noise : float
        Standard deviation of the corner noise, in meters
    foot_height : float
        Height of the lowest foot joint above the floor at every frame

    Returns
    -------
    sequence : BodyCalibrationSequence
    body : WorldBody
    '''
    rng = np.random.default_rng(seed)
    times = np.arange(n_frames) / CAMERA_RATE
    angles = joint_motion(times, rng)
    xy, yaw = walking_path(times, radius=0.4, speed=0.2)
    roots = place_on_floor(skeleton, angles, xy, yaw, foot_height)
    body = WorldBody(skeleton, angles, roots)
    observed = body.corners
    if noise:
        observed = observed + rng.normal(scale=noise, size=observed.shape)
    return BodyCalibrationSequence(angles, observed), body


# Hands

def natural_hand_angles(flex=0.2):
    ''' A relaxed hand: every joint flexed by `flex` radians toward the palm '''
    a = np.zeros((len(FINGERS) * 4, 3))
    a[:, 1] = flex
    return a


def random_hand(side, rng, scale_range=(0.9, 1.1), offset_scale=0.0, per_finger=False):
    '''
    A hand skeleton with random bone scales and palm-area offsets

    With `per_finger` the four segments of a finger share one scale.
    '''
    n = len(FINGERS) * 4
    if per_finger:
        scales = np.repeat(rng.uniform(scale_range[0], scale_range[1], size=len(FINGERS)), 4)
    else:
        scales = rng.uniform(scale_range[0], scale_range[1], size=n)
    offsets = np.zeros((n, 3))
    if offset_scale:
        offsets[::4] = rng.uniform(-offset_scale, offset_scale, size=(len(FINGERS), 3))
    return HandSkeleton(side, scales, offsets)


def _finger_tip(offsets, rotvecs):
    ''' Fingertip in the hand frame from a finger's four bone vectors and three joint rotations '''
    R = Rotation.from_rotvec(rotvecs.reshape(3, 3)).as_matrix()
    return offsets[0] + R[0] @ (offsets[1] + R[1] @ (offsets[2] + R[2] @ offsets[3]))


def _touch_pose(skeleton, fingers, targets, wrist0):
    '''
    Glove angles and wrist pose placing the given fingertips on the given targets

    A first solve keeps the hand near a relaxed pose; a second solve from there removes the
    remaining tip error.
    '''
    off = skeleton.effective_offsets
    nat = natural_hand_angles()
    rv0 = wrist0.rotvec
    t0 = wrist0.translation
    a0 = np.concatenate([nat[4 * f:4 * f + 3].reshape(-1) for f in fingers])
    x0 = np.concatenate([rv0, t0, a0])

    def tips(x):
        R = Rotation.from_rotvec(x[:3])
        out = []
        for k, f in enumerate(fingers):
            p = _finger_tip(off[4 * f:4 * f + 4], x[6 + 9 * k:15 + 9 * k])
            out.append(R.apply(p) + x[3:6])
        return np.array(out)

    def res_reg(x):
        return np.concatenate([(tips(x) - targets).reshape(-1), 0.05 * (x[6:] - a0),
                               0.05 * (x[:3] - rv0), 0.5 * (x[3:6] - t0)])

    def res_exact(x):
        return (tips(x) - targets).reshape(-1)

    x1 = least_squares(res_reg, x0, method='trf').x
    x2 = least_squares(res_exact, x1, method='trf', xtol=1e-15, ftol=1e-15, gtol=1e-15).x
    angles = nat.copy()
    for k, f in enumerate(fingers):
        angles[4 * f:4 * f + 3] = x2[6 + 9 * k:15 + 9 * k].reshape(3, 3)
    return angles, RigidTransform.from_rotvec(x2[:3], x2[3:6])


def protocol_events(skeleton, structure, seed=0, touch_noise=0.0, marker_noise=0.0, wrist_noise=0.0,
                    protocol=None):
    '''
    Touch events of the calibration protocol performed by a hand with known skeleton

    Parameters
    ----------
    skeleton : HandSkeleton
        The true hand
    structure : CalibrationStructure
    seed : int
    touch_noise : float
        Standard deviation of the distance by which a fingertip misses its corner, in meters
    marker_noise : float
        Standard deviation of the wrist marker corner noise
    wrist_noise : float
        Standard deviation of the body-derived wrist position noise
    protocol : list of TouchStep, optional
        Defaults to `~mfk.hand.default_protocol` for the hand's side

    Returns
    -------
    list of TouchEvent
    '''
    rng = np.random.default_rng(seed)
    protocol = protocol or default_protocol(skeleton.side)
    events = []
    for step in protocol:
        targets = structure.corners[list(step.corners)]
        if touch_noise:
            targets = targets + rng.normal(scale=touch_noise, size=targets.shape)
        yaw = rng.uniform(-0.4, 0.4)
        R = yaw_matrix(yaw)
        wrist0 = RigidTransform.from_matrix(R, targets.mean(axis=0) + R @ np.array([-0.13, 0.0, 0.0]) +
                                            np.array([0.0, 0.0, 0.07]))
        angles, wrist = _touch_pose(skeleton, step.fingers, targets, wrist0)
        corners = wrist.apply(skeleton.marker_corners)
        if marker_noise:
            corners = corners + rng.normal(scale=marker_noise, size=corners.shape)
        body_wrist = wrist.translation
        if wrist_noise:
            body_wrist = body_wrist + rng.normal(scale=wrist_noise, size=3)
        events.append(TouchEvent(step, angles, corners, body_wrist))
    return events


def ape_events(skeleton, count, seed=0, noise=0.0):
    '''
    Validation touches of random fingers at random hand poses

    The recorded target is the true fingertip displaced by isotropic noise of standard
    deviation `noise` per coordinate.

    Returns
    -------
    list of ApeEvent
    '''
    rng = np.random.default_rng(seed)
    events = []
    for _ in range(count):
        finger = int(rng.integers(len(FINGERS)))
        angles = natural_hand_angles() + rng.normal(scale=0.15, size=(len(FINGERS) * 4, 3))
        wrist = RigidTransform.from_rotvec(rng.normal(scale=0.5, size=3),
                                           rng.uniform((-0.5, -0.5, 0.7), (0.5, 0.5, 1.2)))
        tip = fk_hand(skeleton, angles, wrist).tips[finger]
        if noise:
            tip = tip + rng.normal(scale=noise, size=3)
        events.append(ApeEvent(finger, tip, angles, wrist.apply(skeleton.marker_corners)))
    return events


# Objects

def part_observations(joint, states, points, noise=0.0, rng=None):
    '''
    Corner positions of a part moved by its joint to each of the given states

    Parameters
    ----------
    joint : JointSpec
    states : list of float
    points : array_like
        ``(N, 3)`` corners at state zero, in the base frame
    noise : float
        Standard deviation of per-coordinate corner noise

    Returns
    -------
    PartObservationSet
    '''
    points = np.asarray(points, dtype=float)
    out = []
    for s in states:
        p = joint.transform(s).apply(points)
        if noise:
            p = p + rng.normal(scale=noise, size=p.shape)
        out.append(p)
    return PartObservationSet(out)


def _cube_on(center, cube_id):
    return MarkerCube(cube_id, CUBE_EDGE, RigidTransform(None, center))


def make_object(name, first_cube_id=0):
    '''
    A synthetic furniture object with the joint kinds of `ARTICULATED_CATALOG`, or a plain
    rigid box for any other name

    The base is a box standing on the floor with its front at ``+x``. Revolute parts are
    doors hinged on a vertical edge of the front; sliding parts are drawers pulled along
    ``+x``. Every part carries one marker cube.

    Returns
    -------
    ArticulatedObject
    '''
    if name not in ARTICULATED_CATALOG:
        mesh = TriangleMesh.box(CARRIED_BOX)
        cube = _cube_on((0.0, 0.0, CARRIED_BOX[2] / 2 + CUBE_EDGE / 2), first_cube_id)
        return ArticulatedObject(name, [ObjectPart('base', [cube], mesh=mesh)])
    kinds = ARTICULATED_CATALOG[name]
    base_mesh = TriangleMesh.box((0.6, 0.5, 0.4), (0.0, 0.0, 0.2))
    parts = [ObjectPart('base', [_cube_on((-0.2, 0.0, 0.4 + CUBE_EDGE / 2), first_cube_id)], mesh=base_mesh)]
    width = 0.5 / len(kinds)
    for i, kind in enumerate(kinds):
        y_lo = -0.25 + i * width
        cy = y_lo + width / 2
        cid = first_cube_id + 1 + i
        if kind == REVOLUTE:
            joint = JointSpec(REVOLUTE, (0.0, 0.0, -1.0), (0.31, y_lo, 0.2))
            mesh = TriangleMesh.box((0.02, width, 0.4), (0.31, cy, 0.2))
            cube = _cube_on((0.32 + CUBE_EDGE / 2, cy, 0.3), cid)
        else:
            joint = JointSpec(SLIDING, (1.0, 0.0, 0.0))
            mesh = TriangleMesh.box((0.5, width - 0.02, 0.12), (0.06, cy, 0.2))
            cube = _cube_on((0.31 + CUBE_EDGE / 2, cy, 0.2), cid)
        parts.append(ObjectPart('part{}'.format(i + 1), [cube], joint=joint, mesh=mesh))
    return ArticulatedObject(name, parts)


def part_schedule(kind, n_frames, phase=0.0):
    ''' One smooth open-and-close cycle of a joint over the sequence '''
    peak = 1.4 if kind == REVOLUTE else 0.3
    u = (np.arange(n_frames) / max(n_frames, 1) + phase) % 1.0
    return peak * 0.5 * (1.0 - np.cos(2 * np.pi * u))


def part_poses(obj, base_pose, states):
    ''' Pose of every part, base first, for one object state '''
    out = [base_pose]
    for part, s in zip(obj.articulated_parts, states):
        out.append(base_pose.compose(part.joint.transform(s)))
    return out


class CarrySequence(object):
    '''
    A person walking a curved path with a box held in the right hand

    Attributes
    ----------
    body : WorldBody
    track : PoseSequence
        Box poses
    mesh : TriangleMesh
        Box surface in its own frame
    '''

    def __init__(self, body, track, mesh):
        self.body = body
        self.track = track
        self.mesh = mesh

    @property
    def stream(self):
        return self.body.stream


def carry_sequence(n_frames=300, seed=0, radius=1.0, speed=0.8, skeleton=None):
    ''' A `CarrySequence` with the box attached to the right hand throughout '''
    rng = np.random.default_rng(seed)
    skeleton = skeleton or BodySkeleton()
    times = np.arange(n_frames) / CAMERA_RATE
    angles = joint_motion(times, rng, scale=0.3)
    xy, yaw = walking_path(times, radius=radius, speed=speed)
    body = WorldBody(skeleton, angles, place_on_floor(skeleton, angles, xy, yaw))
    hand = skeleton.joint_index('right_hand')
    rel = RigidTransform(None, CARRY_OFFSET)
    track = PoseSequence.from_transforms([body.stream.joint_pose(t, hand).compose(rel) for t in range(n_frames)])
    return CarrySequence(body, track, TriangleMesh.box(CARRIED_BOX))


class WristStreams(object):
    '''
    Attributes
    ----------
    truth : PoseSequence
    mocap : PoseSequence
        Smooth, with a constant placement error
    marker : PoseSequence
        Accurate on average, with per-frame jitter
    confidence : numpy.ndarray
    '''

    def __init__(self, truth, mocap, marker, confidence):
        self.truth = truth
        self.mocap = mocap
        self.marker = marker
        self.confidence = confidence


def wrist_streams(n_frames=300, seed=0, jitter=0.003, n_views=6, rms=0.5,
                  placement_error=(0.01, -0.005, 0.008)):
    '''
    A wrist moving on a circle as seen by the suit and by the markers

    Returns
    -------
    WristStreams
    '''
    rng = np.random.default_rng(seed)
    t = np.arange(n_frames) / CAMERA_RATE
    w = np.pi
    pos = np.stack([0.3 * np.cos(w * t), 0.3 * np.sin(w * t), 1.0 + 0.05 * np.sin(2 * w * t)], axis=1)
    rot = Rotation.from_rotvec(np.stack([0.2 * np.sin(w * t), np.zeros_like(t), w * t], axis=1))
    truth = PoseSequence.from_rotations(rot, pos)
    mocap = PoseSequence.from_rotations(rot, pos + np.asarray(placement_error))
    marker = PoseSequence.from_rotations(rot, pos + rng.normal(scale=jitter, size=pos.shape))
    confidence = np.full(n_frames, float(confidence_weight(n_views, rms)))
    return WristStreams(truth, mocap, marker, confidence)


# Full captures

class SceneSpec(object):
    '''
    Parameters of a synthetic capture

    Parameters
    ----------
    n_cameras : int
    n_frames : int
        Camera frames; the suit runs at twice the rate
    room : tuple of float
    pixel_noise : float
        Standard deviation of corner detection noise, in pixels
    mocap_noise : float
        Standard deviation of suit and glove angle noise, in radians
    objects : tuple of str
        Names from `~mfk.articulation.ARTICULATED_CATALOG`, or ``'box'`` for the carried box
    carry : bool
        Whether the box is picked up and carried through the middle half of the capture
    hands : bool
        Whether to record the hand calibration protocol for both hands
    touch_noise : float
    offset_perturbation : float
        Distance by which the true body offsets depart from the rest skeleton
    '''

    DEFAULTS = {
        'n_cameras': 24,
        'n_frames': 120,
        'room': (4.0, 4.0, 3.0),
        'pixel_noise': 0.0,
        'mocap_noise': 0.0,
        'objects': ('box', 'laptop', 'drawer'),
        'carry': True,
        'hands': True,
        'touch_noise': 0.0,
        'offset_perturbation': 0.02,
    }

    def __init__(self, **kwargs):
        unknown = set(kwargs) - set(self.DEFAULTS)
        if unknown:
            raise InvalidSpec('Unknown scene parameters: {}'.format(sorted(unknown)))
        values = dict(self.DEFAULTS, **kwargs)
        try:
            self.n_cameras = int(values['n_cameras'])
            self.n_frames = int(values['n_frames'])
            self.room = tuple(float(x) for x in values['room'])
            self.pixel_noise = float(values['pixel_noise'])
            self.mocap_noise = float(values['mocap_noise'])
            self.objects = tuple(str(o) for o in values['objects'])
            self.carry = bool(values['carry'])
            self.hands = bool(values['hands'])
            self.touch_noise = float(values['touch_noise'])
            self.offset_perturbation = float(values['offset_perturbation'])
        except (TypeError, ValueError) as e:
            raise InvalidSpec('Malformed scene parameters: {}'.format(e))
        if self.n_cameras < 2:
            raise InvalidSpec('A capture needs at least two cameras')
        if self.n_frames < 4:
            raise InvalidSpec('A capture needs at least four frames')
        if len(self.room) != 3 or min(self.room) <= 0:
            raise InvalidSpec('Room extents must be three positive lengths')
        if min(self.pixel_noise, self.mocap_noise, self.touch_noise, self.offset_perturbation) < 0:
            raise InvalidSpec('Noise levels must not be negative')
        if len(set(self.objects)) != len(self.objects):
            raise InvalidSpec('Object names must be unique')
        for o in self.objects:
            if o != 'box' and o not in ARTICULATED_CATALOG:
                raise InvalidSpec('Unknown object {!r}'.format(o))

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise InvalidSpec('Scene parameters must be a mapping')
        return cls(**d)

    def to_dict(self):
        return {'n_cameras': self.n_cameras, 'n_frames': self.n_frames, 'room': list(self.room),
                'pixel_noise': self.pixel_noise, 'mocap_noise': self.mocap_noise,
                'objects': list(self.objects), 'carry': self.carry, 'hands': self.hands,
                'touch_noise': self.touch_noise, 'offset_perturbation': self.offset_perturbation}

    def __eq__(self, other):
        return isinstance(other, SceneSpec) and self.to_dict() == other.to_dict()

    __hash__ = None


STRUCTURE_POSE = RigidTransform(None, (1.0, 0.0, 0.75))


class GroundTruth(object):
    '''
    Everything a synthetic capture was generated from

    Attributes
    ----------
    body_skeleton : BodySkeleton
    body_angles : numpy.ndarray
        ``(T, 23, 3)`` noiseless angles at camera frames
    roots : list of RigidTransform
        Person-to-camera transform per camera frame
    object_states : dict
        Object name to a list of `ObjectState`, one per camera frame
    joints : dict
        Object name to the list of its `JointSpec`
    hand_skeletons : dict
        Side to `HandSkeleton`
    carry : tuple of int or None
        First and last frame of the carry
    '''

    def __init__(self, body_skeleton, body_angles, roots, object_states, joints, hand_skeletons, carry=None):
        self.body_skeleton = body_skeleton
        self.body_angles = np.asarray(body_angles, dtype=float)
        self.roots = list(roots)
        self.object_states = object_states
        self.joints = joints
        self.hand_skeletons = hand_skeletons
        self.carry = carry

    def to_dict(self):
        return {
            'body_skeleton': self.body_skeleton.to_dict(),
            'body_angles': self.body_angles.tolist(),
            'roots': [r.to_dict() for r in self.roots],
            'object_states': {name: [{'l': s.translation.tolist(), 'q': s.orientation.tolist(),
                                      'states': s.part_states.tolist()} for s in states]
                              for name, states in self.object_states.items()},
            'joints': {name: [j.to_dict() for j in js] for name, js in self.joints.items()},
            'hand_skeletons': {side: h.to_dict() for side, h in self.hand_skeletons.items()},
            'carry': None if self.carry is None else list(self.carry),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(BodySkeleton.from_dict(d['body_skeleton']), d['body_angles'],
                   [RigidTransform.from_dict(r) for r in d['roots']],
                   {name: [ObjectState(s['l'], s['q'], s['states']) for s in states]
                    for name, states in d['object_states'].items()},
                   {name: [JointSpec.from_dict(j) for j in js] for name, js in d['joints'].items()},
                   {side: HandSkeleton.from_dict(h) for side, h in d['hand_skeletons'].items()},
                   None if d.get('carry') is None else tuple(d['carry']))

    def object_track(self, name):
        ''' Base poses of an object as a `PoseSequence` '''
        return PoseSequence.from_transforms([s.pose for s in self.object_states[name]])


class SyntheticCapture(object):
    '''
    Attributes
    ----------
    session : CaptureSession
        The observations
    truth : GroundTruth
    spec : SceneSpec
    seed : int
    body : WorldBody
        The true body in the world frame, at camera frames
    '''

    def __init__(self, session, truth, spec, seed, body):
        self.session = session
        self.truth = truth
        self.spec = spec
        self.seed = seed
        self.body = body


def _object_tracks(spec, objects, body, n_frames):
    ''' Per-frame states and per-part poses of every object '''
    states, poses = {}, {}
    placements = [o for o in spec.objects if o != 'box']
    for name in spec.objects:
        obj = objects[name]
        if name == 'box':
            if spec.carry:
                hand = body.skeleton.joint_index('right_hand')
                rel = RigidTransform(None, CARRY_OFFSET)
                t0, t1 = n_frames // 4, (3 * n_frames) // 4
                base = [body.stream.joint_pose(min(max(t, t0), t1), hand).compose(rel)
                        for t in range(n_frames)]
            else:
                base = [RigidTransform(None, (0.8, 0.0, CARRIED_BOX[2] / 2))] * n_frames
            states[name] = [ObjectState.from_pose(b) for b in base]
            poses[name] = [[b] for b in base]
            continue
        k = placements.index(name)
        ang = 2 * np.pi * k / max(len(placements), 1) + 0.3
        base_pose = RigidTransform.from_matrix(yaw_matrix(ang + np.pi), (1.4 * np.cos(ang), 1.4 * np.sin(ang), 0.0))
        sched = np.array([part_schedule(p.joint.kind, n_frames, phase=0.25 * i)
                          for i, p in enumerate(obj.articulated_parts)]).T.reshape(n_frames, -1)
        states[name] = [ObjectState.from_pose(base_pose, sched[t]) for t in range(n_frames)]
        poses[name] = [part_poses(obj, base_pose, sched[t]) for t in range(n_frames)]
    return states, poses


def _detections(rig, frame_points, pixel_noise, rng):
    '''
    Project visible corners into every camera

    Parameters
    ----------
    frame_points : list of tuple
        Per frame, ``(keys, points, normals)``
    '''
    scene = SyntheticScene(rig)
    out = []
    for f, (keys, points, normals) in enumerate(frame_points):
        mask = visibility_mask(scene, f, points, normals)
        for c, cam in enumerate(rig):
            idx = np.flatnonzero(mask[:, c])
            if not len(idx):
                continue
            pix, _ = cam.project_many(points[idx])
            if pixel_noise:
                pix = pix + rng.normal(scale=pixel_noise, size=pix.shape)
            for i, p in zip(idx, pix):
                m, k = keys[i]
                out.append(CornerDetection(cam.id, m, k, p, f))
    out.sort(key=lambda d: (d.frame, d.camera_id, d.marker_id, d.corner_index))
    return out


def generate_capture(spec=None, seed=0):
    '''
    A complete synthetic capture session with its ground truth

    Parameters
    ----------
    spec : SceneSpec or dict, optional
    seed : int

    Returns
    -------
    SyntheticCapture
    '''
    from .session import Annotation, CaptureSession, MocapStream
    if spec is None:
        spec = SceneSpec()
    elif isinstance(spec, dict):
        spec = SceneSpec.from_dict(spec)
    ss = np.random.SeedSequence(seed)
    r_body, r_hand, r_noise, r_mocap = [np.random.default_rng(s) for s in ss.spawn(4)]
    T = spec.n_frames

    rig = make_rig(spec.n_cameras, spec.room, seed=seed)
    skeleton = perturb_skeleton(BodySkeleton(), spec.offset_perturbation, r_body)
    mocap_times = np.arange(2 * T) / MOCAP_RATE
    mocap_body = joint_motion(mocap_times, r_body, scale=0.6)
    angles = mocap_body[::2]
    xy, yaw = walking_path(np.arange(T) / CAMERA_RATE, radius=0.5, speed=0.3)
    body = WorldBody(skeleton, angles, place_on_floor(skeleton, angles, xy, yaw))

    objects, cube_id = {}, 0
    for name in spec.objects:
        objects[name] = make_object(name, cube_id)
        cube_id += len(objects[name].parts)
    states, poses = _object_tracks(spec, objects, body, T)

    frame_points = []
    for t in range(T):
        keys = list(skeleton.corner_keys)
        pts = [body.corners[t]]
        nrm = [body.normals[t]]
        for name in spec.objects:
            for part, pose in zip(objects[name].parts, poses[name][t]):
                for cube in part.cubes:
                    keys += cube.corner_keys()
                    pts.append(pose.apply(cube.corner_points()))
                    nrm.append(pose.apply_vector(cube.corner_normals()))
        frame_points.append((keys, np.concatenate(pts), np.concatenate(nrm)))
    detections = _detections(rig, frame_points, spec.pixel_noise, r_noise)

    hand_angles = {}
    for side in ('left', 'right'):
        hand_angles[side] = (natural_hand_angles()[None] +
                             joint_motion(mocap_times, r_hand, scale=0.2)[:, :len(FINGERS) * 4])
    if spec.mocap_noise:
        mocap_body = mocap_body + r_mocap.normal(scale=spec.mocap_noise, size=mocap_body.shape)
        for side in hand_angles:
            hand_angles[side] = hand_angles[side] + r_mocap.normal(scale=spec.mocap_noise,
                                                                    size=hand_angles[side].shape)
    mocap = MocapStream(np.arange(2 * T), mocap_body, hand_angles['left'], hand_angles['right'], MOCAP_RATE)

    hands, touches, structure = {}, {}, None
    if spec.hands:
        structure = CalibrationStructure.standard(STRUCTURE_POSE)
        for i, side in enumerate(('left', 'right')):
            hands[side] = random_hand(side, r_hand)
            touches[side] = protocol_events(hands[side], structure, seed=seed * 2 + i,
                                            touch_noise=spec.touch_noise)

    carry = (T // 4, (3 * T) // 4) if ('box' in spec.objects and spec.carry) else None
    truth = GroundTruth(skeleton, angles, body.roots, states,
                        {name: [p.joint for p in objects[name].articulated_parts] for name in spec.objects},
                        hands, carry)
    annotations = [Annotation(0, T - 1, 'synthetic capture, seed {}'.format(seed))]
    if carry:
        annotations.append(Annotation(carry[0], carry[1], 'carry the box with the right hand'))
    session = CaptureSession(rig, detections, mocap, objects, touches, structure, annotations,
                             metadata={'generator': spec.to_dict(), 'seed': seed})
    session.add_artifact('truth', truth.to_dict())
    L.info('Generated a capture of %d frames with %d detections', T, len(detections))
    return SyntheticCapture(session, truth, spec, seed, body)


def capture_scene(capture):
    '''
    The visibility scene of a synthetic capture: the rig, the body as capsules, and every
    marker corner as a target

    Returns
    -------
    SyntheticScene
    '''
    body = capture.body
    T = len(body.stream)
    occluders = [CapsuleOccluder.from_skeleton(body.stream, HUMAN_CAPSULE_RADII)]
    targets = [TargetSet('body', body.corners, body.normals)]
    truth = capture.truth
    for name, obj in capture.session.objects.items():
        for part_index, part in enumerate(obj.parts):
            pts, nrm = [], []
            for t in range(T):
                s = truth.object_states[name][t]
                pose = part_poses(obj, s.pose, s.part_states)[part_index]
                pts.append(np.concatenate([pose.apply(c.corner_points()) for c in part.cubes]))
                nrm.append(np.concatenate([pose.apply_vector(c.corner_normals()) for c in part.cubes]))
            targets.append(TargetSet('{}/{}'.format(name, part.name), np.array(pts), np.array(nrm)))
    return SyntheticScene(capture.session.rig, occluders, targets, T, capture.seed)


def study_scene(n_cameras=70, n_frames=600, n_markers=40, seed=0, room=(4.0, 4.0, 3.0), config=None):
    '''
    A person carrying a box past a table, for the camera and marker-count studies

    Targets are the body marker corners (``'body'``) and `n_markers` virtual markers on
    the box (``'object'``). The person, the table and the box itself occlude.

    Returns
    -------
    SyntheticScene
    '''
    rng = np.random.default_rng(seed)
    rig = make_rig(n_cameras, room, seed=seed)
    carry = carry_sequence(n_frames, seed=seed, radius=0.8, speed=0.5)
    body = carry.body
    table = TriangleMesh.box((0.8, 0.6, 0.75), (0.0, 0.0, 0.375))
    occluders = [CapsuleOccluder.from_skeleton(body.stream, HUMAN_CAPSULE_RADII),
                 mesh_occluder(table, config=config),
                 mesh_occluder(carry.mesh, carry.track, config=config)]
    targets = [TargetSet('body', body.corners, body.normals),
               surface_markers('object', carry.mesh, n_markers, rng, carry.track)]
    return SyntheticScene(rig, occluders, targets, n_frames, seed)
