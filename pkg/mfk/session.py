'''
The capture session: everything recorded during one capture and everything solved from it

Streams are indexed by frame number at their own rate. The camera rig runs at
`~mfk.CAMERA_RATE` and the suit and gloves at `~mfk.MOCAP_RATE`; moving between the two is
always an explicit call to `MocapStream.resample`.
'''
import logging

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from . import CAMERA_RATE, MOCAP_RATE
from .config import as_config
from .errors import CorruptStream, DimensionMismatch, EmptySession, InvalidSpec, InvariantViolation


L = logging.getLogger(__name__)

BODY_JOINTS = 23
HAND_JOINTS = 20


def _angles(a, n_joints, n_frames, what):
    if a is None:
        return None
    a = np.array(a, dtype=float)
    if a.shape != (n_frames, n_joints, 3):
        raise DimensionMismatch('{} angles must have shape ({}, {}, 3), got {}'
                                .format(what, n_frames, n_joints, a.shape))
    if not np.all(np.isfinite(a)):
        raise InvariantViolation('{} angles are not finite'.format(what))
    return a


class MocapStream(object):
    '''
    Joint angles from the suit and gloves

    Parameters
    ----------
    frames : array_like
        Strictly increasing frame numbers at `rate`
    body : array_like
        ``(T, 23, 3)`` axis-angle body joint angles
    left_hand, right_hand : array_like, optional
        ``(T, 20, 3)`` glove angles
    rate : float
        Frames per second
    '''

    def __init__(self, frames, body, left_hand=None, right_hand=None, rate=MOCAP_RATE):
        frames = np.array(frames, dtype=np.int64).reshape(-1)
        if len(frames) > 1:
            bad = np.flatnonzero(np.diff(frames) <= 0)
            if len(bad):
                raise CorruptStream('Mocap frames are not strictly increasing at index {}'.format(bad[0] + 1))
        self.frames = frames
        if body is None:
            raise InvalidSpec('A mocap stream needs body angles')
        self.body = _angles(body, BODY_JOINTS, len(frames), 'Body')
        self.left_hand = _angles(left_hand, HAND_JOINTS, len(frames), 'Left hand')
        self.right_hand = _angles(right_hand, HAND_JOINTS, len(frames), 'Right hand')
        if rate <= 0:
            raise InvalidSpec('Mocap rate must be positive')
        self.rate = float(rate)

    def __len__(self):
        return len(self.frames)

    @property
    def times(self):
        return self.frames / self.rate

    def _at(self, angles, times):
        src = self.times
        times = np.clip(np.asarray(times, dtype=float), src[0], src[-1])
        out = np.empty((len(times),) + angles.shape[1:])
        idx = np.searchsorted(src, times)
        exact = (idx < len(src)) & (src[np.minimum(idx, len(src) - 1)] == times)
        out[exact] = angles[idx[exact]]
        rest = ~exact
        if rest.any() and len(src) > 1:
            for j in range(angles.shape[1]):
                slerp = Slerp(src, Rotation.from_rotvec(angles[:, j]))
                out[rest, j] = slerp(times[rest]).as_rotvec()
        return out

    def resample(self, frames, rate=CAMERA_RATE):
        '''
        Joint angles at the given frames of another clock, by per-joint slerp

        Frames outside the recorded span take the nearest recorded angles.

        Parameters
        ----------
        frames : array_like
            Frame numbers at `rate`
        rate : float

        Returns
        -------
        MocapStream
        '''
        if not len(self):
            raise EmptySession('The mocap stream has no frames')
        frames = np.asarray(frames, dtype=np.int64)
        times = frames / float(rate)
        if len(frames) and (times[0] < self.times[0] or times[-1] > self.times[-1]):
            L.warning('Resampling mocap outside its recorded span; holding the end frames')
        hands = [None if h is None else self._at(h, times) for h in (self.left_hand, self.right_hand)]
        return MocapStream(frames, self._at(self.body, times), hands[0], hands[1], rate)

    def __eq__(self, other):
        def same(a, b):
            return (a is None and b is None) or (a is not None and b is not None and np.array_equal(a, b))
        return (isinstance(other, MocapStream) and self.rate == other.rate and
                np.array_equal(self.frames, other.frames) and same(self.body, other.body) and
                same(self.left_hand, other.left_hand) and same(self.right_hand, other.right_hand))

    __hash__ = None


class Annotation(object):
    ''' A text description of the frames ``start`` to ``end``, inclusive '''

    def __init__(self, start, end, text):
        self.start = int(start)
        self.end = int(end)
        if self.end < self.start:
            raise InvariantViolation('Annotation ends before it starts: {} > {}'.format(start, end))
        self.text = str(text)

    def to_dict(self):
        return {'start': self.start, 'end': self.end, 'text': self.text}

    @classmethod
    def from_dict(cls, d):
        return cls(d['start'], d['end'], d['text'])

    def __eq__(self, other):
        return isinstance(other, Annotation) and self.to_dict() == other.to_dict()

    __hash__ = None


class Artifact(object):
    '''
    A solved output together with the hash of the configuration that produced it

    Attributes
    ----------
    kind : str
    data : object
        JSON-compatible values, or a `~mfk.representation.FeatureSequence` for ``'features'``
    config_hash : str
    '''

    def __init__(self, kind, data, config_hash):
        if not config_hash:
            raise InvariantViolation('Artifact {} has no config hash'.format(kind))
        self.kind = kind
        self.data = data
        self.config_hash = config_hash

    def __eq__(self, other):
        return (isinstance(other, Artifact) and self.kind == other.kind and
                self.config_hash == other.config_hash and self.data == other.data)

    __hash__ = None


class CaptureSession(object):
    '''
    Recorded streams and solved artifacts of one capture

    Parameters
    ----------
    rig : list of CameraModel
    detections : list of CornerDetection
        Ordered by frame. Within a frame they are put in camera, marker and corner order
    mocap : MocapStream, optional
    objects : dict, optional
        Object name to `~mfk.objects.ArticulatedObject`
    touches : dict, optional
        Hand side to the list of `~mfk.hand.TouchEvent` of its calibration protocol
    structure : CalibrationStructure, optional
    annotations : list of Annotation, optional
    artifacts : dict, optional
        Kind to `Artifact`
    camera_rate : float
    mocap_rate : float
    metadata : dict, optional
        JSON-compatible values describing the capture
    '''

    def __init__(self, rig, detections=(), mocap=None, objects=None, touches=None, structure=None,
                 annotations=(), artifacts=None, camera_rate=CAMERA_RATE, mocap_rate=MOCAP_RATE,
                 metadata=None):
        self.rig = list(rig)
        ids = [c.id for c in self.rig]
        if len(set(ids)) != len(ids):
            raise InvariantViolation('Camera ids in the rig are not unique')
        self.detections = list(detections)
        seen = set()
        last = None
        for i, d in enumerate(self.detections):
            if last is not None and d.frame < last:
                raise CorruptStream('Detection frames decrease at record {}: {} after {}'
                                    .format(i, d.frame, last))
            key = (d.frame, d.camera_id, d.marker_id, d.corner_index)
            if key in seen:
                raise CorruptStream('Duplicate detection {}'.format(key))
            seen.add(key)
            last = d.frame
        unknown = {d.camera_id for d in self.detections} - set(ids)
        if unknown:
            raise CorruptStream('Detections from cameras not in the rig: {}'.format(sorted(unknown)))
        self.detections.sort(key=lambda d: (d.frame, d.camera_id, d.marker_id, d.corner_index))
        if mocap is not None and mocap.rate != mocap_rate:
            raise InvalidSpec('Mocap stream runs at {} Hz, session declares {} Hz'.format(mocap.rate, mocap_rate))
        self.mocap = mocap
        self.objects = dict(objects or {})
        self.touches = dict(touches or {})
        self.structure = structure
        self.annotations = list(annotations)
        self.artifacts = dict(artifacts or {})
        self.camera_rate = float(camera_rate)
        self.mocap_rate = float(mocap_rate)
        self.metadata = dict(metadata or {})

    @property
    def n_frames(self):
        ''' Number of camera frames, from the detections or else the mocap span '''
        if self.detections:
            return self.detections[-1].frame + 1
        if self.mocap is not None and len(self.mocap):
            return int(np.floor(self.mocap.times[-1] * self.camera_rate)) + 1
        return 0

    def detections_by_frame(self):
        out = {}
        for d in self.detections:
            out.setdefault(d.frame, []).append(d)
        return out

    def camera_mocap(self):
        '''
        Mocap angles at every camera frame

        Returns
        -------
        MocapStream
        '''
        if self.mocap is None:
            raise EmptySession('The session has no mocap stream')
        return self.mocap.resample(np.arange(self.n_frames), self.camera_rate)

    def add_artifact(self, kind, data, config=None):
        '''
        Store a solved output under `kind`, replacing any earlier one

        Returns
        -------
        Artifact
        '''
        art = Artifact(kind, data, as_config(config).digest())
        self.artifacts[kind] = art
        L.debug('Stored artifact %s under config %s', kind, art.config_hash[:12])
        return art

    def artifact(self, kind):
        try:
            return self.artifacts[kind]
        except KeyError:
            raise EmptySession('The session has no {} artifact'.format(kind))

    def __eq__(self, other):
        return (isinstance(other, CaptureSession) and
                self.rig == other.rig and
                self.detections == other.detections and
                self.mocap == other.mocap and
                self.objects == other.objects and
                self.touches == other.touches and
                self.structure == other.structure and
                self.annotations == other.annotations and
                self.artifacts == other.artifacts and
                self.camera_rate == other.camera_rate and
                self.mocap_rate == other.mocap_rate and
                self.metadata == other.metadata)

    __hash__ = None
