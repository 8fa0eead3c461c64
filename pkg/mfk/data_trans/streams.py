'''
Time-indexed streams stored as JSON lines

``detections.jsonl``
    ``{frame, camera_id, marker_id, corners: [[u, v] or null] x 4}``, one record per marker
    seen by a camera in a frame
``mocap.jsonl``
    ``{frame, body_angles: 23x3, left_hand: 20x3 or null, right_hand: 20x3 or null}`` in
    radians, axis-angle, at the mocap rate
``touches.jsonl``
    ``{side, step, glove_angles, marker_corners, body_wrist}``, one record per protocol step
``poses.jsonl``
    ``{frame, object, l: 3, q: [w, x, y, z], states: [s_i or null]}``
``triangulated.jsonl``, ``contacts.jsonl``
    The ``to_dict`` forms of `~mfk.multiview.TriangulatedCorner` and
    `~mfk.representation.ContactRecord`
'''
import logging

import numpy as np

from ..errors import CorruptStream
from ..hand import TouchEvent
from ..multiview import CornerDetection
from ..session import MocapStream
from .common_data import read_jsonl, write_jsonl

L = logging.getLogger(__name__)


def detection_records(detections):
    ''' Group corner detections into one record per frame, camera and marker '''
    groups = {}
    for d in detections:
        rec = groups.get((d.frame, d.camera_id, d.marker_id))
        if rec is None:
            rec = {'frame': d.frame, 'camera_id': d.camera_id, 'marker_id': d.marker_id,
                   'corners': [None] * 4}
            groups[(d.frame, d.camera_id, d.marker_id)] = rec
        rec['corners'][d.corner_index] = d.pixel.tolist()
    return list(groups.values())


def detections_from_records(records):
    out = []
    try:
        for r in records:
            if len(r['corners']) != 4:
                raise CorruptStream('Detection record lists {} corners'.format(len(r['corners'])))
            for k, uv in enumerate(r['corners']):
                if uv is not None:
                    out.append(CornerDetection(r['camera_id'], r['marker_id'], k, uv, r['frame']))
    except (KeyError, TypeError) as e:
        raise CorruptStream('Malformed detection record: {!r}'.format(e))
    return out


def write_detections(detections, path):
    write_jsonl(detection_records(detections), path)


def read_detections(path):
    return detections_from_records(read_jsonl(path))


def write_mocap(mocap, path):
    def arr(a, t):
        return None if a is None else a[t].tolist()
    write_jsonl(({'frame': int(f), 'body_angles': mocap.body[t].tolist(),
                  'left_hand': arr(mocap.left_hand, t), 'right_hand': arr(mocap.right_hand, t)}
                 for t, f in enumerate(mocap.frames)), path)


def read_mocap(path, rate):
    '''
    Returns
    -------
    MocapStream
    '''
    records = read_jsonl(path)
    try:
        frames = [r['frame'] for r in records]
        body = [r['body_angles'] for r in records]
        hands = []
        for side in ('left_hand', 'right_hand'):
            present = [r.get(side) is not None for r in records]
            if records and all(present):
                hands.append([r[side] for r in records])
            elif any(present):
                raise CorruptStream('{} angles are missing from some mocap frames'.format(side))
            else:
                hands.append(None)
        body = np.array(body, dtype=float) if records else np.zeros((0, 23, 3))
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptStream('Malformed mocap record: {!r}'.format(e))
    return MocapStream(frames, body, hands[0], hands[1], rate)


def write_touches(touches, path):
    records = []
    for side in sorted(touches):
        for e in touches[side]:
            d = e.to_dict()
            d['side'] = side
            records.append(d)
    write_jsonl(records, path)


def read_touches(path):
    out = {}
    try:
        for r in read_jsonl(path):
            out.setdefault(r['side'], []).append(TouchEvent.from_dict(r))
    except (KeyError, TypeError) as e:
        raise CorruptStream('Malformed touch record: {!r}'.format(e))
    return out
