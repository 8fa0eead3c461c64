'''
Camera rig files

``cameras.json`` holds an array of::

    {"id": 3, "K": [9 floats, row-major, px], "R": [9 floats], "t": [3 floats, m],
     "q": [w, x, y, z], "width": 2048, "height": 1536}

``R`` and ``t`` map world points into the camera frame. ``q`` is the same rotation as a
quaternion; it is optional on input and preferred over ``R`` when present.
'''
import logging

import numpy as np

from ..camera import CameraModel
from ..errors import CorruptStream
from ..transform import RigidTransform
from .common_data import dump_json, load_json

L = logging.getLogger(__name__)


def camera_record(cam):
    ext = cam.extrinsics
    return {'id': cam.id,
            'K': cam.intrinsics.reshape(-1).tolist(),
            'R': ext.matrix.reshape(-1).tolist(),
            't': ext.translation.tolist(),
            'q': ext.rotation.tolist(),
            'width': cam.resolution[0],
            'height': cam.resolution[1]}


def camera_from_record(d):
    try:
        R = np.array(d['R'], dtype=float).reshape(3, 3)
        if 'q' in d:
            ext = RigidTransform(d['q'], d['t'])
            if np.abs(ext.matrix - R).max() > 1e-9:
                raise CorruptStream('Camera {} rotation matrix and quaternion disagree'.format(d['id']))
        else:
            ext = RigidTransform.from_matrix(R, d['t'])
        return CameraModel(d['id'], np.array(d['K'], dtype=float).reshape(3, 3), ext,
                           (d['width'], d['height']))
    except (KeyError, ValueError, TypeError) as e:
        raise CorruptStream('Malformed camera record: {!r}'.format(e))


def write_cameras(rig, path):
    dump_json([camera_record(c) for c in rig], path)


def read_cameras(path):
    '''
    Returns
    -------
    list of CameraModel
    '''
    data = load_json(path)
    if not isinstance(data, list):
        raise CorruptStream('{} must hold a JSON array of cameras'.format(path))
    rig = [camera_from_record(d) for d in data]
    L.debug('Read %d cameras from %s', len(rig), path)
    return rig
