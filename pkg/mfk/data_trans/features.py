'''
Dense feature matrices

``features.bin`` holds the rows of a `~mfk.representation.FeatureSequence` as
little-endian float64, row-major. ``features.json`` describes it::

    {"dtype": "<f8", "frames": F, "dimension": D, "n_joints": J, "rate": 30.0, "slices": {...}}
'''
import os

import numpy as np

from ..errors import CorruptStream
from ..representation import FeatureSequence
from .common_data import dump_json, load_json

DTYPE = '<f8'


def write_features(features, directory, stem='features'):
    data = np.ascontiguousarray(features.data, dtype=DTYPE)
    with open(os.path.join(directory, stem + '.bin'), 'wb') as f:
        f.write(data.tobytes())
    meta = {'dtype': DTYPE, 'frames': data.shape[0], 'dimension': data.shape[1], 'rate': features.rate}
    meta.update(features.layout.to_dict())
    dump_json(meta, os.path.join(directory, stem + '.json'))


def read_features(directory, stem='features'):
    '''
    Returns
    -------
    FeatureSequence
    '''
    meta = load_json(os.path.join(directory, stem + '.json'))
    path = os.path.join(directory, stem + '.bin')
    expected = int(meta['frames']) * int(meta['dimension']) * np.dtype(meta['dtype']).itemsize
    size = os.path.getsize(path)
    if size != expected:
        raise CorruptStream('{} holds {} bytes, expected {}'.format(path, size, expected))
    data = np.fromfile(path, dtype=meta['dtype']).reshape(int(meta['frames']), int(meta['dimension']))
    if 'rate' not in meta:
        raise CorruptStream('{} has no frame rate'.format(stem + '.json'))
    return FeatureSequence(data.astype(float), int(meta['n_joints']), float(meta['rate']))
