import json
import os
import unittest

import numpy as np
import pytest

from mfk import SCHEMA_VERSION
from mfk.data_trans.bundle import MANIFEST, artifact_file, load_session, save_session
from mfk.data_trans.common_data import json_safe, read_jsonl, write_jsonl
from mfk.data_trans.features import read_features, write_features
from mfk.errors import CorruptStream, SchemaVersionMismatch
from mfk.hand import CalibrationStructure, TouchEvent, default_protocol
from mfk.representation import build_features
from mfk.session import CaptureSession
from mfk.synthetic import SceneSpec, generate_capture, natural_hand_angles
from mfk.transform import RigidTransform


def small_capture(seed=3):
    spec = SceneSpec(n_cameras=6, n_frames=6, objects=('box', 'drawer'), hands=False)
    capture = generate_capture(spec, seed)
    capture.session.add_artifact('features', build_features(capture.body.stream))
    capture.session.add_artifact('contacts', [{'frame': 0, 'party': 'body', 'object': 'box', 'part': 0}])
    capture.session.add_artifact('metrics_note', {'rms': float('nan'), 'n': np.int64(3)})
    return capture


def read_bytes(directory):
    out = {}
    for name in os.listdir(directory):
        path = os.path.join(directory, name)
        if os.path.isfile(path):
            with open(path, 'rb') as f:
                out[name] = f.read()
    return out


def test_round_trip(tempdir):
    session = small_capture().session
    save_session(session, tempdir)
    loaded = load_session(tempdir)
    assert loaded.rig == session.rig
    assert loaded.detections == session.detections
    assert loaded.mocap == session.mocap
    assert loaded.objects == session.objects
    assert loaded.annotations == session.annotations
    assert loaded.metadata == session.metadata
    assert loaded.artifact('features').data == session.artifact('features').data
    assert loaded.artifact('truth') == session.artifact('truth')
    assert loaded.artifact('metrics_note').data == {'rms': None, 'n': 3}


def test_resave_is_byte_identical(tempdir):
    first = os.path.join(tempdir, 'a')
    second = os.path.join(tempdir, 'b')
    save_session(small_capture().session, first)
    save_session(load_session(first), second)
    assert read_bytes(first) == read_bytes(second)


def test_touches_round_trip(tempdir):
    structure = CalibrationStructure.standard(RigidTransform(None, (1.0, 0.0, 0.75)))
    corners = np.zeros((12, 3))
    corners[5] = np.nan
    touches = {'left': [TouchEvent(step, natural_hand_angles(), corners, (0.0, 0.1, 0.2))
                        for step in default_protocol('left')[:3]]}
    session = CaptureSession(small_capture().session.rig, touches=touches, structure=structure)
    save_session(session, tempdir)
    loaded = load_session(tempdir)
    assert loaded.touches == touches
    assert loaded.structure == session.structure


def test_truncated_stream(tempdir):
    save_session(small_capture().session, tempdir)
    path = os.path.join(tempdir, 'detections.jsonl')
    with open(path) as f:
        text = f.read()
    with open(path, 'w') as f:
        f.write(text[:-7])
    with pytest.raises(CorruptStream):
        load_session(tempdir)


def test_schema_mismatch(tempdir):
    save_session(small_capture().session, tempdir)
    path = os.path.join(tempdir, MANIFEST)
    with open(path) as f:
        manifest = json.load(f)
    manifest['schema_version'] = SCHEMA_VERSION + 1
    with open(path, 'w') as f:
        json.dump(manifest, f)
    with pytest.raises(SchemaVersionMismatch):
        load_session(tempdir)


def test_missing_file(tempdir):
    save_session(small_capture().session, tempdir)
    os.unlink(os.path.join(tempdir, 'cameras.json'))
    with pytest.raises(CorruptStream):
        load_session(tempdir)


def test_short_feature_file(tempdir):
    features = build_features(small_capture().body.stream)
    write_features(features, tempdir)
    assert read_features(tempdir) == features
    path = os.path.join(tempdir, 'features.bin')
    with open(path, 'rb') as f:
        data = f.read()
    with open(path, 'wb') as f:
        f.write(data[:-8])
    with pytest.raises(CorruptStream):
        read_features(tempdir)


def test_feature_rate_round_trip(tempdir):
    features = build_features(small_capture().body.stream, rate=60.0)
    write_features(features, tempdir)
    with open(os.path.join(tempdir, 'features.json')) as f:
        assert json.load(f)['rate'] == 60.0
    back = read_features(tempdir)
    assert back.rate == 60.0
    assert back == features


def test_feature_header_without_rate(tempdir):
    write_features(build_features(small_capture().body.stream), tempdir)
    path = os.path.join(tempdir, 'features.json')
    with open(path) as f:
        meta = json.load(f)
    del meta['rate']
    with open(path, 'w') as f:
        json.dump(meta, f)
    with pytest.raises(CorruptStream):
        read_features(tempdir)


def test_jsonl_bad_line(tempdir):
    path = os.path.join(tempdir, 'x.jsonl')
    write_jsonl([{'a': 1}, {'b': 2}], path)
    assert read_jsonl(path) == [{'a': 1}, {'b': 2}]
    with open(path, 'a') as f:
        f.write('{"c": \n')
    with pytest.raises(CorruptStream):
        read_jsonl(path)


class ArtifactFileTest(unittest.TestCase):

    def test_names(self):
        self.assertEqual(artifact_file('features'), 'features.bin')
        self.assertEqual(artifact_file('poses'), 'poses.jsonl')
        self.assertEqual(artifact_file('body_calibration'), 'body_calibration.json')


class JsonSafeTest(unittest.TestCase):

    def test_nested(self):
        data = {1: (np.float64(0.5), float('inf')), 'x': [np.int32(2), {'y': float('nan')}]}
        self.assertEqual(json_safe(data), {'1': [0.5, None], 'x': [2, {'y': None}]})
