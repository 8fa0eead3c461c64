'''
Session bundles

A bundle is a directory::

    session.json          manifest: schema version, rates, object names, annotations,
                          metadata and the file and config hash of every artifact
    cameras.json
    detections.jsonl
    mocap.jsonl           when the session has a mocap stream
    touches.jsonl         when the session has touch events
    objects/<name>/       see `mfk.data_trans.objects`
    poses.jsonl, triangulated.jsonl, contacts.jsonl, features.bin + features.json
                          solved artifacts with a stream format
    <kind>.json           any other solved artifact
'''
import logging
import os

from .. import SCHEMA_VERSION
from ..errors import CorruptStream, SchemaVersionMismatch
from ..hand import CalibrationStructure
from ..session import Annotation, Artifact, CaptureSession
from .cameras import read_cameras, write_cameras
from .common_data import dump_json, json_safe, load_json, read_jsonl, write_jsonl
from .features import read_features, write_features
from .objects import read_object, write_object
from .streams import read_detections, read_mocap, read_touches, write_detections, write_mocap, write_touches

L = logging.getLogger(__name__)

MANIFEST = 'session.json'

STREAM_ARTIFACTS = {
    'poses': 'poses.jsonl',
    'triangulated': 'triangulated.jsonl',
    'contacts': 'contacts.jsonl',
}


def artifact_file(kind):
    if kind == 'features':
        return 'features.bin'
    return STREAM_ARTIFACTS.get(kind, '{}.json'.format(kind))


def save_session(session, directory):
    '''
    Write a session bundle

    Parameters
    ----------
    session : CaptureSession
    directory : str
        Created if missing. Files of the bundle are replaced
    '''
    os.makedirs(directory, exist_ok=True)
    write_cameras(session.rig, os.path.join(directory, 'cameras.json'))
    write_detections(session.detections, os.path.join(directory, 'detections.jsonl'))
    if session.mocap is not None:
        write_mocap(session.mocap, os.path.join(directory, 'mocap.jsonl'))
    if session.touches:
        write_touches(session.touches, os.path.join(directory, 'touches.jsonl'))
    for name, obj in session.objects.items():
        write_object(obj, os.path.join(directory, 'objects', name))

    artifacts = {}
    for kind, art in sorted(session.artifacts.items()):
        file_name = artifact_file(kind)
        path = os.path.join(directory, file_name)
        if kind == 'features':
            write_features(art.data, directory)
        elif kind in STREAM_ARTIFACTS:
            write_jsonl(art.data, path)
        else:
            dump_json(json_safe(art.data), path)
        artifacts[kind] = {'file': file_name, 'config_hash': art.config_hash}

    manifest = {
        'schema_version': SCHEMA_VERSION,
        'camera_rate': session.camera_rate,
        'mocap_rate': session.mocap_rate,
        'mocap': session.mocap is not None,
        'touches': bool(session.touches),
        'objects': sorted(session.objects),
        'structure': None if session.structure is None else session.structure.to_dict(),
        'annotations': [a.to_dict() for a in session.annotations],
        'metadata': session.metadata,
        'artifacts': artifacts,
    }
    dump_json(manifest, os.path.join(directory, MANIFEST))
    L.info('Saved session bundle to %s', directory)


def load_session(directory):
    '''
    Read a session bundle

    Raises
    ------
    SchemaVersionMismatch
        If the bundle was written under another schema version
    CorruptStream
        If a file is missing, truncated or malformed

    Returns
    -------
    CaptureSession
    '''
    try:
        return _load(directory)
    except (OSError, KeyError) as e:
        raise CorruptStream('Incomplete session bundle at {}: {!r}'.format(directory, e))


def _load(directory):
    manifest = load_json(os.path.join(directory, MANIFEST))
    version = manifest.get('schema_version')
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch('Bundle {} has schema version {}, expected {}'
                                    .format(directory, version, SCHEMA_VERSION))
    rig = read_cameras(os.path.join(directory, 'cameras.json'))
    detections = read_detections(os.path.join(directory, 'detections.jsonl'))
    mocap = None
    if manifest['mocap']:
        mocap = read_mocap(os.path.join(directory, 'mocap.jsonl'), manifest['mocap_rate'])
    touches = None
    if manifest['touches']:
        touches = read_touches(os.path.join(directory, 'touches.jsonl'))
    objects = {name: read_object(os.path.join(directory, 'objects', name), name)
               for name in manifest['objects']}
    structure = None
    if manifest.get('structure') is not None:
        structure = CalibrationStructure.from_dict(manifest['structure'])

    artifacts = {}
    for kind, entry in manifest['artifacts'].items():
        path = os.path.join(directory, entry['file'])
        if kind == 'features':
            data = read_features(directory)
        elif kind in STREAM_ARTIFACTS:
            data = read_jsonl(path)
        else:
            data = load_json(path)
        artifacts[kind] = Artifact(kind, data, entry['config_hash'])

    return CaptureSession(rig, detections, mocap, objects, touches, structure,
                          [Annotation.from_dict(a) for a in manifest['annotations']], artifacts,
                          manifest['camera_rate'], manifest['mocap_rate'], manifest['metadata'])
