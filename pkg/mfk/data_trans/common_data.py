import json
import math

from rdflib.namespace import Namespace

from .. import BASE_SCHEMA_URL, BASE_DATA_URL
from ..errors import CorruptStream

SCHEMA_NS = Namespace(BASE_SCHEMA_URL + '/')
RUN_NS = Namespace(BASE_DATA_URL + '/runs/')
ARTIFACT_NS = Namespace(BASE_DATA_URL + '/artifacts/')
FILE_NS = Namespace(BASE_DATA_URL + '/files/')


def nan_to_none(values):
    ''' Replace NaN in a flat list of floats with `None`, which JSON can carry '''
    return [None if (v is None or (isinstance(v, float) and math.isnan(v))) else v for v in values]


def none_to_nan(values):
    return [float('nan') if v is None else v for v in values]


def json_safe(obj):
    ''' Copy of a nested structure with non-finite floats as `None` and numpy scalars as Python numbers '''
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if hasattr(obj, 'item') and not hasattr(obj, '__len__'):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dump_json(obj, path):
    with open(path, 'w') as f:
        json.dump(obj, f, sort_keys=True, indent=2, allow_nan=False)
        f.write('\n')


def load_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except ValueError as e:
        raise CorruptStream('Could not parse {}: {}'.format(path, e))


def write_jsonl(records, path):
    '''
    Write one JSON object per line with sorted keys, so equal records give equal bytes
    '''
    with open(path, 'w') as f:
        for r in records:
            f.write(json.dumps(r, sort_keys=True, separators=(',', ':'), allow_nan=False))
            f.write('\n')


def read_jsonl(path):
    '''
    Read a JSON lines file

    Raises
    ------
    CorruptStream
        If any line fails to parse, as happens for a truncated file
    '''
    out = []
    with open(path) as f:
        for n, line in enumerate(f, 1):
            if not line.strip():
                continue
            if not line.endswith('\n'):
                raise CorruptStream('{} is truncated at line {}'.format(path, n))
            try:
                out.append(json.loads(line))
            except ValueError as e:
                raise CorruptStream('{} line {}: {}'.format(path, n, e))
    return out
