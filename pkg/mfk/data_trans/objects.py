'''
Scanned object models

An object lives in ``objects/<name>/``: the base part's surface in ``mesh.obj`` (ASCII,
meters), each articulated part's surface in ``<part>.obj``, and the part list in
``parts.json``::

    [{"part": "base", "kind": null, "cubes": [...], "mount": {...}, "mesh": "mesh.obj"},
     {"part": "door", "kind": "revolute", "axis": [0, 0, 1], "pivot": [...], ...}]

Joint kinds are checked against `~mfk.articulation.ARTICULATED_CATALOG` when the object's
name appears there.
'''
import logging
import os

import numpy as np
import trimesh

from ..articulation import ARTICULATED_CATALOG, JointSpec
from ..errors import CorruptStream, InvalidSpec
from ..marker import MarkerCube
from ..mesh import TriangleMesh
from ..objects import ArticulatedObject, ObjectPart
from ..transform import RigidTransform
from .common_data import dump_json, load_json

L = logging.getLogger(__name__)

OBJ_DIGITS = 20
''' Decimal places written for OBJ vertex coordinates '''


def write_mesh(mesh, path):
    tm = trimesh.Trimesh(vertices=mesh.vertices, faces=mesh.faces, process=False)
    text = trimesh.exchange.obj.export_obj(tm, include_normals=False, include_color=False,
                                           include_texture=False, digits=OBJ_DIGITS)
    with open(path, 'w') as f:
        f.write(text)


def read_mesh(path):
    '''
    Returns
    -------
    TriangleMesh
    '''
    try:
        tm = trimesh.load(path, file_type='obj', process=False, force='mesh')
    except Exception as e:
        raise CorruptStream('Could not read mesh {}: {}'.format(path, e))
    return TriangleMesh(np.asarray(tm.vertices, dtype=float), np.asarray(tm.faces, dtype=np.int64))


def part_record(part, mesh_file):
    d = {'part': part.name,
         'kind': None if part.joint is None else part.joint.kind,
         'cubes': [c.to_dict() for c in part.cubes],
         'mount': part.mount.to_dict(),
         'mesh': mesh_file}
    if part.joint is not None:
        d['axis'] = part.joint.axis.tolist()
        if part.joint.pivot is not None:
            d['pivot'] = part.joint.pivot.tolist()
    return d


def check_catalog(name, parts):
    ''' Compare the joint kinds of a known object type with its declared kinds '''
    if name not in ARTICULATED_CATALOG:
        return
    kinds = tuple(p.joint.kind for p in parts[1:])
    if kinds != ARTICULATED_CATALOG[name]:
        raise InvalidSpec('Object {} declares joints {} but the catalog lists {}'
                          .format(name, kinds, ARTICULATED_CATALOG[name]))


def write_object(obj, directory):
    os.makedirs(directory, exist_ok=True)
    records = []
    for i, part in enumerate(obj.parts):
        mesh_file = None
        if part.mesh is not None:
            mesh_file = 'mesh.obj' if i == 0 else '{}.obj'.format(part.name)
            write_mesh(part.mesh, os.path.join(directory, mesh_file))
        records.append(part_record(part, mesh_file))
    dump_json(records, os.path.join(directory, 'parts.json'))


def read_object(directory, name=None):
    '''
    Read an object model from its directory

    Parameters
    ----------
    directory : str
    name : str, optional
        Defaults to the directory's base name

    Returns
    -------
    ArticulatedObject
    '''
    name = name or os.path.basename(os.path.normpath(directory))
    records = load_json(os.path.join(directory, 'parts.json'))
    parts = []
    try:
        for d in records:
            joint = None
            if d.get('kind') is not None:
                joint = JointSpec(d['kind'], d['axis'], d.get('pivot'))
            mesh = None
            if d.get('mesh'):
                mesh = read_mesh(os.path.join(directory, d['mesh']))
            parts.append(ObjectPart(d['part'], [MarkerCube.from_dict(c) for c in d['cubes']], joint,
                                    RigidTransform.from_dict(d['mount']) if 'mount' in d else None, mesh))
    except (KeyError, TypeError) as e:
        raise CorruptStream('Malformed part record for {}: {!r}'.format(name, e))
    check_catalog(name, parts)
    return ArticulatedObject(name, parts)
