'''
Scanned objects, their parts, and per-frame object tracking
'''
import logging

from .articulation import JointSpec, part_state
from .errors import InvariantViolation, MFKError
from .marker import MarkerCube
from .rigid_tracking import object_pose
from .state import ObjectState
from .transform import RigidTransform


L = logging.getLogger(__name__)


class ObjectPart(object):
    '''
    One rigid part of a scanned object

    Parameters
    ----------
    name : str
    cubes : list of MarkerCube
        Cubes mounted on the part
    joint : JointSpec, optional
        `None` for the base part
    mount : RigidTransform, optional
        The part's marker-to-object correction
    mesh : TriangleMesh, optional
        Part geometry in the object's canonical frame
    '''

    def __init__(self, name, cubes, joint=None, mount=None, mesh=None):
        self.name = name
        self.cubes = list(cubes)
        self.joint = joint
        self.mount = mount if mount is not None else RigidTransform()
        self.mesh = mesh

    def to_dict(self):
        return {'name': self.name,
                'cubes': [c.to_dict() for c in self.cubes],
                'joint': None if self.joint is None else self.joint.to_dict(),
                'mount': self.mount.to_dict()}

    @classmethod
    def from_dict(cls, d, mesh=None):
        return cls(d['name'], [MarkerCube.from_dict(c) for c in d['cubes']],
                   None if d.get('joint') is None else JointSpec.from_dict(d['joint']),
                   RigidTransform.from_dict(d['mount']), mesh)

    def __eq__(self, other):
        return (isinstance(other, ObjectPart) and self.name == other.name and
                self.cubes == other.cubes and self.joint == other.joint and
                self.mount == other.mount and self.mesh == other.mesh)

    __hash__ = None


class ArticulatedObject(object):
    '''
    A scanned object: a base part followed by zero or more articulated parts

    Parameters
    ----------
    name : str
    parts : list of ObjectPart
        The first part is the base and has no joint; every other part has one
    '''

    def __init__(self, name, parts):
        parts = list(parts)
        if not parts:
            raise InvariantViolation('Object {} has no parts'.format(name))
        if parts[0].joint is not None:
            raise InvariantViolation('The base part of {} must not carry a joint'.format(name))
        for p in parts[1:]:
            if p.joint is None:
                raise InvariantViolation('Part {} of {} has no joint'.format(p.name, name))
        self.name = name
        self.parts = parts

    @property
    def base(self):
        return self.parts[0]

    @property
    def articulated_parts(self):
        return self.parts[1:]

    @property
    def marker_ids(self):
        return {m for p in self.parts for c in p.cubes for m in c.marker_ids}

    def to_dict(self):
        return {'name': self.name, 'parts': [p.to_dict() for p in self.parts]}

    def __eq__(self, other):
        return isinstance(other, ArticulatedObject) and self.name == other.name and self.parts == other.parts

    __hash__ = None


def track_object(obj, markers_now, config=None):
    '''
    Pose of an object's base and states of its parts at one frame

    Parts whose markers are not visible, or whose motion departs from their joint, get a
    NaN state.

    Parameters
    ----------
    obj : ArticulatedObject
    markers_now : list of TriangulatedCorner

    Returns
    -------
    ObjectState
    '''
    base = obj.base
    base_state = object_pose(markers_now, base.cubes, base.mount, config)
    states = []
    for part in obj.articulated_parts:
        try:
            pp = object_pose(markers_now, part.cubes, part.mount, config).pose
            states.append(part_state(base_state.pose, pp, part.joint, config).value)
        except MFKError as e:
            L.debug('No state for part %s of %s: %s', part.name, obj.name, e)
            states.append(float('nan'))
    return ObjectState.from_pose(base_state.pose, states, allow_missing=True)
