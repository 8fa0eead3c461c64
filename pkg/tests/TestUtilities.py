import numpy as np
from scipy.spatial.transform import Rotation

from mfk.multiview import CornerDetection
from mfk.transform import RigidTransform


def random_transform(rng, scale=1.0):
    ''' A uniformly random rotation with a normally distributed translation '''
    return RigidTransform.from_rotation(Rotation.random(random_state=rng.integers(2 ** 31)),
                                        rng.normal(scale=scale, size=3))


def spread_points(rng, n, scale=0.2):
    return rng.normal(scale=scale, size=(n, 3))


def project_corners(rig, points, keys, frame=0, noise=0.0, rng=None):
    '''
    Detections of `points` in every camera that has them in its frustum

    Parameters
    ----------
    keys : list of tuple
        ``(marker_id, corner_index)`` of each point
    '''
    out = []
    for cam in rig:
        inside = cam.in_frustum(points)
        pix, _ = cam.project_many(points)
        for i in np.flatnonzero(inside):
            uv = pix[i]
            if noise:
                uv = uv + rng.normal(scale=noise, size=2)
            out.append(CornerDetection(cam.id, keys[i][0], keys[i][1], uv, frame))
    return out


def angle_between(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b))
    return float(np.arccos(np.clip(c, -1.0, 1.0)))
