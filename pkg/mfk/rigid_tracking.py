'''
Rigid pose recovery from marker corner correspondences
'''
import logging

import numpy as np

from .config import as_config
from .errors import DegenerateConfiguration, LengthMismatch, TooFewCorners
from .marker import MarkerCube, canonical_lookup
from .state import ObjectState
from .transform import RigidTransform


L = logging.getLogger(__name__)

COLLINEAR_RATIO = 1e-8


class MarkerCorrespondence(object):
    '''
    Paired canonical and observed corner positions

    Parameters
    ----------
    canonical : array_like
        ``(N, 3)`` positions in the canonical frame
    observed : array_like
        ``(N, 3)`` positions in the camera frame
    weights : array_like, optional
        Non-negative per-pair weights. Defaults to uniform
    '''

    def __init__(self, canonical, observed, weights=None):
        canonical = np.array(canonical, dtype=float).reshape(-1, 3)
        observed = np.array(observed, dtype=float).reshape(-1, 3)
        if len(canonical) != len(observed):
            raise LengthMismatch('{} canonical and {} observed points'.format(len(canonical), len(observed)))
        if weights is None:
            weights = np.ones(len(canonical))
        weights = np.array(weights, dtype=float).reshape(-1)
        if len(weights) != len(canonical):
            raise LengthMismatch('{} weights for {} points'.format(len(weights), len(canonical)))
        if np.any(weights < 0):
            raise DegenerateConfiguration('Negative correspondence weight')
        if np.count_nonzero(weights) < 3:
            raise DegenerateConfiguration('At least three weighted correspondences are required, got {}'
                                          .format(np.count_nonzero(weights)))
        self.canonical = canonical
        self.observed = observed
        self.weights = weights
        self._check_spread()

    def _check_spread(self):
        w = self.weights / self.weights.sum()
        for pts in (self.canonical, self.observed):
            c = pts - w @ pts
            ev = np.sort(np.linalg.eigvalsh((c * w[:, None]).T @ c))[::-1]
            if ev[0] <= 1e-18 or ev[1] / ev[0] <= COLLINEAR_RATIO:
                raise DegenerateConfiguration('Correspondence points are coincident or collinear')

    def __len__(self):
        return len(self.canonical)


def kabsch(correspondence):
    '''
    Weighted least-squares rigid fit mapping canonical points onto observed points

    The determinant sign of the SVD solution is corrected so the result is always a proper
    rotation.

    Parameters
    ----------
    correspondence : MarkerCorrespondence

    Returns
    -------
    RigidTransform
    '''
    R, t = _kabsch(correspondence.canonical, correspondence.observed, correspondence.weights)
    return RigidTransform.from_matrix(R, t)


def _kabsch(P, Q, w):
    w = w / w.sum()
    pc = w @ P
    qc = w @ Q
    H = ((P - pc) * w[:, None]).T @ (Q - qc)
    U, _, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    if d == 0:
        d = 1.0
    R = Vt.T @ np.diag([1.0, 1.0, d]) @ U.T
    return R, qc - R @ pc


def kabsch_batch(canonical, observed, weights=None):
    '''
    Kabsch fits for a batch of frames

    Parameters
    ----------
    canonical : array_like
        ``(B, N, 3)`` or ``(N, 3)`` shared across the batch
    observed : array_like
        ``(B, N, 3)``
    weights : array_like, optional
        ``(B, N)``. Zero weights mark missing points

    Returns
    -------
    R : numpy.ndarray
        ``(B, 3, 3)``
    t : numpy.ndarray
        ``(B, 3)``
    '''
    Q = np.asarray(observed, dtype=float)
    P = np.broadcast_to(np.asarray(canonical, dtype=float), Q.shape)
    if weights is None:
        weights = np.ones(Q.shape[:2])
    w = np.asarray(weights, dtype=float)
    w = w / w.sum(axis=1, keepdims=True)
    Q = np.where(w[..., None] > 0, Q, 0.0)
    pc = np.einsum('bn,bni->bi', w, P)
    qc = np.einsum('bn,bni->bi', w, Q)
    H = np.einsum('bn,bni,bnj->bij', w, P - pc[:, None], Q - qc[:, None])
    U, _, Vt = np.linalg.svd(H)
    V = np.swapaxes(Vt, 1, 2)
    d = np.sign(np.linalg.det(V @ np.swapaxes(U, 1, 2)))
    d[d == 0] = 1.0
    D = np.tile(np.eye(3), (len(d), 1, 1))
    D[:, 2, 2] = d
    R = V @ D @ np.swapaxes(U, 1, 2)
    t = qc - np.einsum('bij,bj->bi', R, pc)
    return R, t


def fit_residual(correspondence, transform):
    ''' Weighted per-coordinate RMS of the fit, in meters '''
    diff = transform.apply(correspondence.canonical) - correspondence.observed
    w = correspondence.weights / correspondence.weights.sum()
    return float(np.sqrt(w @ np.sum(diff ** 2, axis=1) / 3.0))


def correspondence_for(markers_now, cubes, config=None):
    '''
    Pair triangulated corners with the canonical corners of the given cubes

    Parameters
    ----------
    markers_now : iterable of TriangulatedCorner
    cubes : MarkerCube or list of MarkerCube

    Returns
    -------
    MarkerCorrespondence
    '''
    conf = as_config(config)
    if isinstance(cubes, MarkerCube):
        cubes = [cubes]
    lookup = canonical_lookup(cubes)
    can, obs, w = [], [], []
    for m in markers_now:
        p = lookup.get(m.key)
        if p is None:
            continue
        can.append(p)
        obs.append(m.position)
        w.append(m.weight if conf['rigid.rms_weighting'] else 1.0)
    if len(can) < 3:
        raise TooFewCorners('Only {} corner(s) of cube(s) {} are visible'
                            .format(len(can), [c.id for c in cubes]))
    return MarkerCorrespondence(can, obs, w)


def marker_pose(markers_now, cubes, config=None):
    ''' Transform taking the cubes' canonical corners onto their current observed positions '''
    return kabsch(correspondence_for(markers_now, cubes, config))


def object_pose(markers_now, cubes, t_mar_to_obj=None, config=None):
    '''
    Object pose from the currently visible corners of its marker cube(s)

    Cubes mounted on the same part are solved jointly. The result is
    ``t_mar_to_obj ∘ T_mar`` where ``T_mar`` maps canonical corners onto the observation.

    Parameters
    ----------
    markers_now : iterable of TriangulatedCorner
    cubes : MarkerCube or list of MarkerCube
    t_mar_to_obj : RigidTransform, optional
        Fixed marker-to-object correction. Defaults to the identity
    config : Config, optional

    Returns
    -------
    ObjectState
    '''
    pose = marker_pose(markers_now, cubes, config)
    if t_mar_to_obj is not None:
        pose = t_mar_to_obj.compose(pose)
    return ObjectState.from_pose(pose)


def solve_mount(scan_points, observed_points, marker_transform=None):
    '''
    Solve the fixed marker-to-object transform from scan-to-observation correspondences

    Parameters
    ----------
    scan_points : array_like
        ``(N, 3)`` points on the scanned object, in the object's canonical frame
    observed_points : array_like
        ``(N, 3)`` the same points observed in the camera frame
    marker_transform : RigidTransform, optional
        ``T_mar`` at the time of the observation. Defaults to the identity

    Returns
    -------
    mount : RigidTransform
    rms : float
        Per-coordinate RMS of the alignment in meters
    '''
    corr = MarkerCorrespondence(scan_points, observed_points)
    obj = kabsch(corr)
    rms = fit_residual(corr, obj)
    if marker_transform is None:
        return obj, rms
    return obj.compose(marker_transform.inverse()), rms
