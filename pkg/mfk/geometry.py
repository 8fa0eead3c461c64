'''
Vectorized geometric primitives: closest points, segment distances and ray/triangle tests
'''
import numpy as np


def closest_points_on_triangles(p, a, b, c):
    '''
    Closest point on each triangle to each query point

    All arguments broadcast against each other with a trailing axis of 3. Uses the region
    classification of the triangle's Voronoi regions.

    Returns
    -------
    numpy.ndarray
        Closest points, broadcast shape of the inputs
    '''
    p, a, b, c = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (p, a, b, c)))
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum('...i,...i', ab, ap)
    d2 = np.einsum('...i,...i', ac, ap)
    bp = p - b
    d3 = np.einsum('...i,...i', ab, bp)
    d4 = np.einsum('...i,...i', ac, bp)
    cp = p - c
    d5 = np.einsum('...i,...i', ab, cp)
    d6 = np.einsum('...i,...i', ac, cp)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide='ignore', invalid='ignore'):
        denom = va + vb + vc
        v = vb / denom
        w = vc / denom
        res = a + ab * v[..., None] + ac * w[..., None]

        # edge bc
        w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        m = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
        res = np.where(m[..., None], b + (c - b) * w_bc[..., None], res)

        # edge ac
        w_ac = d2 / (d2 - d6)
        m = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        res = np.where(m[..., None], a + ac * w_ac[..., None], res)

        # edge ab
        v_ab = d1 / (d1 - d3)
        m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        res = np.where(m[..., None], a + ab * v_ab[..., None], res)

    # vertices
    res = np.where(((d6 >= 0) & (d5 <= d6))[..., None], c, res)
    res = np.where(((d3 >= 0) & (d4 <= d3))[..., None], b, res)
    res = np.where(((d1 <= 0) & (d2 <= 0))[..., None], a, res)
    return res


def segment_segment_distance(p0, p1, q0, q1):
    '''
    Minimum distance between segments ``p0-p1`` and ``q0-q1``, broadcasting over leading axes
    '''
    p0, p1, q0, q1 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (p0, p1, q0, q1)))
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = np.einsum('...i,...i', d1, d1)
    e = np.einsum('...i,...i', d2, d2)
    f = np.einsum('...i,...i', d2, r)
    c = np.einsum('...i,...i', d1, r)
    b = np.einsum('...i,...i', d1, d2)
    eps = 1e-15

    denom = a * e - b * b
    with np.errstate(divide='ignore', invalid='ignore'):
        s = np.where(denom > eps, np.clip((b * f - c * e) / denom, 0.0, 1.0), 0.0)
        t = np.where(e > eps, (b * s + f) / e, 0.0)
        # clamp t and recompute s
        s = np.where(t < 0.0, np.where(a > eps, np.clip(-c / a, 0.0, 1.0), 0.0), s)
        s = np.where(t > 1.0, np.where(a > eps, np.clip((b - c) / a, 0.0, 1.0), 0.0), s)
    t = np.clip(t, 0.0, 1.0)
    # degenerate second segment
    with np.errstate(divide='ignore', invalid='ignore'):
        s = np.where(e <= eps, np.where(a > eps, np.clip(-c / a, 0.0, 1.0), 0.0), s)
    t = np.where(e <= eps, 0.0, t)
    # degenerate first segment
    with np.errstate(divide='ignore', invalid='ignore'):
        t = np.where(a <= eps, np.where(e > eps, np.clip(f / e, 0.0, 1.0), 0.0), t)
    s = np.where(a <= eps, 0.0, s)
    cp = p0 + d1 * s[..., None]
    cq = q0 + d2 * t[..., None]
    return np.linalg.norm(cp - cq, axis=-1)


def segment_triangle_hits(origins, dirs, v0, v1, v2, t_max=1.0, eps=1e-12):
    '''
    Möller-Trumbore intersection of segments ``origin + t * dir`` for ``t`` in
    ``(eps, t_max)`` with triangles

    Parameters
    ----------
    origins, dirs : numpy.ndarray
        ``(R, 3)``
    v0, v1, v2 : numpy.ndarray
        ``(M, 3)`` triangle vertices

    Returns
    -------
    numpy.ndarray
        ``(R, M)`` boolean hit matrix
    '''
    e1 = (v1 - v0)[None, :, :]
    e2 = (v2 - v0)[None, :, :]
    d = dirs[:, None, :]
    h = np.cross(d, e2)
    det = np.einsum('rmi,rmi->rm', np.broadcast_to(e1, h.shape), h)
    ok = np.abs(det) > eps
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    s = origins[:, None, :] - v0[None, :, :]
    u = np.einsum('rmi,rmi->rm', s, h) * inv
    q = np.cross(s, np.broadcast_to(e1, s.shape))
    v = np.einsum('rmi,rmi->rm', np.broadcast_to(d, q.shape), q) * inv
    t = np.einsum('rmi,rmi->rm', np.broadcast_to(e2, q.shape), q) * inv
    return ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > eps) & (t < t_max)


def segment_aabb_hits(origins, dirs, bmin, bmax, t_max=1.0):
    ''' Slab test of segments against one axis-aligned box '''
    with np.errstate(divide='ignore', invalid='ignore'):
        inv = 1.0 / dirs
        t0 = (bmin - origins) * inv
        t1 = (bmax - origins) * inv
    tlo = np.nanmax(np.minimum(t0, t1), axis=1)
    thi = np.nanmin(np.maximum(t0, t1), axis=1)
    return (thi >= np.maximum(tlo, 0.0)) & (tlo <= t_max)


def yaw_matrix(yaw):
    ''' Rotations about +z, broadcasting over `yaw` '''
    yaw = np.asarray(yaw, dtype=float)
    c, s = np.cos(yaw), np.sin(yaw)
    z, o = np.zeros_like(yaw), np.ones_like(yaw)
    return np.stack([np.stack([c, -s, z], -1), np.stack([s, c, z], -1), np.stack([z, z, o], -1)], -2)


def wrap_angle(a):
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi
