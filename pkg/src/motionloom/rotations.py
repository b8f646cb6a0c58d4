"""Small rotation-matrix helpers shared across the package.

Conventions: world up is +Y, the ground plane is XZ, and the canonical
forward axis is +X. Planar angles are measured about +Y, so a rotation by
angle a maps +X to (cos a, 0, -sin a).
"""

import numpy as np

UP = np.array([0.0, 1.0, 0.0])
FORWARD = np.array([1.0, 0.0, 0.0])


def rot_y(angle):
    """Rotation matrix about world up (+Y) by `angle` radians."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def yaw_of(rotation):
    """Planar angle a such that rot_y(a) has the same projected forward axis."""
    fwd = rotation[:, 0]
    return np.arctan2(-fwd[2], fwd[0])


def rot_axis_angle(axis, angle):
    """Rodrigues formula for a unit axis."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    k = hat(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def hat(v):
    """Skew-symmetric cross-product matrix of a 3-vector."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def is_rotation(m, tol=1e-6):
    m = np.asarray(m)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        return False
    if not np.allclose(m.T @ m, np.eye(3), atol=tol):
        return False
    return np.linalg.det(m) > 0.0


def nearest_rotation(m):
    """Project a 3x3 matrix to the nearest rotation (Frobenius) via SVD."""
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0.0:
        u = u.copy()
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


def slerp(r0, r1, t):
    """Geodesic interpolation between two rotation matrices."""
    from scipy.spatial.transform import Rotation, Slerp

    key = Rotation.from_matrix(np.stack([r0, r1]))
    return Slerp([0.0, 1.0], key)(t).as_matrix()
