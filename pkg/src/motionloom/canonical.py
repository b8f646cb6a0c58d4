"""Goal-centric canonical coordinate frame.

A CanonicalFrame is a planar rigid transform (rotation about world-up plus a
translation with zero vertical component). Canonicalizing a motion expresses
it relative to that frame: root translation r -> R^-1 (r - t), global
orientation phi -> R^-1 phi, local joint rotations untouched. Built from the
last pose of a clip, it places that pose at the origin facing the canonical
+X axis.
"""

from dataclasses import dataclass

import numpy as np

from .motion import FRAME_DIM, MotionClip
from .skeleton import NUM_JOINTS, Pose, heading
from .rotations import rot_y


class DegenerateTangentError(ValueError):
    pass


@dataclass(frozen=True)
class CanonicalFrame:
    rotation: np.ndarray  # (3, 3), rotation about world-up
    translation: np.ndarray  # (3,), vertical component zero

    @staticmethod
    def identity():
        return CanonicalFrame(np.eye(3), np.zeros(3))

    @staticmethod
    def from_angle(angle, planar_translation=(0.0, 0.0)):
        t = np.array([planar_translation[0], 0.0, planar_translation[1]])
        return CanonicalFrame(rot_y(angle), t)


def frame_from_pose(pose):
    """Canonical frame of a pose: its planar position and heading."""
    h = heading(pose)  # raises DegenerateHeadingError when undefined
    # rot_y(a) maps +X to (cos a, 0, -sin a); we need it to map +X to (h_x, 0, h_z).
    angle = np.arctan2(-h[1], h[0])
    t = np.array([pose.translation[0], 0.0, pose.translation[2]])
    return CanonicalFrame(rot_y(angle), t)


def frame_from_waypoint(waypoint, tangent):
    """Canonical frame placing `waypoint` at the origin with `tangent` along +X.

    The rotation angle is recovered exactly via atan2 of the planar tangent,
    which stays well defined even for a tangent antiparallel to +X.
    """
    tangent = np.asarray(tangent, dtype=float)
    planar = np.array([tangent[0], tangent[2]])
    norm = np.linalg.norm(planar)
    if norm < 1e-6:
        raise DegenerateTangentError("tangent has no planar component")
    planar /= norm
    angle = np.arctan2(-planar[1], planar[0])
    t = np.array([waypoint[0], 0.0, waypoint[2]])
    return CanonicalFrame(rot_y(angle), t)


def canonicalize(motion, frame):
    """Express a MotionClip or (T, 219) matrix in the canonical frame."""
    r_inv = frame.rotation.T
    if isinstance(motion, MotionClip):
        out = []
        for p in motion.frames:
            t = r_inv @ (p.translation - frame.translation)
            rots = p.rotations.copy()
            rots[0] = r_inv @ rots[0]
            out.append(Pose(translation=t, rotations=rots))
        return MotionClip(out, motion.frame_rate)
    return _canonicalize_rows(np.asarray(motion, dtype=float), r_inv, frame.translation)


def uncanonicalize(motion, frame):
    """Exact inverse of canonicalize: r -> R r + t, phi -> R phi."""
    r = frame.rotation
    if isinstance(motion, MotionClip):
        out = []
        for p in motion.frames:
            t = r @ p.translation + frame.translation
            rots = p.rotations.copy()
            rots[0] = r @ rots[0]
            out.append(Pose(translation=t, rotations=rots))
        return MotionClip(out, motion.frame_rate)
    matrix = np.asarray(motion, dtype=float)
    _check_rows(matrix)
    out = matrix.copy()
    out[:, :3] = matrix[:, :3] @ r.T + frame.translation
    phi = matrix[:, 3:12].reshape(-1, 3, 3)
    out[:, 3:12] = np.einsum("ij,tjk->tik", r, phi).reshape(-1, 9)
    return out


def _check_rows(matrix):
    if matrix.ndim != 2 or matrix.shape[1] != FRAME_DIM:
        raise ValueError(f"expected (T, {FRAME_DIM}) frame matrix, got {matrix.shape}")


def _canonicalize_rows(matrix, r_inv, translation):
    _check_rows(matrix)
    out = matrix.copy()
    out[:, :3] = (matrix[:, :3] - translation) @ r_inv.T
    phi = matrix[:, 3:12].reshape(-1, 3, 3)
    out[:, 3:12] = np.einsum("ij,tjk->tik", r_inv, phi).reshape(-1, 9)
    return out


def canonicalize_pose(pose, frame):
    return canonicalize(MotionClip([pose]), frame).frames[0]


def uncanonicalize_pose(pose, frame):
    return uncanonicalize(MotionClip([pose]), frame).frames[0]
