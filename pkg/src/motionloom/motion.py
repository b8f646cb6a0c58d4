"""Motion clip container and the 219-dim per-frame vectorization.

Frame layout: 3 root-translation scalars followed by 24 row-major 3x3
rotation matrices in skeleton joint order (3 + 24 * 9 = 219).
"""

import json
from dataclasses import dataclass

import numpy as np

from .rotations import is_rotation, nearest_rotation
from .skeleton import NUM_JOINTS, Pose

FRAME_DIM = 3 + NUM_JOINTS * 9  # 219


class FrameFormatError(ValueError):
    pass


@dataclass
class MotionClip:
    frames: list  # list of Pose
    frame_rate: float = 30.0

    def __post_init__(self):
        if len(self.frames) < 1:
            raise ValueError("clip needs at least one frame")
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be positive")

    def __len__(self):
        return len(self.frames)

    def validate(self):
        for p in self.frames:
            p.validate()
        return self

    def copy(self):
        return MotionClip([p.copy() for p in self.frames], self.frame_rate)

    def to_matrix(self):
        """Stack all frames into a (T, 219) array."""
        return np.stack([vectorize_frame(p) for p in self.frames])

    @staticmethod
    def from_matrix(matrix, frame_rate=30.0, orthonormalize=True):
        return MotionClip(
            [devectorize_frame(row, orthonormalize=orthonormalize) for row in matrix],
            frame_rate,
        )


def vectorize_frame(pose):
    """Pose -> length-219 vector (bit-exact layout)."""
    out = np.empty(FRAME_DIM)
    out[:3] = pose.translation
    out[3:] = pose.rotations.reshape(-1)
    return out


def devectorize_frame(vec, orthonormalize=True):
    """Length-219 vector -> Pose; 9-blocks projected to the nearest rotation."""
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (FRAME_DIM,):
        raise FrameFormatError(f"expected length-{FRAME_DIM} frame vector, got shape {vec.shape}")
    rotations = vec[3:].reshape(NUM_JOINTS, 3, 3).copy()
    if orthonormalize:
        for i in range(NUM_JOINTS):
            # Already-orthonormal blocks pass through untouched so the
            # vectorize/devectorize round trip stays bit-exact.
            if not is_rotation(rotations[i], tol=1e-9):
                rotations[i] = nearest_rotation(rotations[i])
    return Pose(translation=vec[:3].copy(), rotations=rotations)


def augment_rotate(clip, angle):
    """Rigidly rotate a whole clip about world-up through the first frame's root."""
    from .rotations import rot_y

    r = rot_y(angle)
    pivot = clip.frames[0].translation.copy()
    pivot[1] = 0.0
    out = []
    for p in clip.frames:
        t = r @ (p.translation - pivot) + pivot
        rots = p.rotations.copy()
        rots[0] = r @ rots[0]
        out.append(Pose(translation=t, rotations=rots))
    return MotionClip(out, clip.frame_rate)


def save_motion_json(clip, path):
    doc = {"frame_rate": clip.frame_rate, "frames": clip.to_matrix().tolist()}
    with open(path, "w") as f:
        json.dump(doc, f)


def load_motion_json(path):
    with open(path) as f:
        doc = json.load(f)
    frames = np.array(doc["frames"], dtype=float)
    if frames.ndim != 2 or frames.shape[1] != FRAME_DIM:
        raise FrameFormatError(f"motion file {path}: expected (T, {FRAME_DIM}) frames")
    return MotionClip.from_matrix(frames, frame_rate=float(doc["frame_rate"]))
