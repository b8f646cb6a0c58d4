"""Rigid 24-joint skeleton, pose representation, and forward kinematics."""

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .rotations import FORWARD, is_rotation

NUM_JOINTS = 24
REQUIRED_LANDMARKS = ("root", "left_toe", "right_toe", "left_hand", "right_hand", "head")


class SkeletonError(ValueError):
    pass


class InvalidPoseError(ValueError):
    pass


class UnknownLandmarkError(KeyError):
    pass


class DegenerateHeadingError(ValueError):
    """Raised when the projected forward axis vanishes (facing straight up/down)."""


@dataclass(frozen=True)
class Skeleton:
    """Immutable joint hierarchy. Joints are topologically ordered (parent < child)."""

    names: tuple
    parents: tuple  # parent index per joint; -1 for the root
    offsets: np.ndarray  # (24, 3) bind offsets in meters
    landmarks: dict  # role -> joint index

    def __post_init__(self):
        if len(self.names) != NUM_JOINTS or len(self.parents) != NUM_JOINTS:
            raise SkeletonError(f"expected {NUM_JOINTS} joints, got {len(self.names)}")
        if self.parents[0] != -1:
            raise SkeletonError("joint 0 must be the root (no parent)")
        for i, p in enumerate(self.parents[1:], start=1):
            if not 0 <= p < i:
                raise SkeletonError(f"joint {i} parent {p} breaks topological order")
        if not np.all(np.isfinite(self.offsets)):
            raise SkeletonError("non-finite bind offset")
        for role in REQUIRED_LANDMARKS:
            if role not in self.landmarks:
                raise SkeletonError(f"missing required landmark role {role!r}")
        for role, idx in self.landmarks.items():
            if not 0 <= idx < NUM_JOINTS:
                raise SkeletonError(f"landmark {role!r} points at invalid joint {idx}")

    def index(self, name):
        return self.names.index(name)

    def landmark_index(self, role):
        try:
            return self.landmarks[role]
        except KeyError:
            raise UnknownLandmarkError(
                f"unknown landmark {role!r}; known: {sorted(self.landmarks)}"
            ) from None

    def children(self, idx):
        return [c for c, p in enumerate(self.parents) if p == idx]

    def rest_pose(self):
        """Standing pose: identity rotations, pelvis lifted to its bind height."""
        return Pose(translation=self.offsets[0].copy(), rotations=np.tile(np.eye(3), (NUM_JOINTS, 1, 1)))

    @staticmethod
    def from_dict(doc):
        joints = doc["joints"]
        names = tuple(j["name"] for j in joints)
        name_to_idx = {n: i for i, n in enumerate(names)}
        parents = []
        for j in joints:
            p = j["parent"]
            if p is None:
                parents.append(-1)
            elif isinstance(p, str):
                parents.append(name_to_idx[p])
            else:
                parents.append(int(p))
        offsets = np.array([j["offset"] for j in joints], dtype=float)
        landmarks = {role: name_to_idx[name] for role, name in doc["landmarks"].items()}
        return Skeleton(names=names, parents=tuple(parents), offsets=offsets, landmarks=landmarks)

    @staticmethod
    def load(path):
        with open(path) as f:
            return Skeleton.from_dict(json.load(f))

    @staticmethod
    def default():
        text = resources.files("motionloom.data").joinpath("skeleton_default.json").read_text()
        return Skeleton.from_dict(json.loads(text))

    def to_dict(self):
        return {
            "joints": [
                {
                    "name": n,
                    "parent": None if p == -1 else self.names[p],
                    "offset": list(map(float, o)),
                }
                for n, p, o in zip(self.names, self.parents, self.offsets)
            ],
            "landmarks": {role: self.names[idx] for role, idx in self.landmarks.items()},
        }


@dataclass
class Pose:
    """Root translation plus 24 rotation matrices (index 0 = global orientation)."""

    translation: np.ndarray  # (3,)
    rotations: np.ndarray  # (24, 3, 3)

    def validate(self, tol=1e-6):
        if self.rotations.shape != (NUM_JOINTS, 3, 3):
            raise InvalidPoseError(f"rotations shape {self.rotations.shape}")
        if not np.all(np.isfinite(self.translation)):
            raise InvalidPoseError("non-finite translation")
        for i in range(NUM_JOINTS):
            if not is_rotation(self.rotations[i], tol=tol):
                raise InvalidPoseError(f"joint {i} rotation is not orthonormal (det +1)")
        return self

    def copy(self):
        return Pose(self.translation.copy(), self.rotations.copy())


def forward_kinematics(skeleton, pose, validate=True):
    """World positions of all 24 joints. position[0] = root translation."""
    if validate:
        pose.validate()
    positions = np.empty((NUM_JOINTS, 3))
    world_rot = np.empty((NUM_JOINTS, 3, 3))
    positions[0] = pose.translation
    world_rot[0] = pose.rotations[0]
    for c in range(1, NUM_JOINTS):
        p = skeleton.parents[c]
        positions[c] = positions[p] + world_rot[p] @ skeleton.offsets[c]
        world_rot[c] = world_rot[p] @ pose.rotations[c]
    return positions


def landmark_position(skeleton, pose, role, validate=True):
    """World position of a registered landmark joint."""
    idx = skeleton.landmark_index(role)
    return forward_kinematics(skeleton, pose, validate=validate)[idx]


def heading(pose):
    """Unit planar (x, z) heading from the root rotation's forward column."""
    fwd = pose.rotations[0] @ FORWARD
    planar = np.array([fwd[0], fwd[2]])
    norm = np.linalg.norm(planar)
    if norm < 1e-6:
        raise DegenerateHeadingError("character facing straight up/down; heading undefined")
    return planar / norm
