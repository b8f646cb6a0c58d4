"""Minimal BVH parsing, retargeting onto the 24-joint skeleton, and export."""

import numpy as np
from scipy.spatial.transform import Rotation

from .motion import MotionClip
from .skeleton import NUM_JOINTS, Pose, Skeleton, REQUIRED_LANDMARKS


class BvhParseError(ValueError):
    def __init__(self, line_no, message):
        super().__init__(f"BVH parse error at line {line_no}: {message}")
        self.line_no = line_no


class LandmarkMappingError(ValueError):
    def __init__(self, roles):
        super().__init__(f"BVH mapping leaves landmark roles unresolved: {sorted(roles)}")
        self.roles = roles


class BvhJoint:
    def __init__(self, name, parent, offset):
        self.name = name
        self.parent = parent  # index or None
        self.offset = offset
        self.channels = []


class BvhFile:
    """Raw parse result: joints in hierarchy order plus per-frame channel values."""

    def __init__(self, joints, frame_time, frames):
        self.joints = joints
        self.frame_time = frame_time
        self.frames = frames  # (n_frames, n_channels)

    @property
    def frame_rate(self):
        return 1.0 / self.frame_time

    def joint_rotation(self, frame_values, joint, cursor):
        """Rotation matrix for one joint's channels starting at `cursor`."""
        rot = np.eye(3)
        translation = np.zeros(3)
        axis_map = {"Xrotation": "x", "Yrotation": "y", "Zrotation": "z"}
        pos_map = {"Xposition": 0, "Yposition": 1, "Zposition": 2}
        for ch in joint.channels:
            v = frame_values[cursor]
            cursor += 1
            if ch in axis_map:
                rot = rot @ Rotation.from_euler(axis_map[ch], v, degrees=True).as_matrix()
            elif ch in pos_map:
                translation[pos_map[ch]] = v
            else:
                raise ValueError(f"unknown channel {ch}")
        return rot, translation, cursor


def parse_bvh(path):
    with open(path) as f:
        lines = f.readlines()
    tokens = []  # (line_no, token)
    for i, line in enumerate(lines, start=1):
        for tok in line.replace("{", " { ").replace("}", " } ").split():
            tokens.append((i, tok))
    pos = 0

    def peek():
        return tokens[pos][1] if pos < len(tokens) else None

    def take(expect=None):
        nonlocal pos
        if pos >= len(tokens):
            last = tokens[-1][0] if tokens else 0
            raise BvhParseError(last, f"unexpected end of file (wanted {expect or 'token'})")
        line_no, tok = tokens[pos]
        pos += 1
        if expect is not None and tok.upper() != expect.upper():
            raise BvhParseError(line_no, f"expected {expect!r}, got {tok!r}")
        return line_no, tok

    def take_floats(n):
        vals = []
        for _ in range(n):
            line_no, tok = take()
            try:
                vals.append(float(tok))
            except ValueError:
                raise BvhParseError(line_no, f"expected a number, got {tok!r}") from None
        return vals

    joints = []

    def parse_joint(parent):
        line_no, kw = take()
        if kw.upper() not in ("ROOT", "JOINT"):
            raise BvhParseError(line_no, f"expected ROOT/JOINT, got {kw!r}")
        _, name = take()
        take("{")
        take("OFFSET")
        offset = np.array(take_floats(3))
        joint = BvhJoint(name, parent, offset)
        idx = len(joints)
        joints.append(joint)
        line_no, kw = take()
        if kw.upper() == "CHANNELS":
            _, n = take()
            joint.channels = [take()[1] for _ in range(int(n))]
            line_no, kw = take()
        while kw.upper() in ("JOINT", "END"):
            if kw.upper() == "END":
                take()  # "Site"
                take("{")
                take("OFFSET")
                take_floats(3)
                take("}")
            else:
                pos_backtrack()
                parse_joint(idx)
            line_no, kw = take()
        if kw != "}":
            raise BvhParseError(line_no, f"expected '}}', got {kw!r}")

    def pos_backtrack():
        nonlocal pos
        pos -= 1

    take("HIERARCHY")
    parse_joint(None)
    take("MOTION")
    take("Frames:")
    _, nf = take()
    n_frames = int(nf)
    take("Frame")
    take("Time:")
    _, ft = take()
    frame_time = float(ft)
    n_channels = sum(len(j.channels) for j in joints)
    values = take_floats(n_frames * n_channels)
    frames = np.array(values).reshape(n_frames, n_channels)
    return BvhFile(joints, frame_time, frames)


def load_bvh(path, remap=None, skeleton=None, resample=True, scale=1.0):
    """Parse a BVH file and retarget it onto the 24-joint skeleton.

    `remap` maps source joint names to target joint names; by default joints
    map by identical name. Unmapped target joints keep identity rotations.
    """
    skeleton = skeleton or Skeleton.default()
    bvh = parse_bvh(path)
    source_names = {j.name for j in bvh.joints}
    remap = remap or {n: n for n in source_names if n in skeleton.names}
    mapped_targets = set(remap.values())

    unresolved = []
    for role in REQUIRED_LANDMARKS:
        idx = skeleton.landmark_index(role)
        chain = []
        while idx != -1:
            chain.append(skeleton.names[idx])
            idx = skeleton.parents[idx] if idx != 0 else -1
        # the root must be mapped; other landmarks need any non-root chain joint
        need = chain if role == "root" else chain[:-1]
        if not mapped_targets.intersection(need):
            unresolved.append(role)
    if unresolved:
        raise LandmarkMappingError(unresolved)

    target_index = {n: i for i, n in enumerate(skeleton.names)}
    frames = []
    for values in bvh.frames:
        rotations = np.tile(np.eye(3), (NUM_JOINTS, 1, 1))
        translation = np.zeros(3)
        cursor = 0
        for j, joint in enumerate(bvh.joints):
            rot, trans, cursor = bvh.joint_rotation(values, joint, cursor)
            if joint.parent is None:
                translation = trans * scale
            tname = remap.get(joint.name)
            if tname is not None:
                rotations[target_index[tname]] = rot
        frames.append(Pose(translation=translation, rotations=rotations))
    clip = MotionClip(frames, bvh.frame_rate)
    if resample and abs(clip.frame_rate - 30.0) > 1e-9:
        clip = resample_nearest(clip, 30.0)
    return skeleton, clip


def resample_nearest(clip, target_rate):
    duration = (len(clip) - 1) / clip.frame_rate
    n_out = int(round(duration * target_rate)) + 1
    idx = np.clip(np.round(np.arange(n_out) / target_rate * clip.frame_rate).astype(int), 0, len(clip) - 1)
    return MotionClip([clip.frames[i].copy() for i in idx], target_rate)


def export_bvh(clip, skeleton, path):
    """Write the clip with one ZYX-rotation joint per skeleton joint."""
    lines = ["HIERARCHY"]

    def emit(idx, depth):
        pad = "  " * depth
        kw = "ROOT" if idx == 0 else "JOINT"
        lines.append(f"{pad}{kw} {skeleton.names[idx]}")
        lines.append(pad + "{")
        off = skeleton.offsets[idx]
        lines.append(f"{pad}  OFFSET {off[0]:.6f} {off[1]:.6f} {off[2]:.6f}")
        if idx == 0:
            lines.append(
                f"{pad}  CHANNELS 6 Xposition Yposition Zposition Zrotation Yrotation Xrotation"
            )
        else:
            lines.append(f"{pad}  CHANNELS 3 Zrotation Yrotation Xrotation")
        kids = skeleton.children(idx)
        if not kids:
            lines.append(pad + "  End Site")
            lines.append(pad + "  {")
            lines.append(f"{pad}    OFFSET 0.000000 0.000000 0.000000")
            lines.append(pad + "  }")
        for c in kids:
            emit(c, depth + 1)
        lines.append(pad + "}")

    emit(0, 0)
    lines.append("MOTION")
    lines.append(f"Frames: {len(clip)}")
    lines.append(f"Frame Time: {1.0 / clip.frame_rate:.8f}")
    for p in clip.frames:
        vals = list(p.translation)
        for j in range(NUM_JOINTS):
            vals.extend(Rotation.from_matrix(p.rotations[j]).as_euler("ZYX", degrees=True))
        lines.append(" ".join(f"{v:.6f}" for v in vals))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
