"""Procedural walking-clip generator (desk-scale substitute for mocap data).

The root follows a closed-form constant-speed, constant-turn-rate path. Foot
plants are placed along that path and the legs are solved with analytic
two-bone IK, so the stance toe is pinned to its plant point exactly. Arms
counter-swing sinusoidally.
"""

import numpy as np

from .motion import MotionClip
from .rotations import rot_axis_angle, rot_y
from .skeleton import NUM_JOINTS, Pose

PELVIS_WALK_HEIGHT = 0.88
ANKLE_REST_HEIGHT = 0.06
SWING_LIFT = 0.05
ARM_SWING = 0.35
ELBOW_BEND = 0.25
THIGH_LEN = 0.42
SHANK_LEN = 0.40


class GaitParameterError(ValueError):
    pass


def _root_planar(t, speed, turn_rate):
    """Closed-form integral of the constant-turn path; yaw(t) = turn_rate * t.

    Heading at yaw a is (cos a, -sin a) in the (x, z) plane.
    """
    if abs(turn_rate) < 1e-12:
        return np.array([speed * t, 0.0])
    w = turn_rate
    return np.array([speed / w * np.sin(w * t), speed / w * (np.cos(w * t) - 1.0)])


def _frame_from_y(direction, forward):
    """Rotation whose -Y column is `direction`, with +X pulled toward `forward`."""
    c2 = -direction
    c1 = forward - np.dot(forward, c2) * c2
    n = np.linalg.norm(c1)
    if n < 1e-9:
        c1 = np.array([0.0, 0.0, 1.0]) - c2[2] * c2
        n = np.linalg.norm(c1)
    c1 = c1 / n
    c3 = np.cross(c1, c2)
    return np.column_stack([c1, c2, c3])


def _two_bone_ik(hip, ankle, pole):
    """Knee position for a thigh/shank chain from hip to ankle, bending toward `pole`."""
    delta = ankle - hip
    d = np.linalg.norm(delta)
    d = np.clip(d, abs(THIGH_LEN - SHANK_LEN) + 1e-4, THIGH_LEN + SHANK_LEN - 1e-4)
    u = delta / np.linalg.norm(delta)
    cos_a = (THIGH_LEN**2 + d**2 - SHANK_LEN**2) / (2.0 * THIGH_LEN * d)
    cos_a = np.clip(cos_a, -1.0, 1.0)
    sin_a = np.sqrt(1.0 - cos_a**2)
    w = pole - np.dot(pole, u) * u
    n = np.linalg.norm(w)
    w = w / n if n > 1e-9 else np.array([0.0, 1.0, 0.0])
    return hip + THIGH_LEN * (cos_a * u + sin_a * w), d


def _smoothstep(s):
    return s * s * (3.0 - 2.0 * s)


def generate_gait_clip(speed=1.2, turn_rate=0.0, duration=4.0, stride_freq=1.3, seed=0,
                       frame_rate=30.0, skeleton=None):
    """Deterministic procedural walk. Starts at the origin facing +X."""
    from .skeleton import Skeleton

    if not 0.3 <= speed <= 2.0:
        raise GaitParameterError(f"speed {speed} outside [0.3, 2.0] m/s")
    if abs(turn_rate) > 1.0:
        raise GaitParameterError(f"|turn_rate| {abs(turn_rate)} exceeds 1.0 rad/s")
    if duration < 2.0:
        raise GaitParameterError(f"duration {duration} below 2 s")
    if stride_freq <= 0:
        raise GaitParameterError("stride_freq must be positive")
    skeleton = skeleton or Skeleton.default()

    rng = np.random.default_rng(seed)
    phase0 = rng.uniform(0.0, 1.0)  # global gait-cycle phase offset
    n_frames = int(round(duration * frame_rate)) + 1
    dt = 1.0 / frame_rate

    hip_l = skeleton.offsets[skeleton.index("left_hip")]
    hip_r = skeleton.offsets[skeleton.index("right_hip")]
    toe_off = skeleton.offsets[skeleton.index("left_toe")]

    def plant(step_idx, leg_offset):
        """Planar plant point and yaw for stance step `step_idx` of one leg."""
        t_c = (step_idx + 0.25 - leg_offset - phase0) / stride_freq
        yaw = turn_rate * t_c
        planar = _root_planar(t_c, speed, turn_rate)
        lateral = rot_y(yaw) @ (hip_l if leg_offset == 0.0 else hip_r)
        return planar + np.array([lateral[0], lateral[2]]), yaw

    def foot_targets(t, leg_offset):
        """Ankle world position and foot yaw for one leg at time t."""
        c_abs = stride_freq * t + leg_offset + phase0
        n = np.floor(c_abs)
        c = c_abs - n
        if c < 0.5:  # stance: pinned at this step's plant
            p, yaw = plant(n, leg_offset)
            return np.array([p[0], ANKLE_REST_HEIGHT, p[1]]), yaw
        s = _smoothstep((c - 0.5) / 0.5)
        p0, yaw0 = plant(n, leg_offset)
        p1, yaw1 = plant(n + 1, leg_offset)
        p = p0 + s * (p1 - p0)
        y = ANKLE_REST_HEIGHT + SWING_LIFT * np.sin(np.pi * s)
        return np.array([p[0], y, p[1]]), yaw0 + s * (yaw1 - yaw0)

    frames = []
    for k in range(n_frames):
        t = k * dt
        yaw = turn_rate * t
        planar = _root_planar(t, speed, turn_rate)
        root = np.array([planar[0], PELVIS_WALK_HEIGHT, planar[1]])
        w_pelvis = rot_y(yaw)
        fwd = w_pelvis @ np.array([1.0, 0.0, 0.0])

        rotations = np.tile(np.eye(3), (NUM_JOINTS, 1, 1))
        rotations[0] = w_pelvis

        for side, leg_offset in (("left", 0.0), ("right", 0.5)):
            hip_off = hip_l if side == "left" else hip_r
            i_hip = skeleton.index(f"{side}_hip")
            i_knee = skeleton.index(f"{side}_knee")
            i_ankle = skeleton.index(f"{side}_ankle")
            hip = root + w_pelvis @ hip_off
            ankle, foot_yaw = foot_targets(t, leg_offset)
            knee, _ = _two_bone_ik(hip, ankle, fwd)
            w_hip = _frame_from_y((knee - hip) / np.linalg.norm(knee - hip), fwd)
            w_knee = _frame_from_y((ankle - knee) / np.linalg.norm(ankle - knee), fwd)
            w_ankle = rot_y(foot_yaw)
            rotations[i_hip] = w_pelvis.T @ w_hip
            rotations[i_knee] = w_hip.T @ w_knee
            rotations[i_ankle] = w_knee.T @ w_ankle

        # arms counter-swing: left arm in phase with the right leg
        for side, leg_offset in (("left", 0.5), ("right", 0.0)):
            swing = ARM_SWING * np.sin(2.0 * np.pi * (stride_freq * t + leg_offset + phase0))
            i_sh = skeleton.index(f"{side}_shoulder")
            i_el = skeleton.index(f"{side}_elbow")
            rotations[i_sh] = rot_axis_angle([0.0, 0.0, 1.0], swing)
            rotations[i_el] = rot_axis_angle([0.0, 0.0, 1.0], ELBOW_BEND)

        frames.append(Pose(translation=root, rotations=rotations))
    return MotionClip(frames, frame_rate)


def blend_to_pose(clip, target_pose, blend_frames):
    """Append a smooth blend from the clip's last frame into `target_pose`.

    Rotations slerp, translation lerps, both with smoothstep easing. Used to
    build synthetic transition clips for inbetweener training.
    """
    from .rotations import slerp

    last = clip.frames[-1]
    frames = [p.copy() for p in clip.frames]
    for i in range(1, blend_frames + 1):
        s = _smoothstep(i / blend_frames)
        t = (1.0 - s) * last.translation + s * target_pose.translation
        rots = np.empty((NUM_JOINTS, 3, 3))
        for j in range(NUM_JOINTS):
            rots[j] = slerp(last.rotations[j], target_pose.rotations[j], s)
        frames.append(Pose(translation=t, rotations=rots))
    return MotionClip(frames, clip.frame_rate)
