"""Author the template poses shipped in motionloom/data/templates/.

Run from the repo root: python3 scripts/make_templates.py
"""

import json
import os

import numpy as np

from motionloom.motion import vectorize_frame
from motionloom.rotations import rot_axis_angle
from motionloom.skeleton import NUM_JOINTS, Pose, Skeleton, forward_kinematics

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "src", "motionloom", "data", "templates")


def identity_pose(translation):
    return Pose(translation=np.asarray(translation, dtype=float),
                rotations=np.tile(np.eye(3), (NUM_JOINTS, 1, 1)))


def with_arm_bend(pose, sk):
    for side in ("left", "right"):
        pose.rotations[sk.index(f"{side}_elbow")] = rot_axis_angle([0, 0, 1], 0.15)
    return pose


def neutral(sk):
    return with_arm_bend(identity_pose([0.0, 0.95, 0.0]), sk)


def sit(sk):
    pose = identity_pose([0.0, 0.53, 0.0])
    half_pi = np.pi / 2.0
    for side in ("left", "right"):
        pose.rotations[sk.index(f"{side}_hip")] = rot_axis_angle([0, 0, 1], half_pi)
        pose.rotations[sk.index(f"{side}_knee")] = rot_axis_angle([0, 0, 1], -half_pi)
    return with_arm_bend(pose, sk)


def reach(sk, shoulder_angle):
    pose = identity_pose([0.0, 0.95, 0.0])
    pose.rotations[sk.index("right_shoulder")] = rot_axis_angle([0, 0, 1], shoulder_angle)
    pose.rotations[sk.index("left_elbow")] = rot_axis_angle([0, 0, 1], 0.15)
    return pose


def main():
    sk = Skeleton.default()
    poses = {
        "neutral": neutral(sk),
        "sit": sit(sk),
        "reach_low": reach(sk, np.radians(30.0)),
        "reach_mid": reach(sk, np.radians(90.0)),
        "reach_high": reach(sk, np.radians(140.0)),
    }
    os.makedirs(OUT_DIR, exist_ok=True)
    for name, pose in poses.items():
        pose.validate()
        pos = forward_kinematics(sk, pose)
        print(f"{name}: pelvis={pos[0]}, r_hand={pos[sk.landmark_index('right_hand')]}, "
              f"toes y=({pos[sk.landmark_index('left_toe')][1]:.3f}, "
              f"{pos[sk.landmark_index('right_toe')][1]:.3f})")
        doc = {"frame_rate": 30.0, "frames": [vectorize_frame(pose).tolist()]}
        with open(os.path.join(OUT_DIR, f"{name}.json"), "w") as f:
            json.dump(doc, f)


if __name__ == "__main__":
    main()
