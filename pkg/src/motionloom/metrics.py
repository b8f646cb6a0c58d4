"""Quantitative evaluation: foot skate, keypoint residuals, path deviation,
scene penetration."""

import json
from dataclasses import dataclass, field

import numpy as np

from .skeleton import forward_kinematics

FOOT_SKATE_H_CM = 2.5


@dataclass
class MetricReport:
    foot_skate_cm_per_frame: float
    keypoint_error_cm: list  # per action, max residual over that action's targets
    path_deviation_m: tuple  # (max, mean)
    penetration_frames: int
    frames_total: int

    def to_dict(self):
        return {
            "foot_skate_cm_per_frame": self.foot_skate_cm_per_frame,
            "keypoint_error_cm": self.keypoint_error_cm,
            "path_deviation_m": {"max": self.path_deviation_m[0], "mean": self.path_deviation_m[1]},
            "penetration_frames": self.penetration_frames,
            "frames_total": self.frames_total,
        }

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)


def toe_track(clip, skeleton, which="right_toe"):
    return np.array(
        [forward_kinematics(skeleton, p, validate=False)[skeleton.landmark_index(which)] for p in clip.frames]
    )


def foot_skate(clip, skeleton, floor_height=0.0, h_cm=FOOT_SKATE_H_CM, which="right_toe", both_feet=False):
    """Mean per-frame foot-skate in cm: planar toe speed weighted by
    2 - 2^(h/H) while the toe is within height H of the floor."""
    if len(clip) < 2:
        raise ValueError("foot_skate needs at least 2 frames")
    if both_feet:
        return 0.5 * (
            foot_skate(clip, skeleton, floor_height, h_cm, "left_toe")
            + foot_skate(clip, skeleton, floor_height, h_cm, "right_toe")
        )
    toes = toe_track(clip, skeleton, which)
    h = (toes[1:, 1] - floor_height) * 100.0
    v = np.linalg.norm(np.diff(toes[:, [0, 2]], axis=0), axis=1) * 100.0
    contrib = v * (2.0 - np.exp2(h / h_cm)) * (h <= h_cm)
    return float(contrib.sum() / (len(clip) - 1))


def keypoint_error(clip, skeleton, plan, phase_log):
    """Per-action max FK residual (cm) at each TransitionIn's final frame."""
    if phase_log is None:
        raise ValueError("keypoint_error requires a phase log")
    errors = []
    tin = [e for e in phase_log.entries if e.phase == "TransitionIn"]
    for entry in tin:
        action_idx = entry.ref
        if action_idx is None or action_idx >= len(plan.actions):
            continue
        pose = clip.frames[entry.end - 1]
        residuals = []
        for role, target in plan.actions[action_idx].targets:
            pos = forward_kinematics(skeleton, pose, validate=False)[skeleton.landmark_index(role)]
            residuals.append(np.linalg.norm(pos - target) * 100.0)
        errors.append(max(residuals))
    return errors


def path_deviation(clip, paths, phase_log):
    """(max, mean) planar distance from the root to the nearest path point,
    over Walk-phase frames only."""
    dists = []
    walk_entries = [e for e in phase_log.entries if e.phase == "Walk"]
    for entry in walk_entries:
        if entry.ref is None or entry.ref >= len(paths):
            continue
        path = paths[entry.ref]
        pts = path.waypoints[:, [0, 2]]
        for p in clip.frames[entry.start : entry.end]:
            root = np.array([p.translation[0], p.translation[2]])
            dists.append(_dist_to_polyline(root, pts))
    if not dists:
        return (0.0, 0.0)
    return (float(np.max(dists)), float(np.mean(dists)))


def _dist_to_polyline(point, pts):
    if len(pts) == 1:
        return float(np.linalg.norm(point - pts[0]))
    best = np.inf
    for a, b in zip(pts[:-1], pts[1:]):
        ab = b - a
        denom = float(ab @ ab)
        t = 0.0 if denom == 0 else np.clip((point - a) @ ab / denom, 0.0, 1.0)
        best = min(best, float(np.linalg.norm(point - (a + t * ab))))
    return best


def penetration_frames(clip, grid_uninflated, phase_log):
    """Walk-phase frames whose root planar cell is blocked in the raw grid."""
    count = 0
    for entry in phase_log.entries:
        if entry.phase != "Walk":
            continue
        for p in clip.frames[entry.start : entry.end]:
            cell = grid_uninflated.world_to_cell([p.translation[0], p.translation[2]])
            if grid_uninflated.in_bounds(cell) and grid_uninflated.blocked[cell]:
                count += 1
    return count


def evaluate(clip, skeleton, plan, phase_log, grid_uninflated, paths=None, floor_height=0.0):
    return MetricReport(
        foot_skate_cm_per_frame=foot_skate(clip, skeleton, floor_height=floor_height),
        keypoint_error_cm=keypoint_error(clip, skeleton, plan, phase_log),
        path_deviation_m=path_deviation(clip, paths if paths is not None else plan.paths, phase_log),
        penetration_frames=penetration_frames(clip, grid_uninflated, phase_log),
        frames_total=len(clip),
    )
