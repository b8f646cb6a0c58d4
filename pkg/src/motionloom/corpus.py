"""Synthetic training corpus: gait clips over a (speed, turn-rate) grid, blended
transition clips for the inbetweener, and the walk-out pose database."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .canonical import canonicalize, frame_from_pose, frame_from_waypoint, uncanonicalize_pose
from .gait import blend_to_pose, generate_gait_clip
from .motion import devectorize_frame, load_motion_json, save_motion_json, vectorize_frame
from .skeleton import forward_kinematics

log = logging.getLogger(__name__)

SPEED_RANGE = (0.6, 1.6)
TURN_RATES = (-0.4, -0.2, 0.0, 0.2, 0.4)


def gait_grid(n_clips):
    """Deterministic (speed, turn_rate) pairs covering the walkable envelope."""
    if n_clips < 1:
        raise ValueError("need at least one clip")
    speeds = np.linspace(SPEED_RANGE[0], SPEED_RANGE[1], n_clips)
    return [(float(speeds[i]), TURN_RATES[i % len(TURN_RATES)]) for i in range(n_clips)]


def generate_corpus(out_dir, n_clips=8, seed=0, duration=4.0):
    """Write gait clips plus a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (speed, turn) in enumerate(gait_grid(n_clips)):
        clip = generate_gait_clip(speed=speed, turn_rate=turn, duration=duration, seed=seed + i)
        name = f"clip_{i:03d}.json"
        save_motion_json(clip, out_dir / name)
        entries.append({"path": name, "tags": ["gait", f"speed={speed:.2f}", f"turn={turn:.2f}"]})
    manifest = out_dir / "manifest.json"
    with open(manifest, "w") as f:
        json.dump({"clips": entries}, f, indent=2)
        f.write("\n")
    return manifest


def load_corpus(manifest_path):
    """Read a corpus manifest; returns [(MotionClip, tags)]."""
    manifest_path = Path(manifest_path)
    with open(manifest_path) as f:
        doc = json.load(f)
    out = []
    for entry in doc["clips"]:
        clip = load_motion_json(manifest_path.parent / entry["path"])
        out.append((clip, list(entry.get("tags", []))))
    return out


SETTLE_OFFSETS = (0.4, 0.9, 1.4)  # metres ahead of the walk end for the target pose
WALKOUT_OFFSETS = (1.0, 1.5)  # metres behind the walk start for the static pose
RELATIVE_HEADINGS = (0.0, np.pi, np.pi / 2, -np.pi / 2)  # target yaw vs. walk yaw


def _offset_frame(pose, distance, relative_heading=0.0):
    """Canonical frame `distance` metres ahead of the pose along its heading,
    facing the heading rotated by `relative_heading` (a sit anchor typically
    faces back toward the approach)."""
    from .skeleton import heading

    h = heading(pose)
    point = np.array([pose.translation[0] + distance * h[0], 0.0,
                      pose.translation[2] + distance * h[1]])
    c, s = np.cos(relative_heading), np.sin(relative_heading)
    # rotate the planar heading (x, z) about world-up
    facing = np.array([h[0] * c + h[1] * s, 0.0, -h[0] * s + h[1] * c])
    return frame_from_waypoint(point, facing)


def transition_corpus(gait_clips, templates, blend_frames=30):
    """Transition clips for the inbetweener: gait blending into a template
    pose (settle-in) and a static template pose blending back into gait
    (walk-out). Target placements vary in planar offset and relative heading
    so the model learns to bridge a stopped walk and an anchor from any
    approach direction."""
    from .motion import MotionClip

    out = []
    for ci, clip in enumerate(gait_clips):
        for ti, name in enumerate(sorted(templates)):
            ahead = SETTLE_OFFSETS[(ci + ti) % len(SETTLE_OFFSETS)]
            rel = RELATIVE_HEADINGS[(ci + 2 * ti) % len(RELATIVE_HEADINGS)]
            frame = _offset_frame(clip.frames[-1], ahead, rel)
            target = uncanonicalize_pose(templates[name], frame)
            out.append(blend_to_pose(clip, target, blend_frames))
        for ti, name in enumerate(sorted(templates)):
            behind = WALKOUT_OFFSETS[(ci + ti) % len(WALKOUT_OFFSETS)]
            rel = RELATIVE_HEADINGS[(ci + 2 * ti + 1) % len(RELATIVE_HEADINGS)]
            frame = _offset_frame(clip.frames[0], -behind, rel)
            pose = uncanonicalize_pose(templates[name], frame)
            hold = MotionClip([pose.copy() for _ in range(2)], clip.frame_rate)
            lead_in = blend_to_pose(hold, clip.frames[0], blend_frames)
            out.append(MotionClip(lead_in.frames + [p.copy() for p in clip.frames[1:]],
                                  clip.frame_rate))
    return out


@dataclass
class WalkPoseDB:
    """Canonicalized single walking poses keyed by gait-phase tag."""

    entries: list = field(default_factory=list)  # [(tag, np.ndarray(219,))]

    def __len__(self):
        return len(self.entries)

    def save(self, path):
        with open(path, "w") as f:
            json.dump({"poses": [{"tag": t, "frame": v.tolist()} for t, v in self.entries]}, f)

    @staticmethod
    def load(path):
        with open(path) as f:
            doc = json.load(f)
        return WalkPoseDB(
            entries=[(p["tag"], np.array(p["frame"], dtype=float)) for p in doc["poses"]]
        )


def harvest_walkout_poses(gait_clips, skeleton, ground_tol=0.015):
    """One mid-stance pose per clip: the grounded-right-toe frame with maximal
    planar toe separation, stored canonicalized to its own heading."""
    db = WalkPoseDB()
    for ci, clip in enumerate(gait_clips):
        best, best_sep = None, -1.0
        for fi, pose in enumerate(clip.frames):
            pos = forward_kinematics(skeleton, pose, validate=False)
            rt = pos[skeleton.landmark_index("right_toe")]
            lt = pos[skeleton.landmark_index("left_toe")]
            if rt[1] > ground_tol:
                continue
            sep = float(np.linalg.norm(rt[[0, 2]] - lt[[0, 2]]))
            if sep > best_sep:
                best, best_sep = fi, sep
        if best is None:
            log.warning("clip %d has no grounded right-toe frame; skipped", ci)
            continue
        pose = clip.frames[best]
        canon = canonicalize(vectorize_frame(pose)[None, :], frame_from_pose(pose))[0]
        db.entries.append(("mid-stance", canon))
    return db


class EmptyPoseDatabaseError(ValueError):
    pass


def select_walkout_pose(db, tangent, point=None):
    """First mid-stance pose, rotated so its heading equals `tangent` and
    translated so its root sits over `point` (planar; height preserved)."""
    if len(db) == 0:
        raise EmptyPoseDatabaseError("walk-out pose database is empty")
    for tag, vec in db.entries:
        if tag == "mid-stance":
            break
    else:
        tag, vec = db.entries[0]
    pose = devectorize_frame(vec)
    if point is None:
        point = np.zeros(3)
    frame = frame_from_waypoint(np.asarray(point, dtype=float), np.asarray(tangent, dtype=float))
    return uncanonicalize_pose(pose, frame)
