"""Chaining state machine: seed -> walk -> transition-in -> (same-location
actions) -> transition-out -> walk -> ... until every action is executed."""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import transnet, walknet
from .anchor import ActionKeypoints, AnchorPose, UnreachableKeypointsError, solve_anchor
from .corpus import select_walkout_pose
from .motion import MotionClip
from .scene import UnreachableError, build_grid, plan_path

log = logging.getLogger(__name__)

WALK = "Walk"
TRANSITION_IN = "TransitionIn"
TRANSITION_OUT = "TransitionOut"

STOP_DISTANCE = 1.2  # planar metres from the anchor root that trigger transition-in
WALKOUT_DISTANCE = 1.5  # delta: arc length along the next path for the walk-out pose


class PlanningError(RuntimeError):
    def __init__(self, message, action_index):
        super().__init__(message)
        self.action_index = action_index


class ExecutionError(RuntimeError):
    def __init__(self, message, partial_clip=None, phase_log=None):
        super().__init__(message)
        self.partial_clip = partial_clip
        self.phase_log = phase_log


class PhaseLogError(ValueError):
    pass


@dataclass
class PhaseEntry:
    phase: str  # Walk | TransitionIn | TransitionOut
    start: int  # first frame, inclusive
    end: int  # past-the-end frame
    ref: int = None  # Walk/TransitionOut: leg index; TransitionIn: action index

    def to_dict(self):
        return {"phase": self.phase, "start": self.start, "end": self.end, "ref": self.ref}

    @staticmethod
    def from_dict(doc):
        return PhaseEntry(phase=doc["phase"], start=doc["start"], end=doc["end"], ref=doc.get("ref"))


@dataclass
class PhaseLog:
    entries: list = field(default_factory=list)

    def validate(self, total_frames):
        """Half-open ranges must tile [0, total_frames) exactly, in order."""
        cursor = 0
        for e in self.entries:
            if e.start != cursor:
                raise PhaseLogError(f"phase {e.phase} starts at {e.start}, expected {cursor}")
            if e.end <= e.start:
                raise PhaseLogError(f"phase {e.phase} has empty range [{e.start}, {e.end})")
            cursor = e.end
        if cursor != total_frames:
            raise PhaseLogError(f"phases cover {cursor} frames, clip has {total_frames}")

    def to_dict(self):
        return {"entries": [e.to_dict() for e in self.entries]}

    @staticmethod
    def from_dict(doc):
        return PhaseLog(entries=[PhaseEntry.from_dict(e) for e in doc["entries"]])


@dataclass
class SynthesisPlan:
    seed: MotionClip
    actions: list  # ActionKeypoints, synthesis order
    anchors: list  # AnchorPose per action
    groups: list  # [[action indices]] consecutive same-location chains
    paths: list  # PlannedPath per group
    delta: float = WALKOUT_DISTANCE
    arrive_radius: float = walknet.ARRIVE_RADIUS
    stop_distance: float = STOP_DISTANCE

    def __post_init__(self):
        if self.delta <= self.arrive_radius:
            raise ValueError(f"delta {self.delta} must exceed arrive_radius {self.arrive_radius}")

    def to_dict(self):
        return {
            "actions": [a.to_dict() for a in self.actions],
            "anchors": [a.to_dict() for a in self.anchors],
            "groups": [list(g) for g in self.groups],
            "paths": [p.to_dict() for p in self.paths],
            "delta": self.delta,
            "arrive_radius": self.arrive_radius,
            "stop_distance": self.stop_distance,
        }

    @staticmethod
    def from_dict(doc, seed=None):
        from .scene import PlannedPath

        return SynthesisPlan(
            seed=seed,
            actions=[ActionKeypoints.from_dict(a) for a in doc["actions"]],
            anchors=[AnchorPose.from_dict(a) for a in doc["anchors"]],
            groups=[list(g) for g in doc["groups"]],
            paths=[PlannedPath.from_dict(p) for p in doc["paths"]],
            delta=doc.get("delta", WALKOUT_DISTANCE),
            arrive_radius=doc.get("arrive_radius", walknet.ARRIVE_RADIUS),
            stop_distance=doc.get("stop_distance", STOP_DISTANCE),
        )


def _planar(v):
    return np.array([v[0], v[2]])


def plan(scene, seed, actions, skeleton, cell_size=0.1, agent_radius=0.3, spacing=1.0,
         delta=WALKOUT_DISTANCE, arrive_radius=walknet.ARRIVE_RADIUS, stop_distance=STOP_DISTANCE,
         templates=None):
    """Solve every anchor, group same-location actions, and plan one A* leg
    per group from the previous location."""
    grid = build_grid(scene, cell_size=cell_size, agent_radius=agent_radius)
    anchors = []
    for i, action in enumerate(actions):
        try:
            anchors.append(solve_anchor(action, skeleton, templates=templates))
        except UnreachableKeypointsError as exc:
            raise PlanningError(f"action {i} has unreachable keypoints: {exc}", i) from exc

    groups = []
    for i, anchor in enumerate(anchors):
        here = _planar(anchor.pose.translation)
        if groups:
            rep = _planar(anchors[groups[-1][0]].pose.translation)
            if np.linalg.norm(here - rep) < arrive_radius:
                groups[-1].append(i)
                continue
        groups.append([i])

    paths = []
    prev = _planar(seed.frames[-1].translation)
    for group in groups:
        goal = _planar(anchors[group[0]].pose.translation)
        try:
            # anchor roots may sit on furniture, inside the inflated footprint:
            # allow snapping up to the transition trigger distance
            paths.append(plan_path(grid, prev, goal, spacing=spacing, snap_dist=stop_distance))
        except UnreachableError as exc:
            raise PlanningError(f"no path to action {group[0]}: {exc}", group[0]) from exc
        prev = goal
    return SynthesisPlan(seed=seed, actions=list(actions), anchors=anchors, groups=groups,
                         paths=paths, delta=delta, arrive_radius=arrive_radius,
                         stop_distance=stop_distance)


def _goals_after(path, min_arc):
    """Waypoint/tangent goals at arc length beyond min_arc (always keeps the
    final waypoint)."""
    pts = path.waypoints[:, [0, 2]]
    arcs = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    goals = [(path.waypoints[i], path.tangents[i]) for i in range(len(path)) if arcs[i] > min_arc]
    if not goals:
        goals = [(path.waypoints[-1], path.tangents[-1])]
    return goals


def execute(plan_, walk_params, walk_config, k, trans_params, trans_config, m, pose_db,
            frame_rate=30.0, max_walk_frames=2000):
    """Run the plan; returns (MotionClip, PhaseLog)."""
    half = m // 2
    seed_mat = plan_.seed.to_matrix()
    if len(seed_mat) < max(k, half):
        raise ExecutionError(f"seed needs at least {max(k, half)} frames, has {len(seed_mat)}")
    frames = [row.copy() for row in seed_mat]
    entries = []
    if not plan_.actions:
        log_ = PhaseLog([PhaseEntry(WALK, 0, len(frames), ref=None)])
        return MotionClip.from_matrix(np.stack(frames), frame_rate), log_

    walk_start = 0
    resume_arc = 0.0
    for gi, group in enumerate(plan_.groups):
        path = plan_.paths[gi]
        anchor_xz = _planar(plan_.anchors[group[0]].pose.translation)
        goals = _goals_after(path, resume_arc)

        def stop(row, xz=anchor_xz):
            return np.linalg.norm(_planar(row) - xz) < plan_.stop_distance

        try:
            clip, _ = walknet.rollout(walk_params, walk_config, np.stack(frames[-k:]), goals,
                                      arrive_radius=plan_.arrive_radius, max_frames=max_walk_frames,
                                      stop_predicate=stop, frame_rate=frame_rate)
        except walknet.RolloutError as exc:
            partial = MotionClip.from_matrix(np.stack(frames), frame_rate)
            raise ExecutionError(f"walk leg {gi} did not converge: {exc}", partial,
                                 PhaseLog(entries)) from exc
        frames.extend(row for row in clip.to_matrix()[k:])
        if len(frames) > walk_start:
            entries.append(PhaseEntry(WALK, walk_start, len(frames), ref=gi))

        for ai in group:
            start = len(frames)
            tclip = transnet.infill(trans_params, trans_config, m, np.stack(frames[-half:]),
                                    plan_.anchors[ai].pose, frame_rate=frame_rate)
            frames.extend(row for row in tclip.to_matrix()[half:])
            entries.append(PhaseEntry(TRANSITION_IN, start, len(frames), ref=ai))

        if gi < len(plan_.groups) - 1:
            nxt = plan_.paths[gi + 1]
            delta = plan_.delta
            if delta > 0.8 * nxt.length:
                delta = 0.8 * nxt.length
                log.warning("walk-out distance clamped to %.2f m on leg %d", delta, gi + 1)
            point, tangent = nxt.point_at_arc_length(delta)
            target = select_walkout_pose(pose_db, tangent, point)
            start = len(frames)
            tclip = transnet.infill(trans_params, trans_config, m, np.stack(frames[-half:]),
                                    target, frame_rate=frame_rate)
            frames.extend(row for row in tclip.to_matrix()[half:])
            entries.append(PhaseEntry(TRANSITION_OUT, start, len(frames), ref=gi + 1))
            walk_start = len(frames)
            resume_arc = delta
    log_ = PhaseLog(entries)
    log_.validate(len(frames))
    return MotionClip.from_matrix(np.stack(frames), frame_rate), log_
