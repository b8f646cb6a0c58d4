"""HTTP service backing the browser UI: scene upload, anchor solving, and
asynchronous synthesis jobs over shared immutable weights."""

import logging
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import corpus as corpus_mod
from . import metrics, orchestrator, transnet, walknet
from .anchor import (
    ActionKeypoints,
    Instruction,
    KeypointFormatError,
    LabelNotFoundError,
    UnreachableKeypointsError,
    UnsupportedVerbError,
    keypoints_from_instruction,
    load_templates,
    solve_anchor,
)
from .config import Config
from .gait import generate_gait_clip
from .motion import MotionClip, load_motion_json, vectorize_frame
from .scene import Scene, build_grid, uninflated_grid
from .skeleton import forward_kinematics

log = logging.getLogger(__name__)


class SceneBody(BaseModel):
    floor_height: float = 0.0
    bounds: dict
    obstacles: list = []


class KeypointBody(BaseModel):
    role: str
    position: List[float]


class SolveAnchorBody(BaseModel):
    scene_id: str
    keypoints: List[KeypointBody]
    tag: str = "custom"


class ActionBody(BaseModel):
    tag: str = "custom"
    targets: List[KeypointBody]


class SynthesizeParams(BaseModel):
    seed_motion: Optional[dict] = None
    seed_start: Optional[List[float]] = None  # [x, z]
    seed_heading: float = 0.0


class SynthesizeBody(BaseModel):
    scene_id: str
    actions: List[ActionBody]
    params: SynthesizeParams = SynthesizeParams()


class InstructionPreviewBody(BaseModel):
    scene_id: str
    command: dict  # {verb, label, height?}


class Store:
    """In-memory id-keyed stores; access serialized by one lock."""

    def __init__(self):
        self.lock = threading.Lock()
        self.scenes = {}  # id -> (Scene, grid)
        self.jobs = {}  # id -> dict
        self.motions = {}  # id -> dict

    @staticmethod
    def new_id():
        return uuid.uuid4().hex[:12]


def _action_from_body(body):
    return ActionKeypoints(
        targets=[(k.role, np.array(k.position, dtype=float)) for k in body.targets],
        tag=body.tag,
    )


def build_app(cfg=None, walk_path=None, trans_path=None, corpus_manifest=None, workers=2):
    cfg = cfg or Config()
    skeleton = cfg.load_skeleton()
    templates = load_templates()
    store = Store()
    pool = ThreadPoolExecutor(max_workers=workers)

    walk_model = walknet.load_walknet(walk_path) if walk_path else None
    trans_model = transnet.load_transnet(trans_path) if trans_path else None
    if corpus_manifest:
        clips = [c for c, _ in corpus_mod.load_corpus(corpus_manifest)]
        pose_db = corpus_mod.harvest_walkout_poses(clips, skeleton)
    else:
        pose_db = corpus_mod.WalkPoseDB()

    app = FastAPI(title="motionloom")
    app.state.store = store

    def get_scene(scene_id):
        with store.lock:
            entry = store.scenes.get(scene_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown scene {scene_id}")
        return entry

    @app.post("/api/scenes")
    def create_scene(body: SceneBody):
        try:
            scene = Scene.from_dict(body.model_dump())
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=[{"loc": ["body"], "msg": str(exc)}])
        grid = build_grid(scene, cell_size=cfg.runtime.cell_size, agent_radius=cfg.runtime.agent_radius)
        scene_id = Store.new_id()
        with store.lock:
            store.scenes[scene_id] = (scene, grid)
        return {"scene_id": scene_id}

    @app.get("/api/scenes/{scene_id}")
    def read_scene(scene_id: str):
        scene, grid = get_scene(scene_id)
        blocked = [[int(i), int(j)] for i, j in zip(*np.nonzero(grid.blocked))]
        return {
            "scene": scene.to_dict(),
            "grid": {
                "origin": list(map(float, grid.origin)),
                "cell_size": grid.cell_size,
                "shape": list(grid.blocked.shape),
                "blocked_cells": blocked,
            },
        }

    @app.get("/api/skeleton")
    def read_skeleton():
        """Skeleton plus an FK sample so clients can verify their own FK."""
        # a non-trivial pose so a client FK mismatch cannot hide behind
        # identity rotations
        sample = templates.get("sit", skeleton.rest_pose())
        positions = forward_kinematics(skeleton, sample, validate=False)
        return {
            "skeleton": skeleton.to_dict(),
            "fk_sample": {
                "frame": vectorize_frame(sample).tolist(),
                "positions": positions.tolist(),
            },
        }

    @app.post("/api/solve-anchor")
    def solve_anchor_endpoint(body: SolveAnchorBody):
        get_scene(body.scene_id)
        try:
            action = ActionKeypoints(
                targets=[(k.role, np.array(k.position, dtype=float)) for k in body.keypoints],
                tag=body.tag,
            )
        except KeypointFormatError as exc:
            raise HTTPException(status_code=422, detail=[{"loc": ["body", "keypoints"], "msg": str(exc)}])
        try:
            anchor = solve_anchor(action, skeleton, templates=templates)
        except UnreachableKeypointsError as exc:
            return {
                "reachable": False,
                "error": str(exc),
                "best_residuals_cm": list(map(float, exc.residuals)),
            }
        return {"reachable": True, "anchor": anchor.to_dict()}

    @app.get("/api/instructions/preview")
    @app.post("/api/instructions/preview")
    def instruction_preview(body: InstructionPreviewBody):
        scene, grid = get_scene(body.scene_id)
        try:
            action = keypoints_from_instruction(scene, grid, Instruction.from_dict(body.command))
        except (LabelNotFoundError, UnsupportedVerbError, KeyError) as exc:
            raise HTTPException(status_code=422, detail=[{"loc": ["body", "command"], "msg": str(exc)}])
        return {"keypoints": action.to_dict()}

    def default_seed(scene, params):
        start = (np.array(params.seed_start, dtype=float) if params.seed_start is not None
                 else np.array(scene.bounds_min) + 0.5)
        clip = generate_gait_clip(speed=1.2, turn_rate=0.0, duration=2.0, seed=0)
        from .canonical import canonicalize, frame_from_pose, frame_from_waypoint, uncanonicalize

        mat = clip.to_matrix()
        # re-pose the canned walk so it ends at `start` facing `seed_heading`
        canon = canonicalize(mat, frame_from_pose(clip.frames[-1]))
        yaw = params.seed_heading
        facing = np.array([np.cos(yaw), 0.0, -np.sin(yaw)])
        target = frame_from_waypoint(np.array([start[0], 0.0, start[1]]), facing)
        return MotionClip.from_matrix(uncanonicalize(canon, target), clip.frame_rate)

    def run_job(job_id, scene, grid, actions, params):
        def set_state(**kw):
            with store.lock:
                store.jobs[job_id].update(kw)

        try:
            set_state(status="running", progress=0.1)
            if actions and (walk_model is None or trans_model is None):
                raise RuntimeError("service started without --walk/--trans weights")
            if params.seed_motion is not None:
                seed = MotionClip.from_matrix(
                    np.array(params.seed_motion["frames"], dtype=float),
                    params.seed_motion.get("frame_rate", 30.0),
                )
            else:
                seed = default_seed(scene, params)
            plan = orchestrator.plan(
                scene, seed, actions, skeleton,
                cell_size=cfg.runtime.cell_size, agent_radius=cfg.runtime.agent_radius,
                spacing=cfg.runtime.waypoint_spacing, delta=cfg.runtime.walkout_distance,
                arrive_radius=cfg.runtime.arrive_radius, stop_distance=cfg.runtime.stop_distance,
                templates=templates,
            )
            set_state(progress=0.4)
            walk_params, walk_enc, k = walk_model or (None, None, 0)
            trans_params, trans_enc, m = trans_model or (None, None, 0)
            clip, phase_log = orchestrator.execute(
                plan, walk_params, walk_enc, k, trans_params, trans_enc, m, pose_db
            )
            set_state(progress=0.8)
            report = metrics.evaluate(
                clip, skeleton, plan, phase_log,
                uninflated_grid(scene, cell_size=cfg.runtime.cell_size),
                floor_height=scene.floor_height,
            )
            motion_id = Store.new_id()
            with store.lock:
                store.motions[motion_id] = {
                    "motion": {"frame_rate": clip.frame_rate, "frames": clip.to_matrix().tolist()},
                    "phase_log": phase_log.to_dict(),
                    "report": report.to_dict(),
                    "plan": plan.to_dict(),
                }
            set_state(status="done", progress=1.0, result=motion_id)
        except Exception as exc:  # noqa: BLE001 - job boundary, report to client
            log.exception("synthesis job %s failed", job_id)
            set_state(status="failed", error=str(exc))

    @app.post("/api/synthesize")
    def synthesize(body: SynthesizeBody):
        scene, grid = get_scene(body.scene_id)
        try:
            actions = [_action_from_body(a) for a in body.actions]
        except KeypointFormatError as exc:
            raise HTTPException(status_code=422, detail=[{"loc": ["body", "actions"], "msg": str(exc)}])
        job_id = Store.new_id()
        with store.lock:
            store.jobs[job_id] = {
                "id": job_id, "kind": "synthesize", "status": "queued",
                "progress": 0.0, "result": None, "error": None,
            }
        pool.submit(run_job, job_id, scene, grid, actions, body.params)
        return {"job_id": job_id}

    @app.get("/api/jobs/{job_id}")
    def read_job(job_id: str):
        with store.lock:
            job = store.jobs.get(job_id)
            if job is not None:
                job = dict(job)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        return job

    @app.get("/api/motions/{motion_id}")
    def read_motion(motion_id: str):
        with store.lock:
            entry = store.motions.get(motion_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown motion {motion_id}")
        return entry

    return app
