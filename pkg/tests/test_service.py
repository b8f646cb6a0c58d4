import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from motionloom.config import Config
from motionloom.service import build_app
from motionloom.skeleton import forward_kinematics

SCENE = {
    "floor_height": 0.0,
    "bounds": {"min": [-1.0, -3.0], "max": [9.0, 3.0]},
    "obstacles": [
        {"label": "chair", "min": [6.0, 0.0, -0.25], "max": [6.5, 0.45, 0.25]},
    ],
}


@pytest.fixture(scope="module")
def client(artifact_dir):
    app = build_app(
        Config(),
        walk_path=artifact_dir / "walk.bin",
        trans_path=artifact_dir / "trans.bin",
        corpus_manifest=artifact_dir / "corpus" / "manifest.json",
    )
    with TestClient(app) as c:
        yield c


@pytest.fixture()
def scene_id(client):
    return client.post("/api/scenes", json=SCENE).json()["scene_id"]


def wait_job(client, job_id, timeout=300.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        job = client.get(f"/api/jobs/{job_id}").json()
        if job["status"] in ("done", "failed"):
            return job
        time.sleep(0.3)
    raise TimeoutError(f"job {job_id} did not finish")


def test_scene_roundtrip(client, scene_id):
    doc = client.get(f"/api/scenes/{scene_id}").json()
    assert doc["scene"]["obstacles"][0]["label"] == "chair"
    assert doc["grid"]["shape"][0] > 0
    assert len(doc["grid"]["blocked_cells"]) > 0


def test_scene_404(client):
    assert client.get("/api/scenes/nope").status_code == 404


def test_scene_validation_422(client):
    bad = {"floor_height": 0.0, "bounds": {"min": [0, 0], "max": [-1, -1]}, "obstacles": []}
    assert client.post("/api/scenes", json=bad).status_code == 422


def test_skeleton_handshake(client, skeleton):
    doc = client.get("/api/skeleton").json()
    frame = np.array(doc["fk_sample"]["frame"])
    assert frame.shape == (219,)
    positions = np.array(doc["fk_sample"]["positions"])
    from motionloom.motion import devectorize_frame

    local = forward_kinematics(skeleton, devectorize_frame(frame), validate=False)
    assert np.max(np.abs(local - positions)) < 1e-12


def test_solve_anchor_reachable(client, scene_id, skeleton, templates):
    pose = templates["neutral"]
    pos = forward_kinematics(skeleton, pose, validate=False)
    keypoints = [
        {"role": r, "position": pos[skeleton.landmark_index(r)].tolist()}
        for r in ("root", "left_toe", "right_toe")
    ]
    doc = client.post("/api/solve-anchor",
                      json={"scene_id": scene_id, "keypoints": keypoints}).json()
    assert doc["reachable"] is True
    assert max(doc["anchor"]["residuals_cm"]) < 0.5


def test_solve_anchor_unreachable(client, scene_id):
    keypoints = [
        {"role": "root", "position": [0.0, 0.95, 0.0]},
        {"role": "left_toe", "position": [0.1, 0.0, 5.0]},
        {"role": "right_toe", "position": [0.1, 0.0, -5.0]},
    ]
    doc = client.post("/api/solve-anchor",
                      json={"scene_id": scene_id, "keypoints": keypoints}).json()
    assert doc["reachable"] is False
    assert max(doc["best_residuals_cm"]) > 5.0


def test_solve_anchor_bad_keypoints_422(client, scene_id):
    res = client.post("/api/solve-anchor", json={
        "scene_id": scene_id,
        "keypoints": [{"role": "root", "position": [0.0, 1.0, 0.0]}],  # too few
    })
    assert res.status_code == 422


def test_instruction_preview(client, scene_id):
    doc = client.post("/api/instructions/preview", json={
        "scene_id": scene_id, "command": {"verb": "sit", "label": "chair"},
    }).json()
    roles = {t["role"] for t in doc["keypoints"]["targets"]}
    assert {"root", "left_toe", "right_toe"} <= roles


def test_instruction_preview_bad_verb_422(client, scene_id):
    res = client.post("/api/instructions/preview", json={
        "scene_id": scene_id, "command": {"verb": "juggle", "label": "chair"},
    })
    assert res.status_code == 422


def test_synthesize_unknown_scene_404(client):
    res = client.post("/api/synthesize", json={"scene_id": "nope", "actions": []})
    assert res.status_code == 404


def test_job_404(client):
    assert client.get("/api/jobs/nope").status_code == 404


def test_synthesize_zero_actions(client, scene_id):
    job_id = client.post("/api/synthesize",
                         json={"scene_id": scene_id, "actions": []}).json()["job_id"]
    job = wait_job(client, job_id)
    assert job["status"] == "done", job
    motion = client.get(f"/api/motions/{job['result']}").json()
    assert motion["phase_log"]["entries"][0]["phase"] == "Walk"
    assert len(motion["motion"]["frames"]) > 0


def test_synthesize_zero_actions_without_weights(skeleton):
    app = build_app(Config())  # no weights, no corpus
    with TestClient(app) as c:
        sid = c.post("/api/scenes", json=SCENE).json()["scene_id"]
        job_id = c.post("/api/synthesize",
                        json={"scene_id": sid, "actions": []}).json()["job_id"]
        job = wait_job(c, job_id)
        assert job["status"] == "done", job


def test_synthesize_sit_action(client, scene_id, skeleton):
    preview = client.post("/api/instructions/preview", json={
        "scene_id": scene_id, "command": {"verb": "sit", "label": "chair"},
    }).json()["keypoints"]
    job_id = client.post("/api/synthesize", json={
        "scene_id": scene_id, "actions": [preview],
    }).json()["job_id"]
    job = wait_job(client, job_id)
    assert job["status"] == "done", job
    motion = client.get(f"/api/motions/{job['result']}").json()
    phases = [e["phase"] for e in motion["phase_log"]["entries"]]
    assert phases[0] == "Walk" and phases[-1] == "TransitionIn"
    assert max(motion["report"]["keypoint_error_cm"]) < 5.0
    assert motion["report"]["penetration_frames"] == 0


def test_motion_404(client):
    assert client.get("/api/motions/nope").status_code == 404
