import json

import numpy as np
import pytest

from motionloom import corpus
from motionloom.canonical import frame_from_pose
from motionloom.motion import vectorize_frame
from motionloom.skeleton import heading, landmark_position


def test_gait_grid_deterministic():
    assert corpus.gait_grid(5) == corpus.gait_grid(5)
    speeds = [s for s, _ in corpus.gait_grid(8)]
    assert min(speeds) == corpus.SPEED_RANGE[0]
    assert max(speeds) == corpus.SPEED_RANGE[1]
    for _, t in corpus.gait_grid(8):
        assert t in corpus.TURN_RATES


def test_gait_grid_rejects_zero():
    with pytest.raises(ValueError):
        corpus.gait_grid(0)


def test_generate_and_load_corpus(tmp_path):
    manifest = corpus.generate_corpus(tmp_path / "data", n_clips=3, seed=0, duration=2.0)
    doc = json.loads(manifest.read_text())
    assert len(doc["clips"]) == 3
    loaded = corpus.load_corpus(manifest)
    assert len(loaded) == 3
    for clip, tags in loaded:
        assert len(clip) == 61  # 2 s at 30 fps, endpoint included
        assert "gait" in tags


def test_generate_corpus_deterministic(tmp_path):
    corpus.generate_corpus(tmp_path / "a", n_clips=2, seed=7, duration=2.0)
    corpus.generate_corpus(tmp_path / "b", n_clips=2, seed=7, duration=2.0)
    for name in ("manifest.json", "clip_000.json", "clip_001.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_transition_corpus_shape(gait_clips, templates):
    out = corpus.transition_corpus(gait_clips[:2], templates, blend_frames=10)
    # one settle-in and one walk-out clip per (gait clip, template)
    assert len(out) == 2 * 2 * len(templates)
    for clip in out:
        assert len(clip) > 10


def test_transition_settle_ends_near_target(gait_clips, templates):
    out = corpus.transition_corpus(gait_clips[:1], templates, blend_frames=10)
    settle = out[0]  # settle-in clips come first per gait clip
    end = settle.frames[-1]
    start = gait_clips[0].frames[-1]
    # the blend target sits a bounded planar distance from the walk end
    d = np.linalg.norm(end.translation[[0, 2]] - start.translation[[0, 2]])
    assert d <= max(corpus.SETTLE_OFFSETS) + 0.5


def test_harvest_walkout_poses(gait_clips, skeleton, pose_db):
    assert len(pose_db) == len(gait_clips)
    for tag, vec in pose_db.entries:
        assert tag == "mid-stance"
        assert vec.shape == (219,)
        # stored canonicalized to its own frame: planar root at the origin
        assert abs(vec[0]) < 1e-9 and abs(vec[2]) < 1e-9


def test_pose_db_roundtrip(tmp_path, pose_db):
    path = tmp_path / "db.json"
    pose_db.save(path)
    again = corpus.WalkPoseDB.load(path)
    assert len(again) == len(pose_db)
    assert np.allclose(again.entries[0][1], pose_db.entries[0][1])


def test_select_walkout_pose_placement(pose_db):
    point = np.array([2.0, 0.0, -1.0])
    tangent = np.array([0.0, 0.0, 1.0])
    pose = corpus.select_walkout_pose(pose_db, tangent, point)
    assert np.allclose(pose.translation[[0, 2]], point[[0, 2]], atol=1e-9)
    h = heading(pose)
    assert np.allclose(h, [tangent[0], tangent[2]], atol=1e-9)


def test_select_walkout_pose_empty():
    with pytest.raises(corpus.EmptyPoseDatabaseError):
        corpus.select_walkout_pose(corpus.WalkPoseDB(), np.array([1.0, 0.0, 0.0]))
