import json

from click.testing import CliRunner

from motionloom.cli import main
from motionloom.gait import generate_gait_clip
from motionloom.motion import save_motion_json

SCENE = {
    "floor_height": 0.0,
    "bounds": {"min": [-1.0, -3.0], "max": [9.0, 3.0]},
    "obstacles": [
        {"label": "chair", "min": [6.0, 0.0, -0.25], "max": [6.5, 0.45, 0.25]},
    ],
}


def write_inputs(tmp_path):
    scene_path = tmp_path / "scene.json"
    scene_path.write_text(json.dumps(SCENE))
    seed_path = tmp_path / "seed.json"
    save_motion_json(generate_gait_clip(speed=1.2, turn_rate=0.0, duration=2.0, seed=0), seed_path)
    ins_path = tmp_path / "ins.json"
    ins_path.write_text(json.dumps({"commands": [{"verb": "sit", "label": "chair"}]}))
    return scene_path, seed_path, ins_path


def test_gen_data(tmp_path):
    runner = CliRunner()
    res = runner.invoke(main, ["gen-data", "--out", str(tmp_path / "d"), "--clips", "2"])
    assert res.exit_code == 0, res.output
    assert (tmp_path / "d" / "manifest.json").exists()


def test_gen_data_deterministic(tmp_path):
    runner = CliRunner()
    for name in ("a", "b"):
        res = runner.invoke(main, ["gen-data", "--out", str(tmp_path / name), "--clips", "2",
                                   "--seed", "3", "--duration", "2.0"])
        assert res.exit_code == 0
    assert (tmp_path / "a" / "clip_000.json").read_bytes() == \
        (tmp_path / "b" / "clip_000.json").read_bytes()


def test_gen_data_rejects_zero_clips(tmp_path):
    res = CliRunner().invoke(main, ["gen-data", "--out", str(tmp_path / "d"), "--clips", "0"])
    assert res.exit_code == 1


def test_train_walknet_smoke(tmp_path, artifact_dir):
    out = tmp_path / "w.bin"
    res = CliRunner().invoke(main, [
        "train", "walknet", "--corpus", str(artifact_dir / "corpus" / "manifest.json"),
        "--out", str(out), "--epochs", "1",
    ])
    assert res.exit_code == 0, res.output
    assert out.exists()
    assert out.with_suffix(".loss.csv").exists()
    echoed = json.loads((tmp_path / "w.config.json").read_text())
    assert echoed["training"]["epochs"] == 1


def test_plan_only(tmp_path):
    scene_path, seed_path, ins_path = write_inputs(tmp_path)
    out = tmp_path / "plan.json"
    res = CliRunner().invoke(main, [
        "plan-only", "--scene", str(scene_path), "--seed-motion", str(seed_path),
        "--instructions", str(ins_path), "--out", str(out),
    ])
    assert res.exit_code == 0, res.output
    doc = json.loads(out.read_text())
    assert len(doc["actions"]) == 1 and len(doc["paths"]) == 1


def test_actions_and_instructions_mutually_exclusive(tmp_path):
    scene_path, seed_path, ins_path = write_inputs(tmp_path)
    res = CliRunner().invoke(main, [
        "plan-only", "--scene", str(scene_path), "--seed-motion", str(seed_path),
        "--out", str(tmp_path / "p.json"),
    ])
    assert res.exit_code == 2


def test_synth_and_eval(tmp_path, artifact_dir):
    scene_path, seed_path, ins_path = write_inputs(tmp_path)
    out = tmp_path / "motion.json"
    runner = CliRunner()
    res = runner.invoke(main, [
        "synth", "--scene", str(scene_path), "--seed-motion", str(seed_path),
        "--instructions", str(ins_path),
        "--walk", str(artifact_dir / "walk.bin"), "--trans", str(artifact_dir / "trans.bin"),
        "--corpus", str(artifact_dir / "corpus" / "manifest.json"),
        "--out", str(out), "--report", str(tmp_path / "report.json"),
    ])
    assert res.exit_code == 0, res.output
    assert out.exists()
    sidecar = json.loads((tmp_path / "motion.plan.json").read_text())
    assert sidecar["phase_log"]["entries"][0]["phase"] == "Walk"
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["penetration_frames"] == 0

    res = runner.invoke(main, [
        "eval", "--motion", str(out), "--scene", str(scene_path),
        "--plan", str(tmp_path / "motion.plan.json"),
    ])
    assert res.exit_code == 0, res.output
    assert "foot_skate_cm_per_frame" in res.output
