"""Acceptance suite: one test per release criterion, each printing a single
PASS/FAIL line with the measured numbers and runtime."""

import json
import time

import numpy as np
import pytest

import conftest
import test_autodiff as ta
from motionloom import corpus, metrics, orchestrator, transnet, walknet
from motionloom import autodiff as ad
from motionloom.anchor import (
    ActionKeypoints,
    Instruction,
    UnreachableKeypointsError,
    keypoints_from_instruction,
    solve_anchor,
)
from motionloom.canonical import canonicalize, frame_from_pose, frame_from_waypoint, uncanonicalize, uncanonicalize_pose
from motionloom.gait import generate_gait_clip
from motionloom.motion import MotionClip, save_motion_json, vectorize_frame
from motionloom.scene import Scene, astar, build_grid, path_cost, uninflated_grid, UnreachableError
from motionloom.skeleton import forward_kinematics, heading
from motionloom.training import TrainingConfig
from motionloom.transformer import encode, init_params
from test_metrics import clip_with_toe_motion
from test_scene import dijkstra_cost, grid_from_mask


def report(name, ok, detail):
    line = f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_acceptance_canonicalization(gait_clips, skeleton, rng):
    t0 = time.monotonic()
    mats = [c.to_matrix() for c in gait_clips]
    worst_rt = 0.0
    for _ in range(1000):
        mat = mats[rng.integers(len(mats))]
        frame = frame_from_waypoint(
            np.array([rng.uniform(-5, 5), 0.0, rng.uniform(-5, 5)]),
            np.array([np.cos(a := rng.uniform(-np.pi, np.pi)), 0.0, -np.sin(a)]),
        )
        back = uncanonicalize(canonicalize(mat, frame), frame)
        worst_rt = max(worst_rt, float(np.max(np.abs(back - mat))))
    # closure: canonicalized to its own last frame, the last frame sits at the
    # origin facing the canonical axis
    worst_pos, worst_ang = 0.0, 0.0
    for clip in gait_clips:
        canon = canonicalize(clip, frame_from_pose(clip.frames[-1]))
        last = canon.frames[-1]
        worst_pos = max(worst_pos, abs(last.translation[0]), abs(last.translation[2]))
        h = heading(last)
        worst_ang = max(worst_ang, abs(float(np.arctan2(-h[1], h[0]))))
    # FK isometry: canonicalization rigidly transforms every landmark
    worst_fk = 0.0
    for clip in gait_clips[:2]:
        frame = frame_from_pose(clip.frames[0])
        for pose in clip.frames[::20]:
            pos = forward_kinematics(skeleton, pose, validate=False)
            cpos = forward_kinematics(skeleton, canonicalize(
                MotionClip([pose], 30.0), frame).frames[0], validate=False)
            expect = (pos - frame.translation) @ frame.rotation
            worst_fk = max(worst_fk, float(np.max(np.abs(cpos - expect))))
    dt = time.monotonic() - t0
    ok = worst_rt < 1e-12 and worst_pos < 1e-9 and worst_ang < 1e-6 and worst_fk < 1e-9 and dt < 10
    report("canonicalization", ok,
           f"round-trip {worst_rt:.1e}, closure {worst_pos:.1e} m / {worst_ang:.1e} rad, "
           f"FK isometry {worst_fk:.1e} m, {dt:.1f} s")


def test_acceptance_autodiff():
    t0 = time.monotonic()
    checks = [
        ta.test_add_mul_neg, ta.test_broadcasting, ta.test_matmul, ta.test_matmul_batched,
        ta.test_transpose_permute_reshape, ta.test_concat_take_rows, ta.test_softmax,
        ta.test_layer_norm, ta.test_gelu_relu, ta.test_linear, ta.test_masked_fill,
        ta.test_scalar_ops, ta.test_rodrigues_gradient, ta.test_mse,
    ]
    failed = []
    for fn in checks:
        try:
            fn()
        except AssertionError:
            failed.append(fn.__name__)
    # full encoder gradcheck against finite differences
    from motionloom.transformer import EncoderConfig

    cfg = EncoderConfig(layers=1, heads=2, embed_dim=8, input_dim=4, max_sequence_length=8)
    params = init_params(cfg, seed=0)
    x = np.random.default_rng(0).normal(size=(4, 4))
    target = np.random.default_rng(1).normal(size=(4, 4))
    loss = ad.mse(encode(x, cfg, params), target)
    loss.backward()
    eps, worst = 1e-6, 0.0
    for p in params.values():
        flat, gflat = p.data.reshape(-1), p.grad.reshape(-1)
        for i in np.random.default_rng(2).choice(flat.size, size=min(4, flat.size), replace=False):
            orig = flat[i]
            flat[i] = orig + eps
            hi = float(ad.mse(encode(x, cfg, params), target).data)
            flat[i] = orig - eps
            lo = float(ad.mse(encode(x, cfg, params), target).data)
            flat[i] = orig
            num = (hi - lo) / (2 * eps)
            worst = max(worst, abs(gflat[i] - num) / max(abs(num), 1e-6))
    dt = time.monotonic() - t0
    ok = not failed and worst < 1e-4 and dt < 60
    report("autodiff", ok, f"{len(checks)} op checks, encoder worst rel err {worst:.1e}, "
           f"failed={failed or 'none'}, {dt:.1f} s")


def test_acceptance_astar_oracle():
    t0 = time.monotonic()
    rng = np.random.default_rng(0)
    solved = unreachable = 0
    worst = 0.0
    for _ in range(200):
        mask = rng.random((20, 20)) < 0.25
        mask[0, 0] = mask[19, 19] = False
        grid = grid_from_mask(mask)
        oracle = dijkstra_cost(grid, (0, 0), (19, 19))
        if oracle is None:
            with pytest.raises(UnreachableError):
                astar(grid, (0.5, 0.5), (19.5, 19.5), snap_dist=0.0)
            unreachable += 1
            continue
        cells = astar(grid, (0.5, 0.5), (19.5, 19.5), snap_dist=0.0)
        assert all(grid.is_free(c) for c in cells)
        worst = max(worst, abs(path_cost(cells) - oracle))
        solved += 1
    dt = time.monotonic() - t0
    ok = worst < 1e-9 and dt < 10
    report("astar-oracle", ok,
           f"{solved} solved + {unreachable} unreachable grids, max |cost diff| {worst:.1e}, {dt:.1f} s")


def test_acceptance_ik_self_consistency(skeleton, templates, rng):
    t0 = time.monotonic()
    cases = [("sit", "sit"), ("grab", "reach_mid"), ("custom", "neutral")]
    roles_all = ["left_toe", "right_toe", "left_hand", "right_hand", "head"]
    ok_trials = 0
    for _ in range(100):
        tag, name = cases[rng.integers(len(cases))]
        yaw = rng.uniform(-np.pi, np.pi)
        point = np.array([rng.uniform(-3, 3), 0.0, rng.uniform(-3, 3)])
        pose = uncanonicalize_pose(
            templates[name],
            frame_from_waypoint(point, np.array([np.cos(yaw), 0.0, -np.sin(yaw)])),
        )
        pos = forward_kinematics(skeleton, pose, validate=False)
        roles = ["root"] + list(rng.choice(roles_all, size=2, replace=False))
        action = ActionKeypoints(
            targets=[(r, pos[skeleton.landmark_index(r)]) for r in roles], tag=tag
        )
        anchor = solve_anchor(action, skeleton, templates=templates)
        if max(anchor.residuals) < 0.5:
            ok_trials += 1
    errored = 0
    for i in range(5):  # unreachable inputs must always error
        far = ActionKeypoints(
            targets=[("root", [0.0, 0.95, 0.0]), ("left_toe", [0.1, 0.0, 4.0 + i]),
                     ("right_toe", [0.1, 0.0, -4.0 - i])],
            tag="custom",
        )
        try:
            solve_anchor(far, skeleton, templates=templates)
        except UnreachableKeypointsError:
            errored += 1
    dt = time.monotonic() - t0
    ok = ok_trials >= 95 and errored == 5 and dt < 60
    report("ik-self-consistency", ok,
           f"{ok_trials}/100 trials < 0.5 cm, {errored}/5 unreachable raised, {dt:.1f} s")


def test_acceptance_walknet(walk_model, gait_clips):
    params, enc, k, result = walk_model
    t0 = time.monotonic()
    final_loss = result.losses[-1][1]
    steps = result.losses[-1][0] + 1
    # straight 5 m, 5-goal path
    clip = gait_clips[2]
    seed = clip.to_matrix()[:k]
    root = seed[-1]
    tangent = np.array([1.0, 0.0, 0.0])
    goals = [(np.array([root[0] + d, 0.0, root[2]]), tangent) for d in (1.0, 2.0, 3.0, 4.0, 5.0)]
    out, arrivals = walknet.rollout(params, enc, seed, goals)
    final = out.to_matrix()[-1]
    dist = float(np.linalg.norm(final[[0, 2]] - np.array([root[0] + 5.0, root[2]])))
    # equivariance: rollout commutes with a planar rigid transform
    frame = frame_from_waypoint(np.array([1.7, 0.0, -2.3]),
                                np.array([np.cos(0.8), 0.0, -np.sin(0.8)]))
    seed_t = uncanonicalize(seed, frame)
    goals_t = [(frame.rotation @ q + frame.translation, frame.rotation @ l) for q, l in goals]
    out_t, _ = walknet.rollout(params, enc, seed_t, goals_t)
    a, b = out.to_matrix(), canonicalize(out_t.to_matrix(), frame)
    equiv = float(np.max(np.abs(a - b))) if a.shape == b.shape else np.inf
    dt = time.monotonic() - t0
    train_s = conftest.TRAIN_SECONDS.get("walknet", 0.0)
    ok = (final_loss < 1e-3 and steps <= 2000 and len(arrivals) == 5 and dist < 0.10
          and equiv < 1e-6 and train_s + dt < 600)
    report("walknet-desk", ok,
           f"MSE {final_loss:.1e} @ {steps} steps, final dist {dist:.3f} m, "
           f"equivariance {equiv:.1e} m, train {train_s:.0f} s + {dt:.1f} s")


def test_acceptance_transnet(trans_model, gait_clips, templates, desk_encoder):
    params, enc, m, _ = trans_model
    t0 = time.monotonic()
    # fixed-batch overfit: masked MSE < 1e-3 within 3000 steps
    batch = transnet.build_masked_batch(gait_clips, m, mask_length=m // 2 - 1, seed=0, batch_size=8)
    ov_params = init_params(desk_encoder, seed=0)
    from motionloom.training import TrainLoop

    loop = TrainLoop(ov_params, TrainingConfig(seed=0))
    overfit_loss, overfit_steps = np.inf, 0
    for step in range(3000):
        pred = transnet.encode_masked(batch.masked_input, desk_encoder, ov_params, batch.mask)
        loss = ad.mse(pred, batch.full)
        overfit_loss, overfit_steps = float(loss.data), step + 1
        if overfit_loss < 1e-3:
            break
        loop.update(loss)
    # infill on the session-trained desk model: overwrite contract + seams
    half = m // 2
    clip = gait_clips[1].to_matrix()
    seed = clip[:half]
    from motionloom.motion import devectorize_frame

    anchor = devectorize_frame(clip[m - 1])
    out = transnet.infill(params, enc, m, seed, anchor).to_matrix()
    exact = np.array_equal(out[:half], seed) and np.array_equal(out[m - 1], clip[m - 1])
    seam_a = float(np.linalg.norm(out[half][:3] - out[half - 1][:3]))
    seam_b = float(np.linalg.norm(out[m - 1][:3] - out[m - 2][:3]))
    dt = time.monotonic() - t0
    train_s = conftest.TRAIN_SECONDS.get("transnet", 0.0)
    ok = (overfit_loss < 1e-3 and overfit_steps <= 3000 and exact
          and seam_a < 0.10 and seam_b < 0.10 and train_s + dt < 600)
    report("transnet-desk", ok,
           f"overfit MSE {overfit_loss:.1e} @ {overfit_steps} steps, contract exact={exact}, "
           f"seams {seam_a * 100:.1f}/{seam_b * 100:.1f} cm, train {train_s:.0f} s + {dt:.1f} s")


def e2e_scene():
    return Scene.from_dict({
        "floor_height": 0.0,
        "bounds": {"min": [-2.0, -3.0], "max": [9.0, 5.0]},
        "obstacles": [
            {"label": "chair", "min": [2.8, 0.0, 1.7], "max": [3.3, 0.45, 2.2]},
            {"label": "shelf", "min": [5.0, 0.0, -1.2], "max": [5.6, 1.5, -0.4]},
            {"label": "wall", "min": [4.2, 0.0, -0.2], "max": [4.4, 2.0, 3.0]},
        ],
    })


def run_e2e(skeleton, templates, walk_model, trans_model, pose_db):
    scene = e2e_scene()
    grid = build_grid(scene)
    sit = keypoints_from_instruction(scene, grid, Instruction("sit", "chair"))
    grab = keypoints_from_instruction(scene, grid, Instruction("grab", "shelf", height=1.1))
    seed = generate_gait_clip(speed=1.2, turn_rate=0.0, duration=2.0, seed=42)
    plan = orchestrator.plan(scene, seed, [sit, grab], skeleton, templates=templates)
    walk_params, walk_enc, k, _ = walk_model
    trans_params, trans_enc, m, _ = trans_model
    clip, log = orchestrator.execute(plan, walk_params, walk_enc, k,
                                     trans_params, trans_enc, m, pose_db)
    return scene, plan, clip, log


def test_acceptance_end_to_end(skeleton, templates, walk_model, trans_model, pose_db):
    t0 = time.monotonic()
    scene, plan, clip, log = run_e2e(skeleton, templates, walk_model, trans_model, pose_db)
    log.validate(len(clip))
    rep = metrics.evaluate(clip, skeleton, plan, log, uninflated_grid(scene),
                           floor_height=scene.floor_height)
    dt = time.monotonic() - t0
    train_s = sum(conftest.TRAIN_SECONDS.values())
    kp_ok = len(rep.keypoint_error_cm) == 2 and max(rep.keypoint_error_cm) < 5.0
    skate_ok = np.isfinite(rep.foot_skate_cm_per_frame)
    ok = (kp_ok and rep.penetration_frames == 0 and skate_ok and train_s + dt < 900)
    report("end-to-end", ok,
           f"{len(clip)} frames / {len(log.entries)} phases, keypoint err "
           f"{[float(round(e, 2)) for e in rep.keypoint_error_cm]} cm, penetration "
           f"{rep.penetration_frames}, foot-skate {rep.foot_skate_cm_per_frame:.2f} cm/f, "
           f"train {train_s:.0f} s + {dt:.1f} s")


def test_acceptance_foot_skate_oracle(skeleton):
    t0 = time.monotonic()
    from motionloom.metrics import FOOT_SKATE_H_CM, foot_skate
    from motionloom.motion import augment_rotate

    h0 = foot_skate(clip_with_toe_motion(skeleton, 0.0, 0.01), skeleton)
    hH = foot_skate(clip_with_toe_motion(skeleton, FOOT_SKATE_H_CM / 100.0, 0.01), skeleton)
    above = foot_skate(clip_with_toe_motion(skeleton, 0.10, 0.05), skeleton)
    clip = generate_gait_clip(speed=1.2, turn_rate=0.3, duration=3.0, seed=0)
    inv = abs(foot_skate(augment_rotate(clip, 2.1), skeleton) - foot_skate(clip, skeleton))
    dt = time.monotonic() - t0
    ok = abs(h0 - 1.0) < 1e-9 and abs(hH) < 1e-12 and above == 0.0 and inv < 1e-12
    report("foot-skate-oracle", ok,
           f"h=0 -> {h0:.6f} (expect 1), h=H -> {hH:.1e}, h>H -> {above}, "
           f"rigid invariance {inv:.1e}, {dt:.1f} s")


def test_acceptance_determinism(tmp_path, skeleton, templates, walk_model, trans_model, pose_db):
    t0 = time.monotonic()
    paths = []
    for run in range(2):
        _, plan, clip, log = run_e2e(skeleton, templates, walk_model, trans_model, pose_db)
        path = tmp_path / f"motion_{run}.json"
        save_motion_json(clip, path)
        with open(tmp_path / f"plan_{run}.json", "w") as f:
            json.dump({"plan": plan.to_dict(), "phase_log": log.to_dict()}, f, sort_keys=True)
        paths.append(path)
    motion_same = paths[0].read_bytes() == paths[1].read_bytes()
    plan_same = (tmp_path / "plan_0.json").read_bytes() == (tmp_path / "plan_1.json").read_bytes()
    dt = time.monotonic() - t0
    ok = motion_same and plan_same
    report("determinism", ok,
           f"motion byte-identical={motion_same}, plan byte-identical={plan_same}, {dt:.1f} s")
