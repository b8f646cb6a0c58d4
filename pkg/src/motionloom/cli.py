"""Command-line entry points."""

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import corpus as corpus_mod
from . import metrics, orchestrator, transnet, walknet
from .anchor import load_instruction_file, load_keypoint_file, load_templates, keypoints_from_instruction
from .config import Config, echo_config, load_config, paper_scale
from .motion import load_motion_json, save_motion_json
from .scene import Scene, build_grid, uninflated_grid


def _fail(message, code=1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Continual character motion synthesis in 3D scenes."""


def config_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                      help="JSON config file (default: $MOTIONLOOM_CONFIG).")(fn)
    fn = click.option("--paper-scale", is_flag=True, help="Full-size hyperparameters.")(fn)
    return fn


def _resolve(config_path, use_paper_scale, **overrides):
    cfg = load_config(config_path, overrides)
    if use_paper_scale:
        cfg = paper_scale(cfg)
    return cfg


@main.command("gen-data")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--clips", "n_clips", default=8, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--duration", default=4.0, show_default=True)
def gen_data(out_dir, n_clips, seed, duration):
    """Generate a synthetic gait corpus plus manifest."""
    try:
        manifest = corpus_mod.generate_corpus(out_dir, n_clips=n_clips, seed=seed, duration=duration)
    except ValueError as exc:
        _fail(str(exc))
    click.echo(f"wrote {n_clips} clips; manifest {manifest}")


@main.command("train")
@click.argument("model", type=click.Choice(["walknet", "transnet"]))
@click.option("--corpus", "manifest", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--epochs", type=int, default=None)
@click.option("--lr", type=float, default=None)
@click.option("--seed", type=int, default=None)
@config_options
def train(model, manifest, out_path, epochs, lr, seed, config_path, paper_scale):
    """Train a model on a corpus; writes weights plus a loss CSV."""
    cfg = _resolve(config_path, paper_scale, **{
        "corpus_manifest": manifest,
        "training.epochs": epochs,
        "training.learning_rate": lr,
        "training.seed": seed,
    })
    clips = [c for c, _ in corpus_mod.load_corpus(manifest)]
    try:
        if model == "walknet":
            dataset = walknet.build_walk_dataset(clips, k=cfg.walk_k, seed=cfg.training.seed)
            result = walknet.train_walknet(dataset, cfg.walk_encoder, cfg.training)
            walknet.save_walknet(out_path, result.params, cfg.walk_encoder, cfg.walk_k)
        else:
            templates = load_templates()
            full = clips + corpus_mod.transition_corpus(clips, templates, blend_frames=cfg.trans_m // 2)
            result = transnet.train_transnet(full, cfg.trans_m, cfg.trans_encoder, cfg.training)
            transnet.save_transnet(out_path, result.params, cfg.trans_encoder, cfg.trans_m)
    except (ValueError, walknet.EmptyDatasetError) as exc:
        _fail(str(exc))
    result.save_loss_csv(Path(out_path).with_suffix(".loss.csv"))
    echo_config(cfg, out_path)
    status = "diverged" if result.diverged else "ok"
    click.echo(f"{model}: {len(result.losses)} steps, final loss "
               f"{result.losses[-1][1]:.4g}, {status}; weights {out_path}")


def _load_actions(scene, grid, actions_path, instructions_path):
    if (actions_path is None) == (instructions_path is None):
        _fail("provide exactly one of --actions or --instructions", 2)
    if actions_path:
        return load_keypoint_file(actions_path)
    return [keypoints_from_instruction(scene, grid, ins)
            for ins in load_instruction_file(instructions_path)]


def _make_plan(cfg, scene, seed_clip, actions, skeleton):
    rt = cfg.runtime
    return orchestrator.plan(
        scene, seed_clip, actions, skeleton,
        cell_size=rt.cell_size, agent_radius=rt.agent_radius, spacing=rt.waypoint_spacing,
        delta=rt.walkout_distance, arrive_radius=rt.arrive_radius, stop_distance=rt.stop_distance,
    )


@main.command("plan-only")
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--seed-motion", required=True, type=click.Path(exists=True))
@click.option("--actions", "actions_path", type=click.Path(exists=True), default=None)
@click.option("--instructions", "instructions_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@config_options
def plan_only(scene_path, seed_motion, actions_path, instructions_path, out_path,
              config_path, paper_scale):
    """Solve anchors and plan paths without synthesizing motion."""
    cfg = _resolve(config_path, paper_scale)
    scene = Scene.load(scene_path)
    grid = build_grid(scene, cell_size=cfg.runtime.cell_size, agent_radius=cfg.runtime.agent_radius)
    seed_clip = load_motion_json(seed_motion)
    actions = _load_actions(scene, grid, actions_path, instructions_path)
    try:
        plan = _make_plan(cfg, scene, seed_clip, actions, cfg.load_skeleton())
    except orchestrator.PlanningError as exc:
        _fail(f"planning failed at action {exc.action_index}: {exc}")
    with open(out_path, "w") as f:
        json.dump(plan.to_dict(), f, indent=2)
    click.echo(f"plan: {len(plan.actions)} actions, {len(plan.paths)} legs; {out_path}")


@main.command("synth")
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--seed-motion", required=True, type=click.Path(exists=True))
@click.option("--actions", "actions_path", type=click.Path(exists=True), default=None)
@click.option("--instructions", "instructions_path", type=click.Path(exists=True), default=None)
@click.option("--walk", "walk_path", required=True, type=click.Path(exists=True))
@click.option("--trans", "trans_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "manifest", type=click.Path(exists=True), default=None,
              help="Corpus manifest for the walk-out pose database.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--bvh", "bvh_path", type=click.Path(), default=None)
@click.option("--report", "report_path", type=click.Path(), default=None)
@config_options
def synth(scene_path, seed_motion, actions_path, instructions_path, walk_path, trans_path,
          manifest, out_path, bvh_path, report_path, config_path, paper_scale):
    """Synthesize a motion for an action chain; writes motion JSON plus a
    plan/phase-log sidecar."""
    cfg = _resolve(config_path, paper_scale)
    scene = Scene.load(scene_path)
    grid = build_grid(scene, cell_size=cfg.runtime.cell_size, agent_radius=cfg.runtime.agent_radius)
    seed_clip = load_motion_json(seed_motion)
    skeleton = cfg.load_skeleton()
    actions = _load_actions(scene, grid, actions_path, instructions_path)
    walk_params, walk_enc, k = walknet.load_walknet(walk_path)
    trans_params, trans_enc, m = transnet.load_transnet(trans_path)
    if manifest:
        clips = [c for c, _ in corpus_mod.load_corpus(manifest)]
        pose_db = corpus_mod.harvest_walkout_poses(clips, skeleton)
    else:
        pose_db = corpus_mod.WalkPoseDB()
    try:
        plan = _make_plan(cfg, scene, seed_clip, actions, skeleton)
        clip, phase_log = orchestrator.execute(
            plan, walk_params, walk_enc, k, trans_params, trans_enc, m, pose_db
        )
    except orchestrator.PlanningError as exc:
        _fail(f"planning failed at action {exc.action_index}: {exc}")
    except (orchestrator.ExecutionError, corpus_mod.EmptyPoseDatabaseError) as exc:
        _fail(f"synthesis failed: {exc}")
    save_motion_json(clip, out_path)
    sidecar = Path(out_path).with_suffix(".plan.json")
    with open(sidecar, "w") as f:
        json.dump({"plan": plan.to_dict(), "phase_log": phase_log.to_dict()}, f, indent=2)
    echo_config(cfg, out_path)
    if bvh_path:
        from .bvh import export_bvh

        export_bvh(clip, skeleton, bvh_path)
    if report_path:
        report = metrics.evaluate(clip, skeleton, plan, phase_log,
                                  uninflated_grid(scene, cell_size=cfg.runtime.cell_size),
                                  floor_height=scene.floor_height)
        report.save(report_path)
    click.echo(f"synthesized {len(clip)} frames, {len(phase_log.entries)} phases; {out_path}")


@main.command("eval")
@click.option("--motion", "motion_path", required=True, type=click.Path(exists=True))
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True),
              help="Plan sidecar written by synth.")
@click.option("--out", "out_path", type=click.Path(), default=None)
@config_options
def eval_cmd(motion_path, scene_path, plan_path, out_path, config_path, paper_scale):
    """Recompute the metric report for a synthesized motion."""
    cfg = _resolve(config_path, paper_scale)
    clip = load_motion_json(motion_path)
    scene = Scene.load(scene_path)
    with open(plan_path) as f:
        doc = json.load(f)
    plan = orchestrator.SynthesisPlan.from_dict(doc["plan"])
    phase_log = orchestrator.PhaseLog.from_dict(doc["phase_log"])
    report = metrics.evaluate(clip, cfg.load_skeleton(), plan, phase_log,
                              uninflated_grid(scene, cell_size=cfg.runtime.cell_size),
                              floor_height=scene.floor_height)
    click.echo(f"{'frames_total':24s} {report.frames_total}")
    click.echo(f"{'foot_skate_cm_per_frame':24s} {report.foot_skate_cm_per_frame:.4f}")
    for i, err in enumerate(report.keypoint_error_cm):
        click.echo(f"{f'keypoint_error_cm[{i}]':24s} {err:.3f}")
    click.echo(f"{'path_deviation_m':24s} max {report.path_deviation_m[0]:.3f} "
               f"mean {report.path_deviation_m[1]:.3f}")
    click.echo(f"{'penetration_frames':24s} {report.penetration_frames}")
    if out_path:
        report.save(out_path)


@main.command("serve")
@click.option("--addr", default="127.0.0.1:8080", show_default=True)
@click.option("--walk", "walk_path", type=click.Path(exists=True), default=None)
@click.option("--trans", "trans_path", type=click.Path(exists=True), default=None)
@click.option("--corpus", "manifest", type=click.Path(exists=True), default=None)
@click.option("--workers", default=2, show_default=True)
@config_options
def serve(addr, walk_path, trans_path, manifest, workers, config_path, paper_scale):
    """Run the HTTP service for the browser UI."""
    import uvicorn

    from .service import build_app

    cfg = _resolve(config_path, paper_scale)
    app = build_app(cfg, walk_path=walk_path, trans_path=trans_path,
                    corpus_manifest=manifest, workers=workers)
    host, _, port = addr.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


if __name__ == "__main__":
    main()
