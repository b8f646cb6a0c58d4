#!/usr/bin/env python3
"""Desk-scale end-to-end demo: generate a corpus, train both models, and
synthesize a sit-then-grab chain in a small room with a wall.

Writes everything under --out (default ./demo_out): corpus/, walk.bin,
trans.bin, motion.json (+ plan sidecar), report.json, motion.bvh.
Takes a few minutes on a laptop.
"""

import argparse
import json
import subprocess
import sys
from pathlib import Path

SCENE = {
    "floor_height": 0.0,
    "bounds": {"min": [-2.0, -3.0], "max": [9.0, 5.0]},
    "obstacles": [
        {"label": "chair", "min": [2.8, 0.0, 1.7], "max": [3.3, 0.45, 2.2]},
        {"label": "shelf", "min": [5.0, 0.0, -1.2], "max": [5.6, 1.5, -0.4]},
        {"label": "wall", "min": [4.2, 0.0, -0.2], "max": [4.4, 2.0, 3.0]},
    ],
}

INSTRUCTIONS = {
    "commands": [
        {"verb": "sit", "label": "chair"},
        {"verb": "grab", "label": "shelf", "height": 1.1},
    ]
}


def run(*args):
    cmd = [sys.executable, "-m", "motionloom.cli", *map(str, args)]
    print("+", " ".join(cmd[2:]))
    subprocess.run(cmd, check=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("demo_out"))
    ap.add_argument("--epochs-walk", type=int, default=300)
    ap.add_argument("--epochs-trans", type=int, default=60)
    args = ap.parse_args()
    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    (out / "scene.json").write_text(json.dumps(SCENE, indent=2))
    (out / "instructions.json").write_text(json.dumps(INSTRUCTIONS, indent=2))

    run("gen-data", "--out", out / "corpus", "--clips", 5, "--seed", 0)

    from motionloom.gait import generate_gait_clip
    from motionloom.motion import save_motion_json

    save_motion_json(generate_gait_clip(speed=1.2, turn_rate=0.0, duration=2.0, seed=42),
                     out / "seed.json")

    manifest = out / "corpus" / "manifest.json"
    run("train", "walknet", "--corpus", manifest, "--out", out / "walk.bin",
        "--epochs", args.epochs_walk)
    run("train", "transnet", "--corpus", manifest, "--out", out / "trans.bin",
        "--epochs", args.epochs_trans)

    run("synth", "--scene", out / "scene.json", "--seed-motion", out / "seed.json",
        "--instructions", out / "instructions.json",
        "--walk", out / "walk.bin", "--trans", out / "trans.bin",
        "--corpus", manifest,
        "--out", out / "motion.json", "--bvh", out / "motion.bvh",
        "--report", out / "report.json")

    run("eval", "--motion", out / "motion.json", "--scene", out / "scene.json",
        "--plan", out / "motion.plan.json")


if __name__ == "__main__":
    main()
