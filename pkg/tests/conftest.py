"""Shared fixtures. Trained desk models are session-scoped so the model-level
tests and the acceptance suite reuse one training run."""

import time

import numpy as np
import pytest

from motionloom import corpus, transnet, walknet
from motionloom.anchor import load_templates
from motionloom.gait import generate_gait_clip
from motionloom.skeleton import Skeleton
from motionloom.training import TrainingConfig
from motionloom.transformer import EncoderConfig


@pytest.fixture(scope="session")
def skeleton():
    return Skeleton.default()


@pytest.fixture(scope="session")
def templates():
    return load_templates()


@pytest.fixture(scope="session")
def gait_clips():
    """The five-clip desk training set used across the suite."""
    return [
        generate_gait_clip(speed=s, turn_rate=t, duration=4.0, seed=i)
        for i, (s, t) in enumerate(corpus.gait_grid(5))
    ]


@pytest.fixture(scope="session")
def desk_encoder():
    return EncoderConfig()


TRAIN_SECONDS = {}  # model name -> wall-clock training time, for runtime budgets

ACCEPTANCE_LINES = []  # filled by the acceptance suite, echoed after the run


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def walk_model(gait_clips, desk_encoder):
    """(params, encoder_config, K, TrainResult) for a desk-trained walker."""
    dataset = walknet.build_walk_dataset(gait_clips, k=30, samples_per_clip=8, seed=0)
    t0 = time.monotonic()
    result = walknet.train_walknet(dataset, desk_encoder, TrainingConfig(epochs=300, seed=0))
    TRAIN_SECONDS["walknet"] = time.monotonic() - t0
    return result.params, desk_encoder, 30, result


@pytest.fixture(scope="session")
def trans_model(gait_clips, templates, desk_encoder):
    """(params, encoder_config, M, TrainResult) for a desk-trained inbetweener."""
    full = gait_clips + corpus.transition_corpus(gait_clips, templates, blend_frames=30)
    t0 = time.monotonic()
    result = transnet.train_transnet(
        full, 60, desk_encoder, TrainingConfig(epochs=20, batch_size=16, seed=0), steps_per_epoch=30
    )
    TRAIN_SECONDS["transnet"] = time.monotonic() - t0
    return result.params, desk_encoder, 60, result


@pytest.fixture(scope="session")
def pose_db(gait_clips, skeleton):
    return corpus.harvest_walkout_poses(gait_clips, skeleton)


@pytest.fixture(scope="session")
def artifact_dir(tmp_path_factory, walk_model, trans_model):
    """Weight files plus a small corpus manifest, for the CLI and service."""
    out = tmp_path_factory.mktemp("artifacts")
    walk_params, walk_enc, k, _ = walk_model
    trans_params, trans_enc, m, _ = trans_model
    walknet.save_walknet(out / "walk.bin", walk_params, walk_enc, k)
    transnet.save_transnet(out / "trans.bin", trans_params, trans_enc, m)
    corpus.generate_corpus(out / "corpus", n_clips=3, seed=0, duration=4.0)
    return out


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
