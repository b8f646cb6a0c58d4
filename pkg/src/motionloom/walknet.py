"""Walking model: K canonicalized frames in, the next K frames out, rolled out
recursively with stride 1 so motion converges at the canonical origin."""

import logging
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .canonical import canonicalize, frame_from_pose, frame_from_waypoint, uncanonicalize
from .motion import FRAME_DIM, MotionClip, devectorize_frame, vectorize_frame
from .transformer import EncoderConfig, encode, init_params

log = logging.getLogger(__name__)

ARRIVE_RADIUS = 0.3
FINAL_RADIUS = 0.1
MAX_ROOT_SPEED = 3.0  # m/s sanity clamp


class EmptyDatasetError(ValueError):
    pass


class RolloutError(RuntimeError):
    def __init__(self, message, partial_clip, arrivals):
        super().__init__(message)
        self.partial_clip = partial_clip
        self.arrivals = arrivals


@dataclass
class WalkDataset:
    inputs: np.ndarray  # (N, K, 219)
    targets: np.ndarray  # (N, K, 219)

    def __len__(self):
        return len(self.inputs)


def build_walk_dataset(clips, k=30, samples_per_clip=8, seed=0):
    """Canonicalize each clip to its own last pose, then sample 2K windows."""
    rng = np.random.default_rng(seed)
    inputs, targets = [], []
    for ci, clip in enumerate(clips):
        length = len(clip)
        if length <= 2 * k:
            log.warning("clip %d too short for 2K window (L=%d, K=%d); skipped", ci, length, k)
            continue
        canon = canonicalize(clip.to_matrix(), frame_from_pose(clip.frames[-1]))
        for j in rng.integers(0, length - 2 * k + 1, size=samples_per_clip):
            inputs.append(canon[j : j + k])
            targets.append(canon[j + k : j + 2 * k])
    if not inputs:
        raise EmptyDatasetError("no clip long enough to sample 2K windows")
    return WalkDataset(inputs=np.stack(inputs), targets=np.stack(targets))


def train_walknet(dataset, encoder_config, training_config, init_seed=0):
    """Minimize MSE between predicted and target K-frame matrices."""
    from .training import TrainLoop

    if len(dataset) == 0:
        raise EmptyDatasetError("empty walk dataset")
    params = init_params(encoder_config, seed=init_seed, dtype=training_config.numpy_dtype())
    loop = TrainLoop(params, training_config)
    rng = np.random.default_rng(training_config.seed)
    n = len(dataset)
    bs = min(training_config.batch_size, n)
    for _ in range(training_config.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, bs):
            idx = order[lo : lo + bs]
            pred = encode(dataset.inputs[idx], encoder_config, params)
            if not loop.update(ad.mse(pred, dataset.targets[idx])):
                log.error("walknet training diverged at step %d; restored last epoch", loop.step)
                return loop.result()
        loop.end_epoch()
    return loop.result()


def predict_next(params, encoder_config, x_in):
    x_in = np.asarray(x_in, dtype=float)
    if x_in.shape[1:] != (FRAME_DIM,):
        raise ad.DimensionError(f"expected (K, {FRAME_DIM}) input, got {x_in.shape}")
    return encode(x_in, encoder_config, params).data


def _planar(row):
    return np.array([row[0], row[2]])


def rollout(params, encoder_config, seed_frames, goals, arrive_radius=ARRIVE_RADIUS,
            max_frames=2000, final_radius=FINAL_RADIUS, stop_predicate=None, frame_rate=30.0):
    """Autoregressive stride-1 path following.

    `seed_frames`: (K, 219) in scene coordinates. `goals`: [(q, l)] waypoint /
    unit-tangent pairs. Per appended frame only the first predicted pose is
    kept. A goal is passed when the root is within `arrive_radius` of it or
    has crossed it along the tangent; the final goal uses `final_radius`.
    Returns (MotionClip, arrivals) where arrivals[p] = frame index at which
    goal p was reached. Raises RolloutError when max_frames runs out.
    """
    if not goals:
        raise ValueError("rollout needs at least one goal")
    k = seed_frames.shape[0]
    frames = [row.copy() for row in np.asarray(seed_frames, dtype=float)]
    arrivals = []
    goal_idx = 0
    max_step = MAX_ROOT_SPEED / frame_rate

    def arrived(root_row, q, tangent, last_goal):
        planar_d = np.linalg.norm(_planar(root_row) - np.array([q[0], q[2]]))
        passed = float((_planar(root_row) - np.array([q[0], q[2]])) @ np.array([tangent[0], tangent[2]])) > 0.0
        radius = final_radius if last_goal else arrive_radius
        return planar_d < radius or passed

    # a goal already satisfied by the seed is logged at frame 0 extra frames
    while goal_idx < len(goals) and arrived(frames[-1], goals[goal_idx][0], goals[goal_idx][1],
                                            goal_idx == len(goals) - 1):
        arrivals.append(len(frames) - 1)
        goal_idx += 1
    appended = 0
    while goal_idx < len(goals):
        if appended >= max_frames:
            partial = MotionClip.from_matrix(np.stack(frames), frame_rate)
            raise RolloutError(
                f"rollout exhausted {max_frames} frames before goal {goal_idx}", partial, arrivals
            )
        q, tangent = goals[goal_idx]
        frame = frame_from_waypoint(q, tangent)
        window = np.stack(frames[-k:])
        pred = encode(canonicalize(window, frame), encoder_config, params).data
        nxt = uncanonicalize(pred[:1], frame)[0]
        # re-orthonormalize and clamp root speed
        nxt = vectorize_frame(devectorize_frame(nxt))
        prev = frames[-1]
        delta = nxt[:3] - prev[:3]
        step_len = np.linalg.norm(delta)
        if step_len > max_step:
            log.warning("root speed clamp hit (%.2f m/s)", step_len * frame_rate)
            nxt = nxt.copy()
            nxt[:3] = prev[:3] + delta * (max_step / step_len)
        frames.append(nxt)
        appended += 1
        while goal_idx < len(goals) and arrived(nxt, goals[goal_idx][0], goals[goal_idx][1],
                                                goal_idx == len(goals) - 1):
            arrivals.append(len(frames) - 1)
            goal_idx += 1
        if stop_predicate is not None and stop_predicate(nxt):
            break
    return MotionClip.from_matrix(np.stack(frames), frame_rate), arrivals


def save_walknet(path, params, encoder_config, k):
    ad.save_weights(path, params, hyperparams={"model": "walknet", "K": k, "config": encoder_config.to_dict()})


def load_walknet(path):
    params, hyper = ad.load_weights(path)
    if hyper.get("model") != "walknet":
        raise ValueError(f"{path}: expected a walknet weight file, got {hyper.get('model')!r}")
    return params, EncoderConfig.from_dict(hyper["config"]), int(hyper["K"])
