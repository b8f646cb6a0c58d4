"""Masked-autoencoder inbetweener: recovers a full M-frame window from a
visible seed half plus the final anchor frame, trained with a progressively
growing mask."""

import logging
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .canonical import canonicalize, frame_from_pose, uncanonicalize
from .motion import FRAME_DIM, MotionClip, devectorize_frame, vectorize_frame
from .transformer import EncoderConfig, encode, init_params

log = logging.getLogger(__name__)


class SeedLengthError(ValueError):
    pass


def mask_schedule(progress, m=120):
    """Invisible-block length as training progresses: linear from 1 to
    M/2 - 1 over the first half of training, then held."""
    if not 0.0 <= progress <= 1.0:
        raise ValueError(f"progress {progress} outside [0, 1]")
    frac = min(1.0, progress / 0.5)
    return int(round(1 + frac * (m // 2 - 1 - 1)))


def window_mask(m, mask_length):
    """Visibility booleans: first M/2 frames and the anchor frame are visible;
    the invisible block is contiguous and ends at M-2."""
    mask = np.ones(m, dtype=bool)
    mask[m - 1 - mask_length : m - 1] = False
    return mask


@dataclass
class MaskedBatch:
    full: np.ndarray  # (B, M, 219) canonicalized windows
    mask: np.ndarray  # (M,) visibility booleans

    @property
    def masked_input(self):
        return self.full * self.mask[None, :, None]


def build_masked_batch(clips, m, mask_length, seed, batch_size=32):
    """Sample M-frame windows, each canonicalized so its last frame sits at
    the origin facing the canonical axis."""
    rng = np.random.default_rng(seed)
    usable = []
    for ci, clip in enumerate(clips):
        if len(clip) < m:
            log.warning("clip %d shorter than M=%d; skipped", ci, m)
            continue
        usable.append(clip)
    if not usable:
        raise ValueError(f"no clip has at least M={m} frames")
    windows = []
    for _ in range(batch_size):
        clip = usable[rng.integers(0, len(usable))]
        j = rng.integers(0, len(clip) - m + 1)
        window = clip.to_matrix()[j : j + m]
        last = devectorize_frame(window[-1])
        windows.append(canonicalize(window, frame_from_pose(last)))
    return MaskedBatch(full=np.stack(windows), mask=window_mask(m, mask_length))


def train_transnet(clips, m, encoder_config, training_config, steps_per_epoch=32, init_seed=0):
    """MSE over all frames (visible reconstruction + infill), mask length
    driven by global-step progress."""
    from .training import TrainLoop

    # pre-vectorize once; build_masked_batch re-canonicalizes windows per draw
    params = init_params(encoder_config, seed=init_seed, dtype=training_config.numpy_dtype())
    loop = TrainLoop(params, training_config)
    total_steps = max(1, training_config.epochs * steps_per_epoch)
    for epoch in range(training_config.epochs):
        for s in range(steps_per_epoch):
            progress = loop.step / total_steps
            mask_len = mask_schedule(progress, m)
            batch = build_masked_batch(
                clips, m, mask_len, seed=training_config.seed + loop.step,
                batch_size=training_config.batch_size,
            )
            pred = encode_masked(batch.masked_input, encoder_config, params, batch.mask)
            if not loop.update(ad.mse(pred, batch.full)):
                log.error("transnet training diverged at step %d; restored last epoch", loop.step)
                return loop.result()
        loop.end_epoch()
    return loop.result()


def encode_masked(masked_input, encoder_config, params, mask):
    return encode(masked_input, encoder_config, params, mask=mask)


def infill(params, encoder_config, m, seed_frames, anchor_pose, frame_rate=30.0):
    """Synthesize an M-frame transition from an M/2-frame seed into the anchor.

    Everything runs in the anchor's canonical frame; the network output is
    used only for the invisible region, so the seed and anchor frames in the
    output equal the inputs bit-for-bit.
    """
    half = m // 2
    if isinstance(seed_frames, MotionClip):
        seed_frames = seed_frames.to_matrix()
    seed_frames = np.asarray(seed_frames, dtype=float)
    if seed_frames.shape != (half, FRAME_DIM):
        raise SeedLengthError(f"seed must be ({half}, {FRAME_DIM}), got {seed_frames.shape}")
    frame = frame_from_pose(anchor_pose)
    seed_c = canonicalize(seed_frames, frame)
    anchor_c = canonicalize(vectorize_frame(anchor_pose)[None, :], frame)[0]

    window = np.zeros((m, FRAME_DIM))
    window[:half] = seed_c
    window[m - 1] = anchor_c
    mask = window_mask(m, m - 1 - half)
    pred = encode(window, encoder_config, params, mask=mask).data

    out = pred.copy()
    out[:half] = seed_c  # overwrite contract: network never alters visible frames
    out[m - 1] = anchor_c
    for i in range(half, m - 1):
        out[i] = vectorize_frame(devectorize_frame(out[i]))
    out = uncanonicalize(out, frame)
    out[:half] = seed_frames  # bit-exact, skip the round trip through canonical
    out[m - 1] = vectorize_frame(anchor_pose)
    return MotionClip.from_matrix(out, frame_rate)


def save_transnet(path, params, encoder_config, m):
    ad.save_weights(path, params, hyperparams={"model": "transnet", "M": m, "config": encoder_config.to_dict()})


def load_transnet(path):
    params, hyper = ad.load_weights(path)
    if hyper.get("model") != "transnet":
        raise ValueError(f"{path}: expected a transnet weight file, got {hyper.get('model')!r}")
    return params, EncoderConfig.from_dict(hyper["config"]), int(hyper["M"])
