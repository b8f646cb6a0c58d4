"""Shared training-loop plumbing for the two sequence models."""

import csv
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad


@dataclass
class TrainingConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 2e-3  # desk-scale default; full-scale runs want ~1e-5
    seed: int = 0
    grad_clip: float = 1.0
    dtype: str = "float64"  # float32 available for throughput

    def numpy_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64


@dataclass
class TrainResult:
    params: dict
    losses: list  # [(step, loss)]
    diverged: bool = False

    def save_loss_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["step", "loss"])
            for step, loss in self.losses:
                w.writerow([step, f"{loss:.10g}"])


class TrainLoop:
    """Owns the Adam step, gradient clipping, divergence snapshots, and the
    loss curve; callers drive their own batching."""

    def __init__(self, params, config):
        self.params = params
        self.config = config
        self.opt = ad.Adam(params.values(), lr=config.learning_rate)
        self.losses = []
        self.step = 0
        self.diverged = False
        self._snapshot = self._take_snapshot()

    def _take_snapshot(self):
        return {k: p.data.copy() for k, p in self.params.items()}

    def end_epoch(self):
        self._snapshot = self._take_snapshot()

    def update(self, loss_tensor):
        """Backward + clip + Adam. Returns False when training must stop."""
        value = float(loss_tensor.data)
        if not np.isfinite(value):
            for k, p in self.params.items():
                p.data = self._snapshot[k]
                p.grad = None
            self.diverged = True
            return False
        loss_tensor.backward()
        ad.clip_grad_norm(self.params.values(), self.config.grad_clip)
        self.opt.step()
        self.losses.append((self.step, value))
        self.step += 1
        return True

    def result(self):
        return TrainResult(params=self.params, losses=self.losses, diverged=self.diverged)
