"""Run configuration: desk-scale defaults, JSON config files, flag overrides
(flags win), and a resolved-config echo for reproducibility."""

import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .training import TrainingConfig
from .transformer import EncoderConfig

ENV_CONFIG = "MOTIONLOOM_CONFIG"


@dataclass
class RuntimeConfig:
    arrive_radius: float = 0.3
    stop_distance: float = 1.2
    walkout_distance: float = 1.5
    waypoint_spacing: float = 1.0
    cell_size: float = 0.1
    agent_radius: float = 0.3


@dataclass
class Config:
    skeleton_path: str = None  # None -> packaged default skeleton
    corpus_manifest: str = None
    walk_k: int = 30
    walk_encoder: EncoderConfig = field(default_factory=EncoderConfig)
    trans_m: int = 60
    trans_encoder: EncoderConfig = field(default_factory=EncoderConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    runtime: RuntimeConfig = field(default_factory=RuntimeConfig)

    def to_dict(self):
        return {
            "skeleton_path": self.skeleton_path,
            "corpus_manifest": self.corpus_manifest,
            "walk_k": self.walk_k,
            "walk_encoder": self.walk_encoder.to_dict(),
            "trans_m": self.trans_m,
            "trans_encoder": self.trans_encoder.to_dict(),
            "training": asdict(self.training),
            "runtime": asdict(self.runtime),
        }

    @staticmethod
    def from_dict(doc):
        cfg = Config()
        plain = {k: v for k, v in doc.items() if k in ("skeleton_path", "corpus_manifest", "walk_k", "trans_m")}
        cfg = replace(cfg, **plain)
        if "walk_encoder" in doc:
            cfg.walk_encoder = EncoderConfig.from_dict(doc["walk_encoder"])
        if "trans_encoder" in doc:
            cfg.trans_encoder = EncoderConfig.from_dict(doc["trans_encoder"])
        if "training" in doc:
            cfg.training = TrainingConfig(**doc["training"])
        if "runtime" in doc:
            cfg.runtime = RuntimeConfig(**doc["runtime"])
        return cfg

    def load_skeleton(self):
        from .skeleton import Skeleton

        return Skeleton.load(self.skeleton_path) if self.skeleton_path else Skeleton.default()

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")


def paper_scale(cfg):
    """Full-size hyperparameters: larger encoders, M=120, the low learning
    rate that scale needs."""
    big = EncoderConfig.paper_scale()
    return replace(
        cfg,
        walk_encoder=big,
        trans_m=120,
        trans_encoder=big,
        training=replace(cfg.training, learning_rate=1e-5),
    )


def load_config(path=None, overrides=None):
    """Resolution order: defaults < config file (flag, else $MOTIONLOOM_CONFIG)
    < explicit overrides."""
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path:
        with open(path) as f:
            cfg = Config.from_dict(json.load(f))
    else:
        cfg = Config()
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        obj = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            obj = getattr(obj, p)
        if not hasattr(obj, parts[-1]):
            raise KeyError(f"unknown config key {key!r}")
        setattr(obj, parts[-1], value)
    return cfg


def echo_config(cfg, out_path):
    """Write the fully-resolved config next to an output artifact."""
    out_path = Path(out_path)
    echo = out_path.with_name(out_path.stem + ".config.json")
    cfg.save(echo)
    return echo
