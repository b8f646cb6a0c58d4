"""Full-attention (BERT-style) encoder shared by the walking and transition nets.

Input projection 219 -> embed, learned positional embeddings, L x (multi-head
self-attention + feedforward, each with residual and post layer-norm), output
projection embed -> 219. Non-causal: every frame attends to every frame.
"""

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .motion import FRAME_DIM


class SequenceLengthError(ValueError):
    pass


@dataclass
class EncoderConfig:
    layers: int = 2
    heads: int = 4
    embed_dim: int = 128
    feedforward_dim: int = 0  # 0 -> 4 * embed_dim
    input_dim: int = FRAME_DIM
    max_sequence_length: int = 128
    dropout: float = 0.0

    def __post_init__(self):
        if self.feedforward_dim == 0:
            self.feedforward_dim = 4 * self.embed_dim
        if self.embed_dim % self.heads != 0:
            raise ValueError(f"embed_dim {self.embed_dim} not divisible by heads {self.heads}")

    @staticmethod
    def paper_scale(max_sequence_length=128):
        return EncoderConfig(layers=3, heads=8, embed_dim=512, max_sequence_length=max_sequence_length)

    def to_dict(self):
        return {
            "layers": self.layers,
            "heads": self.heads,
            "embed_dim": self.embed_dim,
            "feedforward_dim": self.feedforward_dim,
            "input_dim": self.input_dim,
            "max_sequence_length": self.max_sequence_length,
            "dropout": self.dropout,
        }

    @staticmethod
    def from_dict(doc):
        return EncoderConfig(**doc)


def init_params(config, seed=0, dtype=np.float64):
    """Glorot-initialized parameter dict keyed by the weight-file tensor names."""
    rng = np.random.default_rng(seed)
    e, f, d = config.embed_dim, config.feedforward_dim, config.input_dim
    params = {
        "inproj.weight": ad.glorot(rng, d, e, dtype=dtype),
        "inproj.bias": ad.parameter(np.zeros(e), dtype=dtype),
        "pos": ad.parameter(rng.normal(0.0, 0.02, size=(config.max_sequence_length, e)), dtype=dtype),
        "outproj.weight": ad.glorot(rng, e, d, dtype=dtype),
        "outproj.bias": ad.parameter(np.zeros(d), dtype=dtype),
    }
    for i in range(config.layers):
        p = f"layer{i}"
        params[f"{p}.attn.wq"] = ad.glorot(rng, e, e, dtype=dtype)
        params[f"{p}.attn.wk"] = ad.glorot(rng, e, e, dtype=dtype)
        params[f"{p}.attn.wv"] = ad.glorot(rng, e, e, dtype=dtype)
        params[f"{p}.attn.wo"] = ad.glorot(rng, e, e, dtype=dtype)
        params[f"{p}.attn.bias"] = ad.parameter(np.zeros(e), dtype=dtype)
        params[f"{p}.norm1.scale"] = ad.parameter(np.ones(e), dtype=dtype)
        params[f"{p}.norm1.shift"] = ad.parameter(np.zeros(e), dtype=dtype)
        params[f"{p}.ff.w1"] = ad.glorot(rng, e, f, dtype=dtype)
        params[f"{p}.ff.b1"] = ad.parameter(np.zeros(f), dtype=dtype)
        params[f"{p}.ff.w2"] = ad.glorot(rng, f, e, dtype=dtype)
        params[f"{p}.ff.b2"] = ad.parameter(np.zeros(e), dtype=dtype)
        params[f"{p}.norm2.scale"] = ad.parameter(np.ones(e), dtype=dtype)
        params[f"{p}.norm2.shift"] = ad.parameter(np.zeros(e), dtype=dtype)
    return params


def _split_heads(t, heads):
    """[..., T, E] -> [..., heads, T, E/heads]."""
    *lead, seq, embed = t.shape
    dh = embed // heads
    t = ad.reshape(t, (*lead, seq, heads, dh))
    axes = list(range(len(lead))) + [len(lead) + 1, len(lead), len(lead) + 2]
    return ad.permute(t, axes)


def _merge_heads(t):
    """[..., heads, T, dh] -> [..., T, heads*dh]."""
    *lead, heads, seq, dh = t.shape
    axes = list(range(len(lead))) + [len(lead) + 1, len(lead), len(lead) + 2]
    t = ad.permute(t, axes)
    return ad.reshape(t, (*lead, seq, heads * dh))


def encode(x, config, params, mask=None):
    """Run the encoder. `x`: Tensor or array of shape [T, 219] or [B, T, 219].

    `mask`, when given, is a length-T boolean array (True = visible); frames
    with False are zeroed before the input projection, attention stays full.
    """
    if not isinstance(x, ad.Tensor):
        x = ad.Tensor(x)
    seq = x.shape[-2]
    if seq > config.max_sequence_length:
        raise SequenceLengthError(
            f"sequence length {seq} exceeds max_sequence_length {config.max_sequence_length}"
        )
    if x.shape[-1] != config.input_dim:
        raise ad.DimensionError(f"expected input dim {config.input_dim}, got {x.shape[-1]}")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (seq,):
            raise ad.DimensionError(f"mask shape {mask.shape} != ({seq},)")
        x = ad.mul(x, ad.Tensor(mask[:, None].astype(x.dtype)))

    h = ad.linear(x, params["inproj.weight"], params["inproj.bias"])
    h = ad.add(h, ad.take_rows(params["pos"], 0, seq))
    scale = 1.0 / np.sqrt(config.embed_dim // config.heads)
    for i in range(config.layers):
        p = f"layer{i}"
        q = _split_heads(ad.linear(h, params[f"{p}.attn.wq"]), config.heads)
        k = _split_heads(ad.linear(h, params[f"{p}.attn.wk"]), config.heads)
        v = _split_heads(ad.linear(h, params[f"{p}.attn.wv"]), config.heads)
        scores = ad.mul(ad.matmul(q, ad.transpose(k)), scale)
        attn = ad.matmul(ad.softmax(scores), v)
        attn = ad.linear(_merge_heads(attn), params[f"{p}.attn.wo"], params[f"{p}.attn.bias"])
        h = ad.layer_norm(ad.add(h, attn), params[f"{p}.norm1.scale"], params[f"{p}.norm1.shift"])
        ff = ad.linear(ad.gelu(ad.linear(h, params[f"{p}.ff.w1"], params[f"{p}.ff.b1"])),
                       params[f"{p}.ff.w2"], params[f"{p}.ff.b2"])
        h = ad.layer_norm(ad.add(h, ff), params[f"{p}.norm2.scale"], params[f"{p}.norm2.shift"])
    return ad.linear(h, params["outproj.weight"], params["outproj.bias"])
