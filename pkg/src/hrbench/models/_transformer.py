"""Pre-norm multi-head encoder layer shared by the transformer models."""

from __future__ import annotations

import numpy as np

from .. import tensor as T
from .base import glorot_matrix

FFN_MULT = 4  # feed-forward width relative to d_model


def encoder_layer_arrays(rng, prefix: str, d_model: int):
    """(name, array) pairs for one layer, in forward order."""
    yield f"{prefix}.ln1.g", np.ones(d_model)
    yield f"{prefix}.ln1.b", np.zeros(d_model)
    for proj in ("q", "k", "v", "o"):
        yield f"{prefix}.w{proj}", glorot_matrix(rng, d_model, d_model)
        yield f"{prefix}.b{proj}", np.zeros(d_model)
    yield f"{prefix}.ln2.g", np.ones(d_model)
    yield f"{prefix}.ln2.b", np.zeros(d_model)
    yield f"{prefix}.ffn.w1", glorot_matrix(rng, d_model, FFN_MULT * d_model)
    yield f"{prefix}.ffn.b1", np.zeros(FFN_MULT * d_model)
    yield f"{prefix}.ffn.w2", glorot_matrix(rng, FFN_MULT * d_model, d_model)
    yield f"{prefix}.ffn.b2", np.zeros(d_model)


def _project(p, prefix: str, proj: str, x: T.Tensor) -> T.Tensor:
    return T.add(T.matmul(x, p[f"{prefix}.w{proj}"]), p[f"{prefix}.b{proj}"])


def encoder_layer_forward(p: dict, prefix: str, x: T.Tensor, n_heads: int,
                          attn_sink: list | None = None) -> T.Tensor:
    """x: [B, n, d] -> [B, n, d]; appends this layer's attention weights
    (numpy, [B, heads, n, n]) to attn_sink when given."""
    bsz, n_tok, d_model = x.shape
    d_head = d_model // n_heads
    a = T.layer_norm(x, p[f"{prefix}.ln1.g"], p[f"{prefix}.ln1.b"])
    heads = []
    for proj in ("q", "k", "v"):
        full = _project(p, prefix, proj, a)
        heads.append(full.reshape(bsz, n_tok, n_heads, d_head).transpose(0, 2, 1, 3))
    attended, weights = T.scaled_dot_attention(*heads)
    if attn_sink is not None:
        attn_sink.append(weights)
    merged = attended.transpose(0, 2, 1, 3).reshape(bsz, n_tok, d_model)
    x = T.add(x, _project(p, prefix, "o", merged))
    a2 = T.layer_norm(x, p[f"{prefix}.ln2.g"], p[f"{prefix}.ln2.b"])
    hidden = T.gelu(T.add(T.matmul(a2, p[f"{prefix}.ffn.w1"]), p[f"{prefix}.ffn.b1"]))
    ffn = T.add(T.matmul(hidden, p[f"{prefix}.ffn.w2"]), p[f"{prefix}.ffn.b2"])
    return T.add(x, ffn)
