"""Patch-token transformer: the lookback window enters as patch embeddings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import tensor as T
from ..errors import InputError
from .base import ForecastModel, glorot_matrix, glorot_uniform
from ._transformer import encoder_layer_arrays, encoder_layer_forward


@dataclass(frozen=True)
class PatchTstConfig:
    patch_len: int = 12
    n_layers: int = 6
    n_heads: int = 8
    d_model: int = 64

    def __post_init__(self):
        if min(self.patch_len, self.n_layers, self.n_heads, self.d_model) < 1:
            raise ValueError("all PatchTST config fields must be >= 1")
        if self.d_model % self.n_heads != 0:
            raise ValueError(f"d_model {self.d_model} must divide by n_heads {self.n_heads}")


class PatchTstForecaster(ForecastModel):
    """Non-overlapping patches become tokens; windows that do not divide
    evenly are right-padded by replicating the last reading. Encoder layers
    are pre-norm with a final normalization before the flattened head.

    After each forward, `last_attention` holds one [B, heads, n, n] weight
    array per layer.
    """

    name = "patchtst"

    def __init__(self, lookback: int, horizon: int, config: PatchTstConfig | None = None, seed: int = 0):
        config = config or PatchTstConfig()
        if lookback < config.patch_len:
            raise InputError(f"lookback {lookback} shorter than patch length {config.patch_len}")
        self.n_patches = -(-lookback // config.patch_len)
        super().__init__(lookback, horizon, config, seed)
        self.last_attention: list[np.ndarray] = []

    def _init_arrays(self, rng):
        cfg = self.config
        yield "embed.w", glorot_matrix(rng, cfg.patch_len, cfg.d_model)
        yield "embed.b", np.zeros(cfg.d_model)
        yield "pos", glorot_uniform(rng, (self.n_patches, cfg.d_model), self.n_patches, cfg.d_model)
        for i in range(cfg.n_layers):
            yield from encoder_layer_arrays(rng, f"enc{i}", cfg.d_model)
        yield "final_ln.g", np.ones(cfg.d_model)
        yield "final_ln.b", np.zeros(cfg.d_model)
        yield "head.w", glorot_matrix(rng, self.n_patches * cfg.d_model, self.horizon)
        yield "head.b", np.zeros(self.horizon)

    def _forward(self, batch: T.Tensor) -> T.Tensor:
        cfg = self.config
        bsz, length = batch.shape
        padded_len = self.n_patches * cfg.patch_len
        if padded_len > length:
            # replicate the last value: [B,1] @ [1,pad] broadcasts it
            rep = T.matmul(batch[:, -1:], T.Tensor(np.ones((1, padded_len - length))))
            batch = T.concat([batch, rep], axis=1)
        tokens = batch.reshape(bsz, self.n_patches, cfg.patch_len)
        x = T.add(T.matmul(tokens, self._p["embed.w"]), self._p["embed.b"])
        x = T.add(x, self._p["pos"])
        self.last_attention = []
        for i in range(cfg.n_layers):
            x = encoder_layer_forward(self._p, f"enc{i}", x, cfg.n_heads, self.last_attention)
        x = T.layer_norm(x, self._p["final_ln.g"], self._p["final_ln.b"])
        flat = x.reshape(bsz, self.n_patches * cfg.d_model)
        return T.add(T.matmul(flat, self._p["head.w"]), self._p["head.b"])
