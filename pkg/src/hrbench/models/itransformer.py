"""Inverted transformer: attention runs across derived variate tokens.

Feature-axis attention is degenerate on a single variate, so the
univariate window is expanded into derived channels (raw values, first
difference, centered rolling mean) before each channel's full history is
embedded as one token.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d

from .. import tensor as T
from .base import ForecastModel, glorot_matrix
from ._transformer import encoder_layer_arrays, encoder_layer_forward

ROLLING_WIDTH = 5


@dataclass(frozen=True)
class ITransformerConfig:
    blocks: int = 4
    layers_per_block: int = 2
    n_heads: int = 8
    d_model: int = 64
    variate_channels: int = 3

    def __post_init__(self):
        if min(self.blocks, self.layers_per_block, self.n_heads, self.d_model) < 1:
            raise ValueError("all iTransformer config fields must be >= 1")
        if self.variate_channels < 1 or self.variate_channels > 3:
            raise ValueError("variate_channels must be between 1 and 3")
        if self.d_model % self.n_heads != 0:
            raise ValueError(f"d_model {self.d_model} must divide by n_heads {self.n_heads}")


def derive_channels(x: np.ndarray, n_channels: int) -> np.ndarray:
    """[B, L] -> [B, C, L]: raw series, zero-front-padded first difference,
    centered rolling mean with edge replication."""
    parts = [x]
    if n_channels >= 2:
        diff = np.concatenate([np.zeros((x.shape[0], 1)), np.diff(x, axis=1)], axis=1)
        parts.append(diff)
    if n_channels >= 3:
        parts.append(uniform_filter1d(x, size=ROLLING_WIDTH, axis=1, mode="nearest"))
    return np.stack(parts[:n_channels], axis=1)


class ITransformerForecaster(ForecastModel):
    """One token per derived channel via a shared length-to-d_model map;
    the raw-series token feeds the forecast head. `last_attention` mirrors
    the PatchTST convention."""

    name = "itransformer"

    def __init__(self, lookback: int, horizon: int, config: ITransformerConfig | None = None, seed: int = 0):
        super().__init__(lookback, horizon, config or ITransformerConfig(), seed)
        self.last_attention: list[np.ndarray] = []

    @property
    def n_layers(self) -> int:
        return self.config.blocks * self.config.layers_per_block

    def _init_arrays(self, rng):
        cfg = self.config
        yield "embed.w", glorot_matrix(rng, self.lookback, cfg.d_model)
        yield "embed.b", np.zeros(cfg.d_model)
        for i in range(self.n_layers):
            yield from encoder_layer_arrays(rng, f"enc{i}", cfg.d_model)
        yield "final_ln.g", np.ones(cfg.d_model)
        yield "final_ln.b", np.zeros(cfg.d_model)
        yield "head.w", glorot_matrix(rng, cfg.d_model, self.horizon)
        yield "head.b", np.zeros(self.horizon)

    def _forward(self, batch: T.Tensor) -> T.Tensor:
        cfg = self.config
        # the window is a data leaf here; channel derivation happens outside
        # the graph and gradients flow only into parameters
        channels = T.Tensor(derive_channels(batch.data, cfg.variate_channels))
        x = T.add(T.matmul(channels, self._p["embed.w"]), self._p["embed.b"])
        self.last_attention = []
        for i in range(self.n_layers):
            x = encoder_layer_forward(self._p, f"enc{i}", x, cfg.n_heads, self.last_attention)
        x = T.layer_norm(x, self._p["final_ln.g"], self._p["final_ln.b"])
        raw_token = x[:, 0, :]
        return T.add(T.matmul(raw_token, self._p["head.w"]), self._p["head.b"])
