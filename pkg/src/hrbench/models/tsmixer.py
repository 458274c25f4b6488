"""MLP-mixer style forecaster alternating time and feature mixing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import tensor as T
from .base import ForecastModel, glorot_matrix


@dataclass(frozen=True)
class TsMixerConfig:
    mlp_layers: int = 5
    max_feature_dim: int = 16

    def __post_init__(self):
        if self.mlp_layers < 1 or self.max_feature_dim < 1:
            raise ValueError("mlp_layers and max_feature_dim must be >= 1")


class TsMixerForecaster(ForecastModel):
    """Univariate mixer: the single input channel alternates through dense
    time-mixing (across the lookback axis) and a bottleneck feature MLP no
    wider than max_feature_dim, each with a residual connection and layer
    normalization over time. A linear head reads the flattened features.
    """

    name = "tsmixer"

    def __init__(self, lookback: int, horizon: int, config: TsMixerConfig | None = None, seed: int = 0):
        super().__init__(lookback, horizon, config or TsMixerConfig(), seed)

    def _init_arrays(self, rng):
        cfg = self.config
        length = self.lookback
        for i in range(cfg.mlp_layers):
            if i % 2 == 0:  # time mixing
                yield f"m{i}.w", glorot_matrix(rng, length, length)
                yield f"m{i}.b", np.zeros(length)
            else:  # feature mixing through the bottleneck
                yield f"m{i}.w1", glorot_matrix(rng, 1, cfg.max_feature_dim)
                yield f"m{i}.b1", np.zeros(cfg.max_feature_dim)
                yield f"m{i}.w2", glorot_matrix(rng, cfg.max_feature_dim, 1)
                yield f"m{i}.b2", np.zeros(1)
            yield f"m{i}.ln_g", np.ones(length)
            yield f"m{i}.ln_b", np.zeros(length)
        yield "head.w", glorot_matrix(rng, length, self.horizon)
        yield "head.b", np.zeros(self.horizon)

    def _forward(self, batch: T.Tensor) -> T.Tensor:
        cfg = self.config
        bsz, length = batch.shape
        x = batch.reshape(bsz, 1, length)  # [B, C=1, L]
        for i in range(cfg.mlp_layers):
            if i % 2 == 0:
                y = T.relu(T.add(T.matmul(x, self._p[f"m{i}.w"]), self._p[f"m{i}.b"]))
            else:
                t = x.transpose(0, 2, 1)  # [B, L, 1]
                t = T.relu(T.add(T.matmul(t, self._p[f"m{i}.w1"]), self._p[f"m{i}.b1"]))
                t = T.add(T.matmul(t, self._p[f"m{i}.w2"]), self._p[f"m{i}.b2"])
                y = t.transpose(0, 2, 1)
            x = T.layer_norm(T.add(x, y), self._p[f"m{i}.ln_g"], self._p[f"m{i}.ln_b"])
        flat = x.reshape(bsz, length)
        return T.add(T.matmul(flat, self._p["head.w"]), self._p["head.b"])
