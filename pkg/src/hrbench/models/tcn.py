"""Temporal convolutional network: residual blocks of dilated causal convs."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .. import tensor as T
from .base import ForecastModel, glorot_conv, glorot_matrix


class ReceptiveFieldWarning(UserWarning):
    """The configured stack cannot see the whole lookback window."""


@dataclass(frozen=True)
class TcnConfig:
    blocks: int = 5
    kernel: int = 3
    dilation_base: int = 2
    channels: int = 32

    def __post_init__(self):
        if min(self.blocks, self.kernel, self.dilation_base, self.channels) < 1:
            raise ValueError("all TCN config fields must be >= 1")

    def receptive_field(self) -> int:
        span = sum(self.dilation_base**i for i in range(self.blocks))
        return 1 + (self.kernel - 1) * span


class TcnForecaster(ForecastModel):
    """Block i dilates by dilation_base**i; each block is conv -> ReLU ->
    conv plus an identity (or 1x1-projected) skip. A linear head reads the
    last timestep's features."""

    name = "tcn"

    def __init__(self, lookback: int, horizon: int, config: TcnConfig | None = None, seed: int = 0):
        config = config or TcnConfig()
        if config.receptive_field() < lookback:
            warnings.warn(
                f"TCN receptive field {config.receptive_field()} < lookback {lookback}; "
                "the earliest samples cannot influence the forecast",
                ReceptiveFieldWarning,
                stacklevel=2,
            )
        super().__init__(lookback, horizon, config, seed)

    def _init_arrays(self, rng):
        cfg = self.config
        c = cfg.channels
        for i in range(cfg.blocks):
            cin = 1 if i == 0 else c
            yield f"b{i}.conv1.w", glorot_conv(rng, (c, cin, cfg.kernel))
            yield f"b{i}.conv1.b", np.zeros(c)
            yield f"b{i}.conv2.w", glorot_conv(rng, (c, c, cfg.kernel))
            yield f"b{i}.conv2.b", np.zeros(c)
            if cin != c:
                yield f"b{i}.skip.w", glorot_conv(rng, (c, cin, 1))
        yield "head.w", glorot_matrix(rng, c, self.horizon)
        yield "head.b", np.zeros(self.horizon)

    def _forward(self, batch: T.Tensor) -> T.Tensor:
        cfg = self.config
        bsz, length = batch.shape
        x = batch.reshape(bsz, 1, length)
        for i in range(cfg.blocks):
            dilation = cfg.dilation_base**i
            y = T.conv1d_dilated(x, self._p[f"b{i}.conv1.w"], dilation, bias=self._p[f"b{i}.conv1.b"])
            y = T.relu(y)
            y = T.conv1d_dilated(y, self._p[f"b{i}.conv2.w"], dilation, bias=self._p[f"b{i}.conv2.b"])
            skip = x if f"b{i}.skip.w" not in self._p else T.conv1d_dilated(x, self._p[f"b{i}.skip.w"], 1)
            x = T.add(y, skip)
        last = x[:, :, -1]
        return T.add(T.matmul(last, self._p["head.w"]), self._p["head.b"])
