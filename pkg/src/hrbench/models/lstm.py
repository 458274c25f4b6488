"""Stacked LSTM with a dense readout of the final hidden state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import tensor as T
from .base import ForecastModel, glorot_matrix


@dataclass(frozen=True)
class LstmConfig:
    layers: int = 3
    hidden: int = 32

    def __post_init__(self):
        if self.layers < 1 or self.hidden < 1:
            raise ValueError("layers and hidden must be >= 1")


class LstmForecaster(ForecastModel):
    """Scalar readings enter one per timestep; the top layer's last hidden
    state maps through a dense layer to the horizon.

    Gate layout inside the fused weight matrices is (input, forget,
    output, candidate); the forget-gate bias starts at 1.
    """

    name = "lstm"

    def __init__(self, lookback: int, horizon: int, config: LstmConfig | None = None, seed: int = 0):
        super().__init__(lookback, horizon, config or LstmConfig(), seed)

    def _init_arrays(self, rng):
        cfg = self.config
        h = cfg.hidden
        for layer in range(cfg.layers):
            n_in = 1 if layer == 0 else h
            yield f"l{layer}.wx", glorot_matrix(rng, n_in, 4 * h)
            yield f"l{layer}.wh", glorot_matrix(rng, h, 4 * h)
            bias = np.zeros(4 * h)
            bias[h : 2 * h] = 1.0  # forget gate
            yield f"l{layer}.b", bias
        yield "head.w", glorot_matrix(rng, h, self.horizon)
        yield "head.b", np.zeros(self.horizon)

    def _forward(self, batch: T.Tensor) -> T.Tensor:
        cfg = self.config
        bsz, length = batch.shape
        x = batch.reshape(bsz, length, 1)
        for layer in range(cfg.layers):
            n_in = 1 if layer == 0 else cfg.hidden
            flat = x.reshape(bsz * length, n_in)
            gates = T.add(T.matmul(flat, self._p[f"l{layer}.wx"]), self._p[f"l{layer}.b"])
            x = T.lstm_scan(gates.reshape(bsz, length, 4 * cfg.hidden), self._p[f"l{layer}.wh"])
        last = x[:, -1, :]
        return T.add(T.matmul(last, self._p["head.w"]), self._p["head.b"])
