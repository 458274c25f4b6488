"""Constant-last-value baseline: the weakest sane forecaster."""

from __future__ import annotations

import numpy as np

from .. import tensor as T
from .base import ForecastModel


class NaiveLastValue(ForecastModel):
    """Repeats the final lookback reading across the whole horizon."""

    name = "naive"

    def __init__(self, lookback: int, horizon: int, config=None, seed: int = 0):
        super().__init__(lookback, horizon, None, seed)
        self._ones = T.Tensor(np.ones((1, horizon)))

    def _init_arrays(self, rng):
        return ()

    def _forward(self, batch: T.Tensor) -> T.Tensor:
        return T.matmul(batch[:, -1:], self._ones)
