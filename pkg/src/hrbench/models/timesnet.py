"""Period-folding forecaster: FFT period detection plus 2-D convolutions.

The window is first projected from the lookback length to lookback +
horizon, then each row's strongest non-DC frequency bins pick candidate
periods. Per period the sequence folds into a (cycles x period) grid,
runs through a stack of same-padded 3x3 convolutions, unfolds, and the
branch outputs combine by a softmax over the matching FFT amplitudes.
Period choice is discrete (no gradient); the amplitudes, folding path,
and projection all carry gradients.

Rows select periods independently, so one batch row can never influence
another row's forecast; rows that agree on a period share one batched
convolution pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import fft as _fft
from .. import tensor as T
from .base import ForecastModel, glorot_conv, glorot_matrix


@dataclass(frozen=True)
class TimesNetConfig:
    fft_blocks: int = 1
    conv_blocks: int = 4
    top_k_periods: int = 3
    conv_channels: int = 8

    def __post_init__(self):
        if self.fft_blocks != 1:
            raise ValueError("exactly one FFT block is supported")
        if self.conv_blocks < 1 or self.top_k_periods < 1 or self.conv_channels < 1:
            raise ValueError("conv_blocks, top_k_periods, conv_channels must be >= 1")


def select_periods(values: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-row (bins, periods) of the k strongest non-DC frequencies.

    `values` is [..., n]; bins index the rfft magnitude array and periods
    are round(n / bin), clipped to [1, n]. Ties resolve to the lower bin.
    """
    periods, bins, _ = _fft.dominant_periods(values, k)
    return bins, periods


class TimesNetForecaster(ForecastModel):
    """After each forward, `last_periods` [B, k] and `last_period_weights`
    [B, k] expose the selected periods and their softmax weights."""

    name = "timesnet"

    def __init__(self, lookback: int, horizon: int, config: TimesNetConfig | None = None, seed: int = 0):
        super().__init__(lookback, horizon, config or TimesNetConfig(), seed)
        self.last_periods: np.ndarray | None = None
        self.last_period_weights: np.ndarray | None = None

    def _conv_channel_plan(self) -> list[tuple[int, int]]:
        cfg = self.config
        widths = [1] + [cfg.conv_channels] * (cfg.conv_blocks - 1) + [1]
        return list(zip(widths[:-1], widths[1:]))

    def _init_arrays(self, rng):
        total = self.lookback + self.horizon
        yield "extend.w", glorot_matrix(rng, self.lookback, total)
        yield "extend.b", np.zeros(total)
        for j, (cin, cout) in enumerate(self._conv_channel_plan()):
            yield f"conv{j}.w", glorot_conv(rng, (cout, cin, 3, 3))
            yield f"conv{j}.b", np.zeros(cout)
        yield "head.w", glorot_matrix(rng, total, self.horizon)
        yield "head.b", np.zeros(self.horizon)

    def _conv_stack(self, grid: T.Tensor) -> T.Tensor:
        h = grid
        for j in range(self.config.conv_blocks):
            h = T.relu(T.conv2d_same(h, self._p[f"conv{j}.w"], bias=self._p[f"conv{j}.b"]))
        return h

    def _forward(self, batch: T.Tensor) -> T.Tensor:
        cfg = self.config
        bsz = batch.shape[0]
        total = self.lookback + self.horizon
        seq = T.add(T.matmul(batch, self._p["extend.w"]), self._p["extend.b"])
        mags = T.rfft_magnitudes(seq)
        k = min(cfg.top_k_periods, mags.shape[-1] - 1)
        bins, periods = select_periods(seq.data, k)

        logits = T.take_along_last(mags, bins)
        weights = T.softmax(logits, axis=-1)
        self.last_periods = periods.copy()
        self.last_period_weights = weights.data.copy()

        branches = []
        for j in range(k):
            branch_periods = periods[:, j]
            outs, row_order = [], []
            for p in np.unique(branch_periods):
                rows = np.nonzero(branch_periods == p)[0]
                sub = T.index_rows(seq, rows)
                cycles = -(-total // int(p))
                pad = cycles * int(p) - total
                if pad:
                    sub = T.concat([sub, T.Tensor(np.zeros((rows.size, pad)))], axis=1)
                grid = sub.reshape(rows.size, 1, cycles, int(p))
                folded = self._conv_stack(grid)
                outs.append(folded.reshape(rows.size, cycles * int(p))[:, :total])
                row_order.append(rows)
            perm = np.concatenate(row_order)
            branch = T.index_rows(T.concat(outs, axis=0), np.argsort(perm))
            branches.append(branch.reshape(bsz, 1, total))
        stacked = T.concat(branches, axis=1)
        agg = T.matmul(weights.reshape(bsz, 1, k), stacked).reshape(bsz, total)
        return T.add(T.matmul(agg, self._p["head.w"]), self._p["head.b"])
