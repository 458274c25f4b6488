"""Heart-rate series ingestion, screening, normalization, windowing, folds.

All types here are immutable after construction and safe to share across
threads. Outlier screening reports but never removes points; readings are
retained for downstream analysis.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fft as _fft
from .errors import (
    ConfigError,
    DegenerateStatisticsError,
    IngestionError,
    InputError,
    InsufficientDataError,
)

DEFAULT_INTERVAL_SECONDS = 0.5


@dataclass(frozen=True)
class TimeSeries:
    """A univariate sequence of heart-rate readings in beats per minute."""

    id: str
    values: np.ndarray
    interval_seconds: float = DEFAULT_INTERVAL_SECONDS

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size == 0:
            raise InputError(f"series {self.id!r} must hold a non-empty 1-D value array")
        if not np.all(np.isfinite(values)):
            raise InputError(f"series {self.id!r} contains non-finite readings")
        if np.any(values <= 0):
            raise InputError(f"series {self.id!r} contains non-positive readings; bpm must be > 0")
        if not self.interval_seconds > 0:
            raise InputError(f"series {self.id!r} needs a positive sampling interval")

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class NormalizationParams:
    """Min-max parameters mapping the fitted span onto [0, 1]."""

    min: float
    max: float

    def __post_init__(self):
        if not self.max > self.min:
            raise DegenerateStatisticsError(
                f"min-max range is degenerate: min={self.min} max={self.max}"
            )


def fit_minmax(values) -> NormalizationParams:
    """Fit normalization on a training span only; constant spans are rejected."""
    values = _extract(values)
    return NormalizationParams(min=float(values.min()), max=float(values.max()))


def apply_minmax(values, p: NormalizationParams) -> np.ndarray:
    return (np.asarray(values, dtype=np.float64) - p.min) / (p.max - p.min)


def invert_minmax(values, p: NormalizationParams) -> np.ndarray:
    return np.asarray(values, dtype=np.float64) * (p.max - p.min) + p.min


def _extract(values) -> np.ndarray:
    if isinstance(values, TimeSeries):
        return values.values
    return np.asarray(values, dtype=np.float64)


# ---------------------------------------------------------------------------
# ingestion


def load_series(path, format: str = "plain", interval_seconds: float = DEFAULT_INTERVAL_SECONDS,
                series_id: str | None = None) -> TimeSeries:
    """Read one series from disk.

    Plain format is one ASCII decimal reading per line. CSV needs a header
    with a `bpm` column; a `t` column, when present, is ignored for spacing
    (the interval comes from the caller). Errors carry the offending line.
    """
    path = Path(path)
    if not path.exists():
        raise IngestionError("series file not found", path=str(path))
    text = path.read_text()
    sid = series_id or path.stem
    if format == "plain":
        values = _parse_plain(text, str(path))
    elif format == "csv":
        values = _parse_csv(text, str(path))
    else:
        raise ConfigError(f"unknown series format {format!r}; expected 'plain' or 'csv'")
    if len(values) < 2:
        raise IngestionError("series needs at least 2 readings", path=str(path))
    try:
        return TimeSeries(id=sid, values=np.array(values), interval_seconds=interval_seconds)
    except InputError as exc:
        raise IngestionError(str(exc), path=str(path)) from exc


def _parse_plain(text: str, path: str) -> list[float]:
    values = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        try:
            values.append(float(stripped))
        except ValueError:
            raise IngestionError(f"non-numeric reading {stripped!r}", path=path, line=lineno) from None
    if not values:
        raise IngestionError("file contains no readings", path=path)
    return values


def _parse_csv(text: str, path: str) -> list[float]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise IngestionError("file contains no readings", path=path) from None
    header = [h.strip() for h in header]
    if "bpm" not in header:
        raise IngestionError("CSV header must contain a 'bpm' column", path=path, line=1)
    col = header.index("bpm")
    values = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if col >= len(row):
            raise IngestionError("row is missing the bpm column", path=path, line=lineno)
        cell = row[col].strip()
        try:
            values.append(float(cell))
        except ValueError:
            raise IngestionError(f"non-numeric reading {cell!r}", path=path, line=lineno) from None
    if not values:
        raise IngestionError("file contains no readings", path=path)
    return values


# ---------------------------------------------------------------------------
# outlier screening


def zscore_outlier_report(s: TimeSeries | np.ndarray, threshold: float = 3.0) -> list[tuple[int, float, float]]:
    """Indices whose |z| exceeds the threshold under population statistics.

    Reporting only: flagged readings are retained in the series.
    """
    values = _extract(s)
    if values.size < 2:
        raise InsufficientDataError("z-score screening needs at least 2 readings")
    mean = values.mean()
    std = values.std()  # population convention, fixed for determinism
    if std == 0.0:
        raise DegenerateStatisticsError("constant series has no spread; z-scores undefined")
    z = (values - mean) / std
    hits = np.nonzero(np.abs(z) > threshold)[0]
    return [(int(i), float(values[i]), float(z[i])) for i in hits]


def format_outlier_report(report: list[tuple[int, float, float]]) -> str:
    """Render a report as the documented CSV: index,value,zscore."""
    lines = ["index,value,zscore"]
    for idx, value, zscore in report:
        lines.append(f"{idx},{value!r},{zscore!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# supervised framing


@dataclass(frozen=True)
class WindowedDataset:
    """Contiguous lookback/horizon pairs cut from one series."""

    inputs: np.ndarray  # [n, L]
    targets: np.ndarray  # [n, H]
    lookback: int
    horizon: int
    stride: int = 1

    def __post_init__(self):
        self.inputs.setflags(write=False)
        self.targets.setflags(write=False)

    @property
    def n_windows(self) -> int:
        return self.inputs.shape[0]

    def source_span(self, i: int) -> tuple[int, int]:
        """Half-open source index range covered by pair i."""
        start = i * self.stride
        return start, start + self.lookback + self.horizon


def make_windows(s, lookback: int, horizon: int, stride: int = 1) -> WindowedDataset:
    """Slice a series into supervised pairs; pair i covers
    [i*stride, i*stride + lookback + horizon) with the target right after
    the input."""
    values = _extract(s)
    if lookback < 1 or horizon < 1 or stride < 1:
        raise InputError("lookback, horizon, and stride must all be >= 1")
    need = lookback + horizon
    if values.size < need:
        raise InsufficientDataError(
            f"series of length {values.size} too short; need at least {need} "
            f"for lookback {lookback} + horizon {horizon}"
        )
    count = (values.size - need) // stride + 1
    inputs = np.empty((count, lookback))
    targets = np.empty((count, horizon))
    for i in range(count):
        start = i * stride
        inputs[i] = values[start : start + lookback]
        targets[i] = values[start + lookback : start + need]
    return WindowedDataset(inputs=inputs, targets=targets, lookback=lookback,
                           horizon=horizon, stride=stride)


@dataclass(frozen=True)
class FoldSpec:
    """One blocked cross-validation fold over window indices."""

    fold_index: int
    val_start: int
    val_stop: int  # half-open
    train_indices: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.train_indices.setflags(write=False)

    @property
    def val_indices(self) -> np.ndarray:
        return np.arange(self.val_start, self.val_stop)


def make_folds(n_windows: int, k: int = 5, window_len: int = 1, stride: int = 1) -> list[FoldSpec]:
    """Blocked folds in temporal order.

    Validation blocks partition [0, n_windows); block sizes differ by at
    most one with the remainder going to the earliest blocks. A training
    window is kept only when its time span cannot intersect the validation
    block's span, which excludes a halo of ceil(window_len/stride)-1
    neighbours on each side.
    """
    if n_windows < k:
        raise InsufficientDataError(f"{n_windows} windows cannot form {k} folds")
    if window_len < 1 or stride < 1:
        raise InputError("window_len and stride must be >= 1")
    base, rem = divmod(n_windows, k)
    halo = -(-window_len // stride) - 1
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < rem else 0)
        stop = start + size
        left = np.arange(0, max(0, start - halo))
        right = np.arange(min(n_windows, stop + halo), n_windows)
        folds.append(FoldSpec(fold_index=i, val_start=start, val_stop=stop,
                              train_indices=np.concatenate([left, right])))
        start = stop
    return folds


# ---------------------------------------------------------------------------
# synthetic generators

SYNTH_PROFILES = ("quasi_periodic", "trend_shift", "ar1")


def synth_series(seed: int, length: int, profile: str, phi: float = 0.7,
                 sigma: float = 1.0, interval_seconds: float = DEFAULT_INTERVAL_SECONDS) -> TimeSeries:
    """Deterministic synthetic heart-rate stand-ins.

    quasi_periodic: 80 bpm baseline + sinusoids of period 30 (amplitude 6)
    and period 7 (amplitude 2) + N(0, sigma^2) noise, sigma fixed at 1.
    trend_shift: piecewise-linear trend (slope flips sign at the midpoint)
    plus a period-50 sinusoid of amplitude 3 and mild noise.
    ar1: mean-80 AR(1) with coefficient `phi` and innovation scale `sigma`,
    started from its stationary distribution.
    """
    if length < 2:
        raise InputError(f"synthetic series length must be >= 2, got {length}")
    rng = np.random.default_rng(seed)
    t = np.arange(length, dtype=np.float64)
    if profile == "quasi_periodic":
        values = (
            80.0
            + 6.0 * np.sin(2 * np.pi * t / 30.0)
            + 2.0 * np.sin(2 * np.pi * t / 7.0)
            + rng.normal(0.0, 1.0, size=length)
        )
    elif profile == "trend_shift":
        mid = length // 2
        slope = 0.02
        trend = 80.0 + slope * np.minimum(t, mid) - slope * np.maximum(t - mid, 0.0)
        values = trend + 3.0 * np.sin(2 * np.pi * t / 50.0) + rng.normal(0.0, 0.3, size=length)
    elif profile == "ar1":
        if not -1.0 < phi < 1.0:
            raise ConfigError(f"ar1 profile needs |phi| < 1, got {phi}")
        noise = rng.normal(0.0, sigma, size=length)
        values = np.empty(length)
        values[0] = noise[0] / np.sqrt(1.0 - phi * phi)
        for i in range(1, length):
            values[i] = phi * values[i - 1] + noise[i]
        values += 80.0
    else:
        raise ConfigError(f"unknown synthetic profile {profile!r}; expected one of {SYNTH_PROFILES}")
    return TimeSeries(id=f"{profile}-{seed}", values=values, interval_seconds=interval_seconds)


def trend_shift_changepoint(length: int) -> int:
    """Sample index where the trend_shift profile flips slope."""
    return length // 2


def quasi_periodic_primary_period() -> int:
    return 30


def detect_dominant_period_bin(values: np.ndarray) -> int:
    """Strongest non-DC spectral bin of a series (helper for screening)."""
    mags = _fft.rfft_magnitudes(np.asarray(values, dtype=np.float64))
    return int(np.argmax(mags[1:]) + 1)
