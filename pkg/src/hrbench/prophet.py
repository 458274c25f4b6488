"""Decomposable trend + seasonality forecaster with changepoints.

y(t) is modeled as a piecewise-linear trend (rate changes at fixed
candidate changepoints, continuous everywhere) plus Fourier seasonality
per configured period. The maximum-a-posteriori problem is a penalized
least squares: an L1 penalty on rate deltas keeps the trend sparse in
slope changes, an L2 penalty shrinks Fourier coefficients. Coordinate
descent solves it to a fixed objective tolerance.

Internally time is rescaled to [0, 1] over the training span so the
penalty scales mean the same thing at every series length; the returned
fit is converted back to per-sample units.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import FitFailureError, InputError, InsufficientDataError

_OBJECTIVE_TOL = 1e-8
_MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class ProphetConfig:
    n_changepoints: int = 25
    changepoint_prior_scale: float = 0.05
    seasonality_prior_scale: float = 10.0
    fourier_order: int = 10
    seasonal_periods: tuple[float, ...] = ()

    def __post_init__(self):
        if self.n_changepoints < 0:
            raise InputError("n_changepoints must be >= 0")
        if self.changepoint_prior_scale <= 0 or self.seasonality_prior_scale <= 0:
            raise InputError("prior scales must be positive")
        if self.seasonal_periods and self.fourier_order < 1:
            raise InputError("fourier_order must be >= 1 when seasonal periods are active")
        if any(p <= 1 for p in self.seasonal_periods):
            raise InputError("seasonal periods must exceed 1 sample")


@dataclass(frozen=True)
class ProphetFit:
    """Fitted additive model in per-sample time units."""

    base_rate: float  # k: trend slope per sample before any changepoint
    offset: float  # m: trend value at t = 0
    rate_deltas: np.ndarray  # slope change applied at each changepoint
    changepoint_locations: np.ndarray  # sample indices, strictly increasing
    fourier_coeffs: np.ndarray  # per period: [a_1, b_1, ..., a_order, b_order]
    seasonal_periods: tuple[float, ...]
    fourier_order: int
    objective: float
    sweeps: int

    def trend(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        out = self.offset + self.base_rate * t
        for loc, delta in zip(self.changepoint_locations, self.rate_deltas):
            out = out + delta * np.maximum(0.0, t - loc)
        return out

    def seasonality(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(t)
        i = 0
        for period in self.seasonal_periods:
            for m in range(1, self.fourier_order + 1):
                angle = 2.0 * np.pi * m * t / period
                out = out + self.fourier_coeffs[i] * np.sin(angle)
                out = out + self.fourier_coeffs[i + 1] * np.cos(angle)
                i += 2
        return out

    def predict(self, t) -> np.ndarray:
        return self.trend(t) + self.seasonality(t)

    def to_json(self) -> str:
        doc = {
            "base_rate": self.base_rate,
            "offset": self.offset,
            "rate_deltas": self.rate_deltas.tolist(),
            "changepoint_locations": self.changepoint_locations.tolist(),
            "fourier_coeffs": self.fourier_coeffs.tolist(),
            "seasonal_periods": list(self.seasonal_periods),
            "fourier_order": self.fourier_order,
            "objective": self.objective,
            "sweeps": self.sweeps,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ProphetFit":
        doc = json.loads(text)
        return ProphetFit(
            base_rate=doc["base_rate"], offset=doc["offset"],
            rate_deltas=np.asarray(doc["rate_deltas"], dtype=np.float64),
            changepoint_locations=np.asarray(doc["changepoint_locations"], dtype=np.int64),
            fourier_coeffs=np.asarray(doc["fourier_coeffs"], dtype=np.float64),
            seasonal_periods=tuple(doc["seasonal_periods"]),
            fourier_order=doc["fourier_order"],
            objective=doc["objective"], sweeps=doc["sweeps"],
        )


def changepoint_grid(n: int, n_changepoints: int) -> np.ndarray:
    """Candidate changepoints uniform over the first 80% of the span,
    excluding t=0; duplicates collapse for very short series."""
    if n_changepoints == 0:
        return np.zeros(0, dtype=np.int64)
    upper = 0.8 * (n - 1)
    raw = np.linspace(0.0, upper, n_changepoints + 1)[1:]
    locs = np.unique(np.rint(raw).astype(np.int64))
    return locs[locs > 0]


def prophet_fit(y, cfg: ProphetConfig) -> ProphetFit:
    """Penalized least-squares fit by cyclic coordinate descent.

    Stops when one full sweep changes the objective by less than 1e-8;
    raises FitFailureError after 10^4 sweeps without convergence.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    total_fourier = 2 * cfg.fourier_order * len(cfg.seasonal_periods)
    if n <= 2 * (cfg.n_changepoints + total_fourier):
        raise InsufficientDataError(
            f"series of length {n} too short for {cfg.n_changepoints} changepoints "
            f"and {total_fourier} Fourier terms"
        )
    t = np.arange(n, dtype=np.float64)
    span = max(n - 1, 1)
    ts = t / span  # scaled time in [0, 1]
    locs = changepoint_grid(n, cfg.n_changepoints)

    columns = [np.ones(n), ts]
    kinds = ["free", "free"]
    for loc in locs:
        columns.append(np.maximum(0.0, ts - loc / span))
        kinds.append("l1")
    for period in cfg.seasonal_periods:
        for m in range(1, cfg.fourier_order + 1):
            angle = 2.0 * np.pi * m * t / period
            columns.append(np.sin(angle))
            kinds.append("l2")
            columns.append(np.cos(angle))
            kinds.append("l2")
    X = np.column_stack(columns)
    sq = np.einsum("ij,ij->j", X, X)
    lam1 = 1.0 / cfg.changepoint_prior_scale
    lam2 = 1.0 / (cfg.seasonality_prior_scale ** 2)

    w = np.zeros(X.shape[1])
    r = y.copy()
    l1_mask = np.array([k == "l1" for k in kinds])
    l2_mask = np.array([k == "l2" for k in kinds])

    def objective():
        pen = lam1 * np.abs(w[l1_mask]).sum() + lam2 * np.square(w[l2_mask]).sum()
        return 0.5 * float(r @ r) + pen

    prev = objective()
    sweeps = 0
    converged = False
    while sweeps < _MAX_SWEEPS:
        sweeps += 1
        for j in range(w.size):
            if sq[j] == 0.0:
                continue
            rho = float(X[:, j] @ r) + w[j] * sq[j]
            if kinds[j] == "l1":
                mag = abs(rho) - lam1
                new = np.sign(rho) * mag / sq[j] if mag > 0 else 0.0
            elif kinds[j] == "l2":
                new = rho / (sq[j] + 2.0 * lam2)
            else:
                new = rho / sq[j]
            if new != w[j]:
                r += X[:, j] * (w[j] - new)
                w[j] = new
        cur = objective()
        if abs(prev - cur) < _OBJECTIVE_TOL:
            converged = True
            break
        prev = cur

    fit = ProphetFit(
        base_rate=w[1] / span,
        offset=w[0],
        rate_deltas=w[2 : 2 + locs.size] / span,
        changepoint_locations=locs,
        fourier_coeffs=w[2 + locs.size :].copy(),
        seasonal_periods=cfg.seasonal_periods,
        fourier_order=cfg.fourier_order,
        objective=float(objective()),
        sweeps=sweeps,
    )
    if not converged:
        raise FitFailureError(
            f"coordinate descent did not converge within {_MAX_SWEEPS} sweeps", best_fit=fit
        )
    return fit


def prophet_forecast(fit: ProphetFit, t_future) -> np.ndarray:
    """Evaluate the fitted curve at arbitrary sample indices; beyond the
    last changepoint the trend keeps the final segment's rate."""
    t_future = np.asarray(t_future, dtype=np.float64)
    if t_future.size == 0:
        raise InputError("t_future must be non-empty")
    return fit.predict(t_future)
