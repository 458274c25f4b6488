"""Seasonal ARIMA fitted by conditional sum of squares.

The Gaussian likelihood is conditioned on pre-sample values being zero
(CSS), which is accurate for the series lengths used here (hundreds to
thousands of points) and avoids state-space machinery. Stationarity and
invertibility are unconditional: the optimizer works on unconstrained
numbers that map through tanh partial autocorrelations and a
Levinson-Durbin recursion onto coefficient vectors whose polynomials
always have roots outside the unit circle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .errors import (
    DegenerateStatisticsError,
    FitFailureError,
    InputError,
    InsufficientDataError,
)

# tanh outputs are clamped so polynomial roots keep a margin outside the circle
_PACF_CLAMP = 1.0 - 1e-5


@dataclass(frozen=True)
class SarimaOrder:
    p: int = 0
    d: int = 0
    q: int = 0
    P: int = 0
    D: int = 0
    Q: int = 0
    S: int = 0

    def __post_init__(self):
        for name in ("p", "d", "q", "P", "D", "Q", "S"):
            if getattr(self, name) < 0:
                raise InputError(f"order component {name} must be non-negative")
        if self.d + self.D > 2:
            raise InputError(f"total differencing d+D must be <= 2, got {self.d + self.D}")
        if (self.P or self.D or self.Q) and self.S < 2:
            raise InputError("seasonal terms require a seasonal period S >= 2")

    @property
    def n_coeffs(self) -> int:
        return self.p + self.q + self.P + self.Q

    @property
    def uses_intercept(self) -> bool:
        # differenced models omit the mean; a drift term would break the
        # random-walk forecast contract
        return self.d + self.D == 0

    def as_tuple(self):
        return (self.p, self.d, self.q, self.P, self.D, self.Q)


@dataclass(frozen=True)
class SarimaFit:
    order: SarimaOrder
    ar_coeffs: np.ndarray
    ma_coeffs: np.ndarray
    seasonal_ar_coeffs: np.ndarray
    seasonal_ma_coeffs: np.ndarray
    intercept: float
    sigma2: float
    loglik: float
    aic: float
    n_obs: int
    converged: bool = True

    @property
    def n_params(self) -> int:
        return self.order.n_coeffs + (1 if self.order.uses_intercept else 0) + 1

    def to_json(self) -> str:
        doc = {
            "order": {k: getattr(self.order, k) for k in ("p", "d", "q", "P", "D", "Q", "S")},
            "ar_coeffs": self.ar_coeffs.tolist(),
            "ma_coeffs": self.ma_coeffs.tolist(),
            "seasonal_ar_coeffs": self.seasonal_ar_coeffs.tolist(),
            "seasonal_ma_coeffs": self.seasonal_ma_coeffs.tolist(),
            "intercept": self.intercept,
            "sigma2": self.sigma2,
            "loglik": self.loglik,
            "aic": self.aic,
            "n_obs": self.n_obs,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "SarimaFit":
        doc = json.loads(text)
        return SarimaFit(
            order=SarimaOrder(**doc["order"]),
            ar_coeffs=np.asarray(doc["ar_coeffs"], dtype=np.float64),
            ma_coeffs=np.asarray(doc["ma_coeffs"], dtype=np.float64),
            seasonal_ar_coeffs=np.asarray(doc["seasonal_ar_coeffs"], dtype=np.float64),
            seasonal_ma_coeffs=np.asarray(doc["seasonal_ma_coeffs"], dtype=np.float64),
            intercept=doc["intercept"],
            sigma2=doc["sigma2"],
            loglik=doc["loglik"],
            aic=doc["aic"],
            n_obs=doc["n_obs"],
        )


# ---------------------------------------------------------------------------
# differencing


def difference(y: np.ndarray, order: SarimaOrder) -> np.ndarray:
    """(1-B)^d (1-B^S)^D applied to y."""
    w = np.asarray(y, dtype=np.float64)
    for _ in range(order.d):
        w = w[1:] - w[:-1]
    for _ in range(order.D):
        w = w[order.S :] - w[: -order.S]
    return w


def _undifference_forecast(y: np.ndarray, w_hat: np.ndarray, order: SarimaOrder) -> np.ndarray:
    """Integrate forecasts of the differenced series back to the scale of y."""
    # rebuild intermediate histories in the same nesting used by difference()
    histories = [np.asarray(y, dtype=np.float64)]
    for _ in range(order.d):
        histories.append(histories[-1][1:] - histories[-1][:-1])
    for _ in range(order.D):
        histories.append(histories[-1][order.S :] - histories[-1][: -order.S])
    fc = w_hat
    # invert seasonal differencing first (it was applied last)
    for level in range(len(histories) - 2, order.d - 1, -1):
        prev = histories[level]
        out = np.empty_like(fc)
        for h in range(fc.size):
            back = out[h - order.S] if h >= order.S else prev[prev.size + h - order.S]
            out[h] = fc[h] + back
        fc = out
    for level in range(order.d - 1, -1, -1):
        prev = histories[level]
        out = np.empty_like(fc)
        last = prev[-1]
        for h in range(fc.size):
            last = fc[h] + last
            out[h] = last
        fc = out
    return fc


# ---------------------------------------------------------------------------
# stationarity-preserving parametrization


def pacf_to_coeffs(r: np.ndarray) -> np.ndarray:
    """Levinson-Durbin map from partial autocorrelations in (-1, 1) to AR
    coefficients phi with 1 - sum(phi_i z^i) root-free inside the unit disk."""
    phi = np.zeros(0)
    for rk in r:
        phi = np.concatenate([phi - rk * phi[::-1], [rk]])
    return phi


def _unconstrained_to_coeffs(z: np.ndarray) -> np.ndarray:
    if z.size == 0:
        return np.zeros(0)
    return pacf_to_coeffs(np.clip(np.tanh(z), -_PACF_CLAMP, _PACF_CLAMP))


def _expand_poly(coeffs: np.ndarray, seasonal: np.ndarray, s: int, sign: float) -> np.ndarray:
    """Multiply (1 + sign*sum c_i B^i) by (1 + sign*sum C_j B^{jS})."""
    base = np.concatenate([[1.0], sign * coeffs])
    if seasonal.size:
        seas = np.zeros(seasonal.size * s + 1)
        seas[0] = 1.0
        seas[s :: s] = sign * seasonal
        return np.convolve(base, seas)
    return base


def css_residuals(w: np.ndarray, ar: np.ndarray, ma: np.ndarray, sar: np.ndarray,
                  sma: np.ndarray, s: int, mu: float) -> np.ndarray:
    """Innovations under zero pre-sample values: e = [phi(B)Phi(B^S)/theta(B)Theta(B^S)](w - mu)."""
    a_poly = _expand_poly(ar, sar, s, -1.0)  # AR side: 1 - phi B ...
    b_poly = _expand_poly(ma, sma, s, +1.0)  # MA side: 1 + theta B ...
    return lfilter(a_poly, b_poly, w - mu)


# ---------------------------------------------------------------------------
# fitting


def _min_length(order: SarimaOrder) -> int:
    return (order.d + order.D * order.S) + max(
        order.p, order.q, order.P * order.S, order.Q * order.S, 1
    ) + 10


def sarima_fit(y, order: SarimaOrder, maxiter: int | None = None) -> SarimaFit:
    """Maximize the CSS Gaussian likelihood for one order.

    Raises FitFailureError carrying the best fit found when Nelder-Mead
    exhausts its iteration budget before converging.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.size <= _min_length(order):
        raise InsufficientDataError(
            f"series of length {y.size} too short for order {order.as_tuple()}x{order.S}; "
            f"need more than {_min_length(order)}"
        )
    w = difference(y, order)
    n = w.size
    p, q, P, Q = order.p, order.q, order.P, order.Q

    if order.n_coeffs == 0:
        mu = float(w.mean()) if order.uses_intercept else 0.0
        e = w - mu
        return _build_fit(order, np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0), mu, e, n)

    mu0 = float(w.mean()) if order.uses_intercept else 0.0

    def unpack(x):
        i = 0
        ar = _unconstrained_to_coeffs(x[i : i + p]); i += p
        ma = -_unconstrained_to_coeffs(x[i : i + q]); i += q
        sar = _unconstrained_to_coeffs(x[i : i + P]); i += P
        sma = -_unconstrained_to_coeffs(x[i : i + Q]); i += Q
        mu = x[i] if order.uses_intercept else 0.0
        return ar, ma, sar, sma, mu

    def objective(x):
        ar, ma, sar, sma, mu = unpack(x)
        e = css_residuals(w, ar, ma, sar, sma, order.S, mu)
        sse = float(e @ e)
        return sse if np.isfinite(sse) else 1e300

    x0 = np.zeros(order.n_coeffs + (1 if order.uses_intercept else 0))
    if order.uses_intercept:
        x0[-1] = mu0
    result = minimize(
        objective, x0, method="Nelder-Mead",
        options={"xatol": 1e-6, "fatol": 1e-10,
                 "maxiter": maxiter or 400 * max(1, x0.size),
                 "maxfev": maxiter or 400 * max(1, x0.size)},
    )
    ar, ma, sar, sma, mu = unpack(result.x)
    e = css_residuals(w, ar, ma, sar, sma, order.S, mu)
    fit = _build_fit(order, ar, ma, sar, sma, mu, e, n, converged=bool(result.success))
    if not result.success:
        raise FitFailureError(
            f"CSS optimizer did not converge for order {order.as_tuple()}x{order.S}",
            best_fit=fit,
        )
    return fit


def _build_fit(order, ar, ma, sar, sma, mu, e, n, converged=True) -> SarimaFit:
    sse = float(e @ e)
    sigma2 = sse / n
    if sigma2 <= 0:
        sigma2 = np.finfo(float).tiny
    loglik = -0.5 * n * (np.log(2 * np.pi * sigma2) + 1.0)
    k = order.n_coeffs + (1 if order.uses_intercept else 0) + 1
    return SarimaFit(
        order=order,
        ar_coeffs=ar, ma_coeffs=ma,
        seasonal_ar_coeffs=sar, seasonal_ma_coeffs=sma,
        intercept=float(mu), sigma2=float(sigma2),
        loglik=float(loglik), aic=float(2 * k - 2 * loglik),
        n_obs=int(n), converged=converged,
    )


def sarima_forecast(fit: SarimaFit, y, horizon: int) -> np.ndarray:
    """Iterated one-step expectations with future innovations at zero,
    integrated back through the differencing operators."""
    if horizon <= 0:
        raise InputError(f"forecast horizon must be positive, got {horizon}")
    y = np.asarray(y, dtype=np.float64)
    order = fit.order
    w = difference(y, order)
    a_poly = _expand_poly(fit.ar_coeffs, fit.seasonal_ar_coeffs, order.S, -1.0)
    b_poly = _expand_poly(fit.ma_coeffs, fit.seasonal_ma_coeffs, order.S, +1.0)
    e = lfilter(a_poly, b_poly, w - fit.intercept)
    wt = (w - fit.intercept).tolist()
    et = e.tolist()
    n_a, n_b = a_poly.size - 1, b_poly.size - 1
    for _ in range(horizon):
        t = len(wt)
        val = 0.0
        for i in range(1, n_a + 1):
            if t - i >= 0:
                val -= a_poly[i] * wt[t - i]
        for j in range(1, n_b + 1):
            if t - j >= 0:
                val += b_poly[j] * et[t - j]
        wt.append(val)
        et.append(0.0)
    w_hat = np.asarray(wt[-horizon:]) + fit.intercept
    if order.d == 0 and order.D == 0:
        return w_hat
    return _undifference_forecast(y, w_hat, order)


# ---------------------------------------------------------------------------
# order selection


def sarima_grid_search(y, p_max: int = 3, q_max: int = 3, P_max: int = 1, Q_max: int = 1,
                       d: int = 0, D: int = 0, S: int = 0) -> SarimaFit:
    """Fit every order on the grid and return the minimum-AIC fit.

    Ties within 1e-12 break toward fewer parameters, then the
    lexicographically smaller (p,d,q,P,D,Q).
    """
    if S < 2:
        P_max = Q_max = 0
    best: SarimaFit | None = None
    failures = []
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            for P in range(P_max + 1):
                for Q in range(Q_max + 1):
                    try:
                        order = SarimaOrder(p=p, d=d, q=q, P=P, D=D, Q=Q,
                                            S=S if (P or D or Q) else max(S, 0))
                        fit = sarima_fit(y, order)
                    except FitFailureError as exc:
                        if exc.best_fit is not None:
                            fit = exc.best_fit
                        else:
                            failures.append((p, d, q, P, D, Q))
                            continue
                    except (InsufficientDataError, InputError):
                        failures.append((p, d, q, P, D, Q))
                        continue
                    if best is None or _fit_beats(fit, best):
                        best = fit
    if best is None:
        raise FitFailureError(f"every order in the grid failed to fit ({len(failures)} attempts)")
    return best


def _fit_beats(a: SarimaFit, b: SarimaFit) -> bool:
    if a.aic < b.aic - 1e-12:
        return True
    if b.aic < a.aic - 1e-12:
        return False
    if a.n_params != b.n_params:
        return a.n_params < b.n_params
    return a.order.as_tuple() < b.order.as_tuple()


# ---------------------------------------------------------------------------
# structure screening


def autocorrelation(y: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample ACF at lags 0..max_lag with the population denominator."""
    x = np.asarray(y, dtype=np.float64)
    x = x - x.mean()
    denom = float(x @ x)
    if denom == 0.0:
        raise DegenerateStatisticsError("constant series has no autocorrelation structure")
    return np.array([float(x[: x.size - k] @ x[k:]) / denom for k in range(max_lag + 1)])


def detect_seasonal_period(y, max_period: int) -> int:
    """Lag in [2, max_period] maximizing the ACF, if significant at 2/sqrt(n);
    otherwise 0 (no seasonality)."""
    y = np.asarray(y, dtype=np.float64)
    if y.size < 4 * max_period:
        raise InsufficientDataError(
            f"need at least {4 * max_period} points to scan periods up to {max_period}"
        )
    acf = autocorrelation(y, max_period)
    lag = int(np.argmax(acf[2:]) + 2)
    if acf[lag] > 2.0 / np.sqrt(y.size):
        return lag
    return 0


def choose_differencing(y, S: int = 0) -> tuple[int, int]:
    """Heuristic (d, D): difference while the lag-1 ACF stays near 1, then
    take one seasonal difference if the ACF at lag S remains very strong."""
    y = np.asarray(y, dtype=np.float64)
    d = 0
    current = y
    while d < 2 and current.size > 3:
        try:
            if autocorrelation(current, 1)[1] <= 0.95:
                break
        except DegenerateStatisticsError:
            break
        current = current[1:] - current[:-1]
        d += 1
    D = 0
    if S >= 2 and current.size > 4 * S:
        try:
            if autocorrelation(current, S)[S] > 0.9:
                D = 1
        except DegenerateStatisticsError:
            pass
    return d, D
