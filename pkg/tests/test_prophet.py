import numpy as np
import pytest

from hrbench import dataset as ds
from hrbench import prophet as pr
from hrbench.errors import InputError, InsufficientDataError


def lstsq_oracle(y, X):
    """Unpenalized least squares, the reference for weak-penalty fits."""
    return np.linalg.lstsq(X, y, rcond=None)[0]


class TestConfig:
    def test_rejects_bad_scales(self):
        with pytest.raises(InputError):
            pr.ProphetConfig(changepoint_prior_scale=0.0)

    def test_rejects_negative_changepoints(self):
        with pytest.raises(InputError):
            pr.ProphetConfig(n_changepoints=-1)

    def test_too_short_series(self):
        cfg = pr.ProphetConfig(n_changepoints=25)
        with pytest.raises(InsufficientDataError):
            pr.prophet_fit(np.ones(40), cfg)


class TestChangepointGrid:
    def test_within_first_80_percent(self):
        locs = pr.changepoint_grid(1000, 25)
        assert locs.size == 25
        assert locs[0] > 0
        assert locs[-1] <= 0.8 * 999
        assert np.all(np.diff(locs) > 0)

    def test_zero_changepoints(self):
        assert pr.changepoint_grid(100, 0).size == 0


class TestFitRecovery:
    def test_pure_line_recovers_slope_and_offset(self):
        t = np.arange(400, dtype=float)
        y = 2.0 * t + 1.0
        cfg = pr.ProphetConfig(n_changepoints=10, changepoint_prior_scale=1e-3)
        fit = pr.prophet_fit(y, cfg)
        # strong L1: no rate deltas, trend is the line itself
        assert np.max(np.abs(fit.rate_deltas)) < 1e-3
        assert fit.base_rate == pytest.approx(2.0, abs=1e-3)
        assert fit.offset == pytest.approx(1.0, abs=0.3)
        # least-squares oracle agrees on the fitted values
        oracle = lstsq_oracle(y, np.column_stack([np.ones(400), t]))
        assert np.max(np.abs(fit.predict(t) - (oracle[0] + oracle[1] * t))) < 1e-2

    def test_trend_shift_changepoint_localized(self):
        s = ds.synth_series(seed=2, length=1000, profile="trend_shift")
        cfg = pr.ProphetConfig(n_changepoints=25, seasonal_periods=(50.0,), fourier_order=3)
        fit = pr.prophet_fit(s.values, cfg)
        true_cp = ds.trend_shift_changepoint(1000)
        true_change = -0.04  # slope goes from +0.02 to -0.02
        dominant = int(np.argmax(np.abs(fit.rate_deltas)))
        loc = fit.changepoint_locations[dominant]
        assert abs(loc - true_cp) <= 0.05 * 1000
        assert abs(fit.rate_deltas[dominant]) > 0.5 * abs(true_change)
        others = np.delete(fit.rate_deltas, dominant)
        assert np.max(np.abs(others)) < 0.5 * abs(true_change)

    def test_sinusoid_amplitude_recovery(self):
        t = np.arange(600, dtype=float)
        y = 3.0 * np.sin(2 * np.pi * t / 50.0) + 70.0
        cfg = pr.ProphetConfig(n_changepoints=5, seasonal_periods=(50.0,), fourier_order=4)
        fit = pr.prophet_fit(y, cfg)
        a, b = fit.fourier_coeffs[0], fit.fourier_coeffs[1]
        amplitude = np.hypot(a, b)
        assert amplitude == pytest.approx(3.0, rel=0.05)


class TestForecast:
    def test_in_sample_matches_fitted_values(self):
        s = ds.synth_series(seed=4, length=500, profile="trend_shift")
        cfg = pr.ProphetConfig(n_changepoints=10, seasonal_periods=(50.0,), fourier_order=3)
        fit = pr.prophet_fit(s.values, cfg)
        t = np.arange(500)
        assert np.array_equal(pr.prophet_forecast(fit, t), fit.predict(t))

    def test_line_extrapolates(self):
        t = np.arange(300, dtype=float)
        y = 0.5 * t + 10.0
        cfg = pr.ProphetConfig(n_changepoints=8, changepoint_prior_scale=1e-3)
        fit = pr.prophet_fit(y, cfg)
        future = np.arange(300, 310, dtype=float)
        assert np.max(np.abs(pr.prophet_forecast(fit, future) - (0.5 * future + 10.0))) < 1e-3 * 310

    def test_zero_fourier_coeffs_give_trend_only(self):
        fit = pr.ProphetFit(
            base_rate=1.0, offset=2.0,
            rate_deltas=np.array([0.5]), changepoint_locations=np.array([10]),
            fourier_coeffs=np.zeros(4), seasonal_periods=(24.0,), fourier_order=1,
            objective=0.0, sweeps=1,
        )
        t = np.arange(30)
        assert np.array_equal(fit.predict(t), fit.trend(t))

    def test_empty_future_rejected(self):
        fit = pr.ProphetFit(base_rate=0.0, offset=0.0, rate_deltas=np.zeros(0),
                            changepoint_locations=np.zeros(0, dtype=np.int64),
                            fourier_coeffs=np.zeros(0), seasonal_periods=(),
                            fourier_order=1, objective=0.0, sweeps=1)
        with pytest.raises(InputError):
            pr.prophet_forecast(fit, np.zeros(0))


class TestProperties:
    def test_trend_continuity_at_changepoints(self):
        s = ds.synth_series(seed=6, length=800, profile="trend_shift")
        cfg = pr.ProphetConfig(n_changepoints=15, seasonal_periods=(50.0,), fourier_order=2)
        fit = pr.prophet_fit(s.values, cfg)
        eps = 1e-7
        for loc in fit.changepoint_locations:
            left = fit.trend(np.array([loc - eps]))[0]
            right = fit.trend(np.array([loc + eps]))[0]
            assert abs(right - left) < 1e-6  # slope * 2eps bounded well below this

    def test_weaker_penalty_never_increases_rss(self):
        s = ds.synth_series(seed=8, length=600, profile="trend_shift")
        rss = []
        for scale in (0.005, 0.05, 0.5):
            cfg = pr.ProphetConfig(n_changepoints=12, changepoint_prior_scale=scale,
                                   seasonal_periods=(50.0,), fourier_order=2)
            fit = pr.prophet_fit(s.values, cfg)
            resid = s.values - fit.predict(np.arange(600))
            rss.append(float(resid @ resid))
        assert rss[1] <= rss[0] + 1e-6
        assert rss[2] <= rss[1] + 1e-6

    def test_json_round_trip(self):
        t = np.arange(300, dtype=float)
        y = 0.3 * t + 5.0 + np.sin(2 * np.pi * t / 30.0)
        cfg = pr.ProphetConfig(n_changepoints=5, seasonal_periods=(30.0,), fourier_order=2)
        fit = pr.prophet_fit(y, cfg)
        back = pr.ProphetFit.from_json(fit.to_json())
        assert np.array_equal(back.rate_deltas, fit.rate_deltas)
        assert np.array_equal(back.fourier_coeffs, fit.fourier_coeffs)
        assert back.base_rate == fit.base_rate
        future = np.arange(300, 320)
        assert np.array_equal(back.predict(future), fit.predict(future))
