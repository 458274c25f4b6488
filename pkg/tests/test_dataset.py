import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hrbench import dataset as ds
from hrbench import fft
from hrbench.errors import (
    ConfigError,
    DegenerateStatisticsError,
    IngestionError,
    InputError,
    InsufficientDataError,
)


class TestLoadSeries:
    def test_plain_direct_read(self, tmp_path):
        p = tmp_path / "t1.txt"
        p.write_text("50\n60\n70")
        s = ds.load_series(p, format="plain")
        assert s.values.tolist() == [50.0, 60.0, 70.0]
        assert s.interval_seconds == 0.5

    def test_csv_with_time_column(self, tmp_path):
        p = tmp_path / "t2.csv"
        p.write_text("t,bpm\n0,80\n0.5,82\n")
        s = ds.load_series(p, format="csv", interval_seconds=0.5)
        assert s.values.tolist() == [80.0, 82.0]
        assert s.interval_seconds == 0.5

    def test_non_numeric_row_names_line(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("abc\n70\n")
        with pytest.raises(IngestionError, match=":1"):
            ds.load_series(p, format="plain")

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestionError, match="not found"):
            ds.load_series(tmp_path / "absent.txt")

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.txt"
        p.write_text("")
        with pytest.raises(IngestionError):
            ds.load_series(p)

    def test_csv_requires_bpm_column(self, tmp_path):
        p = tmp_path / "no_bpm.csv"
        p.write_text("t,heart\n0,80\n")
        with pytest.raises(IngestionError, match="bpm"):
            ds.load_series(p, format="csv")

    def test_single_reading_rejected(self, tmp_path):
        p = tmp_path / "one.txt"
        p.write_text("72\n")
        with pytest.raises(IngestionError, match="at least 2"):
            ds.load_series(p)

    def test_nonpositive_reading_rejected(self, tmp_path):
        p = tmp_path / "neg.txt"
        p.write_text("50\n-3\n")
        with pytest.raises(IngestionError):
            ds.load_series(p)


class TestOutliers:
    def test_constant_series_degenerate(self):
        with pytest.raises(DegenerateStatisticsError):
            ds.zscore_outlier_report(np.array([5.0] * 5))

    def test_population_statistics_boundary(self):
        # mean 1, population std 3: the z=3.0 point is NOT > threshold 3.0
        values = np.array([0.0] * 9 + [10.0])
        assert ds.zscore_outlier_report(values, threshold=3.0) == []
        report = ds.zscore_outlier_report(values, threshold=2.9)
        assert [(i, v) for i, v, _ in report] == [(9, 10.0)]
        assert report[0][2] == pytest.approx(3.0)

    def test_injected_spike_flagged_alone(self):
        rng = np.random.default_rng(42)
        values = 80.0 + rng.normal(0, 1, 400)
        values[123] = values.mean() + 5.0 * values.std()
        report = ds.zscore_outlier_report(values)
        assert [i for i, _, _ in report] == [123]

    def test_affine_invariance(self):
        rng = np.random.default_rng(7)
        values = 80 + rng.normal(0, 2, 300)
        values[50] += 15
        base = ds.zscore_outlier_report(values, threshold=2.5)
        scaled = ds.zscore_outlier_report(values * 3.0 + 11.0, threshold=2.5)
        assert [i for i, _, _ in base] == [i for i, _, _ in scaled]
        for (_, _, z1), (_, _, z2) in zip(base, scaled):
            assert z1 == pytest.approx(z2, rel=1e-12)

    def test_report_csv_format(self):
        text = ds.format_outlier_report([(3, 99.5, 3.25)])
        assert text.splitlines()[0] == "index,value,zscore"
        assert text.splitlines()[1].startswith("3,99.5,3.25")


class TestMinMax:
    def test_endpoints(self):
        p = ds.fit_minmax(np.array([50.0, 75.0, 100.0]))
        assert ds.apply_minmax([50.0, 75.0, 100.0], p).tolist() == [0.0, 0.5, 1.0]

    def test_hand_value(self):
        p = ds.NormalizationParams(min=50.0, max=100.0)
        assert ds.apply_minmax([60.0], p)[0] == pytest.approx(0.2)

    def test_constant_span_rejected(self):
        with pytest.raises(DegenerateStatisticsError):
            ds.fit_minmax(np.array([70.0, 70.0]))

    @given(st.lists(st.floats(min_value=1.0, max_value=250.0), min_size=2, max_size=60))
    @settings(max_examples=60, deadline=None)
    def test_round_trip_identity(self, values):
        values = np.asarray(values)
        if values.max() == values.min():
            return
        p = ds.fit_minmax(values)
        back = ds.invert_minmax(ds.apply_minmax(values, p), p)
        assert np.max(np.abs(back - values)) < 1e-12


class TestWindows:
    def test_count_small(self):
        w = ds.make_windows(np.arange(1, 11, dtype=float), 4, 2)
        assert w.n_windows == 5

    def test_count_full_scale(self):
        w = ds.make_windows(np.arange(1800, dtype=float) + 1.0, 64, 16)
        assert w.n_windows == 1721

    def test_too_short(self):
        with pytest.raises(InsufficientDataError, match="6"):
            ds.make_windows(np.ones(5), 4, 2)

    def test_pairs_contiguous(self):
        values = np.arange(1, 21, dtype=float)
        w = ds.make_windows(values, 3, 2, stride=2)
        for i in range(w.n_windows):
            start, stop = w.source_span(i)
            assert w.inputs[i].tolist() == values[start : start + 3].tolist()
            assert w.targets[i].tolist() == values[start + 3 : stop].tolist()

    def test_stride_h_targets_reconstruct_tail(self):
        values = np.arange(100, dtype=float) + 1
        L, H = 8, 4
        w = ds.make_windows(values, L, H, stride=H)
        rebuilt = np.concatenate(list(w.targets))
        assert rebuilt.tolist() == values[L : L + rebuilt.size].tolist()


class TestFolds:
    def test_equal_partition(self):
        folds = ds.make_folds(10, 5)
        assert [f.val_stop - f.val_start for f in folds] == [2] * 5

    def test_remainder_to_earliest(self):
        folds = ds.make_folds(11, 5)
        assert [f.val_stop - f.val_start for f in folds] == [3, 2, 2, 2, 2]

    @given(st.integers(min_value=5, max_value=200))
    @settings(max_examples=50, deadline=None)
    def test_val_blocks_partition(self, n):
        folds = ds.make_folds(n, 5)
        all_idx = np.concatenate([f.val_indices for f in folds])
        assert sorted(all_idx.tolist()) == list(range(n))

    def test_leakage_halo(self):
        window_len, stride = 6, 1
        folds = ds.make_folds(50, 5, window_len=window_len, stride=stride)
        for f in folds:
            val_span = (f.val_start * stride, (f.val_stop - 1) * stride + window_len)
            for j in f.train_indices:
                start = j * stride
                stop = start + window_len
                assert stop <= val_span[0] or start >= val_span[1]

    def test_too_few_windows(self):
        with pytest.raises(InsufficientDataError):
            ds.make_folds(4, 5)


class TestSynth:
    def test_determinism(self):
        a = ds.synth_series(9, 256, "quasi_periodic")
        b = ds.synth_series(9, 256, "quasi_periodic")
        assert np.array_equal(a.values, b.values)

    def test_ar1_phi_zero_uncorrelated(self):
        s = ds.synth_series(5, 2000, "ar1", phi=0.0)
        x = s.values - s.values.mean()
        rho1 = np.dot(x[:-1], x[1:]) / np.dot(x, x)
        assert abs(rho1) < 0.1

    def test_quasi_periodic_dominant_period(self):
        s = ds.synth_series(1, 512, "quasi_periodic")
        bin_ = ds.detect_dominant_period_bin(s.values)
        assert abs(512 / bin_ - 30.0) <= 2.0

    def test_trend_shift_has_changepoint_and_seasonality(self):
        s = ds.synth_series(3, 1000, "trend_shift")
        cp = ds.trend_shift_changepoint(1000)
        assert cp == 500
        # slope sign flips at the midpoint
        first = np.polyfit(np.arange(cp), s.values[:cp], 1)[0]
        second = np.polyfit(np.arange(cp), s.values[cp:2 * cp], 1)[0]
        assert first > 0.015 and second < -0.015
        mags = fft.rfft_magnitudes(s.values - s.values.mean())
        assert abs(1000 / (np.argmax(mags[10:]) + 10) - 50.0) < 3.0

    def test_unknown_profile(self):
        with pytest.raises(ConfigError, match="unknown synthetic profile"):
            ds.synth_series(0, 100, "sawtooth")

    def test_all_profiles_positive_bpm(self):
        for profile in ds.SYNTH_PROFILES:
            s = ds.synth_series(11, 600, profile)
            assert np.all(s.values > 0)
