import itertools
import math
import random
from collections import Counter

import numpy as np
import pytest

from lognition.analytics import BinnedSeries, bin_series, te_windows, transfer_entropy
from lognition.errors import ArgumentError, InsufficientDataError
from lognition.model import Context, EventRecord, NodeLocation, TimeInterval
from lognition.query import QueryEngine

from conftest import BASE_TS, HOUR


def oracle_te(target, source, k=1):
    """Exhaustive joint-table TE(source->target) in bits.

    Deliberately structured differently from the estimator: explicit sample
    tuples and Counter-based probability tables.
    """
    n = len(target)
    samples = [
        (target[t + 1], tuple(target[t - k + 1 : t + 1]), tuple(source[t - k + 1 : t + 1]))
        for t in range(k - 1, n - 1)
    ]
    total = len(samples)
    c_fts = Counter(samples)
    c_ts = Counter((th, sh) for _, th, sh in samples)
    c_ft = Counter((f, th) for f, th, _ in samples)
    c_t = Counter(th for _, th, _ in samples)
    te = 0.0
    for (f, th, sh), c in c_fts.items():
        p_joint = c / total
        p_cond_full = c / c_ts[(th, sh)]
        p_cond_self = c_ft[(f, th)] / c_t[th]
        te += p_joint * math.log2(p_cond_full / p_cond_self)
    return te


class TestBinSeries:
    def test_empty(self):
        iv = TimeInterval(BASE_TS, BASE_TS + 10_000)
        series = bin_series([], iv, 1000)
        assert len(series) == 10
        assert series.total() == 0

    def test_count_lands_in_bin(self):
        iv = TimeInterval(BASE_TS, BASE_TS + 10_000)
        rec = EventRecord(BASE_TS + 2500, "MCE", NodeLocation(0, 0, 0, 0, 0), 3, "m")
        series = bin_series([rec], iv, 1000)
        assert series.values[2] == 3

    def test_conservation(self):
        rng = random.Random(50)
        iv = TimeInterval(BASE_TS, BASE_TS + 60_000)
        records = [
            EventRecord(BASE_TS + rng.randrange(60_000), "MCE", NodeLocation(0, 0, 0, 0, 0),
                        rng.randint(1, 5), "m")
            for _ in range(200)
        ]
        series = bin_series(records, iv, 777)
        assert series.total() == sum(r.count for r in records)

    def test_record_outside_interval_rejected(self):
        iv = TimeInterval(BASE_TS, BASE_TS + 1000)
        rec = EventRecord(BASE_TS + 1000, "MCE", NodeLocation(0, 0, 0, 0, 0), 1, "m")
        with pytest.raises(ArgumentError):
            bin_series([rec], iv, 100)

    def test_bad_width(self):
        with pytest.raises(ArgumentError):
            bin_series([], TimeInterval(BASE_TS, BASE_TS + 1000), 0)


class TestTransferEntropy:
    def test_independent_series_near_zero(self):
        rng = np.random.default_rng(2026)
        n = 100_000
        x = rng.integers(0, 2, n)
        y = rng.integers(0, 2, n)
        result = transfer_entropy(x, y)
        assert result.te_y_to_x <= 0.01
        assert result.te_x_to_y <= 0.01

    def test_copy_with_lag_one(self):
        rng = np.random.default_rng(7)
        n = 100_000
        y = rng.integers(0, 2, n)
        x = np.empty(n, dtype=np.int64)
        x[0] = 0
        x[1:] = y[:-1]
        result = transfer_entropy(x, y)
        assert abs(result.te_y_to_x - 1.0) <= 0.01
        assert result.te_x_to_y <= 0.01

    def test_constant_target_exactly_zero(self):
        x = np.zeros(50, dtype=np.int64)
        y = np.random.default_rng(1).integers(0, 2, 50)
        result = transfer_entropy(x, y)
        assert result.te_y_to_x == 0.0

    def test_nonnegative_on_arbitrary_inputs(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = rng.integers(3, 40)
            x = rng.integers(0, 2, n)
            y = rng.integers(0, 2, n)
            result = transfer_entropy(x, y)
            assert result.te_y_to_x >= 0.0
            assert result.te_x_to_y >= 0.0
            assert result.te_y_to_x <= 1.0 + 1e-12
            assert result.te_x_to_y <= 1.0 + 1e-12

    def test_matches_oracle_exhaustive_small(self):
        for n in (3, 4, 5):
            for bits in itertools.product((0, 1), repeat=2 * n):
                x = np.array(bits[:n])
                y = np.array(bits[n:])
                result = transfer_entropy(x, y)
                assert abs(result.te_y_to_x - oracle_te(list(x), list(y))) < 1e-12
                assert abs(result.te_x_to_y - oracle_te(list(y), list(x))) < 1e-12

    def test_matches_oracle_sampled_to_length_12(self):
        rng = random.Random(60)
        for n in range(6, 13):
            for _ in range(200):
                x = [rng.randint(0, 1) for _ in range(n)]
                y = [rng.randint(0, 1) for _ in range(n)]
                result = transfer_entropy(np.array(x), np.array(y))
                assert abs(result.te_y_to_x - oracle_te(x, y)) < 1e-12

    def test_matches_oracle_history_two(self):
        rng = random.Random(61)
        for _ in range(100):
            n = rng.randint(5, 14)
            x = [rng.randint(0, 1) for _ in range(n)]
            y = [rng.randint(0, 1) for _ in range(n)]
            result = transfer_entropy(np.array(x), np.array(y), k=2)
            assert abs(result.te_y_to_x - oracle_te(x, y, k=2)) < 1e-12

    def test_asymmetry_margin_on_coupled_series(self):
        rng = np.random.default_rng(11)
        n = 10_000
        y = rng.integers(0, 2, n)
        x = np.empty(n, dtype=np.int64)
        x[0] = rng.integers(0, 2)
        x[1:] = y[:-1]  # coupling strength 1.0
        result = transfer_entropy(x, y)
        assert result.te_y_to_x - result.te_x_to_y >= 0.2

    def test_length_mismatch(self):
        with pytest.raises(ArgumentError):
            transfer_entropy(np.zeros(5), np.zeros(6))

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            transfer_entropy(np.zeros(2), np.zeros(2))

    def test_binarization_threshold(self):
        iv = TimeInterval(BASE_TS, BASE_TS + 5000)
        x = BinnedSeries(iv, 1000, np.array([0, 3, 0, 3, 0]))
        y = BinnedSeries(iv, 1000, np.array([5, 0, 5, 0, 5]))
        r_low = transfer_entropy(x, y, threshold=0)
        r_high = transfer_entropy(x, y, threshold=10)
        assert r_high.te_y_to_x == 0.0  # everything below threshold: constant series
        assert r_low.n_samples == 4

    def test_bin_width_mismatch_rejected(self):
        iv = TimeInterval(BASE_TS, BASE_TS + 4000)
        a = BinnedSeries(iv, 1000, np.zeros(4, dtype=np.int64))
        b = BinnedSeries(iv, 2000, np.zeros(2, dtype=np.int64))
        with pytest.raises(ArgumentError):
            transfer_entropy(a, b)


class TestTEWindows:
    def _engine_with_coupling(self, mem_store, coupling_start, coupling_end):
        rng = random.Random(70)
        loc = NodeLocation(0, 0, 0, 0, 0)
        interval = TimeInterval(BASE_TS, BASE_TS + 2 * HOUR)
        for sec in range(0, interval.length_ms // 1000):
            ts = BASE_TS + sec * 1000
            if rng.random() < 0.15:
                mem_store.write_event(EventRecord(ts, "MCE", loc, 1, "a"))
                if coupling_start <= ts < coupling_end:
                    mem_store.write_event(EventRecord(ts + 1000, "ECC", loc, 1, "b"))
            elif rng.random() < 0.02:
                mem_store.write_event(EventRecord(ts, "ECC", loc, 1, "b"))
        return QueryEngine(mem_store), interval

    def test_max_te_window_overlaps_coupling(self, mem_store):
        coupling = (BASE_TS + 30 * 60_000, BASE_TS + 60 * 60_000)
        engine, interval = self._engine_with_coupling(mem_store, *coupling)
        ctx = Context(interval)
        windows = te_windows(
            engine, ctx, "MCE", "ECC",
            window_ms=15 * 60_000, step_ms=5 * 60_000, bin_width_ms=1000,
        )
        best = max(windows, key=lambda w: w.result.te_x_to_y)
        assert best.window_start < coupling[1]
        assert best.window_start + 15 * 60_000 > coupling[0]

    def test_windows_tile_when_step_equals_window(self, mem_store):
        engine = QueryEngine(mem_store)
        ctx = Context(TimeInterval(BASE_TS, BASE_TS + HOUR))
        windows = te_windows(engine, ctx, "MCE", "ECC", 15 * 60_000, 15 * 60_000, 60_000)
        starts = [w.window_start for w in windows]
        assert starts == [BASE_TS + i * 15 * 60_000 for i in range(4)]

    def test_empty_context_all_low_support(self, mem_store):
        engine = QueryEngine(mem_store)
        ctx = Context(TimeInterval(BASE_TS, BASE_TS + HOUR))
        windows = te_windows(engine, ctx, "MCE", "ECC", 20 * 60_000, 10 * 60_000, 60_000)
        assert windows
        assert all(w.low_support for w in windows)
        assert all(w.result.te_y_to_x == 0.0 and w.result.te_x_to_y == 0.0 for w in windows)

    def test_window_alignment_required(self, mem_store):
        engine = QueryEngine(mem_store)
        ctx = Context(TimeInterval(BASE_TS, BASE_TS + HOUR))
        with pytest.raises(ArgumentError):
            te_windows(engine, ctx, "MCE", "ECC", 15 * 60_000 + 1, 60_000, 60_000)
        with pytest.raises(ArgumentError):
            te_windows(engine, ctx, "MCE", "ECC", 120_000, 60_000, 60_000)  # only 2 bins
