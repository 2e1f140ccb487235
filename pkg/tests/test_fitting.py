import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from contentevo.errors import EmptySample, NoMultiEvents, TooFewEvents
from contentevo.fitting import (
    KS_CRITICAL,
    EventLog,
    SegmentationSpec,
    batch_events,
    best_variant,
    fit_batch_distribution,
    fit_homogeneous,
    fit_rpc,
    goodness_of_fit,
    ks_statistic,
    ks_test,
    preset,
    rescale_interarrivals,
    runs_test,
    singleton_runs,
)
from contentevo.intensity import Constant, weekly
from contentevo.stochastic import UNIT_BATCH, BatchDistribution, RngStream, simulate_nhpp
from contentevo.timeutil import clock, to_days

MINUTE = clock(minutes=1)
TWO_BLOCKS = SegmentationSpec((((0, 1, 2), 0, 24), ((3, 4, 5, 6), 0, 24)))


def simulated_log(intensity, days, seed, batch=UNIT_BATCH):
    events = simulate_nhpp(intensity, batch, 0.0, days, RngStream(seed))
    return EventLog([t for t, _ in events], [k for _, k in events], "insert", start=0.0, end=days)


def test_batching_example():
    stamps = ["1999-03-02T13:43:19Z", "1999-03-02T13:43:23Z", "1999-03-02T13:43:23Z"]
    log = EventLog.from_times([to_days(s) for s in stamps])
    out = batch_events(log, MINUTE)
    assert len(out) == 1
    assert out.counts.tolist() == [3]
    assert out.times[0] == to_days(stamps[0])


def test_batching_leaves_sparse_logs_alone():
    log = EventLog.from_times(np.arange(10) * 2 * MINUTE, counts=[1, 2] * 5)
    out = batch_events(log, MINUTE)
    assert np.array_equal(out.times, log.times) and np.array_equal(out.counts, log.counts)


def test_batching_keeps_operations_apart():
    log = EventLog([0.0, 1e-6, 2e-6], None, ["insert", "delete", "insert"])
    out = batch_events(log, MINUTE)
    assert sorted(zip(out.ops.tolist(), out.counts.tolist())) == [("delete", 1), ("insert", 2)]


def test_batching_known_cluster_count():
    # 500 anchors a day apart, some followed by companions a few seconds later
    rng = np.random.default_rng(2)
    anchors = np.arange(500) * 1.0
    extra = rng.integers(0, 3, 500)
    times = np.sort(np.concatenate([anchors] + [anchors[extra > k] + (k + 1) * clock(seconds=5) for k in range(2)]))
    out = batch_events(EventLog.from_times(times), MINUTE)
    assert len(out) == 500
    assert out.counts.sum() == times.size
    assert np.array_equal(out.counts, extra + 1)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 0.05), min_size=1, max_size=40), st.floats(1e-4, 0.01))
def test_batching_is_idempotent(times, window):
    once = batch_events(EventLog.from_times(sorted(times)), window)
    twice = batch_events(once, window)
    assert np.array_equal(once.times, twice.times) and np.array_equal(once.counts, twice.counts)


def test_fit_homogeneous_paper_intervals():
    for interval, rate in ((clock(5, 15, 19), 4.57), (clock(5, 28, 20), 4.39)):
        log = EventLog.from_times(np.arange(581) * interval)
        assert fit_homogeneous(log) == pytest.approx(rate, abs=5e-3)
    with pytest.raises(TooFewEvents):
        fit_homogeneous(EventLog.from_times([1.0]))


def test_fit_homogeneous_recovers_rate():
    log = simulated_log(Constant(3.0), 10_000 / 3.0, 21)
    assert fit_homogeneous(log) == pytest.approx(3.0, rel=0.05)


def test_fit_rpc_on_homogeneous_data():
    log = simulated_log(Constant(4.0), 2500.0, 22)
    fitted = fit_rpc(log, preset("workweek"))
    rates = [c[0] for c in fitted.base.coeffs]
    assert all(abs(r - 4.0) <= 0.4 for r in rates)


def test_fit_rpc_two_blocks():
    truth = weekly([(0.0, 3.0, 8.0), (3.0, 7.0, 1.0)])
    log = simulated_log(truth, 7.0 * 250, 23)
    fitted = fit_rpc(log, TWO_BLOCKS)
    assert fitted.eval(1.0) == pytest.approx(8.0, rel=0.1)
    assert fitted.eval(5.0) == pytest.approx(1.0, rel=0.1)


def test_fit_rpc_empty_block_and_errors():
    log = EventLog.from_times([0.5, 1.5, 2.5], start=0.0, end=14.0)
    fitted = fit_rpc(log, TWO_BLOCKS)
    assert fitted.eval(5.0) == 0.0
    with pytest.raises(ValueError):
        fit_rpc(EventLog.from_times([0.5, 1.5], start=0.0, end=3.0), TWO_BLOCKS)
    with pytest.raises(ValueError):
        SegmentationSpec((((0, 1), 0, 24),))


def test_single_week_exposure():
    seg = SegmentationSpec((((0,), 0, 24), ((1, 2, 3, 4, 5, 6), 0, 24)))
    log = EventLog.from_times([0.5, 3.0, 4.0], start=0.0, end=7.0)
    fitted = fit_rpc(log, seg)
    assert fitted.eval(0.5) == 1.0
    assert fitted.eval(3.5) == pytest.approx(2 / 6)


def test_batch_distribution_fit():
    counts = [1] * 536 + [2] * 19 + [3] * 2
    fitted = dict(fit_batch_distribution(EventLog.from_times(np.arange(557.0), counts)).support)
    assert fitted[1] == pytest.approx(0.962, abs=5e-4)
    assert fitted[2] == pytest.approx(0.034, abs=5e-4)
    assert fitted[3] == pytest.approx(0.004, abs=5e-4)
    single = fit_batch_distribution(EventLog.from_times([1.0, 2.0]))
    assert single.support == ((1, 1.0),)


def test_batch_distribution_recovery():
    truth = BatchDistribution(((1, 0.7), (2, 0.2), (4, 0.1)))
    log = simulated_log(Constant(10.0), 2000.0, 24, batch=truth)
    fitted = dict(fit_batch_distribution(log).support)
    n = len(log)
    for size, p in truth.support:
        assert abs(fitted[size] - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_rescaling_constant_spacing():
    log = EventLog.from_times([0.0, 0.25, 0.5, 1.0])
    assert np.allclose(rescale_interarrivals(log, Constant(4.0)), [1.0, 1.0, 2.0])
    with pytest.raises(TooFewEvents):
        rescale_interarrivals(EventLog.from_times([0.0]), Constant(1.0))


def test_ks_statistic_on_quantile_sample():
    n = 9
    sample = [-math.log(1 - k / (n + 1)) for k in range(1, n + 1)]
    expected = oracles.ks_brute_force(sample, oracles.unit_exponential_cdf)
    assert ks_statistic(sample, np.vectorize(oracles.unit_exponential_cdf)) == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(0.1, abs=1e-12)
    with pytest.raises(EmptySample):
        ks_test([])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=60))
def test_ks_statistic_matches_brute_force(sample):
    got = ks_test(sample)
    assert got.D_n == pytest.approx(oracles.ks_brute_force(sample, oracles.unit_exponential_cdf), abs=1e-12)
    assert 0.0 <= got.D_n <= 1.0


def test_ks_thresholds():
    assert ks_test(np.ones(580)).thresholds[0.005] == pytest.approx(0.0718, abs=1e-4)
    assert ks_test(np.ones(557)).thresholds[0.1] == pytest.approx(0.0517, abs=1e-4)
    assert set(KS_CRITICAL) == {0.1, 0.05, 0.01, 0.005}


def test_runs_extraction():
    log = EventLog.from_times(np.arange(8.0), [2, 1, 1, 3, 2, 1, 1, 1])
    assert singleton_runs(log).tolist() == [0, 2, 0]
    with pytest.raises(NoMultiEvents):
        runs_test(EventLog.from_times([0.0, 1.0]))


def test_runs_test_accepts_iid_batches():
    batch = BatchDistribution(((1, 0.9), (2, 0.1)))
    passed = 0
    for seed in range(100):
        sizes = batch.sample(RngStream(seed), 600)
        log = EventLog.from_times(np.arange(sizes.size, dtype=float), sizes)
        passed += not runs_test(log).rejects(0.05)
    assert passed >= 90


def test_goodness_of_fit_ordering(weekly_rpc):
    log = simulated_log(weekly_rpc, 7.0 * 26, 31)
    rows = goodness_of_fit(log, preset("workweek"), MINUTE)
    by = {row.variant: row for row in rows}
    assert [row.variant for row in rows] == ["homogeneous", "compound-homogeneous", "rpc", "compound-rpc"]
    assert by["homogeneous"].ks.rejects(0.05)
    assert not by["rpc"].ks.rejects(0.05)
    assert best_variant(rows).variant in ("rpc", "compound-rpc")


def test_goodness_of_fit_on_homogeneous_data():
    log = simulated_log(Constant(4.0), 200.0, 32)
    rows = goodness_of_fit(log, preset("workweek"), MINUTE)
    assert best_variant(rows).variant == "homogeneous"


def test_csv_round_trip(tmp_path):
    log = EventLog([0.1, 0.1 + 1e-6, 3.75], [1, 2, 1], ["insert", "modify", "delete"])
    path = tmp_path / "log.csv"
    log.write_csv(path)
    back = EventLog.read_csv(path)
    assert np.allclose(back.times, log.times, atol=1e-11)
    assert back.counts.tolist() == [1, 2, 1]
    assert back.ops.tolist() == ["insert", "modify", "delete"]


def test_csv_defaults(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text("timestamp\n1970-01-05T12:00:00Z\n1970-01-06T00:00:00Z\n")
    log = EventLog.read_csv(path)
    assert log.times.tolist() == [0.5, 1.0]
    assert log.counts.tolist() == [1, 1] and set(log.ops) == {"insert"}


def test_segmentation_presets_partition_week():
    for name in ("workweek", "flat"):
        seg = preset(name)
        total = sum(b - a for i in range(len(seg.blocks)) for a, b in seg.intervals(i))
        assert total == pytest.approx(7.0)
        assert SegmentationSpec.from_json(seg.to_json()) == seg
    phases = np.linspace(0, 7, 1000, endpoint=False)
    assert np.all(preset("workweek").block_of(phases) >= 0)
