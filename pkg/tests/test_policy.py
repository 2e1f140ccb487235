import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contentevo.cost import CostSpec, ImportanceWeight
from contentevo.errors import EmptyTrace, NonpositiveRate, TriggerNeverFires, UnknownPolicy
from contentevo.evolution import EvolutionModel, RelationModel
from contentevo.fitting import EventLog
from contentevo.intensity import Constant, weekly
from contentevo.markov import BinaryLumpAttribute
from contentevo.policy import (
    USP,
    FirstAlteration,
    Schedule,
    Threshold,
    evaluate_schedule,
    fa_level_from_M,
    format_interval,
    generate_schedule,
    make_policy,
    refreshes_by_level,
    threshold_from_M,
    usp_interval,
)
from contentevo.stochastic import UNIT_BATCH, RngStream, simulate_nhpp
from contentevo.timeutil import DAY_SECONDS

ONE_SECOND = 1.0 / DAY_SECONDS


def homogeneous(lam):
    return EvolutionModel({"R": RelationModel("R", Constant(lam))})


def test_usp_interval_examples():
    assert usp_interval(1.0, 2.0) == 2.0
    assert usp_interval(4.57, 0.5) == pytest.approx(0.5 * usp_interval(4.57, 1.0))
    with pytest.raises(NonpositiveRate):
        usp_interval(0.0, 1.0)
    assert format_interval(usp_interval(4.57, 1.0)) == "5:15:06"


def test_threshold_examples():
    assert threshold_from_M(4.57, 1.0) == pytest.approx(0.109, abs=5e-4)
    assert threshold_from_M(4.57, 2.0) == pytest.approx(4 * threshold_from_M(4.57, 1.0))
    assert threshold_from_M(0.5, 1.0) == 1.0
    with pytest.raises(NonpositiveRate):
        threshold_from_M(-1.0, 1.0)


def test_policy_parameters_are_validated():
    with pytest.raises(ValueError):
        USP(0.0)
    with pytest.raises(ValueError):
        Threshold(-1.0)
    with pytest.raises(ValueError):
        FirstAlteration(1.0)
    with pytest.raises(ValueError):
        Schedule((2.0, 1.0), 0.0, 5.0)
    with pytest.raises(ValueError):
        Schedule((6.0,), 0.0, 5.0)


def test_make_policy():
    assert make_policy("usp", 1.0, 4.57) == USP(1.0, 4.57)
    assert make_policy("threshold", 1.0, 4.57) == Threshold(threshold_from_M(4.57, 1.0))
    assert make_policy("FA", 1.0, 4.57) == FirstAlteration(1 - math.exp(-1.0))
    with pytest.raises(UnknownPolicy):
        make_policy("lottery", 1.0, 4.57)


def test_usp_week():
    sched = generate_schedule(USP(1.0, 4.57), homogeneous(4.57), "R", None, 0.0, 7.0)
    gap = 1.0 / 4.57
    assert sched.refresh_count == math.floor(7.0 / gap) == 31
    assert len(sched.sync_points) == 32
    assert np.allclose(np.diff(sched.sync_points), gap, rtol=0, atol=1e-12)


@pytest.mark.parametrize("M", [0.5, 1.0, 2.0, 4.0])
def test_threshold_and_fa_reproduce_usp_on_homogeneous_model(M):
    lam = 4.57
    model = homogeneous(lam)
    usp = generate_schedule(USP(M), model, "R", None, 0.0, 30.0)
    thr = generate_schedule(make_policy("threshold", M, lam), model, "R", None, 0.0, 30.0)
    fa = generate_schedule(make_policy("fa", M, lam), model, "R", None, 0.0, 30.0)
    assert usp.refresh_count == thr.refresh_count == fa.refresh_count
    assert np.max(np.abs(np.subtract(usp.times, thr.times))) <= ONE_SECOND
    assert np.max(np.abs(np.subtract(usp.times, fa.times))) <= ONE_SECOND


def test_threshold_clusters_in_busy_hours(weekly_rpc):
    model = EvolutionModel({"R": RelationModel("R", weekly_rpc)})
    lam = weekly_rpc.mean_rate()
    sched = generate_schedule(make_policy("threshold", 1.0, lam), model, "R", None, 0.0, 28.0)
    rows = {row["rate"]: row for row in refreshes_by_level(sched, weekly_rpc)}
    assert rows[7.50]["per_day"] > rows[1.15]["per_day"]
    assert sum(row["refreshes"] for row in rows.values()) == sched.refresh_count


@pytest.mark.parametrize("kind", ["threshold", "fa"])
def test_two_segment_responsiveness(kind):
    rpc = weekly([(0.0, 3.5, 8.0), (3.5, 7.0, 1.0)])
    model = EvolutionModel({"R": RelationModel("R", rpc)})
    sched = generate_schedule(make_policy(kind, 0.5, rpc.mean_rate()), model, "R", None, 0.0, 14.0)
    hi, lo = sorted(refreshes_by_level(sched, rpc), key=lambda r: -r["rate"])
    assert hi["per_day"] >= lo["per_day"]


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_more_budget_more_refreshes(m1, m2):
    small, large = sorted((m1, m2))
    model = EvolutionModel({"R": RelationModel("R", weekly([(0.0, 2.0, 6.0), (2.0, 7.0, 1.5)]), deletion=Constant(0.2),
                                               cardinality=5, attributes={"A": BinaryLumpAttribute(0.3)},
                                               histograms={"A": {0: 5}})})
    for kind in ("usp", "threshold", "fa"):
        tight = generate_schedule(make_policy(kind, small, 3.0), model, "R", None, 0.0, 7.0)
        loose = generate_schedule(make_policy(kind, large, 3.0), model, "R", None, 0.0, 7.0)
        assert tight.refresh_count >= loose.refresh_count


def test_fa_level():
    assert fa_level_from_M(1.0) == pytest.approx(1 - math.exp(-1))


def test_trigger_never_fires():
    still = EvolutionModel({"R": RelationModel("R", Constant(0.0))})
    with pytest.raises(TriggerNeverFires) as info:
        generate_schedule(Threshold(0.1), still, "R", None, 0.0, 5.0)
    assert info.value.schedule.refresh_count == 0


def test_evaluate_empty_schedule_is_pure_obsolescence():
    model = homogeneous(2.0)
    spec = CostSpec(alpha=0.0)
    out = evaluate_schedule(Schedule((), 0.0, 3.0), spec, model, "R")
    assert out["total"] == pytest.approx(0.5 * 2.0 * 9.0)
    assert out["transcription"] == 0.0 and out["refresh_count"] == 0


def test_trace_single_insertion():
    spec = CostSpec(alpha=0.0, g_ins=ImportanceWeight.work_hours(2.0, 0.5))
    x, f = 0.3, 1.2
    log = EventLog.from_times([x])
    out = evaluate_schedule(Schedule((f,), 0.0, 2.0), spec, None, None, mode="trace", log=log)
    assert out["obsolescence"] == pytest.approx(float(spec.g_ins.g(0.0, f, np.array([x]))[0]))
    with pytest.raises(EmptyTrace):
        evaluate_schedule(Schedule((f,), 0.0, 2.0), spec, None, None, mode="trace", log=EventLog.from_times([]))


def test_trace_transcription_counts():
    spec = CostSpec(alpha=1.0, setup_c=2.0, beta=0.5)
    log = EventLog([0.1, 0.2, 1.5, 2.5], [1, 3, 1, 1], ["insert", "insert", "delete", "insert"])
    out = evaluate_schedule(Schedule((1.0, 2.0), 0.0, 3.0), spec, None, None, mode="trace", log=log)
    # first interval moves 4 tuples, second one deletion; the trailing interval is never transcribed
    assert out["transcription"] == pytest.approx(2.0 + 0.5 * 4 + 2.0 + 0.5 * 1)


def test_calibrated_policies_cost_the_same_on_homogeneous_traces():
    lam, M = 4.57, 1.0
    model = homogeneous(lam)
    spec = CostSpec(alpha=0.3, setup_c=1.0, beta=0.2)
    usp = generate_schedule(USP(M), model, "R", None, 0.0, 20.0)
    thr = generate_schedule(make_policy("threshold", M, lam), model, "R", None, 0.0, 20.0)
    diffs = []
    for seed in range(50):
        times = [t for t, _ in simulate_nhpp(Constant(lam), UNIT_BATCH, 0.0, 20.0, RngStream(seed))]
        log = EventLog.from_times(times)
        a = evaluate_schedule(usp, spec, None, None, mode="trace", log=log)["total"]
        b = evaluate_schedule(thr, spec, None, None, mode="trace", log=log)["total"]
        diffs.append(a - b)
    diffs = np.array(diffs)
    assert abs(diffs.mean()) <= 3 * max(diffs.std(ddof=1), 1e-9) / math.sqrt(diffs.size) + 1e-6
