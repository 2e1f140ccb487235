import math

import numpy as np
import pytest

from contentevo import simulator
from contentevo.cost import CostSpec, ImportanceWeight
from contentevo.errors import CycleDetected, EmptyTraces
from contentevo.evolution import (
    DependencyGraph,
    EvolutionModel,
    RelationModel,
    expected_cardinality,
    survival_prob,
)
from contentevo.intensity import Constant
from contentevo.markov import BinaryLumpAttribute, RandomWalkAttribute
from contentevo.simulator import SimConfig, integrity_violations, run, summarize

LN2 = math.log(2)


def test_trivial_configuration():
    m = EvolutionModel({"R": RelationModel("R", cardinality=4)})
    res = run(SimConfig(m, 0.0, 3.0, replications=5, seed=1))
    assert all(tr.events == [] for tr in res.traces())
    assert res.trace(0).final_state["R"]["cardinality"] == 4
    card = summarize(res, "cardinality", name="R", f=3.0)
    assert (card.mean, card.std_error) == (4.0, 0.0)


def test_homogeneous_cardinality_matches_closed_form():
    m = EvolutionModel({"R": RelationModel("R", Constant(2.0), deletion=Constant(1.0), cardinality=10)})
    res = run(SimConfig(m, 0.0, LN2, replications=100_000, seed=3))
    assert expected_cardinality(m, "R", 0.0, LN2) == pytest.approx(6.0)
    assert summarize(res, "cardinality", name="R", f=LN2).within(6.0)


def two_relations():
    rels = {"R": RelationModel("R", Constant(1.0), deletion=Constant(0.4), cardinality=6),
            "S": RelationModel("S", Constant(2.0), deletion=Constant(0.3), cardinality=3)}
    return EvolutionModel(rels, DependencyGraph({("R", "S"): 1}))


def test_cascading_survival():
    m = two_relations()
    res = run(SimConfig(m, 0.0, 1.5, replications=100_000, seed=4))
    expected = math.exp(-(0.4 + 0.3) * 1.5)
    assert survival_prob(m, "R", 0.0, 1.5) == pytest.approx(expected)
    assert summarize(res, "survival", name="R", s=0.0, f=1.5).within(expected)
    assert integrity_violations(res) == []


def test_same_seed_same_histories():
    m = two_relations()
    a = run(SimConfig(m, 0.0, 2.0, replications=7, seed=11, block_size=3))
    b = run(SimConfig(m, 0.0, 2.0, replications=7, seed=11, block_size=3))
    c = run(SimConfig(m, 0.0, 2.0, replications=7, seed=12, block_size=3))
    assert [t.events for t in a.traces()] == [t.events for t in b.traces()]
    assert [t.events for t in a.traces()] != [t.events for t in c.traces()]


def test_trace_events_are_ordered_and_consistent():
    rels = {"R": RelationModel("R", Constant(3.0), deletion=Constant(0.5), cardinality=4,
                               attributes={"A": BinaryLumpAttribute(1.0, 0.5)}, histograms={"A": {0: 3, 1: 1}},
                               insert_values={"A": {0: 1.0}})}
    res = run(SimConfig(EvolutionModel(rels), 0.0, 5.0, replications=3, seed=2))
    for tr in res.traces():
        times = [e["time"] for e in tr.events]
        assert times == sorted(times)
        alive = set(range(4))
        for e in tr.events:
            if e["op"] == "insert":
                alive.add(e["tuple_id"])
            elif e["op"] == "delete":
                alive.remove(e["tuple_id"])
            else:
                assert e["tuple_id"] in alive and e["old_value"] != e["new_value"]
        assert tr.final_state["R"]["cardinality"] == len(alive)


def test_random_walk_values_move():
    rels = {"R": RelationModel("R", cardinality=1, attributes={"X": RandomWalkAttribute(1.0, 0.5, Constant(3.0))})}
    res = run(SimConfig(EvolutionModel(rels), 0.0, 2.0, replications=1, seed=5))
    assert any(e["op"] == "modify" for e in res.trace(0).events)


def test_cycles_are_rejected():
    with pytest.raises(CycleDetected):
        EvolutionModel({"A": RelationModel("A"), "B": RelationModel("B")},
                       DependencyGraph({("A", "B"): 1, ("B", "A"): 1}))


def test_summarize_needs_replications():
    with pytest.raises(EmptyTraces):
        summarize(None, "cardinality", name="R", f=1.0)


def test_single_insertion_obsolescence_is_exact():
    # sparse arrivals: replications with exactly one insertion are charged g(s, f, b) for that tuple
    m = EvolutionModel({"R": RelationModel("R", Constant(0.3))})
    spec = CostSpec(g_ins=ImportanceWeight.work_hours(4.0, 1.0))
    s, f = 0.2, 2.7
    res = run(SimConfig(m, s, f, replications=400, seed=6))
    costs = res.obsolescence("R", spec, s, f)["insertion"]
    checked = 0
    for i, tr in enumerate(res.traces()):
        births = [e["time"] for e in tr.events if e["op"] == "insert"]
        if len(births) == 1:
            assert costs[i] == pytest.approx(float(spec.g_ins.g(s, f, np.array(births))[0]), rel=1e-12)
            checked += 1
        elif not births:
            assert costs[i] == 0.0
    assert checked > 50


def test_trace_and_summary_files(tmp_path):
    res = run(SimConfig(two_relations(), 0.0, 1.0, replications=2, seed=9))
    simulator.write_traces(res, tmp_path / "t.csv")
    header = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert header == ",".join(simulator.TRACE_HEADER)
    simulator.write_summary({"c": summarize(res, "cardinality", name="R", f=1.0)}, tmp_path / "s.json")
    assert '"std_error"' in (tmp_path / "s.json").read_text()
