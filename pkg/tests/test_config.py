import json

import pytest

from contentevo import config
from contentevo.cost import CostMatrix, CostSpec, ImportanceWeight, SquaredError, UnitCost
from contentevo.errors import MissingSection
from contentevo.evolution import DependencyGraph, EvolutionModel, GeneralCdf, RelationModel
from contentevo.intensity import Constant, weekly
from contentevo.markov import BinaryLumpAttribute, OverwriteAttribute, RandomWalkAttribute
from contentevo.simulator import SimConfig
from contentevo.stochastic import BatchDistribution


def rich_model(weekly_rpc):
    rels = {
        "R": RelationModel(
            "R", weekly_rpc, batch=BatchDistribution(((1, 0.9), (2, 0.1))), deletion=Constant(0.2), cardinality=12,
            attributes={"A": BinaryLumpAttribute(0.4, 0.1, Constant(1.0)),
                        "C": OverwriteAttribute(("red", "blue"), (0.3, 0.7), (1.0, 2.0), Constant(0.5)),
                        "X": RandomWalkAttribute(0.1, 1.5, Constant(2.0))},
            histograms={"A": {0: 8.0, 1: 4.0}, "C": {"red": 5.0, "blue": 7.0}},
            insert_values={"A": {0: 1.0}, "X": {2.5: 1.0}},
        ),
        "S": RelationModel("S", Constant(1.0), deletion=weekly([(0.0, 5.0, 0.3), (5.0, 7.0, 0.1)]), cardinality=4),
        "T": RelationModel("T", lifespan=GeneralCdf("fixed", (("age_limit", 3.0),), (0.5, 1.0)), cardinality=2),
    }
    return EvolutionModel(rels, DependencyGraph({("R", "S"): 2}))


def test_model_round_trip(weekly_rpc):
    model = rich_model(weekly_rpc)
    text = json.dumps(config.model_to_json(model))
    back = config.model_from_json(json.loads(text))
    assert back.relations == model.relations
    assert back.graph.to_json() == model.graph.to_json()


def test_cost_round_trip():
    spec = CostSpec(alpha=0.3, setup_c=2.0, beta=0.1, g_ins=ImportanceWeight.work_hours(3.0, 1.0),
                    g_del=ImportanceWeight.flat(2.0),
                    metrics={"A": UnitCost(), "B": CostMatrix(((0, 2), (1, 0))), "X": SquaredError(0.5)})
    back = config.cost_from_json(json.loads(json.dumps(config.cost_to_json(spec))))
    assert back == spec


def test_cost_shorthand():
    spec = config.cost_from_json({"alpha": 0.2, "g_ins": {"type": "work_hours", "a1": 2, "a2": 1}, "g_del": 1.5})
    assert spec.g_ins == ImportanceWeight.work_hours(2.0, 1.0)
    assert spec.g_del == ImportanceWeight.constant(1.5)


def test_simulation_section_accepts_timestamps(weekly_rpc):
    model = rich_model(weekly_rpc)
    cfg = config.Config({"simulation": {"t0": "1970-01-06T00:00:00Z", "t_end": 3.5, "replications": 4}})
    sim = cfg.sim(model)
    assert (sim.t0, sim.t_end, sim.replications) == (1.0, 3.5, 4)
    again = config.sim_from_json(config.sim_to_json(sim), model)
    assert again == SimConfig(model, 1.0, 3.5, 4, 0, 1000)


def test_missing_sections():
    cfg = config.Config({})
    with pytest.raises(MissingSection):
        cfg.model
    with pytest.raises(MissingSection):
        cfg.cost
    with pytest.raises(MissingSection):
        cfg.sim(EvolutionModel({"R": RelationModel("R")}))


def test_epoch_shifts_time_values():
    cfg = config.Config({"epoch": "2024-01-01T00:00:00Z"})
    assert cfg.time("2024-01-02T06:00:00Z") == pytest.approx(1.25)
    assert cfg.time(3) == 3.0
