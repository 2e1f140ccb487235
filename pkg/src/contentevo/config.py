"""JSON model configuration: relations, references, costs and simulation settings.

Every ``*_to_json`` output parses back with the matching ``*_from_json`` into an
equal object.
"""
from __future__ import annotations

import json
from pathlib import Path

from .cost import CostMatrix, CostSpec, ImportanceWeight, SquaredError, UnitCost
from .errors import MissingSection
from .evolution import DependencyGraph, EvolutionModel, GeneralCdf, Memoryless, RelationModel
from .intensity import Constant, from_json as intensity_from_json
from .markov import RandomWalkAttribute, attribute_from_json
from .simulator import SimConfig
from .stochastic import UNIT_BATCH, BatchDistribution
from .timeutil import DEFAULT_EPOCH, parse_epoch, parse_time_value


def _tuples(obj):
    if isinstance(obj, list):
        return tuple(_tuples(x) for x in obj)
    return obj


def _state_key(states, key):
    for state in states:
        if state == key or str(state) == str(key):
            return state
    return key


def lifespan_to_json(life) -> dict:
    if isinstance(life, GeneralCdf):
        return life.to_json()
    return {"type": "memoryless"}


def lifespan_from_json(spec) -> Memoryless | GeneralCdf:
    if not spec or spec.get("type", "memoryless") == "memoryless":
        return Memoryless()
    return GeneralCdf(spec["distribution"], tuple(spec.get("params", {}).items()), tuple(spec.get("ages", ())),
                      tuple(spec.get("weights", ())))


def relation_to_json(rel: RelationModel) -> dict:
    out = {
        "insertion": rel.insertion.to_json(),
        "batch": rel.batch.to_json(),
        "deletion": rel.deletion.to_json(),
        "lifespan": lifespan_to_json(rel.lifespan),
        "cardinality": rel.cardinality,
        "attributes": {a: m.to_json() for a, m in rel.attributes.items()},
        "histograms": {a: {str(k): v for k, v in h.items()} for a, h in rel.histograms.items()},
    }
    if rel.insert_values:
        out["insert_values"] = {a: {str(k): v for k, v in h.items()} for a, h in rel.insert_values.items()}
    if rel.delete_batch != UNIT_BATCH:
        out["delete_batch"] = rel.delete_batch.to_json()
    if rel.joint_histogram:
        out["joint_histogram"] = [{"values": list(k), "count": v} for k, v in rel.joint_histogram.items()]
    return out


def _value_map(attrs, attr, mapping):
    am = attrs.get(attr)
    if am is None or isinstance(am, RandomWalkAttribute):
        return {(float(k) if am is not None else k): float(v) for k, v in mapping.items()}
    return {_state_key(am.states, k): float(v) for k, v in mapping.items()}


def relation_from_json(name: str, spec) -> RelationModel:
    attrs = {a: attribute_from_json(m) for a, m in spec.get("attributes", {}).items()}
    joint = None
    if spec.get("joint_histogram"):
        joint = {tuple(row["values"]): float(row["count"]) for row in spec["joint_histogram"]}
    return RelationModel(
        name,
        insertion=intensity_from_json(spec.get("insertion", Constant(0.0).to_json())),
        batch=BatchDistribution.from_json(spec.get("batch")),
        deletion=intensity_from_json(spec.get("deletion", Constant(0.0).to_json())),
        lifespan=lifespan_from_json(spec.get("lifespan")),
        attributes=attrs,
        histograms={a: _value_map(attrs, a, h) for a, h in spec.get("histograms", {}).items()},
        cardinality=spec.get("cardinality", 0),
        insert_values={a: _value_map(attrs, a, h) for a, h in spec.get("insert_values", {}).items()},
        delete_batch=BatchDistribution.from_json(spec.get("delete_batch")),
        joint_histogram=joint,
    )


def graph_from_json(spec) -> DependencyGraph:
    spec = spec or {}
    edges = {(e["from"], e["to"]): int(e.get("multiplicity", 1)) for e in spec.get("edges", [])}
    overrides = {(e["from"], e["to"]): float(e["multiplicity"]) for e in spec.get("closure_overrides", [])}
    return DependencyGraph(edges, overrides)


def model_to_json(model: EvolutionModel) -> dict:
    return {
        "relations": {name: relation_to_json(rel) for name, rel in sorted(model.relations.items())},
        "graph": model.graph.to_json(),
    }


def model_from_json(spec) -> EvolutionModel:
    if "relations" not in spec:
        raise MissingSection("the configuration has no 'relations' section")
    relations = {name: relation_from_json(name, rel) for name, rel in spec["relations"].items()}
    return EvolutionModel(relations, graph_from_json(spec.get("graph")))


def weight_to_json(w: ImportanceWeight) -> dict:
    return {"rate": w.rate.to_json(), "terminal": w.terminal, "description": w.description}


def weight_from_json(spec) -> ImportanceWeight:
    if isinstance(spec, (int, float)):
        return ImportanceWeight.constant(float(spec))
    kind = spec.get("type")
    if kind == "constant":
        return ImportanceWeight.constant(float(spec.get("level", 1.0)))
    if kind == "work_hours":
        blocks = [tuple(b) for b in spec["blocks"]] if "blocks" in spec else None
        return ImportanceWeight.work_hours(float(spec["a1"]), float(spec["a2"]), blocks)
    if kind == "flat":
        return ImportanceWeight.flat(float(spec.get("charge", 1.0)))
    return ImportanceWeight(intensity_from_json(spec["rate"]), _tuples(spec.get("description", [])),
                            float(spec.get("terminal", 0.0)))


def metric_to_json(metric) -> dict:
    if isinstance(metric, UnitCost):
        return {"type": "unit"}
    if isinstance(metric, CostMatrix):
        return {"type": "matrix", "matrix": [list(r) for r in metric.matrix]}
    if isinstance(metric, SquaredError):
        return {"type": "squared", "k": metric.k}
    raise TypeError(f"unknown metric {metric!r}")


def metric_from_json(spec):
    kind = spec.get("type", "unit")
    if kind == "unit":
        return UnitCost()
    if kind == "matrix":
        return CostMatrix(_tuples(spec["matrix"]))
    if kind == "squared":
        return SquaredError(spec.get("k", 1.0))
    raise ValueError(f"unknown metric type {kind!r}")


def cost_to_json(spec: CostSpec) -> dict:
    return {
        "alpha": spec.alpha,
        "setup_c": spec.setup_c,
        "beta": spec.beta,
        "g_ins": weight_to_json(spec.g_ins),
        "g_del": weight_to_json(spec.g_del),
        "metrics": {a: metric_to_json(m) for a, m in spec.metrics.items()},
    }


def cost_from_json(spec) -> CostSpec:
    if spec is None:
        raise MissingSection("the configuration has no 'cost' section")
    return CostSpec(
        alpha=float(spec.get("alpha", 0.5)),
        setup_c=float(spec.get("setup_c", 0.0)),
        beta=float(spec.get("beta", 0.0)),
        g_ins=weight_from_json(spec.get("g_ins", 1.0)),
        g_del=weight_from_json(spec.get("g_del", 0.0)),
        metrics={a: metric_from_json(m) for a, m in spec.get("metrics", {}).items()},
    )


def sim_to_json(cfg: SimConfig) -> dict:
    """Simulation section with times in days since the epoch (ISO strings are also accepted on input)."""
    return {"t0": cfg.t0, "t_end": cfg.t_end,
            "replications": cfg.replications, "seed": cfg.seed, "block_size": cfg.block_size}


def sim_from_json(spec, model: EvolutionModel, epoch=DEFAULT_EPOCH) -> SimConfig:
    if spec is None:
        raise MissingSection("the configuration has no 'simulation' section")
    return SimConfig(model, parse_time_value(spec.get("t0", 0.0), epoch), parse_time_value(spec["t_end"], epoch),
                     int(spec.get("replications", 1)), int(spec.get("seed", 0)), int(spec.get("block_size", 1000)))


class Config:
    """A parsed configuration file; sections are loaded on first use."""

    def __init__(self, data: dict, path: str | None = None):
        self.data = data
        self.path = path
        self.epoch = parse_epoch(data.get("epoch"))

    @classmethod
    def load(cls, path) -> "Config":
        with open(path) as handle:
            return cls(json.load(handle), str(path))

    def section(self, key: str):
        if key not in self.data:
            raise MissingSection(f"{self.path or 'configuration'} has no {key!r} section")
        return self.data[key]

    @property
    def model(self) -> EvolutionModel:
        return model_from_json(self.data)

    @property
    def cost(self) -> CostSpec:
        return cost_from_json(self.section("cost"))

    def sim(self, model: EvolutionModel | None = None) -> SimConfig:
        return sim_from_json(self.section("simulation"), model or self.model, self.epoch)

    def time(self, value) -> float:
        return parse_time_value(value, self.epoch)


def dump(data: dict, path) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=False) + "\n")
