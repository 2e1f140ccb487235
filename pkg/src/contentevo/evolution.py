"""Relation-level predictions: survival, cardinality, histograms and first alteration.

A relation's state (cardinality and attribute histograms) is taken to hold at the
start ``s`` of every prediction window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy import integrate as sp_integrate
from scipy import stats

from . import quadrature
from .errors import (
    CycleDetected,
    MissingAttributeModel,
    MissingHistogram,
    MissingMultiplicityData,
    MissingRelation,
    MissingState,
    UnsupportedModel,
)
from .intensity import Constant, IntensityFunction, proportional_factor, sum_intensities
from .markov import AttributeModel, BinaryLumpAttribute, MarkovAttribute, OverwriteAttribute, RandomWalkAttribute, as_markov
from .stochastic import UNIT_BATCH, BatchDistribution

SKETCH_QUANTILES = 256


@dataclass(frozen=True)
class Memoryless:
    """Deletions follow the relation's deletion intensity, independent of age."""


@dataclass(frozen=True)
class GeneralCdf:
    """Lifetimes drawn from a fixed distribution over age, plus the ages of the current tuples.

    ``distribution`` names a ``scipy.stats`` continuous distribution, or ``"fixed"``
    for a deterministic lifetime ``params["age_limit"]``.  ``weights`` lets a
    quantile sketch stand in for a full age table.
    """

    distribution: str
    params: tuple[tuple[str, float], ...]
    ages: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(sorted((str(k), float(v)) for k, v in dict(self.params).items())))
        object.__setattr__(self, "ages", tuple(float(a) for a in self.ages))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.weights and len(self.weights) != len(self.ages):
            raise ValueError("one weight per age entry is required")
        if any(a < 0 for a in self.ages):
            raise ValueError("ages must be nonnegative")
        if abs(float(self.cdf(0.0))) > 1e-12:
            raise ValueError("lifetime distribution must put no mass at or below age 0")

    @classmethod
    def from_ages(cls, distribution: str, params: Mapping[str, float], ages: Sequence[float], sketch: bool = False,
                  quantiles: int = SKETCH_QUANTILES) -> "GeneralCdf":
        ages = np.asarray(ages, dtype=float)
        if sketch and ages.size > quantiles:
            probs = (np.arange(quantiles) + 0.5) / quantiles
            points = np.quantile(ages, probs)
            return cls(distribution, tuple(params.items()), tuple(points), tuple(np.full(quantiles, ages.size / quantiles)))
        return cls(distribution, tuple(params.items()), tuple(ages))

    @property
    def _frozen(self):
        if self.distribution == "fixed":
            return None
        return getattr(stats, self.distribution)(**dict(self.params))

    @property
    def age_limit(self) -> float | None:
        return dict(self.params).get("age_limit") if self.distribution == "fixed" else None

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.distribution == "fixed":
            out = (x >= self.age_limit).astype(float)
        else:
            out = np.where(x <= 0, 0.0, self._frozen.cdf(np.maximum(x, 0.0)))
        return float(out) if out.ndim == 0 else out

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        if self.distribution == "fixed":
            out = (x < self.age_limit).astype(float)
        else:
            out = np.where(x <= 0, 1.0, self._frozen.sf(np.maximum(x, 0.0)))
        return float(out) if out.ndim == 0 else out

    def remaining_life(self, ages, u):
        """Inverse-cdf draw of remaining life given survival to ``ages``."""
        ages = np.asarray(ages, dtype=float)
        if self.distribution == "fixed":
            return np.maximum(self.age_limit - ages, 0.0)
        tail = self._frozen.sf(ages)
        life = self._frozen.isf(tail * (1.0 - np.asarray(u)))
        return np.maximum(life - ages, 0.0)

    def kinks(self):
        return [self.age_limit] if self.distribution == "fixed" else []

    @property
    def population(self) -> float:
        return math.fsum(self.weights) if self.weights else float(len(self.ages))

    def to_json(self):
        out = {"type": "general", "distribution": self.distribution, "params": dict(self.params), "ages": list(self.ages)}
        if self.weights:
            out["weights"] = list(self.weights)
        return out


@dataclass
class RelationModel:
    name: str
    insertion: IntensityFunction = Constant(0.0)
    batch: BatchDistribution = UNIT_BATCH
    deletion: IntensityFunction = Constant(0.0)
    lifespan: Memoryless | GeneralCdf = Memoryless()
    attributes: dict[str, AttributeModel] = field(default_factory=dict)
    histograms: dict[str, dict] = field(default_factory=dict)
    cardinality: float = 0
    insert_values: dict[str, dict] = field(default_factory=dict)
    delete_batch: BatchDistribution = UNIT_BATCH
    joint_histogram: dict[tuple, float] | None = None

    def __post_init__(self):
        if self.cardinality < 0:
            raise ValueError("cardinality must be nonnegative")
        for attr, hist in self.histograms.items():
            if any(c < 0 for c in hist.values()):
                raise ValueError(f"negative histogram count for {attr!r}")
            total = math.fsum(hist.values())
            if abs(total - self.cardinality) > 1e-9 * max(1.0, self.cardinality):
                raise ValueError(f"histogram of {attr!r} totals {total}, cardinality is {self.cardinality}")

    def histogram_vector(self, attr: str) -> np.ndarray:
        model = self.attribute(attr)
        if attr not in self.histograms:
            raise MissingHistogram(f"relation {self.name!r} has no histogram for {attr!r}")
        hist = self.histograms[attr]
        vec = np.zeros(model.size)
        for value, count in hist.items():
            vec[model.index(value)] += count
        return vec

    def attribute(self, attr: str) -> AttributeModel:
        if attr not in self.attributes:
            raise MissingAttributeModel(f"relation {self.name!r} has no model for attribute {attr!r}")
        return self.attributes[attr]

    def insertion_distribution(self, attr: str) -> np.ndarray:
        """Value distribution of newly inserted tuples.

        Falls back to the normalised current histogram, then to the chain's
        stationary law when the relation is empty.
        """
        model = self.attribute(attr)
        if attr in self.insert_values:
            vec = np.zeros(model.size)
            for value, prob in self.insert_values[attr].items():
                vec[model.index(value)] += prob
            return vec / vec.sum()
        if attr in self.histograms and self.cardinality > 0:
            vec = self.histogram_vector(attr)
            return vec / vec.sum()
        if isinstance(model, BinaryLumpAttribute):
            return np.array([1.0, 0.0])
        return as_markov(model).stationary()


@dataclass
class DependencyGraph:
    """Referential-integrity edges ``child -> parent`` with multiplicities.

    The multiplicity of a relation in another's closure defaults to the number of
    weighted paths between them (distinct referenced tuples along distinct paths).
    ``closure_overrides`` pins a different value, for example when two paths must
    reach the same parent tuple.
    """

    edges: dict[tuple[str, str], int] = field(default_factory=dict)
    closure_overrides: dict[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self):
        for (child, parent), w in self.edges.items():
            if int(w) != w or w < 1:
                raise ValueError(f"multiplicity of {child}->{parent} must be a positive integer")
            if child == parent:
                raise CycleDetected(f"self reference on {child!r}")
        self.topological_order()

    @property
    def vertices(self) -> set[str]:
        return {name for edge in self.edges for name in edge}

    def parents(self, name: str) -> list[tuple[str, int]]:
        return sorted((p, int(w)) for (c, p), w in self.edges.items() if c == name)

    def children(self, name: str) -> list[tuple[str, int]]:
        return sorted((c, int(w)) for (c, p), w in self.edges.items() if p == name)

    def topological_order(self, names=None) -> list[str]:
        """Parents before children."""
        names = sorted(set(names or ()) | self.vertices)
        state: dict[str, int] = {}
        order: list[str] = []

        def visit(node, path):
            mark = state.get(node, 0)
            if mark == 1:
                raise CycleDetected("dependency cycle: " + " -> ".join(path + [node]))
            if mark == 2:
                return
            state[node] = 1
            for parent, _ in self.parents(node):
                visit(parent, path + [node])
            state[node] = 2
            order.append(node)

        for node in names:
            visit(node, [])
        return order

    def closure(self, name: str) -> dict[str, float]:
        """Multiplicity of every relation reachable from ``name``, including itself with weight 1."""
        self.topological_order([name])
        weights: dict[str, float] = {name: 1.0}
        frontier = {name: 1.0}
        while frontier:
            nxt: dict[str, float] = {}
            for node, count in frontier.items():
                for parent, w in self.parents(node):
                    nxt[parent] = nxt.get(parent, 0.0) + count * w
            for node, count in nxt.items():
                weights[node] = weights.get(node, 0.0) + count
            frontier = nxt
        for (child, parent), w in self.closure_overrides.items():
            if child == name:
                if parent not in weights:
                    raise MissingRelation(f"{parent!r} is not reachable from {name!r}")
                weights[parent] = float(w)
        return weights

    def to_json(self):
        out = {"edges": [{"from": c, "to": p, "multiplicity": w} for (c, p), w in sorted(self.edges.items())]}
        if self.closure_overrides:
            out["closure_overrides"] = [{"from": c, "to": p, "multiplicity": w} for (c, p), w in sorted(self.closure_overrides.items())]
        return out


@dataclass
class EvolutionModel:
    relations: dict[str, RelationModel]
    graph: DependencyGraph = field(default_factory=DependencyGraph)

    def __post_init__(self):
        missing = self.graph.vertices - set(self.relations)
        if missing:
            raise MissingRelation(f"graph mentions unknown relations {sorted(missing)}")

    def relation(self, name: str) -> RelationModel:
        if name not in self.relations:
            raise MissingRelation(f"unknown relation {name!r}")
        return self.relations[name]

    def with_relation(self, rel: RelationModel) -> "EvolutionModel":
        relations = dict(self.relations)
        relations[rel.name] = rel
        return EvolutionModel(relations, self.graph)


def _models(models) -> dict[str, RelationModel]:
    return models.relations if isinstance(models, EvolutionModel) else models


# deletions and survival

def effective_deletion_intensity(graph: DependencyGraph, models, name: str) -> IntensityFunction:
    rels = _models(models)
    if name not in rels:
        raise MissingRelation(f"unknown relation {name!r}")
    terms = []
    for rel_name, weight in sorted(graph.closure(name).items()):
        if rel_name not in rels:
            raise MissingRelation(f"relation {rel_name!r} reachable from {name!r} has no model")
        terms.append(rels[rel_name].deletion.scale(weight))
    return sum_intensities(terms)


def _effective(model: EvolutionModel, name: str) -> IntensityFunction:
    return effective_deletion_intensity(model.graph, model.relations, name)


def _single_relation(model: EvolutionModel, name: str) -> bool:
    return set(model.graph.closure(name)) == {name}


def survival_prob(model: EvolutionModel, name: str, s: float, f: float, w_samples=None, general: bool = False) -> float:
    """Probability that a tuple present at ``s`` is still present at ``f``.

    With ``w_samples`` (a list of ``{relation: multiplicity}`` maps drawn over
    tuples) the survival is averaged over the sampled multiplicity vectors.
    """
    _check_window(s, f)
    rel = model.relation(name)
    if general or w_samples is not None:
        if not w_samples:
            raise MissingMultiplicityData("the general survival path needs a sample of multiplicity vectors")
        totals = []
        for sample in w_samples:
            weights = dict(sample)
            weights.setdefault(name, 1.0)
            totals.append(math.fsum(w * model.relation(r).deletion.integrate(s, f) for r, w in weights.items()))
        return float(np.mean(np.exp(-np.asarray(totals))))
    if isinstance(rel.lifespan, GeneralCdf):
        _require_single(model, name)
        life = rel.lifespan
        if not life.ages:
            return 1.0
        ratio = _age_survival(life, s, f)
        weights = np.asarray(life.weights) if life.weights else np.ones(len(life.ages))
        return float(ratio @ weights / weights.sum())
    return math.exp(-_effective(model, name).integrate(s, f))


def _age_survival(life: GeneralCdf, s: float, f: float) -> np.ndarray:
    ages = np.asarray(life.ages)
    now = life.sf(ages)
    later = life.sf(ages + (f - s))
    return np.where(now > 0, later / np.where(now > 0, now, 1.0), 0.0)


def _require_single(model: EvolutionModel, name: str):
    if not _single_relation(model, name):
        raise UnsupportedModel(f"general lifetime distributions are supported only without references ({name!r})")


def survival_curve(model: EvolutionModel, name: str, f: float):
    """Vectorised ``t -> p(t, f)`` for memoryless lifespans."""
    mu = _effective(model, name)
    return lambda t: np.exp(-mu.integrate(t, f))


def effective_insertions(model: EvolutionModel, name: str, s: float, f: float) -> float:
    """Expected number of insertion events in ``(s, f]`` whose tuples survive to ``f``."""
    _check_window(s, f)
    rel = model.relation(name)
    lam = rel.insertion
    if f == s or lam.is_zero:
        return 0.0
    if isinstance(rel.lifespan, GeneralCdf):
        _require_single(model, name)
        return _general_insertions(rel.lifespan, lam, s, f)
    mu = _effective(model, name)
    alpha = proportional_factor(mu, lam)
    if alpha is not None:
        big = lam.integrate(s, f)
        return big if alpha == 0 else -math.expm1(-alpha * big) / alpha
    knots = np.union1d(lam.knots(s, f), mu.knots(s, f))
    return quadrature.integrate(lambda t: lam.eval(t) * np.exp(-mu.integrate(t, f)), s, f, knots, mu.upper_bound)


def _general_insertions(life: GeneralCdf, lam: IntensityFunction, s: float, f: float) -> float:
    knots = set(lam.knots(s, f).tolist()) | {f - k for k in life.kinks() if s < f - k < f}
    points = sorted(knots)
    total = 0.0
    edges = [s] + points + [f]
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = sp_integrate.quad(lambda t: lam.eval(t) * life.sf(f - t), a, b, epsabs=1e-13, epsrel=1e-12, limit=200)
        total += val
    return total


def surviving_insertions_mean(model: EvolutionModel, name: str, s: float, f: float) -> float:
    """Expected number of tuples inserted in ``(s, f]`` that are still present at ``f``."""
    return model.relation(name).batch.mean * effective_insertions(model, name, s, f)


def expected_cardinality(model: EvolutionModel, name: str, s: float, f: float) -> float:
    _check_window(s, f)
    rel = model.relation(name)
    if isinstance(rel.lifespan, GeneralCdf):
        _require_single(model, name)
        life = rel.lifespan
        weights = np.asarray(life.weights) if life.weights else np.ones(len(life.ages))
        scale = rel.cardinality / life.population if life.population else 0.0
        survivors = float(_age_survival(life, s, f) @ weights) * scale if life.ages else 0.0
        return survivors + surviving_insertions_mean(model, name, s, f)
    return survival_prob(model, name, s, f) * rel.cardinality + surviving_insertions_mean(model, name, s, f)


def compound_deletion_mean(model: EvolutionModel, name: str, s: float, f: float) -> float:
    """Mean number of tuples removed when deletions arrive in batches at the relation's rate."""
    _check_window(s, f)
    rel = model.relation(name)
    return rel.delete_batch.mean * rel.deletion.integrate(s, f)


# attribute histograms

def _stiffness(model: EvolutionModel, name: str, attr_models=()) -> float:
    mu = _effective(model, name)
    rate = mu.upper_bound
    for am in attr_models:
        if not isinstance(am, RandomWalkAttribute):
            rate += float(np.max(am.change_rates, initial=0.0)) * am.gamma.upper_bound
    return rate


def expected_histogram(model: EvolutionModel, name: str, attr: str, s: float, f: float) -> dict:
    """Expected count of each value of ``attr`` at ``f``."""
    _check_window(s, f)
    rel = model.relation(name)
    am = rel.attribute(attr)
    if isinstance(am, RandomWalkAttribute):
        raise UnsupportedModel("histograms need a finite attribute domain")
    survivors = np.zeros(am.size)
    if rel.cardinality > 0:
        survivors = survival_prob(model, name, s, f) * (rel.histogram_vector(attr) @ am.transition_matrix(s, f))
    inserted = np.zeros(am.size)
    lam = rel.insertion
    if f > s and not lam.is_zero:
        if isinstance(rel.lifespan, GeneralCdf):
            raise UnsupportedModel("histogram forecasts assume memoryless lifetimes")
        omega = rel.insertion_distribution(attr)
        mu = _effective(model, name)
        gamma = am.gamma
        knots = np.union1d(np.union1d(lam.knots(s, f), mu.knots(s, f)), gamma.knots(s, f))

        def integrand(t):
            weight = lam.eval(t) * np.exp(-mu.integrate(t, f))
            mats = am.matrix_for(gamma.integrate(t, f))
            return weight[:, None] * np.einsum("u,nuv->nv", omega, mats)

        inserted = rel.batch.mean * quadrature.integrate(integrand, s, f, knots, _stiffness(model, name, [am]))
    return {value: float(x) for value, x in zip(am.states, survivors + inserted)}


def expected_state(model: EvolutionModel, name: str, s: float, f: float) -> RelationModel:
    """Copy of the relation whose cardinality and histograms are the expectations at ``f``."""
    rel = model.relation(name)
    hists = {}
    for attr, am in rel.attributes.items():
        if attr in rel.histograms and not isinstance(am, RandomWalkAttribute):
            hists[attr] = expected_histogram(model, name, attr, s, f)
    card = expected_cardinality(model, name, s, f)
    for attr, hist in hists.items():
        total = math.fsum(hist.values())
        if total > 0:
            hists[attr] = {k: v * card / total for k, v in hist.items()}
    lifespan = rel.lifespan
    return replace(rel, cardinality=card, histograms=hists, joint_histogram=None, lifespan=lifespan)


# first alteration and unchanged survivors

@dataclass
class AlterationState:
    """Snapshot at ``s``: distinct tuples of each relation whose deletion would delete
    some tuple of the target, and the histogram-weighted change rate of each attribute."""

    ancestor_counts: dict[str, float]
    exit_mass: dict[str, float]


def alteration_state(model: EvolutionModel, name: str) -> AlterationState:
    """Default snapshot assuming no two target tuples share a referenced tuple."""
    rel = model.relation(name)
    counts = {r: w * rel.cardinality for r, w in model.graph.closure(name).items()}
    mass = {}
    for attr, am in rel.attributes.items():
        if isinstance(am, RandomWalkAttribute):
            mass[attr] = float(am.change_rates[0]) * rel.cardinality
        elif rel.cardinality == 0:
            mass[attr] = 0.0
        else:
            mass[attr] = float(rel.histogram_vector(attr) @ am.change_rates)
    return AlterationState(counts, mass)


def first_alteration(model: EvolutionModel, name: str, state: AlterationState | None, s: float, f: float) -> float:
    """Probability that the relation changes at least once in ``(s, f]``."""
    _check_window(s, f)
    if state is None:
        raise MissingState("first-alteration needs ancestor counts and exit masses at s")
    rel = model.relation(name)
    if isinstance(rel.lifespan, GeneralCdf):
        raise UnsupportedModel("first alteration assumes memoryless lifetimes")
    z = rel.insertion.integrate(s, f)
    for other in model.graph.closure(name):
        mu = model.relation(other).deletion
        if mu.is_zero:
            continue
        if other not in state.ancestor_counts:
            raise MissingState(f"no ancestor count for {other!r}")
        z += state.ancestor_counts[other] * mu.integrate(s, f)
    for attr, am in rel.attributes.items():
        if attr not in state.exit_mass:
            raise MissingState(f"no exit mass for attribute {attr!r}")
        z += state.exit_mass[attr] * am.gamma.integrate(s, f)
    return -math.expm1(-z)


def _unchanged_probs(am: AttributeModel, s: float, f: float) -> np.ndarray:
    if isinstance(am, RandomWalkAttribute):
        moves = am.change_rates[0] > 0
        return np.array([math.exp(-am.gamma.integrate(s, f)) if moves else 1.0])
    return np.diag(am.transition_matrix(s, f))


def surviving_unmodified_mean(model: EvolutionModel, name: str, s: float, f: float) -> tuple[float, float]:
    """Expected survivors from ``s`` with unchanged values at ``f``, and with changed values.

    Without a joint histogram the attributes are treated as independent.
    """
    _check_window(s, f)
    rel = model.relation(name)
    p = survival_prob(model, name, s, f)
    survivors = p * rel.cardinality
    if rel.cardinality == 0 or not rel.attributes:
        return survivors, 0.0
    attrs = sorted(rel.attributes)
    diag = {a: _unchanged_probs(rel.attributes[a], s, f) for a in attrs}
    if rel.joint_histogram:
        kept = 0.0
        for values, count in rel.joint_histogram.items():
            term = count
            for a, v in zip(attrs, values):
                am = rel.attributes[a]
                term *= diag[a][0] if isinstance(am, RandomWalkAttribute) else diag[a][am.index(v)]
            kept += term
        unchanged = p * kept
    else:
        frac = 1.0
        for a in attrs:
            am = rel.attributes[a]
            if isinstance(am, RandomWalkAttribute):
                frac *= float(diag[a][0])
            else:
                if a not in rel.histograms:
                    raise MissingHistogram(f"relation {name!r} has no histogram for {a!r}")
                frac *= float(rel.histogram_vector(a) @ diag[a]) / rel.cardinality
        unchanged = survivors * frac
    return unchanged, max(survivors - unchanged, 0.0)


def _check_window(s: float, f: float):
    if f < s:
        raise ValueError(f"prediction window must satisfy s <= f (got s={s}, f={f})")
