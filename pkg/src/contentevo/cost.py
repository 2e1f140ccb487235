"""Obsolescence and transcription costs of a replica refreshed at given times."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import quadrature
from .errors import MissingHistogram, MissingModel, UnorderedSchedule, UnsupportedModel
from .evolution import (
    EvolutionModel,
    GeneralCdf,
    _effective,
    expected_state,
    survival_prob,
    surviving_insertions_mean,
    surviving_unmodified_mean,
)
from .intensity import Constant, IntensityFunction, weekly
from .markov import RandomWalkAttribute, random_walk_moments
from .timeutil import DAY_NAMES, WORKDAYS, phase_of


@dataclass(frozen=True)
class ImportanceWeight:
    """Piecewise-constant importance ``a(tau)``.

    An item that went stale at ``t`` and was synced at ``f`` costs
    ``g = terminal + int_t^f a``.  ``terminal`` is a flat charge per stale item.
    """

    rate: IntensityFunction = Constant(1.0)
    description: tuple = ()
    terminal: float = 0.0

    @classmethod
    def constant(cls, level: float = 1.0) -> "ImportanceWeight":
        return cls(Constant(level), (("constant", float(level)),))

    @classmethod
    def work_hours(cls, a1: float, a2: float, blocks: Sequence[tuple] | None = None) -> "ImportanceWeight":
        """``a1`` inside the given ``(dow, start, end)`` blocks, ``a2`` elsewhere.

        The default blocks are 09:00-18:00 Monday to Friday.
        """
        if a1 < 0 or a2 < 0:
            raise ValueError("importance weights must be nonnegative")
        if blocks is None:
            blocks = [(DAY_NAMES[d], "09:00", "18:00") for d in WORKDAYS]
        spans = []
        for dow, start, end in blocks:
            day = dow if isinstance(dow, str) else DAY_NAMES[int(dow)]
            lo, hi = phase_of(f"{day} {start}"), phase_of(f"{day} {end}")
            if hi <= lo:
                raise ValueError(f"empty work-hours block {dow} {start}-{end}")
            spans.append((lo, hi))
        spans.sort()
        pieces, cursor = [], 0.0
        for lo, hi in spans:
            if lo < cursor - 1e-12:
                raise ValueError("work-hours blocks overlap")
            if lo > cursor:
                pieces.append((cursor, lo, a2))
            pieces.append((lo, hi, a1))
            cursor = hi
        if cursor < 7.0:
            pieces.append((cursor, 7.0, a2))
        desc = (("a1", float(a1)), ("a2", float(a2)), ("blocks", tuple((str(d), str(a), str(b)) for d, a, b in blocks)))
        return cls(weekly(pieces), desc)

    @classmethod
    def flat(cls, charge: float = 1.0) -> "ImportanceWeight":
        """Every stale item costs ``charge`` regardless of how long it was stale."""
        return cls(Constant(0.0), (("terminal", float(charge)),), float(charge))

    def scaled(self, k: float) -> "ImportanceWeight":
        return ImportanceWeight(self.rate.scale(k), self.description + (("scale", float(k)),), self.terminal * k)

    def g(self, s: float, f: float, t):
        """Importance-weighted staleness of an item that changed at ``t`` and was synced at ``f``."""
        t = np.clip(np.asarray(t, dtype=float), s, f)
        out = self.rate.integrate(t, f) + self.terminal
        return float(out) if np.ndim(out) == 0 else out

    @property
    def is_zero(self) -> bool:
        return self.rate.is_zero and self.terminal == 0.0


@dataclass(frozen=True)
class UnitCost:
    """Cost 1 for any change of value."""


@dataclass(frozen=True)
class CostMatrix:
    """Explicit ``c[u][v]`` aligned with the attribute's states; the diagonal must be zero."""

    matrix: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        mat = tuple(tuple(float(x) for x in row) for row in self.matrix)
        if any(len(row) != len(mat) for row in mat):
            raise ValueError("cost matrix must be square")
        if any(mat[i][i] != 0.0 for i in range(len(mat))):
            raise ValueError("an unchanged value must cost zero")
        if any(x < 0 for row in mat for x in row):
            raise ValueError("costs must be nonnegative")
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True)
class SquaredError:
    """``k * (new - old)**2``; ``k="inverse_variance"`` uses one over the variance of the histogram at s."""

    k: float | str = 1.0

    def __post_init__(self):
        if isinstance(self.k, str):
            if self.k != "inverse_variance":
                raise ValueError(f"unknown squared-error scaling {self.k!r}")
        elif self.k < 0:
            raise ValueError("squared-error scaling must be nonnegative")


@dataclass(frozen=True)
class CostSpec:
    alpha: float = 0.5
    setup_c: float = 0.0
    beta: float = 0.0
    g_ins: ImportanceWeight = ImportanceWeight.constant(1.0)
    g_del: ImportanceWeight = ImportanceWeight.constant(0.0)
    metrics: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.setup_c < 0 or self.beta < 0:
            raise ValueError("transcription costs must be nonnegative")


@dataclass(frozen=True)
class ObsolescenceBreakdown:
    insertion: float = 0.0
    deletion: float = 0.0
    modification: float = 0.0

    @property
    def total(self) -> float:
        return self.insertion + self.deletion + self.modification


def _knots(s, f, *fns):
    pts = [fn.knots(s, f) for fn in fns]
    return np.unique(np.concatenate(pts)) if pts else np.empty(0)


def insertion_obsolescence(model: EvolutionModel, name: str, g_ins: ImportanceWeight, s: float, f: float,
                           survival: bool = True) -> float:
    """Expected ``sum g(s, f, b(r))`` over tuples inserted in ``(s, f]`` and still present at ``f``.

    ``survival=False`` drops the survival factor, which is exact only when the
    relation has no deletions.
    """
    _window(s, f)
    rel = model.relation(name)
    lam = rel.insertion
    if f == s or lam.is_zero or g_ins.is_zero:
        return 0.0
    a = g_ins.rate
    g = lambda t: a.integrate(t, f) + g_ins.terminal
    if not survival:
        weight = lambda t: lam.eval(t) * g(t)
        return rel.batch.mean * quadrature.integrate(weight, s, f, _knots(s, f, lam, a))
    if isinstance(rel.lifespan, GeneralCdf):
        life = rel.lifespan
        weight = lambda t: lam.eval(t) * g(t) * life.sf(f - t)
        knots = np.union1d(_knots(s, f, lam, a), [f - k for k in life.kinks() if s < f - k < f])
        return rel.batch.mean * quadrature.integrate(weight, s, f, knots, min_parts=8)
    mu = _effective(model, name)
    weight = lambda t: lam.eval(t) * g(t) * np.exp(-mu.integrate(t, f))
    return rel.batch.mean * quadrature.integrate(weight, s, f, _knots(s, f, lam, a, mu), mu.upper_bound)


def deletion_obsolescence(model: EvolutionModel, name: str, g_del: ImportanceWeight, s: float, f: float,
                          exact: bool = True) -> float:
    """Expected ``sum g(s, f, d(r))`` over tuples present at ``s`` and deleted by ``f``.

    The exact form integrates against the deletion-time density.  ``exact=False``
    spreads the deletion probability in proportion to the hazard instead, which
    agrees with the exact form when ``g`` is constant.
    """
    _window(s, f)
    rel = model.relation(name)
    if f == s or rel.cardinality == 0 or g_del.is_zero:
        return 0.0
    if isinstance(rel.lifespan, GeneralCdf):
        raise UnsupportedModel("deletion obsolescence assumes memoryless lifetimes")
    mu = _effective(model, name)
    if mu.is_zero:
        return 0.0
    a = g_del.rate
    g = lambda t: a.integrate(t, f) + g_del.terminal
    knots = _knots(s, f, mu, a)
    if exact:
        weight = lambda t: mu.eval(t) * np.exp(-mu.integrate(s, t)) * g(t)
        return rel.cardinality * quadrature.integrate(weight, s, f, knots, mu.upper_bound)
    big = mu.integrate(s, f)
    factor = -math.expm1(-big) / big
    return rel.cardinality * factor * quadrature.integrate(lambda t: mu.eval(t) * g(t), s, f, knots)


def _metric_matrix(metric, am, rel, attr) -> np.ndarray:
    states = am.states
    if isinstance(metric, UnitCost):
        return 1.0 - np.eye(len(states))
    if isinstance(metric, CostMatrix):
        mat = np.array(metric.matrix)
        if mat.shape != (len(states), len(states)):
            raise ValueError(f"cost matrix for {attr!r} does not match its {len(states)} states")
        return mat
    if isinstance(metric, SquaredError):
        values = np.array(states, dtype=float)
        return _squared_scale(metric, rel, attr, values) * (values[None, :] - values[:, None]) ** 2
    raise TypeError(f"unknown metric {metric!r}")


def _squared_scale(metric: SquaredError, rel, attr, values=None) -> float:
    if metric.k != "inverse_variance":
        return float(metric.k)
    if values is None or rel.cardinality == 0:
        raise ValueError(f"inverse-variance scaling needs a numeric histogram for {attr!r}")
    counts = rel.histogram_vector(attr)
    mean = counts @ values / counts.sum()
    var = counts @ (values - mean) ** 2 / counts.sum()
    return 1.0 / var if var > 0 else 0.0


def modification_obsolescence(model: EvolutionModel, name: str, metrics: Mapping[str, object], s: float, f: float,
                              printed_variant: bool = False) -> float:
    """Expected change cost summed over tuples present at both ``s`` and ``f``."""
    _window(s, f)
    rel = model.relation(name)
    if f == s or rel.cardinality == 0 or not metrics:
        return 0.0
    p = survival_prob(model, name, s, f)
    total = 0.0
    for attr, metric in metrics.items():
        if attr not in rel.attributes:
            raise MissingModel(f"no modification model for attribute {attr!r}")
        am = rel.attributes[attr]
        if isinstance(am, RandomWalkAttribute):
            if not isinstance(metric, SquaredError):
                raise UnsupportedModel("random-walk attributes need the squared-error metric")
            _, second = random_walk_moments(am, 0.0, s, f, printed_variant=printed_variant)
            total += p * rel.cardinality * _squared_scale(metric, rel, attr) * second
            continue
        if attr not in rel.histograms:
            raise MissingHistogram(f"no histogram for attribute {attr!r}")
        per_value = (am.transition_matrix(s, f) * _metric_matrix(metric, am, rel, attr)).sum(axis=1)
        total += p * float(rel.histogram_vector(attr) @ per_value)
    return total


def obsolescence(model: EvolutionModel, name: str, spec: CostSpec, s: float, f: float) -> ObsolescenceBreakdown:
    return ObsolescenceBreakdown(
        insertion_obsolescence(model, name, spec.g_ins, s, f),
        deletion_obsolescence(model, name, spec.g_del, s, f),
        modification_obsolescence(model, name, spec.metrics, s, f),
    )


def transcription_cost(c: float, beta: float, inserted_surviving: float = 0.0, modified_surviving: float = 0.0,
                       deleted: float = 0.0) -> float:
    if min(inserted_surviving, modified_surviving, deleted) < 0:
        raise ValueError("counts must be nonnegative")
    return c + beta * (inserted_surviving + modified_surviving + deleted)


def expected_transcription_cost(model: EvolutionModel, name: str, spec: CostSpec, s: float, f: float) -> float:
    rel = model.relation(name)
    inserted = surviving_insertions_mean(model, name, s, f)
    _, changed = surviving_unmodified_mean(model, name, s, f)
    deleted = rel.cardinality * (1.0 - survival_prob(model, name, s, f))
    return transcription_cost(spec.setup_c, spec.beta, inserted, changed, deleted)


def cost_components(schedule: Sequence[float], spec: CostSpec, model: EvolutionModel, name: str, t: float,
                    t0: float = 0.0) -> dict:
    """Expected transcription and obsolescence totals of a refresh schedule over ``[t0, t]``.

    The relation's stored state is taken to hold at ``t0``; the state at each
    refresh is its expectation, which keeps every term exact by linearity.
    """
    times = [float(b) for b in schedule]
    prev = t0
    for b in times:
        if b <= prev or b > t:
            raise UnorderedSchedule(f"refresh times must satisfy {t0} < b1 < b2 < ... <= {t}")
        prev = b
    transcription = 0.0
    obsolete = 0.0
    starts = [t0] + times
    for a, b in zip(starts, times + [t]):
        if b <= a:
            continue
        current = model if a == t0 else model.with_relation(expected_state(model, name, t0, a))
        obsolete += obsolescence(current, name, spec, a, b).total
        if b in times:
            transcription += expected_transcription_cost(current, name, spec, a, b)
    total = spec.alpha * transcription + (1.0 - spec.alpha) * obsolete
    return {"refresh_count": len(times), "transcription": transcription, "obsolescence": obsolete, "total": total}


def total_cost(schedule: Sequence[float], spec: CostSpec, model: EvolutionModel, name: str, t: float,
               t0: float = 0.0) -> float:
    return cost_components(schedule, spec, model, name, t, t0)["total"]


def _window(s, f):
    if f < s:
        raise ValueError(f"cost window must satisfy s <= f (got s={s}, f={f})")
