import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from contentevo import simulator
from contentevo.cost import (
    CostMatrix,
    CostSpec,
    ImportanceWeight,
    SquaredError,
    UnitCost,
    cost_components,
    deletion_obsolescence,
    insertion_obsolescence,
    modification_obsolescence,
    obsolescence,
    total_cost,
    transcription_cost,
)
from contentevo.errors import MissingHistogram, MissingModel, UnorderedSchedule
from contentevo.evolution import EvolutionModel, RelationModel
from contentevo.intensity import Constant
from contentevo.markov import BinaryLumpAttribute, MarkovAttribute, RandomWalkAttribute

LN2 = math.log(2)
ONE = ImportanceWeight.constant(1.0)


def model(lam=0.0, mu=0.0, n0=0, **kw):
    return EvolutionModel({"R": RelationModel("R", Constant(lam), deletion=Constant(mu), cardinality=n0, **kw)})


def test_insertion_obsolescence_homogeneous():
    m = model(lam=4.57)
    assert insertion_obsolescence(m, "R", ONE, 0.0, 1.0) == pytest.approx(2.285, rel=1e-12)
    assert insertion_obsolescence(m, "R", ONE, 2.0, 2.0) == 0.0
    lam, span = 3.0, 2.5
    assert insertion_obsolescence(model(lam), "R", ONE, 1.0, 1.0 + span) == pytest.approx(0.5 * lam * span**2)


def test_insertion_obsolescence_with_work_hours(weekly_rpc):
    weight = ImportanceWeight.work_hours(3.0, 0.5)
    m = EvolutionModel({"R": RelationModel("R", weekly_rpc)})
    s, f = 0.1, 2.9

    def a(t):
        phase = t % 7.0
        day, hour = int(phase), (phase % 1.0) * 24.0
        return 3.0 if day < 5 and 9.0 <= hour < 18.0 else 0.5

    def g(t):
        knots = sorted({t, f} | {d + h / 24.0 for d in range(4) for h in (9.0, 18.0) if t < d + h / 24.0 < f})
        return sum(oracles.adaptive_simpson(a, lo, hi) for lo, hi in zip(knots, knots[1:]))

    edges = sorted({s, f} | {lo for lo, _, _ in oracles.weekly_blocks() if s < lo < f}
                   | {d + h / 24.0 for d in range(4) for h in (9.0, 18.0) if s < d + h / 24.0 < f})
    expected = sum(oracles.adaptive_simpson(lambda t: oracles.weekly_step_rate(t) * g(t), lo, hi, tol=1e-9)
                   for lo, hi in zip(edges, edges[1:]))
    assert insertion_obsolescence(m, "R", weight, s, f) == pytest.approx(expected, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_insertion_obsolescence_nondecreasing(f1, f2):
    lo, hi = sorted((f1, f2))
    m = model(lam=2.0, mu=0.3, n0=5)
    assert insertion_obsolescence(m, "R", ONE, 0.0, lo) <= insertion_obsolescence(m, "R", ONE, 0.0, hi) + 1e-12


def test_weight_scaling_is_linear():
    m = model(lam=2.0, mu=0.7, n0=20)
    w = ImportanceWeight.work_hours(2.0, 1.0)
    for fn in (insertion_obsolescence, deletion_obsolescence):
        base = fn(m, "R", w, 0.2, 3.1)
        assert fn(m, "R", w.scaled(2.0), 0.2, 3.1) == pytest.approx(2.0 * base, rel=1e-12)


def test_deletion_obsolescence_cases():
    m = model(mu=1.0, n0=100)
    assert deletion_obsolescence(m, "R", ImportanceWeight.constant(0.0), 0.0, 1.0) == 0.0
    assert deletion_obsolescence(m, "R", ImportanceWeight.flat(1.0), 0.0, LN2) == pytest.approx(50.0)
    assert deletion_obsolescence(m, "R", ImportanceWeight.flat(1.0), 0.0, LN2, exact=False) == pytest.approx(50.0)
    assert deletion_obsolescence(m, "R", ONE, 1.0, 1.0) == 0.0


def test_deletion_obsolescence_exact_density():
    mu, n0, span = 0.8, 30, 2.0
    m = model(mu=mu, n0=n0)
    expected = n0 * oracles.adaptive_simpson(lambda t: mu * math.exp(-mu * t) * (span - t), 0.0, span)
    assert deletion_obsolescence(m, "R", ONE, 0.0, span) == pytest.approx(expected, rel=1e-10)


def test_modification_obsolescence_cases():
    crawler = BinaryLumpAttribute(1.0, 0.0, Constant(1.0))
    m = model(n0=10, attributes={"A": crawler}, histograms={"A": {0: 10, 1: 0}})
    assert modification_obsolescence(m, "R", {"A": UnitCost()}, 0.0, 0.0) == 0.0
    assert modification_obsolescence(m, "R", {"A": UnitCost()}, 0.0, LN2) == pytest.approx(5.0)
    assert modification_obsolescence(m, "R", {"A": CostMatrix(((0, 1), (1, 0)))}, 0.0, LN2) == pytest.approx(5.0)
    walk = RandomWalkAttribute(0.0, 4.0, Constant(1.0))
    w = model(n0=7, attributes={"B": walk})
    assert modification_obsolescence(w, "R", {"B": SquaredError(1.0)}, 0.0, 2.0) == pytest.approx(8.0 * 7)
    with pytest.raises(MissingModel):
        modification_obsolescence(m, "R", {"Z": UnitCost()}, 0.0, 1.0)
    nohist = model(n0=3, attributes={"A": crawler})
    with pytest.raises(MissingHistogram):
        modification_obsolescence(nohist, "R", {"A": UnitCost()}, 0.0, 1.0)


def test_squared_error_on_a_finite_chain():
    jump = ((0.0, 0.5, 0.5), (0.5, 0.0, 0.5), (0.5, 0.5, 0.0))
    chain = MarkovAttribute((1.0, 2.0, 4.0), (0.6, 1.0, 0.3), jump, Constant(1.0))
    m = model(mu=0.2, n0=6, attributes={"A": chain}, histograms={"A": {1.0: 1, 2.0: 2, 4.0: 3}})
    p = oracles.expm(0.9 * oracles.generator((0.6, 1.0, 0.3), jump))
    vals = np.array([1.0, 2.0, 4.0])
    per_u = [sum(p[i, j] * (vals[j] ** 2 - 2 * vals[i] * vals[j]) for j in range(3)) + vals[i] ** 2 for i in range(3)]
    expected = math.exp(-0.2 * 0.9) * (1 * per_u[0] + 2 * per_u[1] + 3 * per_u[2]) * 2.5
    assert modification_obsolescence(m, "R", {"A": SquaredError(2.5)}, 0.0, 0.9) == pytest.approx(expected, rel=1e-10)


def test_diagonal_must_be_free():
    with pytest.raises(ValueError):
        CostMatrix(((1, 1), (1, 0)))


def test_transcription_cost():
    assert transcription_cost(4.0, 2.0) == 4.0
    assert transcription_cost(0.0, 1.0, 3, 2, 5) == 10.0


def test_expected_transcription_matches_simulation():
    spec = CostSpec(alpha=1.0, setup_c=2.0, beta=0.5)
    m = model(lam=3.0, mu=0.5, n0=8, attributes={"A": BinaryLumpAttribute(0.7, 0.2)}, histograms={"A": {0: 6, 1: 2}},
              insert_values={"A": {0: 1.0}})
    predicted = cost_components([1.5], spec, m, "R", 1.5)["transcription"]
    result = simulator.run(simulator.SimConfig(m, 0.0, 1.5, replications=100_000, seed=12))
    assert simulator.summarize(result, "transcription", name="R", spec=spec, s=0.0, f=1.5).within(predicted)


def test_total_cost_edge_cases():
    m = model(lam=2.0, mu=0.3, n0=10)
    spec = CostSpec(alpha=0.0)
    assert total_cost([], spec, m, "R", 4.0) == pytest.approx(obsolescence(m, "R", spec, 0.0, 4.0).total)
    pure = CostSpec(alpha=1.0, setup_c=1.0, beta=0.1)
    assert total_cost([], pure, m, "R", 4.0) == 0.0
    assert total_cost([1.0, 2.0], pure, m, "R", 4.0) > total_cost([], pure, m, "R", 4.0)
    with pytest.raises(UnorderedSchedule):
        total_cost([2.0, 1.0], spec, m, "R", 4.0)
    with pytest.raises(UnorderedSchedule):
        total_cost([5.0], spec, m, "R", 4.0)


def test_two_refreshes_by_hand():
    # insert-only homogeneous relation, unit importance: each gap d costs lam*d^2/2 of obsolescence
    lam, c, beta, alpha = 2.0, 3.0, 0.5, 0.25
    m = model(lam=lam)
    spec = CostSpec(alpha=alpha, setup_c=c, beta=beta)
    gaps = [1.0, 1.5, 0.5]
    obsolete = sum(lam * d * d / 2 for d in gaps)
    transcription = sum(c + beta * lam * d for d in gaps[:2])
    got = cost_components([1.0, 2.5], spec, m, "R", 3.0)
    assert got["obsolescence"] == pytest.approx(obsolete)
    assert got["transcription"] == pytest.approx(transcription)
    assert got["total"] == pytest.approx(alpha * transcription + (1 - alpha) * obsolete)


def test_obsolescence_components_nonnegative_and_vanish():
    m = model(lam=1.0, mu=0.5, n0=4, attributes={"A": BinaryLumpAttribute(1.0)}, histograms={"A": {0: 4}})
    spec = CostSpec(g_del=ONE, metrics={"A": UnitCost()})
    zero = obsolescence(m, "R", spec, 1.0, 1.0)
    assert zero.total == 0.0
    parts = obsolescence(m, "R", spec, 1.0, 2.0)
    assert min(parts.insertion, parts.deletion, parts.modification) > 0
