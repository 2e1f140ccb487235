"""Monte Carlo histories of related relations, used as ground truth for the forecasts.

Replications are simulated in blocks of ``block_size`` with one random stream
per block, so every array operation runs across a whole block at once.  Each
tuple keeps its birth, its death (own lifetime or the first death among the
tuples it references) and, per attribute, its initial value plus the list of
value changes.  Per-event traces are assembled only on request.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .cost import CostMatrix, CostSpec, SquaredError, UnitCost
from .errors import EmptyTraces, UnsupportedModel
from .evolution import EvolutionModel, GeneralCdf, RelationModel
from .markov import AttributeModel, BinaryLumpAttribute, MarkovAttribute, OverwriteAttribute, RandomWalkAttribute
from .stochastic import RngStream
from .timeutil import DEFAULT_EPOCH, format_timestamp

MAX_PARENT_TRIES = 200
TRACE_HEADER = ["replication", "timestamp", "relation", "op", "tuple_id", "attribute", "old_value", "new_value", "batch_id"]


@dataclass
class SimConfig:
    model: EvolutionModel
    t0: float
    t_end: float
    replications: int = 1
    seed: int = 0
    block_size: int = 1000

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.block_size < 1:
            raise ValueError("block_size must be at least 1")
        if self.t_end < self.t0:
            raise ValueError("horizon must satisfy t0 <= t_end")
        self.model.graph.topological_order(self.model.relations)


@dataclass
class _Table:
    rep: np.ndarray
    birth: np.ndarray
    death: np.ndarray
    batch: np.ndarray
    refs: dict[str, np.ndarray] = field(default_factory=dict)
    start: dict[str, np.ndarray] = field(default_factory=dict)
    changes: dict[str, list[tuple[np.ndarray, np.ndarray, np.ndarray]]] = field(default_factory=dict)
    rejected: np.ndarray | None = None

    def __len__(self):
        return int(self.rep.size)

    def alive(self, t: float) -> np.ndarray:
        return (self.birth <= t) & (self.death > t)

    def value_at(self, attr: str, t: float) -> np.ndarray:
        val = self.start[attr].copy()
        for rows, times, new in self.changes[attr]:
            hit = times <= t
            val[rows[hit]] = new[hit]
        return val


@dataclass
class _Block:
    first: int
    size: int
    tables: dict[str, _Table]


@dataclass
class SimTrace:
    replication: int
    events: list[dict]
    final_state: dict


@dataclass(frozen=True)
class Summary:
    mean: float
    std_error: float
    n: int

    def within(self, value: float, k: float = 3.0) -> bool:
        return abs(value - self.mean) <= k * self.std_error


class SimResult:
    """Simulated histories of every replication, queried per replication."""

    def __init__(self, config: SimConfig, blocks: list[_Block]):
        self.config = config
        self.blocks = blocks

    @property
    def replications(self) -> int:
        return self.config.replications

    def __len__(self):
        return self.replications

    def _per_rep(self, fn) -> np.ndarray:
        return np.concatenate([fn(block) for block in self.blocks])

    def _table(self, block: _Block, name: str) -> _Table:
        if name not in block.tables:
            raise KeyError(f"relation {name!r} was not simulated")
        return block.tables[name]

    def rejected_insertions(self, name: str) -> np.ndarray:
        return self._per_rep(lambda b: self._table(b, name).rejected)

    def cardinality(self, name: str, f: float) -> np.ndarray:
        def per(block):
            tab = self._table(block, name)
            return np.bincount(tab.rep[tab.alive(f)], minlength=block.size).astype(float)
        return self._per_rep(per)

    def histogram(self, name: str, attr: str, f: float) -> np.ndarray:
        """Replication-by-value count matrix at ``f``."""
        am = self.config.model.relation(name).attribute(attr)
        k = am.size

        def per(block):
            tab = self._table(block, name)
            live = tab.alive(f)
            vals = tab.value_at(attr, f)[live].astype(np.int64)
            flat = np.bincount(tab.rep[live] * k + vals, minlength=block.size * k)
            return flat.reshape(block.size, k).astype(float)
        return self._per_rep(per)

    def survival(self, name: str, s: float, f: float) -> np.ndarray:
        """Fraction of tuples present at ``s`` still present at ``f`` (``nan`` when none were present)."""
        def per(block):
            tab = self._table(block, name)
            base = tab.alive(s)
            kept = base & (tab.death > f)
            n0 = np.bincount(tab.rep[base], minlength=block.size).astype(float)
            n1 = np.bincount(tab.rep[kept], minlength=block.size).astype(float)
            with np.errstate(invalid="ignore", divide="ignore"):
                return np.where(n0 > 0, n1 / n0, np.nan)
        return self._per_rep(per)

    def first_alteration(self, name: str, s: float, f: float) -> np.ndarray:
        """1.0 where an insertion, a deletion or a value change hit the relation in ``(s, f]``."""
        def per(block):
            tab = self._table(block, name)
            hit = np.zeros(block.size, dtype=bool)
            born = (tab.birth > s) & (tab.birth <= f)
            hit[tab.rep[born]] = True
            base = tab.alive(s)
            died = base & (tab.death <= f)
            hit[tab.rep[died]] = True
            for attr, rounds in tab.changes.items():
                for rows, times, _ in rounds:
                    sel = rows[(times > s) & (times <= f)]
                    sel = sel[base[sel]]
                    hit[tab.rep[sel]] = True
            return hit.astype(float)
        return self._per_rep(per)

    def ancestor_counts(self, name: str, s: float) -> dict[str, np.ndarray]:
        """Per replication, distinct tuples of each relation referenced (directly or not) by tuples alive at ``s``."""
        graph = self.config.model.graph
        reach = graph.closure(name)
        order = [r for r in reversed(graph.topological_order([name])) if r in reach]
        out: dict[str, list[np.ndarray]] = {}
        for block in self.blocks:
            rows = {name: np.flatnonzero(self._table(block, name).alive(s))}
            for child in order:
                tab = self._table(block, child)
                for parent, _ in graph.parents(child):
                    picked = np.unique(tab.refs[parent][rows[child]].ravel())
                    rows[parent] = np.union1d(rows.get(parent, np.empty(0, dtype=np.int64)), picked)
            for rel, idx in rows.items():
                rep = self._table(block, rel).rep[idx.astype(np.int64)]
                out.setdefault(rel, []).append(np.bincount(rep, minlength=block.size).astype(float))
        return {rel: np.concatenate(parts) for rel, parts in out.items()}

    def _changed(self, tab: _Table, name: str, attrs, s: float, f: float, rows: np.ndarray) -> np.ndarray:
        changed = np.zeros(rows.size, dtype=bool)
        for attr in attrs:
            changed |= tab.value_at(attr, s)[rows] != tab.value_at(attr, f)[rows]
        return changed

    def unmodified(self, name: str, s: float, f: float) -> tuple[np.ndarray, np.ndarray]:
        """Counts of tuples present at ``s`` and ``f`` with all values equal at both times, and with some value different."""
        attrs = sorted(self.config.model.relation(name).attributes)
        same_parts, diff_parts = [], []
        for block in self.blocks:
            tab = self._table(block, name)
            rows = np.flatnonzero(tab.alive(s) & (tab.death > f))
            changed = self._changed(tab, name, attrs, s, f, rows)
            same_parts.append(np.bincount(tab.rep[rows[~changed]], minlength=block.size).astype(float))
            diff_parts.append(np.bincount(tab.rep[rows[changed]], minlength=block.size).astype(float))
        return np.concatenate(same_parts), np.concatenate(diff_parts)

    def obsolescence(self, name: str, spec: CostSpec, s: float, f: float) -> dict[str, np.ndarray]:
        """Realised insertion, deletion and modification obsolescence of a replica synced at ``s`` and ``f``."""
        rel = self.config.model.relation(name)
        parts = {"insertion": [], "deletion": [], "modification": []}
        for block in self.blocks:
            tab = self._table(block, name)
            born = (tab.birth > s) & (tab.birth <= f) & (tab.death > f)
            w = spec.g_ins.g(s, f, tab.birth[born]) if born.any() else np.empty(0)
            parts["insertion"].append(np.bincount(tab.rep[born], weights=w, minlength=block.size))
            base = tab.alive(s)
            gone = base & (tab.death <= f)
            w = spec.g_del.g(s, f, tab.death[gone]) if gone.any() else np.empty(0)
            parts["deletion"].append(np.bincount(tab.rep[gone], weights=w, minlength=block.size))
            rows = np.flatnonzero(base & (tab.death > f))
            cost = np.zeros(rows.size)
            for attr, metric in spec.metrics.items():
                cost += _metric_cost(metric, rel, attr, tab.value_at(attr, s)[rows], tab.value_at(attr, f)[rows])
            parts["modification"].append(np.bincount(tab.rep[rows], weights=cost, minlength=block.size))
        return {k: np.concatenate(v).astype(float) for k, v in parts.items()}

    def transcription(self, name: str, spec: CostSpec, s: float, f: float) -> np.ndarray:
        """Realised cost of syncing at ``f`` after a sync at ``s``."""
        parts = []
        attrs = sorted(self.config.model.relation(name).attributes)
        for block in self.blocks:
            tab = self._table(block, name)
            born = (tab.birth > s) & (tab.birth <= f) & (tab.death > f)
            base = tab.alive(s)
            gone = base & (tab.death <= f)
            rows = np.flatnonzero(base & (tab.death > f))
            changed = rows[self._changed(tab, name, attrs, s, f, rows)]
            count = (np.bincount(tab.rep[born], minlength=block.size) + np.bincount(tab.rep[gone], minlength=block.size)
                     + np.bincount(tab.rep[changed], minlength=block.size))
            parts.append(spec.setup_c + spec.beta * count.astype(float))
        return np.concatenate(parts)

    def trace(self, replication: int) -> SimTrace:
        """Event list and final state of one replication."""
        if not 0 <= replication < self.replications:
            raise IndexError(f"replication {replication} out of range")
        cfg = self.config
        block = next(b for b in self.blocks if b.first <= replication < b.first + b.size)
        local = replication - block.first
        events = []
        final = {}
        for name, tab in sorted(block.tables.items()):
            rel = cfg.model.relation(name)
            rows = np.flatnonzero(tab.rep == local)
            ids = {int(r): i for i, r in enumerate(rows)}
            for r in rows:
                if tab.birth[r] > cfg.t0:
                    events.append(_event(tab.birth[r], name, "insert", ids[int(r)], batch=int(tab.batch[r])))
                if tab.death[r] <= cfg.t_end:
                    events.append(_event(tab.death[r], name, "delete", ids[int(r)]))
            for attr, rounds in tab.changes.items():
                am = rel.attributes[attr]
                current = {int(r): tab.start[attr][r] for r in rows}
                mods = []
                for rnd, (crow, times, new) in enumerate(rounds):
                    mine = tab.rep[crow] == local
                    mods.extend((float(t), rnd, int(r), v) for r, t, v in zip(crow[mine], times[mine], new[mine]))
                for t, _, r, v in sorted(mods):
                    events.append(_event(t, name, "modify", ids[r], attr, _label(am, current[r]), _label(am, v)))
                    current[r] = v
            live = rows[tab.alive(cfg.t_end)[rows]]
            hists = {}
            for attr in tab.start:
                am = rel.attributes[attr]
                if isinstance(am, RandomWalkAttribute):
                    continue
                vals = tab.value_at(attr, cfg.t_end)[live].astype(np.int64)
                hists[attr] = {str(am.states[i]): int(c) for i, c in enumerate(np.bincount(vals, minlength=am.size))}
            final[name] = {"cardinality": int(live.size), "histograms": hists}
        order = {"insert": 0, "modify": 1, "delete": 2}
        events.sort(key=lambda e: (e["time"], e["relation"], order[e["op"]], e["tuple_id"]))
        return SimTrace(replication, events, final)

    def traces(self, replications=None) -> list[SimTrace]:
        reps = range(self.replications) if replications is None else replications
        return [self.trace(i) for i in reps]


def _event(t, relation, op, tuple_id, attribute=None, old=None, new=None, batch=None) -> dict:
    return {"time": float(t), "relation": relation, "op": op, "tuple_id": int(tuple_id), "attribute": attribute,
            "old_value": old, "new_value": new, "batch_id": batch}


def _label(am: AttributeModel, value):
    if isinstance(am, RandomWalkAttribute):
        return float(value)
    return am.states[int(value)]


def _metric_cost(metric, rel: RelationModel, attr: str, old: np.ndarray, new: np.ndarray) -> np.ndarray:
    am = rel.attribute(attr)
    if isinstance(am, RandomWalkAttribute):
        if not isinstance(metric, SquaredError):
            raise UnsupportedModel("random-walk attributes need the squared-error metric")
        if metric.k == "inverse_variance":
            raise UnsupportedModel("inverse-variance scaling needs a finite attribute domain")
        return float(metric.k) * (new - old) ** 2
    old = old.astype(np.int64)
    new = new.astype(np.int64)
    if isinstance(metric, UnitCost):
        return (old != new).astype(float)
    if isinstance(metric, CostMatrix):
        return np.asarray(metric.matrix)[old, new]
    if isinstance(metric, SquaredError):
        from .cost import _squared_scale

        values = np.asarray(am.states, dtype=float)
        return _squared_scale(metric, rel, attr, values) * (values[new] - values[old]) ** 2
    raise TypeError(f"unknown metric {metric!r}")


# simulation

def run(cfg: SimConfig) -> SimResult:
    """Simulate every replication; identical seeds give identical results."""
    blocks = []
    for index, first in enumerate(range(0, cfg.replications, cfg.block_size)):
        size = min(cfg.block_size, cfg.replications - first)
        gen = RngStream(cfg.seed, index).gen
        blocks.append(_Block(first, size, _simulate_block(cfg, size, gen)))
    return SimResult(cfg, blocks)


def _simulate_block(cfg: SimConfig, size: int, gen: np.random.Generator) -> dict[str, _Table]:
    model = cfg.model
    graph = model.graph
    tables: dict[str, _Table] = {}
    for name in graph.topological_order(model.relations):
        rel = model.relation(name)
        parents = graph.parents(name)
        if isinstance(rel.lifespan, GeneralCdf) and (parents or graph.children(name)):
            raise UnsupportedModel(f"general lifetimes are simulated only without references ({name!r})")
        tables[name] = _relation_table(cfg, rel, parents, tables, size, gen)
    return tables


def _initial_count(rel: RelationModel) -> int:
    n0 = int(round(rel.cardinality))
    if abs(n0 - rel.cardinality) > 1e-9:
        raise ValueError(f"simulation needs an integer cardinality for {rel.name!r}, got {rel.cardinality}")
    return n0


def _relation_table(cfg: SimConfig, rel: RelationModel, parents, tables, size: int, gen) -> _Table:
    t0, t1 = cfg.t0, cfg.t_end
    n0 = _initial_count(rel)
    # insertion events: Poisson count, then iid times with density lam / Lambda
    big = rel.insertion.integrate(t0, t1) if t1 > t0 else 0.0
    n_events = gen.poisson(big, size) if big > 0 else np.zeros(size, dtype=np.int64)
    total = int(n_events.sum())
    ev_rep = np.repeat(np.arange(size), n_events)
    ev_time = np.asarray(rel.insertion.advance(t0, gen.random(total) * big), dtype=float) if total else np.empty(0)
    ev_time = np.minimum(ev_time, t1)
    order = np.lexsort((ev_time, ev_rep))
    ev_rep, ev_time = ev_rep[order], ev_time[order]
    sizes = rel.batch.sample(gen, total) if total else np.empty(0, dtype=np.int64)
    ev_id = np.arange(total) - np.repeat(np.cumsum(n_events) - n_events, n_events)

    rep = np.concatenate([np.repeat(np.arange(size), n0), np.repeat(ev_rep, sizes)])
    birth = np.concatenate([np.full(size * n0, t0), np.repeat(ev_time, sizes)])
    batch = np.concatenate([np.full(size * n0, -1), np.repeat(ev_id, sizes)])
    initial = np.concatenate([np.ones(size * n0, dtype=bool), np.zeros(int(sizes.sum()), dtype=bool)])
    order = np.argsort(rep, kind="stable")
    rep, birth, batch, initial = rep[order], birth[order], batch[order], initial[order]

    refs = {}
    keep = np.ones(rep.size, dtype=bool)
    for parent, w in parents:
        chosen, ok = _choose_parents(tables[parent], rep, birth, initial, n0, w, size, gen)
        refs[parent] = chosen
        keep &= ok
    rejected = np.bincount(rep[~keep], minlength=size)
    rep, birth, batch, initial = rep[keep], birth[keep], batch[keep], initial[keep]
    refs = {p: r[keep] for p, r in refs.items()}

    death = _own_death(rel, birth, initial, n0, size, t0, gen)
    for parent, r in refs.items():
        death = np.minimum(death, tables[parent].death[r].min(axis=1))

    tab = _Table(rep, birth, death, batch, refs, rejected=rejected)
    for attr, am in rel.attributes.items():
        start = _initial_values(rel, attr, am, initial, n0, size, gen)
        tab.start[attr] = start
        tab.changes[attr] = _attribute_path(am, start, birth, np.minimum(death, t1), gen)
    return tab


def _choose_parents(ptab: _Table, rep, birth, initial, n0: int, w: int, size: int, gen):
    """``w`` distinct live parent rows per child, from the child's replication.

    Initial children take initial parents round-robin so the referenced set at
    the start is fixed.  Later children draw uniformly among parents alive at
    their birth; a child with no such parents is rejected.
    """
    n = rep.size
    chosen = np.full((n, w), -1, dtype=np.int64)
    ok = np.ones(n, dtype=bool)
    starts = np.searchsorted(ptab.rep, np.arange(size))
    counts = np.bincount(ptab.rep, minlength=size)
    p_init = np.bincount(ptab.rep[ptab.batch == -1], minlength=size)
    if initial.any():
        if np.any(p_init[rep[initial]] < w):
            raise ValueError("each initial tuple needs enough distinct initial parent tuples")
        local = np.arange(n) - np.searchsorted(rep, rep)
        idx = local[initial][:, None] * w + np.arange(w)[None, :]
        chosen[initial] = starts[rep[initial]][:, None] + idx % p_init[rep[initial]][:, None]
    todo = np.flatnonzero(~initial)
    if len(ptab) == 0:
        ok[todo] = False
        todo = todo[:0]
    for col in range(w):
        pending = todo.copy()
        for _ in range(MAX_PARENT_TRIES):
            if pending.size == 0:
                break
            r = rep[pending]
            pick = starts[r] + np.floor(gen.random(pending.size) * np.maximum(counts[r], 1)).astype(np.int64)
            pick = np.minimum(pick, starts[r] + np.maximum(counts[r] - 1, 0))
            pick = np.minimum(pick, len(ptab) - 1)
            good = counts[r] > 0
            good &= (ptab.birth[pick] <= birth[pending]) & (ptab.death[pick] > birth[pending])
            for prev in range(col):
                good &= chosen[pending, prev] != pick
            chosen[pending[good], col] = pick[good]
            pending = pending[~good]
        ok[pending] = False
        todo = todo[ok[todo]]
    chosen[~ok] = 0
    return chosen, ok


def _own_death(rel: RelationModel, birth, initial, n0: int, size: int, t0: float, gen) -> np.ndarray:
    n = birth.size
    life = rel.lifespan
    if isinstance(life, GeneralCdf):
        ages = np.zeros(n)
        k = int(initial.sum())
        if k and life.ages:
            table = np.asarray(life.ages)
            if table.size == n0 and not life.weights:
                ages[initial] = np.tile(table, k // n0)
            else:
                weights = np.asarray(life.weights) if life.weights else np.ones(table.size)
                ages[initial] = gen.choice(table, size=k, p=weights / weights.sum())
        return birth + life.remaining_life(ages, gen.random(n))
    if rel.deletion.is_zero:
        return np.full(n, np.inf)
    return np.asarray(rel.deletion.advance(birth, gen.exponential(size=n)), dtype=float)


def _initial_values(rel: RelationModel, attr: str, am: AttributeModel, initial, n0: int, size: int, gen) -> np.ndarray:
    n = initial.size
    if isinstance(am, RandomWalkAttribute):
        out = np.zeros(n)
        if attr in rel.histograms and n0:
            vals = np.repeat([float(v) for v in rel.histograms[attr]], _integer_counts(rel, attr))
            out[initial] = np.tile(vals, size)
        return out
    out = np.zeros(n, dtype=np.int64)
    k = int(initial.sum())
    if k:
        if attr not in rel.histograms:
            raise ValueError(f"simulation needs an initial histogram for {rel.name}.{attr}")
        counts = np.zeros(am.size, dtype=np.int64)
        for value, c in zip(rel.histograms[attr], _integer_counts(rel, attr)):
            counts[am.index(value)] += c
        out[initial] = np.tile(np.repeat(np.arange(am.size), counts), size)
    m = n - k
    if m:
        probs = rel.insertion_distribution(attr)
        out[~initial] = np.minimum(np.searchsorted(np.cumsum(probs), gen.random(m), side="right"), am.size - 1)
    return out


def _integer_counts(rel: RelationModel, attr: str) -> list[int]:
    counts = [int(round(c)) for c in rel.histograms[attr].values()]
    if any(abs(c - v) > 1e-9 for c, v in zip(counts, rel.histograms[attr].values())):
        raise ValueError(f"simulation needs integer histogram counts for {rel.name}.{attr}")
    return counts


def _jump_rule(am: AttributeModel):
    """Exit rate per value and a sampler of the value after an event."""
    if isinstance(am, RandomWalkAttribute):
        rate = am.change_rates
        step = math.sqrt(am.sigma2)
        return rate, lambda old, gen: old + gen.normal(am.delta, step, old.size) if step > 0 else old + am.delta
    if isinstance(am, OverwriteAttribute):
        cum = np.cumsum(am.omega)
        rates = np.asarray(am.exit_rates)
        return rates, lambda old, gen: np.minimum(np.searchsorted(cum, gen.random(old.size), side="right"), am.size - 1)
    chain = am.as_markov() if isinstance(am, BinaryLumpAttribute) else am
    if not isinstance(chain, MarkovAttribute):
        raise UnsupportedModel(f"cannot simulate attribute model {am!r}")
    cum = np.cumsum(np.asarray(chain.transition_probs), axis=1)
    cum[:, -1] = np.maximum(cum[:, -1], 1.0)

    def draw(old, gen):
        u = gen.random(old.size)
        return np.minimum((cum[old] <= u[:, None]).sum(axis=1), am.size - 1)

    return np.asarray(chain.exit_rates), draw


def _attribute_path(am: AttributeModel, start, birth, end, gen) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    rates, draw = _jump_rule(am)
    walk = isinstance(am, RandomWalkAttribute)
    value = start.copy()
    clock = birth.copy()
    active = np.flatnonzero(end > birth)
    rounds = []
    while active.size:
        rate = np.full(active.size, rates[0]) if walk else rates[value[active]]
        nxt = np.full(active.size, np.inf)
        moving = rate > 0
        if moving.any():
            nxt[moving] = am.gamma.advance(clock[active[moving]], gen.exponential(size=int(moving.sum())) / rate[moving])
        hit = nxt < end[active]
        active, when = active[hit], nxt[hit]
        if active.size == 0:
            break
        old = value[active]
        new = draw(old, gen)
        changed = new != old
        rounds.append((active[changed], when[changed], new[changed]))
        value[active] = new
        clock[active] = when
    return rounds


# aggregation and export

def summarize(result: SimResult | None, query: str, **params):
    """Mean and standard error of a per-replication statistic.

    ``query`` names a ``SimResult`` method (``cardinality``, ``histogram``,
    ``survival``, ``first_alteration``, ``obsolescence``, ``unmodified``,
    ``transcription``); ``params`` are passed to it.
    """
    if result is None or len(result) == 0:
        raise EmptyTraces("nothing to summarise")
    values = getattr(result, query)(**params)
    return _summarize_value(values)


def _summarize_value(values):
    if isinstance(values, Mapping):
        return {k: _summarize_value(v) for k, v in values.items()}
    if isinstance(values, tuple):
        return tuple(_summarize_value(v) for v in values)
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 2:
        return [_summarize_value(arr[:, j]) for j in range(arr.shape[1])]
    arr = arr[~np.isnan(arr)]
    if arr.size == 0:
        raise EmptyTraces("no replication produced a value")
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return Summary(float(arr.mean()), se, int(arr.size))


def integrity_violations(result: SimResult) -> list[str]:
    """Tuples alive while some tuple they reference is absent; empty when integrity holds."""
    problems = []
    graph = result.config.model.graph
    for block in result.blocks:
        for name, tab in block.tables.items():
            for parent, _ in graph.parents(name):
                ptab = block.tables[parent]
                r = tab.refs[parent]
                bad = (ptab.rep[r] != tab.rep[:, None]).any(axis=1)
                bad |= (ptab.birth[r] > tab.birth[:, None]).any(axis=1)
                bad |= (ptab.death[r] < tab.death[:, None]).any(axis=1)
                for i in np.flatnonzero(bad)[:10]:
                    problems.append(f"replication {block.first + tab.rep[i]}: {name} tuple outlives its {parent} reference")
    return problems


def write_traces(result: SimResult, path, replications=None, epoch=DEFAULT_EPOCH) -> None:
    with open(path, "w", newline="") as handle:
        out = csv.writer(handle)
        out.writerow(TRACE_HEADER)
        for trace in result.traces(replications):
            for e in trace.events:
                out.writerow([trace.replication, format_timestamp(e["time"], epoch), e["relation"], e["op"], e["tuple_id"],
                              "" if e["attribute"] is None else e["attribute"], _cell(e["old_value"]),
                              _cell(e["new_value"]), "" if e["batch_id"] is None else e["batch_id"]])


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def write_summary(summary: dict, path) -> None:
    with open(path, "w") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True, default=_jsonable)
        handle.write("\n")


def _jsonable(obj):
    if isinstance(obj, Summary):
        return {"mean": obj.mean, "std_error": obj.std_error, "n": obj.n}
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")
