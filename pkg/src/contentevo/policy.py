"""Refresh policies: uniform spacing, insertion-obsolescence threshold, first alteration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cost import CostSpec, ImportanceWeight, cost_components, insertion_obsolescence
from .errors import EmptyTrace, NonpositiveRate, TriggerNeverFires, UnknownPolicy
from .evolution import AlterationState, EvolutionModel, alteration_state, expected_state, first_alteration
from .intensity import IntensityFunction, PiecewisePolynomial, Recurrent
from .timeutil import DAY_SECONDS

DEFAULT_RESOLUTION = 1e-9  # days, about 86 microseconds


@dataclass(frozen=True)
class USP:
    """Refresh every ``M / rate`` days; ``rate`` defaults to the model's mean insertion rate."""

    M: float
    rate: float | None = None

    def __post_init__(self):
        if self.M <= 0:
            raise ValueError("M must be positive")

    label = "usp"

    @property
    def parameter(self):
        return self.M


@dataclass(frozen=True)
class Threshold:
    """Refresh once expected insertion obsolescence since the last refresh exceeds ``Pi``."""

    Pi: float

    def __post_init__(self):
        if self.Pi <= 0:
            raise ValueError("threshold must be positive")

    label = "threshold"

    @property
    def parameter(self):
        return self.Pi


@dataclass(frozen=True)
class FirstAlteration:
    """Refresh once the probability of any change since the last refresh exceeds ``pi``."""

    pi: float

    def __post_init__(self):
        if not 0.0 < self.pi < 1.0:
            raise ValueError("pi must lie strictly between 0 and 1")

    label = "fa"

    @property
    def parameter(self):
        return self.pi


@dataclass(frozen=True)
class Schedule:
    times: tuple[float, ...]
    t0: float
    t_end: float
    policy: object = None

    def __post_init__(self):
        times = tuple(float(b) for b in self.times)
        if any(b1 <= b0 for b0, b1 in zip(times, times[1:])):
            raise ValueError("refresh times must be strictly increasing")
        if times and (times[0] <= self.t0 or times[-1] > self.t_end):
            raise ValueError("refresh times must lie in (t0, t_end]")
        object.__setattr__(self, "times", times)

    @property
    def refresh_count(self) -> int:
        return len(self.times)

    @property
    def sync_points(self) -> tuple[float, ...]:
        """Initial synchronisation at ``t0`` followed by the refreshes."""
        return (self.t0,) + self.times

    def __len__(self):
        return len(self.times)


def usp_interval(rate: float, M: float) -> float:
    if rate <= 0:
        raise NonpositiveRate(f"reference rate must be positive, got {rate}")
    return M / rate


def threshold_from_M(rate: float, M: float) -> float:
    if rate <= 0:
        raise NonpositiveRate(f"reference rate must be positive, got {rate}")
    return M * M / (2.0 * rate)


def fa_level_from_M(M: float) -> float:
    """First-alteration level matching the uniform interval ``M / rate`` on a homogeneous insert-only model."""
    return -math.expm1(-M)


def reference_rate(intensity: IntensityFunction) -> float:
    if isinstance(intensity, PiecewisePolynomial):
        a, b = intensity.domain
        return intensity.total / (b - a)
    return intensity.mean_rate()


def make_policy(kind: str, M: float, rate: float):
    """Policy of the given kind calibrated to the uniform interval ``M / rate``."""
    kind = kind.lower()
    if kind == "usp":
        return USP(M, rate)
    if kind == "threshold":
        return Threshold(threshold_from_M(rate, M))
    if kind in ("fa", "first_alteration", "first-alteration"):
        return FirstAlteration(fa_level_from_M(M))
    raise UnknownPolicy(f"unknown policy {kind!r}; expected usp, threshold or fa")


def _trigger(policy, model: EvolutionModel, name: str, cost: CostSpec | None, t0: float, state_at):
    rel = model.relation(name)
    if isinstance(policy, Threshold):
        g_ins = cost.g_ins if cost is not None else ImportanceWeight.constant(1.0)
        if rel.insertion.is_zero or g_ins.is_zero:
            return None
        return lambda s: (lambda f: insertion_obsolescence(model, name, g_ins, s, f)), policy.Pi
    if isinstance(policy, FirstAlteration):
        if state_at is None:
            def state_at(s):
                current = model if s == t0 else model.with_relation(expected_state(model, name, t0, s))
                return alteration_state(current, name)

        def at(s):
            state = state_at(s)
            return lambda f: first_alteration(model, name, state, s, f)

        return at, policy.pi
    raise UnknownPolicy(f"unsupported policy {policy!r}")


def _earliest_crossing(fn: Callable[[float], float], level: float, s: float, limit: float, step: float,
                       resolution: float) -> float | None:
    lo, prev = s, 0.0
    hi = s + step
    while True:
        if hi > limit:
            hi = limit
        val = fn(hi)
        if val < prev - 1e-12 * max(1.0, abs(prev)):
            raise RuntimeError(f"refresh trigger decreased between {lo} and {hi}")
        if val >= level:
            break
        if hi >= limit:
            return None
        lo, prev = hi, val
        step *= 2.0
        hi = s + step
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if fn(mid) >= level:
            hi = mid
        else:
            lo = mid
    return hi


def generate_schedule(policy, model: EvolutionModel, name: str, cost: CostSpec | None, t0: float, t_end: float,
                      resolution: float = DEFAULT_RESOLUTION,
                      state_at: Callable[[float], AlterationState] | None = None) -> Schedule:
    """Deterministic refresh times in ``(t0, t_end]``.

    After each refresh at ``s`` the next one is the earliest ``f`` at which the
    trigger fires, located by doubling and bisection to ``resolution`` days.
    """
    if t_end <= t0:
        raise ValueError("horizon must satisfy t0 < t_end")
    rel = model.relation(name)
    if isinstance(policy, USP):
        rate = policy.rate if policy.rate is not None else reference_rate(rel.insertion)
        gap = usp_interval(rate, policy.M)
        count = int(math.floor((t_end - t0) / gap * (1 + 1e-15)))
        times = [t0 + k * gap for k in range(1, count + 1)]
        return Schedule(tuple(b for b in times if b <= t_end), t0, t_end, policy)
    trig = _trigger(policy, model, name, cost, t0, state_at)
    if trig is None:
        raise TriggerNeverFires("the trigger is identically zero", Schedule((), t0, t_end, policy))
    factory, level = trig
    mean_rate = max(reference_rate(rel.insertion), 1e-9)
    step = 1.0 / (24.0 * mean_rate) if mean_rate > 0 else 1.0 / 24.0
    times: list[float] = []
    s = t0
    while s < t_end:
        b = _earliest_crossing(factory(s), level, s, t_end, step, resolution)
        if b is None:
            break
        times.append(b)
        s = b
    return Schedule(tuple(times), t0, t_end, policy)


def evaluate_schedule(schedule: Schedule, spec: CostSpec, model: EvolutionModel | None, name: str | None,
                      mode: str = "analytic", log=None) -> dict:
    """Transcription, obsolescence and combined cost of a schedule.

    ``mode="trace"`` replays ``log`` (an ``EventLog``): each event is charged at its
    own timestamp, and modifications cost one unit each.
    """
    if mode == "analytic":
        return cost_components(schedule.times, spec, model, name, schedule.t_end, schedule.t0)
    if mode != "trace":
        raise ValueError(f"unknown evaluation mode {mode!r}")
    if log is None or len(log) == 0:
        raise EmptyTrace("trace evaluation needs a nonempty event log")
    times = np.asarray(log.times)
    counts = np.asarray(log.counts, dtype=float)
    ops = np.asarray(log.ops)
    transcription = obsolete = 0.0
    starts = (schedule.t0,) + schedule.times
    ends = schedule.times + (schedule.t_end,)
    for i, (a, b) in enumerate(zip(starts, ends)):
        if b <= a:
            continue
        inside = (times > a) & (times <= b)
        ins = inside & (ops == "insert")
        dele = inside & (ops == "delete")
        mod = inside & (ops == "modify")
        obsolete += float(counts[ins] @ spec.g_ins.g(a, b, times[ins])) if ins.any() else 0.0
        obsolete += float(counts[dele] @ spec.g_del.g(a, b, times[dele])) if dele.any() else 0.0
        obsolete += float(counts[mod].sum())
        if i < len(schedule.times):
            transcription += spec.setup_c + spec.beta * float(counts[inside].sum())
    total = spec.alpha * transcription + (1.0 - spec.alpha) * obsolete
    return {"refresh_count": schedule.refresh_count, "transcription": transcription, "obsolescence": obsolete, "total": total}


def refreshes_by_level(schedule: Schedule, intensity: IntensityFunction) -> list[dict]:
    """Refresh counts per distinct rate level of a piecewise-constant recurrent intensity."""
    if not isinstance(intensity, Recurrent) or intensity.base.degree != 0:
        raise ValueError("segment counts need a piecewise-constant recurrent intensity")
    base = intensity.base
    levels = sorted({seg[0] for seg in base.coeffs})
    times = np.asarray(schedule.times)
    rates = intensity.eval(times) if times.size else np.empty(0)
    rows = []
    for level in levels:
        mask = PiecewisePolynomial(base.breaks, tuple((1.0,) if c[0] == level else (0.0,) for c in base.coeffs))
        days = Recurrent(intensity.period, mask).integrate(schedule.t0, schedule.t_end)
        count = int(np.sum(rates == level))
        rows.append({"rate": level, "refreshes": count, "days": days, "per_day": count / days if days > 0 else 0.0})
    return rows


def format_interval(days: float) -> str:
    total = int(round(days * DAY_SECONDS))
    h, rest = divmod(total, 3600)
    m, s = divmod(rest, 60)
    return f"{h}:{m:02d}:{s:02d}"
