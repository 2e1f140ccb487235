"""Sampling primitives for nonhomogeneous exponential waits and compound Poisson arrivals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import HorizonExceeded, NegativeDuration
from .intensity import IntensityFunction


class RngStream:
    """Deterministic random stream identified by ``(seed, stream)``.

    Two instances built from the same pair produce the same draws.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        self.gen = np.random.Generator(np.random.PCG64(seq))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"

    def child(self, index: int) -> "RngStream":
        """Independent stream derived from this one's identity (not its state)."""
        return RngStream(self.seed, (self.stream << 20) + int(index) + 1)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.gen
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(rng)
    raise TypeError(f"expected an RngStream or numpy Generator, got {type(rng).__name__}")


@dataclass(frozen=True)
class NonhomExp:
    """Waiting time from ``origin`` until the first event of a Poisson process with ``intensity``."""

    origin: float
    intensity: IntensityFunction

    def cdf(self, tau):
        return cdf(self, tau)


@dataclass(frozen=True)
class BatchDistribution:
    """Distribution of the number of tuples carried by one event."""

    support: tuple[tuple[int, float], ...] = ((1, 1.0),)
    _sizes: np.ndarray = field(init=False, repr=False, compare=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pairs = tuple(sorted((int(k), float(p)) for k, p in self.support))
        if not pairs:
            raise ValueError("batch distribution needs at least one size")
        if any(k < 1 for k, _ in pairs):
            raise ValueError("batch sizes must be positive integers")
        if any(p < 0 for _, p in pairs):
            raise ValueError("batch probabilities must be nonnegative")
        if len({k for k, _ in pairs}) != len(pairs):
            raise ValueError("duplicate batch size")
        total = math.fsum(p for _, p in pairs)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"batch probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "support", pairs)
        object.__setattr__(self, "_sizes", np.array([k for k, _ in pairs]))
        cum = np.cumsum([p for _, p in pairs])
        cum[-1] = 1.0
        object.__setattr__(self, "_cum", cum)

    @classmethod
    def from_counts(cls, counts: Mapping[int, int]) -> "BatchDistribution":
        total = sum(counts.values())
        if total <= 0:
            raise ValueError("no events to build a batch distribution from")
        sizes = sorted(k for k, n in counts.items() if n > 0)
        probs = [counts[k] / total for k in sizes]
        probs[-1] = 1.0 - math.fsum(probs[:-1])
        return cls(tuple(zip(sizes, probs)))

    @property
    def mean(self) -> float:
        return math.fsum(k * p for k, p in self.support)

    @property
    def second_moment(self) -> float:
        return math.fsum(k * k * p for k, p in self.support)

    def sample(self, rng, n: int | None = None):
        gen = as_generator(rng)
        if len(self.support) == 1:
            size = self.support[0][0]
            return size if n is None else np.full(n, size, dtype=np.int64)
        u = gen.random(n)
        idx = np.searchsorted(self._cum, u, side="right")
        idx = np.minimum(idx, len(self.support) - 1)
        return int(self._sizes[idx]) if n is None else self._sizes[idx].astype(np.int64)

    def to_json(self) -> dict:
        return {str(k): p for k, p in self.support}

    @classmethod
    def from_json(cls, spec) -> "BatchDistribution":
        if spec is None:
            return cls()
        if isinstance(spec, Mapping):
            return cls(tuple((int(k), float(p)) for k, p in spec.items()))
        return cls(tuple((int(k), float(p)) for k, p in spec))


UNIT_BATCH = BatchDistribution()


def cdf(d: NonhomExp, tau):
    if np.any(np.asarray(tau) < 0):
        raise NegativeDuration("waiting time must be nonnegative")
    cum = d.intensity.integrate(d.origin, d.origin + (np.asarray(tau, dtype=float) if np.ndim(tau) else tau))
    out = -np.expm1(-cum)
    return float(out) if np.ndim(out) == 0 else out


def sample_interarrival(d: NonhomExp, rng, horizon: float | None = None) -> float:
    """Inverse-cdf draw of the wait after ``d.origin``.

    Raises ``HorizonExceeded`` when no arrival happens within ``horizon`` days (or at all).
    """
    u = as_generator(rng).random()
    target = -math.log1p(-u)
    end = d.intensity.advance(d.origin, target)
    tau = end - d.origin
    if not math.isfinite(tau) or (horizon is not None and tau > horizon):
        raise HorizonExceeded(f"no arrival within {horizon if horizon is not None else 'the support'} days")
    return max(tau, 0.0)


def sample_arrival_times(intensity: IntensityFunction, origins: np.ndarray, rng) -> np.ndarray:
    """Vectorised next-arrival times after each origin (``inf`` where none)."""
    gen = as_generator(rng)
    origins = np.asarray(origins, dtype=float)
    return intensity.advance(origins, gen.exponential(size=origins.shape))


def simulate_nhpp(intensity: IntensityFunction, batch: BatchDistribution, s: float, f: float, rng) -> list[tuple[float, int]]:
    """Event times in ``(s, f]`` with independent batch sizes."""
    if f < s:
        raise NegativeDuration("simulation window must satisfy s <= f")
    gen = as_generator(rng)
    events = []
    t = s
    while True:
        try:
            t = t + sample_interarrival(NonhomExp(t, intensity), gen, horizon=f - t)
        except HorizonExceeded:
            break
        events.append((t, batch.sample(gen)))
    return events


def expected_insertions(intensity: IntensityFunction, batch: BatchDistribution, s: float, f: float) -> float:
    if f < s:
        raise NegativeDuration("window must satisfy s <= f")
    return batch.mean * intensity.integrate(s, f)


def rescaled_gaps(intensity: IntensityFunction, times: Sequence[float], start: float | None = None) -> np.ndarray:
    """Cumulative intensity over successive gaps, optionally starting from ``start``."""
    times = np.asarray(times, dtype=float)
    if start is not None:
        times = np.concatenate([[start], times])
    return np.asarray(intensity.integrate(times[:-1], times[1:]), dtype=float)
