"""Estimating insertion processes from event logs and checking the fit.

The checks rely on time rescaling: if arrivals follow an intensity ``lam`` then
the integrated intensity over successive gaps is a unit-exponential IID sample.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import EmptyBlockDuration, EmptySample, NoMultiEvents, TooFewEvents
from .intensity import Constant, IntensityFunction, PiecewisePolynomial, Recurrent
from .stochastic import UNIT_BATCH, BatchDistribution
from .timeutil import DEFAULT_EPOCH, WEEK, format_timestamp, to_days

OPS = ("insert", "delete", "modify")

# asymptotic Kolmogorov-Smirnov critical values X(alpha); reject when D_n > X / sqrt(n)
KS_CRITICAL = {0.1: 1.22, 0.05: 1.36, 0.01: 1.63, 0.005: 1.73}


@dataclass
class EventLog:
    times: np.ndarray
    counts: np.ndarray
    ops: np.ndarray
    start: float | None = None
    end: float | None = None
    source: str = ""
    epoch: datetime = DEFAULT_EPOCH

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float).reshape(-1)
        n = self.times.size
        self.counts = np.ones(n, dtype=np.int64) if self.counts is None else np.asarray(self.counts, dtype=np.int64).reshape(-1)
        if self.ops is None or isinstance(self.ops, str):
            self.ops = np.full(n, self.ops or "insert", dtype=object)
        else:
            self.ops = np.asarray(self.ops, dtype=object).reshape(-1)
        if self.counts.size != n or self.ops.size != n:
            raise ValueError("times, counts and ops must have equal length")
        if np.any(np.diff(self.times) < 0):
            raise ValueError("event timestamps must be nondecreasing")
        if np.any(self.counts < 1):
            raise ValueError("batch sizes must be at least 1")
        bad = set(self.ops) - set(OPS)
        if bad:
            raise ValueError(f"unknown operations {sorted(bad)}")

    @classmethod
    def from_times(cls, times, counts=None, op: str = "insert", **kw) -> "EventLog":
        return cls(np.asarray(times, dtype=float), counts, op, **kw)

    def __len__(self):
        return int(self.times.size)

    @property
    def horizon(self) -> tuple[float, float]:
        if len(self) == 0 and (self.start is None or self.end is None):
            raise TooFewEvents("an empty log has no horizon")
        lo = self.start if self.start is not None else float(self.times[0])
        hi = self.end if self.end is not None else float(self.times[-1])
        return lo, hi

    def select(self, op: str) -> "EventLog":
        keep = self.ops == op
        return EventLog(self.times[keep], self.counts[keep], self.ops[keep], self.start, self.end, self.source, self.epoch)

    def window(self, lo: float, hi: float) -> "EventLog":
        keep = (self.times >= lo) & (self.times < hi)
        return EventLog(self.times[keep], self.counts[keep], self.ops[keep], lo, hi, self.source, self.epoch)

    def unbatched(self) -> "EventLog":
        """One event per tuple, each of size 1."""
        reps = self.counts
        return EventLog(np.repeat(self.times, reps), None, np.repeat(self.ops, reps), self.start, self.end,
                        self.source, self.epoch)

    @classmethod
    def read_csv(cls, path, epoch: datetime = DEFAULT_EPOCH) -> "EventLog":
        rows = []
        with open(path, newline="") as handle:
            for rec in csv.DictReader(handle):
                if not rec.get("timestamp"):
                    continue
                count = int(rec.get("count") or 1)
                op = (rec.get("op") or "insert").strip()
                rows.append((to_days(rec["timestamp"], epoch), count, op))
        rows.sort(key=lambda r: r[0])
        times = [r[0] for r in rows]
        return cls(np.asarray(times, dtype=float), [r[1] for r in rows], np.asarray([r[2] for r in rows], dtype=object),
                   source=str(path), epoch=epoch)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            out = csv.writer(handle)
            out.writerow(["timestamp", "count", "op"])
            for t, c, op in zip(self.times, self.counts, self.ops):
                out.writerow([format_timestamp(float(t), self.epoch), int(c), op])


@dataclass(frozen=True)
class KsResult:
    D_n: float
    n: int
    thresholds: dict = field(default_factory=dict)
    reject_at: dict = field(default_factory=dict)

    def rejects(self, alpha: float) -> bool:
        return self.reject_at[alpha]

    @property
    def rejection_level(self) -> float | None:
        """Smallest tabulated level at which the fit is rejected."""
        levels = [a for a, rej in self.reject_at.items() if rej]
        return min(levels) if levels else None


@dataclass(frozen=True)
class SegmentationSpec:
    """Weekly blocks given as ``(weekdays, start_hour, end_hour)``; weekday 0 is Monday."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple((tuple(int(d) for d in days), float(a), float(b)) for days, a, b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        cover = sorted(iv for i in range(len(blocks)) for iv in self.intervals(i))
        pos = 0.0
        for a, b in cover:
            if abs(a - pos) > 1e-12 or b <= a:
                raise ValueError("segmentation blocks must partition the week")
            pos = b
        if abs(pos - WEEK) > 1e-12:
            raise ValueError("segmentation blocks must partition the week")

    def intervals(self, index: int) -> list[tuple[float, float]]:
        days, a, b = self.blocks[index]
        return [(d + a / 24.0, d + b / 24.0) for d in days]

    def labels(self) -> list[str]:
        names = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
        out = []
        for days, a, b in self.blocks:
            span = names[days[0]] if len(days) == 1 else f"{names[days[0]]}-{names[days[-1]]}"
            out.append(f"{span} {a:g}-{b:g}")
        return out

    def indicator(self, index: int) -> Recurrent:
        segments = sorted(
            [(a, b, (1.0,)) for a, b in self.intervals(index)]
            + [(a, b, (0.0,)) for j in range(len(self.blocks)) if j != index for a, b in self.intervals(j)]
        )
        return Recurrent(WEEK, PiecewisePolynomial.from_segments(segments))

    def block_of(self, times) -> np.ndarray:
        phase = np.mod(np.asarray(times, dtype=float), WEEK)
        out = np.full(phase.shape, -1, dtype=np.int64)
        for i in range(len(self.blocks)):
            for a, b in self.intervals(i):
                out[(phase >= a) & (phase < b)] = i
        return out

    def to_json(self):
        return [{"days": list(days), "start_hour": a, "end_hour": b} for days, a, b in self.blocks]

    @classmethod
    def from_json(cls, spec) -> "SegmentationSpec":
        if isinstance(spec, str):
            return preset(spec)
        return cls(tuple((tuple(b["days"]), b["start_hour"], b["end_hour"]) for b in spec))


def preset(name: str) -> SegmentationSpec:
    """Named segmentations: ``workweek`` (six weekday bands plus Saturday and Sunday) or ``flat``."""
    if name == "workweek":
        weekdays = (0, 1, 2, 3, 4)
        bands = [(0, 3), (3, 6), (6, 9), (9, 18), (18, 21), (21, 24)]
        return SegmentationSpec(tuple((weekdays, a, b) for a, b in bands) + (((5,), 0, 24), ((6,), 0, 24)))
    if name == "flat":
        return SegmentationSpec((((0, 1, 2, 3, 4, 5, 6), 0, 24),))
    raise ValueError(f"unknown segmentation preset {name!r}")


def batch_events(log: EventLog, window: float) -> EventLog:
    """Merge events of the same kind separated by less than ``window`` days.

    Clusters are formed left to right by chaining consecutive gaps below the
    window; each cluster keeps its first timestamp and the summed batch size.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    times, counts, ops = [], [], []
    for op in OPS:
        keep = log.ops == op
        t = log.times[keep]
        if t.size == 0:
            continue
        c = log.counts[keep]
        new = np.concatenate([[True], np.diff(t) >= window])
        ids = np.cumsum(new) - 1
        times.append(t[new])
        counts.append(np.bincount(ids, weights=c).astype(np.int64))
        ops.append(np.full(int(new.sum()), op, dtype=object))
    if not times:
        return EventLog(np.empty(0), None, None, log.start, log.end, log.source, log.epoch)
    t = np.concatenate(times)
    order = np.argsort(t, kind="stable")
    return EventLog(t[order], np.concatenate(counts)[order], np.concatenate(ops)[order], log.start, log.end,
                    log.source, log.epoch)


def fit_homogeneous(log: EventLog) -> float:
    """Events per day: the reciprocal of the mean interarrival time."""
    if len(log) < 2:
        raise TooFewEvents("at least two events are needed")
    span = float(log.times[-1] - log.times[0])
    if span <= 0:
        raise TooFewEvents("all events share one timestamp")
    return (len(log) - 1) / span


def fit_rpc(log: EventLog, seg: SegmentationSpec) -> Recurrent:
    """Per-block event counts divided by the time the log spends in each block."""
    lo, hi = log.horizon
    if hi - lo < WEEK - 1e-9:
        raise ValueError("the log must span at least one full week")
    blocks = seg.block_of(log.times)
    hits = np.bincount(blocks[blocks >= 0], minlength=len(seg.blocks))
    segments = []
    for i in range(len(seg.blocks)):
        exposure = seg.indicator(i).integrate(lo, hi)
        if exposure <= 0:
            raise EmptyBlockDuration(f"block {seg.labels()[i]} has no duration inside the log horizon")
        rate = hits[i] / exposure
        segments.extend((a, b, (rate,)) for a, b in seg.intervals(i))
    return Recurrent(WEEK, PiecewisePolynomial.from_segments(sorted(segments)))


def fit_batch_distribution(log: EventLog) -> BatchDistribution:
    if len(log) == 0:
        raise TooFewEvents("cannot fit batch sizes to an empty log")
    sizes, freq = np.unique(log.counts, return_counts=True)
    return BatchDistribution.from_counts(dict(zip(sizes.tolist(), freq.tolist())))


def rescale_interarrivals(log: EventLog, intensity: IntensityFunction) -> np.ndarray:
    if len(log) < 2:
        raise TooFewEvents("at least two events are needed")
    return np.asarray(intensity.integrate(log.times[:-1], log.times[1:]), dtype=float)


def _result(d_n: float, n: int) -> KsResult:
    thresholds = {a: x / math.sqrt(n) for a, x in KS_CRITICAL.items()}
    return KsResult(float(d_n), n, thresholds, {a: bool(d_n > thr) for a, thr in thresholds.items()})


def ks_statistic(sample, cdf: Callable) -> float:
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n == 0:
        raise EmptySample("the sample is empty")
    fx = np.asarray(cdf(x), dtype=float)
    k = np.arange(1, n + 1)
    return float(max(np.max(np.abs(k / n - fx)), np.max(np.abs((k - 1) / n - fx))))


def ks_test(sample, cdf: Callable = None) -> KsResult:
    """Two-sided Kolmogorov-Smirnov test against a continuous ``cdf`` (unit exponential by default)."""
    if cdf is None:
        cdf = exponential_cdf
    d_n = ks_statistic(sample, cdf)
    return _result(d_n, int(np.size(sample)))


def exponential_cdf(x):
    return -np.expm1(-np.maximum(np.asarray(x, dtype=float), 0.0))


def singleton_runs(log: EventLog) -> np.ndarray:
    """Number of size-1 events before each multi-tuple event.

    The run after the last multi-tuple event is incomplete and is dropped.
    """
    multi = np.flatnonzero(log.counts > 1)
    if multi.size == 0:
        raise NoMultiEvents("the log has no events with more than one tuple")
    before = np.concatenate([[-1], multi[:-1]])
    return multi - before - 1


def runs_test(log: EventLog) -> KsResult:
    """Compare singleton run lengths with the geometric law ``P(k) = p^k (1 - p)``.

    ``p`` is the fraction of size-1 events.  Both distributions jump only at
    integers, so the supremum is taken over the integer support.
    """
    runs = singleton_runs(log)
    p = float(np.mean(log.counts == 1))
    n = runs.size
    support = np.arange(0, int(runs.max()) + 1)
    empirical = np.searchsorted(np.sort(runs), support, side="right") / n
    model = 1.0 - p ** (support + 1)
    return _result(float(np.max(np.abs(empirical - model))), n)


@dataclass(frozen=True)
class FitRow:
    variant: str
    intensity: IntensityFunction
    batch: BatchDistribution
    ks: KsResult


VARIANTS = ("homogeneous", "compound-homogeneous", "rpc", "compound-rpc")


def goodness_of_fit(raw: EventLog, seg: SegmentationSpec, window: float, test_log: EventLog | None = None,
                    variants: Sequence[str] = VARIANTS) -> list[FitRow]:
    """Fit each variant on ``raw`` and KS-test rescaled gaps on ``test_log`` (default: the same log).

    Plain variants treat every tuple as its own arrival; compound variants fit
    the batched log and a batch-size distribution.
    """
    raw = raw.select("insert")
    test = (test_log if test_log is not None else raw).select("insert")
    rows = []
    for variant in variants:
        compound = variant.startswith("compound")
        fit_on = batch_events(raw, window) if compound else raw.unbatched()
        check = batch_events(test, window) if compound else test.unbatched()
        if variant.endswith("rpc"):
            intensity = fit_rpc(fit_on, seg)
        elif variant.endswith("homogeneous"):
            intensity = Constant(fit_homogeneous(fit_on))
        else:
            raise ValueError(f"unknown variant {variant!r}")
        batch = fit_batch_distribution(fit_on) if compound else UNIT_BATCH
        rows.append(FitRow(variant, intensity, batch, ks_test(rescale_interarrivals(check, intensity))))
    return rows


def best_variant(rows: Iterable[FitRow], alpha: float = 0.05) -> FitRow:
    """First row (in order of increasing complexity) whose fit survives at ``alpha``; else smallest D_n."""
    rows = list(rows)
    for row in rows:
        if not row.ks.rejects(alpha):
            return row
    return min(rows, key=lambda r: r.ks.D_n)

