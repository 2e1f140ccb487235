"""Time-varying rate functions and their exact integrals.

Three concrete shapes are supported: a constant rate, a piecewise polynomial on a
bounded domain, and a piecewise polynomial repeated with a fixed period.  Each
segment polynomial is written in the local variable ``x = t - start``.

Every function exposes ``eval``, ``integrate`` and ``advance`` (the inverse of the
cumulative integral).  All three accept scalars or numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyList, NegativeScale, OutOfDomain
from .timeutil import WEEK, phase_of

DEFAULT_MAX_DEGREE = 3
_NEG_TOL = 1e-12
_ADVANCE_TOL = 1e-12


def _as_float_or_array(value, like):
    if np.ndim(like) == 0:
        return float(value)
    return value


def _shift_poly(coeffs: Sequence[float], d: float) -> tuple[float, ...]:
    """Coefficients of q(v) = p(v + d)."""
    n = len(coeffs)
    out = [0.0] * n
    for j, c in enumerate(coeffs):
        if c == 0.0:
            continue
        for k in range(j + 1):
            out[k] += c * math.comb(j, k) * d ** (j - k)
    return tuple(out)


def _poly_extrema(coeffs: Sequence[float], length: float) -> tuple[float, float]:
    """Exact min and max of a polynomial of degree <= 3 on [0, length]."""
    c = np.asarray(coeffs, dtype=float)
    points = [0.0, length]
    if len(c) > 2:
        deriv = np.polynomial.polynomial.polyder(c)
        for root in np.polynomial.polynomial.polyroots(deriv):
            if abs(root.imag) < 1e-12 and 0.0 < root.real < length:
                points.append(root.real)
    elif len(c) <= 1:
        points = [0.0]
    values = np.polynomial.polynomial.polyval(np.asarray(points), c)
    return float(values.min()), float(values.max())


class IntensityFunction:
    """Common interface.  Subclasses are immutable dataclasses."""

    def eval(self, t):
        raise NotImplementedError

    def integrate(self, s, e):
        raise NotImplementedError

    def advance(self, s, amount):
        """Earliest ``e >= s`` with ``integrate(s, e) == amount`` (``inf`` if none)."""
        return _generic_advance(self, s, amount)

    def scale(self, k: float) -> "IntensityFunction":
        raise NotImplementedError

    def knots(self, s: float, e: float) -> np.ndarray:
        """Breakpoints strictly inside ``(s, e)`` where the rate is not smooth."""
        return np.empty(0)

    @property
    def upper_bound(self) -> float:
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return self.upper_bound == 0.0

    def mean_rate(self) -> float:
        """Long-run average rate for periodic functions."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(IntensityFunction):
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "rate", float(self.rate))
        if not math.isfinite(self.rate) or self.rate < 0:
            raise ValueError(f"rate must be finite and nonnegative, got {self.rate}")

    def eval(self, t):
        if np.ndim(t) == 0:
            return self.rate
        return np.full(np.shape(t), self.rate)

    def integrate(self, s, e):
        if np.ndim(s) == 0 and np.ndim(e) == 0:
            return self.rate * (e - s)
        return self.rate * (np.asarray(e, dtype=float) - np.asarray(s, dtype=float))

    def advance(self, s, amount):
        if np.ndim(s) == 0 and np.ndim(amount) == 0:
            if amount == 0:
                return float(s)
            return s + amount / self.rate if self.rate > 0 else math.inf
        s, amount = np.broadcast_arrays(np.asarray(s, float), np.asarray(amount, float))
        if self.rate > 0:
            return s + amount / self.rate
        return np.where(amount == 0, s, np.inf)

    def scale(self, k):
        _check_scale(k)
        return Constant(self.rate * k)

    @property
    def upper_bound(self):
        return self.rate

    def mean_rate(self):
        return self.rate

    def to_json(self):
        return {"type": "constant", "rate": self.rate}


@dataclass(frozen=True)
class PiecewisePolynomial(IntensityFunction):
    """Polynomial segments on contiguous half-open intervals ``[breaks[i], breaks[i+1])``."""

    breaks: tuple[float, ...]
    coeffs: tuple[tuple[float, ...], ...]
    max_degree: int = field(default=DEFAULT_MAX_DEGREE, compare=False)
    _coef: np.ndarray = field(init=False, repr=False, compare=False)
    _anti: np.ndarray = field(init=False, repr=False, compare=False)
    _prefix: np.ndarray = field(init=False, repr=False, compare=False)
    _breaks: np.ndarray = field(init=False, repr=False, compare=False)
    _bounds: tuple[float, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        breaks = tuple(float(b) for b in self.breaks)
        coeffs = tuple(tuple(float(c) for c in seg) or (0.0,) for seg in self.coeffs)
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "coeffs", coeffs)
        if len(breaks) != len(coeffs) + 1 or not coeffs:
            raise ValueError("need one coefficient list per segment")
        if any(not math.isfinite(b) for b in breaks):
            raise ValueError("segment bounds must be finite")
        if any(b1 <= b0 for b0, b1 in zip(breaks, breaks[1:])):
            raise ValueError("segment bounds must be strictly increasing")
        degree = max(len(c) for c in coeffs) - 1
        if degree > self.max_degree:
            raise ValueError(f"polynomial degree {degree} exceeds the cap of {self.max_degree}")
        width = degree + 1
        coef = np.zeros((len(coeffs), width))
        for i, seg in enumerate(coeffs):
            coef[i, : len(seg)] = seg
        anti = np.zeros((len(coeffs), width + 1))
        anti[:, 1:] = coef / np.arange(1, width + 1)
        lengths = np.diff(np.asarray(breaks))
        masses = np.array([np.polynomial.polynomial.polyval(L, a) for L, a in zip(lengths, anti)])
        lo, hi = math.inf, 0.0
        for seg, length in zip(coeffs, lengths):
            if len(seg) <= 4:
                seg_lo, seg_hi = _poly_extrema(seg, length)
            else:
                ends = np.polynomial.polynomial.polyval(np.array([0.0, length]), seg)
                grid = np.polynomial.polynomial.polyval(np.linspace(0.0, length, 65), seg)
                seg_lo, seg_hi = float(ends.min()), float(grid.max())
            lo, hi = min(lo, seg_lo), max(hi, seg_hi)
        if lo < -_NEG_TOL * max(1.0, hi):
            raise ValueError(f"rate function takes negative values (minimum {lo:.3g})")
        object.__setattr__(self, "_coef", coef)
        object.__setattr__(self, "_anti", anti)
        object.__setattr__(self, "_prefix", np.concatenate([[0.0], np.cumsum(np.maximum(masses, 0.0))]))
        object.__setattr__(self, "_breaks", np.asarray(breaks))
        object.__setattr__(self, "_bounds", (max(lo, 0.0), max(hi, 0.0)))

    @classmethod
    def from_segments(cls, segments: Iterable[tuple[float, float, Sequence[float]]], max_degree=DEFAULT_MAX_DEGREE):
        segments = sorted(segments, key=lambda seg: seg[0])
        if not segments:
            raise EmptyList("no segments given")
        breaks = [segments[0][0]]
        for start, end, _ in segments:
            if abs(start - breaks[-1]) > 1e-12:
                raise ValueError(f"segments leave a gap or overlap at {start}")
            breaks.append(end)
        return cls(tuple(breaks), tuple(tuple(c) for _, _, c in segments), max_degree)

    @property
    def domain(self) -> tuple[float, float]:
        return self.breaks[0], self.breaks[-1]

    @property
    def degree(self) -> int:
        return self._coef.shape[1] - 1

    @property
    def total(self) -> float:
        return float(self._prefix[-1])

    def _index(self, x):
        idx = np.searchsorted(self._breaks, x, side="right") - 1
        return np.clip(idx, 0, len(self.coeffs) - 1)

    def _local_eval(self, x):
        idx = self._index(x)
        u = x - self._breaks[idx]
        coef = self._coef[idx]
        val = coef[..., -1]
        for j in range(coef.shape[-1] - 2, -1, -1):
            val = val * u + coef[..., j]
        return val

    def _local_cumulative(self, x):
        """Integral from the domain start to ``x`` (x inside the domain)."""
        idx = self._index(x)
        u = x - self._breaks[idx]
        anti = self._anti[idx]
        val = anti[..., -1]
        for j in range(anti.shape[-1] - 2, -1, -1):
            val = val * u + anti[..., j]
        return self._prefix[idx] + val

    def _check_domain(self, lo, hi):
        a, b = self.domain
        tol = 1e-12 * max(1.0, abs(a), abs(b))
        if np.any(np.asarray(lo) < a - tol) or np.any(np.asarray(hi) > b + tol):
            raise OutOfDomain(f"interval outside the domain [{a}, {b})")

    def eval(self, t):
        self._check_domain(t, t)
        x = np.asarray(t, dtype=float)
        return _as_float_or_array(np.maximum(self._local_eval(x), 0.0), t)

    def integrate(self, s, e):
        s_arr, e_arr = np.asarray(s, dtype=float), np.asarray(e, dtype=float)
        self._check_domain(s_arr, e_arr)
        a, b = self.domain
        lo, hi = np.clip(s_arr, a, b), np.clip(e_arr, a, b)
        val = self._local_cumulative(hi) - self._local_cumulative(lo)
        val = np.where(hi == lo, 0.0, val)
        return _as_float_or_array(val, np.broadcast(s_arr, e_arr))

    def advance(self, s, amount):
        scalar = np.ndim(s) == 0 and np.ndim(amount) == 0
        s_arr, amount = np.broadcast_arrays(np.asarray(s, float), np.asarray(amount, float))
        a, b = self.domain
        inside = (s_arr >= a) & (s_arr < b)
        base = np.where(inside, s_arr, a)
        target = self._local_cumulative(base) + amount
        out = self._solve(target)
        out = np.where(target > self._prefix[-1], np.inf, out)
        out = np.where(inside, np.maximum(out, s_arr), np.inf)
        out = np.where(amount == 0, s_arr, out)
        return float(out) if scalar else out

    def _solve(self, target):
        """Domain point where the cumulative integral reaches ``target``."""
        target = np.minimum(target, self._prefix[-1])
        idx = np.searchsorted(self._prefix, target, side="right") - 1
        idx = np.clip(idx, 0, len(self.coeffs) - 1)
        remainder = target - self._prefix[idx]
        lengths = self._breaks[idx + 1] - self._breaks[idx]
        if self.degree == 0:
            rate = self._coef[idx, 0]
            with np.errstate(divide="ignore", invalid="ignore"):
                u = np.where(rate > 0, remainder / rate, lengths)
        else:
            u = self._newton(idx, remainder, lengths)
        return self._breaks[idx] + np.minimum(u, lengths)

    def _newton(self, idx, remainder, lengths):
        coef, anti = self._coef[idx], self._anti[idx]
        mass = self._prefix[idx + 1] - self._prefix[idx]
        lo = np.zeros_like(remainder)
        hi = lengths.copy()
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(mass > 0, remainder / mass * lengths, 0.0)
        for _ in range(200):
            val = anti[..., -1]
            for j in range(anti.shape[-1] - 2, -1, -1):
                val = val * u + anti[..., j]
            rate = coef[..., -1]
            for j in range(coef.shape[-1] - 2, -1, -1):
                rate = rate * u + coef[..., j]
            resid = val - remainder
            lo = np.where(resid < 0, u, lo)
            hi = np.where(resid >= 0, u, hi)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = u - resid / rate
            ok = (rate > 0) & (step > lo) & (step < hi)
            new = np.where(ok, step, 0.5 * (lo + hi))
            done = np.abs(new - u) <= 1e-15 * np.maximum(1.0, np.abs(self._breaks[idx]))
            u = new
            if np.all(done | (hi - lo <= 1e-15)):
                break
        return u

    def scale(self, k):
        _check_scale(k)
        return PiecewisePolynomial(self.breaks, tuple(tuple(c * k for c in seg) for seg in self.coeffs), self.max_degree)

    def knots(self, s, e):
        inner = self._breaks[1:-1]
        return inner[(inner > s) & (inner < e)]

    @property
    def upper_bound(self):
        return self._bounds[1]

    @property
    def is_zero(self):
        return not np.any(self._coef)

    def segments(self):
        return [(a, b, c) for a, b, c in zip(self.breaks, self.breaks[1:], self.coeffs)]

    def to_json(self):
        return {
            "type": "piecewise",
            "segments": [{"start": a, "end": b, "coeffs": list(c)} for a, b, c in self.segments()],
        }


@dataclass(frozen=True)
class Recurrent(IntensityFunction):
    """A piecewise polynomial on ``[0, period)`` repeated forever in both directions."""

    period: float
    base: PiecewisePolynomial

    def __post_init__(self):
        object.__setattr__(self, "period", float(self.period))
        if self.period <= 0:
            raise ValueError("period must be positive")
        a, b = self.base.domain
        if a != 0.0 or abs(b - self.period) > 1e-12 * self.period:
            raise ValueError(f"base must cover exactly [0, {self.period}), got [{a}, {b})")

    @property
    def total(self) -> float:
        """Integral over one full period."""
        return self.base.total

    def _split(self, t):
        n = np.floor(t / self.period)
        phase = t - n * self.period
        wrap = phase >= self.period
        n = np.where(wrap, n + 1, n)
        phase = np.where(wrap, 0.0, np.maximum(phase, 0.0))
        return n, phase

    def eval(self, t):
        _, phase = self._split(np.asarray(t, dtype=float))
        return _as_float_or_array(np.maximum(self.base._local_eval(phase), 0.0), t)

    def integrate(self, s, e):
        s_arr, e_arr = np.asarray(s, dtype=float), np.asarray(e, dtype=float)
        ns, ps = self._split(s_arr)
        ne, pe = self._split(e_arr)
        val = (ne - ns) * self.total + (self.base._local_cumulative(pe) - self.base._local_cumulative(ps))
        val = np.where(e_arr == s_arr, 0.0, val)
        return _as_float_or_array(val, np.broadcast(s_arr, e_arr))

    def integrate_by_segments(self, s: float, e: float) -> float:
        """Reference path that walks every segment between ``s`` and ``e``."""
        total = 0.0
        t = s
        segs = self.base.segments()
        n = math.floor(s / self.period)
        while t < e:
            offset = n * self.period
            for a, b, c in segs:
                lo, hi = max(t, offset + a), min(e, offset + b)
                if hi > lo:
                    x0, x1 = lo - offset - a, hi - offset - a
                    total += sum(cj * (x1 ** (j + 1) - x0 ** (j + 1)) / (j + 1) for j, cj in enumerate(c))
            n += 1
            t = max(t, n * self.period)
        return total

    def advance(self, s, amount):
        scalar = np.ndim(s) == 0 and np.ndim(amount) == 0
        s_arr, amount = np.broadcast_arrays(np.asarray(s, float), np.asarray(amount, float))
        if self.total <= 0:
            out = np.where(amount == 0, s_arr, np.inf)
            return float(out) if scalar else out
        n, phase = self._split(s_arr)
        target = self.base._local_cumulative(phase) + amount
        k = np.floor(target / self.total)
        remainder = target - k * self.total
        over = remainder >= self.total
        k = np.where(over, k + 1, k)
        remainder = np.where(over, 0.0, np.maximum(remainder, 0.0))
        out = (n + k) * self.period + self.base._solve(remainder)
        out = np.where(amount == 0, s_arr, np.maximum(out, s_arr))
        return float(out) if scalar else out

    def scale(self, k):
        return Recurrent(self.period, self.base.scale(k))

    def knots(self, s, e):
        if e <= s:
            return np.empty(0)
        first, last = math.floor(s / self.period), math.floor(e / self.period)
        offsets = np.arange(first, last + 1) * self.period
        pts = (offsets[:, None] + self.base._breaks[None, :-1]).ravel()
        return pts[(pts > s) & (pts < e)]

    @property
    def upper_bound(self):
        return self.base.upper_bound

    @property
    def is_zero(self):
        return self.base.is_zero

    def mean_rate(self):
        return self.total / self.period

    def to_json(self):
        return {
            "type": "recurrent",
            "period_days": self.period,
            "segments": [{"start": a, "end": b, "coeffs": list(c)} for a, b, c in self.base.segments()],
        }


@dataclass(frozen=True)
class SumIntensity(IntensityFunction):
    """Pointwise sum of functions that cannot be merged into a single shape."""

    terms: tuple[IntensityFunction, ...]

    def eval(self, t):
        return sum(term.eval(t) for term in self.terms)

    def integrate(self, s, e):
        return sum(term.integrate(s, e) for term in self.terms)

    def scale(self, k):
        _check_scale(k)
        return SumIntensity(tuple(term.scale(k) for term in self.terms))

    def knots(self, s, e):
        return np.unique(np.concatenate([term.knots(s, e) for term in self.terms]))

    @property
    def upper_bound(self):
        return sum(term.upper_bound for term in self.terms)

    @property
    def is_zero(self):
        return all(term.is_zero for term in self.terms)

    def mean_rate(self):
        return sum(term.mean_rate() for term in self.terms)

    def to_json(self):
        return {"type": "sum", "terms": [term.to_json() for term in self.terms]}


def _check_scale(k):
    if not math.isfinite(k) or k < 0:
        raise NegativeScale(f"scale factor must be a finite nonnegative number, got {k}")


def _generic_advance(fn: IntensityFunction, s, amount):
    """Bracket-and-bisect inversion of the cumulative integral."""
    scalar = np.ndim(s) == 0 and np.ndim(amount) == 0
    s_arr, amount = np.broadcast_arrays(np.asarray(s, float), np.asarray(amount, float))
    s_arr, amount = s_arr.astype(float).copy(), amount.astype(float).copy()
    bound = fn.upper_bound
    if bound <= 0:
        out = np.where(amount == 0, s_arr, np.inf)
        return float(out) if scalar else out
    lo = s_arr.copy()
    step = np.maximum(amount / bound, 1e-9)
    hi = s_arr + step
    reached = fn.integrate(s_arr, hi) >= amount
    limit = 1e7
    while not np.all(reached):
        step = np.where(reached, step, step * 2.0)
        lo = np.where(reached, lo, hi)
        hi = np.where(reached, hi, s_arr + step)
        reached = reached | (fn.integrate(s_arr, hi) >= amount) | (step > limit)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = fn.integrate(s_arr, mid) < amount
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= _ADVANCE_TOL * np.maximum(1.0, np.abs(s_arr))):
            break
    out = np.where(step > limit, np.inf, hi)
    out = np.where(amount == 0, s_arr, out)
    return float(out) if scalar else out


def _pieces_on(fn: IntensityFunction, breaks: np.ndarray) -> np.ndarray:
    """Coefficient rows of ``fn`` re-expanded around each of ``breaks[:-1]``."""
    rows = []
    for a in breaks[:-1]:
        if isinstance(fn, Constant):
            rows.append((fn.rate,))
            continue
        pw = fn.base if isinstance(fn, Recurrent) else fn
        i = int(pw._index(np.asarray(a)))
        rows.append(_shift_poly(pw.coeffs[i], a - pw.breaks[i]))
    width = max(len(r) for r in rows)
    out = np.zeros((len(rows), width))
    for i, r in enumerate(rows):
        out[i, : len(r)] = r
    return out


def _merge(fns: list[IntensityFunction], breaks: np.ndarray) -> list[np.ndarray]:
    return [_pieces_on(fn, breaks) for fn in fns]


def sum_intensities(fns: Sequence[IntensityFunction]) -> IntensityFunction:
    """Pointwise sum, merged into a single shape whenever the inputs allow it."""
    fns = list(fns)
    if not fns:
        raise EmptyList("cannot sum an empty list of intensities")
    flat: list[IntensityFunction] = []
    for fn in fns:
        flat.extend(fn.terms if isinstance(fn, SumIntensity) else [fn])
    if len(flat) == 1:
        return flat[0]
    constants = [fn for fn in flat if isinstance(fn, Constant)]
    recurrent = [fn for fn in flat if isinstance(fn, Recurrent)]
    piecewise = [fn for fn in flat if isinstance(fn, PiecewisePolynomial)]
    others = [fn for fn in flat if not isinstance(fn, (Constant, Recurrent, PiecewisePolynomial))]
    const_rate = sum(fn.rate for fn in constants)
    if not recurrent and not piecewise and not others:
        return Constant(const_rate)
    periods = {fn.period for fn in recurrent}
    domains = {fn.domain for fn in piecewise}
    if not others and not piecewise and len(periods) == 1:
        period = periods.pop()
        breaks = np.unique(np.concatenate([fn.base._breaks for fn in recurrent]))
        coef = sum(_merge(recurrent, breaks))
        coef[:, 0] += const_rate
        cap = max(fn.base.max_degree for fn in recurrent)
        return Recurrent(period, _from_rows(breaks, coef, cap))
    if not others and not recurrent and len(domains) == 1:
        breaks = np.unique(np.concatenate([fn._breaks for fn in piecewise]))
        coef = sum(_merge(piecewise, breaks))
        coef[:, 0] += const_rate
        return _from_rows(breaks, coef, max(fn.max_degree for fn in piecewise))
    terms = tuple(recurrent + piecewise + others)
    if const_rate:
        terms = terms + (Constant(const_rate),)
    return SumIntensity(terms)


def _from_rows(breaks, coef, cap) -> PiecewisePolynomial:
    rows = []
    for row in coef:
        row = list(row)
        while len(row) > 1 and row[-1] == 0.0:
            row.pop()
        rows.append(tuple(row))
    return PiecewisePolynomial(tuple(float(b) for b in breaks), tuple(rows), cap)


def proportional_factor(numer: IntensityFunction, denom: IntensityFunction, rtol: float = 1e-12):
    """Return ``alpha`` with ``numer == alpha * denom`` when that can be certified, else None."""
    if numer.is_zero:
        return 0.0
    if denom.is_zero:
        return None
    if isinstance(numer, Constant) and isinstance(denom, Constant):
        return numer.rate / denom.rate
    kinds = (Constant, Recurrent, PiecewisePolynomial)
    if not (isinstance(numer, kinds) and isinstance(denom, kinds)):
        return None
    shaped = [fn for fn in (numer, denom) if not isinstance(fn, Constant)]
    if any(isinstance(fn, Recurrent) for fn in shaped):
        if not all(isinstance(fn, Recurrent) for fn in shaped) or len({fn.period for fn in shaped}) != 1:
            return None
        breaks = np.unique(np.concatenate([fn.base._breaks for fn in shaped]))
    else:
        if len({fn.domain for fn in shaped}) != 1:
            return None
        breaks = np.unique(np.concatenate([fn._breaks for fn in shaped]))
    a, b = _merge([numer, denom], breaks)
    width = max(a.shape[1], b.shape[1])
    a = np.pad(a, ((0, 0), (0, width - a.shape[1])))
    b = np.pad(b, ((0, 0), (0, width - b.shape[1])))
    pivot = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    alpha = a[pivot] / b[pivot]
    if np.allclose(a, alpha * b, rtol=rtol, atol=rtol * np.abs(a).max()):
        return float(alpha)
    return None


# module-level spellings of the operations

def evaluate(fn: IntensityFunction, t):
    return fn.eval(t)


def integrate(fn: IntensityFunction, s, e):
    if np.any(np.asarray(e) < np.asarray(s)):
        raise ValueError("integration bounds must satisfy s <= e")
    return fn.integrate(s, e)


def scale(fn: IntensityFunction, k: float) -> IntensityFunction:
    _check_scale(k)
    return fn.scale(k)


# construction helpers

def weekly(blocks: Iterable[tuple[float, float, float]], period: float = WEEK) -> Recurrent:
    """Piecewise-constant recurrent rate from ``(start_phase, end_phase, rate)`` blocks.

    Blocks may be listed in any order but must tile ``[0, period)``.
    """
    segments = [(phase_of(a), phase_of(b), (float(r),)) for a, b, r in blocks]
    return Recurrent(period, PiecewisePolynomial.from_segments(segments))


def workweek(day_blocks: Sequence[tuple[float, float, float]], saturday: float, sunday: float) -> Recurrent:
    """Weekly rate with the same intra-day profile Monday to Friday.

    ``day_blocks`` lists ``(start_hour, end_hour, rate)`` covering ``[0, 24)``.
    """
    blocks = []
    for day in range(5):
        for h0, h1, rate in day_blocks:
            blocks.append((day + h0 / 24.0, day + h1 / 24.0, rate))
    blocks.append((5.0, 6.0, saturday))
    blocks.append((6.0, 7.0, sunday))
    return weekly(blocks)


def from_json(spec) -> IntensityFunction:
    if isinstance(spec, (int, float)):
        return Constant(spec)
    kind = spec.get("type", "constant")
    max_degree = int(spec.get("max_degree", DEFAULT_MAX_DEGREE))
    if kind == "constant":
        return Constant(spec["rate"])
    if kind in ("piecewise", "recurrent"):
        segments = [(phase_of(seg["start"]), phase_of(seg["end"]), seg["coeffs"]) for seg in spec["segments"]]
        base = PiecewisePolynomial.from_segments(segments, max_degree)
        if kind == "piecewise":
            return base
        return Recurrent(float(spec.get("period_days", WEEK)), base)
    if kind == "sum":
        return sum_intensities([from_json(term) for term in spec["terms"]])
    raise ValueError(f"unknown intensity type {kind!r}")


def to_json(fn: IntensityFunction) -> dict:
    return fn.to_json()
