"""Slow, transparent reference computations used to check the library.

Nothing here imports the numerical internals of ``contentevo``; the only shared
pieces are the plain model constructors used to describe a case.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import linalg as sp_linalg

# Weekly rates by block (events/day), Monday to Friday bands then weekend days.
WEEKDAY_BANDS = [(0, 3, 2.40), (3, 6, 5.96), (6, 9, 6.04), (9, 18, 7.50), (18, 21, 3.03), (21, 24, 2.41)]
SATURDAY_RATE = 1.50
SUNDAY_RATE = 1.15


def weekly_blocks():
    """(start_day, end_day, rate) triples covering one week."""
    out = []
    for day in range(5):
        for h0, h1, rate in WEEKDAY_BANDS:
            out.append((day + h0 / 24.0, day + h1 / 24.0, rate))
    out.append((5.0, 6.0, SATURDAY_RATE))
    out.append((6.0, 7.0, SUNDAY_RATE))
    return out


def adaptive_simpson(fn, a: float, b: float, tol: float = 1e-12, depth: int = 60) -> float:
    """Classic recursive adaptive Simpson with Richardson correction."""
    if b <= a:
        return 0.0

    def simpson(lo, flo, hi, fhi):
        mid = 0.5 * (lo + hi)
        fmid = fn(mid)
        return mid, fmid, (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, flo, hi, fhi, mid, fmid, whole, eps, level):
        lm, flm, left = simpson(lo, flo, mid, fmid)
        rm, frm, right = simpson(mid, fmid, hi, fhi)
        delta = left + right - whole
        if level <= 0 or abs(delta) <= 15.0 * eps:
            return left + right + delta / 15.0
        return (recurse(lo, flo, mid, fmid, lm, flm, left, eps / 2.0, level - 1)
                + recurse(mid, fmid, hi, fhi, rm, frm, right, eps / 2.0, level - 1))

    fa, fb = fn(a), fn(b)
    m, fm, whole = simpson(a, fa, b, fb)
    return recurse(a, fa, b, fb, m, fm, whole, tol, depth)


def piecewise_integral(pieces, a: float, b: float) -> float:
    """Integral of a function given as (lo, hi, fn) pieces, Simpson on each overlap."""
    total = 0.0
    for lo, hi, fn in pieces:
        x0, x1 = max(lo, a), min(hi, b)
        if x1 > x0:
            total += adaptive_simpson(fn, x0, x1)
    return total


def weekly_step_rate(t, blocks=None):
    """Rate of a weekly step function at time ``t`` by direct lookup."""
    blocks = blocks or weekly_blocks()
    phase = t % 7.0
    for lo, hi, rate in blocks:
        if lo <= phase < hi:
            return rate
    return blocks[-1][2]


def weekly_step_integral(a: float, b: float, blocks=None) -> float:
    """Integral of a weekly step function by walking every block overlap."""
    blocks = blocks or weekly_blocks()
    total = 0.0
    week = math.floor(a / 7.0)
    while week * 7.0 < b:
        base = week * 7.0
        for lo, hi, rate in blocks:
            x0, x1 = max(a, base + lo), min(b, base + hi)
            if x1 > x0:
                total += rate * (x1 - x0)
        week += 1
    return total


def naive_recurrent_integral(period: float, segments, s: float, e: float) -> float:
    """Segment-by-segment antiderivative sum over every period touched by ``[s, e]``.

    ``segments`` holds (start, end, coeffs) with coefficients in ``x = t - start``.
    """
    total = 0.0
    k = math.floor(s / period)
    while k * period < e:
        off = k * period
        for a, b, coeffs in segments:
            lo, hi = max(s, off + a), min(e, off + b)
            if hi > lo:
                x0, x1 = lo - off - a, hi - off - a
                for j, c in enumerate(coeffs):
                    total += c * (x1 ** (j + 1) - x0 ** (j + 1)) / (j + 1)
        k += 1
    return total


def expm(matrix) -> np.ndarray:
    return sp_linalg.expm(np.asarray(matrix, dtype=float))


def generator(exit_rates, jump) -> np.ndarray:
    q = np.asarray(exit_rates, dtype=float)[:, None] * np.asarray(jump, dtype=float)
    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, -q.sum(axis=1))
    return q


def joint_generator(q1, q2) -> np.ndarray:
    """Generator of two independent chains on the product space (first index slowest)."""
    q1, q2 = np.asarray(q1, float), np.asarray(q2, float)
    return np.kron(q1, np.eye(len(q2))) + np.kron(np.eye(len(q1)), q2)


def binary_stay(theta: float, theta_prime: float, big_gamma: float) -> float:
    """Probability of being unchanged after cumulative intensity ``big_gamma`` (two-state chain)."""
    q = np.array([[-theta, theta], [theta_prime, -theta_prime]])
    return float(expm(big_gamma * q)[0, 0])


def ks_brute_force(sample, cdf) -> float:
    """Largest gap between the empirical step function and ``cdf``, checked on both sides of each jump."""
    xs = sorted(float(x) for x in sample)
    n = len(xs)
    worst = 0.0
    for x in xs:
        below = sum(1 for y in xs if y < x) / n
        upto = sum(1 for y in xs if y <= x) / n
        f = float(cdf(x))
        worst = max(worst, abs(upto - f), abs(below - f))
    return worst


def homogeneous_cardinality(lam: float, mu: float, n0: float, span: float) -> float:
    return lam / mu + math.exp(-mu * span) * (n0 - lam / mu)


def homogeneous_surviving_insertions(lam: float, mu: float, span: float) -> float:
    if mu == 0:
        return lam * span
    return lam / mu * (1.0 - math.exp(-mu * span))


def compound_poisson_increments(rng, big_gamma: float, delta: float, sigma2: float, size: int) -> np.ndarray:
    """Direct draws of a sum of Poisson(big_gamma) normal steps."""
    counts = rng.poisson(big_gamma, size=size)
    return rng.normal(counts * delta, np.sqrt(counts * sigma2))


def unit_exponential_cdf(x):
    return 1.0 - math.exp(-x) if x > 0 else 0.0
