"""Attribute-modification models on a transformed time axis.

Each model carries an intensity ``gamma``; the transition law over ``(s, f]`` depends
only on ``Gamma = gamma.integrate(s, f)``.  Every model provides
``matrix_for(Gamma)`` (vectorised over an array of Gamma values), ``states`` and
``change_rates`` (rate multipliers of actual value changes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, NotLumpable, UnknownValue
from .intensity import Constant, IntensityFunction, from_json as intensity_from_json

MAX_DENSE_STATES = 4096
_TAYLOR_TERMS = 18
_SCALED_NORM = 0.5


def expm(matrix: np.ndarray) -> np.ndarray:
    """Matrix exponential by Taylor scaling and squaring."""
    return expm_stack(np.asarray(matrix, dtype=float)[None])[0]


def expm_stack(mats: np.ndarray) -> np.ndarray:
    """Exponential of each matrix in a ``(n, k, k)`` stack.

    The matrix is scaled by ``2**-j`` until its infinity norm is at most 0.5, the
    Taylor series is summed to 18 terms, and the result is squared ``j`` times.
    """
    mats = np.asarray(mats, dtype=float)
    n, k, _ = mats.shape
    norms = np.abs(mats).sum(axis=2).max(axis=1)
    with np.errstate(divide="ignore"):
        squarings = np.where(norms > _SCALED_NORM, np.ceil(np.log2(norms / _SCALED_NORM)), 0).astype(int)
    scaled = mats / (2.0 ** squarings)[:, None, None]
    eye = np.broadcast_to(np.eye(k), mats.shape)
    out = eye + scaled / _TAYLOR_TERMS
    for j in range(_TAYLOR_TERMS - 1, 0, -1):
        out = eye + (scaled @ out) / j
    for level in range(int(squarings.max(initial=0))):
        todo = squarings > level
        if todo.all():
            out = out @ out
        else:
            out[todo] = out[todo] @ out[todo]
    return out


def _clamp(probs: np.ndarray) -> np.ndarray:
    return np.clip(probs, 0.0, 1.0)


def _index(states: Sequence, value) -> int:
    for i, state in enumerate(states):
        if state == value:
            return i
    raise UnknownValue(f"value {value!r} is not in the domain {list(states)!r}")


class AttributeModel:
    states: tuple
    gamma: IntensityFunction

    def transition_matrix(self, s: float, f: float) -> np.ndarray:
        return self.matrix_for(self.gamma.integrate(s, f))

    def matrix_for(self, big_gamma):
        raise NotImplementedError

    def index(self, value) -> int:
        return _index(self.states, value)

    @property
    def size(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class MarkovAttribute(AttributeModel):
    """Finite-state chain with exit rates ``l_u`` and jump probabilities ``P[u][v]``."""

    states: tuple
    exit_rates: tuple[float, ...]
    transition_probs: tuple[tuple[float, ...], ...]
    gamma: IntensityFunction = Constant(1.0)
    _q: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        states = tuple(self.states)
        k = len(states)
        if k == 0:
            raise ValueError("empty state space")
        if k > MAX_DENSE_STATES:
            raise ValueError(f"{k} states exceed the dense limit of {MAX_DENSE_STATES}; use a lumped, overwrite or walk model")
        rates = tuple(float(x) for x in self.exit_rates)
        probs = tuple(tuple(float(x) for x in row) for row in self.transition_probs)
        if len(rates) != k or len(probs) != k or any(len(row) != k for row in probs):
            raise DimensionMismatch("exit rates and transition probabilities must match the state count")
        if any(r < 0 for r in rates):
            raise ValueError("exit rates must be nonnegative")
        jump = np.array(probs)
        if np.any(jump < 0):
            raise ValueError("transition probabilities must be nonnegative")
        sums = jump.sum(axis=1)
        bad = (np.abs(sums - 1.0) > 1e-9) & ~((sums == 0) & (np.array(rates) == 0))
        if np.any(bad):
            raise ValueError("each transition-probability row must sum to 1")
        q = np.array(rates)[:, None] * jump
        np.fill_diagonal(q, 0.0)
        np.fill_diagonal(q, -q.sum(axis=1))
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "exit_rates", rates)
        object.__setattr__(self, "transition_probs", probs)
        object.__setattr__(self, "_q", q)

    @classmethod
    def from_generator(cls, states, q, gamma: IntensityFunction = Constant(1.0)) -> "MarkovAttribute":
        q = np.asarray(q, dtype=float)
        if np.any(np.abs(q.sum(axis=1)) > 1e-12 * max(1.0, np.abs(q).max())):
            raise ValueError("generator rows must sum to zero")
        rates = -np.diag(q)
        jump = np.where(rates[:, None] > 0, q / np.where(rates > 0, rates, 1.0)[:, None], 0.0)
        np.fill_diagonal(jump, 0.0)
        return cls(tuple(states), tuple(rates), tuple(map(tuple, jump)), gamma)

    @property
    def generator(self) -> np.ndarray:
        return self._q.copy()

    @property
    def change_rates(self) -> np.ndarray:
        return -np.diag(self._q)

    def matrix_for(self, big_gamma):
        g = np.atleast_1d(np.asarray(big_gamma, dtype=float))
        out = _clamp(expm_stack(g[:, None, None] * self._q[None]))
        return out[0] if np.ndim(big_gamma) == 0 else out

    def stationary(self) -> np.ndarray:
        k = self.size
        a = np.vstack([self._q.T, np.ones(k)])
        b = np.zeros(k + 1)
        b[-1] = 1.0
        pi, *_ = np.linalg.lstsq(a, b, rcond=None)
        return np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum()

    def to_json(self):
        return {
            "type": "markov",
            "states": list(self.states),
            "exit_rates": list(self.exit_rates),
            "transition_probs": [list(row) for row in self.transition_probs],
            "gamma": self.gamma.to_json(),
        }


@dataclass(frozen=True)
class BinaryLumpAttribute(AttributeModel):
    """Two-state view: 0 = unchanged since the last sync, 1 = changed."""

    theta: float
    theta_prime: float = 0.0
    gamma: IntensityFunction = Constant(1.0)

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "theta_prime", float(self.theta_prime))
        if self.theta < 0 or self.theta_prime < 0:
            raise ValueError("theta and theta_prime must be nonnegative")

    @property
    def states(self):
        return (0, 1)

    @property
    def change_rates(self) -> np.ndarray:
        return np.array([self.theta, self.theta_prime])

    def p_same(self, big_gamma):
        rate = self.theta + self.theta_prime
        if rate == 0:
            return np.ones_like(np.asarray(big_gamma, dtype=float)) if np.ndim(big_gamma) else 1.0
        return (self.theta_prime + self.theta * np.exp(-rate * np.asarray(big_gamma, dtype=float))) / rate

    def matrix_for(self, big_gamma):
        g = np.atleast_1d(np.asarray(big_gamma, dtype=float))
        rate = self.theta + self.theta_prime
        decay = np.exp(-rate * g)
        out = np.empty((len(g), 2, 2))
        if rate == 0:
            out[:] = np.eye(2)
        else:
            out[:, 0, 0] = (self.theta_prime + self.theta * decay) / rate
            out[:, 1, 1] = (self.theta + self.theta_prime * decay) / rate
            out[:, 0, 1] = 1.0 - out[:, 0, 0]
            out[:, 1, 0] = 1.0 - out[:, 1, 1]
        out = _clamp(out)
        return out[0] if np.ndim(big_gamma) == 0 else out

    def as_markov(self) -> MarkovAttribute:
        return MarkovAttribute((0, 1), (self.theta, self.theta_prime), ((0.0, 1.0), (1.0, 0.0)), self.gamma)

    def to_json(self):
        return {"type": "binary", "theta": self.theta, "theta_prime": self.theta_prime, "gamma": self.gamma.to_json()}


@dataclass(frozen=True)
class RandomWalkAttribute(AttributeModel):
    """Numeric attribute changed by IID steps at the events of a Poisson process with rate gamma."""

    delta: float
    sigma2: float
    gamma: IntensityFunction = Constant(1.0)

    def __post_init__(self):
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        if self.sigma2 < 0:
            raise ValueError("step variance must be nonnegative")

    @property
    def states(self):
        raise TypeError("a random-walk attribute has no finite domain")

    @property
    def change_rates(self):
        moves = self.sigma2 > 0 or self.delta != 0
        return np.array([1.0 if moves else 0.0])

    def matrix_for(self, big_gamma):
        raise TypeError("a random-walk attribute has no transition matrix")

    def to_json(self):
        return {"type": "walk", "delta": self.delta, "sigma2": self.sigma2, "gamma": self.gamma.to_json()}


@dataclass(frozen=True)
class OverwriteAttribute(AttributeModel):
    """Each event overwrites the value with a draw from ``omega``, ignoring the old value."""

    states: tuple
    omega: tuple[float, ...]
    exit_rates: tuple[float, ...]
    gamma: IntensityFunction = Constant(1.0)

    def __post_init__(self):
        states = tuple(self.states)
        omega = tuple(float(x) for x in self.omega)
        rates = tuple(float(x) for x in self.exit_rates)
        if len(omega) != len(states) or len(rates) != len(states):
            raise DimensionMismatch("omega and exit rates must match the state count")
        if any(p < 0 for p in omega) or abs(math.fsum(omega) - 1.0) > 1e-12:
            raise ValueError("omega must be a probability distribution")
        if any(r < 0 for r in rates):
            raise ValueError("exit rates must be nonnegative")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "exit_rates", rates)

    @property
    def change_rates(self) -> np.ndarray:
        return np.array(self.exit_rates) * (1.0 - np.array(self.omega))

    @property
    def uniform_rates(self) -> bool:
        return max(self.exit_rates) - min(self.exit_rates) <= 1e-15 * max(1.0, max(self.exit_rates))

    def matrix_for(self, big_gamma, closed_form: bool | None = None):
        """Transition matrix after cumulative intensity ``big_gamma``.

        The closed form (last overwrite wins) is exact only when every value is left
        at the same rate; otherwise the embedded chain is used unless
        ``closed_form=True`` forces the closed form.
        """
        if closed_form is None:
            closed_form = self.uniform_rates
        if not closed_form:
            return as_markov(self).matrix_for(big_gamma)
        g = np.atleast_1d(np.asarray(big_gamma, dtype=float))
        stay = np.exp(-np.array(self.exit_rates)[None, :] * g[:, None])
        out = (1.0 - stay)[:, :, None] * np.array(self.omega)[None, None, :]
        idx = np.arange(self.size)
        out[:, idx, idx] += stay
        out = _clamp(out)
        return out[0] if np.ndim(big_gamma) == 0 else out

    def to_json(self):
        return {
            "type": "overwrite",
            "states": list(self.states),
            "omega": list(self.omega),
            "exit_rates": list(self.exit_rates),
            "gamma": self.gamma.to_json(),
        }


def transition_matrix(m: AttributeModel, s: float, f: float) -> np.ndarray:
    if f < s:
        raise ValueError("transition window must satisfy s <= f")
    return m.transition_matrix(s, f)


def lump(m: MarkovAttribute, partition, tol: float = 1e-9) -> MarkovAttribute:
    """Aggregate states into blocks; ``partition`` is a list of state lists or a label->states map."""
    if isinstance(partition, Mapping):
        labels, blocks = list(partition.keys()), [list(b) for b in partition.values()]
    else:
        blocks = [list(b) for b in partition]
        labels = [tuple(b) if len(b) > 1 else b[0] for b in blocks]
    members = [[m.index(v) for v in block] for block in blocks]
    flat = sorted(i for block in members for i in block)
    if flat != list(range(m.size)):
        raise ValueError("partition must cover every state exactly once")
    q = m._q
    lumped = np.zeros((len(blocks), len(blocks)))
    for a, rows in enumerate(members):
        for b, cols in enumerate(members):
            if a == b:
                continue
            into = q[np.ix_(rows, cols)].sum(axis=1)
            spread = float(into.max() - into.min())
            if spread > tol:
                raise NotLumpable(labels[a], labels[b], spread)
            lumped[a, b] = into.mean()
    np.fill_diagonal(lumped, -lumped.sum(axis=1))
    return MarkovAttribute.from_generator(tuple(labels), lumped, m.gamma)


def binary_transition(b: BinaryLumpAttribute, s: float, f: float) -> tuple[float, float]:
    same = float(b.p_same(b.gamma.integrate(s, f)))
    return same, 1.0 - same


def random_walk_moments(w: RandomWalkAttribute, x0: float, s: float, f: float, printed_variant: bool = False):
    """Mean of ``A(f)`` and the second moment of ``A(f) - A(s)``.

    ``printed_variant=True`` returns ``Gamma*(sigma2 + 2*Gamma*delta**2)`` for the
    second moment, a form that treats the Poisson event count as having variance
    ``Gamma**2``.  The default is the compound-Poisson moment.
    """
    big_gamma = w.gamma.integrate(s, f)
    mean = x0 + big_gamma * w.delta
    if printed_variant:
        second = big_gamma * (w.sigma2 + 2.0 * big_gamma * w.delta**2)
    else:
        second = big_gamma * w.sigma2 + big_gamma * w.delta**2 + big_gamma**2 * w.delta**2
    return mean, second


def overwrite_transition(o: OverwriteAttribute, u, v, s: float, f: float, closed_form: bool | None = None) -> float:
    """Probability of value ``v`` at ``f`` given ``u`` at ``s``.

    With value-dependent exit rates the closed form ignores later overwrites leaving
    ``v`` at a different rate, so the exact chain is used unless ``closed_form=True``.
    """
    i, j = o.index(u), o.index(v)
    big_gamma = o.gamma.integrate(s, f)
    if closed_form is None:
        closed_form = o.uniform_rates
    if not closed_form:
        return float(o.matrix_for(big_gamma, closed_form=False)[i, j])
    stay = math.exp(-o.exit_rates[i] * big_gamma)
    if i == j:
        return stay * (1.0 - o.omega[i]) + o.omega[i]
    return (1.0 - stay) * o.omega[j]


def as_markov(o) -> MarkovAttribute:
    if isinstance(o, MarkovAttribute):
        return o
    if isinstance(o, BinaryLumpAttribute):
        return o.as_markov()
    k = o.size
    rates, probs = [], []
    for i in range(k):
        keep = 1.0 - o.omega[i]
        rates.append(o.exit_rates[i] * keep if keep > 0 else 0.0)
        row = [0.0] * k
        if keep > 0:
            for j in range(k):
                if j != i:
                    row[j] = o.omega[j] / keep
        probs.append(tuple(row))
    return MarkovAttribute(o.states, tuple(rates), tuple(probs), o.gamma)


def compound_transition(ms: Sequence[AttributeModel], us: Sequence, vs: Sequence, s: float, f: float) -> float:
    """Joint transition probability of independent attributes (product of factors)."""
    if not (len(ms) == len(us) == len(vs)):
        raise DimensionMismatch("need one start and one end value per attribute")
    prob = 1.0
    for m, u, v in zip(ms, us, vs):
        prob *= float(m.transition_matrix(s, f)[m.index(u), m.index(v)])
    return prob


def attribute_from_json(spec) -> AttributeModel:
    kind = spec.get("type", "markov")
    gamma = intensity_from_json(spec.get("gamma", {"type": "constant", "rate": 1.0}))
    if kind == "markov":
        return MarkovAttribute(tuple(spec["states"]), tuple(spec["exit_rates"]), tuple(map(tuple, spec["transition_probs"])), gamma)
    if kind == "binary":
        return BinaryLumpAttribute(spec["theta"], spec.get("theta_prime", 0.0), gamma)
    if kind == "walk":
        return RandomWalkAttribute(spec.get("delta", 0.0), spec["sigma2"], gamma)
    if kind == "overwrite":
        return OverwriteAttribute(tuple(spec["states"]), tuple(spec["omega"]), tuple(spec["exit_rates"]), gamma)
    raise ValueError(f"unknown attribute model {kind!r}")
