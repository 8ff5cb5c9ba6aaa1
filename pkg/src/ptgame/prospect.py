"""Prospect-theoretic value functions, decision weights and the PT utilities of the game."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .game import Scenario, as_profile, eut_partial, outcomes

from .kernels import CONVEX_EXPONENTIAL, EXPONENTIAL, IDENTITY, LINEAR_DERIVATIVE, LOG_GAIN

KIND_NAMES = {
    IDENTITY: "identity",
    LOG_GAIN: "log_gain",
    EXPONENTIAL: "exponential",
    LINEAR_DERIVATIVE: "linear_derivative",
    CONVEX_EXPONENTIAL: "convex_exponential",
}


@dataclass(frozen=True)
class ValueFunction:
    """Outcome-to-value map ``v`` with its derivative.

    Build instances through the classmethods; ``p0``/``p1`` carry the kind's parameters
    (lambda for the exponential kinds, (c, d) for the linear-derivative kind).
    """

    kind: int
    p0: float = 0.0
    p1: float = 0.0

    @classmethod
    def identity(cls):
        return cls(IDENTITY)

    @classmethod
    def log_gain(cls):
        """log(1+z) on gains, z on losses."""
        return cls(LOG_GAIN)

    @classmethod
    def exponential(cls, lam: float):
        """1 - exp(-lam z): uniformly risk averse."""
        if not lam > 0:
            raise ValueError(f"exponential value function needs lambda > 0, got {lam}")
        return cls(EXPONENTIAL, float(lam))

    @classmethod
    def linear_derivative(cls, c: float, d: float):
        """v'(z) = c z + d with v(0) = 0; valid while v'(z) > 0, i.e. z < -d/c."""
        if not (c < 0 and d > 0):
            raise ValueError(f"linear-derivative value function needs c < 0 < d, got c={c}, d={d}")
        return cls(LINEAR_DERIVATIVE, float(c), float(d))

    @classmethod
    def convex_exponential(cls, mu: float):
        """(exp(mu z) - 1) / mu: strictly convex and increasing."""
        if not mu > 0:
            raise ValueError(f"convex exponential needs mu > 0, got {mu}")
        return cls(CONVEX_EXPONENTIAL, float(mu))

    @property
    def name(self) -> str:
        return KIND_NAMES[self.kind]

    @property
    def curvature(self) -> str:
        """Global shape: 'linear', 'concave' or 'convex'."""
        if self.kind == IDENTITY:
            return "linear"
        if self.kind == CONVEX_EXPONENTIAL:
            return "convex"
        return "concave"

    @property
    def upper_limit(self) -> float:
        """Supremum of the valid domain."""
        if self.kind == LINEAR_DERIVATIVE:
            return -self.p1 / self.p0
        return np.inf

    def _check(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.kind == LINEAR_DERIVATIVE and np.any(z >= self.upper_limit):
            bad = z[z >= self.upper_limit] if z.ndim else z
            raise DomainError(f"outcome {np.ravel(bad)[0]!r} outside linear-derivative domain "
                              f"z < {self.upper_limit!r}")
        return z

    def value(self, z):
        z = self._check(z)
        if self.kind == IDENTITY:
            out = z.copy()
        elif self.kind == LOG_GAIN:
            out = np.where(z >= 0, np.log1p(np.maximum(z, 0.0)), z)
        elif self.kind == EXPONENTIAL:
            out = 1.0 - np.exp(-self.p0 * z)
        elif self.kind == LINEAR_DERIVATIVE:
            out = 0.5 * self.p0 * z * z + self.p1 * z
        else:
            out = np.expm1(self.p0 * z) / self.p0
        return out[()] if out.ndim == 0 else out

    def derivative(self, z):
        z = self._check(z)
        if self.kind == IDENTITY:
            out = np.ones_like(z)
        elif self.kind == LOG_GAIN:
            out = np.where(z >= 0, 1.0 / (1.0 + np.maximum(z, 0.0)), 1.0)
        elif self.kind == EXPONENTIAL:
            out = self.p0 * np.exp(-self.p0 * z)
        elif self.kind == LINEAR_DERIVATIVE:
            out = self.p0 * z + self.p1
        else:
            out = np.exp(self.p0 * z)
        return out[()] if out.ndim == 0 else out

    def log_derivative(self, z):
        """log v'(z), finite wherever v' would overflow."""
        z = self._check(z)
        if self.kind == IDENTITY:
            out = np.zeros_like(z)
        elif self.kind == LOG_GAIN:
            out = np.where(z >= 0, -np.log1p(np.maximum(z, 0.0)), 0.0)
        elif self.kind == EXPONENTIAL:
            out = np.log(self.p0) - self.p0 * z
        elif self.kind == LINEAR_DERIVATIVE:
            out = np.log(self.p0 * z + self.p1)
        else:
            out = self.p0 * z
        return out[()] if out.ndim == 0 else out


def value(vf: ValueFunction, z):
    return vf.value(z)


def value_derivative(vf: ValueFunction, z):
    return vf.derivative(z)


@dataclass(frozen=True)
class WeightingFunction:
    """Probability weighting ``pi``; ``gamma`` is None for the identity weight."""

    gamma: float | None = None

    @classmethod
    def identity(cls):
        return cls(None)

    @classmethod
    def tversky_kahneman(cls, gamma: float):
        if not 0.28 < gamma <= 1:
            raise ValueError(f"Tversky-Kahneman gamma must lie in (0.28, 1], got {gamma}")
        return cls(float(gamma))

    def __call__(self, p):
        p = np.clip(np.asarray(p, dtype=np.float64), 0.0, 1.0)
        if self.gamma is None or self.gamma == 1.0:
            return p
        g = self.gamma
        pg = p**g
        return pg / (pg + (1.0 - p) ** g) ** (1.0 / g)


def _check_simplex(q, name="q"):
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1 or q.size == 0 or np.any(q < 0) or abs(q.sum() - 1.0) > 1e-12:
        raise ValueError(f"{name} must be a probability vector")
    return q


def decision_weights(w: WeightingFunction, q) -> np.ndarray:
    """Rank-dependent weights: differences of ``pi`` over cumulative probabilities."""
    q = _check_simplex(q)
    cum = np.minimum(np.cumsum(q), 1.0)
    cum[-1] = 1.0
    pi = w(np.concatenate(([0.0], cum)))
    return np.diff(pi)


@dataclass(frozen=True, eq=False)
class Prospect:
    """Outcomes ordered from most to least attractive, with their probabilities."""

    outcomes: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.outcomes, dtype=np.float64)
        q = _check_simplex(self.probs, "probs")
        if z.shape != q.shape:
            raise ValueError("outcomes and probs must have equal length")
        if np.any(np.diff(z) > 0):
            raise ValueError("outcomes must be sorted non-increasing")
        object.__setattr__(self, "outcomes", z)
        object.__setattr__(self, "probs", q)


def prospect_value(g: Prospect, vf: ValueFunction, w: WeightingFunction | None = None) -> float:
    w = w or WeightingFunction.identity()
    return float(decision_weights(w, g.probs) @ vf.value(g.outcomes))


@dataclass(frozen=True, eq=False)
class TiltedDistribution:
    probs: np.ndarray
    mean: float


def tilted_distribution(i: int, x, p, vf: ValueFunction, s: Scenario) -> TiltedDistribution:
    """Outcome distribution reweighted by v' of each realized outcome."""
    z = outcomes(i, x, p, s)
    if vf.kind == IDENTITY:
        probs = s.probs.copy()
    else:
        logw = np.log(s.probs, where=s.probs > 0, out=np.full(s.probs.shape, -np.inf))
        logw = logw + vf.log_derivative(z)
        w = np.exp(logw - logw.max())
        total = w.sum()
        assert total > 0
        probs = w / total
    return TiltedDistribution(probs, float(probs @ s.support))


def pt_utility(i: int, x, p, vf: ValueFunction, s: Scenario) -> float:
    return float(s.probs @ vf.value(outcomes(i, x, p, s)))


def pt_partial(i: int, x, p, vf: ValueFunction, s: Scenario) -> float:
    if vf.kind == IDENTITY:
        return eut_partial(i, x, p, s)
    x = as_profile(x, s)
    p = as_profile(p, s, "p")
    g = -2.0 * s.a[i] / s.n**2 * (x.sum() - s.y.sum()) - p[i]
    vp = vf.derivative(outcomes(i, x, p, s))
    return float(np.sum(s.probs * (g + s.support) * vp))

