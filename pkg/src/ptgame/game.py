"""Scenario data model and the deterministic outcome/utility formulas.

Player indices are 0-based throughout the library.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InconsistentPriceError, ScenarioError

DEFAULT_STRATEGY_BOUNDS = (-100.0, 200.0)
P1_TOL = 1e-9


def _frozen(values, name, ndim=1):
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise ScenarioError(f"expected {ndim}-d data, got shape {arr.shape}", name)
    if not np.all(np.isfinite(arr)):
        raise ScenarioError("entries must be finite", name)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Scenario:
    """Static game parameters.

    ``bounds`` has shape (N, 2) holding ``[lo_i, hi_i]``; ``price_bounds`` is ``(p_min, p_max)``.
    Validation is eager: an invalid scenario cannot be constructed.
    """

    a: np.ndarray
    b: np.ndarray
    y: np.ndarray
    support: np.ndarray
    probs: np.ndarray
    bounds: np.ndarray
    price_bounds: tuple[float, float]

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "a", _frozen(self.a, "players.a"))
        set_(self, "b", _frozen(self.b, "players.b"))
        set_(self, "y", _frozen(self.y, "players.y"))
        set_(self, "support", _frozen(self.support, "randomness.support"))
        set_(self, "probs", _frozen(self.probs, "randomness.probs"))
        set_(self, "bounds", _frozen(self.bounds, "players.bounds", ndim=2))
        n = self.a.size
        if n < 2:
            raise ScenarioError("need at least two players", "players.a")
        for name, arr in (("players.b", self.b), ("players.y", self.y)):
            if arr.size != n:
                raise ScenarioError(f"length {arr.size} does not match {n} players", name)
        if self.bounds.shape != (n, 2):
            raise ScenarioError(f"expected shape ({n}, 2), got {self.bounds.shape}", "players.bounds")
        if np.any(self.a <= 0):
            raise ScenarioError("a_i must be positive", "players.a")
        if np.any(self.b < 0):
            raise ScenarioError("b_i must be nonnegative", "players.b")
        if np.any(self.bounds[:, 0] >= self.bounds[:, 1]):
            raise ScenarioError("each interval needs lo < hi", "players.bounds")
        m = self.support.size
        if m < 2:
            raise ScenarioError("need at least two outcomes", "randomness.support")
        if self.probs.size != m:
            raise ScenarioError(f"length {self.probs.size} does not match support size {m}",
                                "randomness.probs")
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > 1e-12:
            raise ScenarioError("must be nonnegative and sum to 1", "randomness.probs")
        mean = float(self.probs @ self.support)
        if float(self.probs @ (self.support - mean) ** 2) <= 0:
            raise ScenarioError("outcome distribution needs positive variance", "randomness.support")
        lo, hi = (float(v) for v in self.price_bounds)
        if not (np.isfinite(lo) and np.isfinite(hi)) or not 0 < lo <= hi:
            raise ScenarioError("need 0 < min <= max", "prices")
        set_(self, "price_bounds", (lo, hi))

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def xi_bar(self) -> float:
        return float(self.probs @ self.support)

    @property
    def lo(self) -> np.ndarray:
        return self.bounds[:, 0]

    @property
    def hi(self) -> np.ndarray:
        return self.bounds[:, 1]

    @property
    def homogeneous(self) -> bool:
        return bool(np.all(self.a == self.a[0]))

    def replace(self, **changes) -> "Scenario":
        fields = dict(a=self.a, b=self.b, y=self.y, support=self.support, probs=self.probs,
                      bounds=self.bounds, price_bounds=self.price_bounds)
        fields.update(changes)
        return Scenario(**fields)

    def permuted(self, order) -> "Scenario":
        """Scenario with players reordered by ``order``."""
        order = np.asarray(order)
        return self.replace(a=self.a[order], b=self.b[order], y=self.y[order],
                            bounds=self.bounds[order])


def make_scenario(a, b, y, support, probs, bounds=None, price_bounds=(1.0, 50.0)) -> Scenario:
    """Build a Scenario; ``bounds`` defaults to [-100, 200] for every player."""
    n = len(a)
    if bounds is None:
        bounds = [DEFAULT_STRATEGY_BOUNDS] * n
    return Scenario(a=a, b=b, y=y, support=support, probs=probs, bounds=bounds,
                    price_bounds=price_bounds)


def case1(bounds=None) -> Scenario:
    """Two-user market study: a=0.5, b=10, y=(7,4), xi in {10, 50} w.p. (0.25, 0.75)."""
    return make_scenario([0.5, 0.5], [10.0, 10.0], [7.0, 4.0], [10.0, 50.0], [0.25, 0.75],
                         bounds=bounds)


def uniform_price(p: float, n: int) -> np.ndarray:
    return np.full(n, float(p))


def as_profile(x, s: Scenario, name="x") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (s.n,):
        raise ValueError(f"{name} must have length {s.n}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")
    return x


def _check_index(i: int, s: Scenario) -> int:
    if not 0 <= i < s.n:
        raise IndexError(f"player index {i} out of range for {s.n} players")
    return i


def usage_benefit(x, s: Scenario) -> float:
    x = as_profile(x, s)
    return float((x.sum() / s.n - s.y.sum() / s.n) ** 2)


def individual_cost(i: int, p_i: float, x_i: float, xi: float, s: Scenario) -> float:
    _check_index(i, s)
    return p_i * x_i + (s.y[i] - x_i) * xi


def outcome(i: int, x, p, xi, s: Scenario):
    """Outcome of player ``i``; ``xi`` may be a scalar or an array of realizations."""
    _check_index(i, s)
    x = as_profile(x, s)
    p = as_profile(p, s, "p")
    base = -s.a[i] * usage_benefit(x, s) + s.b[i] - p[i] * x[i]
    return base - (s.y[i] - x[i]) * np.asarray(xi, dtype=np.float64)


def outcomes(i: int, x, p, s: Scenario) -> np.ndarray:
    """Outcomes of player ``i`` at every support point."""
    return outcome(i, x, p, s.support, s)


def eut_utility(i: int, x, p, s: Scenario) -> float:
    return float(s.probs @ outcomes(i, x, p, s))


def eut_partial(i: int, x, p, s: Scenario) -> float:
    _check_index(i, s)
    x = as_profile(x, s)
    p = as_profile(p, s, "p")
    return float(-2.0 * s.a[i] / s.n**2 * (x.sum() - s.y.sum()) - p[i] + s.xi_bar)


def kappa(p, s: Scenario) -> float | None:
    """(p_1 - xi_bar) / a_1 when p is consistent, else None."""
    p = as_profile(p, s, "p")
    k = (p - s.xi_bar) / s.a
    if np.max(np.abs(k - k[0])) > P1_TOL:
        return None
    return float(k[0])


def potential(x, p, s: Scenario) -> float:
    x = as_profile(x, s)
    k = kappa(p, s)
    if k is None:
        raise InconsistentPriceError("potential is only defined for consistent prices")
    return float(-((x.sum() - s.y.sum()) ** 2) / s.n**2 - k * x.sum())
