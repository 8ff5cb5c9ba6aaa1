"""Closed-form EUT equilibrium machinery: consistent prices, the equilibrium hyperplane,
fair selection and the coordinator's closed-form prices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InconsistentPriceError
from .game import Scenario, as_profile, kappa


@dataclass(frozen=True)
class EutEquilibriumSet:
    """Equilibria at a price: the hyperplane ``sum(x) == target_sum`` when consistent."""

    consistent: bool
    kappa: float | None = None
    target_sum: float | None = None

    def contains(self, x, tol=1e-9) -> bool:
        return self.consistent and abs(float(np.sum(x)) - self.target_sum) <= tol


def price_consistency(p, s: Scenario) -> EutEquilibriumSet:
    k = kappa(p, s)
    if k is None:
        return EutEquilibriumSet(False)
    return EutEquilibriumSet(True, k, float(s.y.sum() - s.n**2 / 2 * k))


def eut_residual(x, p, s: Scenario) -> float:
    """Distance of sum(x) from the equilibrium hyperplane; inf when p is inconsistent."""
    x = as_profile(x, s)
    eq = price_consistency(p, s)
    if not eq.consistent:
        return float("inf")
    return abs(float(x.sum() - s.y.sum() + s.n**2 / 2 * eq.kappa))


def sample_equilibria(p, s: Scenario, count: int, seed=0) -> list[np.ndarray]:
    """Seeded points of the equilibrium hyperplane inside the strategy box.

    Each draw is uniform in the box with the last coordinate shifted onto the hyperplane;
    draws that leave the box are retried, up to ``100 * count`` attempts.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    eq = price_consistency(p, s)
    if not eq.consistent:
        return []
    lo, hi = s.lo, s.hi
    if not lo.sum() <= eq.target_sum <= hi.sum():
        return []
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(100 * count):
        x = lo + (hi - lo) * rng.random(s.n)
        x[-1] = eq.target_sum - x[:-1].sum()
        if lo[-1] <= x[-1] <= hi[-1]:
            out.append(x)
            if len(out) == count:
                break
    return out


def jain_index(deltas) -> float:
    """(1 + (sum d)^2) / (1 + N sum d^2): equals 1 for an equal split."""
    d = np.asarray(deltas, dtype=np.float64)
    if d.size == 0:
        raise ValueError("jain_index needs a nonempty vector")
    return float((1.0 + d.sum() ** 2) / (1.0 + d.size * np.dot(d, d)))


def fair_selection(p, s: Scenario) -> np.ndarray:
    """Hyperplane point closest to y: x_i = y_i - N (p_i - xi_bar) / (2 a_i)."""
    p = as_profile(p, s, "p")
    if not price_consistency(p, s).consistent:
        raise InconsistentPriceError("fair selection needs a consistent price vector")
    return s.y - s.n * (p - s.xi_bar) / (2.0 * s.a)


def _homogeneous_a(s: Scenario) -> float:
    if not s.homogeneous:
        raise ValueError("closed-form coordinator prices assume homogeneous users")
    return float(s.a[0])


def eut_price_A(s: Scenario) -> float:
    """Maximizer of the symmetry-plus-revenue objective at the fair equilibrium."""
    a, n = _homogeneous_a(s), s.n
    if not n > 2 * a:
        raise ValueError(f"needs N > 2a, got N={n}, a={a}")
    return float(np.clip(s.xi_bar / (1.0 - 4.0 * a * a / n**2), *s.price_bounds))


def eut_price_B(s: Scenario) -> float:
    """Maximizer of total user utility at the fair equilibrium."""
    a, n = _homogeneous_a(s), s.n
    if not n > 2:
        raise ValueError(f"needs N > 2, got N={n}")
    raw = s.xi_bar - a * s.y.sum() / (n**2 * (n / 2.0 - 1.0))
    return float(np.clip(raw, *s.price_bounds))
