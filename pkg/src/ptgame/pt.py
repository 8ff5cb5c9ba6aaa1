"""PT equilibrium machinery: fixed-point map, equilibrium reports, the exponential-tilt
solver for symmetric users, preservation/vanishing checks and a grid best-response oracle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InconsistentPriceError
from .eut import eut_residual, price_consistency
from .game import Scenario, as_profile, eut_partial, outcomes
from .prospect import ValueFunction, pt_partial, pt_utility, tilted_distribution

PT_EQUILIBRIUM = "PT-equilibrium"
EUT_EQUILIBRIUM = "EUT-equilibrium"
NOT_EQUILIBRIUM = "not-equilibrium"


def _vfs(vfs, s: Scenario) -> list[ValueFunction]:
    if isinstance(vfs, ValueFunction):
        return [vfs] * s.n
    vfs = list(vfs)
    if len(vfs) == 1:
        return vfs * s.n
    if len(vfs) != s.n:
        raise ValueError(f"need 1 or {s.n} value functions, got {len(vfs)}")
    return vfs


def fixed_point_map(x, p, vfs, s: Scenario, project=False) -> np.ndarray:
    """Component i: the x_i that zeroes player i's stationarity with the tilt held fixed."""
    x = as_profile(x, s)
    p = as_profile(p, s, "p")
    vfs = _vfs(vfs, s)
    means = np.array([tilted_distribution(i, x, p, vfs[i], s).mean for i in range(s.n)])
    out = s.y.sum() - (x.sum() - x) - s.n**2 / (2.0 * s.a) * (p - means)
    if project:
        out = np.clip(out, s.lo, s.hi)
    return out


def scaled_partial(i: int, x, p, vf: ValueFunction, s: Scenario) -> float:
    """Player i's PT partial divided by the positive weight sum(q v'(J)).

    Same sign and zeros as :func:`pt_partial`, but in price units and free of the overall
    size of v', which can be astronomically large or small for exponential kinds.
    """
    x = as_profile(x, s)
    p = as_profile(p, s, "p")
    g = -2.0 * s.a[i] / s.n**2 * (x.sum() - s.y.sum()) - p[i]
    return float(g + tilted_distribution(i, x, p, vf, s).mean)


@dataclass(frozen=True, eq=False)
class EquilibriumReport:
    """First-order diagnostics of a profile at a price.

    ``partial_residuals`` are absolute values of :func:`scaled_partial`, boundary adjusted:
    at a bound, a partial pushing outward counts as zero. When any player sits on its bound the interior characterization
    (``kappa_gap``, ``sum_gap``) does not apply and classification uses the partials alone.
    """

    profile: np.ndarray
    price: np.ndarray
    partial_residuals: np.ndarray
    kappa_gap: float
    sum_gap: float
    tilted_means: np.ndarray
    boundary_active: bool
    tol: float
    classification: str = field(default=NOT_EQUILIBRIUM)

    @property
    def is_equilibrium(self) -> bool:
        return self.classification != NOT_EQUILIBRIUM

    @property
    def residual(self) -> float:
        """Largest of the residuals that enter the classification."""
        r = float(np.max(self.partial_residuals))
        if not self.boundary_active:
            r = max(r, self.kappa_gap, self.sum_gap)
        return r


def pt_report(x, p, vfs, s: Scenario, tol=1e-6, label=PT_EQUILIBRIUM) -> EquilibriumReport:
    x = as_profile(x, s)
    p = as_profile(p, s, "p")
    vfs = _vfs(vfs, s)
    means = np.array([tilted_distribution(i, x, p, vfs[i], s).mean for i in range(s.n)])
    partials = -2.0 * s.a / s.n**2 * (x.sum() - s.y.sum()) - p + means
    at_hi = x >= s.hi
    at_lo = x <= s.lo
    adjusted = np.where((at_hi & (partials > 0)) | (at_lo & (partials < 0)), 0.0, np.abs(partials))
    kappas = (p - means) / s.a
    kappa_gap = float(np.max(np.abs(kappas - kappas[0])))
    sum_gap = abs(float(x.sum() - s.y.sum() + s.n**2 / 2 * kappas[0]))
    boundary = bool(np.any(at_hi | at_lo))
    ok = adjusted.max() <= tol and (boundary or (kappa_gap <= tol and sum_gap <= tol))
    return EquilibriumReport(x.copy(), p.copy(), adjusted, kappa_gap, sum_gap, means, boundary,
                             tol, label if ok else NOT_EQUILIBRIUM)


def eut_report(x, p, s: Scenario, tol=1e-6) -> EquilibriumReport:
    """:func:`pt_report` with every player using the identity value function."""
    return pt_report(x, p, ValueFunction.identity(), s, tol, label=EUT_EQUILIBRIUM)


def exp_tilt_mean(delta: float, lam: float, s: Scenario) -> float:
    """Mean of the support under weights q_k exp(lam * delta * xi_k)."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    e = lam * delta * s.support
    w = s.probs * np.exp(e - e.max())
    return float(w @ s.support / w.sum())


@dataclass(frozen=True, eq=False)
class SymmetricSolveResult:
    beta: float
    profile: np.ndarray
    residual: float
    iterations: int


def _scalar_price(p, s: Scenario) -> float:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim == 0:
        return float(p)
    p = as_profile(p, s, "p")
    if np.any(p != p[0]):
        raise ValueError("symmetric solve needs a uniform price vector")
    return float(p[0])


def symmetric_exponential_solve(p, lam: float, s: Scenario, width=1e-12, cap=1e6):
    """Unique PT equilibrium for homogeneous users with exponential value functions.

    Solves ``p - (2a/N) beta = F(beta)`` by bisection, where ``F`` is :func:`exp_tilt_mean`;
    the left side decreases and ``F`` increases, so the root is unique. Returns x = y - beta.
    """
    if not s.homogeneous:
        raise ValueError("symmetric solve needs homogeneous a")
    price = _scalar_price(p, s)
    slope = 2.0 * s.a[0] / s.n

    def h(beta):
        return price - slope * beta - exp_tilt_mean(beta, lam, s)

    lo, hi = -10.0, 10.0
    while h(lo) < 0:
        lo *= 2
        if lo < -cap:
            raise RuntimeError("bisection bracket expansion failed below -%g" % cap)
    while h(hi) > 0:
        hi *= 2
        if hi > cap:
            raise RuntimeError("bisection bracket expansion failed above %g" % cap)
    it = 0
    while hi - lo > width and it < 200:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if h(mid) > 0:
            lo = mid
        else:
            hi = mid
        it += 1
    beta = lo if abs(h(lo)) <= abs(h(hi)) else hi
    return SymmetricSolveResult(beta, s.y - beta, abs(h(beta)), it)


def asymmetry_set(x, p, s: Scenario) -> set[int]:
    """Players whose outcomes vary with the randomness, i.e. x_i != y_i."""
    x = as_profile(x, s)
    return {int(i) for i in np.flatnonzero(x != s.y)}


@dataclass(frozen=True)
class PlayerVerdict:
    player: int
    symmetric: bool
    local_shape: str
    partial: float
    scaled_partial: float
    predicted: str
    predicted_sign: int
    verdict: str
    sign: int

    @property
    def consistent(self) -> bool:
        return self.verdict == self.predicted and self.sign == self.predicted_sign


def _local_shape(vf: ValueFunction, z) -> str:
    """Shape of v over the realized outcomes: linear when v' takes a single value there."""
    vp = vf.derivative(z)
    if vf.curvature == "linear" or np.ptp(vp) <= 1e-12 * np.max(np.abs(vp)):
        return "linear"
    return vf.curvature


def vanishing_check(x, p, vfs, s: Scenario, tol=1e-9) -> list[PlayerVerdict]:
    """Per-player preserved/vanished verdict for an EUT equilibrium under PT preferences.

    A player whose outcomes do not depend on the randomness, or whose value function is
    linear over them, keeps a zero partial (preserved). Otherwise the partial is nonzero
    with the sign of y_k - x_k (concave v_k) or its opposite (convex v_k). The sign is read
    off the partial divided by the positive weight sum(q v'), which is scale free.
    """
    x = as_profile(x, s)
    p = as_profile(p, s, "p")
    if not price_consistency(p, s).consistent:
        raise InconsistentPriceError("vanishing check needs a consistent price vector")
    if eut_residual(x, p, s) > 1e-9:
        raise ValueError("profile is not an EUT equilibrium at this price")
    vfs = _vfs(vfs, s)
    out = []
    for k in range(s.n):
        symmetric = bool(x[k] == s.y[k])
        shape = "linear" if symmetric else _local_shape(vfs[k], outcomes(k, x, p, s))
        d = pt_partial(k, x, p, vfs[k], s)
        scaled = scaled_partial(k, x, p, vfs[k], s)
        if symmetric or shape == "linear":
            predicted, psign = "preserved", 0
        else:
            psign = int(np.sign(s.y[k] - x[k])) * (1 if shape == "concave" else -1)
            predicted = "vanished"
        sign = 0 if abs(scaled) <= tol else int(np.sign(scaled))
        out.append(PlayerVerdict(k, symmetric, shape, d, scaled, predicted, psign,
                                 "preserved" if sign == 0 else "vanished", sign))
    return out


def linear_derivative_singleton_check(s: Scenario, c: float, d: float) -> bool:
    """True when b_i - xi_bar y_i < -d/c for every player, which pins the PT equilibria at
    the mean price down to the single point y."""
    if not (c < 0 and d > 0):
        raise ValueError(f"need c < 0 < d, got c={c}, d={d}")
    return bool(np.all(s.b - s.xi_bar * s.y < -d / c))


def best_response_oracle(i: int, x_minus_i, p, vf: ValueFunction, s: Scenario,
                         grid_points=2001) -> float:
    """Grid argmax of player i's PT utility over its interval, refined once around the best
    cell. ``x_minus_i`` may be a full profile (entry i ignored) or the N-1 other entries."""
    if grid_points < 100:
        raise ValueError("grid_points must be >= 100")
    others = np.asarray(x_minus_i, dtype=np.float64)
    if others.size == s.n - 1:
        others = np.insert(others, i, 0.0)
    x = as_profile(others, s).copy()
    p = as_profile(p, s, "p")

    def argmax_on(grid):
        vals = np.empty(grid.size)
        for k, g in enumerate(grid):
            x[i] = g
            try:
                vals[k] = pt_utility(i, x, p, vf, s)
            except DomainError as exc:
                raise DomainError(f"best response grid hits invalid outcome at x_{i}={g!r}: {exc}",
                                  x.copy()) from exc
        return int(np.argmax(vals))

    coarse = np.linspace(s.lo[i], s.hi[i], grid_points)
    k = argmax_on(coarse)
    fine = np.linspace(coarse[max(k - 1, 0)], coarse[min(k + 1, grid_points - 1)], grid_points)
    return float(fine[argmax_on(fine)])


def eut_best_response(i: int, x, p, s: Scenario) -> float:
    """Clamped closed-form EUT best response of player i."""
    x = as_profile(x, s)
    p = as_profile(p, s, "p")
    raw = x[i] + eut_partial(i, x, p, s) * s.n**2 / (2.0 * s.a[i])
    return float(min(max(raw, s.lo[i]), s.hi[i]))

