"""Gradient play, multi-start equilibrium discovery, equilibrium selection and the
coordinator's price ascent."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import DomainError
from .eut import jain_index
from .game import Scenario, as_profile, eut_utility, uniform_price
from .prospect import ValueFunction
from .pt import _vfs, eut_report, pt_report

log = logging.getLogger(__name__)

SELECTIONS = ("jain", "max_j0a", "max_j0b")
OBJECTIVES = ("J0A", "J0B")


@dataclass(frozen=True)
class Constant:
    eps: float = 0.05

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("step size must be positive")

    @property
    def params(self):
        return self.eps, 0.0


@dataclass(frozen=True)
class Diminishing:
    """eps_n = eps0 / n**exponent."""

    eps0: float = 1.0
    exponent: float = 0.6

    def __post_init__(self):
        if not self.eps0 > 0 or not 0.5 < self.exponent <= 1:
            raise ValueError("need eps0 > 0 and exponent in (0.5, 1]")

    @property
    def params(self):
        return self.eps0, self.exponent


@dataclass(frozen=True)
class GradientPlayConfig:
    """Settings for round-robin gradient play.

    With ``scaled`` (the default) each PT step divides the partial by the positive weight
    sum_k q_k v'(J_k); this keeps the fixed points and step directions but makes step sizes
    comparable across value functions. Convergence is always judged on the scaled partial.
    """

    step: Constant | Diminishing = Constant()
    max_iterations: int = 200_000
    convergence_tol: float = 1e-8
    init: np.ndarray | None = None
    project_to_box: bool = True
    scaled: bool = True
    log_every: int = 0
    backend: str | None = None

    def with_(self, **changes) -> "GradientPlayConfig":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class TracePoint:
    iteration: int
    value: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class RunTrace:
    iterates: list[TracePoint]
    final: np.ndarray
    converged: bool
    iterations: int
    residual: float


_STATUS = {kernels.OK: "converged", kernels.MAX_ITER: "max_iterations",
           kernels.DOMAIN: "domain_error", kernels.NONFINITE: "diverged"}


def _mode_arrays(vfs, s: Scenario):
    vfs = [ValueFunction.identity()] * s.n if vfs is None else _vfs(vfs, s)
    kinds = np.array([vf.kind for vf in vfs], dtype=np.int64)
    par = np.array([[vf.p0, vf.p1] for vf in vfs], dtype=np.float64)
    return kinds, par


def _run(X0, p, vfs, s: Scenario, cfg: GradientPlayConfig):
    if cfg.max_iterations < s.n:
        raise ValueError("max_iterations must be at least the number of players")
    kinds, par = _mode_arrays(vfs, s)
    eps0, eps_exp = cfg.step.params
    return kernels.run_batch(
        X0, s.a, s.b, s.y, as_profile(p, s, "p"), s.support, s.probs, kinds, par, s.lo, s.hi,
        eps0=eps0, eps_exp=eps_exp, max_iter=cfg.max_iterations, tol=cfg.convergence_tol,
        project=cfg.project_to_box, scaled=cfg.scaled, log_every=cfg.log_every,
        backend=cfg.backend)


def gradient_play(cfg: GradientPlayConfig, p, vfs, s: Scenario) -> RunTrace:
    """Round-robin gradient play: player ((n-1) mod N) moves at iteration n.

    ``vfs=None`` plays the EUT game. Raises DomainError if a PT value function is evaluated
    outside its domain; the offending iterate is attached to the exception.
    """
    init = s.y if cfg.init is None else as_profile(cfg.init, s, "init")
    if cfg.project_to_box and (np.any(init < s.lo) or np.any(init > s.hi)):
        raise ValueError("init lies outside the strategy box")
    X, iters, status, resid, (tr_x, tr_it, tr_res, n_log) = _run(init[None, :], p, vfs, s, cfg)
    if status[0] == kernels.DOMAIN:
        raise DomainError(f"value function domain violated near iteration {iters[0]}", X[0].copy())
    iterates = [TracePoint(int(tr_it[0, k]), tr_x[0, k].copy(), float(tr_res[0, k]))
                for k in range(n_log[0])]
    return RunTrace(iterates, X[0].copy(), bool(status[0] == kernels.OK), int(iters[0]),
                    float(resid[0]))


@dataclass(eq=False)
class MultiStartResult:
    """Deduplicated equilibria from seeded random starts, sorted lexicographically."""

    reports: list
    run_ids: list[int]
    cluster_sizes: list[int]
    dropped: int
    status_counts: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.reports)

    def __iter__(self):
        return iter(self.reports)

    def __getitem__(self, k):
        return self.reports[k]

    @property
    def profiles(self) -> np.ndarray:
        return np.array([r.profile for r in self.reports]).reshape(len(self.reports), -1)


def random_starts(s: Scenario, n_starts: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return s.lo + (s.hi - s.lo) * rng.random((n_starts, s.n))


def multi_start(p, vfs, s: Scenario, n_starts=50, cfg: GradientPlayConfig | None = None,
                seed=0, dedup_tol=1e-3, report_tol=1e-5) -> MultiStartResult:
    """Gradient play from ``n_starts`` seeded uniform starts in the box.

    Runs that do not converge (or leave a value function's domain) are dropped and counted.
    Converged finals are sorted, then merged greedily when within ``dedup_tol`` in the
    max-norm of an existing representative, so the output does not depend on run order.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    cfg = cfg or GradientPlayConfig()
    p = as_profile(p, s, "p")
    X0 = random_starts(s, n_starts, seed)
    X, _, status, _, _ = _run(X0, p, vfs, s, cfg.with_(log_every=0))
    counts = {name: int(np.sum(status == code)) for code, name in _STATUS.items()}
    ok = np.flatnonzero(status == kernels.OK)
    order = sorted(ok, key=lambda k: tuple(X[k]))
    reps, ids, sizes = [], [], []
    for k in order:
        for j, r in enumerate(reps):
            if np.max(np.abs(X[k] - r)) < dedup_tol:
                sizes[j] += 1
                break
        else:
            reps.append(X[k])
            ids.append(int(k))
            sizes.append(1)
    reports, keep_ids, keep_sizes = [], [], []
    for x, k, n in zip(reps, ids, sizes):
        rep = eut_report(x, p, s, report_tol) if vfs is None else pt_report(x, p, vfs, s, report_tol)
        if rep.is_equilibrium:
            reports.append(rep)
            keep_ids.append(k)
            keep_sizes.append(n)
        else:
            log.warning("converged run %d failed the equilibrium check (residual %.3g)", k,
                        rep.residual)
    dropped = n_starts - int(sum(keep_sizes))
    return MultiStartResult(reports, keep_ids, keep_sizes, dropped, counts)


def coordinator_utility(tag: str, p, x, s: Scenario) -> float:
    """J0A = -||x - y||^2 + ||p||^2 (symmetry plus revenue); J0B = total user EUT utility."""
    x = as_profile(x, s)
    p = as_profile(p, s, "p")
    if tag == "J0A":
        return float(-np.sum((x - s.y) ** 2) + np.dot(p, p))
    if tag == "J0B":
        return float(sum(eut_utility(i, x, p, s) for i in range(s.n)))
    raise ValueError(f"unknown coordinator objective {tag!r}")


def _score(selection, p, x, s):
    if selection == "jain":
        return jain_index(np.asarray(x) - s.y)
    if selection == "max_j0a":
        return coordinator_utility("J0A", p, x, s)
    if selection == "max_j0b":
        return coordinator_utility("J0B", p, x, s)
    raise ValueError(f"unknown selection {selection!r}; expected one of {SELECTIONS}")


def select_equilibrium(candidates, selection, p, s: Scenario):
    """Candidate maximizing the selection score; ties go to the lexicographically smallest x.

    Candidates may be EquilibriumReports or bare profiles; the winner is returned as given.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("no candidates to select from")
    p = as_profile(p, s, "p")
    xs = [np.asarray(getattr(c, "profile", c), dtype=np.float64) for c in candidates]
    scores = np.array([_score(selection, p, x, s) for x in xs])
    best = scores.max()
    tied = [k for k in range(len(xs)) if scores[k] >= best - 1e-12 * max(1.0, abs(best))]
    return candidates[min(tied, key=lambda k: tuple(xs[k]))]


@dataclass(frozen=True)
class CoordinatorConfig:
    price_step: float = 0.5
    restarts: int = 50
    selection: str = "jain"
    objective: str = "J0A"
    max_rounds: int = 100
    price_tol: float = 1e-6
    seed: int = 0
    init_price: float | None = None
    gradient: GradientPlayConfig = GradientPlayConfig()

    def __post_init__(self):
        if not self.price_step > 0:
            raise ValueError("price_step must be positive")
        if self.max_rounds < 1 or self.restarts < 1:
            raise ValueError("max_rounds and restarts must be >= 1")
        if self.selection not in SELECTIONS:
            raise ValueError(f"selection must be one of {SELECTIONS}")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")


@dataclass(frozen=True, eq=False)
class CoordinatorRound:
    round: int
    price: float
    selected_x: np.ndarray
    objective: float
    gradient: float
    next_price: float
    n_equilibria: int


@dataclass(eq=False)
class CoordinatorTrace:
    rounds: list[CoordinatorRound]
    final_price: float
    converged: bool
    aborted: str | None = None


class CoordinatorAbort(RuntimeError):
    def __init__(self, message, trace: CoordinatorTrace):
        super().__init__(message)
        self.trace = trace


def _resolve_at(price, x_sel, vfs, s, cfg):
    trace = gradient_play(cfg.with_(init=np.clip(x_sel, s.lo, s.hi), log_every=0),
                          uniform_price(price, s.n), vfs, s)
    if not trace.converged:
        log.warning("re-solve at price %.6g did not converge (residual %.3g)", price,
                    trace.residual)
    return trace.final


def coordinator_ascent(cc: CoordinatorConfig, vfs, s: Scenario) -> CoordinatorTrace:
    """Projected price ascent on J0 evaluated at the selected equilibrium.

    Each round: multi-start at the current uniform price, select, then differentiate
    J0(p, x(p)) centrally, re-solving the selected equilibrium at p +- h by gradient play
    warm-started from it. Stops when the projected update moves less than ``price_tol``.
    """
    p_lo, p_hi = s.price_bounds
    price = 0.5 * (p_lo + p_hi) if cc.init_price is None else float(cc.init_price)
    price = float(np.clip(price, p_lo, p_hi))
    rounds: list[CoordinatorRound] = []
    for t in range(cc.max_rounds):
        p = uniform_price(price, s.n)
        found = multi_start(p, vfs, s, cc.restarts, cc.gradient, seed=cc.seed + t)
        if not found.reports:
            trace = CoordinatorTrace(rounds, price, False, f"no equilibria found at price {price!r}")
            raise CoordinatorAbort(trace.aborted, trace)
        x_sel = select_equilibrium(found.reports, cc.selection, p, s).profile
        h = 1e-3 * max(1.0, abs(price))
        try:
            x_up = _resolve_at(price + h, x_sel, vfs, s, cc.gradient)
            x_dn = _resolve_at(price - h, x_sel, vfs, s, cc.gradient)
        except DomainError as exc:
            trace = CoordinatorTrace(rounds, price, False, f"re-solve failed: {exc}")
            raise CoordinatorAbort(trace.aborted, trace) from exc
        grad = (coordinator_utility(cc.objective, uniform_price(price + h, s.n), x_up, s)
                - coordinator_utility(cc.objective, uniform_price(price - h, s.n), x_dn, s)) / (2 * h)
        new_price = float(np.clip(price + cc.price_step * grad, p_lo, p_hi))
        rounds.append(CoordinatorRound(t, price, x_sel.copy(),
                                       coordinator_utility(cc.objective, p, x_sel, s), grad,
                                       new_price, len(found)))
        moved = abs(new_price - price)
        price = new_price
        if moved < cc.price_tol:
            return CoordinatorTrace(rounds, price, True)
    return CoordinatorTrace(rounds, price, False)
