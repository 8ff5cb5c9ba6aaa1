"""Acceptance criteria, each at its stated tolerance. Every test records a PASS/FAIL line that
is repeated in the terminal summary. Run directly with ``python3 tests/test_acceptance.py``."""

import time

import numpy as np
import pytest
from scipy.optimize import brentq

from ptgame.dynamics import (Constant, CoordinatorConfig, GradientPlayConfig, coordinator_ascent,
                             gradient_play, multi_start, random_starts)
from ptgame.eut import eut_price_A, eut_price_B, eut_residual, fair_selection, sample_equilibria
from ptgame.game import (case1, eut_partial, eut_utility, make_scenario, outcomes, potential,
                         uniform_price)
from ptgame.prospect import ValueFunction, pt_partial, pt_utility, tilted_distribution
from ptgame.pt import (exp_tilt_mean, linear_derivative_singleton_check, pt_report,
                       symmetric_exponential_solve, vanishing_check)

from conftest import central_diff, random_scenario, record

REFERENCE_PATH = {2: (23.34, 20.34), 5: (18.95, 15.95), 10: (15.17, 12.17), 20: (11.75, 8.75),
                  30: (9.44, 6.44), 40: (7.0, 4.0), 50: (2.62, -0.38)}


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def _oracle_profile(price, lam, s):
    def h(beta):
        e = lam * beta * s.support
        w = s.probs * np.exp(e - e.max())
        return price - 2 * s.a[0] / s.n * beta - w @ s.support / w.sum()
    return s.y - brentq(h, -1e4, 1e4, xtol=1e-14)


def test_criterion_01_symmetric_exponential_path():
    s = case1()
    t0 = time.perf_counter()
    sols = {p: symmetric_exponential_solve(p, 0.01, s) for p in REFERENCE_PATH}
    elapsed = time.perf_counter() - t0
    worst = max(np.max(np.abs(sols[p].profile - REFERENCE_PATH[p])) for p in REFERENCE_PATH)
    at40 = np.max(np.abs(sols[40].profile - [7.0, 4.0]))
    oracle_gap = max(np.max(np.abs(_oracle_profile(p, 0.01, s) - sols[p].profile))
                     for p in REFERENCE_PATH)
    # with lambda = 0.1 the same path is missed by more than the tolerance
    miss_01 = max(np.max(np.abs(_oracle_profile(p, 0.1, s) - REFERENCE_PATH[p]))
                  for p in REFERENCE_PATH)
    ok = worst <= 0.25 and at40 <= 1e-6 and elapsed < 1.0 and oracle_gap < 1e-9 and miss_01 > 0.25
    record(1, "symmetric exponential path", ok,
           f"max dev {worst:.4f}, p=40 dev {at40:.1e}, {elapsed:.3f}s, oracle gap {oracle_gap:.1e}, "
           f"lambda=0.1 misses by {miss_01:.2f}")


def test_criterion_02_symmetric_structure(rng):
    s = case1()
    worst_res, asym = 0.0, 0
    for p in np.linspace(1, 50, 50):
        for lam in (0.001, 0.01, 0.1, 1.0):
            sol = symmetric_exponential_solve(p, lam, s)
            d = s.y - sol.profile
            asym += d[0] != d[1]
            worst_res = max(worst_res, abs(p - s.a[0] * sol.beta - exp_tilt_mean(sol.beta, lam, s)))
    clusters = []
    for _ in range(20):
        p, lam = rng.uniform(1, 50), rng.uniform(0.005, 0.05)
        clusters.append(len(multi_start(uniform_price(p, 2), ValueFunction.exponential(lam), s, 50,
                                        seed=int(rng.integers(1 << 20)))))
    ok = asym == 0 and worst_res < 1e-10 and clusters == [1] * 20
    record(2, "symmetric structure and uniqueness", ok,
           f"asymmetric outputs {asym}, max residual {worst_res:.1e}, clusters {sorted(set(clusters))}")


def test_criterion_03_eut_closed_forms(rng):
    worst = 0.0
    for _ in range(100):
        sc = random_scenario(rng)
        p = sc.xi_bar + rng.uniform(-5, 5) * sc.a
        expected = sc.y - sc.n * (p - sc.xi_bar) / (2 * sc.a)
        worst = max(worst, np.max(np.abs(fair_selection(p, sc) - expected)))
    s = case1()
    n4 = make_scenario([0.5] * 4, [10] * 4, [7, 4, 6, 5], [10, 50], [0.25, 0.75])
    pa, pb = eut_price_A(s), eut_price_B(n4)
    final = coordinator_ascent(CoordinatorConfig(), None, s).final_price
    ok = worst <= 1e-9 and pa == 50.0 and abs(pb - 39.3125) <= 1e-9 and abs(final - 50) <= 1e-3
    record(3, "EUT closed forms", ok,
           f"fair selection gap {worst:.1e}, price A {pa}, price B {pb}, ascent {final:.6f}")


def _potential_steps(xs, p, s):
    k = (p[0] - s.xi_bar) / s.a[0]
    S = xs.sum(axis=1)
    dS = np.diff(S)
    return -dS * (S[1:] + S[:-1] - 2 * s.y.sum()) / s.n**2 - k * dS


def test_criterion_04_gradient_play():
    s = case1()
    worst_res, worst_step, slow = 0.0, 0.0, 0
    for price in (38.0, 40.0, 42.0):
        p = uniform_price(price, 2)
        for x0 in random_starts(s, 100, seed=int(price)):
            cfg = GradientPlayConfig(Constant(0.01), max_iterations=100_000, init=x0, log_every=1)
            tr = gradient_play(cfg, p, None, s)
            slow += not tr.converged
            worst_res = max(worst_res, eut_residual(tr.final, p, s))
            xs = np.array([t.value for t in tr.iterates])
            worst_step = min(worst_step, _potential_steps(xs, p, s).min())
    ok = slow == 0 and worst_res < 1e-4 and worst_step >= -1e-12
    record(4, "EUT gradient play", ok,
           f"unconverged {slow}, max hyperplane residual {worst_res:.1e}, "
           f"most negative potential step {worst_step:.1e}")


def test_criterion_05_potential_identity(rng):
    worst = 0.0
    for _ in range(1000):
        sc = random_scenario(rng)
        p = sc.xi_bar + rng.uniform(-5, 5) * sc.a
        x = rng.uniform(-50, 50, sc.n)
        i = int(rng.integers(sc.n))
        x2 = x.copy()
        x2[i] = rng.uniform(-50, 50)
        d_util = eut_utility(i, x, p, sc) - eut_utility(i, x2, p, sc)
        worst = max(worst, abs(d_util - sc.a[i] * (potential(x, p, sc) - potential(x2, p, sc))))
    record(5, "weighted potential identity", worst < 1e-9, f"max gap {worst:.1e}")


_KINDS = {
    "identity": lambda r: ValueFunction.identity(),
    "log_gain": lambda r: ValueFunction.log_gain(),
    "exponential": lambda r: ValueFunction.exponential(r.uniform(0.001, 0.02)),
    "linear_derivative": lambda r: ValueFunction.linear_derivative(-r.uniform(5e-4, 2e-3),
                                                                   r.uniform(0.5, 2.0)),
    "convex_exponential": lambda r: ValueFunction.convex_exponential(r.uniform(0.001, 0.02)),
}


def test_criterion_06_gradient_correctness(rng):
    worst = {}
    for name, make in _KINDS.items():
        done, err = 0, 0.0
        while done < 500:
            sc = random_scenario(rng)
            vf = make(rng)
            x = rng.uniform(-20, 40, sc.n)
            p = rng.uniform(1, 60, sc.n)
            i = int(rng.integers(sc.n))
            if np.max(outcomes(i, x, p, sc)) > 0.9 * vf.upper_limit:
                continue
            fd = central_diff(lambda z: pt_utility(i, z, p, vf, sc), x, i, h=1e-4)
            exact = pt_partial(i, x, p, vf, sc)
            err = max(err, abs(fd - exact) / max(abs(exact), 1.0))
            done += 1
        worst[name] = err
    err = 0.0
    for _ in range(500):
        sc = random_scenario(rng)
        x = rng.uniform(-20, 40, sc.n)
        p = rng.uniform(1, 60, sc.n)
        i = int(rng.integers(sc.n))
        fd = central_diff(lambda z: eut_utility(i, z, p, sc), x, i, h=1e-4)
        exact = eut_partial(i, x, p, sc)
        err = max(err, abs(fd - exact) / max(abs(exact), 1.0))
    worst["eut"] = err
    ok = max(worst.values()) < 1e-5
    record(6, "partials against finite differences", ok,
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_07_preservation_and_vanishing(rng):
    s = case1()
    p40 = uniform_price(40.0, 2)
    concave = [lambda: ValueFunction.log_gain(),
               lambda: ValueFunction.exponential(rng.uniform(0.001, 0.2)),
               lambda: ValueFunction.linear_derivative(-rng.uniform(1e-4, 1e-2),
                                                       rng.uniform(0.5, 5.0))]
    worst = 0.0
    for k in range(20):
        rep = pt_report(s.y, p40, concave[k % 3](), s)
        worst = max(worst, rep.residual)
    violations, counted = {"concave": 0, "convex": 0}, {"concave": 0, "convex": 0}
    for shape, make in (("concave", lambda: ValueFunction.exponential(rng.uniform(0.002, 0.05))),
                        ("convex", lambda: ValueFunction.convex_exponential(
                            rng.uniform(0.002, 0.05)))):
        while counted[shape] < 200:
            sc = random_scenario(rng)
            p = sc.xi_bar + rng.uniform(-2, 2) * sc.a
            pts = sample_equilibria(p, sc, 1, seed=int(rng.integers(1 << 30)))
            if not pts or np.all(pts[0] == sc.y):
                continue
            counted[shape] += 1
            verdicts = vanishing_check(pts[0], p, make(), sc)
            violations[shape] += sum(not v.consistent for v in verdicts)
    ok = worst < 1e-12 and violations == {"concave": 0, "convex": 0}
    record(7, "preservation and vanishing", ok,
           f"max residual at reference {worst:.1e}, sign-law violations {violations}")


def test_criterion_08_linear_derivative_singleton():
    s = case1()
    check = linear_derivative_singleton_check(s, -0.001, 1.0)
    res = multi_start(uniform_price(s.xi_bar, 2), ValueFunction.linear_derivative(-0.001, 1.0), s,
                      50)
    close = all(np.max(np.abs(x - [7.0, 4.0])) <= 1e-3 for x in res.profiles)
    ok = check and len(res) == 1 and close
    record(8, "linear-derivative singleton", ok,
           f"condition {check}, clusters {len(res)}, runs {res.status_counts}")


def test_criterion_09_tilt(rng):
    kinds = [ValueFunction.log_gain(), ValueFunction.exponential(0.05),
             ValueFunction.linear_derivative(-0.001, 2.0), ValueFunction.convex_exponential(0.05)]
    sum_err = tilt_err = loss_err = 0.0
    losses = 0
    for k in range(2000):
        sc = random_scenario(rng)
        x = rng.uniform(-20, 40, sc.n)
        p = rng.uniform(1, 60, sc.n)
        i = int(rng.integers(sc.n))
        vf = kinds[k % 4]
        if np.max(outcomes(i, x, p, sc)) < vf.upper_limit:
            sum_err = max(sum_err, abs(tilted_distribution(i, x, p, vf, sc).probs.sum() - 1))
        lam = rng.uniform(0.001, 0.1)
        e = lam * (sc.y[i] - x[i]) * sc.support
        w = sc.probs * np.exp(e - e.max())
        t = tilted_distribution(i, x, p, ValueFunction.exponential(lam), sc)
        tilt_err = max(tilt_err, np.max(np.abs(t.probs - w / w.sum())))
        if np.max(outcomes(i, x, p, sc)) < 0:
            losses += 1
            loss_err = max(loss_err, abs(pt_partial(i, x, p, ValueFunction.log_gain(), sc)
                                         - eut_partial(i, x, p, sc)))
    ok = sum_err <= 1e-12 and tilt_err <= 1e-12 and loss_err <= 1e-12 and losses > 100
    record(9, "tilted distributions", ok,
           f"sum error {sum_err:.1e}, exponential closed form {tilt_err:.1e}, "
           f"loss region gap {loss_err:.1e} over {losses} samples")


def test_criterion_10_log_gain_multistart():
    s = case1()
    vf = ValueFunction.log_gain()
    p40 = uniform_price(40.0, 2)
    res40 = multi_start(p40, vf, s, 50)
    all_pass = sum(res40.cluster_sizes) == res40.status_counts["converged"]
    worst = max(r.residual for r in res40.reports)
    near = min(abs(x.sum() - 11.0) / np.sqrt(2) for x in res40.profiles)
    # the stationary point at p = 60 sits far from the origin, so a larger constant step is used
    res60 = multi_start(uniform_price(60.0, 2), vf, s, 50, GradientPlayConfig(Constant(0.2)))
    gaps = [abs((s.y - x)[0] - (s.y - x)[1]) for x in res60.profiles]
    part_a = all_pass and worst < 1e-5 and near <= 0.3
    part_b = len(gaps) > 0 and max(gaps) < 0.3
    record(10, "log-gain multi-start", part_a and part_b,
           f"p=40: {len(res40)} clusters, max residual {worst:.1e}, nearest to hyperplane "
           f"{near:.2e} -> {'ok' if part_a else 'fails'}; p=60: clusters "
           f"{[tuple(round(float(v), 3) for v in x) for x in res60.profiles]}, shortfall gaps "
           f"{[round(float(g), 3) for g in gaps]} -> {'ok' if part_b else 'fails'}")


def test_criterion_11_coordinator_pt_endpoints():
    s = case1()
    vf = ValueFunction.exponential(0.01)
    a = coordinator_ascent(CoordinatorConfig(objective="J0A", selection="max_j0a"), vf, s)
    b = coordinator_ascent(CoordinatorConfig(objective="J0B"), vf, s)
    ok = abs(a.final_price - 50) <= 1e-3 and abs(b.final_price - 1) <= 1e-3
    record(11, "coordinator endpoints under exponential preferences", ok,
           f"J0A -> {a.final_price:.6f}, J0B -> {b.final_price:.6f}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s"]))
