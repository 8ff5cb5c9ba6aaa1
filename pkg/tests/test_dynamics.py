import numpy as np
import pytest

from ptgame.dynamics import (Constant, CoordinatorConfig, Diminishing, GradientPlayConfig,
                             coordinator_ascent, coordinator_utility, gradient_play, multi_start,
                             random_starts, select_equilibrium)
from ptgame.errors import DomainError
from ptgame.eut import jain_index
from ptgame.game import case1, eut_utility, uniform_price
from ptgame.prospect import ValueFunction
from ptgame.pt import eut_report, symmetric_exponential_solve

P40 = uniform_price(40.0, 2)
EXP = ValueFunction.exponential(0.01)


def potential_steps(xs, p, s):
    """Exact change of the potential between consecutive iterates, written as a product so
    it carries no cancellation error from the large absolute values."""
    k = (p[0] - s.xi_bar) / s.a[0]
    S = xs.sum(axis=1)
    dS = np.diff(S)
    return -dS * (S[1:] + S[:-1] - 2 * s.y.sum()) / s.n**2 - k * dS


class TestSchedules:
    def test_params(self):
        assert Constant(0.1).params == (0.1, 0.0)
        assert Diminishing(1.0, 0.6).params == (1.0, 0.6)

    @pytest.mark.parametrize("make", [lambda: Constant(0.0), lambda: Diminishing(1.0, 1.5),
                                      lambda: Diminishing(-1.0)])
    def test_invalid(self, make):
        with pytest.raises(ValueError):
            make()


class TestGradientPlay:
    def test_eut_converges_to_hyperplane(self, s):
        tr = gradient_play(GradientPlayConfig(Constant(0.05), init=[0, 0]), P40, None, s)
        assert tr.converged
        assert abs(tr.final.sum() - 11) < 1e-4

    def test_pt_exponential_price_20(self, s):
        x0 = random_starts(s, 1, seed=5)[0]
        tr = gradient_play(GradientPlayConfig(Constant(0.05), init=x0), uniform_price(20, 2), EXP, s)
        assert tr.converged
        np.testing.assert_allclose(tr.final, [11.75, 8.75], atol=0.25)

    def test_no_movement_at_equilibrium(self, s):
        tr = gradient_play(GradientPlayConfig(Constant(0.05), init=s.y), P40,
                           ValueFunction.log_gain(), s)
        assert tr.converged and tr.iterations <= s.n
        np.testing.assert_array_equal(tr.final, s.y)

    def test_deterministic(self, s):
        cfg = GradientPlayConfig(Constant(0.05), init=[150.0, -80.0], log_every=100)
        a = gradient_play(cfg, uniform_price(30, 2), EXP, s)
        b = gradient_play(cfg, uniform_price(30, 2), EXP, s)
        np.testing.assert_array_equal(a.final, b.final)
        assert [t.iteration for t in a.iterates] == [t.iteration for t in b.iterates]

    def test_potential_monotone(self, s):
        for price in (38.0, 42.0):
            p = uniform_price(price, 2)
            for x0 in random_starts(s, 5, seed=int(price)):
                cfg = GradientPlayConfig(Constant(0.01), init=x0, log_every=1)
                tr = gradient_play(cfg, p, None, s)
                xs = np.array([t.value for t in tr.iterates])
                assert potential_steps(xs, p, s).min() >= -1e-12

    def test_diminishing_schedule(self, s):
        cfg = GradientPlayConfig(Diminishing(1.0, 0.6), init=[0, 0], max_iterations=200_000)
        tr = gradient_play(cfg, uniform_price(38, 2), None, s)
        assert abs(tr.final.sum() - 19) < 1e-4

    def test_max_iterations_reported(self, s):
        tr = gradient_play(GradientPlayConfig(Constant(0.05), init=[-100, -100], max_iterations=10),
                           P40, None, s)
        assert not tr.converged and tr.iterations == 10

    def test_domain_error(self, s):
        cfg = GradientPlayConfig(Constant(0.05), init=[144.75, -99.18])
        with pytest.raises(DomainError) as exc:
            gradient_play(cfg, P40, ValueFunction.linear_derivative(-0.001, 1.0), s)
        assert exc.value.profile is not None

    def test_init_outside_box(self, s):
        with pytest.raises(ValueError):
            gradient_play(GradientPlayConfig(init=[500.0, 0.0]), P40, None, s)

    def test_log_every(self, s):
        tr = gradient_play(GradientPlayConfig(Constant(0.05), init=[0, 0], log_every=50), P40,
                           None, s)
        its = [t.iteration for t in tr.iterates]
        assert its[0] == 0 and its[-1] == tr.iterations
        assert all(b - a <= 50 for a, b in zip(its, its[1:]))


class TestMultiStart:
    def test_eut_many_points(self, s):
        res = multi_start(P40, None, s, 50)
        assert len(res) > 1
        for x in res.profiles:
            assert abs(x.sum() - 11) < 1e-4

    def test_exponential_single_cluster(self, s):
        res = multi_start(uniform_price(30, 2), EXP, s, 50)
        assert len(res) == 1 and res.cluster_sizes == [50]
        np.testing.assert_allclose(res[0].profile, symmetric_exponential_solve(30, 0.01, s).profile,
                                   atol=1e-4)

    def test_nothing_converges(self, s):
        res = multi_start(P40, None, s, 8, GradientPlayConfig(max_iterations=2))
        assert len(res) == 0 and res.dropped == 8
        assert res.status_counts["max_iterations"] == 8

    def test_domain_runs_dropped(self, s):
        res = multi_start(P40, ValueFunction.linear_derivative(-0.001, 1.0), s, 20)
        assert res.status_counts["domain_error"] > 0
        assert res.dropped >= res.status_counts["domain_error"]
        np.testing.assert_allclose(res.profiles, [[7, 4]], atol=1e-3)

    def test_seeded(self, s):
        a = multi_start(P40, None, s, 10, seed=4)
        b = multi_start(P40, None, s, 10, seed=4)
        np.testing.assert_array_equal(a.profiles, b.profiles)
        assert a.run_ids == b.run_ids


class TestSelection:
    def test_single(self, s):
        rep = eut_report([7, 4], P40, s)
        assert select_equilibrium([rep], "jain", P40, s) is rep

    def test_jain(self, s):
        p = uniform_price(38, 2)
        got = select_equilibrium([[15.0, 4.0], [11.0, 8.0]], "jain", p, s)
        np.testing.assert_array_equal(got, [11.0, 8.0])
        assert jain_index([4, 4]) > jain_index([8, 0])

    def test_max_j0b(self, s):
        cands = [[7.0, 4.0], [9.0, 4.0]]
        totals = [eut_utility(0, c, P40, s) + eut_utility(1, c, P40, s) for c in cands]
        got = select_equilibrium(cands, "max_j0b", P40, s)
        assert got == cands[int(np.argmax(totals))]

    def test_tie_break(self, s):
        got = select_equilibrium([[9.0, 2.0], [5.0, 6.0]], "jain", P40, s)
        assert got == [5.0, 6.0]

    def test_errors(self, s):
        with pytest.raises(ValueError):
            select_equilibrium([], "jain", P40, s)
        with pytest.raises(ValueError):
            select_equilibrium([[7, 4]], "max_j0c", P40, s)


class TestCoordinatorUtility:
    def test_at_reference(self, s):
        assert coordinator_utility("J0A", [3.0, 4.0], s.y, s) == 25.0

    def test_values(self, s):
        assert coordinator_utility("J0A", uniform_price(38, 2), [11, 8], s) == 2856.0
        assert coordinator_utility("J0B", P40, [7, 4], s) == pytest.approx(-420.0, abs=1e-12)

    def test_unknown(self, s):
        with pytest.raises(ValueError):
            coordinator_utility("J1", P40, s.y, s)


class TestCoordinator:
    def test_single_round(self, s):
        tr = coordinator_ascent(CoordinatorConfig(max_rounds=1, restarts=10), None, s)
        assert len(tr.rounds) == 1
        assert tr.rounds[0].price == 25.5
        assert tr.final_price == tr.rounds[0].next_price

    def test_eut_revenue_objective(self, s):
        tr = coordinator_ascent(CoordinatorConfig(restarts=10), None, s)
        assert tr.converged
        assert tr.final_price == pytest.approx(50.0, abs=1e-3)

    def test_deterministic(self, s):
        cc = CoordinatorConfig(restarts=5, max_rounds=3, objective="J0B", init_price=20.0)
        a = coordinator_ascent(cc, EXP, s)
        b = coordinator_ascent(cc, EXP, s)
        assert [r.price for r in a.rounds] == [r.price for r in b.rounds]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            CoordinatorConfig(selection="best")
        with pytest.raises(ValueError):
            CoordinatorConfig(price_step=0.0)

    def test_bounds_respected(self, s):
        tr = coordinator_ascent(CoordinatorConfig(restarts=5, objective="J0B", price_step=100.0),
                                EXP, s)
        lo, hi = s.price_bounds
        assert all(lo <= r.next_price <= hi for r in tr.rounds)
        assert case1().price_bounds == (1.0, 50.0)


class TestLogGainAbovePriceRange:
    """Above the mean price the log-gain game has a single stationary point, off the
    equal-shortfall line; gradient play must land on it."""

    FROZEN = {53: (-2.425, -1.728), 55: (-5.062, -4.395), 60: (-14.855, -14.255)}

    @staticmethod
    def oracle(price, s):
        from scipy.optimize import fsolve

        def grad(x):
            S = x.sum() - s.y.sum()
            out = []
            for i in range(2):
                z = -s.a[i] * (S / 2) ** 2 + s.b[i] - price * x[i] - (s.y[i] - x[i]) * s.support
                vp = np.where(z >= 0, 1 / (1 + np.maximum(z, 0)), 1.0)
                out.append(np.sum(s.probs * (-s.a[i] * S / 2 - price + s.support) * vp))
            return out
        return fsolve(grad, [0.0, 0.0], xtol=1e-13)

    @pytest.mark.parametrize("price", [53, 55, 60])
    def test_matches_oracle(self, s, price):
        want = self.oracle(price, s)
        np.testing.assert_allclose(want, self.FROZEN[price], atol=1e-3)
        tr = gradient_play(GradientPlayConfig(Constant(0.2)), uniform_price(price, 2),
                           ValueFunction.log_gain(), s)
        assert tr.converged
        np.testing.assert_allclose(tr.final, want, atol=1e-5)
