import numpy as np
import pytest

from coloedr.analysis import (best_response_scan, check_bounds_mandatory, check_bounds_voluntary,
                              check_modified_cost_bounds, exhaustive_equilibrium_search, kkt_residuals,
                              nash_certificate, random_mandatory_scenario, random_voluntary_scenario,
                              run_bound_sweep)
from coloedr.cost_models import (AnticipationContext, QuadraticCost, QueueingCost, QueueingCostParams,
                                 WorstCaseSpec, make_worst_case_instance)
from coloedr.mandatory_market import (MandatoryScenario, solve_price_anticipating, solve_price_taking,
                                      solve_social_optimum)
from coloedr.voluntary_market import VoluntaryScenario, solve_vdr


def _three(scn):
    return solve_price_taking(scn), solve_price_anticipating(scn), solve_social_optimum(scn)


class TestBestResponse:
    def test_equilibria_are_certified(self, quad_mandatory):
        for mode, solve in (("taking", solve_price_taking), ("anticipating", solve_price_anticipating)):
            out = solve(quad_mandatory)
            cert = nash_certificate(out, quad_mandatory, mode)
            assert cert.holds(1e-4 * out.price * quad_mandatory.delta)
            assert all(e.evaluations >= 2000 for e in cert.entries)

    def test_perturbed_bids_improvable(self, quad_mandatory):
        for mode, solve in (("taking", solve_price_taking), ("anticipating", solve_price_anticipating)):
            out = solve(quad_mandatory)
            bids = [b * 1.5 for b in out.bids]
            price = out.price if mode == "taking" else None
            entry = best_response_scan(bids, 0, quad_mandatory, mode, price=price)
            assert entry.epsilon > 1e-3

    def test_voluntary_equilibria(self, quad_voluntary):
        for mode in ("taking", "anticipating"):
            out = solve_vdr(quad_voluntary, mode)
            assert nash_certificate(out, quad_voluntary, mode).max_epsilon <= 1e-4 * out.price

    def test_grid_floor(self, quad_mandatory):
        with pytest.raises(ValueError):
            best_response_scan([0.5, 0.5], 0, quad_mandatory, "taking", grid=10, price=0.8)


class TestExhaustiveSearch:
    def test_quadratic_taking_cluster(self, quad_mandatory):
        found = exhaustive_equilibrium_search(quad_mandatory, grid=200, mode="taking")
        assert len(found.clusters) == 1
        assert found.contains((0.64, 0.64))

    def test_quadratic_anticipating_cluster(self, quad_mandatory):
        found = exhaustive_equilibrium_search(quad_mandatory, grid=200, mode="anticipating")
        out = solve_price_anticipating(quad_mandatory)
        assert len(found.clusters) == 1
        assert found.cluster_of(out.bids) == 0

    def test_worst_case_cluster(self):
        spec = WorstCaseSpec(0.2, 1.0, 1.0, 2)
        scn = MandatoryScenario(1.0, 1.0, make_worst_case_instance(spec))
        found = exhaustive_equilibrium_search(scn, grid=200, mode="anticipating")
        # tenant 1 supplies epsilon/2 at price 0.95, tenant 2 nothing
        assert found.contains((0.95 * 0.9, 0.95))

    def test_guards(self, quad_mandatory):
        scn3 = MandatoryScenario(1.0, 1.0, [QuadraticCost(1.0)] * 3)
        with pytest.raises(ValueError):
            exhaustive_equilibrium_search(scn3)
        with pytest.raises(ValueError):
            exhaustive_equilibrium_search(quad_mandatory, grid=600)


class TestKkt:
    def test_solver_outputs_are_stationary(self, quad_mandatory, quad_voluntary):
        for out in _three(quad_mandatory):
            assert kkt_residuals(out, quad_mandatory) < 1e-12
        for mode in ("taking", "anticipating", "social"):
            assert kkt_residuals(solve_vdr(quad_voluntary, mode), quad_voluntary) < 1e-12

    def test_wrong_characterisation_detected(self, quad_mandatory):
        taking = solve_price_taking(quad_mandatory)
        assert kkt_residuals(taking, quad_mandatory, "anticipating") > 1e-3
        assert kkt_residuals(taking, quad_mandatory, "social") > 1e-3


class TestBoundReports:
    def test_mandatory_rows(self, quad_mandatory):
        rep = check_bounds_mandatory(*_three(quad_mandatory), quad_mandatory)
        assert rep.passed
        assert rep["price_ratio_taking"].observed == pytest.approx(0.8)
        assert rep["welfare_loss_taking"].observed == pytest.approx(0.76 - 0.75)
        assert "pass" in rep.to_text()
        assert rep.to_record()["passed"] is True

    def test_rows_not_applicable_without_diesel_at_optimum(self):
        # target well inside tenant capacity: diesel stays off even at the optimum
        scn = MandatoryScenario(0.2, 1.0, [QuadraticCost(0.5, 0.3), QuadraticCost(0.5, 0.3)])
        outs = _three(scn)
        assert outs[2].diesel == 0.0
        rep = check_bounds_mandatory(*outs, scn)
        assert all(not e.applies for e in rep.entries)
        assert rep.passed and "n/a" in rep.to_text()

    def test_voluntary_rows(self, quad_voluntary):
        outs = [solve_vdr(quad_voluntary, m) for m in ("taking", "anticipating", "social")]
        rep = check_bounds_voluntary(*outs, quad_voluntary)
        assert rep.passed
        assert rep["price_ratio_taking"].observed == pytest.approx(0.8)
        assert rep["extra_profit_taking"].observed == pytest.approx(0.08)
        assert rep["extra_profit_taking"].upper == pytest.approx(0.125)
        assert rep["welfare_loss_taking"].upper == pytest.approx(0.0625)
        assert rep["operator_utility_social"].observed == 0.0

    def test_dominant_tenant(self):
        scn = VoluntaryScenario(1.0, [QuadraticCost(1.0, 0.5), QuadraticCost(1.0, 0.01)], [20.0, 0.05])
        outs = [solve_vdr(scn, m) for m in ("taking", "anticipating", "social")]
        rep = check_bounds_voluntary(*outs, scn)
        assert rep.passed
        assert rep["price_anticipating_minus_taking"].upper == pytest.approx(scn.max_share / 2)

    def test_failure_surfaces(self, quad_mandatory):
        t, a, s = _three(quad_mandatory)
        rep = check_bounds_mandatory(a, t, s, quad_mandatory)
        assert not rep.passed
        assert "price_anticipating_minus_taking" in [e.name for e in rep.failures]


class TestModifiedCostBounds:
    def test_quadratic(self):
        rep = check_modified_cost_bounds(QuadraticCost(2.0), AnticipationContext.mandatory(1.0, 2, 1.0), 200)
        assert rep.passed and rep.points == 200

    def test_worst_case_piecewise(self):
        c = make_worst_case_instance(WorstCaseSpec(0.2, 1.0, 1.0, 2))[0]
        assert check_modified_cost_bounds(c, AnticipationContext.mandatory(1.0, 2, 1.0)).passed

    def test_case_study_queueing(self):
        c = QueueingCost(QueueingCostParams(2000, 0.3, 0.1, 1.0, 0.15, 0.5))
        ctx = AnticipationContext.mandatory(0.45, 3, 400.0)
        assert check_modified_cost_bounds(c, ctx).passed

    def test_grid_floor(self):
        with pytest.raises(ValueError):
            check_modified_cost_bounds(QuadraticCost(1.0), AnticipationContext.mandatory(1.0, 2, 1.0), 10)


class TestGenerators:
    def test_mandatory_draws_keep_diesel_on(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            scn = random_mandatory_scenario(rng, (2, 5))
            assert solve_social_optimum(scn).diesel > 0.0
            k = scn.alpha / (2 * scn.n)
            assert all(c.marginal(0.0) >= k * (1 - 1e-12) for c in scn.tenants)

    def test_voluntary_draws_respect_floor(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            scn = random_voluntary_scenario(rng, (2, 5))
            for i, c in enumerate(scn.tenants):
                assert c.marginal(0.0) >= scn.context(i).markup * (1 - 1e-12)

    def test_small_sweeps(self):
        assert run_bound_sweep(30, seed=9).passed
        assert run_bound_sweep(30, seed=9, voluntary=True).passed

    def test_seeded_sweep_is_deterministic(self):
        a, b = run_bound_sweep(10, seed=2), run_bound_sweep(10, seed=2)
        assert (a.worst_margin, a.worst_kkt) == (b.worst_margin, b.worst_kkt)
