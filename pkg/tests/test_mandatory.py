import math

import pytest
from scipy import optimize

from coloedr.clearing import clear
from coloedr.cost_models import ConfigError, NullCost, PiecewiseLinearCost, QuadraticCost
from coloedr.mandatory_market import (MandatoryScenario, bid_cap, bid_floor, clearing_price,
                                      denormalize_outcome, denormalize_pue, diesel_activation_threshold,
                                      diesel_response, normalize_pue, operator_cost, recover_bids,
                                      scenario_from_record, scenario_to_record, solve_diesel_only,
                                      solve_mandatory, solve_price_anticipating, solve_price_taking,
                                      solve_social_optimum, supply, tenant_payoff)
from coloedr.unbounded import NEG_UNBOUNDED

COEFS = (1.0, 2.0, 4.0)


def three_quadratics():
    return MandatoryScenario(1.0, 1.0, [QuadraticCost(a) for a in COEFS])


def _balance(out, scn):
    return abs(sum(out.reductions) + out.diesel - scn.delta) / scn.delta


class TestProtocol:
    def test_supply_and_price(self):
        assert supply(0.64, 0.8, 1.0) == pytest.approx(0.2)
        assert clearing_price([0.64, 0.64], 0.6, 1.0) == pytest.approx(0.8)
        with pytest.raises(ZeroDivisionError):
            supply(1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            clearing_price([1.0], 0.0, 1.0)

    def test_diesel_response_minimises_operator_cost(self, quad_mandatory):
        # brute force over y of p(y) * (delta - y) + alpha * y
        b = [0.5, 0.7]
        grid = [i / 20000 for i in range(20001)]
        cost = [clearing_price(b, y, 1.0) * (1.0 - y) + y for y in grid]
        best = grid[cost.index(min(cost))]
        assert diesel_response(b, quad_mandatory) == pytest.approx(best, abs=1e-4)

    def test_diesel_response_clamps(self, quad_mandatory):
        assert diesel_response([0.01, 0.01], quad_mandatory) == 0.0
        assert diesel_response([50.0, 50.0], quad_mandatory) == 1.0

    def test_activation_threshold(self, quad_mandatory):
        b = [0.3, 0.3]
        cut = diesel_activation_threshold(b, quad_mandatory)
        cheap = MandatoryScenario(1.0, cut * 0.99, quad_mandatory.tenants)
        dear = MandatoryScenario(1.0, cut * 1.01, quad_mandatory.tenants)
        assert diesel_response(b, cheap) > 0.0
        assert diesel_response(b, dear) == 0.0

    def test_bids_round_trip(self, quad_mandatory):
        bids = recover_bids(0.8, [0.2, 0.2], quad_mandatory)
        assert bids == pytest.approx((0.64, 0.64))
        assert recover_bids(0.8, [1.0, 1.0], quad_mandatory) == (0.0, 0.0)

    def test_bid_floor_and_cap(self, quad_mandatory):
        assert bid_floor(0.4, quad_mandatory) == pytest.approx(0.6)
        assert bid_floor(2.0, quad_mandatory) == 0.0
        # best-response cap with the other bid at zero is alpha*delta/N
        assert bid_cap([0.0, 0.0], 0, quad_mandatory) == pytest.approx(0.5)

    def test_operator_cost(self, quad_mandatory):
        assert operator_cost(0.8, 0.6, quad_mandatory) == pytest.approx(0.92)

    def test_payoff_modes(self, quad_mandatory):
        b = [0.64, 0.64]
        assert tenant_payoff("taking", 0, b, quad_mandatory, price=0.8) == pytest.approx(0.08)
        assert tenant_payoff("anticipating", 0, b, quad_mandatory) == pytest.approx(0.08)
        with pytest.raises(ValueError):
            tenant_payoff("taking", 0, b, quad_mandatory)

    def test_payoff_beyond_capacity(self):
        scn = MandatoryScenario(1.0, 1.0, [QuadraticCost(1.0, capacity=0.3), QuadraticCost(1.0)])
        assert tenant_payoff("taking", 0, [0.1, 0.5], scn, price=0.8) is NEG_UNBOUNDED


class TestClosedFormInstances:
    def test_two_tenant_taking_and_social(self, quad_mandatory):
        t = solve_price_taking(quad_mandatory)
        s = solve_social_optimum(quad_mandatory)
        assert (t.price, t.diesel) == pytest.approx((0.8, 0.6), abs=1e-10)
        assert t.reductions == pytest.approx((0.2, 0.2), abs=1e-10)
        assert (s.price, s.diesel) == pytest.approx((1.0, 0.5), abs=1e-10)
        assert s.reductions == pytest.approx((0.25, 0.25), abs=1e-10)

    def test_three_tenant_taking_against_algebra(self):
        # s_n = p / (2 a_n) and y = N*delta*p/alpha - (N-1)*delta, balance gives p
        scn = three_quadratics()
        inv = sum(1.0 / (2.0 * a) for a in COEFS)
        p = 3.0 / (inv + 3.0)
        out = solve_price_taking(scn)
        assert out.price == pytest.approx(p, abs=1e-10)
        assert out.diesel == pytest.approx(3.0 * p - 2.0, abs=1e-10)
        assert out.reductions == pytest.approx([p / (2 * a) for a in COEFS], abs=1e-10)

    def test_three_tenant_social(self):
        out = solve_social_optimum(three_quadratics())
        assert out.price == pytest.approx(1.0)
        assert out.reductions == pytest.approx([0.5, 0.25, 0.125], abs=1e-10)
        assert out.diesel == pytest.approx(0.125, abs=1e-10)

    def test_three_tenant_anticipating_against_root_finding(self):
        # stationarity of the modified marginal solved with brentq on the price
        scn = three_quadratics()
        k, r = 1.0 / 6.0, 1.0 / 3.0

        def reduction(a, p):
            return optimize.brentq(lambda s: 0.5 * (2 * a * s + k + math.sqrt((2 * a * s - k) ** 2 + 4 * a * s * s * r))
                                   - p, 0.0, 1.0, xtol=1e-15)

        def excess(p):
            y = 3.0 * p - 2.0
            return sum(reduction(a, p) for a in COEFS) + y - 1.0

        p = optimize.brentq(excess, 0.7, 1.0, xtol=1e-15)
        out = solve_price_anticipating(scn)
        assert out.price == pytest.approx(p, abs=1e-9)
        assert out.reductions == pytest.approx([reduction(a, p) for a in COEFS], abs=1e-9)

    def test_market_clears_at_recovered_bids(self):
        scn = three_quadratics()
        for out in (solve_price_taking(scn), solve_price_anticipating(scn)):
            y = diesel_response(out.bids, scn)
            assert y == pytest.approx(out.diesel, abs=1e-10)
            assert clearing_price(out.bids, y, scn.delta) == pytest.approx(out.price, abs=1e-10)
            for b, s in zip(out.bids, out.reductions):
                assert supply(b, out.price, scn.delta) == pytest.approx(s, abs=1e-10)

    def test_diesel_only(self, quad_mandatory):
        out = solve_diesel_only(quad_mandatory)
        assert out.diesel == 1.0 and out.social_cost == 1.0 and out.operator_cost == 1.0
        assert out.payoffs == (0.0, 0.0)


class TestProperties:
    def test_capacities_respected(self):
        scn = MandatoryScenario(2.0, 1.0, [QuadraticCost(0.2, capacity=0.3),
                                           PiecewiseLinearCost([0.0, 0.2], [0.3, 0.6], capacity=0.5)])
        for solve in (solve_price_taking, solve_price_anticipating, solve_social_optimum):
            out = solve(scn)
            assert out.reductions[0] <= 0.3 + 1e-12
            assert out.reductions[1] <= 0.5 + 1e-12
            assert _balance(out, scn) < 1e-12
            assert out.price <= scn.alpha

    def test_zero_capacity_tenant(self):
        scn = MandatoryScenario(1.0, 1.0, [NullCost(), QuadraticCost(2.0)])
        out = solve_price_taking(scn)
        assert out.reductions[0] == 0.0
        assert _balance(out, scn) < 1e-12

    def test_plateau_ties_split_consistently(self):
        scn = MandatoryScenario(1.0, 1.0, [PiecewiseLinearCost([0.0, 0.5], [0.5, 3.0]),
                                           PiecewiseLinearCost([0.0, 0.5], [0.5, 3.0])])
        out = solve_price_taking(scn)
        assert _balance(out, scn) < 1e-12
        assert out.price <= 1.0

    def test_ordering_chain(self):
        scn = three_quadratics()
        t, a, s = solve_price_taking(scn), solve_price_anticipating(scn), solve_social_optimum(scn)
        assert t.price <= a.price <= s.price
        assert s.diesel <= t.diesel <= a.diesel

    def test_unknown_mode(self, quad_mandatory):
        with pytest.raises(ValueError):
            solve_mandatory(quad_mandatory, "psychic")

    def test_solvers_require_unit_pue(self):
        scn = MandatoryScenario(1.0, 1.0, [QuadraticCost(2.0)] * 2, pue=1.5)
        with pytest.raises(ValueError):
            solve_price_taking(scn)


class TestPue:
    def test_normalisation_round_trip(self):
        scn = MandatoryScenario(900.0, 0.3, [QuadraticCost(0.01)] * 2, pue=1.5)
        norm = normalize_pue(scn)
        assert (norm.delta, norm.alpha, norm.pue) == pytest.approx((600.0, 0.45, 1.0))
        back = denormalize_pue(norm, 1.5)
        assert (back.delta, back.alpha) == pytest.approx((900.0, 0.3))

    def test_facility_outcome(self):
        costs = [QuadraticCost(0.004), QuadraticCost(0.002)]
        scn = MandatoryScenario(900.0, 0.3, costs, pue=1.5)
        fac = solve_mandatory(scn, "taking")
        it = solve_price_taking(normalize_pue(scn))
        assert sum(fac.reductions) + fac.diesel == pytest.approx(900.0, rel=1e-12)
        assert fac.price <= 0.3 + 1e-15
        # payments are money and do not change with the unit of energy
        assert [fac.price * x for x in fac.reductions] == pytest.approx([it.price * x for x in it.reductions])
        assert fac.payoffs == it.payoffs
        assert denormalize_outcome(it, 1.0) is it


class TestClearing:
    def test_proportional_fill(self):
        flat = [lambda p: (0.0, 1.0) if p >= 0.5 else (0.0, 0.0)] * 2
        res = clear(flat, 1.0, 1.0)
        assert res.price == pytest.approx(0.5, abs=1e-10)
        assert res.quantities == pytest.approx((0.5, 0.5), abs=1e-10)


class TestRecords:
    def test_round_trip(self):
        scn = MandatoryScenario(2.0, 0.7, [QuadraticCost(2.0), PiecewiseLinearCost([0.0, 0.3], [0.2, 0.9])], 1.2)
        back = scenario_from_record(scenario_to_record(scn))
        assert (back.delta, back.alpha, back.pue, back.n) == (2.0, 0.7, 1.2, 2)

    @pytest.mark.parametrize("rec, path", [
        ({"alpha_per_kwh": 1, "tenants": [{"kind": "none"}] * 2}, "config.delta_kwh"),
        ({"delta_kwh": 1, "alpha_per_kwh": 1, "pue": 4, "tenants": []}, "pue"),
        ({"delta_kwh": 1, "alpha_per_kwh": 1, "tenants": [{"kind": "none"}]}, "tenants"),
        ({"delta_kwh": 1, "alpha_per_kwh": 1, "tenants": [{"kind": "none"}, {"kind": "quadratic"}]},
         "tenants[1].coef"),
    ])
    def test_errors(self, rec, path):
        with pytest.raises(ConfigError) as err:
            scenario_from_record(rec)
        assert err.value.path == path
