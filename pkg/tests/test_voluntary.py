import numpy as np
import pytest

from coloedr.cost_models import ConfigError, PiecewiseLinearCost, QuadraticCost
from coloedr.voluntary_market import (VoluntaryScenario, diesel_side_decision, scenario_from_record,
                                      scenario_to_record, solve_vdr, vdr_metrics, vdr_operator_response, vdr_payoff)


def test_operator_response_against_grid(quad_voluntary):
    # operator keeps u*d minus the bids' price p(d) = sum(b) / (D - d) times d
    b = [0.5, 0.3]
    d = np.linspace(0.0, 1.999, 200001)
    profit = 1.0 * d - sum(b) * d / (2.0 - d)
    best = d[np.argmax(profit)]
    resp = vdr_operator_response(b, quad_voluntary)
    assert resp.quantity == pytest.approx(best, abs=1e-4)
    assert resp.price == pytest.approx(sum(b) / (2.0 - resp.quantity))
    assert not resp.above_rate


def test_operator_response_when_bids_are_too_high(quad_voluntary):
    resp = vdr_operator_response([5.0, 5.0], quad_voluntary)
    assert resp.quantity == 0.0 and resp.above_rate


def test_closed_form_instance(quad_voluntary):
    t = solve_vdr(quad_voluntary, "taking")
    s = solve_vdr(quad_voluntary, "social")
    assert t.price == pytest.approx(0.8, abs=1e-10)
    assert t.total_reduction == pytest.approx(0.4, abs=1e-10)
    assert t.operator_utility == pytest.approx(0.08, abs=1e-10)
    assert s.welfare - t.welfare == pytest.approx(0.01, abs=1e-10)
    assert s.price == 1.0 and s.operator_utility == 0.0


def test_anticipating_is_below_taking(quad_voluntary):
    t, a = solve_vdr(quad_voluntary, "taking"), solve_vdr(quad_voluntary, "anticipating")
    assert a.total_reduction <= t.total_reduction
    assert a.price >= t.price


def test_bids_reproduce_operator_choice(quad_voluntary):
    for mode in ("taking", "anticipating"):
        out = solve_vdr(quad_voluntary, mode)
        resp = vdr_operator_response(out.bids, quad_voluntary)
        assert resp.quantity == pytest.approx(out.total_reduction, abs=1e-10)
        assert resp.price == pytest.approx(out.price, abs=1e-10)


def test_capacity_clips_reductions():
    scn = VoluntaryScenario(3.0, [PiecewiseLinearCost([0.0], [0.5]), QuadraticCost(0.1)], [0.4, 0.6])
    out = solve_vdr(scn, "social")
    assert out.reductions == pytest.approx((0.4, 0.6))
    for mode in ("taking", "anticipating"):
        o = solve_vdr(scn, mode)
        assert all(0.0 <= x <= d + 1e-12 for x, d in zip(o.reductions, scn.capacities))
        assert sum(o.reductions) == pytest.approx(o.total_reduction, rel=1e-12)


def test_payoff(quad_voluntary):
    out = solve_vdr(quad_voluntary, "taking")
    assert vdr_payoff("taking", 0, out.bids, quad_voluntary, out.price) == pytest.approx(out.payoffs[0])
    with pytest.raises(ValueError):
        vdr_payoff("social", 0, out.bids, quad_voluntary)


def test_metrics_intervals(quad_voluntary):
    t = solve_vdr(quad_voluntary, "taking")
    m = vdr_metrics(t, quad_voluntary)
    lo, hi = m["intervals"]["welfare_loss_usd"]
    assert lo <= m["welfare_loss_usd"] <= hi == pytest.approx(0.0625)
    assert m["price_ratio"] == pytest.approx(0.8)


def test_diesel_side():
    assert diesel_side_decision(0.5, 0.3, 100.0) == 100.0
    assert diesel_side_decision(0.2, 0.3, 100.0) == 0.0


def test_unknown_mode(quad_voluntary):
    with pytest.raises(ValueError):
        solve_vdr(quad_voluntary, "diesel-only")


def test_records(quad_voluntary):
    back = scenario_from_record(scenario_to_record(quad_voluntary))
    assert back.capacities == (1.0, 1.0) and back.u == 1.0
    with pytest.raises(ConfigError) as err:
        scenario_from_record({"u_per_kwh": 1.0, "tenants": [{"cost": {"kind": "quadratic", "coef": 1.0}}]})
    assert err.value.path == "tenants[0].capacity_kwh"
    with pytest.raises(ConfigError):
        scenario_from_record({"u_per_kwh": -1.0, "tenants": []})
