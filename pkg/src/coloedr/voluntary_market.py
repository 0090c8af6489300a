"""Voluntary demand response: the grid pays a fixed rate per kWh shed.

Each tenant has a reduction capacity ``D_n`` and bids on the curve
``D_n - b/p``. A profit-maximising operator chooses the total quantity; the
tenants' payments come out of the grid's payment ``u * d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .clearing import clear
from .cost_models import AnticipationContext, ConfigError, CostFunction, _num, cost_from_record
from .unbounded import NEG_UNBOUNDED, is_unbounded, snap_to_capacity

MODES = ("taking", "anticipating", "social")


@dataclass(frozen=True)
class VoluntaryScenario:
    u: float
    tenants: tuple[CostFunction, ...]
    capacities: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "tenants", tuple(self.tenants))
        object.__setattr__(self, "capacities", tuple(float(d) for d in self.capacities))
        if not self.u > 0.0:
            raise ValueError("u must be positive")
        if len(self.tenants) != len(self.capacities) or not self.tenants:
            raise ValueError("need one capacity per tenant")
        if any(not d > 0.0 for d in self.capacities):
            raise ValueError("capacities must be positive")

    @property
    def n(self) -> int:
        return len(self.tenants)

    @property
    def total(self) -> float:
        return sum(self.capacities)

    @property
    def shares(self) -> tuple[float, ...]:
        t = self.total
        return tuple(d / t for d in self.capacities)

    @property
    def max_share(self) -> float:
        return max(self.shares)

    @property
    def max_capacity(self) -> float:
        return max(self.capacities)

    def context(self, n: int) -> AnticipationContext:
        return AnticipationContext.voluntary(self.u, self.shares[n], self.total)


@dataclass(frozen=True)
class VoluntaryOutcome:
    mode: str
    price: float
    total_reduction: float
    reductions: tuple[float, ...]
    bids: tuple[float, ...]
    payoffs: tuple[float, ...]
    operator_utility: float
    welfare: float
    dual_price: float
    assumption_flags: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "mode": self.mode,
            "price_usd_per_kwh": self.price,
            "total_reduction_kwh": self.total_reduction,
            "reductions_kwh": list(self.reductions),
            "bids_usd": list(self.bids),
            "payoffs_usd": list(self.payoffs),
            "operator_utility_usd": self.operator_utility,
            "welfare_usd": self.welfare,
            "dual_price_usd_per_kwh": self.dual_price,
            "assumption_flags": dict(self.assumption_flags),
        }


class OperatorResponse(NamedTuple):
    quantity: float
    price: float
    above_rate: bool


def vdr_operator_response(b: Sequence[float], scn: VoluntaryScenario) -> OperatorResponse:
    """Profit-maximising total reduction and the resulting price.

    ``above_rate`` is set when the bids sum past ``u * total capacity``; the
    quantity is then clamped at zero.
    """
    total_b, big = sum(b), scn.total
    above = total_b > scn.u * big
    d = big - math.sqrt(max(total_b, 0.0) * big / scn.u)
    d = min(max(d, 0.0), big)
    if d >= big:
        return OperatorResponse(big, 0.0, above)
    return OperatorResponse(d, total_b / (big - d), above)


def diesel_side_decision(u: float, alpha: float, diesel_capacity: float) -> float:
    """Diesel output sold into a voluntary program: all of it when the rate beats its cost."""
    return diesel_capacity if u > alpha else 0.0


def vdr_payoff(mode: str, n: int, b: Sequence[float], scn: VoluntaryScenario, price: float | None = None):
    if mode == "taking":
        if price is None or price <= 0.0:
            raise ValueError("taking mode needs a positive price")
        p = price
    elif mode == "anticipating":
        p = vdr_operator_response(b, scn).price
    else:
        raise ValueError(f"unknown payoff mode {mode!r}")
    dn = scn.capacities[n]
    s = dn if p == 0.0 else dn - b[n] / p
    s = snap_to_capacity(s, scn.tenants[n].capacity)
    cost = scn.tenants[n].value(s)
    if is_unbounded(cost):
        return NEG_UNBOUNDED
    return p * s - cost


def _clip(pair, top: float) -> tuple[float, float]:
    lo, hi = pair
    return (top if lo > top else float(lo)), (top if hi > top else float(hi))


def _build(mode: str, scn: VoluntaryScenario, p: float, s: Sequence[float]) -> VoluntaryOutcome:
    costs = [c.value(x) for c, x in zip(scn.tenants, s)]
    d = sum(s)
    floor_ok = all(c.marginal(0.0, "right") >= scn.context(i).markup * (1.0 - 1e-12)
                   for i, c in enumerate(scn.tenants))
    return VoluntaryOutcome(
        mode=mode,
        price=p,
        total_reduction=d,
        reductions=tuple(s),
        bids=tuple(p * (dn - x) for dn, x in zip(scn.capacities, s)),
        payoffs=tuple(p * x - cx for x, cx in zip(s, costs)),
        operator_utility=(scn.u - p) * d,
        welfare=scn.u * d - sum(costs),
        dual_price=p,
        assumption_flags={"marginal_floor": floor_ok},
    )


def solve_vdr(scn: VoluntaryScenario, mode: str) -> VoluntaryOutcome:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    u, big = scn.u, scn.total
    if mode == "social":
        s = [_clip(c.inverse_marginal(u), dn)[1] for c, dn in zip(scn.tenants, scn.capacities)]
        return _build(mode, scn, float(u), s)
    if mode == "taking":
        responses = [(lambda p, c=c, dn=dn: _clip(c.inverse_marginal(p), dn))
                     for c, dn in zip(scn.tenants, scn.capacities)]
    else:
        responses = [(lambda p, c=c, dn=dn, ctx=scn.context(i): c.inverse_modified_marginal(p, ctx, dn))
                     for i, (c, dn) in enumerate(zip(scn.tenants, scn.capacities))]

    # quantity the operator holds back: total capacity minus its chosen reduction
    def withheld(p: float) -> tuple[float, float]:
        w = min(big * p / u, big)
        return w, w

    res = clear(responses + [withheld], big, u)
    *s, _ = res.quantities
    d = sum(s)
    p = min(u * (big - d) / big, u)
    return _build(mode, scn, p, s)


def vdr_metrics(out: VoluntaryOutcome, scn: VoluntaryScenario, social: VoluntaryOutcome | None = None) -> dict:
    """Operator utility, welfare and the theoretical intervals for this outcome's mode."""
    if social is None:
        social = solve_vdr(scn, "social")
    u, big, d_star = scn.u, scn.total, social.total_reduction
    intervals = {
        "price_ratio": (1.0 - d_star / big, 1.0),
        "extra_profit_usd": (0.0, u * d_star ** 2 / big),
        "markup_usd_per_kwh": (0.0, u * scn.max_share / 2.0),
        "reduction_shift_kwh": (-scn.max_capacity / 2.0, 0.0),
        "operator_delta_usd": (0.0, u * scn.max_capacity),
    }
    if out.mode == "taking":
        intervals["welfare_loss_usd"] = (0.0, u * d_star ** 2 / (2.0 * big))
    elif out.mode == "anticipating":
        extra = sum(dn * g for dn, g in zip(scn.capacities, scn.shares))
        intervals["welfare_loss_usd"] = (0.0, u / 2.0 * (extra + d_star ** 2 / big))
    else:
        intervals["welfare_loss_usd"] = (0.0, 0.0)
    return {
        "operator_utility_usd": (u - out.price) * out.total_reduction,
        "welfare_usd": out.welfare,
        "welfare_loss_usd": social.welfare - out.welfare,
        "price_ratio": out.price / social.price,
        "intervals": intervals,
    }


def scenario_from_record(rec, path: str = "") -> VoluntaryScenario:
    if not isinstance(rec, dict):
        raise ConfigError(path, "expected an object")
    pre = f"{path}." if path else ""
    u = _num(rec, "u_per_kwh", path or "config", positive=True)
    tenants = rec.get("tenants")
    if not isinstance(tenants, list) or not tenants:
        raise ConfigError(f"{pre}tenants", "expected a nonempty list")
    costs, caps = [], []
    for i, t in enumerate(tenants):
        tp = f"{pre}tenants[{i}]"
        if not isinstance(t, dict):
            raise ConfigError(tp, "expected an object with 'cost' and optional 'capacity_kwh'")
        c = cost_from_record(t.get("cost"), f"{tp}.cost")
        if "capacity_kwh" in t:
            cap = _num(t, "capacity_kwh", tp, positive=True)
        elif is_unbounded(c.capacity) or c.capacity <= 0.0:
            raise ConfigError(f"{tp}.capacity_kwh", "required when the cost has no finite positive capacity")
        else:
            cap = float(c.capacity)
        costs.append(c)
        caps.append(cap)
    return VoluntaryScenario(u, costs, caps)


def scenario_to_record(scn: VoluntaryScenario) -> dict:
    return {"u_per_kwh": scn.u,
            "tenants": [{"cost": c.to_record(), "capacity_kwh": d} for c, d in zip(scn.tenants, scn.capacities)]}
