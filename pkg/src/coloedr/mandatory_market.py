"""Mandatory demand response: a fixed reduction target met by tenants and diesel.

Tenants submit one number each, selecting the supply curve
``delta - b/p``. The operator then picks how much diesel to run and the
uniform price clears the target. Three allocations are computed here:

* ``social``: minimum total cost of diesel plus tenant reductions,
* ``taking``: the equilibrium when tenants treat the price as given,
* ``anticipating``: the equilibrium when tenants account for their influence
  on the price and on the operator's diesel choice.

Solvers expect a scenario normalised to unit PUE (see ``normalize_pue``);
``solve_mandatory`` wraps the conversion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .clearing import clear
from .cost_models import AnticipationContext, ConfigError, CostFunction, _num, cost_from_record
from .unbounded import NEG_UNBOUNDED, is_unbounded, snap_to_capacity

MODES = ("taking", "anticipating", "social", "diesel-only")


@dataclass(frozen=True)
class MandatoryScenario:
    delta: float
    alpha: float
    tenants: tuple[CostFunction, ...]
    pue: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "tenants", tuple(self.tenants))
        if not self.delta > 0.0:
            raise ValueError("delta must be positive")
        if not self.alpha > 0.0:
            raise ValueError("alpha must be positive")
        if not (1.0 <= self.pue <= 3.0):
            raise ValueError("pue must lie in [1, 3]")
        if len(self.tenants) < 2:
            raise ValueError("at least two tenants are required")

    @property
    def n(self) -> int:
        return len(self.tenants)

    def context(self) -> AnticipationContext:
        return AnticipationContext.mandatory(self.alpha, self.n, self.delta)


@dataclass(frozen=True)
class MandatoryOutcome:
    mode: str
    price: float
    diesel: float
    reductions: tuple[float, ...]
    bids: tuple[float, ...]
    payoffs: tuple[float, ...]
    operator_cost: float
    social_cost: float
    dual_price: float
    assumption_flags: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "mode": self.mode,
            "price_usd_per_kwh": self.price,
            "diesel_kwh": self.diesel,
            "reductions_kwh": list(self.reductions),
            "bids_usd": list(self.bids),
            "payoffs_usd": list(self.payoffs),
            "operator_cost_usd": self.operator_cost,
            "social_cost_usd": self.social_cost,
            "dual_price_usd_per_kwh": self.dual_price,
            "assumption_flags": dict(self.assumption_flags),
        }


# ----------------------------------------------------------------------------
# PUE scaling
# ----------------------------------------------------------------------------

def normalize_pue(scn: MandatoryScenario) -> MandatoryScenario:
    """Express the scenario in IT-energy units so the solvers can ignore PUE."""
    g = scn.pue
    if g == 1.0:
        return scn
    return MandatoryScenario(scn.delta / g, scn.alpha * g, scn.tenants, 1.0)


def denormalize_pue(scn: MandatoryScenario, pue: float) -> MandatoryScenario:
    if pue == 1.0:
        return scn
    return MandatoryScenario(scn.delta * pue, scn.alpha / pue, scn.tenants, pue)


def denormalize_outcome(out: MandatoryOutcome, pue: float) -> MandatoryOutcome:
    """Convert a unit-PUE outcome back to facility-level energy and prices.

    Tenant reductions are credited at facility level (times PUE); money
    amounts and bids are unchanged.
    """
    if pue == 1.0:
        return out
    return replace(out, price=out.price / pue, dual_price=out.dual_price / pue, diesel=out.diesel * pue,
                   reductions=tuple(s * pue for s in out.reductions))


# ----------------------------------------------------------------------------
# Protocol primitives
# ----------------------------------------------------------------------------

def supply(b: float, p: float, delta: float) -> float:
    if p == 0:
        raise ZeroDivisionError("supply is undefined at a zero price")
    return delta - b / p


def clearing_price(b: Sequence[float], y: float, delta: float) -> float:
    n = len(b)
    if n < 2:
        raise ValueError("clearing price needs at least two bids")
    denom = (n - 1) * delta + y
    if denom <= 0.0:
        raise ZeroDivisionError("clearing price denominator is zero")
    return sum(b) / denom


def diesel_response(b: Sequence[float], scn: MandatoryScenario) -> float:
    """Cost-minimising diesel output given the bids."""
    n, d = len(b), scn.delta
    total = sum(b)
    y = math.sqrt(max(total, 0.0) * n * d / scn.alpha) - (n - 1) * d
    return min(max(y, 0.0), d)


def diesel_activation_threshold(b: Sequence[float], scn: MandatoryScenario) -> float:
    """Diesel prices strictly below this value make the operator run diesel."""
    n = len(b)
    return n / (n - 1) * sum(b) / ((n - 1) * scn.delta)


def operator_cost(p: float, y: float, scn: MandatoryScenario) -> float:
    return p * (scn.delta - y) + scn.alpha * y


def recover_bids(p: float, s: Sequence[float], scn: MandatoryScenario) -> tuple[float, ...]:
    return tuple(p * (scn.delta - x) for x in s)


def bid_floor(capacity, scn: MandatoryScenario) -> float:
    """Smallest bid that keeps supply within ``capacity`` at any price up to alpha."""
    if is_unbounded(capacity):
        return 0.0
    return max(scn.alpha * (scn.delta - capacity), 0.0)


def bid_cap(b: Sequence[float], n: int, scn: MandatoryScenario) -> float:
    """Largest bid an anticipating tenant would submit given the others' bids."""
    q = scn.alpha * scn.delta / len(b)
    rest = sum(b) - b[n]
    return 0.5 * (q + math.sqrt(q * (q + 4.0 * rest)))


def _payoff(c: CostFunction, p: float, s: float):
    s = snap_to_capacity(s, c.capacity)
    cost = c.value(s)
    if is_unbounded(cost):
        return NEG_UNBOUNDED
    return p * s - cost


def tenant_payoff(mode: str, n: int, b: Sequence[float], scn: MandatoryScenario, price: float | None = None):
    """Net payment minus cost for tenant ``n`` at bid vector ``b``.

    In ``taking`` mode the price is held at ``price``; in ``anticipating``
    mode the operator's diesel response and the clearing price are
    recomputed from ``b``. Negative implied reductions cost nothing.
    Returns ``NEG_UNBOUNDED`` when the implied reduction exceeds capacity.
    """
    c = scn.tenants[n]
    if mode == "taking":
        if price is None or price <= 0.0:
            raise ValueError("taking mode needs a positive price")
        p = price
    elif mode == "anticipating":
        y = diesel_response(b, scn)
        p = clearing_price(b, y, scn.delta)
    else:
        raise ValueError(f"unknown payoff mode {mode!r}")
    s = scn.delta if p == 0.0 else scn.delta - b[n] / p
    return _payoff(c, p, s)


# ----------------------------------------------------------------------------
# Solvers
# ----------------------------------------------------------------------------

def _flags(scn: MandatoryScenario, y: float) -> dict:
    k = scn.alpha / (2 * scn.n)
    return {
        "diesel_positive": bool(y > 0.0),
        "marginal_floor": all(c.marginal(0.0, "right") >= k * (1.0 - 1e-12) for c in scn.tenants),
    }


def _build(mode: str, scn: MandatoryScenario, p: float, y: float, s: Sequence[float], dual: float) -> MandatoryOutcome:
    costs = [c.value(x) for c, x in zip(scn.tenants, s)]
    return MandatoryOutcome(
        mode=mode,
        price=p,
        diesel=y,
        reductions=tuple(s),
        bids=recover_bids(p, s, scn),
        payoffs=tuple(p * x - cx for x, cx in zip(s, costs)),
        operator_cost=operator_cost(p, y, scn),
        social_cost=scn.alpha * y + sum(costs),
        dual_price=dual,
        assumption_flags=_flags(scn, y),
    )


def _require_normalized(scn: MandatoryScenario) -> None:
    if scn.pue != 1.0:
        raise ValueError("solver expects a unit-PUE scenario; call normalize_pue first")


def _clip(pair, top: float) -> tuple[float, float]:
    lo, hi = pair
    lo = top if lo > top else float(lo)
    hi = top if hi > top else float(hi)
    return lo, hi


def _tenant_responses(scn: MandatoryScenario, anticipating: bool):
    d = scn.delta
    if anticipating:
        ctx = scn.context()
        return [(lambda p, c=c: c.inverse_modified_marginal(p, ctx, d)) for c in scn.tenants]
    return [(lambda p, c=c: _clip(c.inverse_marginal(p), d)) for c in scn.tenants]


def _solve_equilibrium(scn: MandatoryScenario, mode: str) -> MandatoryOutcome:
    _require_normalized(scn)
    n, d, a = scn.n, scn.delta, scn.alpha

    def diesel(p: float) -> tuple[float, float]:
        y = min(max(n * d * p / a - (n - 1) * d, 0.0), d)
        return y, y

    res = clear(_tenant_responses(scn, mode == "anticipating") + [diesel], d, a)
    *s, y = res.quantities
    p = res.price
    if y > 0.0:
        p = a * (y + (n - 1) * d) / (n * d)
    p = min(p, a)
    return _build(mode, scn, p, y, s, p)


def solve_price_taking(scn: MandatoryScenario) -> MandatoryOutcome:
    return _solve_equilibrium(scn, "taking")


def solve_price_anticipating(scn: MandatoryScenario) -> MandatoryOutcome:
    return _solve_equilibrium(scn, "anticipating")


def solve_social_optimum(scn: MandatoryScenario) -> MandatoryOutcome:
    _require_normalized(scn)
    d, a = scn.delta, scn.alpha

    def diesel(p: float) -> tuple[float, float]:
        return (0.0, d) if p >= a else (0.0, 0.0)

    res = clear(_tenant_responses(scn, False) + [diesel], d, a)
    *s, y = res.quantities
    p = float(res.price)
    return _build("social", scn, p, y, s, p)


def solve_diesel_only(scn: MandatoryScenario) -> MandatoryOutcome:
    _require_normalized(scn)
    n = scn.n
    out = _build("diesel-only", scn, scn.alpha, scn.delta, [0.0] * n, scn.alpha)
    return replace(out, social_cost=scn.alpha * scn.delta, operator_cost=scn.alpha * scn.delta)


_SOLVERS = {
    "taking": solve_price_taking,
    "anticipating": solve_price_anticipating,
    "social": solve_social_optimum,
    "diesel-only": solve_diesel_only,
}


def solve_mandatory(scn: MandatoryScenario, mode: str) -> MandatoryOutcome:
    """Solve in any PUE, reporting facility-level energy and prices."""
    if mode not in _SOLVERS:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    return denormalize_outcome(_SOLVERS[mode](normalize_pue(scn)), scn.pue)


# ----------------------------------------------------------------------------
# Records
# ----------------------------------------------------------------------------

def scenario_from_record(rec, path: str = "") -> MandatoryScenario:
    if not isinstance(rec, dict):
        raise ConfigError(path, "expected an object")
    pre = f"{path}." if path else ""
    delta = _num(rec, "delta_kwh", path or "config", positive=True)
    alpha = _num(rec, "alpha_per_kwh", path or "config", positive=True)
    pue = _num(rec, "pue", path or "config", default=1.0)
    if not 1.0 <= pue <= 3.0:
        raise ConfigError(f"{pre}pue", "must lie in [1, 3]")
    tenants = rec.get("tenants")
    if not isinstance(tenants, list) or len(tenants) < 2:
        raise ConfigError(f"{pre}tenants", "expected a list of at least two cost records")
    costs = [cost_from_record(t, f"{pre}tenants[{i}]") for i, t in enumerate(tenants)]
    return MandatoryScenario(delta, alpha, costs, pue)


def scenario_to_record(scn: MandatoryScenario) -> dict:
    return {"delta_kwh": scn.delta, "alpha_per_kwh": scn.alpha, "pue": scn.pue,
            "tenants": [c.to_record() for c in scn.tenants]}
