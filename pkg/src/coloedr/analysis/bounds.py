"""Efficiency bounds: each observed gap next to the interval it must fall in."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..cost_models import AnticipationContext, CostFunction, modified_cost_value
from ..mandatory_market import MandatoryOutcome, MandatoryScenario
from ..unbounded import is_unbounded
from ..voluntary_market import VoluntaryOutcome, VoluntaryScenario

DEFAULT_TOL = 1e-7


@dataclass(frozen=True)
class BoundEntry:
    name: str
    lower: float
    upper: float
    observed: float
    scale: float
    tol: float = DEFAULT_TOL
    applies: bool = True

    @property
    def margin(self) -> float:
        """Distance to the nearer end of the interval, in units of ``scale``."""
        return min(self.observed - self.lower, self.upper - self.observed) / self.scale

    @property
    def passed(self) -> bool:
        """Rows whose premises fail are reported but never count as failures."""
        return not self.applies or self.margin >= -self.tol

    def to_record(self) -> dict:
        def num(x):
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")

        return {"name": self.name, "lower": num(self.lower), "upper": num(self.upper),
                "observed": self.observed, "margin": num(self.margin), "applies": self.applies,
                "passed": self.passed}


@dataclass
class BoundReport:
    entries: list[BoundEntry] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def add(self, name, lower, upper, observed, scale, tol=DEFAULT_TOL, applies=True):
        self.entries.append(BoundEntry(name, lower, upper, observed, scale, tol, applies))

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def failures(self) -> list[BoundEntry]:
        return [e for e in self.entries if not e.passed]

    @property
    def worst_margin(self) -> float:
        return min((e.margin for e in self.entries if e.applies), default=math.inf)

    def __getitem__(self, name: str) -> BoundEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_record(self) -> dict:
        return {"passed": self.passed, "entries": [e.to_record() for e in self.entries], "notes": dict(self.notes)}

    def to_text(self) -> str:
        width = max(len(e.name) for e in self.entries)
        lines = []
        for e in self.entries:
            mark = "n/a" if not e.applies else ("pass" if e.passed else "FAIL")
            lines.append(f"{e.name:<{width}}  [{e.lower:>12.6g}, {e.upper:>12.6g}]  "
                         f"observed {e.observed:>12.6g}  {mark}")
        for k, v in self.notes.items():
            lines.append(f"{k}: {v}")
        return "\n".join(lines)


def check_bounds_mandatory(taking: MandatoryOutcome, anticipating: MandatoryOutcome, social: MandatoryOutcome,
                           scn: MandatoryScenario, tol: float = DEFAULT_TOL) -> BoundReport:
    a, d, n = scn.alpha, scn.delta, scn.n
    ad = a * d
    t, an, so = taking, anticipating, social
    r = BoundReport()
    inf = math.inf
    # every row presumes diesel runs at the social optimum; without it the
    # anticipating characterisation is not an equilibrium of the game
    ok = so.diesel > 0.0
    r.add("price_ratio_taking", (n - 1) / n, 1.0, t.price / so.price, 1.0, tol, ok)
    r.add("price_ratio_anticipating", (n - 1) / n, 1.0, an.price / so.price, 1.0, tol, ok)
    r.add("operator_saving_taking", 0.0, ad / n, so.operator_cost - t.operator_cost, ad, tol, ok)
    r.add("operator_saving_anticipating", 0.0, ad / n, so.operator_cost - an.operator_cost, ad, tol, ok)
    r.add("welfare_loss_taking", 0.0, ad / (2 * n), t.social_cost - so.social_cost, ad, tol, ok)
    r.add("welfare_loss_anticipating", 0.0, ad / n, an.social_cost - so.social_cost, ad, tol, ok)
    r.add("diesel_taking_minus_social", 0.0, d, t.diesel - so.diesel, d, tol, ok)
    r.add("diesel_anticipating_minus_taking", 0.0, d / 2, an.diesel - t.diesel, d, tol, ok)
    r.add("price_anticipating_minus_taking", 0.0, a / (2 * n), an.price - t.price, a, tol, ok)
    r.add("price_social_minus_anticipating", 0.0, inf, so.price - an.price, a, tol, ok)
    r.add("operator_cost_anticipating_minus_taking", 0.0, ad / n, an.operator_cost - t.operator_cost, ad, tol, ok)
    r.notes["diesel_gap_anticipating_minus_social_kwh"] = an.diesel - so.diesel
    r.notes["diesel_positive_at_optimum"] = so.diesel > 0.0
    r.notes["marginal_floor"] = t.assumption_flags.get("marginal_floor")
    return r


def check_bounds_voluntary(taking: VoluntaryOutcome, anticipating: VoluntaryOutcome, social: VoluntaryOutcome,
                           scn: VoluntaryScenario, tol: float = DEFAULT_TOL) -> BoundReport:
    u, big = scn.u, scn.total
    ds = social.total_reduction
    money = u * big
    t, an, so = taking, anticipating, social
    extra = sum(dn * g for dn, g in zip(scn.capacities, scn.shares))
    r = BoundReport()
    r.add("price_ratio_taking", 1.0 - ds / big, 1.0, t.price / so.price, 1.0, tol)
    r.add("price_ratio_anticipating", 1.0 - ds / big, 1.0, an.price / so.price, 1.0, tol)
    r.add("extra_profit_taking", 0.0, u * ds ** 2 / big, t.operator_utility - so.operator_utility, money, tol)
    r.add("extra_profit_anticipating", 0.0, u * ds ** 2 / big, an.operator_utility - so.operator_utility, money, tol)
    r.add("welfare_loss_taking", 0.0, u * ds ** 2 / (2 * big), so.welfare - t.welfare, money, tol)
    r.add("welfare_loss_anticipating", 0.0, u / 2 * (extra + ds ** 2 / big), so.welfare - an.welfare, money, tol)
    r.add("price_anticipating_minus_taking", 0.0, u * scn.max_share / 2, an.price - t.price, u, tol)
    r.add("reduction_anticipating_minus_taking", -scn.max_capacity / 2, 0.0,
          an.total_reduction - t.total_reduction, big, tol)
    r.add("operator_utility_taking_minus_anticipating", 0.0, u * scn.max_capacity,
          t.operator_utility - an.operator_utility, money, tol)
    r.add("reduction_social_minus_taking", 0.0, big, so.total_reduction - t.total_reduction, big, tol)
    r.add("operator_utility_social", 0.0, 0.0, so.operator_utility, money, tol)
    r.notes["marginal_floor"] = t.assumption_flags.get("marginal_floor")
    return r


# ----------------------------------------------------------------------------
# Modified-cost sandwich
# ----------------------------------------------------------------------------

@dataclass
class ModifiedCostReport:
    points: int
    value_violation: float
    derivative_violation: float
    fd_relative_error: float
    fd_points: int
    fd_tol: float = 1e-5
    tol: float = 1e-9

    @property
    def passed(self) -> bool:
        return (self.value_violation <= self.tol and self.derivative_violation <= self.tol
                and self.fd_relative_error <= self.fd_tol)


def check_modified_cost_bounds(c: CostFunction, ctx: AnticipationContext, grid: int = 200,
                               fd_step: float = 1e-5, fd_quad_tol: float = 1e-12) -> ModifiedCostReport:
    """Check value and one-sided-derivative sandwiches of the modified cost on a grid.

    Violations are reported relative to ``max(1, |value|)``. A central
    difference of the integrated cost is compared with the closed-form
    modified marginal at grid points at least two steps away from any kink.
    The difference quotient amplifies quadrature error by ``1/step``, so
    those integrals run at ``fd_quad_tol`` (scaled by the cost magnitude).
    """
    if grid < 50:
        raise ValueError("grid must be at least 50")
    top = c._upper(ctx.horizon)
    k = ctx.markup
    xs = np.linspace(0.0, top, grid)
    kinks = [x for x in c.kinks() if x < top]
    h = fd_step * top
    top_value = c.value(top)
    qtol = fd_quad_tol * max(1.0, 0.0 if is_unbounded(top_value) else abs(top_value))
    vbad = dbad = fd_err = 0.0
    fd_n = 0
    for s in map(float, xs):
        cv = c.value(s)
        hv = modified_cost_value(c, s, ctx)
        scale = max(1.0, abs(cv))
        vbad = max(vbad, (cv - hv) / scale, (hv - cv - k * s) / scale)
        lc, rc = c.marginal(s, "left"), c.marginal(s, "right")
        lh, rh = c.modified_marginal(s, ctx, "left"), c.modified_marginal(s, ctx, "right")
        dscale = max(1.0, abs(lc))
        dbad = max(dbad, (lc - lh) / dscale)
        if not is_unbounded(rh):
            dbad = max(dbad, (lh - rh) / dscale)
            if not is_unbounded(rc):
                dbad = max(dbad, (rh - rc - k) / dscale)
        if h < s < top - h and all(abs(s - x) > 2 * h for x in kinks):
            fd = (modified_cost_value(c, s + h, ctx, qtol) - modified_cost_value(c, s - h, ctx, qtol)) / (2 * h)
            fd_err = max(fd_err, abs(fd - rh) / max(abs(rh), 1e-12))
            fd_n += 1
    return ModifiedCostReport(len(xs), vbad, dbad, fd_err, fd_n)
