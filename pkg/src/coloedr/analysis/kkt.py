"""Stationarity and complementarity residuals of the characterising programs."""
from __future__ import annotations

from ..mandatory_market import MandatoryOutcome, MandatoryScenario
from ..unbounded import is_unbounded
from ..voluntary_market import VoluntaryOutcome, VoluntaryScenario


def _tenant_residuals(marginal, s: float, p: float, upper: float, scale: float) -> float:
    worst = 0.0
    if s > 0.0:
        left = marginal(s, "left")
        if not is_unbounded(left):
            worst = max(worst, (left - p) / scale)
    if s < upper:
        right = marginal(s, "right")
        if not is_unbounded(right):
            worst = max(worst, (p - right) / scale)
    return worst


def _marginal_fn(c, ctx):
    if ctx is None:
        return c.marginal
    return lambda s, side: c.modified_marginal(s, ctx, side)


def kkt_residuals(out, scn, mode: str | None = None) -> float:
    """Largest violation of the optimality conditions, prices over the price scale, energy over the target."""
    mode = mode or out.mode
    if isinstance(scn, MandatoryScenario):
        return _mandatory(out, scn, mode)
    if isinstance(scn, VoluntaryScenario):
        return _voluntary(out, scn, mode)
    raise TypeError("unsupported scenario type")


def _mandatory(out: MandatoryOutcome, scn: MandatoryScenario, mode: str) -> float:
    a, d, n = scn.alpha, scn.delta, scn.n
    p, y, s = out.price, out.diesel, out.reductions
    res = [abs(sum(s) + y - d) / d, max(0.0, p - a) / a, max(0.0, -y) / d, max(0.0, y - d) / d]
    res += [max(0.0, -x) / d for x in s]
    res += [abs(b - p * (d - x)) / (a * d) for b, x in zip(out.bids, s)]
    ctx = scn.context() if mode == "anticipating" else None
    for c, x in zip(scn.tenants, s):
        upper = d if is_unbounded(c.capacity) else min(c.capacity, d)
        res.append(_tenant_residuals(_marginal_fn(c, ctx), x, p, upper, a))
    if mode == "social":
        target = a
    elif mode in ("taking", "anticipating"):
        target = a * (y + (n - 1) * d) / (n * d)
    else:
        raise ValueError(f"no optimality system for mode {mode!r}")
    if y > 0.0:
        res.append(abs(target - p) / a)
    else:
        res.append(max(0.0, p - target) / a)
    return max(res)


def _voluntary(out: VoluntaryOutcome, scn: VoluntaryScenario, mode: str) -> float:
    u, big = scn.u, scn.total
    p, s = out.price, out.reductions
    res = [abs(sum(s) - out.total_reduction) / big, max(0.0, p - u) / u, max(0.0, -p) / u]
    res += [max(0.0, -x, x - dn) / big for x, dn in zip(s, scn.capacities)]
    res += [abs(b - p * (dn - x)) / (u * big) for b, x, dn in zip(out.bids, s, scn.capacities)]
    for i, (c, x, dn) in enumerate(zip(scn.tenants, s, scn.capacities)):
        ctx = scn.context(i) if mode == "anticipating" else None
        upper = dn if is_unbounded(c.capacity) else min(c.capacity, dn)
        res.append(_tenant_residuals(_marginal_fn(c, ctx), x, p, upper, u))
    if mode == "social":
        res.append(abs(p - u) / u)
    elif mode in ("taking", "anticipating"):
        res.append(abs(p - u * (big - out.total_reduction) / big) / u)
    else:
        raise ValueError(f"no optimality system for mode {mode!r}")
    return max(res)
