"""Tenant energy-reduction cost functions and the anticipation-adjusted cost.

Every cost is convex and nondecreasing on ``[0, capacity]``, zero for
non-positive reductions, and reports ``UNBOUNDED`` beyond its capacity.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .quadrature import integrate_piecewise
from .unbounded import UNBOUNDED, Unbounded, is_unbounded

QUAD_TOL = 1e-9
INNER_RTOL = 1e-12


class ConfigError(ValueError):
    """Invalid configuration, tagged with the offending path inside the record."""

    def __init__(self, path: str, message: str) -> None:
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


def _check_side(side: str) -> None:
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")


@dataclass(frozen=True)
class AnticipationContext:
    """Parameters of the modified cost.

    ``markup`` is the constant added to the marginal at zero reduction,
    ``slope`` scales the reduction-dependent term and ``horizon`` is the
    largest reduction for which the sandwich bounds are guaranteed.
    """

    markup: float
    slope: float
    horizon: float

    @classmethod
    def mandatory(cls, alpha: float, n_tenants: int, delta: float) -> "AnticipationContext":
        return cls(alpha / (2.0 * n_tenants), alpha / (n_tenants * delta), delta)

    @classmethod
    def voluntary(cls, u: float, share: float, total_capacity: float) -> "AnticipationContext":
        return cls(share * u / 2.0, u / total_capacity, share * total_capacity)


def _modified(m: float, s: float, ctx: AnticipationContext) -> float:
    k = ctx.markup
    return 0.5 * (m + k) + 0.5 * math.sqrt((m - k) ** 2 + 2.0 * m * s * ctx.slope)


def _first_reaching(g, level: float, upper: float, tol: float, strict: bool = False) -> float:
    """Smallest s in [0, upper] with g(s) >= level (or > level), ``upper`` if none."""

    def hit(s):
        v = g(s)
        return v > level if strict else v >= level

    if hit(0.0):
        return 0.0
    if not hit(upper):
        return upper
    lo, hi = 0.0, upper
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if hit(mid):
            hi = mid
        else:
            lo = mid
    return hi


class CostFunction:
    """Base class. Subclasses fill in value, marginal and inverse_marginal."""

    kind: str = "abstract"
    capacity: float | Unbounded = UNBOUNDED

    def value(self, s: float) -> float | Unbounded:
        raise NotImplementedError

    def marginal(self, s: float, side: str = "right") -> float | Unbounded:
        raise NotImplementedError

    def inverse_marginal(self, p: float) -> tuple:
        raise NotImplementedError

    def kinks(self) -> list[float]:
        return []

    def to_record(self) -> dict:
        raise NotImplementedError

    def values(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorised evaluation: (costs, feasible). Infeasible entries hold 0."""
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        ok = np.ones(s.shape, dtype=bool)
        for idx, x in np.ndenumerate(s):
            v = self.value(float(x))
            if is_unbounded(v):
                ok[idx] = False
            else:
                out[idx] = v
        return out, ok

    def _upper(self, upper: float) -> float:
        return float(upper) if is_unbounded(self.capacity) else float(min(self.capacity, upper))

    def modified_marginal(self, s: float, ctx: AnticipationContext, side: str = "right"):
        _check_side(side)
        if side == "left" and s <= 0.0:
            return 0.0
        m = self.marginal(s, side)
        if is_unbounded(m):
            return m
        return _modified(m, s, ctx)

    def inverse_modified_marginal(self, rho: float, ctx: AnticipationContext, upper: float) -> tuple[float, float]:
        """Interval of s in [0, upper] where the modified marginal brackets ``rho``."""
        top = self._upper(upper)
        if top <= 0.0:
            return 0.0, 0.0
        tol = INNER_RTOL * top
        lo = _first_reaching(lambda s: self.modified_marginal(s, ctx, "right"), rho, top, tol)
        hi = _first_reaching(lambda s: self.modified_marginal(s, ctx, "left"), rho, top, tol, strict=True)
        return lo, max(lo, hi)


# ----------------------------------------------------------------------------
# Concrete kinds
# ----------------------------------------------------------------------------

class QuadraticCost(CostFunction):
    """c(s) = coef * s**2 + linear * s on [0, capacity]."""

    kind = "quadratic"

    def __init__(self, coef: float, linear: float = 0.0, capacity: float | Unbounded = UNBOUNDED) -> None:
        if not (coef >= 0.0 and linear >= 0.0) or coef + linear <= 0.0:
            raise ValueError("quadratic cost needs coef >= 0, linear >= 0, not both zero")
        if not is_unbounded(capacity) and not capacity >= 0.0:
            raise ValueError("capacity must be nonnegative")
        self.coef = float(coef)
        self.linear = float(linear)
        self.capacity = capacity if is_unbounded(capacity) else float(capacity)

    def value(self, s):
        if s <= 0.0:
            return 0.0
        if s > self.capacity:
            return UNBOUNDED
        return self.coef * s * s + self.linear * s

    def values(self, s):
        s = np.asarray(s, dtype=float)
        pos = np.maximum(s, 0.0)
        ok = np.ones(s.shape, dtype=bool) if is_unbounded(self.capacity) else s <= self.capacity
        out = np.where(ok, self.coef * pos * pos + self.linear * pos, 0.0)
        return out, ok

    def marginal(self, s, side="right"):
        _check_side(side)
        if side == "left" and s <= 0.0:
            return 0.0
        if s > self.capacity or (side == "right" and s >= self.capacity):
            return UNBOUNDED
        return 2.0 * self.coef * max(s, 0.0) + self.linear

    def inverse_marginal(self, p):
        if p < self.linear:
            return 0.0, 0.0
        if self.coef == 0.0:
            if p == self.linear:
                return 0.0, self.capacity
            return self.capacity, self.capacity
        s = (p - self.linear) / (2.0 * self.coef)
        s = min(s, self.capacity) if not is_unbounded(self.capacity) else s
        return s, s

    def inverse_modified_marginal(self, rho, ctx, upper):
        top = self._upper(upper)
        k, r = ctx.markup, ctx.slope
        b, a = self.linear, self.coef
        if top <= 0.0 or rho <= max(b, k):
            return 0.0, 0.0
        # stationarity reduces to  2 a r s^2 + (b r + 4 a (rho-k)) s - 2 (rho-k)(rho-b) = 0
        qa = 2.0 * a * r
        qb = b * r + 4.0 * a * (rho - k)
        qc = 2.0 * (rho - k) * (rho - b)
        s = 2.0 * qc / (qb + math.sqrt(qb * qb + 4.0 * qa * qc))
        s = min(s, top)
        return s, s

    def to_record(self):
        rec = {"kind": "quadratic", "coef": self.coef}
        if self.linear:
            rec["linear"] = self.linear
        if not is_unbounded(self.capacity):
            rec["capacity"] = self.capacity
        return rec


class PiecewiseLinearCost(CostFunction):
    """Continuous piecewise-linear cost.

    ``breakpoints`` are the segment start points (the first must be 0) and
    ``slopes[i]`` applies from ``breakpoints[i]`` to the next start, the last
    segment running to ``capacity``.
    """

    kind = "piecewise_linear"

    def __init__(self, breakpoints: Sequence[float], slopes: Sequence[float],
                 capacity: float | Unbounded = UNBOUNDED) -> None:
        xs = [float(x) for x in breakpoints]
        ms = [float(m) for m in slopes]
        if not xs or len(xs) != len(ms):
            raise ValueError("breakpoints and slopes must be nonempty and of equal length")
        if xs[0] != 0.0:
            raise ValueError("first breakpoint must be 0")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(not m >= 0.0 for m in ms):
            raise ValueError("slopes must be nonnegative")
        if not is_unbounded(capacity):
            capacity = float(capacity)
            if capacity <= xs[-1]:
                raise ValueError("capacity must exceed the last breakpoint")
        self.breakpoints = tuple(xs)
        self.slopes = tuple(ms)
        self.capacity = capacity
        acc = [0.0]
        for i in range(1, len(xs)):
            acc.append(acc[-1] + ms[i - 1] * (xs[i] - xs[i - 1]))
        self._base = tuple(acc)

    def _segment(self, s: float) -> int:
        return bisect.bisect_right(self.breakpoints, s) - 1

    def value(self, s):
        if s <= 0.0:
            return 0.0
        if s > self.capacity:
            return UNBOUNDED
        i = self._segment(s)
        return self._base[i] + self.slopes[i] * (s - self.breakpoints[i])

    def values(self, s):
        s = np.asarray(s, dtype=float)
        pos = np.maximum(s, 0.0)
        ok = np.ones(s.shape, dtype=bool) if is_unbounded(self.capacity) else s <= self.capacity
        idx = np.searchsorted(self.breakpoints, pos, side="right") - 1
        base = np.asarray(self._base)[idx]
        out = base + np.asarray(self.slopes)[idx] * (pos - np.asarray(self.breakpoints)[idx])
        return np.where(ok, out, 0.0), ok

    def marginal(self, s, side="right"):
        _check_side(side)
        if side == "left":
            if s <= 0.0:
                return 0.0
            if s > self.capacity:
                return UNBOUNDED
            return self.slopes[bisect.bisect_left(self.breakpoints, s) - 1]
        if s >= self.capacity:
            return UNBOUNDED
        return self.slopes[max(self._segment(s), 0)]

    def kinks(self):
        return list(self.breakpoints[1:])

    def _segment_end(self, i: int):
        return self.breakpoints[i + 1] if i + 1 < len(self.breakpoints) else self.capacity

    def inverse_marginal(self, p):
        lo = None
        for i, m in enumerate(self.slopes):
            x = self.breakpoints[i]
            if p < m:
                return (x if lo is None else lo), x
            if p == m and lo is None:
                lo = x
        cap = self.capacity
        return (cap if lo is None else lo), cap

    def inverse_modified_marginal(self, rho, ctx, upper):
        top = self._upper(upper)
        if top <= 0.0:
            return 0.0, 0.0
        k, r = ctx.markup, ctx.slope
        lo = None
        for i, m in enumerate(self.slopes):
            x = self.breakpoints[i]
            if x >= top:
                break
            end = self._segment_end(i)
            end = top if is_unbounded(end) else min(end, top)
            if m == 0.0:
                # modified marginal is flat at the markup on a zero-slope segment
                if rho < k:
                    return (x if lo is None else lo), x
                if rho == k:
                    lo = x if lo is None else lo
                continue
            if rho <= _modified(m, x, ctx):
                return (x if lo is None else lo), x
            s = 2.0 * (rho - m) * (rho - k) / (m * r)
            if s < end:
                return (x if lo is None else lo), s
            lo = None
        return (top if lo is None else lo), top

    def to_record(self):
        rec = {"kind": "piecewise_linear", "breakpoints": list(self.breakpoints), "slopes": list(self.slopes)}
        if not is_unbounded(self.capacity):
            rec["capacity"] = self.capacity
        return rec


class SampledCost(PiecewiseLinearCost):
    """Linear interpolation through user-supplied (reduction, cost) samples.

    Convexity is not enforced here; ``validate_cost_assumptions`` reports it.
    """

    kind = "sampled"

    def __init__(self, points: Sequence[Sequence[float]]) -> None:
        pts = [(float(a), float(b)) for a, b in points]
        if len(pts) < 2 or pts[0] != (0.0, 0.0):
            raise ValueError("sampled cost needs at least two points starting at (0, 0)")
        xs = [a for a, _ in pts]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("sample reductions must be strictly increasing")
        slopes = [(pts[i + 1][1] - pts[i][1]) / (xs[i + 1] - xs[i]) for i in range(len(pts) - 1)]
        super().__init__(xs[:-1], slopes, capacity=xs[-1])
        self.points = tuple(pts)

    def to_record(self):
        return {"kind": "sampled", "points": [list(p) for p in self.points]}


@dataclass(frozen=True)
class QueueingCostParams:
    M: float
    u: float
    beta: float
    T: float
    theta: float
    u_bar: float

    def __post_init__(self):
        if not (0.0 < self.u < 1.0):
            raise ValueError("u must lie in (0, 1)")
        if not (self.u_bar <= 1.0):
            raise ValueError("u_bar must be at most 1")
        if self.u >= self.u_bar:
            raise ValueError("u must be below u_bar (zero capacity otherwise)")
        for name in ("M", "beta", "T", "theta"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def capacity(self) -> float:
        return self.theta * self.M * (1.0 - self.u / self.u_bar)


class QueueingCost(CostFunction):
    """Delay cost of switching off servers, with server count treated as continuous.

    The per-event cost at ``m`` servers off is ``beta*T / (1/(u*M) - 1/(M-m))``;
    the reduction cost subtracts the value at ``m = 0``.
    """

    kind = "queueing"

    def __init__(self, params: QueueingCostParams) -> None:
        self.params = params
        self.capacity = params.capacity
        p = params
        self._a = 1.0 / (p.u * p.M)
        self._bt = p.beta * p.T
        self._zero = self._delay(0.0)

    def _delay(self, m: float) -> float:
        x = self.params.M - m
        return self._bt * x / (self._a * x - 1.0)

    def value(self, s):
        if s <= 0.0:
            return 0.0
        if s > self.capacity:
            return UNBOUNDED
        return self._delay(s / self.params.theta) - self._zero

    def values(self, s):
        s = np.asarray(s, dtype=float)
        pos = np.clip(s, 0.0, self.capacity)
        ok = s <= self.capacity
        x = self.params.M - pos / self.params.theta
        out = self._bt * x / (self._a * x - 1.0) - self._zero
        return np.where(ok, out, 0.0), ok

    def _slope(self, s: float) -> float:
        x = self.params.M - s / self.params.theta
        return self._bt / (self.params.theta * (self._a * x - 1.0) ** 2)

    def marginal(self, s, side="right"):
        _check_side(side)
        if side == "left" and s <= 0.0:
            return 0.0
        if s > self.capacity or (side == "right" and s >= self.capacity):
            return UNBOUNDED
        return self._slope(max(s, 0.0))

    def inverse_marginal(self, p):
        if p <= self._slope(0.0):
            return 0.0, 0.0
        pr = self.params
        m = pr.M - (1.0 + math.sqrt(self._bt / (pr.theta * p))) / self._a
        s = min(max(pr.theta * m, 0.0), self.capacity)
        return s, s

    def inverse_modified_marginal(self, rho, ctx, upper):
        top = self._upper(upper)
        if top <= 0.0:
            return 0.0, 0.0

        def g(s):
            return _modified(self._slope(s), s, ctx) - rho

        if g(0.0) >= 0.0:
            return 0.0, 0.0
        if g(top) <= 0.0:
            return top, top
        s = brentq(g, 0.0, top, xtol=INNER_RTOL * top, rtol=1e-15, maxiter=200)
        return s, s

    def to_record(self):
        p = self.params
        return {"kind": "queueing", "M": p.M, "u": p.u, "beta": p.beta, "T": p.T,
                "theta": p.theta, "u_bar": p.u_bar}


class NullCost(CostFunction):
    """A tenant that cannot reduce at all (zero capacity)."""

    kind = "none"
    capacity = 0.0

    def value(self, s):
        return 0.0 if s <= 0.0 else UNBOUNDED

    def values(self, s):
        s = np.asarray(s, dtype=float)
        ok = s <= 0.0
        return np.zeros_like(s), ok

    def marginal(self, s, side="right"):
        _check_side(side)
        if side == "left" and s <= 0.0:
            return 0.0
        return UNBOUNDED

    def inverse_marginal(self, p):
        return 0.0, 0.0

    def inverse_modified_marginal(self, rho, ctx, upper):
        return 0.0, 0.0

    def to_record(self):
        return {"kind": "none"}


# ----------------------------------------------------------------------------
# Functional interface
# ----------------------------------------------------------------------------

def eval_cost(c: CostFunction, s: float):
    return c.value(s)


def marginal_cost(c: CostFunction, s: float, side: str = "right"):
    return c.marginal(s, side)


def inverse_marginal(c: CostFunction, p: float) -> tuple:
    if p < 0:
        raise ValueError("price must be nonnegative")
    return c.inverse_marginal(p)


def make_queueing_cost(params: QueueingCostParams) -> QueueingCost:
    return QueueingCost(params)


def modified_marginal(c: CostFunction, s: float, ctx: AnticipationContext, side: str = "right"):
    return c.modified_marginal(s, ctx, side)


def _panel_integrand(c: CostFunction, ctx: AnticipationContext, end: float):
    k, r = ctx.markup, ctx.slope

    def f(z: float) -> float:
        m = c.marginal(z, "left" if z >= end else "right")
        return math.sqrt((m - k) ** 2 + 2.0 * m * z * r)

    return f


def modified_cost_value(c: CostFunction, s: float, ctx: AnticipationContext, tol: float = QUAD_TOL):
    """Modified cost at ``s``, integrating the square-root term panel by panel."""
    if s <= 0.0:
        return 0.0
    base = c.value(s)
    if is_unbounded(base):
        return UNBOUNDED
    knots = [0.0] + [x for x in c.kinks() if 0.0 < x < s] + [s]
    panels = len(knots) - 1
    integral = 0.0
    for a, b in zip(knots, knots[1:]):
        integral += integrate_piecewise(_panel_integrand(c, ctx, b), (a, b), tol / panels)
    return 0.5 * (base + ctx.markup * s) + 0.5 * integral


# ----------------------------------------------------------------------------
# Worst-case instance
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class WorstCaseSpec:
    epsilon: float
    delta: float
    alpha: float
    N: int

    def __post_init__(self):
        if not (0.0 < self.epsilon < self.delta):
            raise ValueError("need 0 < epsilon < delta")
        if self.N < 1:
            raise ValueError("need at least one tenant")
        if not self.alpha > 0.0:
            raise ValueError("alpha must be positive")


def make_worst_case_instance(spec: WorstCaseSpec) -> list[CostFunction]:
    """Costs that push the anticipating diesel use a distance delta - epsilon above the optimum.

    Tenant 1 is cheap on a short first stretch, nearly as expensive as diesel
    on a long plateau, and twice the diesel price beyond. Everyone else is
    linear at twice the diesel price and never participates.
    """
    half = spec.epsilon / 2.0
    a, n, d = spec.alpha, spec.N, spec.delta
    first = PiecewiseLinearCost(
        breakpoints=[0.0, half, d - half],
        slopes=[a / (2.0 * n), a * (1.0 - 3.0 * half / (2.0 * n * d)), 2.0 * a],
    )
    others = [QuadraticCost(0.0, 2.0 * a) for _ in range(n - 1)]
    return [first, *others]


def worst_case_offsets(spec: WorstCaseSpec) -> tuple[float, float]:
    """Intercepts of tenant 1's second and third segments, from continuity."""
    half = spec.epsilon / 2.0
    c = make_worst_case_instance(spec)[0]
    m1, m2 = c.slopes[1], c.slopes[2]
    c1 = c.value(half) - m1 * half
    c2 = c.value(spec.delta - half) - m2 * (spec.delta - half)
    return c1, c2


# ----------------------------------------------------------------------------
# Assumption checks
# ----------------------------------------------------------------------------

@dataclass
class CostAssumptionReport:
    kind: str
    marginal_at_zero: float | Unbounded
    markup: float
    markup_floor_holds: bool
    convexity_violations: list = field(default_factory=list)
    increasing: bool = True
    note: str = ("Diesel activation at the optimum depends on all bids and the target; "
                 "it is checked on the solved outcome, not per cost.")

    @property
    def convex(self) -> bool:
        return not self.convexity_violations

    @property
    def ok(self) -> bool:
        return self.convex and self.markup_floor_holds and self.increasing


def validate_cost_assumptions(c: CostFunction, ctx: AnticipationContext, grid_size: int = 200,
                              tol: float = 1e-12) -> CostAssumptionReport:
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    top = c._upper(ctx.horizon)
    m0 = c.marginal(0.0, "right")
    report = CostAssumptionReport(c.kind, m0, ctx.markup, m0 >= ctx.markup * (1.0 - 1e-12))
    if top <= 0.0:
        return report
    grid = sorted(set(np.linspace(0.0, top, grid_size).tolist()) | {x for x in c.kinks() if x < top})
    prev_right = None
    for s in grid:
        left = c.marginal(s, "left")
        right = c.marginal(s, "right")
        if s < top and not right > 0.0:
            report.increasing = False
        if s > 0.0 and not is_unbounded(right) and right < left - tol * max(1.0, abs(left)):
            report.convexity_violations.append((s, left - right))
        if prev_right is not None and s > 0.0 and left < prev_right - tol * max(1.0, abs(prev_right)):
            report.convexity_violations.append((s, prev_right - left))
        prev_right = right if not is_unbounded(right) else None
    return report


# ----------------------------------------------------------------------------
# Records
# ----------------------------------------------------------------------------

def _num(rec: dict, key: str, path: str, default=None, positive=False, nonneg=False) -> float:
    if key not in rec:
        if default is not None:
            return default
        raise ConfigError(f"{path}.{key}", "missing required field")
    v = rec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{path}.{key}", f"expected a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"{path}.{key}", "must be positive")
    if nonneg and v < 0:
        raise ConfigError(f"{path}.{key}", "must be nonnegative")
    return float(v)


def _capacity(rec: dict, path: str):
    if rec.get("capacity") is None:
        return UNBOUNDED
    return _num(rec, "capacity", path, nonneg=True)


def cost_from_record(rec, path: str = "cost") -> CostFunction:
    """Build a cost from its JSON record, raising ``ConfigError`` with a path on bad input."""
    if not isinstance(rec, dict):
        raise ConfigError(path, "expected an object")
    kind = rec.get("kind")
    try:
        if kind == "quadratic":
            return QuadraticCost(_num(rec, "coef", path, nonneg=True), _num(rec, "linear", path, 0.0, nonneg=True),
                                 _capacity(rec, path))
        if kind in ("piecewise_linear", "piecewise-linear"):
            for key in ("breakpoints", "slopes"):
                if not isinstance(rec.get(key), list):
                    raise ConfigError(f"{path}.{key}", "expected a list of numbers")
            return PiecewiseLinearCost(rec["breakpoints"], rec["slopes"], _capacity(rec, path))
        if kind in ("sampled", "custom-sampled"):
            if not isinstance(rec.get("points"), list):
                raise ConfigError(f"{path}.points", "expected a list of [reduction, cost] pairs")
            return SampledCost(rec["points"])
        if kind == "queueing":
            params = QueueingCostParams(*(_num(rec, k, path) for k in ("M", "u", "beta", "T", "theta", "u_bar")))
            return QueueingCost(params)
        if kind == "none":
            return NullCost()
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.kind", f"unknown cost kind {kind!r}")
