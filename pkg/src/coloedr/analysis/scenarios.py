"""Random instances that satisfy the assumptions behind the efficiency bounds.

Every tenant's marginal cost at zero is at least the anticipation markup,
and the reduction target exceeds what tenants would supply at the diesel
price, so diesel runs at the social optimum.
"""
from __future__ import annotations

import numpy as np

from ..cost_models import CostFunction, PiecewiseLinearCost, QuadraticCost, QueueingCost, QueueingCostParams
from ..mandatory_market import MandatoryScenario, solve_social_optimum
from ..unbounded import UNBOUNDED, finite_min
from ..voluntary_market import VoluntaryScenario

KINDS = ("quadratic", "piecewise_linear", "queueing")


def _first_slope(rng, floor: float, price: float) -> float:
    return floor + rng.uniform(0.0, 1.0) * (0.8 * price - floor)


def random_cost(rng: np.random.Generator, kind: str, floor: float, price: float, reach: float,
                capacity: float | None = None) -> CostFunction:
    """One convex cost with marginal at zero in ``[floor, 0.8*price]``.

    ``reach`` sets the rough reduction a tenant makes at ``price``. A given
    ``capacity`` is honoured exactly; otherwise some costs get a random one.
    """
    m0 = _first_slope(rng, floor, price)
    if kind == "quadratic":
        coef = (price - m0) / (2.0 * reach)
        cap = capacity if capacity is not None else (reach * rng.uniform(0.5, 1.5) if rng.random() < 0.3 else UNBOUNDED)
        return QuadraticCost(coef, m0, cap)
    if kind == "piecewise_linear":
        segs = int(rng.integers(2, 6))
        slopes = [m0]
        for _ in range(segs - 1):
            slopes.append(slopes[-1] + rng.uniform(0.05, 0.6) * price)
        widths = rng.uniform(0.2, 1.0, segs - 1) * reach
        starts = np.concatenate([[0.0], np.cumsum(widths)]).tolist()
        if capacity is not None:
            keep = [x for x in starts if x < capacity]
            starts, slopes = keep, slopes[:len(keep)]
            cap = capacity
        else:
            cap = starts[-1] + rng.uniform(0.1, 0.5) * reach if rng.random() < 0.3 else UNBOUNDED
            if cap is UNBOUNDED and slopes[-1] <= price:
                # keep the reduction at the diesel price finite
                slopes[-1] = price * rng.uniform(1.05, 1.5)
        return PiecewiseLinearCost(starts, slopes, cap)
    if kind == "queueing":
        M = float(rng.uniform(500, 3000))
        u = float(rng.uniform(0.1, 0.5))
        u_bar = float(rng.uniform(u + 0.1, min(1.0, u + 0.5)))
        cap = capacity if capacity is not None else reach * rng.uniform(0.5, 1.5)
        theta = cap / (M * (1.0 - u / u_bar))
        beta = m0 * theta * (1.0 / u - 1.0) ** 2
        return QueueingCost(QueueingCostParams(M, u, beta, 1.0, theta, u_bar))
    raise ValueError(f"unknown kind {kind!r}")


def random_mandatory_scenario(rng: np.random.Generator, n_range=(2, 20), kinds=KINDS,
                              max_tries: int = 100) -> MandatoryScenario:
    for _ in range(max_tries):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        alpha = float(rng.uniform(0.2, 2.0))
        floor = alpha / (2 * n)
        costs = [random_cost(rng, str(rng.choice(kinds)), floor, alpha, float(rng.uniform(0.2, 1.5)))
                 for _ in range(n)]
        at_alpha = 0.0
        for c in costs:
            at_alpha += finite_min(c.inverse_marginal(alpha)[1], c._upper(np.inf))
        if at_alpha <= 0.0:
            continue
        scn = MandatoryScenario(at_alpha * float(rng.uniform(1.05, 2.5)), alpha, costs)
        if solve_social_optimum(scn).diesel > 1e-9 * scn.delta:
            return scn
    raise RuntimeError("could not draw a scenario with positive optimal diesel")


def random_voluntary_scenario(rng: np.random.Generator, n_range=(2, 20), kinds=KINDS) -> VoluntaryScenario:
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    u = float(rng.uniform(0.2, 2.0))
    caps = rng.uniform(0.3, 2.0, n)
    shares = caps / caps.sum()
    costs = [random_cost(rng, str(rng.choice(kinds)), share * u / 2.0, u, float(cap) * rng.uniform(0.3, 1.2),
                         capacity=float(cap))
             for share, cap in zip(shares, caps)]
    return VoluntaryScenario(u, costs, caps.tolist())
