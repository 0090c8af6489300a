"""Brute-force equilibrium checks that only use payoff evaluations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..mandatory_market import (MandatoryOutcome, MandatoryScenario, bid_cap, clearing_price, diesel_response,
                         tenant_payoff)
from ..unbounded import is_unbounded
from ..voluntary_market import VoluntaryOutcome, VoluntaryScenario, vdr_operator_response, vdr_payoff


@dataclass(frozen=True)
class NashEntry:
    tenant: int
    current_payoff: float
    best_payoff: float
    best_bid: float
    epsilon: float
    evaluations: int


@dataclass
class NashCertificate:
    entries: list[NashEntry] = field(default_factory=list)

    @property
    def max_epsilon(self) -> float:
        return max(e.epsilon for e in self.entries)

    def holds(self, tol: float) -> bool:
        return self.max_epsilon <= tol


def _as_float(v) -> float:
    return -math.inf if is_unbounded(v) else float(v)


def _setup(b, n, scn, mode, price):
    """Payoff closure and the bid interval worth scanning."""
    b = list(b)
    if isinstance(scn, MandatoryScenario):
        size = scn.delta
        if mode == "taking":
            if price is None:
                price = clearing_price(b, diesel_response(b, scn), scn.delta)
            top = price * size
        else:
            top = bid_cap(b, n, scn)
        pay = tenant_payoff
    elif isinstance(scn, VoluntaryScenario):
        size = scn.capacities[n]
        if mode == "taking":
            if price is None:
                price = vdr_operator_response(b, scn).price
            top = price * size
        else:
            q = scn.shares[n] * size * scn.u
            rest = sum(b) - b[n]
            top = 0.5 * (q + math.sqrt(q * (q + 4.0 * rest)))
        pay = vdr_payoff
    else:
        raise TypeError("unsupported scenario type")
    if mode not in ("taking", "anticipating"):
        raise ValueError(f"unknown mode {mode!r}")

    def f(x: float) -> float:
        trial = list(b)
        trial[n] = x
        return _as_float(pay(mode, n, trial, scn, price))

    return f, max(top, b[n])


def best_response_scan(b, n: int, scn, mode: str, grid: int = 1000, price: float | None = None) -> NashEntry:
    """Best payoff tenant ``n`` can reach by changing only its own bid.

    A uniform scan of ``grid`` points is refined once with another ``grid``
    points around the best cell.
    """
    if grid < 100:
        raise ValueError("grid must be at least 100")
    f, top = _setup(b, n, scn, mode, price)
    current = f(b[n])
    xs = np.linspace(0.0, top, grid)
    vals = [f(float(x)) for x in xs]
    i = int(np.argmax(vals))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, grid - 1)]
    fine = np.linspace(lo, hi, grid)
    fvals = [f(float(x)) for x in fine]
    j = int(np.argmax(fvals))
    best, best_bid = (fvals[j], float(fine[j])) if fvals[j] >= vals[i] else (vals[i], float(xs[i]))
    return NashEntry(n, current, best, best_bid, best - current, 2 * grid + 1)


def nash_certificate(out, scn, mode: str, grid: int = 1000) -> NashCertificate:
    price = out.price if mode == "taking" else None
    return NashCertificate([best_response_scan(out.bids, n, scn, mode, grid, price) for n in range(scn.n)])


# ----------------------------------------------------------------------------
# Exhaustive two-tenant search
# ----------------------------------------------------------------------------

@dataclass
class Cluster:
    cells: list[tuple[int, int]]
    bid_low: tuple[float, float]
    bid_high: tuple[float, float]


@dataclass
class EquilibriumSearch:
    """Flagged cells grouped into 8-connected clusters.

    Clusters touching the all-zero bid are kept apart in ``degenerate``: the
    price tends to zero there and the grid cannot separate a fixed point from
    the vanishing supply curve.
    """

    grid: np.ndarray
    step: float
    cells: list[tuple[int, int]]
    clusters: list[Cluster]
    degenerate: list[Cluster] = field(default_factory=list)

    def contains(self, bids, slack_cells: int = 1) -> bool:
        """True if ``bids`` lie within ``slack_cells`` grid steps of a flagged cell."""
        tol = slack_cells * self.step * (1.0 + 1e-9)
        return any(abs(self.grid[i] - bids[0]) <= tol and abs(self.grid[j] - bids[1]) <= tol
                   for i, j in self.cells)

    def cluster_of(self, bids, slack_cells: int = 1):
        tol = slack_cells * self.step * (1.0 + 1e-9)
        for k, cl in enumerate(self.clusters):
            if any(abs(self.grid[i] - bids[0]) <= tol and abs(self.grid[j] - bids[1]) <= tol for i, j in cl.cells):
                return k
        return None


def _payoff_grid(c, p, s):
    cost, ok = c.values(s)
    return np.where(ok, p * s - cost, -np.inf)


def exhaustive_equilibrium_search(scn: MandatoryScenario, grid: int = 200, mode: str = "anticipating") -> EquilibriumSearch:
    """Grid cells where each of two tenants' best responses points back into the cell.

    Bids range over ``[0, alpha*delta]`` on both axes. The all-zero bid is
    skipped because the price, and hence the supply curve, is undefined there.
    """
    if scn.n != 2:
        raise ValueError("exhaustive search supports exactly two tenants")
    if not 2 <= grid <= 500:
        raise ValueError("grid must lie in [2, 500]")
    d, a = scn.delta, scn.alpha
    g = np.linspace(0.0, a * d, grid)
    step = float(g[1] - g[0])
    c1, c2 = scn.tenants

    def prices(total):
        y = np.clip(np.sqrt(total * 2.0 * d / a) - d, 0.0, d)
        return total / (d + y)

    if mode == "anticipating":
        B1, B2 = np.meshgrid(g, g, indexing="ij")
        p = prices(B1 + B2)
        safe = np.where(p > 0.0, p, 1.0)
        q1 = np.where(p > 0.0, _payoff_grid(c1, p, d - B1 / safe), -np.inf)
        q2 = np.where(p > 0.0, _payoff_grid(c2, p, d - B2 / safe), -np.inf)
        br1 = np.argmax(q1, axis=0)          # tenant 1's reply to each column j
        br2 = np.argmax(q2, axis=1)          # tenant 2's reply to each row i
        I, J = np.meshgrid(np.arange(grid), np.arange(grid), indexing="ij")
        flag = (np.abs(br1[J] - I) <= 1) & (np.abs(br2[I] - J) <= 1) & (p > 0.0)
    elif mode == "taking":
        # the price depends on the bid sum only, which takes 2*grid-1 values
        sums = np.arange(2 * grid - 1) * step
        p = prices(sums)
        safe = np.where(p > 0.0, p, 1.0)[:, None]
        s = d - g[None, :] / safe
        br = [np.argmax(_payoff_grid(c, p[:, None], s), axis=1) for c in (c1, c2)]
        I, J = np.meshgrid(np.arange(grid), np.arange(grid), indexing="ij")
        K = I + J
        flag = (np.abs(br[0][K] - I) <= 1) & (np.abs(br[1][K] - J) <= 1) & (p[K] > 0.0)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    labels, count = ndimage.label(flag, structure=np.ones((3, 3), dtype=int))
    clusters, degenerate = [], []
    for k in range(1, count + 1):
        ii, jj = np.nonzero(labels == k)
        members = [(int(i), int(j)) for i, j in zip(ii, jj)]
        cl = Cluster(members, (float(g[ii.min()]), float(g[jj.min()])), (float(g[ii.max()]), float(g[jj.max()])))
        (degenerate if ii.min() <= 1 and jj.min() <= 1 else clusters).append(cl)
    cells = [cell for cl in clusters for cell in cl.cells]
    return EquilibriumSearch(g, step, cells, clusters, degenerate)
