"""Randomised check of every efficiency bound."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..mandatory_market import solve_price_anticipating, solve_price_taking, solve_social_optimum
from ..voluntary_market import solve_vdr
from .bounds import DEFAULT_TOL, check_bounds_mandatory, check_bounds_voluntary
from .kkt import kkt_residuals
from .scenarios import KINDS, random_mandatory_scenario, random_voluntary_scenario


@dataclass
class SweepResult:
    count: int
    seed: int
    failures: list = field(default_factory=list)
    worst_margin: float = float("inf")
    worst_kkt: float = 0.0
    worst_balance: float = 0.0
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        return (f"scenarios={self.count} seed={self.seed} failures={len(self.failures)} "
                f"worst_margin={self.worst_margin:.3e} worst_kkt={self.worst_kkt:.3e} "
                f"worst_balance={self.worst_balance:.3e} seconds={self.seconds:.2f}")


def run_bound_sweep(count: int = 1000, seed: int = 1, n_range=(2, 20), kinds=KINDS,
                    voluntary: bool = False, tol: float = DEFAULT_TOL) -> SweepResult:
    rng = np.random.default_rng(seed)
    result = SweepResult(count, seed)
    start = time.perf_counter()
    for i in range(count):
        if voluntary:
            scn = random_voluntary_scenario(rng, n_range, kinds)
            outs = [solve_vdr(scn, m) for m in ("taking", "anticipating", "social")]
            report = check_bounds_voluntary(*outs, scn, tol)
            bal = max(abs(sum(o.reductions) - o.total_reduction) / scn.total for o in outs)
        else:
            scn = random_mandatory_scenario(rng, n_range, kinds)
            outs = [solve_price_taking(scn), solve_price_anticipating(scn), solve_social_optimum(scn)]
            report = check_bounds_mandatory(*outs, scn, tol)
            bal = max(abs(sum(o.reductions) + o.diesel - scn.delta) / scn.delta for o in outs)
        kkt = max(kkt_residuals(o, scn) for o in outs)
        result.worst_margin = min(result.worst_margin, report.worst_margin)
        result.worst_kkt = max(result.worst_kkt, kkt)
        result.worst_balance = max(result.worst_balance, bal)
        if not report.passed or kkt > tol or bal > 1e-9:
            result.failures.append({"index": i, "n": scn.n, "kkt": kkt, "balance": bal,
                                    "failed": [e.name for e in report.failures]})
    result.seconds = time.perf_counter() - start
    return result
