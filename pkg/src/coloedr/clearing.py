"""Dual-price bisection shared by the mandatory and voluntary solvers.

Each supply component maps a price to an interval of quantities and is
nondecreasing in price. The routine finds the smallest price at which the
upper ends of all intervals cover the target, then splits the remaining
shortfall across components in proportion to how far each one can move
between the two bracketing prices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

Response = Callable[[float], tuple[float, float]]

PRICE_RTOL = 1e-12
MAX_ITER = 200


@dataclass(frozen=True)
class Clearing:
    price: float
    quantities: tuple[float, ...]
    iterations: int


def _total_upper(responses: Sequence[Response], p: float) -> tuple[float, list[tuple[float, float]]]:
    pairs = [r(p) for r in responses]
    return sum(hi for _, hi in pairs), pairs


def clear(responses: Sequence[Response], target: float, p_max: float,
          rtol: float = PRICE_RTOL, max_iter: int = MAX_ITER) -> Clearing:
    """Clear ``sum(quantities) == target`` over prices in ``[0, p_max]``.

    The last component of ``responses`` is usually the price-elastic
    counterpart (diesel or the operator's withheld quantity); it must be
    able to cover the target at ``p_max``.
    """
    total0, pairs0 = _total_upper(responses, 0.0)
    if total0 >= target:
        lows = [lo for lo, _ in pairs0]
        highs = [hi for _, hi in pairs0]
        return Clearing(0.0, _fill(lows, highs, target), 0)

    lo_p, hi_p = 0.0, p_max
    total_lo_upper, pairs_lo = total0, pairs0
    total_hi, pairs_hi = _total_upper(responses, hi_p)
    if total_hi < target:
        raise ValueError("supply cannot reach the target at the price ceiling")
    it = 0
    while it < max_iter and hi_p - lo_p > rtol * p_max:
        mid = 0.5 * (lo_p + hi_p)
        if mid <= lo_p or mid >= hi_p:
            break
        it += 1
        tot, pairs = _total_upper(responses, mid)
        if tot >= target:
            hi_p, pairs_hi = mid, pairs
        else:
            lo_p, pairs_lo = mid, pairs
    lows = [hi for _, hi in pairs_lo]
    highs = [hi for _, hi in pairs_hi]
    return Clearing(hi_p, _fill(lows, highs, target), it)


def _fill(lows: list[float], highs: list[float], target: float) -> tuple[float, ...]:
    span = sum(h - l for l, h in zip(lows, highs))
    gap = target - sum(lows)
    lam = 0.0 if span <= 0.0 else min(1.0, max(0.0, gap / span))
    out = [l + lam * (h - l) for l, h in zip(lows, highs)]
    # put the rounding residue on the widest component so the balance is exact
    resid = target - sum(out)
    if resid != 0.0:
        j = max(range(len(out)), key=lambda i: highs[i] - lows[i])
        out[j] = min(max(out[j] + resid, lows[j]), highs[j])
    return tuple(out)
