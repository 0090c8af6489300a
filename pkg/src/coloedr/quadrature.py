"""Adaptive Simpson integration."""
from __future__ import annotations

import math
import warnings
from typing import Callable

MAX_SUBDIVISIONS = 1_000_000


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-9, max_subdivisions: int = MAX_SUBDIVISIONS) -> float:
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    Uses an explicit stack so deep refinement near singular derivatives
    (e.g. a square root at the left end) does not hit the recursion limit.
    """
    if b == a:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, tol, max_subdivisions)
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    stack = [(a, b, fa, fm, fb, whole, tol)]
    total = 0.0
    splits = 0
    min_width = 1e-15 * max(1.0, abs(a), abs(b))
    while stack:
        lo, hi, flo, fmid, fhi, est, eps = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) * (flo + 4.0 * flm + fmid) / 6.0
        right = (hi - mid) * (fmid + 4.0 * frm + fhi) / 6.0
        delta = left + right - est
        if not math.isfinite(delta):
            raise ValueError("integrand produced a non-finite value")
        if abs(delta) <= 15.0 * eps or (hi - lo) < min_width or splits >= max_subdivisions:
            total += left + right + delta / 15.0
            continue
        splits += 1
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps))
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps))
    if splits >= max_subdivisions:
        warnings.warn("adaptive_simpson hit the subdivision cap; result may be inaccurate",
                      RuntimeWarning, stacklevel=2)
    if not math.isfinite(total):
        raise ValueError("integrand produced a non-finite value")
    return total


def integrate_piecewise(f: Callable[[float], float], knots, tol: float = 1e-9) -> float:
    """Integrate over consecutive ``knots`` panel by panel, splitting the tolerance."""
    knots = list(knots)
    panels = len(knots) - 1
    if panels <= 0:
        return 0.0
    share = tol / panels
    return sum(adaptive_simpson(f, knots[i], knots[i + 1], share) for i in range(panels))
