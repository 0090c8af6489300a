"""An ordered stand-in for an infinite cost or marginal.

Comparisons against real numbers work; arithmetic raises ``TypeError`` so an
infinite quantity can never silently leak into a sum.
"""
from __future__ import annotations

import functools
import numbers


@functools.total_ordering
class Unbounded:
    __slots__ = ("sign",)

    def __init__(self, sign: int = 1) -> None:
        object.__setattr__(self, "sign", 1 if sign > 0 else -1)

    def __setattr__(self, name, value):
        raise AttributeError("Unbounded is immutable")

    def __eq__(self, other):
        if isinstance(other, Unbounded):
            return self.sign == other.sign
        if isinstance(other, numbers.Real):
            return False
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, Unbounded):
            return self.sign < other.sign
        if isinstance(other, numbers.Real):
            return self.sign < 0
        return NotImplemented

    def __hash__(self) -> int:
        return hash(("Unbounded", self.sign))

    def __neg__(self) -> "Unbounded":
        return NEG_UNBOUNDED if self.sign > 0 else UNBOUNDED

    def __repr__(self) -> str:
        return "UNBOUNDED" if self.sign > 0 else "-UNBOUNDED"

    def __reduce__(self):
        return (Unbounded, (self.sign,))


UNBOUNDED = Unbounded(1)
NEG_UNBOUNDED = Unbounded(-1)


def is_unbounded(x) -> bool:
    return isinstance(x, Unbounded)


def finite_min(x, bound: float) -> float:
    """min(x, bound) as a float; ``bound`` must be finite."""
    return float(bound) if isinstance(x, Unbounded) and x.sign > 0 else float(min(x, bound))


def snap_to_capacity(s: float, capacity, rtol: float = 1e-12) -> float:
    """Pull ``s`` back onto ``capacity`` when it overshoots by rounding only."""
    if isinstance(capacity, Unbounded) or s <= capacity:
        return s
    return float(capacity) if s - capacity <= rtol * max(1.0, abs(capacity)) else s
