"""Serialise simulation records as JSON or as a flat per-(event, mode) CSV."""
from __future__ import annotations

import csv
import io
import json
import math

from .runner import EventRecord

METRICS = (
    "target_kwh",
    "price_usd_per_kwh",
    "tenant_reduction_kwh",
    "diesel_kwh",
    "social_cost_usd",
    "operator_cost_usd",
    "tenant_payment_usd",
    "tenant_cost_usd",
    "tenant_net_profit_usd",
    "mean_utilization",
    "max_utilization",
    "max_utilization_bound_ratio",
)


def metric_row(rec: EventRecord, mode: str, u_bars) -> dict:
    """The fixed metric set for one mode of one event.

    Voluntary events report no diesel; their social cost is the negated
    welfare and their operator cost the negated operator utility.
    """
    o = rec.outcomes[mode]
    it = rec.normalized_outcomes[mode]
    utils = rec.utilizations[mode]
    reduction = sum(o.reductions)
    payment = sum(it.price * s for s in it.reductions)
    tenant_cost = payment - sum(it.payoffs)
    if rec.kind == "mandatory":
        target, diesel = rec.event.target_kwh, o.diesel
        social, operator = o.social_cost, o.operator_cost
    else:
        target, diesel = o.total_reduction, 0.0
        social, operator = 0.0 - o.welfare, 0.0 - o.operator_utility
    return {
        "target_kwh": target,
        "price_usd_per_kwh": o.price,
        "tenant_reduction_kwh": reduction,
        "diesel_kwh": diesel,
        "social_cost_usd": social,
        "operator_cost_usd": operator,
        "tenant_payment_usd": payment,
        "tenant_cost_usd": tenant_cost,
        "tenant_net_profit_usd": sum(o.payoffs),
        "mean_utilization": sum(utils) / len(utils),
        "max_utilization": max(utils),
        "max_utilization_bound_ratio": max(u / b for u, b in zip(utils, u_bars)),
    }


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def report_record(records: list[EventRecord], u_bars) -> dict:
    events = []
    for rec in records:
        events.append({
            "event_id": rec.event_id,
            "start": rec.event.start.isoformat(),
            "duration_h": rec.event.duration_h,
            "kind": rec.kind,
            "loads": list(rec.loads),
            "metrics": {m: metric_row(rec, m, u_bars) for m in rec.outcomes},
            "outcomes": {m: o.to_record() for m, o in rec.outcomes.items()},
            "utilizations": {m: list(u) for m, u in rec.utilizations.items()},
            "bounds": rec.bounds.to_record(),
            "warnings": list(rec.warnings),
        })
    return _clean({"events": events})


def emit_report(records: list[EventRecord], u_bars, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report_record(records, u_bars), indent=2, sort_keys=True) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("event_id", "start", "mode") + METRICS)
    for rec in records:
        for mode in rec.outcomes:
            row = metric_row(rec, mode, u_bars)
            w.writerow([rec.event_id, rec.event.start.isoformat(), mode] + [repr(float(row[k])) for k in METRICS])
    return buf.getvalue()
