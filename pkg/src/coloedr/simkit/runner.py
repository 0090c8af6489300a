"""Replay an EDR schedule against workload traces and record per-event outcomes."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

from ..analysis.bounds import BoundReport, check_bounds_mandatory, check_bounds_voluntary
from ..cost_models import CostFunction, NullCost, QueueingCost, QueueingCostParams
from ..mandatory_market import (MandatoryScenario, denormalize_outcome, normalize_pue, solve_diesel_only,
                         solve_price_anticipating, solve_price_taking, solve_social_optimum)
from ..voluntary_market import VoluntaryScenario, solve_vdr
from .config import EdrEvent, EdrSchedule, SimConfig, default_schedule
from .trace import WorkloadTrace, read_trace_csv, synthetic_trace

log = logging.getLogger(__name__)

MIN_LOAD = 1e-3
MANDATORY_MODES = ("taking", "anticipating", "social", "diesel-only")
VOLUNTARY_MODES = ("taking", "anticipating", "social")


class SimulationError(RuntimeError):
    pass


def acquire_trace(cfg: SimConfig) -> WorkloadTrace:
    src = cfg.trace
    if src.kind == "file":
        trace = read_trace_csv(src.path)
    else:
        trace = synthetic_trace(len(cfg.tenants), src.mean_util, src.amplitude, src.noise, src.steps,
                                src.step_minutes, src.seed, src.start)
    if trace.tenants != len(cfg.tenants):
        raise SimulationError(f"trace has {trace.tenants} tenant columns, config has {len(cfg.tenants)} tenants")
    return trace


def build_event_costs(cfg: SimConfig, loads, duration_h: float) -> tuple[list[CostFunction], list[str]]:
    """Queueing-delay cost per tenant for an event of ``duration_h`` hours.

    Energy is counted at IT level: each server switched off saves its idle
    power for the whole event. Tenants already at or above their utilisation
    bound get a zero-capacity cost.
    """
    costs, warnings = [], []
    for i, (t, load) in enumerate(zip(cfg.tenants, loads)):
        u = float(load) * cfg.overestimation
        if u >= t.u_bar:
            warnings.append(f"tenant {i}: load {u:.4f} at or above bound {t.u_bar}; no reduction possible")
            costs.append(NullCost())
            continue
        if u < MIN_LOAD:
            warnings.append(f"tenant {i}: load {u:.2e} raised to {MIN_LOAD}")
            u = MIN_LOAD
        theta = t.idle_kw * duration_h
        costs.append(QueueingCost(QueueingCostParams(t.M, u, t.beta, duration_h, theta, t.u_bar)))
    for w in warnings:
        log.warning(w)
    return costs, warnings


def post_event_utilization(cfg: SimConfig, loads, reductions_it, duration_h: float) -> tuple[float, ...]:
    """Utilisation of the servers left on after shedding ``reductions_it`` kWh of IT energy."""
    out = []
    for t, load, s in zip(cfg.tenants, loads, reductions_it):
        u = float(load) * cfg.overestimation
        off = s / (t.idle_kw * duration_h)
        out.append(u * t.M / (t.M - off) if off < t.M else float("inf"))
    return tuple(out)


@dataclass
class EventRecord:
    event_id: int
    event: EdrEvent
    kind: str
    loads: tuple[float, ...]
    outcomes: dict                       # mode -> facility-level outcome
    normalized_outcomes: dict            # mode -> IT-level outcome
    normalized_scenario: object
    utilizations: dict                   # mode -> per-tenant utilisation
    bounds: BoundReport
    warnings: list[str] = field(default_factory=list)


def _run_mandatory(cfg, event, costs):
    scn = MandatoryScenario(event.target_kwh, cfg.alpha, costs, cfg.pue)
    norm = normalize_pue(scn)
    raw = {"taking": solve_price_taking(norm), "anticipating": solve_price_anticipating(norm),
           "social": solve_social_optimum(norm), "diesel-only": solve_diesel_only(norm)}
    bounds = check_bounds_mandatory(raw["taking"], raw["anticipating"], raw["social"], norm)
    fac = {m: denormalize_outcome(o, cfg.pue) for m, o in raw.items()}
    # pin the baseline to the facility-level inputs so no PUE round-off leaks in
    ad = cfg.alpha * event.target_kwh
    fac["diesel-only"] = replace(fac["diesel-only"], price=cfg.alpha, dual_price=cfg.alpha, diesel=event.target_kwh,
                                 social_cost=ad, operator_cost=ad)
    return norm, raw, fac, bounds


def _run_voluntary(cfg, event, costs):
    # zero-capacity tenants cannot take part; they are reinserted with zeros
    active = [i for i, c in enumerate(costs) if not isinstance(c, NullCost)]
    if len(active) == 0:
        raise SimulationError("no tenant can reduce load")
    g = cfg.pue
    scn = VoluntaryScenario(event.u_per_kwh * g, [costs[i] for i in active], [costs[i].capacity for i in active])
    raw = {m: solve_vdr(scn, m) for m in VOLUNTARY_MODES}
    bounds = check_bounds_voluntary(raw["taking"], raw["anticipating"], raw["social"], scn)
    n = len(costs)

    def expand(vals, fill=0.0):
        full = [fill] * n
        for k, i in enumerate(active):
            full[i] = vals[k]
        return tuple(full)

    def widen(o, scale):
        return replace(o, reductions=expand([s * scale for s in o.reductions]), bids=expand(o.bids),
                       payoffs=expand(o.payoffs))

    it = {m: widen(o, 1.0) for m, o in raw.items()}
    fac = {m: replace(widen(o, g), price=o.price / g, dual_price=o.dual_price / g,
                      total_reduction=o.total_reduction * g) for m, o in raw.items()}
    return scn, it, fac, bounds


def run_event(cfg: SimConfig, event: EdrEvent, loads, event_id: int = 0, kind: str = "mandatory") -> EventRecord:
    costs, warnings = build_event_costs(cfg, loads, event.duration_h)
    if kind == "mandatory":
        norm, it, fac, bounds = _run_mandatory(cfg, event, costs)
    elif kind == "voluntary":
        norm, it, fac, bounds = _run_voluntary(cfg, event, costs)
    else:
        raise ValueError(f"unknown schedule kind {kind!r}")
    utils = {m: post_event_utilization(cfg, loads, o.reductions, event.duration_h) for m, o in it.items()}
    if not bounds.passed:
        warnings.append("bound check failed: " + ", ".join(e.name for e in bounds.failures))
    return EventRecord(event_id, event, kind, tuple(float(x) for x in loads), fac, it, norm, utils, bounds, warnings)


def run_simulation(cfg: SimConfig, schedule: EdrSchedule | None = None,
                   trace: WorkloadTrace | None = None) -> list[EventRecord]:
    if schedule is None:
        schedule = default_schedule()
    if trace is None:
        trace = acquire_trace(cfg)
    records = []
    for i, ev in enumerate(schedule.events):
        try:
            loads = trace.load_at(ev.start)
            records.append(run_event(cfg, ev, loads, i, schedule.mode))
        except (ValueError, ArithmeticError) as exc:
            raise SimulationError(f"event {i} at {ev.start.isoformat()}: {exc}") from exc
    return records


def alpha_sweep(cfg: SimConfig, event: EdrEvent, loads, alphas, mode: str = "anticipating") -> list[dict]:
    """Facility-level tenant reduction and diesel output as the diesel cost varies."""
    rows = []
    for a in alphas:
        rec = run_event(replace(cfg, alpha=float(a)), event, loads)
        o = rec.outcomes[mode]
        rows.append({"alpha_per_kwh": float(a), "tenant_reduction_kwh": sum(o.reductions),
                     "diesel_kwh": o.diesel, "price_usd_per_kwh": o.price})
    return rows
