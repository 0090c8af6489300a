"""Simulation configuration, event schedules and their file formats."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from pathlib import Path

from ..cost_models import ConfigError, _num


@dataclass(frozen=True)
class TenantSpec:
    M: float = 2000.0
    idle_kw: float = 0.15
    peak_kw: float = 0.25
    beta: float = 0.1
    u_bar: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.idle_kw < self.peak_kw:
            raise ValueError("need 0 < idle_kw < peak_kw")
        if not 0.0 < self.u_bar <= 1.0:
            raise ValueError("u_bar must lie in (0, 1]")
        if not (self.M > 0 and self.beta > 0):
            raise ValueError("M and beta must be positive")


@dataclass(frozen=True)
class TraceSource:
    kind: str = "synthetic"
    path: str | None = None
    mean_util: float = 0.3
    amplitude: float = 0.1
    noise: float = 0.02
    seed: int = 7
    steps: int = 1440
    step_minutes: float = 15.0
    start: datetime = datetime(2014, 1, 7)


DEFAULT_TENANTS = (
    TenantSpec(beta=0.1, u_bar=0.5),
    TenantSpec(beta=0.03, u_bar=0.6),
    TenantSpec(beta=0.006, u_bar=0.8),
)


@dataclass(frozen=True)
class SimConfig:
    tenants: tuple[TenantSpec, ...] = DEFAULT_TENANTS
    pue: float = 1.5
    alpha: float = 0.3
    trace: TraceSource = field(default_factory=TraceSource)
    overestimation: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "tenants", tuple(self.tenants))
        if len(self.tenants) < 2:
            raise ValueError("at least two tenants are required")
        if not 1.0 <= self.pue <= 3.0:
            raise ValueError("pue must lie in [1, 3]")
        if not self.alpha > 0.0 or not self.overestimation > 0.0:
            raise ValueError("alpha and overestimation must be positive")

    def with_seed(self, seed: int) -> "SimConfig":
        return replace(self, trace=replace(self.trace, seed=seed))


@dataclass(frozen=True)
class EdrEvent:
    start: datetime
    duration_h: float
    target_kwh: float | None = None
    u_per_kwh: float | None = None

    @property
    def end(self) -> datetime:
        return self.start + timedelta(hours=self.duration_h)


@dataclass(frozen=True)
class EdrSchedule:
    events: tuple[EdrEvent, ...]
    mode: str = "mandatory"

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if self.mode not in ("mandatory", "voluntary"):
            raise ValueError("mode must be mandatory or voluntary")
        for i, ev in enumerate(self.events):
            if not ev.duration_h > 0:
                raise ValueError(f"event {i}: duration must be positive")
            if self.mode == "mandatory" and not (ev.target_kwh and ev.target_kwh > 0):
                raise ValueError(f"event {i}: mandatory events need a positive target")
            if self.mode == "voluntary" and not (ev.u_per_kwh and ev.u_per_kwh > 0):
                raise ValueError(f"event {i}: voluntary events need a positive rate")
        ordered = sorted(self.events, key=lambda e: e.start)
        for a, b in zip(ordered, ordered[1:]):
            if b.start < a.end:
                raise ValueError(f"events starting {a.start.isoformat()} and {b.start.isoformat()} overlap")


def daily_profile(hours: int = 24) -> list[float]:
    """Relative reduction targets over a winter day: morning and evening peaks, scaled to a maximum of 1."""
    raw = []
    for h in range(hours):
        t = h + 0.5
        raw.append(0.25 + 0.55 * math.exp(-((t - 8.0) / 2.5) ** 2) + 0.75 * math.exp(-((t - 18.5) / 2.5) ** 2))
    top = max(raw)
    return [x / top for x in raw]


def default_schedule(peak_kwh: float = 900.0, hours: int = 24, start: datetime = datetime(2014, 1, 7),
                     duration_h: float = 1.0) -> EdrSchedule:
    events = [EdrEvent(start + timedelta(hours=i * duration_h), duration_h, peak_kwh * f)
              for i, f in enumerate(daily_profile(hours))]
    return EdrSchedule(events)


# ----------------------------------------------------------------------------
# Parsing
# ----------------------------------------------------------------------------

def _trace_from_record(rec, path: str) -> TraceSource:
    if not isinstance(rec, dict):
        raise ConfigError(path, "expected an object")
    kind = rec.get("kind", "synthetic")
    if kind == "file":
        if not isinstance(rec.get("path"), str):
            raise ConfigError(f"{path}.path", "file traces need a path")
        return TraceSource(kind="file", path=rec["path"])
    if kind != "synthetic":
        raise ConfigError(f"{path}.kind", f"unknown trace kind {kind!r}")
    d = TraceSource()
    mean = _num(rec, "mean_util", path, d.mean_util)
    if not 0.0 < mean < 1.0:
        raise ConfigError(f"{path}.mean_util", "must lie in (0, 1)")
    seed = rec.get("seed", d.seed)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(f"{path}.seed", "expected an integer")
    steps = rec.get("steps", d.steps)
    if not isinstance(steps, int) or steps < 1:
        raise ConfigError(f"{path}.steps", "expected a positive integer")
    start = d.start
    if "start" in rec:
        try:
            start = datetime.fromisoformat(rec["start"])
        except (TypeError, ValueError):
            raise ConfigError(f"{path}.start", "expected an ISO-8601 timestamp") from None
    return TraceSource("synthetic", None, mean, _num(rec, "amplitude", path, d.amplitude, nonneg=True),
                       _num(rec, "noise", path, d.noise, nonneg=True), seed, steps,
                       _num(rec, "step_minutes", path, d.step_minutes, positive=True), start)


def config_from_record(rec) -> SimConfig:
    if not isinstance(rec, dict):
        raise ConfigError("config", "expected an object")
    base = SimConfig()
    tenants = base.tenants
    if "tenants" in rec:
        if not isinstance(rec["tenants"], list) or len(rec["tenants"]) < 2:
            raise ConfigError("tenants", "expected a list of at least two tenants")
        tenants = []
        for i, t in enumerate(rec["tenants"]):
            p = f"tenants[{i}]"
            if not isinstance(t, dict):
                raise ConfigError(p, "expected an object")
            d = TenantSpec()
            try:
                tenants.append(TenantSpec(_num(t, "M", p, d.M, positive=True),
                                          _num(t, "idle_kw", p, d.idle_kw, positive=True),
                                          _num(t, "peak_kw", p, d.peak_kw, positive=True),
                                          _num(t, "beta", p, positive=True),
                                          _num(t, "u_bar", p, positive=True)))
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(p, str(exc)) from None
    pue = _num(rec, "pue", "config", base.pue)
    if not 1.0 <= pue <= 3.0:
        raise ConfigError("pue", "must lie in [1, 3]")
    alpha = _num(rec, "alpha_per_kwh", "config", base.alpha, positive=True)
    over = _num(rec, "overestimation", "config", base.overestimation, positive=True)
    trace = _trace_from_record(rec["trace"], "trace") if "trace" in rec else base.trace
    return SimConfig(tuple(tenants), pue, alpha, trace, over)


def read_schedule_csv(source) -> EdrSchedule:
    """Parse ``start,duration_h,target_kwh[,u_per_kwh]``.

    Rows with a rate make the schedule voluntary; the rate column must then
    be filled on every row.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return read_schedule_csv(fh)
    reader = csv.reader(source)
    header = [h.strip() for h in next(reader, [])]
    if header[:3] != ["start", "duration_h", "target_kwh"]:
        raise ConfigError("schedule:1", "header must start with start,duration_h,target_kwh")
    has_rate = len(header) > 3 and header[3] == "u_per_kwh"
    events = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            start = datetime.fromisoformat(row[0].strip())
            dur = float(row[1])
            target = float(row[2]) if row[2].strip() else None
            rate = float(row[3]) if has_rate and len(row) > 3 and row[3].strip() else None
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"schedule:{lineno}", str(exc)) from None
        events.append(EdrEvent(start, dur, target, rate))
    mode = "voluntary" if has_rate and events and all(e.u_per_kwh is not None for e in events) else "mandatory"
    try:
        return EdrSchedule(events, mode)
    except ValueError as exc:
        raise ConfigError("schedule", str(exc)) from None
