"""Per-tenant workload traces: CSV ingestion and a seeded synthetic generator."""
from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class WorkloadTrace:
    timestamps: tuple[datetime, ...]
    loads: np.ndarray  # shape (steps, tenants), normalised to [0, 1]

    def __post_init__(self):
        loads = np.asarray(self.loads, dtype=float)
        if loads.ndim != 2 or loads.shape[0] != len(self.timestamps) or loads.shape[0] == 0:
            raise TraceError("loads must be a (steps, tenants) array matching the timestamps")
        if np.any(loads < 0.0) or np.any(loads > 1.0) or not np.all(np.isfinite(loads)):
            raise TraceError("loads must lie in [0, 1]")
        if any(b <= a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise TraceError("timestamps must be strictly increasing")
        loads.setflags(write=False)
        object.__setattr__(self, "loads", loads)

    @property
    def tenants(self) -> int:
        return self.loads.shape[1]

    @property
    def step(self) -> timedelta:
        if len(self.timestamps) < 2:
            return timedelta(0)
        return self.timestamps[1] - self.timestamps[0]

    def load_at(self, when: datetime) -> np.ndarray:
        """Loads of the most recent sample at or before ``when``."""
        i = bisect.bisect_right(self.timestamps, when) - 1
        if i < 0 or when > self.timestamps[-1] + self.step:
            raise TraceError(f"{when.isoformat()} is outside the trace span")
        return self.loads[i]


def synthetic_trace(tenants: int, mean: float = 0.3, amplitude: float = 0.1, noise: float = 0.02,
                    steps: int = 1440, step_minutes: float = 15.0, seed: int = 7,
                    start: datetime = datetime(2014, 1, 7)) -> WorkloadTrace:
    """Daily sinusoid plus Gaussian noise, one phase offset per tenant, clipped to [0, 1]."""
    if not 0.0 < mean < 1.0:
        raise TraceError("mean utilisation must lie in (0, 1)")
    if steps < 1 or tenants < 1:
        raise TraceError("need at least one step and one tenant")
    rng = np.random.default_rng(seed)
    hours = np.arange(steps) * step_minutes / 60.0
    phase = np.arange(tenants) * math.pi / 6.0
    wave = np.sin(2.0 * math.pi * hours[:, None] / 24.0 - phase[None, :])
    loads = np.clip(mean + amplitude * wave + noise * rng.standard_normal((steps, tenants)), 0.0, 1.0)
    stamps = tuple(start + timedelta(minutes=step_minutes * i) for i in range(steps))
    return WorkloadTrace(stamps, loads)


def read_trace_csv(source) -> WorkloadTrace:
    """Parse ``timestamp,tenant_1,...,tenant_N`` from a path or text stream."""
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return read_trace_csv(fh)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise TraceError("line 1: empty trace file") from None
    if len(header) < 2 or header[0].strip() != "timestamp":
        raise TraceError("line 1: header must be timestamp,tenant_1,...")
    stamps, rows = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise TraceError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            stamps.append(datetime.fromisoformat(row[0].strip()))
            vals = [float(x) for x in row[1:]]
        except ValueError as exc:
            raise TraceError(f"line {lineno}: {exc}") from None
        bad = [v for v in vals if not 0.0 <= v <= 1.0]
        if bad:
            raise TraceError(f"line {lineno}: load {bad[0]} outside [0, 1]")
        if len(stamps) > 1 and stamps[-1] <= stamps[-2]:
            raise TraceError(f"line {lineno}: timestamps must be strictly increasing")
        rows.append(vals)
    if not rows:
        raise TraceError("trace has no data rows")
    return WorkloadTrace(tuple(stamps), np.array(rows))


def write_trace_csv(trace: WorkloadTrace, target=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["timestamp"] + [f"tenant_{i + 1}" for i in range(trace.tenants)])
    for t, row in zip(trace.timestamps, trace.loads):
        w.writerow([t.isoformat()] + [repr(float(x)) for x in row])
    text = buf.getvalue()
    if target is not None:
        Path(target).write_text(text)
    return text
