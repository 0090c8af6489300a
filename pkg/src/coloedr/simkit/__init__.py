from .config import (DEFAULT_TENANTS, EdrEvent, EdrSchedule, SimConfig, TenantSpec, TraceSource, config_from_record,
                     daily_profile, default_schedule, read_schedule_csv)
from .report import METRICS, emit_report, metric_row, report_record
from .runner import (EventRecord, SimulationError, acquire_trace, alpha_sweep, build_event_costs, post_event_utilization,
                     run_event, run_simulation)
from .trace import TraceError, WorkloadTrace, read_trace_csv, synthetic_trace, write_trace_csv

__all__ = [
    "DEFAULT_TENANTS", "EdrEvent", "EdrSchedule", "SimConfig", "TenantSpec", "TraceSource", "config_from_record",
    "daily_profile", "default_schedule", "read_schedule_csv", "METRICS", "emit_report", "metric_row",
    "report_record", "EventRecord", "SimulationError", "acquire_trace", "alpha_sweep", "build_event_costs",
    "post_event_utilization", "run_event", "run_simulation", "TraceError", "WorkloadTrace", "read_trace_csv",
    "synthetic_trace", "write_trace_csv",
]
