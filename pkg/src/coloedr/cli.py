"""Command-line front end.

Exit status: 0 on success, 1 when a verification or bound check fails, 2
on invalid input (the message names the offending config path).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from .analysis import kkt_residuals, nash_certificate, run_bound_sweep
from .analysis.bounds import check_bounds_mandatory, check_bounds_voluntary
from .cost_models import ConfigError, WorstCaseSpec, make_worst_case_instance
from .mandatory_market import MODES as MANDATORY_MODES
from .mandatory_market import MandatoryScenario, normalize_pue, solve_mandatory
from .mandatory_market import scenario_from_record as mandatory_from_record
from .simkit import (SimConfig, TraceError, config_from_record, default_schedule, emit_report, read_schedule_csv,
                     run_simulation, synthetic_trace, write_trace_csv)
from .simkit.runner import SimulationError
from .voluntary_market import MODES as VOLUNTARY_MODES
from .voluntary_market import scenario_from_record as voluntary_from_record
from .voluntary_market import solve_vdr

NASH_TOL = 1e-4
KKT_TOL = 1e-7


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(path, "file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(path, f"invalid JSON at line {exc.lineno}: {exc.msg}") from None


def _load_scenario(path: str):
    """Mandatory when the config names a target, voluntary when it names a rate."""
    rec = _load_json(path)
    if not isinstance(rec, dict):
        raise ConfigError("config", "expected an object")
    if "delta_kwh" in rec:
        return "mandatory", mandatory_from_record(rec)
    if "u_per_kwh" in rec:
        return "voluntary", voluntary_from_record(rec)
    raise ConfigError("config", "expected either delta_kwh (mandatory) or u_per_kwh (voluntary)")


def _outcomes_csv(outcomes: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    rows = [o.to_record() for o in outcomes.values()]
    scalar = [k for k, v in rows[0].items() if not isinstance(v, (list, dict))]
    listed = [k for k, v in rows[0].items() if isinstance(v, list)]
    w.writerow(scalar + ["tenant"] + listed)
    for r in rows:
        for i in range(len(r[listed[0]])):
            w.writerow([r[k] for k in scalar] + [i] + [repr(float(r[k][i])) for k in listed])
    return buf.getvalue()


def _write(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------------

def cmd_solve(args) -> int:
    market, scn = _load_scenario(args.config)
    modes = MANDATORY_MODES if market == "mandatory" else VOLUNTARY_MODES
    wanted = modes if args.mode == "all" else (args.mode,)
    if any(m not in modes for m in wanted):
        raise ConfigError("mode", f"{args.mode!r} is not a {market} mode")
    solve = solve_mandatory if market == "mandatory" else solve_vdr
    outcomes = {m: solve(scn, m) for m in wanted}
    if args.format == "csv":
        _write(_outcomes_csv(outcomes), args.output)
    elif len(outcomes) == 1:
        _write(_dumps(next(iter(outcomes.values())).to_record()), args.output)
    else:
        _write(_dumps({m: o.to_record() for m, o in outcomes.items()}), args.output)
    return 0


def cmd_verify(args) -> int:
    market, scn = _load_scenario(args.config)
    if market == "mandatory":
        scn = normalize_pue(scn)
        outs = {m: solve_mandatory(scn, m) for m in ("taking", "anticipating", "social")}
        report = check_bounds_mandatory(outs["taking"], outs["anticipating"], outs["social"], scn)
        size = scn.delta
    else:
        outs = {m: solve_vdr(scn, m) for m in ("taking", "anticipating", "social")}
        report = check_bounds_voluntary(outs["taking"], outs["anticipating"], outs["social"], scn)
        size = scn.total
    result = {"market": market, "bounds": report.to_record(), "nash": {}, "kkt": {}}
    ok = report.passed
    for m, o in outs.items():
        k = kkt_residuals(o, scn)
        result["kkt"][m] = {"residual": k, "passed": k <= KKT_TOL}
        ok &= k <= KKT_TOL
        if m == "social":
            continue
        cert = nash_certificate(o, scn, m, args.grid)
        scale = max(o.price * size, 1e-300)
        eps = cert.max_epsilon / scale
        result["nash"][m] = {"max_relative_improvement": eps, "passed": eps <= NASH_TOL,
                             "evaluations_per_tenant": cert.entries[0].evaluations}
        ok &= eps <= NASH_TOL
    result["passed"] = bool(ok)
    _write(_dumps(result), args.output)
    return 0 if ok else 1


def cmd_bounds(args) -> int:
    if args.count < 0:
        raise ConfigError("count", "must be nonnegative")
    if not 2 <= args.n_min <= args.n_max:
        raise ConfigError("n-min", "need 2 <= n-min <= n-max")
    res = run_bound_sweep(args.count, args.seed, (args.n_min, args.n_max), voluntary=args.voluntary)
    if args.format == "text":
        text = res.summary() + "\n" + "".join(f"failure: {f}\n" for f in res.failures)
    else:
        text = _dumps({"market": "voluntary" if args.voluntary else "mandatory", "count": res.count,
                       "seed": res.seed, "failures": res.failures, "worst_margin": res.worst_margin,
                       "worst_kkt": res.worst_kkt, "worst_balance": res.worst_balance, "passed": res.passed})
    _write(text, args.output)
    return 0 if res.passed else 1


def cmd_worst_case(args) -> int:
    try:
        spec = WorstCaseSpec(args.epsilon, args.delta, args.alpha, args.n)
        scn = MandatoryScenario(spec.delta, spec.alpha, make_worst_case_instance(spec))
    except ValueError as exc:
        raise ConfigError("worst-case", str(exc)) from None
    outs = {m: solve_mandatory(scn, m) for m in ("taking", "anticipating", "social")}
    gap = outs["anticipating"].diesel - outs["social"].diesel
    _write(_dumps({"epsilon": spec.epsilon, "delta_kwh": spec.delta, "alpha_per_kwh": spec.alpha, "n": spec.N,
                   "diesel_gap_kwh": gap, "expected_gap_kwh": spec.delta - spec.epsilon,
                   "outcomes": {m: o.to_record() for m, o in outs.items()}}), args.output)
    return 0


def cmd_simulate(args) -> int:
    cfg = config_from_record(_load_json(args.config)) if args.config else SimConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    schedule = read_schedule_csv(args.schedule) if args.schedule else default_schedule(args.peak_kwh)
    try:
        records = run_simulation(cfg, schedule)
    except (TraceError, OSError) as exc:
        raise ConfigError("trace", str(exc)) from None
    _write(emit_report(records, [t.u_bar for t in cfg.tenants], args.format), args.output)
    return 0 if all(r.bounds.passed for r in records) else 1


def cmd_gen_trace(args) -> int:
    try:
        trace = synthetic_trace(args.tenants, args.mean, args.amplitude, args.noise, args.steps,
                                args.step_minutes, args.seed)
    except TraceError as exc:
        raise ConfigError("gen-trace", str(exc)) from None
    _write(write_trace_csv(trace), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coloedr", description="Supply-function bidding for colocation demand response.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one market configuration")
    s.add_argument("--config", required=True)
    s.add_argument("--mode", default="taking", help="taking, anticipating, social, diesel-only or all")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.add_argument("--output")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("verify", help="check equilibria, optimality conditions and bounds on a configuration")
    s.add_argument("--config", required=True)
    s.add_argument("--grid", type=int, default=1000, help="points per scan stage")
    s.add_argument("--output")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("bounds", help="randomised bound sweep")
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--n-min", type=int, default=2)
    s.add_argument("--n-max", type=int, default=20)
    s.add_argument("--voluntary", action="store_true")
    s.add_argument("--format", choices=("json", "text"), default="text")
    s.add_argument("--output")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("worst-case", help="instance with the largest anticipating diesel overshoot")
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--output")
    s.set_defaults(func=cmd_worst_case)

    s = sub.add_parser("simulate", help="replay an event schedule against workload traces")
    s.add_argument("--config", help="simulation config JSON (defaults if omitted)")
    s.add_argument("--schedule", help="schedule CSV (24 hourly events if omitted)")
    s.add_argument("--peak-kwh", type=float, default=900.0, help="peak target of the default schedule")
    s.add_argument("--seed", type=int, help="override the synthetic trace seed")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.add_argument("--output")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("gen-trace", help="write a synthetic workload trace CSV")
    s.add_argument("--tenants", type=int, default=3)
    s.add_argument("--mean", type=float, default=0.3)
    s.add_argument("--amplitude", type=float, default=0.1)
    s.add_argument("--noise", type=float, default=0.02)
    s.add_argument("--steps", type=int, default=1440)
    s.add_argument("--step-minutes", type=float, default=15.0)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--output")
    s.set_defaults(func=cmd_gen_trace)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
