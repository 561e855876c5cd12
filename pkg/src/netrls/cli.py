"""Command-line driver: plan schedules, run simulations, evaluate bounds.

Commands::

    netrls plan <config.json> [-o result.json]
    netrls simulate <config.json> -o <trace.csv> [--parallel-runs N]
    netrls bounds <config.json> --at t1,t2,...

Exit codes: 0 ok, 2 configuration error, 3 runtime error. All file output
is byte-deterministic: floats are written with fixed significant digits
(17 in config/plan echoes, 12 in trace columns) and keys in sorted order.
The environment variable ``NETRLS_SEED`` overrides the configured seed.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .bounds import BoundInputs, BurnInError, burn_in, comm_bound, global_bound, local_bound
from .config import (
    ConfigError,
    ResolvedConfig,
    _mean_to_dict,
    config_to_dict,
    load_config,
)
from .planner import PlanResult, Schedule, StoppingTimeNotReachable, plan
from .simnet import ErrorTrace, SimConfig, run

__all__ = ["main"]


def _f17(x: float) -> str:
    return format(float(x), ".17g")


def _f12(x: float) -> str:
    return format(float(x), ".12g")


def _json_text(value, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f"{inner}\"{k}\": {_json_text(value[k], indent + 1)}" for k in sorted(value)
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [f"{inner}{_json_text(v, indent + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _f17(value)
    if isinstance(value, str):
        return "\"" + value.replace("\\", "\\\\").replace("\"", "\\\"") + "\""
    if value is None:
        return "null"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _matrix_flat(a: np.ndarray) -> str:
    return ",".join(_f17(v) for v in np.asarray(a).ravel())


def _trace_meta(cfg: ResolvedConfig, schedule: Schedule, planned: PlanResult | None) -> dict:
    bi = cfg.bound_inputs
    meta = {
        "bounds.delta": _f17(bi.delta),
        "bounds.delta_hat": _f17(bi.delta_hat),
        "bounds.mu_hat_upper": _f17(bi.mu_hat_upper),
        "bounds.sigma_eta_upper": _f17(bi.sigma_eta_upper),
        "bounds.sigma_x_lower": _f17(bi.sigma_x_lower),
        "bounds.sigma_x_upper": _f17(bi.sigma_x_upper),
        "bounds.theta_norm_upper": _f17(bi.theta_norm_upper),
        "model.l": str(cfg.model.l),
        "model.m": str(cfg.model.m),
        "model.mean_schedule": _mean_to_dict(cfg.model.mean)["kind"],
        "model.n": str(cfg.model.n),
        "model.sigma_eta": _f17(cfg.model.sigma_eta),
        "model.sigma_x": _f17(cfg.model.sigma_x),
        "model.theta": _matrix_flat(cfg.model.theta),
        "network.rho": _f17(cfg.weights.rho),
        "network.weights": _matrix_flat(cfg.weights.w),
        "run.horizon": str(cfg.run.horizon),
        "run.runs": str(cfg.run.runs),
        "run.seed": str(cfg.run.seed),
        "schedule.S": str(schedule.S),
        "schedule.T": str(schedule.T),
        "schedule.zeta": str(schedule.zeta),
    }
    if planned is not None:
        meta["plan.epsilon"] = _f17(planned.epsilon)
        meta["plan.epsilon_N"] = _f17(planned.epsilon_N)
        meta["plan.t_first"] = str(planned.t_first)
    return meta


def write_trace(path: str, trace: ErrorTrace, meta: dict,
                bound_inputs: BoundInputs, schedule: Schedule) -> None:
    """Write the averaged trace as CSV with a ``# key=value`` header block.

    Bound columns are evaluated in the conservative mode (mean second
    moments replaced by zero) and left empty below their burn-in.
    """
    lines = [f"# {k}={meta[k]}" for k in sorted(meta)]
    lines.append("t,local_err_mean,comm_err_mean,global_err,local_bound,comm_bound,"
                 "comm_fired,pre_invertible_count")
    local_from = max(1, math.ceil(burn_in(bound_inputs, "delta").threshold))
    comm_from = max(1, math.ceil(burn_in(bound_inputs, "delta_hat").threshold))
    for idx, t in enumerate(trace.t):
        t = int(t)
        lb = _f12(local_bound(bound_inputs, t).value) if t >= local_from else ""
        cb = _f12(comm_bound(bound_inputs, t, schedule.T).value) if t >= comm_from else ""
        lines.append(",".join([
            str(t),
            _f12(trace.local_err[idx]),
            _f12(trace.comm_err[idx]),
            _f12(trace.global_err[idx]),
            lb,
            cb,
            str(int(trace.comm_fired[idx])),
            _f12(trace.pre_invertible_count[idx]),
        ]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _resolve_schedule(cfg: ResolvedConfig) -> tuple[Schedule, PlanResult | None]:
    if cfg.schedule is not None:
        return cfg.schedule, None
    p = cfg.plan
    result = plan(cfg.bound_inputs, p.zeta, p.epsilon, p.epsilon_N, max_t=p.max_t)
    return result.schedule(), result


def cmd_plan(config_path: str, out_path: str) -> int:
    cfg = load_config(config_path)
    if cfg.plan is None:
        raise ConfigError("plan", "the plan command needs a 'plan' section")
    result = plan(cfg.bound_inputs, cfg.plan.zeta, cfg.plan.epsilon,
                  cfg.plan.epsilon_N, max_t=cfg.plan.max_t)
    payload = {
        "T": result.T,
        "S": result.S,
        "t_first": result.t_first,
        "zeta": result.zeta,
        "epsilon": result.epsilon,
        "epsilon_N": result.epsilon_N,
        "rho": result.rho,
        "C1": result.C1,
        "c1": result.c1,
        "c2": result.c2,
        "c3": result.c3,
        "config": config_to_dict(cfg),
    }
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_json_text(payload) + "\n")
    print(f"consensus steps per phase: T = {result.T}")
    print(f"stopping time: S = {result.S} (first communication at t = {result.t_first})")
    print(f"mixing rate rho = {_f12(result.rho)}, period zeta = {result.zeta}")
    print(f"constants: C1 = {_f12(result.C1)}, c1 = {_f12(result.c1)}, "
          f"c2 = {_f12(result.c2)}, c3 = {_f12(result.c3)}")
    print(f"wrote {out_path}")
    return 0


def cmd_simulate(config_path: str, out_path: str, parallel: int) -> int:
    cfg = load_config(config_path)
    if cfg.run is None:
        raise ConfigError("run", "the simulate command needs a 'run' section")
    schedule, planned = _resolve_schedule(cfg)
    if cfg.run.horizon < schedule.S:
        raise ConfigError("run.horizon",
                          f"horizon {cfg.run.horizon} does not cover the stopping time {schedule.S}")
    sim = SimConfig(model=cfg.model, weights=cfg.weights, schedule=schedule,
                    horizon=cfg.run.horizon, runs=cfg.run.runs, seed=cfg.run.seed,
                    writeback_mixed=cfg.run.writeback_mixed)
    _, averaged = run(sim, parallel=parallel)
    write_trace(out_path, averaged, _trace_meta(cfg, schedule, planned),
                cfg.bound_inputs, schedule)
    print(f"wrote {out_path} ({len(averaged.t)} rows, {cfg.run.runs} runs averaged)")
    return 0


def cmd_bounds(config_path: str, at: str) -> int:
    cfg = load_config(config_path)
    try:
        ts = [int(part) for part in at.split(",") if part.strip()]
    except ValueError:
        raise ConfigError("--at", f"expected comma-separated integers, got {at!r}") from None
    if not ts:
        raise ConfigError("--at", "needs at least one time step")
    schedule, _ = _resolve_schedule(cfg)
    bi = cfg.bound_inputs

    header = (f"{'t':>8}  {'local':>12}  {'global':>12}  {f'comm(T={schedule.T})':>14}  "
              f"{'network':>12}  {'noise':>12}  note")
    print(header)
    for t in ts:
        cells = []
        notes = []
        try:
            cells.append(_f12(local_bound(bi, t).value).rjust(12))
        except BurnInError:
            cells.append("-".rjust(12))
            notes.append("local")
        try:
            cells.append(_f12(global_bound(bi, t).value).rjust(12))
        except BurnInError:
            cells.append("-".rjust(12))
            notes.append("global")
        try:
            rep = comm_bound(bi, t, schedule.T)
            cells.append(_f12(rep.value).rjust(14))
            cells.append(_f12(rep.network_term).rjust(12))
            cells.append(_f12(rep.noise_term).rjust(12))
        except BurnInError:
            cells.extend(["-".rjust(14), "-".rjust(12), "-".rjust(12)])
            notes.append("communicated")
        note = f"below burn-in: {', '.join(notes)}" if notes else ""
        print(f"{t:>8}  " + "  ".join(cells) + (f"  {note}" if note else ""))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="netrls",
        description="Distributed online least-squares estimation: planner, simulator, bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="compute consensus depth T and stopping time S")
    p_plan.add_argument("config")
    p_plan.add_argument("-o", "--output", default="plan_result.json")

    p_sim = sub.add_parser("simulate", help="run the simulation and write a CSV trace")
    p_sim.add_argument("config")
    p_sim.add_argument("-o", "--output", required=True)
    p_sim.add_argument("--parallel-runs", type=int, default=1)

    p_bounds = sub.add_parser("bounds", help="tabulate the error bounds at given times")
    p_bounds.add_argument("config")
    p_bounds.add_argument("--at", required=True, help="comma-separated time steps")

    args = parser.parse_args(argv)
    try:
        if args.command == "plan":
            return cmd_plan(args.config, args.output)
        if args.command == "simulate":
            return cmd_simulate(args.config, args.output, args.parallel_runs)
        return cmd_bounds(args.config, args.at)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except StoppingTimeNotReachable as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (RuntimeError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
