"""JSON experiment configuration: loading, validation, resolution.

A config file has sections ``model``, ``network``, optional ``bounds``,
exactly one of ``plan`` or ``schedule``, and (for simulation) ``run``.
Matrices may be given as nested rows or as flat row-major arrays.
Validation errors carry the dotted path of the offending field.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .bounds import BoundInputs
from .consensus import (
    WeightMatrix,
    WeightMatrixError,
    complete_weights,
    ring_weights,
    validate_weights,
)
from .model_gen import ConstantMean, ModelSpec, SinusoidMean, ZeroMean
from .planner import Schedule

__all__ = ["ConfigError", "PlanParams", "RunParams", "ResolvedConfig",
           "load_config", "resolve_config", "config_to_dict", "SEED_ENV_VAR"]

SEED_ENV_VAR = "NETRLS_SEED"

_DEFAULT_DELTA = 0.05
_DEFAULT_DELTA_HAT = 0.001


class ConfigError(Exception):
    """Invalid or missing configuration; ``path`` is the dotted field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class PlanParams:
    zeta: int
    epsilon: float
    epsilon_N: float
    max_t: int = 10**6


@dataclass(frozen=True)
class RunParams:
    horizon: int
    runs: int
    seed: int
    writeback_mixed: bool = False


@dataclass(frozen=True)
class ResolvedConfig:
    model: ModelSpec
    weights: WeightMatrix
    bound_inputs: BoundInputs
    plan: PlanParams | None
    schedule: Schedule | None
    run: RunParams | None


class _Section:
    """Typed accessors over one config dict, tracking dotted paths."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ConfigError(path, f"expected an object, got {type(data).__name__}")
        self.data = data
        self.path = path

    def sub(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def require(self, key: str):
        if key not in self.data:
            raise ConfigError(self.sub(key), "required field is missing")
        return self.data[key]

    def number(self, key: str, default=None) -> float:
        if key not in self.data:
            if default is None:
                raise ConfigError(self.sub(key), "required field is missing")
            return default
        v = self.data[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(self.sub(key), f"expected a number, got {v!r}")
        return float(v)

    def integer(self, key: str, default=None) -> int:
        if key not in self.data:
            if default is None:
                raise ConfigError(self.sub(key), "required field is missing")
            return default
        v = self.data[key]
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(self.sub(key), f"expected an integer, got {v!r}")
        return v

    def boolean(self, key: str, default: bool) -> bool:
        v = self.data.get(key, default)
        if not isinstance(v, bool):
            raise ConfigError(self.sub(key), f"expected a boolean, got {v!r}")
        return v

    def matrix(self, key: str, rows: int, cols: int) -> np.ndarray:
        """Accept nested rows or a flat row-major array of the right size."""
        raw = self.require(key)
        path = self.sub(key)
        if not isinstance(raw, list):
            raise ConfigError(path, f"expected an array, got {type(raw).__name__}")
        try:
            arr = np.asarray(raw, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(path, "expected numeric entries") from None
        if arr.ndim == 1:
            if arr.size != rows * cols:
                raise ConfigError(
                    path, f"flat row-major array has {arr.size} entries, expected {rows * cols}"
                )
            arr = arr.reshape(rows, cols)
        if arr.shape != (rows, cols):
            raise ConfigError(path, f"has shape {arr.shape}, expected {(rows, cols)}")
        return arr

    def vector(self, key: str, length: int) -> np.ndarray:
        raw = self.require(key)
        path = self.sub(key)
        try:
            arr = np.asarray(raw, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(path, "expected numeric entries") from None
        if arr.shape != (length,):
            raise ConfigError(path, f"has shape {arr.shape}, expected {(length,)}")
        return arr

    def unknown_keys(self, allowed: set[str]) -> None:
        extra = set(self.data) - allowed
        if extra:
            raise ConfigError(self.sub(sorted(extra)[0]), "unknown field")


def _resolve_mean(section: _Section, m: int, n: int):
    kind = section.data.get("kind")
    if kind == "zero":
        section.unknown_keys({"kind"})
        return ZeroMean()
    if kind == "constant":
        section.unknown_keys({"kind", "vectors"})
        return ConstantMean(vectors=section.matrix("vectors", m, n))
    if kind == "sinusoid":
        section.unknown_keys({"kind", "amplitudes", "periods"})
        return SinusoidMean(
            amplitudes=section.matrix("amplitudes", m, n),
            periods=section.vector("periods", m),
        )
    raise ConfigError(section.sub("kind"), f"expected 'zero', 'constant' or 'sinusoid', got {kind!r}")


def _resolve_model(section: _Section) -> ModelSpec:
    section.unknown_keys({"theta", "n", "l", "m", "sigma_x", "sigma_eta", "mean_schedule"})
    n = section.integer("n")
    l = section.integer("l")
    m = section.integer("m")
    if n < 1 or l < 1:
        raise ConfigError(section.sub("n" if n < 1 else "l"), "must be >= 1")
    if m < 1:
        raise ConfigError(section.sub("m"), "must be >= 1")
    theta = section.matrix("theta", l, n)
    mean_raw = section.data.get("mean_schedule", {"kind": "zero"})
    mean = _resolve_mean(_Section(mean_raw, section.sub("mean_schedule")), m, n)
    try:
        return ModelSpec(
            theta=theta,
            sigma_x=section.number("sigma_x"),
            sigma_eta=section.number("sigma_eta"),
            m=m,
            mean=mean,
        )
    except ValueError as e:
        raise ConfigError(section.path, str(e)) from None


def _resolve_network(section: _Section, m: int) -> WeightMatrix:
    if "weights" in section.data:
        section.unknown_keys({"weights"})
        try:
            return validate_weights(section.matrix("weights", m, m))
        except WeightMatrixError as e:
            raise ConfigError(section.sub("weights"), f"{e.clause}: {e}") from None
    topology = section.data.get("topology")
    if topology == "ring":
        section.unknown_keys({"topology", "self_weight"})
        try:
            return ring_weights(m, section.number("self_weight", 1.0 / 3.0))
        except (ValueError, WeightMatrixError) as e:
            raise ConfigError(section.sub("topology"), str(e)) from None
    if topology == "complete":
        section.unknown_keys({"topology"})
        return complete_weights(m)
    raise ConfigError(
        section.path, "needs either 'weights' or 'topology' in {'ring', 'complete'}"
    )


def _resolve_bounds(section: _Section, model: ModelSpec, weights: WeightMatrix) -> BoundInputs:
    section.unknown_keys({
        "delta", "delta_hat", "sigma_x_lower", "sigma_x_upper",
        "sigma_eta_upper", "mu_hat_upper", "theta_norm_upper",
    })
    try:
        return BoundInputs(
            n=model.n,
            l=model.l,
            m=model.m,
            sigma_x_lower=section.number("sigma_x_lower", model.sigma_x),
            sigma_x_upper=section.number("sigma_x_upper", model.sigma_x),
            sigma_eta_upper=section.number("sigma_eta_upper", model.sigma_eta),
            mu_hat_upper=section.number("mu_hat_upper", model.mu_hat),
            theta_norm_upper=section.number("theta_norm_upper", model.theta_norm),
            delta=section.number("delta", _DEFAULT_DELTA),
            delta_hat=section.number("delta_hat", _DEFAULT_DELTA_HAT),
            rho=weights.rho,
        )
    except ValueError as e:
        raise ConfigError(section.path, str(e)) from None


def resolve_config(data: dict) -> ResolvedConfig:
    """Validate a parsed JSON object and build the typed configuration."""
    root = _Section(data, "")
    root.unknown_keys({"model", "network", "bounds", "plan", "schedule", "run"})
    model = _resolve_model(_Section(root.require("model"), "model"))
    weights = _resolve_network(_Section(root.require("network"), "network"), model.m)
    bound_inputs = _resolve_bounds(
        _Section(root.data.get("bounds", {}), "bounds"), model, weights
    )

    has_plan = "plan" in data
    has_schedule = "schedule" in data
    if has_plan == has_schedule:
        raise ConfigError(
            "plan" if has_plan else "schedule",
            "exactly one of 'plan' or 'schedule' must be present",
        )

    plan = None
    schedule = None
    if has_plan:
        sec = _Section(data["plan"], "plan")
        sec.unknown_keys({"zeta", "epsilon", "epsilon_N", "max_t"})
        plan = PlanParams(
            zeta=sec.integer("zeta"),
            epsilon=sec.number("epsilon"),
            epsilon_N=sec.number("epsilon_N"),
            max_t=sec.integer("max_t", 10**6),
        )
        if plan.zeta < 1:
            raise ConfigError("plan.zeta", "must be >= 1")
        if plan.epsilon <= 0:
            raise ConfigError("plan.epsilon", "must be positive")
        if plan.epsilon_N <= 0:
            raise ConfigError("plan.epsilon_N", "must be positive")
    else:
        sec = _Section(data["schedule"], "schedule")
        sec.unknown_keys({"zeta", "T", "S"})
        try:
            schedule = Schedule(
                zeta=sec.integer("zeta"), T=sec.integer("T"), S=sec.integer("S")
            )
        except ValueError as e:
            raise ConfigError("schedule", str(e)) from None

    run = None
    if "run" in data:
        sec = _Section(data["run"], "run")
        sec.unknown_keys({"horizon", "runs", "seed", "writeback_mixed"})
        seed = sec.integer("seed")
        env_seed = os.environ.get(SEED_ENV_VAR)
        if env_seed is not None:
            try:
                seed = int(env_seed)
            except ValueError:
                raise ConfigError("run.seed", f"{SEED_ENV_VAR} is not an integer: {env_seed!r}") from None
        run = RunParams(horizon=sec.integer("horizon"), runs=sec.integer("runs"), seed=seed,
                        writeback_mixed=sec.boolean("writeback_mixed", False))
        if run.horizon < 1:
            raise ConfigError("run.horizon", "must be >= 1")
        if run.runs < 1:
            raise ConfigError("run.runs", "must be >= 1")
        if not 0 <= run.seed < 2**64:
            raise ConfigError("run.seed", "must fit in 64 bits")

    return ResolvedConfig(model=model, weights=weights, bound_inputs=bound_inputs,
                          plan=plan, schedule=schedule, run=run)


def load_config(path: str) -> ResolvedConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as e:
        raise ConfigError(str(path), f"cannot read config: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(str(path), f"invalid JSON: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(str(path), "top-level JSON value must be an object")
    return resolve_config(data)


def _mean_to_dict(mean) -> dict:
    if isinstance(mean, ZeroMean):
        return {"kind": "zero"}
    if isinstance(mean, ConstantMean):
        return {"kind": "constant", "vectors": mean.vectors.tolist()}
    return {
        "kind": "sinusoid",
        "amplitudes": mean.amplitudes.tolist(),
        "periods": mean.periods.tolist(),
    }


def config_to_dict(cfg: ResolvedConfig) -> dict:
    """Canonical JSON-ready form of a resolved config (dense weights,
    explicit bounds). Re-resolving it reproduces identical outputs."""
    out: dict = {
        "model": {
            "theta": cfg.model.theta.tolist(),
            "n": cfg.model.n,
            "l": cfg.model.l,
            "m": cfg.model.m,
            "sigma_x": cfg.model.sigma_x,
            "sigma_eta": cfg.model.sigma_eta,
            "mean_schedule": _mean_to_dict(cfg.model.mean),
        },
        "network": {"weights": cfg.weights.w.tolist()},
        "bounds": {
            "delta": cfg.bound_inputs.delta,
            "delta_hat": cfg.bound_inputs.delta_hat,
            "sigma_x_lower": cfg.bound_inputs.sigma_x_lower,
            "sigma_x_upper": cfg.bound_inputs.sigma_x_upper,
            "sigma_eta_upper": cfg.bound_inputs.sigma_eta_upper,
            "mu_hat_upper": cfg.bound_inputs.mu_hat_upper,
            "theta_norm_upper": cfg.bound_inputs.theta_norm_upper,
        },
    }
    if cfg.plan is not None:
        out["plan"] = {
            "zeta": cfg.plan.zeta,
            "epsilon": cfg.plan.epsilon,
            "epsilon_N": cfg.plan.epsilon_N,
            "max_t": cfg.plan.max_t,
        }
    if cfg.schedule is not None:
        out["schedule"] = {
            "zeta": cfg.schedule.zeta,
            "T": cfg.schedule.T,
            "S": cfg.schedule.S,
        }
    if cfg.run is not None:
        out["run"] = {
            "horizon": cfg.run.horizon,
            "runs": cfg.run.runs,
            "seed": cfg.run.seed,
            "writeback_mixed": cfg.run.writeback_mixed,
        }
    return out
