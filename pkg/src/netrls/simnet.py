"""End-to-end synchronous simulation of the two-time-scale estimation loop.

Every data step each agent ingests one fresh pair and refreshes its local
estimate; at communication times (``t % zeta == 0`` and ``t <= S``) a phase
of ``T`` consensus rounds mixes the sufficient statistics and refreshes the
post-communication estimate, which otherwise carries over unchanged. The
consensus rounds complete atomically between data steps. A central pooled
estimator over all agents' statistics is recorded as an oracle column;
errors are spectral norms against the ground truth.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .consensus import WeightMatrix, comm_estimate, run_comm_phase
from .local_estimator import AgentState, init_agent
from .model_gen import ModelSpec, SeededStream, sample_block
from .planner import Schedule

__all__ = ["SimConfig", "ErrorTrace", "SimWorld", "run", "spectral_norms"]


def spectral_norms(a: np.ndarray) -> np.ndarray:
    """Largest singular value over the trailing two axes."""
    return np.linalg.svd(a, compute_uv=False)[..., 0]


@dataclass(frozen=True)
class SimConfig:
    """One experiment: model, network, schedule, and replication settings."""

    model: ModelSpec
    weights: WeightMatrix
    schedule: Schedule
    horizon: int
    runs: int
    seed: int
    writeback_mixed: bool = False

    def __post_init__(self):
        if self.weights.m != self.model.m:
            raise ValueError(
                f"weight matrix is {self.weights.m}x{self.weights.m} "
                f"but the model has {self.model.m} agents"
            )
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.horizon < self.schedule.S:
            raise ValueError("horizon must cover the stopping time S")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


@dataclass
class ErrorTrace:
    """Per-step error columns of one run (or the average across runs)."""

    t: np.ndarray
    local_err: np.ndarray
    comm_err: np.ndarray
    global_err: np.ndarray
    comm_fired: np.ndarray
    pre_invertible_count: np.ndarray


class SimWorld:
    """Mutable state of a single run, advanced one data step at a time."""

    def __init__(self, config: SimConfig, run_index: int = 0):
        self.config = config
        self.run_index = run_index
        self.t = 0
        model = config.model
        self.agents: list[AgentState] = [init_agent(model.n, model.l) for _ in range(model.m)]
        stream = SeededStream(config.seed)
        # whole-horizon draws per agent; identical to stepwise sampling
        self._draws = [
            sample_block(model, stream, run_index, i, 1, config.horizon)
            for i in range(model.m)
        ]

    def step(self) -> bool:
        """Advance one data step; returns True when a communication phase ran."""
        t = self.t + 1
        if t > self.config.horizon:
            raise RuntimeError("stepped past the configured horizon")
        for i, agent in enumerate(self.agents):
            x, y = self._draws[i]
            agent.ingest(x[t - 1], y[t - 1])

        fired = self.config.schedule.fires_at(t)
        if fired:
            result = run_comm_phase(
                self.config.weights,
                np.stack([a.alpha for a in self.agents]),
                np.stack([a.beta for a in self.agents]),
                self.config.schedule.T,
            )
            for i, agent in enumerate(self.agents):
                agent.theta_comm = comm_estimate(result, i)
                if self.config.writeback_mixed:
                    agent.replace_statistics(result.alphas[i], result.betas[i])
        self.t = t
        return fired

    def pooled_statistics(self) -> tuple[np.ndarray, np.ndarray]:
        alpha = np.sum([a.alpha for a in self.agents], axis=0)
        beta = np.sum([a.beta for a in self.agents], axis=0)
        return alpha, beta

    @property
    def pooled_invertible(self) -> bool:
        alpha, beta = self.pooled_statistics()
        sv = np.linalg.svd(beta, compute_uv=False)
        return bool(sv[0] > 0 and sv[-1] > 1e-8 * sv[0])

    def global_estimate(self) -> np.ndarray:
        """Pooled least-squares estimate over all agents' statistics."""
        alpha, beta = self.pooled_statistics()
        return alpha @ np.linalg.pinv(beta)

    def pre_invertible_count(self) -> int:
        return sum(1 for a in self.agents if a.pre_invertible)


def _simulate_run(config: SimConfig, run_index: int) -> ErrorTrace:
    world = SimWorld(config, run_index)
    model = config.model
    horizon, m = config.horizon, model.m
    local = np.empty((horizon, m, model.l, model.n))
    comm = np.empty((horizon, m, model.l, model.n))
    pooled = np.empty((horizon, model.l, model.n))
    fired = np.zeros(horizon, dtype=bool)
    pre_count = np.zeros(horizon, dtype=np.int64)

    for t in range(1, horizon + 1):
        fired[t - 1] = world.step()
        for i, agent in enumerate(world.agents):
            local[t - 1, i] = agent.theta_local
            comm[t - 1, i] = agent.theta_comm
        pooled[t - 1] = world.global_estimate()
        pre_count[t - 1] = world.pre_invertible_count()

    theta = model.theta
    return ErrorTrace(
        t=np.arange(1, horizon + 1),
        local_err=spectral_norms(local - theta).mean(axis=1),
        comm_err=spectral_norms(comm - theta).mean(axis=1),
        global_err=spectral_norms(pooled - theta),
        comm_fired=fired,
        pre_invertible_count=pre_count,
    )


def run(config: SimConfig, parallel: int = 1) -> tuple[list[ErrorTrace], ErrorTrace]:
    """Simulate ``config.runs`` independent replications.

    Returns the per-run traces and the averaged trace (arithmetic mean of
    every error column across runs). Replications use disjoint substreams
    indexed by run, so results are independent of ``parallel`` and of
    execution order.
    """
    if parallel < 1:
        raise ValueError("parallel must be >= 1")
    indices = range(config.runs)
    if parallel == 1 or config.runs == 1:
        traces = [_simulate_run(config, r) for r in indices]
    else:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            traces = list(pool.map(partial(_simulate_run, config), indices))

    averaged = ErrorTrace(
        t=traces[0].t.copy(),
        local_err=np.mean([tr.local_err for tr in traces], axis=0),
        comm_err=np.mean([tr.comm_err for tr in traces], axis=0),
        global_err=np.mean([tr.global_err for tr in traces], axis=0),
        comm_fired=traces[0].comm_fired.copy(),
        pre_invertible_count=np.mean([tr.pre_invertible_count for tr in traces], axis=0),
    )
    return traces, averaged
