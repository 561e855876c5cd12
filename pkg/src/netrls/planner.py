"""Choice of consensus depth T and communication stopping time S.

Given a communication period ``zeta``, a tolerance ``epsilon_N`` on the
network-convergence error and an overall accuracy target ``epsilon``, picks
the smallest ``T`` whose network term stays below ``epsilon_N`` at every
communication time, then the earliest communication time ``S`` at which the
smaller of the local and post-communication bounds drops below ``epsilon``.
Both searches run in the conservative mode that replaces the mean
second-moment matrices by zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bounds import BoundInputs, burn_in, comm_bound, local_bound

__all__ = [
    "Schedule",
    "PlanResult",
    "StoppingTimeNotReachable",
    "plan_T",
    "plan_S",
    "plan",
]


@dataclass(frozen=True)
class Schedule:
    """Communication schedule: a phase of ``T`` consensus steps fires at
    every ``t`` with ``t % zeta == 0`` and ``t <= S``."""

    zeta: int
    T: int
    S: int
    epsilon: float | None = None
    epsilon_N: float | None = None

    def __post_init__(self):
        if self.zeta < 1:
            raise ValueError("zeta must be >= 1")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.S < 0:
            raise ValueError("S must be >= 0")
        if self.S % self.zeta != 0:
            raise ValueError("S must be an integer multiple of zeta")

    def fires_at(self, t: int) -> bool:
        return t % self.zeta == 0 and t <= self.S

    def comm_times(self, horizon: int) -> list[int]:
        return list(range(self.zeta, min(self.S, horizon) + 1, self.zeta))


@dataclass(frozen=True)
class PlanResult:
    """Planner outputs together with the constants they were derived from."""

    zeta: int
    T: int
    S: int
    t_first: int
    epsilon: float
    epsilon_N: float
    rho: float
    C1: float
    c1: float
    c2: float
    c3: float

    def schedule(self) -> Schedule:
        return Schedule(zeta=self.zeta, T=self.T, S=self.S,
                        epsilon=self.epsilon, epsilon_N=self.epsilon_N)


class StoppingTimeNotReachable(RuntimeError):
    """The accuracy target is below what any t up to the horizon achieves."""

    def __init__(self, message: str, epsilon: float, max_t: int):
        super().__init__(message)
        self.epsilon = epsilon
        self.max_t = max_t


def _first_multiple_at_or_after(value: float, step: int) -> int:
    return max(1, math.ceil(value / step)) * step


def plan_T(inputs: BoundInputs, zeta: int, epsilon_N: float,
           max_steps: int = 100_000) -> tuple[int, int]:
    """Smallest consensus depth keeping the network error below ``epsilon_N``.

    Evaluated at ``t_first``, the earliest communication time past the
    ``delta_hat`` burn-in; the network term decreases in ``t``, so meeting
    the tolerance there meets it at every later communication time.
    Returns ``(T, t_first)``.
    """
    if zeta < 1:
        raise ValueError("zeta must be >= 1")
    if epsilon_N <= 0:
        raise ValueError("epsilon_N must be positive")
    t_first = _first_multiple_at_or_after(burn_in(inputs, "delta_hat").threshold, zeta)
    steps = 1
    while comm_bound(inputs, t_first, steps).network_term > epsilon_N:
        steps += 1
        if steps > max_steps:
            raise RuntimeError(
                f"no T <= {max_steps} meets epsilon_N = {epsilon_N} (rho = {inputs.rho})"
            )
    return steps, t_first


def plan_S(inputs: BoundInputs, zeta: int, T: int, epsilon: float,
           max_t: int = 10**6, local_lambda_min: float = 1.0,
           pooled_lambda_min: float = 1.0) -> int:
    """Earliest communication time at which the running error guarantee
    drops strictly below ``epsilon``.

    The guarantee at time ``t`` is ``min(local, communicated)`` evaluated
    past both burn-ins; both bounds decrease in ``t``, so the first hit is
    minimal. Raises :class:`StoppingTimeNotReachable` when no ``t <= max_t``
    qualifies (``epsilon`` below the bounds' asymptote for any practical
    horizon).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    start = _first_multiple_at_or_after(
        max(burn_in(inputs, "delta").threshold, burn_in(inputs, "delta_hat").threshold),
        zeta,
    )
    t = start
    while t <= max_t:
        guarantee = min(
            local_bound(inputs, t, local_lambda_min).value,
            comm_bound(inputs, t, T, pooled_lambda_min).value,
        )
        if guarantee < epsilon:
            return t
        t += zeta
    raise StoppingTimeNotReachable(
        f"error guarantee never drops below {epsilon} for t <= {max_t}",
        epsilon=epsilon, max_t=max_t,
    )


def plan(inputs: BoundInputs, zeta: int, epsilon: float, epsilon_N: float,
         max_t: int = 10**6) -> PlanResult:
    """Run both searches and package the outcome."""
    T, t_first = plan_T(inputs, zeta, epsilon_N)
    S = plan_S(inputs, zeta, T, epsilon, max_t=max_t)
    report = comm_bound(inputs, max(t_first, S), T)
    return PlanResult(zeta=zeta, T=T, S=S, t_first=t_first,
                      epsilon=epsilon, epsilon_N=epsilon_N, rho=inputs.rho,
                      C1=report.C1, c1=report.c1, c2=report.c2, c3=report.c3)
