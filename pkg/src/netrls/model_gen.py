"""Synthetic data streams for networked linear regression.

Each of ``m`` agents observes pairs ``(x, y)`` with ``y = theta @ x + eta``,
where ``x`` is Gaussian with a deterministic per-agent mean profile and
isotropic covariance ``sigma_x**2 * I`` and ``eta`` is zero-mean Gaussian
noise with covariance ``sigma_eta**2 * I``. Draws are addressed by
``(master_seed, run, agent, t)`` through a counter-based Philox stream, so
any single sample can be regenerated in isolation, in any order, on any
process, and Monte Carlo runs never share generator state.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

__all__ = [
    "ZeroMean",
    "ConstantMean",
    "SinusoidMean",
    "MeanSchedule",
    "ModelSpec",
    "DataPair",
    "SeededStream",
    "sample_pair",
    "sample_block",
    "mu_bar",
    "mu_bar_pooled",
    "mu_bar_lambda_min",
    "difference_transform",
    "differenced_model",
]


def _readonly(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ZeroMean:
    """Zero feature mean for every agent and time."""

    @property
    def mu_hat(self) -> float:
        return 0.0

    def check(self, m: int, n: int) -> None:
        pass

    def profile(self, agent: int, times: np.ndarray, n: int) -> np.ndarray:
        return np.zeros((len(times), n))


@dataclass(frozen=True)
class ConstantMean:
    """Time-invariant per-agent means; ``vectors`` has one row per agent."""

    vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vectors", _readonly(np.atleast_2d(self.vectors)))

    @property
    def mu_hat(self) -> float:
        return float(np.max(np.linalg.norm(self.vectors, axis=1)))

    def check(self, m: int, n: int) -> None:
        if self.vectors.shape != (m, n):
            raise ValueError(
                f"constant mean vectors have shape {self.vectors.shape}, expected {(m, n)}"
            )

    def profile(self, agent: int, times: np.ndarray, n: int) -> np.ndarray:
        return np.broadcast_to(self.vectors[agent], (len(times), n))


@dataclass(frozen=True)
class SinusoidMean:
    """Per-agent oscillating means ``amplitudes[i] * cos(2*pi*t / periods[i])``.

    The peak norm is attained at integer multiples of the period, so the
    supremum over time of ``||mu_{i,t}||`` is exactly ``max_i ||amplitudes[i]||``.
    """

    amplitudes: np.ndarray
    periods: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", _readonly(np.atleast_2d(self.amplitudes)))
        object.__setattr__(self, "periods", _readonly(np.atleast_1d(self.periods)))
        if np.any(self.periods <= 0):
            raise ValueError("sinusoid periods must be positive")

    @property
    def mu_hat(self) -> float:
        return float(np.max(np.linalg.norm(self.amplitudes, axis=1)))

    def check(self, m: int, n: int) -> None:
        if self.amplitudes.shape != (m, n):
            raise ValueError(
                f"sinusoid amplitudes have shape {self.amplitudes.shape}, expected {(m, n)}"
            )
        if self.periods.shape != (m,):
            raise ValueError(
                f"sinusoid periods have shape {self.periods.shape}, expected {(m,)}"
            )

    def profile(self, agent: int, times: np.ndarray, n: int) -> np.ndarray:
        phase = np.cos(2.0 * np.pi * np.asarray(times, dtype=float) / self.periods[agent])
        return phase[:, None] * self.amplitudes[agent][None, :]


MeanSchedule = ZeroMean | ConstantMean | SinusoidMean


@dataclass(frozen=True)
class ModelSpec:
    """Ground truth for the streaming model ``y = theta @ x + eta``.

    ``theta`` is the unknown ``l x n`` parameter matrix the agents estimate;
    ``sigma_x`` and ``sigma_eta`` are the feature and noise standard
    deviations; ``m`` is the number of agents.
    """

    theta: np.ndarray
    sigma_x: float
    sigma_eta: float
    m: int
    mean: MeanSchedule = field(default_factory=ZeroMean)

    def __post_init__(self):
        theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        object.__setattr__(self, "theta", _readonly(theta))
        if theta.ndim != 2:
            raise ValueError("theta must be a 2-D matrix")
        if not self.sigma_x > 0:
            raise ValueError("sigma_x must be positive")
        if self.sigma_eta < 0:
            raise ValueError("sigma_eta must be nonnegative")
        if self.m < 1:
            raise ValueError("need at least one agent")
        self.mean.check(self.m, self.n)

    @property
    def n(self) -> int:
        return self.theta.shape[1]

    @property
    def l(self) -> int:
        return self.theta.shape[0]

    @property
    def mu_hat(self) -> float:
        """Supremum over agents and time of the feature-mean norm."""
        return self.mean.mu_hat

    @property
    def theta_norm(self) -> float:
        """Spectral norm of the ground-truth parameter matrix."""
        return float(np.linalg.norm(self.theta, 2))


@dataclass(frozen=True)
class DataPair:
    """One observation: feature ``x``, label ``y = theta @ x + eta``."""

    x: np.ndarray
    y: np.ndarray
    agent_id: int
    time: int


@dataclass(frozen=True)
class SeededStream:
    """Counter-based source of per-(run, agent, t) Gaussian draws.

    Distinct ``(run, agent, t)`` triples map to disjoint Philox counter
    ranges under distinct keys, which makes draws independent and
    insensitive to generation order.
    """

    master_seed: int

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 bits")

    def key(self, run: int, agent: int) -> np.ndarray:
        if not 0 <= run < 2**32:
            raise ValueError("run index must fit in 32 bits")
        if not 0 <= agent < 2**32:
            raise ValueError("agent index must fit in 32 bits")
        return np.array([self.master_seed, (run << 32) | agent], dtype=np.uint64)


def _normal_rows(
    stream: SeededStream, run: int, agent: int, t_start: int, count: int, width: int
) -> np.ndarray:
    """Standard normal draws for time steps ``t_start .. t_start+count-1``.

    Each time step owns ``ceil(width/4)`` Philox counter blocks and one
    float64 consumes exactly one 64-bit word, so row ``t`` is the same
    whether generated alone or as part of a larger block.
    """
    blocks_per_step = -(-width // 4)
    bits = Philox(counter=(t_start - 1) * blocks_per_step, key=stream.key(run, agent))
    u = Generator(bits).random((count, 4 * blocks_per_step))
    # shift to bin midpoints so the inverse CDF never sees 0 or 1
    z = ndtri(u + 2.0**-54)
    return z[:, :width]


def sample_block(
    spec: ModelSpec,
    stream: SeededStream,
    run: int,
    agent: int,
    t_start: int,
    count: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``count`` consecutive pairs starting at time ``t_start``.

    Returns ``(X, Y)`` with shapes ``(count, n)`` and ``(count, l)``. Row
    ``k`` is bit-identical to ``sample_pair(..., t_start + k)``.
    """
    if t_start < 1:
        raise ValueError("time steps start at 1")
    if not 0 <= agent < spec.m:
        raise ValueError(f"agent index {agent} out of range [0, {spec.m})")
    n, l = spec.n, spec.l
    z = _normal_rows(stream, run, agent, t_start, count, n + l)
    times = np.arange(t_start, t_start + count)
    x = spec.mean.profile(agent, times, n) + spec.sigma_x * z[:, :n]
    # einsum keeps each row's rounding independent of the block size, so
    # single-pair and block generation agree bit for bit
    y = np.einsum("tj,kj->tk", x, spec.theta) + spec.sigma_eta * z[:, n:]
    return x, y


def sample_pair(
    spec: ModelSpec, stream: SeededStream, run: int, agent: int, t: int
) -> DataPair:
    """Draw the single observation addressed by ``(run, agent, t)``."""
    x, y = sample_block(spec, stream, run, agent, t, 1)
    return DataPair(x=x[0], y=y[0], agent_id=agent, time=t)


def mu_bar(spec: ModelSpec, agent: int, t: int) -> np.ndarray:
    """Normalized second-moment matrix of one agent's means up to time ``t``:
    ``(4 / (t * sigma_x**2)) * sum_{j<=t} mu_j mu_j^T``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    prof = spec.mean.profile(agent, np.arange(1, t + 1), spec.n)
    return (4.0 / (t * spec.sigma_x**2)) * (prof.T @ prof)


def mu_bar_pooled(spec: ModelSpec, t: int) -> np.ndarray:
    """Mean second-moment matrix pooled over all agents and times up to ``t``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    times = np.arange(1, t + 1)
    acc = np.zeros((spec.n, spec.n))
    for agent in range(spec.m):
        prof = spec.mean.profile(agent, times, spec.n)
        acc += prof.T @ prof
    return (4.0 / (spec.m * t * spec.sigma_x**2)) * acc


def mu_bar_lambda_min(spec: ModelSpec, t: int, agent: int | None = None) -> float:
    """Smallest eigenvalue of ``I + mu_bar`` (pooled when ``agent`` is None)."""
    bar = mu_bar_pooled(spec, t) if agent is None else mu_bar(spec, agent, t)
    return float(np.linalg.eigvalsh(np.eye(spec.n) + bar)[0])


def difference_transform(pairs: list[DataPair]) -> list[DataPair]:
    """Pairwise differencing that cancels a time-invariant feature mean.

    Consecutive input pairs are consumed two at a time, producing
    ``x_hat_k = x_{2k-1} - x_{2k}`` and ``y_hat_k = y_{2k-1} - y_{2k}``; the
    output stream is zero-mean with feature/noise variances doubled and
    still satisfies ``y_hat = theta @ x_hat + eta_hat``. Output length is
    ``floor(len(pairs) / 2)``.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        warnings.warn("difference_transform needs at least two pairs; output is empty")
        return []
    out = []
    for k in range(len(pairs) // 2):
        a, b = pairs[2 * k], pairs[2 * k + 1]
        out.append(DataPair(x=a.x - b.x, y=a.y - b.y, agent_id=a.agent_id, time=k + 1))
    return out


def differenced_model(spec: ModelSpec) -> ModelSpec:
    """Model spec matching the output of :func:`difference_transform`."""
    return ModelSpec(
        theta=spec.theta,
        sigma_x=math.sqrt(2.0) * spec.sigma_x,
        sigma_eta=math.sqrt(2.0) * spec.sigma_eta,
        m=spec.m,
        mean=ZeroMean(),
    )
