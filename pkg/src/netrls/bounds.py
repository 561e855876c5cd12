"""Closed-form finite-time error bounds for the three estimates.

Evaluates, for confidence levels ``delta`` (single-agent events) and
``delta_hat`` (network-wide events), the high-probability spectral-norm
error bounds of the purely local estimate, the pooled global estimate, and
the post-communication estimate, together with their burn-in times. All
logarithms are natural. Inputs are the *assumed* parameter bounds: lower
bound on ``sigma_x`` in denominators, upper bounds everywhere else, so the
reports stay valid when only bounds on the true scalars are known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "BoundInputs",
    "BoundReport",
    "BurnIn",
    "BurnInError",
    "burn_in",
    "local_bound",
    "global_bound",
    "comm_bound",
]


@dataclass(frozen=True)
class BoundInputs:
    """Known or assumed scalars feeding every bound formula."""

    n: int
    l: int
    m: int
    sigma_x_lower: float
    sigma_x_upper: float
    sigma_eta_upper: float
    mu_hat_upper: float
    theta_norm_upper: float
    delta: float
    delta_hat: float
    rho: float

    def __post_init__(self):
        if self.n < 1 or self.l < 1 or self.m < 1:
            raise ValueError("dimensions must be >= 1")
        if not self.sigma_x_lower > 0:
            raise ValueError("sigma_x_lower must be positive")
        if self.sigma_x_upper < self.sigma_x_lower:
            raise ValueError("sigma_x_upper must be >= sigma_x_lower")
        if self.sigma_eta_upper < 0 or self.mu_hat_upper < 0 or self.theta_norm_upper < 0:
            raise ValueError("upper bounds must be nonnegative")
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if not 0 < self.delta_hat < 1:
            raise ValueError("delta_hat must be in (0, 1)")
        if not 0 <= self.rho < 1:
            raise ValueError("rho must be in [0, 1)")

    @classmethod
    def from_model(cls, model, weights, delta: float = 0.05, delta_hat: float = 0.001,
                   **overrides) -> "BoundInputs":
        """Exact model parameters used as both lower and upper bounds;
        keyword overrides substitute assumed bounds for any scalar."""
        values = dict(
            n=model.n,
            l=model.l,
            m=model.m,
            sigma_x_lower=model.sigma_x,
            sigma_x_upper=model.sigma_x,
            sigma_eta_upper=model.sigma_eta,
            mu_hat_upper=model.mu_hat,
            theta_norm_upper=model.theta_norm,
            delta=delta,
            delta_hat=delta_hat,
            rho=weights.rho,
        )
        values.update(overrides)
        return cls(**values)


@dataclass(frozen=True)
class BurnIn:
    """Minimum sample counts; a bound is valid once ``t >= threshold``."""

    t1: float
    t2: float
    t3: float

    @property
    def threshold(self) -> float:
        return max(self.t1, self.t2, self.t3)


class BurnInError(ValueError):
    """Bound requested below its burn-in; ``valid_from`` is the first valid t."""

    def __init__(self, message: str, valid_from: int):
        super().__init__(message)
        self.valid_from = valid_from


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound plus the constants and burn-ins behind it.

    ``value = network_term + noise_term``; the network term is zero for the
    local and global regimes.
    """

    t1: float
    t2: float
    t3: float
    C1: float
    c1: float
    c2: float
    c3: float
    value: float
    regime: str
    valid_from: int
    network_term: float
    noise_term: float


def _delta_of(inputs: BoundInputs, which: str) -> float:
    if which == "delta":
        return inputs.delta
    if which == "delta_hat":
        return inputs.delta_hat
    raise ValueError(f"which_delta must be 'delta' or 'delta_hat', got {which!r}")


def burn_in(inputs: BoundInputs, which_delta: str = "delta") -> BurnIn:
    """Burn-in triple at the requested confidence level.

    ``t1 = 8n + 16 ln(2/d)`` controls feature-covariance concentration,
    ``t2`` the mean/fluctuation cross terms (zero for zero-mean features),
    ``t3 = 2(n+l) ln(1/d)`` the noise-feature product. The global regime
    divides the max by ``m``.
    """
    d = _delta_of(inputs, which_delta)
    n, l = inputs.n, inputs.l
    t1 = 8.0 * n + 16.0 * math.log(2.0 / d)
    mu = inputs.mu_hat_upper
    if mu == 0.0:
        t2 = 0.0
    else:
        t2 = (16.0 * mu * (math.sqrt(4.0 * n) + math.sqrt(2.0 * math.log(2.0 / d)))
              / inputs.sigma_x_lower) ** 2
    t3 = 2.0 * (n + l) * math.log(1.0 / d)
    return BurnIn(t1=t1, t2=t2, t3=t3)


def _C1(inputs: BoundInputs, d: float) -> float:
    """Noise-accumulation constant of the local/global bounds."""
    n, l = inputs.n, inputs.l
    return 8.0 * inputs.sigma_eta_upper * (
        4.0 * inputs.sigma_x_upper * math.sqrt((n + l) * math.log(9.0 / d))
        + inputs.mu_hat_upper * (math.sqrt(2.0 * (l + n)) + 2.0 * math.sqrt(math.log(2.0 / d)))
    )


def _c1(inputs: BoundInputs) -> float:
    """Per-sample magnitude of the label-feature statistic."""
    return inputs.theta_norm_upper * (
        19.0 / 8.0 * inputs.sigma_x_upper**2 + inputs.mu_hat_upper**2
    )


def _c2(inputs: BoundInputs, d: float) -> float:
    """Square-root-rate noise contribution to the statistic magnitude."""
    n, l = inputs.n, inputs.l
    return inputs.sigma_eta_upper * (
        4.0 * inputs.sigma_x_upper * math.sqrt((n + l) * math.log(9.0 / d))
        + inputs.mu_hat_upper * (math.sqrt(2.0 * (l + n)) + math.sqrt(2.0 * math.log(2.0 / d)))
    )


def _c3(inputs: BoundInputs) -> float:
    """Sensitivity of the inverted statistic to mixing error."""
    m32 = inputs.m**1.5
    root = math.sqrt(5.0 * inputs.n)
    return (152.0 * m32 * root / inputs.sigma_x_lower**2
            + 64.0 * m32 * root * inputs.mu_hat_upper**2 / inputs.sigma_x_lower**4)


def _C0(inputs: BoundInputs, t: float, steps: int) -> float:
    """Amplitude of the network-convergence error before the rho**T decay."""
    g = _c1(inputs) + _c2(inputs, inputs.delta_hat) / math.sqrt(t)
    m32_rl = inputs.m**1.5 * math.sqrt(inputs.l)
    c3 = _c3(inputs)
    return (c3 * g
            + 8.0 * m32_rl * g / inputs.sigma_x_lower**2
            + inputs.rho**steps * m32_rl * c3 * g)


def _constants(inputs: BoundInputs) -> dict:
    return dict(
        C1=_C1(inputs, inputs.delta),
        c1=_c1(inputs),
        c2=_c2(inputs, inputs.delta_hat),
        c3=_c3(inputs),
    )


def local_bound(inputs: BoundInputs, t: float, mu_bar_lambda_min: float = 1.0) -> BoundReport:
    """Error bound for one agent's purely local estimate after ``t`` samples.

    Decays like ``1/sqrt(t)``; ``mu_bar_lambda_min`` is the smallest
    eigenvalue of ``I + mu_bar`` and defaults to the conservative value 1.
    """
    if mu_bar_lambda_min < 1.0:
        raise ValueError("lambda_min(I + mu_bar) is always >= 1")
    bi = burn_in(inputs, "delta")
    valid_from = max(1, math.ceil(bi.threshold))
    if t < bi.threshold:
        raise BurnInError(f"t = {t} below local burn-in {bi.threshold:.6g}", valid_from)
    value = _C1(inputs, inputs.delta) / (
        math.sqrt(t) * inputs.sigma_x_lower**2 * mu_bar_lambda_min
    )
    return BoundReport(t1=bi.t1, t2=bi.t2, t3=bi.t3, **_constants(inputs),
                       value=value, regime="local", valid_from=valid_from,
                       network_term=0.0, noise_term=value)


def global_bound(inputs: BoundInputs, t: float, mu_bar_lambda_min: float = 1.0) -> BoundReport:
    """Error bound for the pooled all-agent estimate; local bound with
    ``t`` replaced by ``m * t`` and burn-in divided by ``m``."""
    if mu_bar_lambda_min < 1.0:
        raise ValueError("lambda_min(I + mu_bar) is always >= 1")
    bi = burn_in(inputs, "delta")
    threshold = bi.threshold / inputs.m
    valid_from = max(1, math.ceil(threshold))
    if t < threshold:
        raise BurnInError(f"t = {t} below global burn-in {threshold:.6g}", valid_from)
    value = _C1(inputs, inputs.delta) / (
        math.sqrt(inputs.m * t) * inputs.sigma_x_lower**2 * mu_bar_lambda_min
    )
    return BoundReport(t1=bi.t1, t2=bi.t2, t3=bi.t3, **_constants(inputs),
                       value=value, regime="global", valid_from=valid_from,
                       network_term=0.0, noise_term=value)


def comm_bound(inputs: BoundInputs, t: float, steps: int,
               mu_bar_lambda_min: float = 1.0) -> BoundReport:
    """Error bound for the post-communication estimate after ``steps``
    consensus rounds.

    Sum of a network term ``rho**steps * C0`` (incomplete mixing, decays
    geometrically in ``steps``) and the global noise term. Burn-in is gated
    at ``delta_hat`` because the mixing analysis must hold across all
    agents simultaneously.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if mu_bar_lambda_min < 1.0:
        raise ValueError("lambda_min(I + mu_bar) is always >= 1")
    bi = burn_in(inputs, "delta_hat")
    valid_from = max(1, math.ceil(bi.threshold))
    if t < bi.threshold:
        raise BurnInError(f"t = {t} below communicated burn-in {bi.threshold:.6g}", valid_from)
    network = inputs.rho**steps * _C0(inputs, t, steps)
    noise = _C1(inputs, inputs.delta) / (
        math.sqrt(inputs.m * t) * inputs.sigma_x_lower**2 * mu_bar_lambda_min
    )
    return BoundReport(t1=bi.t1, t2=bi.t2, t3=bi.t3, **_constants(inputs),
                       value=network + noise, regime="communicated", valid_from=valid_from,
                       network_term=network, noise_term=noise)
