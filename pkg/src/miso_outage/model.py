"""Channel model: configuration types, derived parameters, sampler, gains.

The true channel is ``h = rho * h_old + sqrt(1 - rho^2) * w`` with
``h_old`` (the delayed feedback) and ``w`` independent CN(0, I) vectors.
"""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError, DegenerateFeedbackError, DomainError, SingularParameterError

USPA = "USPA"
BF_IC = "BF-IC"
BF_PERFECT = "BF-PERFECT"
SCHEMES = (USPA, BF_IC, BF_PERFECT)


def db_to_linear(snr_db):
    return 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)


def linear_to_db(p):
    return 10.0 * np.log10(p)


@dataclass(frozen=True)
class SystemConfig:
    M: int
    R: float
    P: float
    rho: float

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ConfigError(f"M must be a positive integer, got {self.M!r}")
        object.__setattr__(self, "M", int(self.M))
        if not self.R > 0:
            raise ConfigError(f"R must be positive, got {self.R!r}")
        if not self.P > 0:
            raise ConfigError(f"P must be positive, got {self.P!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho must lie in [0, 1], got {self.rho!r}")

    @classmethod
    def from_db(cls, M, R, snr_db, rho):
        return cls(M, R, float(db_to_linear(snr_db)), rho)

    @property
    def snr_db(self) -> float:
        return float(linear_to_db(self.P))

    @property
    def threshold(self) -> float:
        """Gain below which the link is in outage at unit power: (e^R - 1)/P."""
        return math.expm1(self.R) / self.P


@dataclass(frozen=True)
class EffectiveParams:
    mu: float
    beta: float

    def delta(self, gamma):
        """Non-centrality 2 * mu * gamma of the conditional gain law."""
        if np.ndim(gamma):
            return 2.0 * self.mu * np.asarray(gamma, dtype=float)
        return 2.0 * self.mu * gamma


def mu_of_rho(rho: float) -> float:
    if rho >= 1.0:
        raise SingularParameterError("mu is infinite at rho = 1; use the perfect-CSIT formulas")
    # (1 - rho)(1 + rho) avoids cancellation near rho = 1
    return rho * rho / ((1.0 - rho) * (1.0 + rho))


def effective_params(config: SystemConfig) -> EffectiveParams:
    mu = mu_of_rho(config.rho)
    return EffectiveParams(mu=mu, beta=config.threshold * (mu + 1.0))


@dataclass(frozen=True)
class ChannelDraw:
    h_old: np.ndarray
    w: np.ndarray
    h: np.ndarray
    gamma: float


@dataclass(frozen=True)
class Lambda:
    """Spatial allocation with fraction ``value`` on the feedback direction."""

    value: float


Scheme = Union[str, Lambda]


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def sample_channel(rng: np.random.Generator, M: int, rho: float) -> ChannelDraw:
    h_old = _cn(rng, M)
    w = _cn(rng, M)
    h = rho * h_old + math.sqrt(1.0 - rho * rho) * w
    return ChannelDraw(h_old, w, h, float(np.vdot(h_old, h_old).real))


def sample_channels(rng: np.random.Generator, n: int, M: int, rho: float):
    """Batch version of :func:`sample_channel`: returns ``(h_old, h)`` of shape (n, M).

    Rows with an all-zero feedback vector are redrawn.
    """
    h_old = _cn(rng, (n, M))
    w = _cn(rng, (n, M))
    while True:
        dead = ~np.any(h_old != 0, axis=1)
        if not dead.any():
            break
        h_old[dead] = _cn(rng, (int(dead.sum()), M))
    h = rho * h_old + math.sqrt(1.0 - rho * rho) * w
    return h_old, h


def channel_gains(h_old, h, scheme: Scheme, lam=None):
    """Effective gain q in I = log(1 + P q) for a batch of draws.

    ``lam`` (scalar or per-row array) overrides the value carried by a
    :class:`Lambda` scheme, which lets policy replay pass interpolated values.
    """
    h_old = np.atleast_2d(h_old)
    h = np.atleast_2d(h)
    M = h.shape[1]
    norm_h = np.sum(np.abs(h) ** 2, axis=1)
    if scheme == USPA:
        return norm_h / M
    if scheme == BF_PERFECT:
        return norm_h
    gamma = np.sum(np.abs(h_old) ** 2, axis=1)
    if np.any(gamma == 0):
        raise DegenerateFeedbackError("feedback vector has zero norm")
    along = np.abs(np.sum(np.conj(h_old) * h, axis=1)) ** 2 / gamma
    if scheme == BF_IC:
        return along
    if isinstance(scheme, Lambda):
        if M < 2:
            raise DomainError("spatial allocation needs M >= 2")
        value = np.asarray(scheme.value if lam is None else lam, dtype=float)
        if np.any(value < 1.0 / M - 1e-12) or np.any(value > 1.0 + 1e-12):
            raise DomainError(f"lambda must lie in [1/M, 1], got {value}")
        ortho = np.maximum(norm_h - along, 0.0)
        return value * along + (1.0 - value) / (M - 1) * ortho
    raise DomainError(f"unknown scheme {scheme!r}")


def mutual_info(draw: ChannelDraw, P: float, scheme: Scheme) -> float:
    """Instantaneous mutual information in nats for one draw."""
    if scheme not in SCHEMES and not isinstance(scheme, Lambda):
        raise DomainError(f"unknown scheme {scheme!r}")
    if scheme not in (USPA, BF_PERFECT) and draw.gamma == 0:
        raise DegenerateFeedbackError("feedback vector has zero norm")
    q = channel_gains(draw.h_old, draw.h, scheme)[0]
    return math.log1p(P * q)
