"""Imperfect receiver CSI from MMSE training: effective link and outage bounds.

Each block of T symbols opens with M training symbols (one per antenna) of
total power P_t, followed by T - M data symbols at power P_d, with
P_t + P_d (T - M) = P T.  The receiver's mutual-information lower bound
behaves like a perfect-CSIR link at SNR P' and rate R', with the feedback
correlation reduced to rho_e.  All outage values here are upper bounds.
"""

import math
from dataclasses import dataclass
from typing import Callable, Tuple

from . import specfun
from .analytic import pout_bfic, pout_uspa
from .errors import ConfigError, DomainError, NotFoundError
from .model import db_to_linear


@dataclass(frozen=True)
class TrainingConfig:
    T: int
    M: int
    P: float
    P_t: float
    P_d: float

    def __post_init__(self):
        if int(self.T) != self.T or int(self.M) != self.M or self.M < 1:
            raise ConfigError(f"T and M must be integers, got T={self.T!r}, M={self.M!r}")
        if not self.T > self.M:
            raise ConfigError(f"block length T={self.T} must exceed M={self.M}")
        if not (self.P > 0 and self.P_t > 0 and self.P_d > 0):
            raise ConfigError("P, P_t and P_d must be positive")
        total = self.P_t + self.P_d * (self.T - self.M)
        if abs(total - self.P * self.T) > 1e-9 * self.P * self.T:
            raise ConfigError(f"P_t + P_d (T - M) = {total!r} differs from P T = {self.P * self.T!r}")

    @classmethod
    def from_data_power(cls, P: float, T: int, M: int, P_d: float) -> "TrainingConfig":
        """Training power implied by the power identity for a given P_d."""
        return cls(T, M, P, P * T - P_d * (T - M), P_d)


@dataclass(frozen=True)
class EffectiveLink:
    sigma_e2: float
    rho_e: float
    P_prime: float
    R_prime: float


def effective_link(tc: TrainingConfig, R: float, rho: float) -> EffectiveLink:
    """MMSE error variance, CSIT/CSIR correlation and effective SNR and rate."""
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [0, 1], got {rho}")
    if not R > 0:
        raise DomainError("R must be positive")
    M, P_t, P_d = tc.M, tc.P_t, tc.P_d
    return EffectiveLink(
        sigma_e2=M / (P_t + M),
        rho_e=rho * P_t / (P_t + M),
        P_prime=P_d * P_t / (P_t + M * P_d + M),
        R_prime=R * tc.T / (tc.T - M),
    )


def effective_snr(P: float, T: int, M: int, P_d: float) -> float:
    P_t = P * T - P_d * (T - M)
    return P_d * P_t / (P_t + M * P_d + M)


def data_power_window(P: float, T: int, M: int) -> Tuple[float, float]:
    """Open interval of feasible P_d (P_t > 0 and P_d > 0)."""
    if not T > M:
        raise ConfigError(f"block length T={T} must exceed M={M}")
    if not P > 0:
        raise ConfigError("P must be positive")
    return 0.0, P * T / (T - M)


def optimize_training(P: float, T: int, M: int, tol: float = 1e-12) -> TrainingConfig:
    """Split of P T between training and data that maximizes P'.

    Golden-section search over P_d on the feasible window with both
    endpoints (where P' = 0) excluded.
    """
    lo, hi = data_power_window(P, T, M)
    margin = 1e-9 * hi
    if hi - 2 * margin <= lo:
        raise ConfigError("degenerate training window")
    best, _ = specfun.minimize_scalar(lambda d: -effective_snr(P, T, M, d), lo + margin, hi - margin, tol * hi)
    return TrainingConfig.from_data_power(P, T, M, best)


def equal_power_training(P: float, T: int, M: int) -> TrainingConfig:
    """The comparison point P_d = P_t, i.e. P_t = P T / (T - M + 1)."""
    data_power_window(P, T, M)
    P_t = P * T / (T - M + 1)
    return TrainingConfig(T, M, P, P_t, P_t)


def pout_uspa_csir(tc: TrainingConfig, R: float, rho: float = 0.0) -> float:
    """Upper bound on USPA outage with trained CSIR: Gamma_M((e^R' - 1) M / P')."""
    link = effective_link(tc, R, rho)
    return float(pout_uspa(tc.M, link.R_prime, link.P_prime))


def pout_bfic_csir(tc: TrainingConfig, R: float, rho: float) -> float:
    """Upper bound on BF-IC outage with trained CSIR, at correlation rho_e."""
    link = effective_link(tc, R, rho)
    return float(pout_bfic(tc.M, link.R_prime, link.P_prime, link.rho_e))


def snr_at_outage(curve: Callable[[float], float], target: float = 1e-2, window_db=(-20.0, 80.0)) -> float:
    """SNR in dB where a decreasing outage curve crosses ``target``."""
    f = lambda s: math.log10(max(curve(s), 1e-300)) - math.log10(target)
    lo, hi = window_db
    if f(lo) < 0 or f(hi) > 0:
        raise NotFoundError(f"outage {target} not reached inside {window_db} dB", {"window_db": window_db})
    return specfun.find_root(f, lo, hi, 1e-9)


def snr_penalty(
    M: int, R: float, rho: float, T: int, scheme: str = "USPA", training: str = "optimized", target: float = 1e-2
) -> float:
    """Extra SNR (dB) the trained-CSIR bound needs to reach ``target`` outage.

    ``training`` is "optimized" or "equal"; ``scheme`` is "USPA" or "BF-IC".
    """
    make = {"optimized": optimize_training, "equal": equal_power_training}[training]
    if scheme == "USPA":
        perfect = lambda s: float(pout_uspa(M, R, float(db_to_linear(s))))
        bound = lambda s: pout_uspa_csir(make(float(db_to_linear(s)), T, M), R, rho)
    elif scheme == "BF-IC":
        perfect = lambda s: float(pout_bfic(M, R, float(db_to_linear(s)), rho))
        bound = lambda s: pout_bfic_csir(make(float(db_to_linear(s)), T, M), R, rho)
    else:
        raise DomainError(f"unknown scheme {scheme!r}")
    return snr_at_outage(bound, target) - snr_at_outage(perfect, target)
