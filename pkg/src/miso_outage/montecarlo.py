"""Monte Carlo outage estimates, the validation oracle for every closed form.

Draws are split into fixed-size chunks and chunk k always uses the stream
Philox(SeedSequence(master_seed, spawn_key=(k,))).  Workers only decide
which thread handles a chunk, and outage counts are summed as integers, so
estimates are bit-identical for any worker count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Sequence, Union

import numpy as np

from .csir import TrainingConfig, effective_link
from .errors import ConfigError, DomainError
from .model import BF_IC, SCHEMES, USPA, Lambda, SystemConfig, channel_gains, db_to_linear, sample_channels
from .ospa import SpatialPolicy
from .tpc import USPA_TPC, PowerPolicy

MIN_SAMPLES = 1000
MIN_EVENTS = 50
CHUNK = 1 << 16


@dataclass(frozen=True)
class McConfig:
    samples: int
    master_seed: int = 12345
    workers: int = 1
    chunk_size: int = CHUNK

    def __post_init__(self):
        if int(self.samples) != self.samples or self.samples < MIN_SAMPLES:
            raise ConfigError(f"samples must be an integer >= {MIN_SAMPLES}, got {self.samples!r}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ConfigError(f"workers must be a positive integer, got {self.workers!r}")
        if int(self.chunk_size) != self.chunk_size or self.chunk_size < 1:
            raise ConfigError("chunk_size must be a positive integer")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigError("master_seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class OutageEstimate:
    p_hat: float
    half_width_95: float
    samples: int
    master_seed: int
    outages: int

    @classmethod
    def from_count(cls, outages: int, samples: int, master_seed: int) -> "OutageEstimate":
        p = outages / samples
        return cls(p, 1.96 * math.sqrt(p * (1.0 - p) / samples), samples, master_seed, outages)

    @property
    def low_confidence(self) -> bool:
        """Fewer than 50 outage events: the normal-approximation CI is not trustworthy."""
        return self.outages < MIN_EVENTS

    def agrees(self, value: float, halfwidths: float = 3.0) -> bool:
        return abs(self.p_hat - value) <= halfwidths * self.half_width_95


def chunk_rng(master_seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(master_seed), spawn_key=(int(chunk),))))


def _chunks(mc: McConfig):
    n_full, rest = divmod(mc.samples, mc.chunk_size)
    sizes = [mc.chunk_size] * n_full + ([rest] if rest else [])
    return list(enumerate(sizes))


def _run(mc: McConfig, count: Callable[[np.random.Generator, int], np.ndarray]) -> np.ndarray:
    """Apply ``count`` to every chunk and sum its integer count vector."""
    jobs = _chunks(mc)

    def job(item):
        k, n = item
        return np.asarray(count(chunk_rng(mc.master_seed, k), n), dtype=np.int64)

    if mc.workers == 1:
        parts = [job(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=mc.workers) as pool:
            parts = list(pool.map(job, jobs))
    return np.sum(parts, axis=0)


def _check_policy_config(policy, config: SystemConfig):
    pc = policy.config
    same = pc.M == config.M and all(
        math.isclose(a, b, rel_tol=1e-12, abs_tol=0.0) or a == b
        for a, b in ((pc.R, config.R), (pc.P, config.P), (pc.rho, config.rho))
    )
    if not same:
        raise ConfigError(f"policy was built for {pc}, simulation asked for {config}")


Scheme = Union[str, Lambda, SpatialPolicy, PowerPolicy]


def _gain_and_power(scheme: Scheme, config: SystemConfig):
    """Return f(h_old, h) -> (gain, power scale) for one batch of draws."""
    if isinstance(scheme, str):
        if scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {scheme!r}")
        return lambda h_old, h: (channel_gains(h_old, h, scheme), 1.0)
    if isinstance(scheme, Lambda):
        return lambda h_old, h: (channel_gains(h_old, h, scheme), 1.0)
    if isinstance(scheme, SpatialPolicy):
        _check_policy_config(scheme, config)

        def spatial(h_old, h):
            gamma = np.sum(np.abs(h_old) ** 2, axis=1)
            return channel_gains(h_old, h, Lambda(1.0), lam=scheme(gamma)), 1.0

        return spatial
    if isinstance(scheme, PowerPolicy):
        _check_policy_config(scheme, config)
        spatial = USPA if scheme.scheme == USPA_TPC else BF_IC

        def temporal(h_old, h):
            gamma = np.sum(np.abs(h_old) ** 2, axis=1)
            return channel_gains(h_old, h, spatial), scheme.interpolate(gamma)

        return temporal
    raise DomainError(f"unknown scheme {scheme!r}")


def simulate_curve(scheme: Scheme, M: int, R: float, rho: float, snr_db: Sequence[float], mc: McConfig) -> List[OutageEstimate]:
    """Outage at several SNRs from one shared set of channel draws.

    Only schemes whose gain does not depend on P (the fixed schemes and
    fixed-lambda allocations) are allowed here.
    """
    if isinstance(scheme, (SpatialPolicy, PowerPolicy)):
        raise DomainError("policies are tied to one SNR; use simulate()")
    P = np.asarray(db_to_linear(snr_db), dtype=float)
    thresholds = math.expm1(R) / P
    gain_of = _gain_and_power(scheme, SystemConfig(M, R, float(P[0]), rho))

    def count(rng, n):
        h_old, h = sample_channels(rng, n, M, rho)
        g, _ = gain_of(h_old, h)
        return np.array([np.count_nonzero(g < t) for t in thresholds])

    counts = _run(mc, count)
    return [OutageEstimate.from_count(int(c), mc.samples, mc.master_seed) for c in counts]


def simulate(scheme: Scheme, config: SystemConfig, mc: McConfig) -> OutageEstimate:
    """Fraction of channel draws whose mutual information falls below R.

    Outage means log(1 + P p q) < R, i.e. P p q < e^R - 1, where q is the
    scheme's gain and p the temporal power scale (1 without a power
    policy).  Policies are interpolated at the draw's feedback SNR.
    """
    gain_of = _gain_and_power(scheme, config)
    limit = math.expm1(config.R)

    def count(rng, n):
        h_old, h = sample_channels(rng, n, config.M, config.rho)
        g, p = gain_of(h_old, h)
        return np.array([np.count_nonzero(config.P * p * g < limit)])

    return OutageEstimate.from_count(int(_run(mc, count)[0]), mc.samples, mc.master_seed)


def simulate_conditional(
    gamma: float,
    scheme: Union[str, Lambda],
    M: int,
    R: float,
    P: float,
    rho: float,
    mc: McConfig,
    power: float = 1.0,
) -> OutageEstimate:
    """Outage at fixed feedback SNR from direct draws of the two gain components.

    xi = lam A + (1 - lam)/(M - 1) B with A ~ ncx2(2, 2 mu gamma) and
    B ~ chi2(2 (M - 1)); outage is xi < 2 beta / power.  USPA is lam = 1/M
    and BF-IC is lam = 1.
    """
    if gamma < 0:
        raise DomainError("gamma must be nonnegative")
    if rho >= 1.0:
        raise DomainError("the conditional law needs rho < 1")
    if scheme == USPA:
        lam = 1.0 / M
    elif scheme == BF_IC:
        lam = 1.0
    elif isinstance(scheme, Lambda):
        lam = scheme.value
    else:
        raise DomainError(f"no conditional law for scheme {scheme!r}")
    if not 1.0 / M - 1e-12 <= lam <= 1.0 + 1e-12:
        raise DomainError(f"lambda must lie in [1/M, 1], got {lam}")
    mu = rho * rho / ((1.0 - rho) * (1.0 + rho))
    delta = 2.0 * mu * gamma
    limit = 2.0 * math.expm1(R) / P * (mu + 1.0) / power

    def count(rng, n):
        a = rng.noncentral_chisquare(2, delta, n) if delta > 0 else rng.chisquare(2, n)
        xi = lam * a
        if M > 1:
            xi = xi + (1.0 - lam) / (M - 1) * rng.chisquare(2 * (M - 1), n)
        return np.array([np.count_nonzero(xi < limit)])

    return OutageEstimate.from_count(int(_run(mc, count)[0]), mc.samples, mc.master_seed)


def simulate_training(tc: TrainingConfig, R: float, rho: float, scheme: str, mc: McConfig) -> OutageEstimate:
    """Outage of the trained-CSIR mutual-information lower bound, simulated end to end.

    Draws (h_old, h), forms both MMSE estimates from noisy pilots, steers
    with the estimated feedback and thresholds
    (T - M)/T log(1 + P_d / (1 + sigma_e^2 P_d) h_hat^H Q h_hat) against R.
    """
    if scheme not in (USPA, BF_IC):
        raise DomainError(f"training simulation covers USPA and BF-IC, got {scheme!r}")
    M = tc.M
    sigma2 = effective_link(tc, R, rho).sigma_e2
    a = math.sqrt(tc.P_t / M)
    shrink = a / (a * a + 1.0)
    scale = tc.P_d / (1.0 + sigma2 * tc.P_d)
    limit = math.expm1(R * tc.T / (tc.T - M))

    def count(rng, n):
        h_old, h = sample_channels(rng, n, M, rho)
        noise = (rng.standard_normal((2, n, M)) + 1j * rng.standard_normal((2, n, M))) / math.sqrt(2.0)
        est_old = shrink * (a * h_old + noise[0])
        est = shrink * (a * h + noise[1])
        if scheme == USPA:
            q = np.sum(np.abs(est) ** 2, axis=1) / M
        else:
            q = np.abs(np.sum(np.conj(est_old) * est, axis=1)) ** 2 / np.sum(np.abs(est_old) ** 2, axis=1)
        return np.array([np.count_nonzero(scale * q < limit)])

    return OutageEstimate.from_count(int(_run(mc, count)[0]), mc.samples, mc.master_seed)
