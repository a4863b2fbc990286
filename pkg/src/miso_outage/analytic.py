"""Closed-form outage probabilities under a short-term power constraint.

All functions take the rate ``R`` in nats and the linear SNR ``P``.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from . import specfun
from .errors import DomainError, NotFoundError, RangeError, SingularParameterError
from .model import BF_IC, BF_PERFECT, USPA, db_to_linear, mu_of_rho


def _threshold(R, P):
    if not R > 0 or not np.all(np.asarray(P) > 0):
        raise DomainError("R and P must be positive")
    return math.expm1(R) / np.asarray(P, dtype=float)


def pout_uspa(M: int, R: float, P):
    """Uniform allocation over M directions: P(M, (e^R - 1) M / P)."""
    return specfun.reg_inc_gamma(M, _threshold(R, P) * M)


def pout_bf_perfect(M: int, R: float, P):
    """Beamforming with perfect CSIT: P(M, (e^R - 1) / P)."""
    return specfun.reg_inc_gamma(M, _threshold(R, P))


def bfic_weights(M: int, rho: float) -> np.ndarray:
    """Mixture weights C(M-1, i) mu^i / (1 + mu)^(M-1), i = 0..M-1.

    With mu/(1+mu) = rho^2 these are the Binomial(M-1, rho^2) masses, which
    is how they are evaluated (finite at rho = 1, no overflow in mu).
    """
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [0, 1], got {rho}")
    q = rho * rho
    i = np.arange(M)
    comb = np.array([math.comb(M - 1, k) for k in i], dtype=float)
    return comb * q**i * (1.0 - q) ** (M - 1 - i)


def pout_bfic(M: int, R: float, P, rho: float):
    """Beamforming on delayed feedback, averaged over the feedback SNR.

    Weighted average of the perfect-CSIT outage of K x 1 systems, K = 1..M.
    """
    if rho >= 1.0:
        return pout_bf_perfect(M, R, P)
    x = _threshold(R, P)
    w = bfic_weights(M, rho)
    total = sum(w[i] * specfun.reg_inc_gamma(i + 1, x) for i in range(M) if w[i] > 0)
    return specfun.clamp_probability(total)


def _survival_uspa(M, R, P):
    return specfun.reg_inc_gamma_complement(M, _threshold(R, P) * M)


def _survival_bfic(M, R, P, rho):
    x = _threshold(R, P)
    if rho >= 1.0:
        return specfun.reg_inc_gamma_complement(M, x)
    w = bfic_weights(M, rho)
    return sum(w[i] * specfun.reg_inc_gamma_complement(i + 1, x) for i in range(M) if w[i] > 0)


def _log_prob(p, q):
    # log of p = 1 - q, using whichever side is accurate
    return math.log1p(-q) if q < 0.5 else math.log(p)


def pout_bfic_given_gamma(M: int, R: float, P: float, rho: float, gamma):
    """Outage given feedback SNR gamma: F_ncx2(2, 2 mu gamma)(2 beta)."""
    if rho >= 1.0:
        raise SingularParameterError("conditional law is degenerate at rho = 1")
    mu = mu_of_rho(rho)
    beta = float(_threshold(R, P)) * (mu + 1.0)
    return specfun.ncx2_cdf(2, 2.0 * mu * np.asarray(gamma, dtype=float), 2.0 * beta)


def transition_breakpoints(mu: float, threshold: float, dof: int = 2) -> Tuple[float, ...]:
    """Points bracketing where a non-central chi-square CDF at ``threshold``
    drops from ~1 to ~0 as gamma grows (non-centrality 2 mu gamma).

    The mean of the law crosses the threshold at gamma0 and the crossing
    spreads over a few standard deviations; feeding these to
    :func:`specfun.gamma_expectation` keeps the quadrature from straddling it.
    """
    if mu <= 0:
        return ()
    gamma0 = max(0.0, (threshold - dof) / (2.0 * mu))
    spread = math.sqrt(2.0 * dof + 4.0 * threshold) / (2.0 * mu)
    pts = [gamma0 + k * spread for k in (-12.0, -4.0, 0.0, 4.0, 12.0)]
    # the upper tail decays like exp(-(sqrt(delta) - sqrt(threshold))^2 / 2),
    # i.e. on a 1/mu scale in gamma; cut where that exponent reaches ~85
    end = (math.sqrt(threshold) + 13.0) ** 2 / (2.0 * mu)
    while pts[-1] < end:
        pts.append(min(end, gamma0 + 2.0 * (pts[-1] - gamma0)))
    return tuple(p for p in pts if p > 0)


def pout_bfic_by_quadrature(M: int, R: float, P: float, rho: float, tol: float = 1e-10) -> float:
    """Average of :func:`pout_bfic_given_gamma` over gamma by numerical quadrature."""
    if rho >= 1.0:
        # conditional outage is the indicator gamma < (e^R - 1)/P
        x = float(_threshold(R, P))
        return specfun.gamma_expectation(M, lambda g: (g < x).astype(float), tol, vectorized=True, breakpoints=(x,)) + 0.0
    mu = mu_of_rho(rho)
    beta = float(_threshold(R, P)) * (mu + 1.0)
    return specfun.gamma_expectation(
        M,
        lambda g: pout_bfic_given_gamma(M, R, P, rho, g),
        tol,
        vectorized=True,
        breakpoints=transition_breakpoints(mu, 2.0 * beta),
    )


POUT = {
    USPA: lambda M, R, P, rho: pout_uspa(M, R, P),
    BF_IC: pout_bfic,
    BF_PERFECT: lambda M, R, P, rho: pout_bf_perfect(M, R, P),
}


@dataclass(frozen=True)
class OutageCurve:
    snr_db: np.ndarray
    pout: np.ndarray
    scheme: str
    M: int
    R: float
    rho: float

    def __post_init__(self):
        snr = np.asarray(self.snr_db, dtype=float)
        pout = np.asarray(self.pout, dtype=float)
        if snr.shape != pout.shape:
            raise DomainError("snr_db and pout differ in length")
        if np.any(np.diff(snr) <= 0):
            raise DomainError("snr_db must be strictly increasing")
        if np.any(pout < 0) or np.any(pout > 1):
            raise DomainError("pout values must be probabilities")
        object.__setattr__(self, "snr_db", snr)
        object.__setattr__(self, "pout", pout)


def outage_curve(scheme: str, M: int, R: float, rho: float, snr_db: Sequence[float]) -> OutageCurve:
    if scheme not in POUT:
        raise DomainError(f"no closed form for scheme {scheme!r}")
    snr = np.asarray(snr_db, dtype=float)
    pout = np.array([float(POUT[scheme](M, R, float(p), rho)) for p in db_to_linear(snr)])
    return OutageCurve(snr, pout, scheme, M, R, rho)


def diversity_slope(curve: OutageCurve, window_db=(35.0, 45.0)) -> float:
    """Least-squares slope of -log10(pout) against log10(SNR) inside the window."""
    lo, hi = window_db
    inside = (curve.snr_db >= lo) & (curve.snr_db <= hi) & (curve.pout > 0)
    if inside.sum() < 3:
        raise RangeError(f"need at least 3 points in [{lo}, {hi}] dB, have {int(inside.sum())}")
    x = curve.snr_db[inside] / 10.0
    y = -np.log10(curve.pout[inside])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


@dataclass(frozen=True)
class Crossover:
    """Cross-over between USPA and BF-IC.

    ``snr_db`` is the smallest crossing in the search window; ``roots``
    lists every crossing found (more than one is flagged with a warning).
    """

    snr_db: float
    M: int
    R: float
    rho: float
    roots: Tuple[float, ...] = field(default=())

    @property
    def multiplicity(self) -> int:
        return len(self.roots)


def log_outage_gap(M: int, R: float, rho: float, snr_db: float) -> float:
    """log10 pout_USPA - log10 pout_BFIC at ``snr_db``; positive where BF-IC wins.

    Survival functions are used when outages are close to one so the sign
    stays meaningful at very low SNR.
    """
    P = float(db_to_linear(snr_db))
    lu = _log_prob(float(pout_uspa(M, R, P)), float(_survival_uspa(M, R, P)))
    lb = _log_prob(float(pout_bfic(M, R, P, rho)), float(_survival_bfic(M, R, P, rho)))
    return (lu - lb) / math.log(10.0)


def find_crossings(gap, window_db=(-10.0, 60.0), step_db: float = 0.25, tol: float = 1e-9):
    """All sign changes of ``gap(snr_db)`` on a dense scan, refined by root finding."""
    lo, hi = window_db
    grid = np.arange(lo, hi + 0.5 * step_db, step_db)
    vals = np.array([gap(s) for s in grid])
    roots = []
    for i in range(grid.size - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            if i == 0 or vals[i - 1] * b < 0:
                roots.append(float(grid[i]))
            continue
        if a * b < 0:
            roots.append(specfun.find_root(gap, grid[i], grid[i + 1], tol))
    return roots, grid, vals


def crossover_snr(
    M: int,
    R: float,
    rho: float,
    window_db=(-10.0, 60.0),
    step_db: float = 0.25,
    tol: float = 1e-9,
) -> Crossover:
    """SNR (dB) where USPA starts to beat BF-IC."""
    if M < 2:
        raise DomainError("cross-over needs M >= 2")
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [0, 1], got {rho}")
    roots, grid, vals = find_crossings(
        lambda s: log_outage_gap(M, R, rho, s), window_db, step_db, tol
    )
    if not roots:
        raise NotFoundError(
            f"no cross-over in [{window_db[0]}, {window_db[1]}] dB",
            {"gap_lo": float(vals[0]), "gap_hi": float(vals[-1]), "window_db": tuple(window_db)},
        )
    if len(roots) > 1:
        warnings.warn(f"{len(roots)} cross-over points found for rho={rho}: {roots}", RuntimeWarning)
    return Crossover(roots[0], M, R, rho, tuple(roots))
