"""Optimal spatial power allocation (OSPA) under the short-term constraint.

A fraction ``lam`` of the power goes along the feedback direction and the
rest is split evenly over the M - 1 orthogonal modes.  Given the feedback
SNR gamma the received gain is

    xi = lam * A + (1 - lam) / (M - 1) * B,
    A ~ ncx2(2, 2 mu gamma),  B ~ chi2(2 (M - 1)),

and the link is in outage when xi < 2 beta.
"""

import csv
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from numba import njit

from . import specfun
from .analytic import pout_bfic, pout_uspa, transition_breakpoints
from .errors import ConfigError, DomainError
from .model import SystemConfig, effective_params
from .specfun import _gamma_pq, _ncx2_pdf_dof2

SCAN_POINTS = 33
# non-centrality where lambda_opt is expected to have reached ~1
DELTA_TAIL = 200.0

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_STACK = 256
_BUDGET = 20000


@njit(cache=True)
def _integrand(t, m1, lam, delta, two_beta):
    # f_A(a) F_B((2 beta - lam a)(M - 1)/(1 - lam)) with a = 2 beta / lam - t;
    # writing 2 beta - lam a as lam t avoids cancellation near the top
    a = two_beta / lam - t
    y = lam * t * m1 / (1.0 - lam)
    if y <= 0.0 or a < 0.0:
        return 0.0
    return _ncx2_pdf_dof2(delta, a) * _gamma_pq(m1, 0.5 * y)[0]


@njit(cache=True)
def _panel(lo, hi, m1, lam, delta, two_beta):
    half = 0.5 * (hi - lo)
    total = 0.0
    for j in range(_GL_X.size):
        total += _GL_W[j] * _integrand(lo + half * (_GL_X[j] + 1.0), m1, lam, delta, two_beta)
    return half * total


@njit(cache=True)
def _initial_edges(m1, lam, delta, two_beta, upper):
    # in t = upper - a: a uniform split plus the places where the integrand
    # changes character, i.e. the bulk of A and the layer where F_B climbs from 0
    pts = np.full(22, -1.0)
    for i in range(9):
        pts[i] = upper * i / 8.0
    pts[8] = upper
    root = math.sqrt(delta)
    offsets = (-10.0, -5.0, -2.0, 0.0, 2.0, 5.0, 10.0)
    for j in range(7):
        if root + offsets[j] > 0.0:
            pts[9 + j] = upper - (root + offsets[j]) ** 2
    ys = (0.1, 1.0, m1, 2.0 * m1 + 8.0, 2.0 * m1 + 30.0, 2.0 * m1 + 80.0)
    for j in range(6):
        pts[16 + j] = ys[j] * (1.0 - lam) / (lam * m1)
    edges = pts[(pts >= 0.0) & (pts <= upper)]
    return np.unique(edges)


@njit(cache=True)
def _adaptive(m1, lam, delta, two_beta, edges, atol_of, rough_in):
    # interval halving with an explicit stack; returns (value, rough, ok)
    n0 = edges.size - 1
    size = _STACK + n0
    los = np.empty(size)
    his = np.empty(size)
    wholes = np.empty(size)
    top = 0
    rough = 0.0
    for i in range(n0):
        los[top] = edges[i]
        his[top] = edges[i + 1]
        wholes[top] = _panel(edges[i], edges[i + 1], m1, lam, delta, two_beta)
        rough += wholes[top]
        top += 1
    if rough_in > 0.0:
        rough = rough_in
    atol = atol_of * max(abs(rough), 1e-300)
    length = edges[-1] - edges[0]
    total = 0.0
    ok = True
    panels = 0
    while top > 0:
        top -= 1
        lo = los[top]
        hi = his[top]
        whole = wholes[top]
        mid = 0.5 * (lo + hi)
        left = _panel(lo, mid, m1, lam, delta, two_beta)
        right = _panel(mid, hi, m1, lam, delta, two_beta)
        err = abs(left + right - whole)
        panels += 1
        # error share by length or by mass; either keeps the total below ~2 atol
        share = max((hi - lo) / length, (abs(left) + abs(right)) / max(abs(rough), 1e-300))
        if err <= atol * share or err <= 1e-14 * (abs(left) + abs(right)) or mid <= lo or mid >= hi:
            total += left + right
            continue
        if top + 2 > size or panels > _BUDGET:
            ok = False
            total += left + right
            continue
        los[top] = lo
        his[top] = mid
        wholes[top] = left
        top += 1
        los[top] = mid
        his[top] = hi
        wholes[top] = right
        top += 1
    return total, rough, ok


@njit(cache=True)
def _pout_integral(m1, lam, delta, two_beta, rtol):
    upper = two_beta / lam
    edges = _initial_edges(m1, lam, delta, two_beta, upper)
    # tolerance is relative to a coarse estimate; redone if that was far off
    value, rough, ok = _adaptive(m1, lam, delta, two_beta, edges, rtol, 0.0)
    if ok and not 0.5 * abs(rough) <= abs(value) <= 2.0 * abs(rough):
        value, rough, ok = _adaptive(m1, lam, delta, two_beta, edges, rtol, abs(value))
    if not ok:
        return math.nan
    return value


def _check_lambda(M, lam):
    if not 1.0 / M - 1e-12 <= lam <= 1.0 + 1e-12:
        raise DomainError(f"lambda must lie in [1/M, 1] = [{1.0 / M}, 1], got {lam}")
    return min(max(lam, 1.0 / M), 1.0)


def _setup(M, R, P, rho):
    if int(M) != M or M < 2:
        raise DomainError(f"OSPA needs an integer M >= 2, got {M}")
    if rho >= 1.0:
        raise DomainError("OSPA needs rho < 1")
    params = effective_params(SystemConfig(int(M), R, P, rho))
    return int(M), params.mu, params.beta


def _pout_gl(M, mu, beta, gamma, lam, rtol=1e-11):
    """Conditional outage for validated arguments; exact laws at the endpoints."""
    delta = 2.0 * mu * gamma
    if lam >= 1.0:
        value = specfun.ncx2_cdf_scalar(1.0, delta, 2.0 * beta)
    elif lam * M <= 1.0:
        value = specfun.ncx2_cdf_scalar(float(M), delta, 2.0 * M * beta)
    else:
        value = _pout_integral(float(M - 1), lam, delta, 2.0 * beta, rtol)
    return specfun.clamp_probability(value)


def pout_gamma_lambda(M: int, R: float, P: float, rho: float, gamma: float, lam: float) -> float:
    """Pr(lam A + (1 - lam)/(M - 1) B < 2 beta) at feedback SNR ``gamma``.

    Interior ``lam`` uses the finite convolution integral over
    a in [0, 2 beta / lam] of f_A(a) F_B((2 beta - lam a)(M - 1)/(1 - lam)).
    At lam = 1 and lam = 1/M the law is a single nc-chi-square and is
    evaluated directly.
    """
    M, mu, beta = _setup(M, R, P, rho)
    if gamma < 0:
        raise DomainError(f"gamma must be nonnegative, got {gamma}")
    return _pout_gl(M, mu, beta, float(gamma), _check_lambda(M, float(lam)))


def _lambda_opt(M, mu, beta, gamma, tol):
    grid = np.linspace(1.0, 1.0 / M, SCAN_POINTS)
    vals = np.array([_pout_gl(M, mu, beta, gamma, lam) for lam in grid])
    # first minimum in scan order, which runs from 1 down, so ties favour larger lambda
    i = int(np.argmin(vals))
    best_lam, best_val = float(grid[i]), float(vals[i])
    lo = float(grid[min(i + 1, SCAN_POINTS - 1)])
    hi = float(grid[max(i - 1, 0)])
    lam, val = specfun.minimize_scalar(lambda x: _pout_gl(M, mu, beta, gamma, x), lo, hi, tol)
    if val < best_val:
        best_lam, best_val = lam, val
    return best_lam, best_val


def lambda_opt(M: int, R: float, P: float, rho: float, gamma: float, tol: float = 1e-7) -> float:
    """Minimizer over [1/M, 1] of :func:`pout_gamma_lambda` at fixed gamma.

    A 33-point scan (boundaries included) seeds a golden-section search
    between the neighbours of the best scan point; unimodality is not
    assumed.
    """
    M, mu, beta = _setup(M, R, P, rho)
    if gamma < 0:
        raise DomainError(f"gamma must be nonnegative, got {gamma}")
    return _lambda_opt(M, mu, beta, float(gamma), tol)[0]


def stationarity_residual(
    M: int, R: float, P: float, rho: float, gamma: float, lam: float, return_scale: bool = False
):
    """First-order condition of the lambda search as an integral over a.

    Evaluates the integral over [0, 2 beta / lam] of

        f_A(a) exp(-(M - 1)(2 beta - lam a) / (2 (1 - lam))) (2 beta - lam a)^(M - 2) (2 beta - a),

    which is the usual stationarity integrand with the constant factor
    exp(-(M - 1) beta / (1 - lam)) taken out so the exponential cannot
    overflow.  dP/dlam is a positive multiple of this value, so its sign
    tells whether the outage rises with lam.  With ``return_scale`` the
    integral of the absolute integrand is returned too.
    """
    M, mu, beta = _setup(M, R, P, rho)
    if not 1.0 / M < lam < 1.0:
        raise DomainError(f"residual needs lambda strictly inside (1/M, 1), got {lam}")
    delta = 2.0 * mu * gamma
    two_beta = 2.0 * beta
    upper = two_beta / lam

    def parts(a):
        fa = np.array([_ncx2_pdf_dof2(delta, float(x)) for x in a])
        gap = np.maximum(two_beta - lam * a, 0.0)
        power = np.ones_like(a) if M == 2 else gap ** (M - 2)
        return fa * np.exp(-(M - 1) * gap / (2.0 * (1.0 - lam))) * power * (two_beta - a)

    scale = specfun.integrate_finite(lambda a: np.abs(parts(a)), 0.0, upper, 1e-14, vectorized=True)
    tol = max(scale * 1e-10, 1e-300)
    pieces = [(0.0, min(two_beta, upper)), (min(two_beta, upper), upper)]
    value = sum(specfun.integrate_finite(parts, lo, hi, tol, vectorized=True) for lo, hi in pieces if hi > lo)
    if return_scale:
        return value, scale
    return value


@dataclass(frozen=True)
class SpatialPolicy:
    """Tabulated lambda_opt(gamma), interpolated piecewise-linearly and clamped."""

    gamma_grid: np.ndarray
    lambda_values: np.ndarray
    config: SystemConfig

    def __post_init__(self):
        g = np.asarray(self.gamma_grid, dtype=float)
        lam = np.asarray(self.lambda_values, dtype=float)
        if g.ndim != 1 or g.shape != lam.shape or g.size == 0:
            raise ConfigError("gamma_grid and lambda_values must be equal-length 1-d arrays")
        if np.any(g < 0) or np.any(np.diff(g) <= 0):
            raise ConfigError("gamma_grid must be nonnegative and strictly increasing")
        M = self.config.M
        if np.any(lam < 1.0 / M - 1e-12) or np.any(lam > 1.0 + 1e-12):
            raise ConfigError(f"lambda values must lie in [1/M, 1] for M={M}")
        object.__setattr__(self, "gamma_grid", g)
        object.__setattr__(self, "lambda_values", np.clip(lam, 1.0 / M, 1.0))

    def __call__(self, gamma):
        return np.interp(gamma, self.gamma_grid, self.lambda_values)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["gamma", "lambda_opt"])
            for g, lam in zip(self.gamma_grid, self.lambda_values):
                w.writerow([repr(float(g)), repr(float(lam))])

    @classmethod
    def from_csv(cls, path, config: SystemConfig) -> "SpatialPolicy":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["gamma", "lambda_opt"]:
            raise ConfigError(f"{path}: expected header gamma,lambda_opt")
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, 2)
        return cls(data[:, 0], data[:, 1], config)


@dataclass(frozen=True)
class OspaResult:
    pout: float
    policy: SpatialPolicy


def ospa_breakpoints(M: int, mu: float, beta: float) -> Tuple[float, ...]:
    """Cuts for the gamma average: both the lam = 1 and lam = 1/M transitions."""
    pts = set(transition_breakpoints(mu, 2.0 * beta, dof=2))
    pts.update(p for p in transition_breakpoints(mu, 2.0 * M * beta, dof=2 * M) if p <= max(pts, default=0.0))
    return tuple(sorted(pts))


def pout_ospa(M: int, R: float, P: float, rho: float, tol: float = 1e-9) -> OspaResult:
    """Average over gamma of the conditional outage at lambda_opt(gamma).

    The average is taken with finite adaptive pieces up to the point where
    the lam = 1 conditional outage, an upper bound on the optimum, has
    dropped below ~1e-37; beyond it that bound is averaged instead, which
    changes the result by less than its own size.
    """
    M, mu, beta = _setup(M, R, P, rho)
    cache: Dict[float, float] = {}

    def at(gamma):
        g = float(gamma)
        if g not in cache:
            cache[g] = _lambda_opt(M, mu, beta, g, 1e-7)
        return cache[g][1]

    if mu == 0.0:
        # nothing depends on gamma
        lam, val = _lambda_opt(M, mu, beta, 0.0, 1e-7)
        config = SystemConfig(M, R, P, rho)
        return OspaResult(val, SpatialPolicy(np.array([0.0]), np.array([lam]), config))

    cuts = ospa_breakpoints(M, mu, beta)
    end = cuts[-1]
    # both fixed allocations are feasible, so this bounds the answer from above
    scale = min(float(pout_uspa(M, R, P)), float(pout_bfic(M, R, P, rho)))
    edges = (0.0,) + cuts
    body = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        h = lambda t: float(specfun.gamma_density(M, t)) * at(t)
        body += specfun.integrate_finite(h, lo, hi, max(1e-300, 0.1 * tol * scale))
    tail = specfun.gamma_expectation(
        M,
        lambda g: specfun.ncx2_cdf(2, 2.0 * mu * np.asarray(g), 2.0 * beta),
        tol,
        vectorized=True,
        lower=end,
    )
    at(0.0)
    # table nodes past the cut, so replay and the large-delta check see the tail
    for g in (2.0 * end, DELTA_TAIL / (2.0 * mu)):
        if g > end:
            at(g)
    gammas = np.array(sorted(cache))
    lams = np.array([cache[g][0] for g in gammas])
    policy = SpatialPolicy(gammas, lams, SystemConfig(M, R, P, rho))
    return OspaResult(specfun.clamp_probability(body + tail), policy)
