"""Temporal power control under a long-term (unit mean) power constraint.

For each feedback SNR gamma the transmitter scales its power by p(gamma)
with E[p(gamma)] = 1 over gamma ~ Gamma(M, 1).  The spatial scheme is fixed:
USPA-TPC spreads power uniformly (conditional law ncx2(2M, delta) against
2 M beta / p), BFIC-TPC beamforms on the feedback (ncx2(2, delta) against
2 beta / p).

The policy minimizing the average outage is found pointwise from the
Lagrangian: p(gamma) = argmin_{p >= 0} F(c / p) + s p, with the multiplier
s tuned until the constraint holds.  Interior minimizers satisfy
(c / p^2) f(c / p) = s, i.e. the usual calculus-of-variations condition.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from numba import njit

from . import specfun
from .analytic import crossover_snr, transition_breakpoints
from .errors import ConfigError, DegeneratePolicyError, DomainError, NotFoundError, SolverError
from .model import SystemConfig, db_to_linear, effective_params
from .specfun import _ncx2_cdf_kernel, _ncx2_pdf_kernel

USPA_TPC = "USPA-TPC"
BFIC_TPC = "BFIC-TPC"
TPC_SCHEMES = (USPA_TPC, BFIC_TPC)

P_MIN = 1e-6
P_MAX = 1e12
GRID_POINTS = 64
SCAN_STEP = 0.3
EXPORT_POINTS = 256

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def law(scheme: str, M: int) -> Tuple[float, float]:
    """(half degrees of freedom, threshold multiplier of beta) for a scheme."""
    if scheme == USPA_TPC:
        return float(M), 2.0 * M
    if scheme == BFIC_TPC:
        return 1.0, 2.0
    raise DomainError(f"unknown TPC scheme {scheme!r}")


@njit(cache=True)
def _cost(u, half_dof, lam, c, s):
    # F(c / p) + s p at p = e^u; the kernel takes half the chi-square argument
    p = math.exp(u)
    return _ncx2_cdf_kernel(half_dof, lam, 0.5 * c / p) + s * p


@njit(cache=True)
def _phi(half_dof, lam, c, p):
    # (c / p^2) f(c / p); the kernel density already includes its Jacobian
    return c / (p * p) * _ncx2_pdf_kernel(half_dof, lam, 0.5 * c / p)


@njit(cache=True)
def _inner(half_dof, lam, c, s, u_lo, u_hi, n, tol):
    """Minimize F(c/p) + s p over p in {0} U [e^u_lo, e^u_hi]; returns (p, cost)."""
    step = (u_hi - u_lo) / (n - 1)
    best_i = 0
    best = math.inf
    for i in range(n):
        v = _cost(u_lo + i * step, half_dof, lam, c, s)
        if v < best:
            best = v
            best_i = i
    a = u_lo + max(best_i - 1, 0) * step
    b = u_lo + min(best_i + 1, n - 1) * step
    best_u = u_lo + best_i * step
    # golden section between the scan neighbours, keeping the best sample
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1 = _cost(x1, half_dof, lam, c, s)
    f2 = _cost(x2, half_dof, lam, c, s)
    while b - a > tol:
        if f1 <= f2:
            b = x2
            x2 = x1
            f2 = f1
            x1 = b - _INVPHI * (b - a)
            f1 = _cost(x1, half_dof, lam, c, s)
        else:
            a = x1
            x1 = x2
            f1 = f2
            x2 = a + _INVPHI * (b - a)
            f2 = _cost(x2, half_dof, lam, c, s)
        if f1 < best:
            best = f1
            best_u = x1
        if f2 < best:
            best = f2
            best_u = x2
    # p = 0 means certain outage at zero power cost
    if best >= 1.0:
        return 0.0, 1.0
    # the cost is flat at its minimum, so golden section pins u only to
    # ~sqrt(eps); an interior minimum is a simple root of s - phi(e^u)
    lo = u_lo + max(best_i - 1, 0) * step
    hi = u_lo + min(best_i + 1, n - 1) * step
    g_hi = s - _phi(half_dof, lam, c, math.exp(hi))
    if best_i >= n - 2 and g_hi <= 0.0:
        # cost still falling at the cap: the constrained minimizer is the cap
        v = _cost(u_hi, half_dof, lam, c, s)
        if v <= best + 1e-15:
            return math.exp(u_hi), v
    # the slope s - phi can change sign twice inside one scan cell when the
    # outage transition is sharp, so bracket from the golden-section point
    g_lo = 1.0
    g_m = s - _phi(half_dof, lam, c, math.exp(best_u))
    if g_m < 0.0:
        lo = best_u
        g_lo = g_m
    elif g_m > 0.0:
        hi = best_u
        g_hi = g_m
        d = 1e-9
        while d < best_u - lo:
            g_x = s - _phi(half_dof, lam, c, math.exp(best_u - d))
            if g_x < 0.0:
                lo = best_u - d
                g_lo = g_x
                break
            d *= 4.0
    else:
        return math.exp(best_u), best
    if g_lo < 0.0 < g_hi:
        side = 0
        for _ in range(200):
            u = hi - g_hi * (hi - lo) / (g_hi - g_lo)
            if not lo < u < hi:
                u = 0.5 * (lo + hi)
            g = s - _phi(half_dof, lam, c, math.exp(u))
            if g == 0.0 or hi - lo < 1e-15 * max(1.0, abs(u)):
                break
            if g < 0.0:
                lo = u
                g_lo = g
                if side == -1:
                    g_hi *= 0.5
                side = -1
            else:
                hi = u
                g_hi = g
                if side == 1:
                    g_lo *= 0.5
                side = 1
        v = _cost(u, half_dof, lam, c, s)
        # the cost carries a few ulp of evaluation noise; the root of the
        # stationarity condition is the better minimizer whenever it ties
        if v <= best + 1e-12 * (1.0 + best):
            return math.exp(u), v
    return math.exp(best_u), best


@dataclass(frozen=True)
class _Problem:
    scheme: str
    config: SystemConfig
    half_dof: float
    mu: float
    c: float

    @classmethod
    def build(cls, scheme, config):
        if config.rho >= 1.0:
            raise DomainError("temporal power control needs rho < 1")
        half_dof, mult = law(scheme, config.M)
        params = effective_params(config)
        return cls(scheme, config, half_dof, params.mu, mult * params.beta)

    def lam(self, gamma):
        # Poisson mean of the mixture: delta / 2 = mu gamma
        return self.mu * gamma

    def p_opt(self, gamma, s):
        # p > 1/s costs more than the certain outage of p = 0, so 1/s is a
        # natural cap; P_MAX only guards against s underflowing
        u_lo = math.log(P_MIN)
        u_hi = min(-math.log(s), math.log(P_MAX)) if s > 0 else math.log(P_MAX)
        if u_hi <= u_lo:
            return 0.0
        n = max(GRID_POINTS, int(math.ceil((u_hi - u_lo) / SCAN_STEP)) + 1)
        return _inner(self.half_dof, self.lam(gamma), self.c, s, u_lo, u_hi, n, 1e-10)[0]

    def outage(self, gamma, p):
        if p <= 0.0:
            return 1.0
        return _ncx2_cdf_kernel(self.half_dof, self.lam(gamma), 0.5 * self.c / p)

    def phi(self, gamma, p):
        return _phi(self.half_dof, self.lam(gamma), self.c, p)

    def cuts(self):
        return transition_breakpoints(self.mu, self.c, dof=int(2 * self.half_dof))


def _support_start(prob: _Problem, s: float, gamma_max: float = 1e6) -> Optional[float]:
    """Smallest gamma with p(gamma) > 0, by bisection on the monotone indicator.

    The minimal Lagrangian cost is nonincreasing in gamma because F is
    nonincreasing in the non-centrality, so the support is an interval
    [gamma*, inf).  Returns None when the support is empty up to gamma_max.
    """
    if prob.p_opt(0.0, s) > 0.0:
        return 0.0
    hi = 1.0
    while prob.p_opt(hi, s) == 0.0:
        hi *= 2.0
        if hi > gamma_max:
            return None
    lo = 0.0
    while hi - lo > 1e-13 * max(hi, 1e-300) and hi - lo > 1e-300:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if prob.p_opt(mid, s) > 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def _mean_power(prob: _Problem, s: float, tol: float):
    start = _support_start(prob, s)
    if start is None:
        return 0.0, None
    value = specfun.gamma_expectation(
        prob.config.M, lambda g: prob.p_opt(g, s), tol, breakpoints=prob.cuts(), lower=start
    )
    return value, start


@dataclass(frozen=True)
class PowerPolicy:
    """Tabulated p(gamma) with its multiplier.

    Solved policies (``solved=True``) re-solve the pointwise problem on
    demand, so :func:`pout_tpc` and :func:`stationarity_check` are exact;
    otherwise p is interpolated piecewise-linearly, clamped at the ends.
    """

    gamma_grid: np.ndarray
    p_values: np.ndarray
    lagrange_constant: Optional[float]
    scheme: str
    config: SystemConfig
    support_start: Optional[float] = None
    solved: bool = False
    trace: Tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        g = np.asarray(self.gamma_grid, dtype=float)
        p = np.asarray(self.p_values, dtype=float)
        if g.ndim != 1 or g.shape != p.shape or g.size == 0:
            raise ConfigError("gamma_grid and p_values must be equal-length 1-d arrays")
        if np.any(g < 0) or np.any(np.diff(g) <= 0):
            raise ConfigError("gamma_grid must be nonnegative and strictly increasing")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ConfigError("p_values must be finite and nonnegative")
        law(self.scheme, self.config.M)
        object.__setattr__(self, "gamma_grid", g)
        object.__setattr__(self, "p_values", p)

    @classmethod
    def constant(cls, scheme: str, config: SystemConfig, value: float = 1.0) -> "PowerPolicy":
        """The policy p(gamma) = value, without temporal adaptation."""
        return cls(np.array([0.0]), np.array([float(value)]), None, scheme, config)

    def __call__(self, gamma):
        if self.solved:
            prob = _Problem.build(self.scheme, self.config)
            g = np.atleast_1d(np.asarray(gamma, dtype=float))
            out = np.array([prob.p_opt(x, self.lagrange_constant) if x >= self.support_start else 0.0 for x in g])
            return out if np.ndim(gamma) else float(out[0])
        return np.interp(gamma, self.gamma_grid, self.p_values)

    def interpolate(self, gamma):
        """Piecewise-linear table lookup, as used for Monte Carlo replay."""
        return np.interp(gamma, self.gamma_grid, self.p_values)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["gamma", "p"])
            for g, p in zip(self.gamma_grid, self.p_values):
                w.writerow([repr(float(g)), repr(float(p))])

    @classmethod
    def from_csv(cls, path, scheme: str, config: SystemConfig) -> "PowerPolicy":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["gamma", "p"]:
            raise ConfigError(f"{path}: expected header gamma,p")
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, 2)
        return cls(data[:, 0], data[:, 1], None, scheme, config)


def _export_grid(prob: _Problem, s: float, start: float) -> Tuple[np.ndarray, np.ndarray]:
    M = prob.config.M
    # log-spaced over the bulk of Gamma(M, 1), plus the quadrature region cuts
    top = M + 40.0 * math.sqrt(M) + 40.0
    grid = set(np.geomspace(1e-4, top, EXPORT_POINTS).tolist())
    grid.update(c for c in prob.cuts() if c < top)
    grid.add(0.0)
    grid.add(start)
    g = np.array(sorted(grid))
    p = np.array([prob.p_opt(x, s) if x >= start else 0.0 for x in g])
    if start > 0.0:
        # make the jump at the support edge explicit for interpolation
        below = start * (1.0 - 1e-12)
        g = np.append(g, below)
        p = np.append(p, 0.0)
        order = np.argsort(g)
        g, p = g[order], p[order]
        keep = np.concatenate([[True], np.diff(g) > 0])
        g, p = g[keep], p[keep]
    return g, p


def solve_policy(
    scheme: str,
    M: int,
    R: float,
    P: float,
    rho: float,
    tol: float = 1e-9,
    s_bracket: Tuple[float, float] = (1e-8, 1e3),
    maxiter: int = 200,
) -> PowerPolicy:
    """Optimal temporal power control p(gamma) for a fixed spatial scheme.

    The multiplier s is searched on log s.  The search starts from the
    stationarity value of the constant policy and steps by decades until
    E[p] - 1 (decreasing in s) changes sign, staying inside ``s_bracket``
    first and widening it geometrically only if the bracket holds no sign
    change.  The bracket is then closed by regula falsi (Illinois variant)
    on log E[p], which is close to linear in log s; iterates with an empty
    support fall back to bisection.  Every iterate is recorded in the
    policy's ``trace`` and in the :class:`SolverError` raised on failure.
    """
    config = SystemConfig(M, R, P, rho)
    law(scheme, config.M)
    if rho == 0.0:
        # every gamma sees the same law, so the constraint forces p = 1
        prob = _Problem.build(scheme, config)
        phi = prob.phi(0.0, 1.0)
        return PowerPolicy(np.array([0.0]), np.array([1.0]), phi, scheme, config, 0.0, False)
    prob = _Problem.build(scheme, config)
    trace: List[Tuple[float, float]] = []

    def excess(u):
        value, _ = _mean_power(prob, math.exp(u), tol)
        trace.append((math.exp(u), value))
        return value - 1.0

    b_lo, b_hi = math.log(s_bracket[0]), math.log(s_bracket[1])
    guess = prob.phi(float(config.M), 1.0)
    u0 = min(max(math.log(guess), b_lo), b_hi) if guess > 0 else 0.5 * (b_lo + b_hi)
    f0 = excess(u0)
    decade = math.log(10.0)
    lo = hi = None
    u, f = u0, f0
    for _ in range(60):
        step = decade if f > 0.0 else -decade
        v = u + step
        limit = b_hi if step > 0 else b_lo
        if (step > 0 and u >= limit) or (step < 0 and u <= limit):
            # bracket exhausted in this direction: widen geometrically
            width = b_hi - b_lo
            if step > 0:
                b_hi += width
            else:
                b_lo -= width
            if b_hi - b_lo > 200.0:
                raise SolverError("multiplier bracket exhausted", trace)
        v = min(max(v, b_lo), b_hi)
        fv = excess(v)
        if f * fv <= 0.0:
            (lo, f_lo), (hi, f_hi) = sorted([(u, f), (v, fv)])
            break
        u, f = v, fv
    if lo is None:
        raise SolverError("multiplier bracket exhausted", trace)

    def transform(val):
        # log E[p]; an empty support (E[p] = 0) has no log and forces bisection
        return math.log1p(val) if val > -1.0 else None

    side = 0
    u = lo if f_lo == 0.0 else hi
    for _ in range(maxiter):
        if f_lo == 0.0:
            u = lo
            break
        if f_hi == 0.0:
            u = hi
            break
        t_lo, t_hi = transform(f_lo), transform(f_hi)
        if t_lo is None or t_hi is None:
            u = 0.5 * (lo + hi)
        else:
            u = hi - t_hi * (hi - lo) / (t_hi - t_lo)
            if not lo < u < hi:
                u = 0.5 * (lo + hi)
        f = excess(u)
        if abs(f) <= 1e-8 or hi - lo < 1e-14:
            break
        if f > 0.0:
            lo, f_lo = u, f
            if side == 1 and f_hi > -1.0:
                # Illinois: halve the stale end in the transformed scale
                f_hi = math.expm1(0.5 * math.log1p(f_hi))
            side = 1
        else:
            hi, f_hi = u, f
            if side == -1:
                f_lo = math.expm1(0.5 * math.log1p(f_lo))
            side = -1
    else:
        raise SolverError("multiplier iteration did not converge", trace)
    if abs(trace[-1][1] - 1.0) > 1e-4:
        raise SolverError("power constraint not met at the final multiplier", trace)

    s = math.exp(u)
    start = _support_start(prob, s)
    if start is None:
        raise SolverError("solved policy has an empty support", trace)
    g, p = _export_grid(prob, s, start)
    return PowerPolicy(g, p, s, scheme, config, start, True, tuple(trace))


def mean_power(policy: PowerPolicy, tol: float = 1e-9) -> float:
    """E[p(gamma)] by fresh quadrature, independent of the multiplier search."""
    M = policy.config.M
    if policy.solved:
        start = policy.support_start
        return specfun.gamma_expectation(
            M, lambda g: policy(g), tol, breakpoints=_Problem.build(policy.scheme, policy.config).cuts(), lower=start
        )
    cuts = [float(x) for x in policy.gamma_grid[1:]] if policy.gamma_grid.size <= 64 else []
    return specfun.gamma_expectation(M, policy.interpolate, tol, vectorized=True, breakpoints=cuts)


def pout_tpc(policy: PowerPolicy, tol: float = 1e-9) -> float:
    """Average outage under a power policy; gamma with p = 0 count as outage."""
    config = policy.config
    prob = _Problem.build(policy.scheme, config)
    M = config.M
    if policy.solved:
        start = policy.support_start
        s = policy.lagrange_constant
        dead = float(specfun.reg_inc_gamma(M, start)) if start > 0 else 0.0

        def g(x):
            return prob.outage(x, prob.p_opt(x, s))

        body = specfun.gamma_expectation(M, g, tol, breakpoints=prob.cuts(), lower=start)
        return specfun.clamp_probability(dead + body)

    def g(x):
        return prob.outage(x, float(policy.interpolate(x)))

    cuts = list(prob.cuts())
    if policy.gamma_grid.size <= 64:
        cuts += [float(x) for x in policy.gamma_grid[1:]]
    return specfun.clamp_probability(specfun.gamma_expectation(M, g, tol, breakpoints=cuts))


def stationarity_check(policy: PowerPolicy) -> np.ndarray:
    """Relative deviation |phi(p)/s - 1| at every support node of the table.

    phi(p) = (c / p^2) f(c / p) is the left side of the stationarity
    condition; the maximum of the returned array is the usual summary.
    Nodes outside the support get NaN.
    """
    prob = _Problem.build(policy.scheme, policy.config)
    support = policy.p_values > 0.0
    if not support.any():
        raise DegeneratePolicyError("policy has no gamma with p > 0")
    phis = np.array(
        [prob.phi(g, p) if p > 0 else math.nan for g, p in zip(policy.gamma_grid, policy.p_values)]
    )
    s = policy.lagrange_constant
    if s is None:
        # unsolved table: compare against the best single constant
        s = float(np.exp(np.mean(np.log(phis[support]))))
    return np.abs(phis / s - 1.0)


def max_stationarity_deviation(policy: PowerPolicy) -> float:
    dev = stationarity_check(policy)
    return float(np.nanmax(dev))


def outage_region(policy: PowerPolicy) -> float:
    """Gamma(M, 1) probability of the set where p(gamma) = 0."""
    if policy.solved:
        start = policy.support_start
        return float(specfun.reg_inc_gamma(policy.config.M, start)) if start > 0 else 0.0
    zero = policy.p_values == 0.0
    if not zero.any():
        return 0.0
    # covered by the table as a leading run of zeros
    edge = policy.gamma_grid[np.argmax(~zero)] if (~zero).any() else math.inf
    return float(specfun.reg_inc_gamma(policy.config.M, edge)) if math.isfinite(edge) else 1.0


def tpc_gap(M: int, R: float, rho: float, snr_db: float, tol: float = 1e-9) -> float:
    """log10 pout(USPA-TPC) - log10 pout(BFIC-TPC); positive where BF-IC wins."""
    P = float(db_to_linear(snr_db))
    pu = pout_tpc(solve_policy(USPA_TPC, M, R, P, rho, tol), tol)
    pb = pout_tpc(solve_policy(BFIC_TPC, M, R, P, rho, tol), tol)
    return math.log10(pu) - math.log10(pb)


def tpc_crossover_snr(
    M: int, R: float, rho: float, start_db: Optional[float] = None, step_db: float = 2.0, tol_db: float = 0.01
) -> float:
    """Cross-over SNR between USPA-TPC and BFIC-TPC.

    The search starts at the short-term cross-over (or ``start_db``),
    walks in ``step_db`` steps until the gap changes sign and refines the
    bracket by root finding.
    """
    if start_db is None:
        start_db = crossover_snr(M, R, rho).snr_db
    a = float(start_db)
    fa = tpc_gap(M, R, rho, a)
    direction = -1.0 if fa < 0 else 1.0
    for _ in range(30):
        b = a + direction * step_db
        fb = tpc_gap(M, R, rho, b)
        if fa * fb <= 0:
            lo, hi = min(a, b), max(a, b)
            return specfun.find_root(lambda x: tpc_gap(M, R, rho, x), lo, hi, tol_db)
        a, fa = b, fb
    raise NotFoundError("no TPC cross-over found", {"start_db": start_db, "last_db": a, "gap": fa})
