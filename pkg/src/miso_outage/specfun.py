"""Special functions and small numeric kernels.

Everything here works on plain floats or numpy arrays.  The scalar
series/continued-fraction loops are compiled with numba; the public
wrappers validate arguments, broadcast, and clamp probabilities.

Conventions
-----------
``reg_inc_gamma(m, x)`` is the regularized lower incomplete gamma
function P(m, x) for integer m.  Chi-square laws are parameterized by
their degrees of freedom, so ``chi2_cdf(2m, 2x) == reg_inc_gamma(m, x)``.
The non-central chi-square uses the non-centrality ``delta`` (mean of the
law is ``dof + delta``).
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numba import njit
from scipy.linalg import eigh_tridiagonal

from .errors import (
    BracketError,
    ConvergenceError,
    DomainError,
    EvaluationError,
)

CLAMP_SLACK = 1e-12

_EPS = 1e-17
_FPMIN = 1e-300
_MAX_ITER = 1_000_000


# ---------------------------------------------------------------------------
# compiled kernels
# ---------------------------------------------------------------------------


_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@njit(cache=True)
def _stirlerr(n):
    """log(n!) - log(sqrt(2 pi n) (n/e)^n), real n > 0."""
    if n <= 15.0:
        return math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - _LN_SQRT_2PI
    nn = n * n
    return (1.0 / 12 - (1.0 / 360 - (1.0 / 1260 - (1.0 / 1680 - (1.0 / 1188) / nn) / nn) / nn) / nn) / n


@njit(cache=True)
def _bd0(x, np_):
    """Deviance term x log(x/np) + np - x without cancellation."""
    if abs(x - np_) < 0.1 * (x + np_):
        v = (x - np_) / (x + np_)
        s = (x - np_) * v
        ej = 2.0 * x * v
        v2 = v * v
        for j in range(1, 1000):
            ej *= v2
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
        return s
    return x * math.log(x / np_) + np_ - x


@njit(cache=True)
def _dpois(k, lam):
    """lam^k e^-lam / Gamma(k+1) for real k >= 0, lam >= 0 (saddle-point form)."""
    if lam == 0.0:
        return 1.0 if k == 0.0 else 0.0
    if k == 0.0:
        return math.exp(-lam)
    if k < 1.0:
        return math.exp(k * math.log(lam) - lam - math.lgamma(k + 1.0))
    return math.exp(-_stirlerr(k) - _bd0(k, lam)) / math.sqrt(2.0 * math.pi * k)


@njit(cache=True)
def _gamma_pq(a, x):
    """Return (P, Q) for real a > 0, x >= 0; NaN pair on non-convergence."""
    if x <= 0.0:
        return 0.0, 1.0
    if x < a + 1.0:
        # P = x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n))
        ap = a
        term = 1.0
        total = 1.0
        for _ in range(_MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if term < total * _EPS:
                p = total * _dpois(a, x)
                return p, 1.0 - p
        return math.nan, math.nan
    # modified Lentz for the continued fraction of Q
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            # x^a e^-x / Gamma(a) = a * dpois(a, x)
            q = a * _dpois(a, x) * h
            return 1.0 - q, q
    return math.nan, math.nan


@njit(cache=True)
def _gamma_p_vec(a, x):
    out = np.empty(x.size)
    for i in range(x.size):
        out[i] = _gamma_pq(a, x[i])[0]
    return out


@njit(cache=True)
def _gamma_q_vec(a, x):
    out = np.empty(x.size)
    for i in range(x.size):
        out[i] = _gamma_pq(a, x[i])[1]
    return out


_ANCHOR = 16


@njit(cache=True)
def _ncx2_cdf_kernel(half_dof, lam, x):
    """Poisson mixture of central chi-square CDFs, x = y/2, lam = delta/2.

    Summation starts at the Poisson mode k0 = floor(lam) and walks outward.
    Neighbouring central CDFs follow from P(a+1, x) = P(a, x) - t(a) with
    t(a) = x^a e^-x / Gamma(a+1).  Weights and t are Poisson masses, stepped
    by their ratio recurrences and re-evaluated directly every 16 terms so
    rounding cannot build up along long walks.
    """
    if x <= 0.0:
        return 0.0
    k0 = int(math.floor(lam))
    a0 = half_dof + k0
    w0 = _dpois(float(k0), lam)
    p0 = _gamma_pq(a0, x)[0]
    if p0 != p0:
        return math.nan
    total = w0 * p0
    if lam > 0.0:
        # upward: k > k0
        p = p0
        a = a0
        k = k0
        w = w0
        t = _dpois(a, x)
        while True:
            p -= t
            if p < 0.0:
                p = 0.0
            a += 1.0
            k += 1
            if (k - k0) % _ANCHOR == 0:
                w = _dpois(float(k), lam)
                t = _dpois(a, x)
            else:
                w *= lam / k
                t *= x / a
            term = w * p
            total += term
            r = lam / (k + 1.0)
            if r < 1.0:
                # remaining terms: P decreases in k, weights decay at rate <= r
                bound = p * w * r / (1.0 - r)
                if term <= 1e-16 * total and bound <= 1e-14 * total:
                    break
            if k - k0 > _MAX_ITER:
                return math.nan
        # downward: k < k0
        p = p0
        a = a0
        k = k0
        w = w0
        t = _dpois(a0 - 1.0, x)
        while k > 0:
            k -= 1
            a -= 1.0
            p += t
            if p > 1.0:
                p = 1.0
            if (k0 - k) % _ANCHOR == 0:
                w = _dpois(float(k), lam)
                t = _dpois(a - 1.0, x)
            else:
                w *= (k + 1.0) / lam
                t *= a / x
            term = w * p
            total += term
            r = k / lam
            # P <= 1 and weights decay at rate <= r going down
            bound = w * r / (1.0 - r)
            if term <= 1e-16 * total and bound <= 1e-14 * total:
                break
    return total


@njit(cache=True)
def _ncx2_pdf_kernel(half_dof, lam, x):
    """Density of the mixture at y = 2x (includes the 1/2 Jacobian).

    Central density with 2a dof at y is 0.5 * dpois(a - 1, x).
    """
    if x < 0.0:
        return 0.0
    if x == 0.0:
        if half_dof == 1.0:
            return 0.5 * math.exp(-lam)
        return 0.0
    k0 = int(math.floor(lam))
    a0 = half_dof + k0
    w0 = _dpois(float(k0), lam)
    d0 = _dpois(a0 - 1.0, x)
    total = w0 * 0.5 * d0
    if lam > 0.0:
        k = k0
        w = w0
        d = d0
        while True:
            k += 1
            if (k - k0) % _ANCHOR == 0:
                w = _dpois(float(k), lam)
                d = _dpois(half_dof + k - 1.0, x)
            else:
                w *= lam / k
                d *= x / (half_dof + k - 1.0)
            term = w * 0.5 * d
            total += term
            r = lam / (k + 1.0)
            if r < 1.0:
                # central densities with dof >= 2 never exceed 1/2
                bound = 0.5 * w * r / (1.0 - r)
                if term <= 1e-16 * total and bound <= 1e-14 * total:
                    break
            if k - k0 > _MAX_ITER:
                return math.nan
        k = k0
        w = w0
        d = d0
        while k > 0:
            k -= 1
            if (k0 - k) % _ANCHOR == 0:
                w = _dpois(float(k), lam)
                d = _dpois(half_dof + k - 1.0, x)
            else:
                w *= (k + 1.0) / lam
                d *= (half_dof + k) / x
            term = w * 0.5 * d
            total += term
            r = k / lam
            bound = 0.5 * w * r / (1.0 - r)
            if term <= 1e-16 * total and bound <= 1e-14 * total:
                break
    return total


@njit(cache=True)
def _bessel_i0e(z):
    """Exponentially scaled modified Bessel function e^-z I0(z), z >= 0."""
    if z < 30.0:
        # power series sum (z^2/4)^k / (k!)^2, all terms positive
        q = 0.25 * z * z
        term = 1.0
        total = 1.0
        k = 0.0
        while term > 1e-17 * total:
            k += 1.0
            term *= q / (k * k)
            total += term
        return total * math.exp(-z)
    # asymptotic series; its smallest term is ~exp(-2z) < 1e-26 here
    term = 1.0
    total = 1.0
    k = 0.0
    while abs(term) > 1e-17 * total:
        k += 1.0
        term *= (2.0 * k - 1.0) ** 2 / (8.0 * k * z)
        total += term
    return total / math.sqrt(2.0 * math.pi * z)


@njit(cache=True)
def _ncx2_pdf_dof2(delta, y):
    """nc-chi-square density with 2 dof: 0.5 exp(-(y + delta)/2) I0(sqrt(delta y))."""
    if y < 0.0:
        return 0.0
    s = math.sqrt(y) - math.sqrt(delta)
    return 0.5 * math.exp(-0.5 * s * s) * _bessel_i0e(math.sqrt(delta * y))


@njit(cache=True)
def _ncx2_cdf_vec(half_dof, lam, x):
    out = np.empty(x.size)
    for i in range(x.size):
        out[i] = _ncx2_cdf_kernel(half_dof, lam[i], x[i])
    return out


@njit(cache=True)
def _ncx2_pdf_vec(half_dof, lam, x):
    out = np.empty(x.size)
    for i in range(x.size):
        out[i] = _ncx2_pdf_kernel(half_dof, lam[i], x[i])
    return out


# ---------------------------------------------------------------------------
# probability wrappers
# ---------------------------------------------------------------------------


def clamp_probability(value):
    """Clip to [0, 1]; raise if the excursion is larger than rounding."""
    arr = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(arr)):
        raise ConvergenceError("non-finite probability", {"value": value})
    if np.any(arr < -CLAMP_SLACK) or np.any(arr > 1.0 + CLAMP_SLACK):
        raise ConvergenceError(
            "probability outside [0, 1] beyond rounding",
            {"min": float(arr.min()), "max": float(arr.max())},
        )
    out = np.clip(arr, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def _check_int(name, value, minimum):
    if isinstance(value, (bool, np.bool_)) or int(value) != value:
        raise DomainError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    return value


def _as_nonneg(name, value):
    arr = np.asarray(value, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} must be nonnegative")
    return arr


def _even_dof(dof):
    dof = _check_int("dof", dof, 2)
    if dof % 2:
        raise DomainError(f"only even degrees of freedom are supported, got {dof}")
    return dof


def reg_inc_gamma(m, x):
    """Regularized lower incomplete gamma P(m, x) for integer m >= 1.

    Series for x < m + 1, continued fraction otherwise.  Accepts scalar or
    array ``x``.
    """
    m = _check_int("m", m, 1)
    x = _as_nonneg("x", x)
    out = _gamma_p_vec(float(m), np.atleast_1d(x).ravel()).reshape(x.shape)
    return clamp_probability(out)


def reg_inc_gamma_complement(m, x):
    """Upper regularized incomplete gamma Q(m, x) = 1 - P(m, x).

    Accurate when Q is tiny (large x), where ``1 - reg_inc_gamma`` is not.
    """
    m = _check_int("m", m, 1)
    x = _as_nonneg("x", x)
    out = _gamma_q_vec(float(m), np.atleast_1d(x).ravel()).reshape(x.shape)
    return clamp_probability(out)


def chi2_cdf(dof, y):
    """Central chi-square CDF for even ``dof``."""
    dof = _even_dof(dof)
    return reg_inc_gamma(dof // 2, np.asarray(y, dtype=float) / 2.0)


def chi2_pdf(dof, y):
    """Central chi-square density for even ``dof``."""
    return ncx2_pdf(dof, 0.0, y)


def _ncx2_args(dof, delta, y):
    dof = _even_dof(dof)
    delta = _as_nonneg("delta", delta)
    y = _as_nonneg("y", y)
    d, yy = np.broadcast_arrays(delta, y)
    shape = d.shape
    lam = np.ascontiguousarray(d, dtype=float).ravel() / 2.0
    x = np.ascontiguousarray(yy, dtype=float).ravel() / 2.0
    return dof / 2.0, lam, x, shape


def ncx2_cdf(dof, delta, y):
    """Non-central chi-square CDF, even ``dof``, broadcasting over delta and y.

    Poisson-weighted sum of central chi-square CDFs; the sum is started at
    the Poisson mode and truncated once both the current term and the
    analytic remainder bound are negligible.
    """
    half, lam, x, shape = _ncx2_args(dof, delta, y)
    out = _ncx2_cdf_vec(half, lam, x).reshape(shape)
    return clamp_probability(out)


def ncx2_pdf(dof, delta, y):
    """Non-central chi-square density, even ``dof``."""
    half, lam, x, shape = _ncx2_args(dof, delta, y)
    out = _ncx2_pdf_vec(half, lam, x).reshape(shape)
    if np.any(~np.isfinite(out)):
        raise ConvergenceError("non-finite density", {"dof": dof})
    return float(out) if out.ndim == 0 else out


def ncx2_cdf_scalar(half_dof: float, delta: float, y: float) -> float:
    """Unchecked scalar fast path used inside solver loops."""
    v = _ncx2_cdf_kernel(half_dof, 0.5 * delta, 0.5 * y)
    if v > 1.0:
        return 1.0
    return v


def ncx2_pdf_scalar(half_dof: float, delta: float, y: float) -> float:
    """Unchecked scalar density fast path."""
    return _ncx2_pdf_kernel(half_dof, 0.5 * delta, 0.5 * y)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    alpha: float = 0.0

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape:
            raise DomainError("nodes and weights differ in length")
        if np.any(self.weights <= 0):
            raise DomainError("quadrature weights must be positive")
        if np.any(np.diff(self.nodes) <= 0):
            raise DomainError("quadrature nodes must be strictly increasing")

    def __len__(self):
        return self.nodes.size

    def apply(self, values) -> float:
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=64)
def laguerre_rule(order: int, alpha: float) -> QuadratureRule:
    """Gauss rule for the normalized Gamma(alpha+1, 1) density on [0, inf).

    Golub-Welsch on the generalized-Laguerre Jacobi matrix.  Nodes whose
    weight underflows to zero are dropped.
    """
    order = _check_int("order", order, 1)
    i = np.arange(order, dtype=float)
    diag = 2.0 * i + alpha + 1.0
    off = np.sqrt(i[1:] * (i[1:] + alpha))
    nodes, vecs = eigh_tridiagonal(diag, off)
    weights = vecs[0, :] ** 2
    keep = weights > 0
    return QuadratureRule(nodes[keep], weights[keep], "gen-laguerre", float(alpha))


@lru_cache(maxsize=8)
def _legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _eval(f, x, vectorized):
    if vectorized:
        v = np.asarray(f(x), dtype=float)
        if v.shape != x.shape:
            v = np.broadcast_to(v, x.shape)
    else:
        v = np.array([f(float(t)) for t in x], dtype=float)
    bad = ~np.isfinite(v)
    if np.any(bad):
        at = float(x[np.argmax(bad)])
        raise EvaluationError(f"integrand not finite at {at!r}", abscissa=at)
    return v


def integrate_finite(
    f: Callable,
    a: float,
    b: float,
    tol: float = 1e-10,
    *,
    vectorized: bool = False,
    order: int = 10,
    max_panels: int = 4000,
) -> float:
    """Adaptive Gauss-Legendre integral of ``f`` over [a, b].

    Each panel is accepted when its one-panel estimate and the sum over
    its two halves agree within the panel's share of ``tol``.
    """
    if not a <= b:
        raise DomainError(f"need a <= b, got [{a}, {b}]")
    if a == b:
        return 0.0
    xg, wg = _legendre(order)
    length = b - a

    def panel(lo, hi):
        half = 0.5 * (hi - lo)
        x = lo + half * (xg + 1.0)
        return half * float(np.dot(wg, _eval(f, x, vectorized)))

    total = 0.0
    stack = [(a, b, panel(a, b))]
    panels = 0
    while stack:
        lo, hi, whole = stack.pop()
        mid = 0.5 * (lo + hi)
        left = panel(lo, mid)
        right = panel(mid, hi)
        panels += 1
        if abs(left + right - whole) <= tol * (hi - lo) / length or mid in (lo, hi):
            total += left + right
            continue
        if panels > max_panels:
            raise ConvergenceError(
                "adaptive quadrature exceeded its panel budget",
                {"a": a, "b": b, "tol": tol, "where": (lo, hi)},
            )
        stack.append((lo, mid, left))
        stack.append((mid, hi, right))
    return total


def gamma_density(M: int, gamma):
    """Gamma(M, 1) density gamma^(M-1) e^-gamma / (M-1)!."""
    g = np.asarray(gamma, dtype=float)
    with np.errstate(divide="ignore"):
        logd = (M - 1) * np.log(g) - g - math.lgamma(M)
    if M == 1:
        logd = -g
    return np.exp(logd)


def gamma_expectation(
    M: int,
    g: Callable,
    tol: float = 1e-10,
    *,
    vectorized: bool = False,
    breakpoints: Sequence[float] = (),
    lower: float = 0.0,
    atol: float = 1e-15,
    min_order: int = 32,
    max_order: int = 512,
) -> float:
    """E[g(gamma)] for gamma ~ Gamma(M, 1).

    The default path is a generalized-Laguerre rule whose order doubles from
    ``min_order`` until two successive orders agree to ``tol`` (relative,
    with absolute floor ``atol``).

    ``breakpoints`` split [lower, inf) into finite pieces, integrated
    adaptively, plus a Laguerre-ruled tail; use them when ``g`` has a jump
    or a transition too sharp for a global polynomial rule.  The integrand
    is treated as zero below ``lower``.
    """
    M = _check_int("M", M, 1)
    cuts = sorted({float(b) for b in breakpoints if b > lower})
    start = cuts[-1] if cuts else float(lower)

    def tail(order):
        if start == 0.0:
            rule = laguerre_rule(order, M - 1.0)
            return rule.apply(_eval(g, rule.nodes, vectorized)), rule
        # shift to [start, inf): density(start+t) = e^-t * poly(t) * const
        rule = laguerre_rule(order, 0.0)
        x = start + rule.nodes
        logc = (M - 1) * np.log(x) - start - math.lgamma(M)
        return float(np.dot(rule.weights * np.exp(logc), _eval(g, x, vectorized))), rule

    prev, _ = tail(min_order)
    order = min_order
    history = [prev]
    while True:
        order *= 2
        if order > max_order:
            raise ConvergenceError(
                "Laguerre rule did not converge",
                {"M": M, "tol": tol, "history": history, "start": start},
            )
        cur, _ = tail(order)
        history.append(cur)
        if abs(cur - prev) <= tol * abs(cur) + atol:
            break
        prev = cur
    total = cur

    if cuts:
        edges = [float(lower)] + cuts
        scale = max(abs(total), atol)
        for lo, hi in zip(edges[:-1], edges[1:]):
            mass = float(reg_inc_gamma(M, hi) - reg_inc_gamma(M, lo))
            if vectorized:
                h = lambda t: gamma_density(M, t) * np.asarray(g(t), dtype=float)
            else:
                h = lambda t: float(gamma_density(M, t)) * g(t)
            piece_tol = max(atol, tol * max(scale, mass) * 0.1)
            piece = integrate_finite(h, lo, hi, piece_tol, vectorized=vectorized)
            total += piece
            scale = max(scale, abs(total))
    return total


# ---------------------------------------------------------------------------
# scalar root finding / minimization
# ---------------------------------------------------------------------------


def find_root(f: Callable, lo: float, hi: float, tol: float = 1e-12, maxiter: int = 500) -> float:
    """Bracketing root finder: regula falsi steps with forced bisection.

    Stops when the bracket is narrower than ``tol``.
    """
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = f(lo), f(hi)
    if not (np.isfinite(flo) and np.isfinite(fhi)):
        raise EvaluationError("non-finite value at bracket end", abscissa=lo if not np.isfinite(flo) else hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise BracketError(f"no sign change on [{lo}, {hi}]", lo, hi, flo, fhi)
    bisect = False
    for _ in range(maxiter):
        width = hi - lo
        if width <= tol:
            break
        x = hi - fhi * width / (fhi - flo)
        if bisect or not (lo < x < hi):
            x = 0.5 * (lo + hi)
        fx = f(x)
        if not np.isfinite(fx):
            raise EvaluationError(f"non-finite value at {x!r}", abscissa=x)
        if fx == 0:
            return x
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        bisect = (hi - lo) > 0.5 * width
    else:
        raise ConvergenceError("find_root exceeded maxiter", {"lo": lo, "hi": hi})
    return lo if abs(flo) <= abs(fhi) else hi


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def minimize_scalar(f: Callable, lo: float, hi: float, tol: float = 1e-8, maxiter: int = 500):
    """Golden-section search on [lo, hi].

    Returns ``(argmin, min)`` of the best point sampled, endpoints included,
    so boundary minima and non-unimodal objectives still give a sane answer.
    """
    if not lo < hi:
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")

    def ev(x):
        v = f(x)
        if not np.isfinite(v):
            raise EvaluationError(f"objective not finite at {x!r}", abscissa=x)
        return v

    best_x, best_f = lo, ev(lo)
    fh = ev(hi)
    if fh < best_f:
        best_x, best_f = hi, fh
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = ev(c), ev(d)
    for _ in range(maxiter):
        if b - a <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = ev(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = ev(d)
    for x, v in ((c, fc), (d, fd)):
        if v < best_f:
            best_x, best_f = x, v
    return best_x, best_f
