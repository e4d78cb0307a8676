"""Small numeric building blocks shared across the package.

Everything here is deterministic: no global RNG state, no caches that
depend on call order.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import betainc, gammaln

# Binomial sums are evaluated as exact log-space sums; beyond this size the
# caller should fall back to sampling instead of trusting a huge direct sum.
MAX_EXACT_N = 10_000

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi
_INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0  # 1/phi^2


def golden_section_max(f, lo: float, hi: float, rel_tol: float = 1e-10,
                       max_iter: int = 200) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on [lo, hi]; returns (argmax, max).

    Interval shrinks by 1/phi per step, so convergence is geometric and the
    iteration cap is only a safety net.
    """
    if not hi > lo:
        raise ValueError("golden_section_max needs hi > lo")
    a, b = lo, hi
    h = b - a
    c = a + _INV_PHI_SQ * h
    d = a + _INV_PHI * h
    fc, fd = f(c), f(d)
    scale = max(abs(lo), abs(hi), 1.0)
    for _ in range(max_iter):
        if h <= rel_tol * scale:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + _INV_PHI_SQ * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + _INV_PHI * h
            fd = f(d)
    x = c if fc >= fd else d
    return x, f(x)


def bisect_root(f, lo: float, hi: float, abs_tol: float = 1e-10,
                max_iter: int = 200) -> float:
    """Root of a function that changes sign from <=0 at lo to >=0 at hi."""
    flo, fhi = f(lo), f(hi)
    if flo > 0 or fhi < 0:
        raise ValueError("bisect_root: no sign change on [lo, hi]")
    a, b = lo, hi
    for _ in range(max_iter):
        if b - a <= abs_tol:
            break
        m = 0.5 * (a + b)
        if f(m) <= 0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def binom_pmf(n: int, p: float) -> np.ndarray:
    """Exact-to-roundoff binomial pmf vector over y = 0..n, in log space."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > MAX_EXACT_N:
        raise ValueError(f"exact binomial sums are limited to n <= {MAX_EXACT_N}")
    if not 0.0 <= p <= 1.0:
        raise ValueError("success probability must lie in [0, 1]")
    y = np.arange(n + 1)
    if p == 0.0:
        out = np.zeros(n + 1)
        out[0] = 1.0
        return out
    if p == 1.0:
        out = np.zeros(n + 1)
        out[n] = 1.0
        return out
    logpmf = (gammaln(n + 1) - gammaln(y + 1) - gammaln(n - y + 1)
              + y * math.log(p) + (n - y) * math.log1p(-p))
    return np.exp(logpmf)


def order_stat_pdf_coef(t: int, n: int) -> float:
    """n!/((t-1)!(n-t)!): constant of the t-th smallest uniform order statistic."""
    return math.exp(gammaln(n + 1) - gammaln(t) - gammaln(n - t + 1))


def order_stat_cdf(t: int, n: int, x) -> float:
    """P[t-th smallest of n uniforms <= x] (regularized incomplete beta)."""
    return betainc(t, n - t + 1, x)
