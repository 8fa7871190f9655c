"""Tanh-sinh (double exponential) quadrature for endpoint-singular integrands.

Integrands are handed the distances to both endpoints computed from the
complementary node variable, so factors like ``(t - a)**alpha`` keep full
relative accuracy arbitrarily close to ``a``.  The log-space entry points
take ``log|integrand|`` and never form underflowing intermediates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .errors import QuadratureError

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    level: int


def tau_max_for(alpha: float) -> float:
    """Half-width in the tanh-sinh variable so that endpoint behaviour ``d**(alpha-1)``
    is resolved: contributions beyond it are below ``exp(-100)``."""
    alpha = max(float(alpha), 1e-6)
    return max(3.0, math.log(200.0 / (math.pi * alpha)))


@lru_cache(maxsize=64)
def nodes(level: int, tau_max: float):
    """Nodes on [-1, 1] as ``(x, log(1+x), log(1-x), log w)`` arrays."""
    h = 2.0 ** -level
    m = int(math.ceil(tau_max / h))
    tau = np.arange(-m, m + 1) * h
    u = 0.5 * math.pi * np.sinh(tau)
    log1p_x = LOG2 - np.logaddexp(0.0, -2.0 * u)
    log1m_x = LOG2 - np.logaddexp(0.0, 2.0 * u)
    au = np.abs(u)
    log_cosh_u = au + np.log1p(np.exp(-2.0 * au)) - LOG2
    log_cosh_tau = np.abs(tau) + np.log1p(np.exp(-2.0 * np.abs(tau))) - LOG2
    log_w = math.log(0.5 * math.pi * h) + log_cosh_tau - 2.0 * log_cosh_u
    x = np.tanh(u)
    for arr in (x, log1p_x, log1m_x, log_w):
        arr.flags.writeable = False
    return x, log1p_x, log1m_x, log_w


def _adaptive(estimate, tol: float, level: int | None, min_level: int, max_level: int) -> QuadResult:
    if level is not None:
        v = estimate(level)
        prev = estimate(level - 1) if level > 1 else v
        return QuadResult(v, abs(v - prev), level)
    prev = estimate(min_level - 1)
    for lev in range(min_level, max_level + 1):
        v = estimate(lev)
        err = abs(v - prev)
        if err <= tol * max(abs(v), 1e-300):
            return QuadResult(v, err, lev)
        prev = v
    raise QuadratureError(f"tanh-sinh did not reach relative tolerance {tol} by level {max_level}")


def integrate_log(log_f, a: float, b: float, *, alpha: float = 1.0, tol: float = 1e-10,
                  level: int | None = None, min_level: int = 3, max_level: int = 14) -> QuadResult:
    """Integrate a positive function on [a, b] given ``log_f(t, log(t-a), log(b-t))``.

    ``alpha`` is the smallest endpoint exponent plus one (integrand behaves
    like ``d**(alpha-1)``) and sets the truncation of the node range.
    """
    if not b > a:
        raise QuadratureError("integration interval must have b > a")
    half = 0.5 * (b - a)
    log_half = math.log(half)
    tmax = tau_max_for(alpha)

    def estimate(lev):
        x, lp, lm, lw = nodes(lev, tmax)
        t = 0.5 * (a + b) + half * x
        vals = lw + log_f(t, lp + log_half, lm + log_half)
        return float(np.exp(logsumexp(vals) + log_half))

    return _adaptive(estimate, tol, level, min_level, max_level)


def integrate(f, a: float, b: float, *, tol: float = 1e-10, level: int | None = None,
              min_level: int = 3, max_level: int = 14, tau_max: float = 4.5) -> QuadResult:
    """Integrate ``f(t, t - a, b - t)`` over [a, b] (real or complex valued)."""
    if not b > a:
        raise QuadratureError("integration interval must have b > a")
    half = 0.5 * (b - a)

    def estimate(lev):
        x, lp, lm, lw = nodes(lev, tau_max)
        keep = lw > -700.0
        t = 0.5 * (a + b) + half * x[keep]
        da = half * np.exp(lp[keep])
        db = half * np.exp(lm[keep])
        ok = (da > 0) & (db > 0)
        vals = f(t[ok], da[ok], db[ok])
        return complex(np.sum(np.exp(lw[keep][ok]) * vals) * half) if np.iscomplexobj(vals) \
            else float(np.sum(np.exp(lw[keep][ok]) * vals) * half)

    return _adaptive(estimate, tol, level, min_level, max_level)


def integrate_simplex_log(log_f, k: int, *, alpha: float = 1.0, tol: float = 1e-8,
                          level: int | None = None, min_level: int = 2, max_level: int = 7) -> QuadResult:
    """Integrate a positive function over the standard k-simplex.

    Uses collapsed (Duffy) coordinates ``u in [0,1]^k`` with barycentric
    coordinates ``lam_0 = 1-u_1, lam_1 = u_1(1-u_2), ..., lam_k = u_1...u_k``
    and a tensor tanh-sinh rule.  ``log_f`` receives an array of shape
    ``(k+1, N)`` with ``log lam_v`` and returns ``log|f|`` (shape ``(N,)``).
    The returned value is for unit-volume-normalised coordinates, i.e. the
    Jacobian ``prod u_i^(k-i)`` is included but not the simplex volume factor.
    """
    tmax = tau_max_for(alpha)

    def estimate(lev):
        x, lp, lm, lw = nodes(lev, tmax)
        keep = lw > -150.0
        log_u, log_1mu, w = lp[keep] - LOG2, lm[keep] - LOG2, lw[keep] - LOG2
        grids_u = np.meshgrid(*([log_u] * k), indexing="ij")
        grids_1mu = np.meshgrid(*([log_1mu] * k), indexing="ij")
        grids_w = np.meshgrid(*([w] * k), indexing="ij")
        lu = [g.ravel() for g in grids_u]
        l1mu = [g.ravel() for g in grids_1mu]
        lw_tot = sum(g.ravel() for g in grids_w)
        lam = np.empty((k + 1, lu[0].size))
        acc = np.zeros(lu[0].size)
        for v in range(k + 1):
            if v < k:
                lam[v] = acc + l1mu[v]
                acc = acc + lu[v]
            else:
                lam[v] = acc
        jac = sum((k - 1 - i) * lu[i] for i in range(k))
        return float(np.exp(logsumexp(lw_tot + jac + log_f(lam))))

    return _adaptive(estimate, tol, level, min_level, max_level)
