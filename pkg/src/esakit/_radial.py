"""Radial Fourier inversion and radial convolution by adaptive quadrature.

Both routines work on radial profiles only: callables ``f(r)`` accepting
arrays of non-negative radii.  They are slow compared with the closed forms
in :mod:`esakit.kernels` and exist as independent cross-checks.
"""

from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np
from scipy import integrate, optimize, special

from .errors import NumericEvaluationError

Profile = Callable[[np.ndarray], np.ndarray]


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1} in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _quad(func, a, b, **kw):
    # IntegrationWarning means the tolerance was not met; callers decide.
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            return integrate.quad(func, a, b, **kw)
        except integrate.IntegrationWarning as exc:
            raise NumericEvaluationError(str(exc).strip()) from exc


def wynn_epsilon(partial_sums: np.ndarray) -> float:
    """Wynn's epsilon acceleration of a sequence of partial sums."""
    s = np.asarray(partial_sums, dtype=float)
    n = len(s)
    prev = np.zeros(n + 1)
    cur = s.copy()
    best = cur[-1]
    for k in range(1, n):
        nxt = np.empty(n - k)
        for i in range(n - k):
            diff = cur[i + 1] - cur[i]
            if diff == 0.0:
                # sequence already converged at this depth
                return float(cur[i + 1])
            nxt[i] = prev[i + 1] + 1.0 / diff
        prev, cur = cur, nxt
        if k % 2 == 0:
            best = cur[-1]
    return float(best)


def _bessel_zeros(nu: float, count: int) -> np.ndarray:
    """First ``count`` positive zeros of J_nu for real nu > -1."""
    zmax = (count + abs(nu) + 4) * math.pi
    grid = np.arange(0.05, zmax, 0.1)
    vals = special.jv(nu, grid)
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    zeros = [optimize.brentq(lambda z: special.jv(nu, z), grid[i], grid[i + 1], xtol=1e-14)
             for i in idx[:count]]
    return np.asarray(zeros)


def radial_fourier_inverse(symbol: Profile, d: int, r: float, *,
                           rtol: float = 1e-6, n_cycles: int = 60) -> float:
    """Evaluate ``∫_{R^d} e^{i<x,ξ>} symbol(|ξ|) dξ`` at ``|x| = r``.

    No ``(2π)^{-d}`` factor is applied.  The Hankel integral is split at the
    zeros of ``J_{d/2-1}`` and the alternating tail summed with Wynn's
    epsilon algorithm.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    nu = d / 2.0 - 1.0

    def integrand(z):
        return symbol(np.asarray(z / r)) * special.jv(nu, z) * z ** (d / 2.0)

    zeros = _bessel_zeros(nu, n_cycles)
    edges = np.concatenate([[0.0], zeros])
    pieces = np.empty(len(zeros))
    for i in range(len(zeros)):
        a, b = edges[i], edges[i + 1]
        pts = [r] if a < r < b else None
        pieces[i], _ = _quad(integrand, a, b, points=pts, epsabs=0.0, epsrel=1e-10, limit=200)
    partial = np.cumsum(pieces)
    full = wynn_epsilon(partial)
    check = wynn_epsilon(partial[:-6])
    scale = max(abs(full), np.abs(pieces).max() * 1e-12)
    if not np.isfinite(full) or abs(full - check) > rtol * scale:
        raise NumericEvaluationError(
            f"Hankel tail did not converge at r={r:g} (estimates {full:.6g} vs {check:.6g})")
    return float((2.0 * math.pi) ** (d / 2.0) * r ** (-d) * full)


def radial_convolution(f: Profile, g: Profile, d: int, r: float, *, rtol: float = 1e-7) -> float:
    """``(f * g)(x)`` at ``|x| = r`` for radial profiles ``f`` and ``g`` on R^d.

    For d >= 2 the inner integral runs over the distance ``σ = |x - y|`` with
    the algebraic endpoint weight of the triangle inequality, so integrable
    singularities of ``g`` at 0 and of ``f`` at 0 stay at interval endpoints.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    opts = dict(epsabs=0.0, epsrel=rtol, limit=400)

    if d == 1:
        def h(y):
            return float(f(np.abs(np.asarray(y))) * g(np.abs(np.asarray(r - y))))
        total = 0.0
        for a, b in ((-np.inf, -r), (-r, 0.0), (0.0, r), (r, 2 * r), (2 * r, np.inf)):
            total += _quad(h, a, b, **opts)[0]
        return total

    omega = sphere_area(d - 1)
    p = (d - 3) / 2.0

    def shell(rho):
        lo, hi = abs(r - rho), r + rho

        def inner(sig):
            return float(g(np.asarray(sig))) * sig * ((sig + lo) * (sig + hi)) ** p

        val, _ = _quad(inner, lo, hi, weight="alg", wvar=(p, p), **opts)
        return val * omega * (2 * r * rho) ** (-2 * p) / (r * rho)

    def outer(rho):
        return float(f(np.asarray(rho))) * rho ** (d - 1) * shell(rho)

    total = 0.0
    for a, b in ((0.0, r / 2), (r / 2, r), (r, 2 * r), (2 * r, 4 * r + 1.0), (4 * r + 1.0, np.inf)):
        total += _quad(outer, a, b, **opts)[0]
    return total
