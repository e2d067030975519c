"""Radial kernels: Riesz, Bessel, and the resolvent densities of stable processes.

Normalization conventions
-------------------------
Bessel kernels follow the un-normalized inverse Fourier transform

    γ_a(x) = ∫_{R^d} e^{i<x,ξ>} (1 + |ξ|²)^{-a/2} dξ,

so that ``γ_2(0) = π`` in one dimension.  With this convention the
semigroup identity reads ``γ_{2a} = (2π)^{-d} γ_a * γ_a``.

Resolvent densities are genuine probability-scale densities: the 1-resolvent
of the isotropic stable process with characteristic exponent
``2^{-α/2}|ξ|^α`` has density ``u(x) = (2π)^{-d} ∫ e^{i<x,ξ>} (1 + 2^{-α/2}|ξ|^α)^{-1} dξ``
and integrates to one.  The additive (two-parameter) density is the exact
self-convolution ``u * u``.

For ``α < 2`` both densities are evaluated through subordination: the process
is Brownian motion run on an α/2-stable clock, and the clock's resolvent
measures are completely monotone with an explicit spectral density.  This
turns each density into a non-oscillatory mixture of Brownian resolvent
densities, which are modified Bessel functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from ._radial import _quad, radial_fourier_inverse, sphere_area
from .errors import NumericEvaluationError

KINDS = ("riesz", "bessel", "stable_resolvent", "additive_resolvent")


def riesz_kernel(s, r):
    """Riesz kernel ``r**-s``; order zero is the truncated logarithm ``max(-ln r, 0)``."""
    if s < 0:
        raise ValueError(f"Riesz order must be non-negative, got {s}")
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        if s == 0:
            out = np.maximum(-np.log(r), 0.0)
        else:
            out = r ** (-float(s))
    return out if out.ndim else float(out)


def _check_bessel(a, d):
    if not a > 0:
        raise ValueError(f"Bessel order must be positive, got {a}")
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be an integer >= 1, got {d}")


def bessel_kernel(a, d, r, method="closed"):
    """Bessel kernel γ_a in dimension d at radius r > 0.

    ``method="closed"`` uses
    ``γ_a(r) = (2π)^{d/2} 2^{1-a/2} / Γ(a/2) · r^{(a-d)/2} K_{(d-a)/2}(r)``;
    ``method="quadrature"`` inverts the Fourier symbol numerically (scalar r,
    and only where the Hankel integral converges, ``a > (d-1)/2``).
    """
    _check_bessel(a, d)
    if method == "quadrature":
        return radial_fourier_inverse(lambda k: (1.0 + k * k) ** (-a / 2.0), d, float(r))
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("bessel_kernel needs r > 0; use bessel_kernel_at_zero for the origin")
    nu = (d - a) / 2.0
    logc = 0.5 * d * math.log(2 * math.pi) + (1 - a / 2.0) * math.log(2.0) - special.gammaln(a / 2.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        kve = special.kve(nu, r)
        out = np.exp(logc + ((a - d) / 2.0) * np.log(r) + np.log(kve) - r)
    bad = ~np.isfinite(out) | ((out <= 0) & (r < 700.0))
    if np.any(bad):
        raise NumericEvaluationError(f"Bessel kernel evaluation failed for a={a}, d={d}")
    return out if out.ndim else float(out)


def bessel_kernel_at_zero(a, d):
    """Finite value γ_a(0) = π^{d/2} Γ((a-d)/2) / Γ(a/2), defined only for a > d."""
    _check_bessel(a, d)
    if not a > d:
        raise ValueError(f"γ_a(0) is infinite unless a > d (a={a}, d={d})")
    return math.pi ** (d / 2.0) * math.gamma((a - d) / 2.0) / math.gamma(a / 2.0)


def _brownian_resolvent(lam, r, d):
    """Density of ∫_0^∞ e^{-λt} p_t dt for Brownian motion with E|B_t|² = d t."""
    lam = np.asarray(lam, dtype=float)
    z = r * np.sqrt(2.0 * lam)
    nu = d / 2.0 - 1.0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        log_pref = (1.0 - d / 2.0) * (np.log(r) - 0.5 * np.log(2.0 * lam))
        val = 2.0 * (2 * math.pi) ** (-d / 2.0) * np.exp(log_pref + np.log(special.kve(nu, z)) - z)
    return np.where(np.isfinite(val), val, 0.0)


def _clock_spectral_density(x, beta, power):
    """Spectral density of the inverse Laplace transform of (1 + λ^β)^{-power}."""
    z = 1.0 + x ** beta * np.exp(1j * math.pi * beta)
    return -np.imag(z ** (-power)) / math.pi


def _subordinated_resolvent(alpha, d, r, power):
    beta = alpha / 2.0

    def integrand(y):
        lam = math.exp(y)
        return float(_clock_spectral_density(lam, beta, power) * _brownian_resolvent(lam, r, d) * lam)

    # beyond λ ~ (40/r)² the Brownian factor is below e^{-40}
    top = 2.0 * math.log(40.0 / r)
    pieces = [(-80.0, -20.0), (-20.0, 0.0), (0.0, max(top, 1.0))]
    total = 0.0
    for a, b in pieces:
        try:
            val, _ = _quad(integrand, a, b, epsabs=1e-14, epsrel=1e-9, limit=400)
        except NumericEvaluationError as exc:
            raise NumericEvaluationError(
                f"subordinated resolvent quadrature failed (α={alpha}, d={d}, r={r:g}): {exc}") from exc
        total += val
    if not np.isfinite(total) or total <= 0:
        raise NumericEvaluationError(f"non-positive resolvent value (α={alpha}, d={d}, r={r:g})")
    return total


def stable_resolvent_density(alpha, d, r, method="spectral"):
    """1-resolvent density u₁^{(α)} of the isotropic α-stable process in R^d."""
    _check_alpha(alpha)
    r = float(r)
    if r <= 0:
        raise ValueError("r must be positive")
    if method == "quadrature":
        sym = lambda k: 1.0 / (1.0 + 2.0 ** (-alpha / 2.0) * k ** alpha)
        return radial_fourier_inverse(sym, d, r) / (2 * math.pi) ** d
    if alpha == 2:
        return float(_brownian_resolvent(1.0, r, d))
    return _subordinated_resolvent(alpha, d, r, 1)


def additive_resolvent_density(alpha, d, r):
    """Density u_𝟏^{(α)} = u₁^{(α)} * u₁^{(α)} of the two-parameter additive process.

    Computed as ∫_0^∞ t e^{-t} p_t dt (the Fourier symbol (1 + 2^{-α/2}|ξ|^α)^{-2}).
    """
    _check_alpha(alpha)
    r = float(r)
    if r <= 0:
        raise ValueError("r must be positive")
    if alpha == 2:
        nu = d / 2.0 - 2.0
        z = math.sqrt(2.0) * r
        val = 2.0 * (2 * math.pi) ** (-d / 2.0) * (r / math.sqrt(2.0)) ** (2.0 - d / 2.0) \
            * special.kve(nu, z) * math.exp(-z)
        if not np.isfinite(val):
            raise NumericEvaluationError(f"additive resolvent overflow at r={r:g}")
        return float(val)
    return _subordinated_resolvent(alpha, d, r, 2)


def _check_alpha(alpha):
    if not 0 < alpha <= 2:
        raise ValueError(f"stability index must lie in (0, 2], got {alpha}")


@dataclass(frozen=True)
class KernelSpec:
    """A radial kernel: kind, order (s, a or α) and ambient dimension."""

    kind: str
    order: float
    dim: int
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError("dimension must be an integer >= 1")
        if self.kind == "riesz" and self.order < 0:
            raise ValueError("Riesz order must be >= 0")
        if self.kind == "bessel" and not self.order > 0:
            raise ValueError("Bessel order must be > 0")
        if self.kind in ("stable_resolvent", "additive_resolvent"):
            _check_alpha(self.order)

    @classmethod
    def riesz(cls, s, dim):
        return cls("riesz", float(s), int(dim))

    @classmethod
    def bessel(cls, a, dim):
        return cls("bessel", float(a), int(dim))

    @classmethod
    def stable_resolvent(cls, alpha, dim):
        return cls("stable_resolvent", float(alpha), int(dim))

    @classmethod
    def additive_resolvent(cls, alpha, dim):
        return cls("additive_resolvent", float(alpha), int(dim))

    @property
    def label(self):
        return f"{self.kind}(order={self.order:g}, d={self.dim})"

    def at_zero(self) -> float:
        """Kernel value at the origin; ``inf`` for kernels unbounded at 0."""
        if self.kind == "bessel":
            return bessel_kernel_at_zero(self.order, self.dim) if self.order > self.dim else math.inf
        if self.kind == "stable_resolvent" and self.order > self.dim:
            return self._radial_scalar(0.0)
        if self.kind == "additive_resolvent" and 2 * self.order > self.dim:
            return self._radial_scalar(0.0)
        return math.inf

    def _radial_scalar(self, r):
        if r in self._cache:
            return self._cache[r]
        if r == 0.0:
            # bounded resolvents: symbol is integrable, evaluate ∫ symbol dξ / (2π)^d
            a = self.order
            p = 1 if self.kind == "stable_resolvent" else 2
            c = 2.0 ** (-a / 2.0)
            f = lambda k: k ** (self.dim - 1) / (1.0 + c * k ** a) ** p
            val = integrate.quad(f, 0, np.inf, limit=400)[0]
            val *= sphere_area(self.dim) / (2 * math.pi) ** self.dim
        elif self.kind == "stable_resolvent":
            val = stable_resolvent_density(self.order, self.dim, r)
        else:
            val = additive_resolvent_density(self.order, self.dim, r)
        self._cache[r] = val
        return val

    def __call__(self, r):
        """Evaluate the radial profile at r > 0 (array or scalar)."""
        if self.kind == "riesz":
            return riesz_kernel(self.order, r)
        if self.kind == "bessel":
            return bessel_kernel(self.order, self.dim, r)
        arr = np.asarray(r, dtype=float)
        if arr.ndim == 0:
            return self._radial_scalar(float(arr))
        uniq, inv = np.unique(arr, return_inverse=True)
        vals = np.array([self._radial_scalar(float(u)) for u in uniq])
        return vals[inv].reshape(arr.shape)

    def singularity(self):
        """Riesz-equivalent singularity order at 0: ``(order, is_log)``.

        ``k(r) ≍ r^{-order}`` (or ``-ln r`` when ``is_log``) as r -> 0; order 0
        without log means bounded.
        """
        if self.kind == "riesz":
            return (self.order, self.order == 0)
        a = self.order if self.kind in ("bessel", "stable_resolvent") else 2 * self.order
        if a < self.dim:
            return (self.dim - a, False)
        return (0.0, a == self.dim)


@lru_cache(maxsize=None)
def kernel_profile_table(kind, order, dim, rmin, rmax, n):
    """Log-spaced (r, value) table of a kernel profile, cached per arguments."""
    spec = KernelSpec(kind, float(order), int(dim))
    r = np.geomspace(rmin, rmax, n)
    return r, np.asarray(spec(r), dtype=float)
