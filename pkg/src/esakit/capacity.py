"""Discrete energies, equilibrium measures and zero/positive capacity decisions.

A compact set is replaced by a sequence of nets.  On each net the
probability weights minimizing the kernel energy are found on the simplex,
and the resulting minimal energies are watched under refinement: bounded
(geometrically converging) energies mean positive capacity, energies that
keep growing mean capacity zero.

Diagonal rules
--------------
``off_diagonal``
    only pairs ``i != j``.
``atomic``
    the diagonal carries ``w_i² k(0)``; infinite for kernels unbounded at 0.
    This is the exact energy of the discrete measure.
``regularized``
    the diagonal carries ``w_i² k(ρ)`` with ``ρ`` the cell radius of the net,
    the energy an atom would have if smeared over its cell.  The equilibrium
    solver uses this rule on nets of continuum sets; minimizing the
    off-diagonal part alone is degenerate (a single atom has zero
    off-diagonal energy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .kernels import KernelSpec
from .sets import CompactSet

RULES = ("off_diagonal", "atomic", "regularized")


@dataclass(frozen=True)
class DiscreteMeasure:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(pts):
            raise ValueError("points and weights differ in length")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if not w.sum() > 0:
            raise ValueError("total mass must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @classmethod
    def uniform(cls, points, mass=1.0):
        n = len(points)
        return cls(points, np.full(n, mass / n))


@dataclass(frozen=True)
class EnergyReport:
    value: float
    kernel: KernelSpec
    diagonal_rule: str
    n_points: int


def _pair_values(points, kernel):
    """Kernel values on the condensed pairwise-distance vector."""
    dist = pdist(points)
    vals = np.full(dist.shape, math.inf)
    pos = dist > 0
    if np.any(pos):
        vals[pos] = kernel(dist[pos])
    if np.any(~pos):
        vals[~pos] = kernel.at_zero()
    return vals


def kernel_matrix(points, kernel: KernelSpec, rule="off_diagonal", self_radius=None):
    """Dense symmetric matrix of kernel values with the requested diagonal."""
    if rule not in RULES:
        raise ValueError(f"unknown diagonal rule {rule!r}")
    points = np.asarray(points, dtype=float).reshape(len(points), -1)
    n = len(points)
    A = squareform(_pair_values(points, kernel)) if n > 1 else np.zeros((n, n))
    if rule == "atomic":
        diag = kernel.at_zero()
    elif rule == "regularized":
        diag = kernel.at_zero()
        if math.isinf(diag):
            if not self_radius or self_radius <= 0:
                raise ValueError("the regularized rule needs a positive self_radius")
            diag = float(kernel(np.asarray(self_radius)))
    else:
        diag = 0.0
    np.fill_diagonal(A, diag)
    return A


def _quadratic(A, w):
    # inf * 0 must count as 0 for atoms carrying no mass
    mask = w > 0
    sub = A[np.ix_(mask, mask)]
    wm = w[mask]
    with np.errstate(invalid="ignore"):
        return float(wm @ sub @ wm)


def energy(mu: DiscreteMeasure, kernel: KernelSpec, rule="off_diagonal", self_radius=None) -> EnergyReport:
    """Double sum ``Σ w_i w_j k(|x_i - x_j|)`` under the chosen diagonal rule."""
    if mu.points.shape[1] != kernel.dim:
        raise ValueError("measure and kernel live in different dimensions")
    A = kernel_matrix(mu.points, kernel, rule, self_radius)
    return EnergyReport(_quadratic(A, mu.weights), kernel, rule, len(mu.weights))


def project_simplex(v, mass=1.0):
    """Euclidean projection of v onto ``{w >= 0, Σ w = mass}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - mass
    k = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def kkt_residual(A, w):
    """Relative Frank-Wolfe gap ``(g·w - min g) / |g·w|`` with ``g = 2Aw``; zero at a KKT point."""
    g = 2.0 * (A @ w)
    gw = float(g @ w)
    return (gw - float(g.min())) / max(abs(gw), 1e-300)


@dataclass
class EquilibriumResult:
    weights: np.ndarray
    min_energy: float
    kkt_residual: float
    converged: bool
    iterations: int
    diagonal: float


def _support_solve(A, support):
    S = np.nonzero(support)[0]
    try:
        x = np.linalg.solve(A[np.ix_(S, S)], np.ones(len(S)))
    except np.linalg.LinAlgError:
        return None
    if not np.all(x > 0):
        return None
    w = np.zeros(len(A))
    w[S] = x / x.sum()
    return w


def equilibrium(points, kernel: KernelSpec, self_radius=None, *, tol=1e-6,
                max_iter=100_000) -> EquilibriumResult:
    """Probability weights on ``points`` minimizing the kernel energy.

    Bounded kernels use the exact atomic diagonal ``k(0)``; unbounded ones
    the regularized diagonal ``k(self_radius)`` (default: half the smallest
    pairwise distance).  If neither applies (coincident support, radius 0)
    every probability measure has infinite energy.

    Projected gradient with exact simplex projection and exact line search
    along the projected direction, periodically polished by solving the
    stationarity system on the current support.  The relative Frank-Wolfe
    gap is the KKT certificate.
    """
    points = np.asarray(points, dtype=float).reshape(len(points), -1)
    n = len(points)
    if n == 0:
        raise ValueError("equilibrium needs at least one point")
    bounded = math.isfinite(kernel.at_zero())
    if not bounded and self_radius is None:
        self_radius = 0.5 * float(pdist(points).min()) if n > 1 else 0.0
    if not bounded and not self_radius:
        w = np.full(n, 1.0 / n)
        return EquilibriumResult(w, math.inf, 0.0, True, 0, math.inf)
    A = kernel_matrix(points, kernel, "regularized", self_radius)
    diag = float(A[0, 0])
    if n == 1:
        return EquilibriumResult(np.ones(1), diag, 0.0, True, 0, diag)

    w = _support_solve(A, np.ones(n, dtype=bool))
    if w is None:
        w = np.full(n, 1.0 / n)
    # step from a power-iteration estimate of the spectral norm
    v = np.random.default_rng(0).standard_normal(n)
    for _ in range(50):
        v = A @ v
        v /= np.linalg.norm(v)
    step = 1.0 / (2.0 * abs(float(v @ A @ v)) + 1e-300)

    res = kkt_residual(A, w)
    it = 0
    while res > tol and it < max_iter:
        it += 1
        Aw = A @ w
        g = 2.0 * Aw
        y = project_simplex(w - step * g)
        dvec = y - w
        slope = float(dvec @ Aw)
        if slope >= 0:
            # no descent at this step length; shrink (backtracking)
            step *= 0.5
            if step < 1e-30:
                break
            continue
        curv = float(dvec @ A @ dvec)
        gamma = 1.0 if curv <= 0 else min(1.0, -slope / curv)
        w = w + gamma * dvec
        w[w < 0] = 0.0
        w /= w.sum()
        if it % 25 == 0:
            cand = _support_solve(A, w > 1e-12)
            if cand is not None and _quadratic(A, cand) <= _quadratic(A, w):
                w = cand
        res = kkt_residual(A, w)
    return EquilibriumResult(w, _quadratic(A, w), res, res <= tol, it, diag)


@dataclass(frozen=True)
class CapacityThresholds:
    """Decision thresholds; see :func:`capacity_estimate`."""

    growth_slope: float = 0.1
    growth_r2: float = 0.9
    stabilization: float = 0.02
    rate_positive: float = 0.95
    rate_zero: float = 0.98
    max_points: int = 4096


@dataclass
class CapacityEstimate:
    levels: list
    growth_exponent: float
    growth_r2: float
    increment_ratio: float
    verdict: str
    capacity_value: float
    extrapolated_energy: float
    kernel: str
    thresholds: CapacityThresholds
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "kernel": self.kernel,
            "levels": [{"n": n, "min_energy": _jsonable(e)} for n, e in self.levels],
            "growth_exponent": _jsonable(self.growth_exponent),
            "growth_r2": _jsonable(self.growth_r2),
            "increment_ratio": _jsonable(self.increment_ratio),
            "capacity_value": _jsonable(self.capacity_value),
            "extrapolated_energy": _jsonable(self.extrapolated_energy),
            "thresholds": vars(self.thresholds),
            "diagnostics": self.diagnostics,
        }


def _jsonable(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _linfit(x, y):
    slope, icpt = np.polyfit(x, y, 1)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss == 0 else 1.0 - float(np.sum((y - slope * x - icpt) ** 2)) / ss
    return float(slope), r2


def classify_energy_sequence(ns, energies, th: CapacityThresholds = CapacityThresholds()):
    """Decide Zero / Positive / Indeterminate from minimal energies under refinement.

    ``increment_ratio`` is the fitted geometric ratio of successive energy
    increments.  The growth fit reports the slope of energy against ln n and
    the better R² of that fit and of the log-log fit.  Converging sequences have ratio < 1 and are extrapolated
    geometrically; logarithmic or power divergence gives ratio >= 1.
    Returns ``(verdict, slope, r2, ratio, extrapolated)``.
    """
    ns = np.asarray(ns, dtype=float)
    E = np.asarray(energies, dtype=float)
    if np.all(np.isinf(E)):
        return "Zero", math.inf, 1.0, math.inf, math.inf
    if np.any(np.isinf(E)):
        return "Indeterminate", math.nan, math.nan, math.nan, math.nan
    if len(E) < 3:
        return "Indeterminate", math.nan, math.nan, math.nan, math.nan
    if np.ptp(np.log(ns)) == 0:
        # the net does not refine (finite set): energies are exact
        return "Positive", 0.0, 1.0, 0.0, float(E[-1])
    slope, r2 = _linfit(np.log(ns), E)
    if np.all(E > 0):
        # power-law divergence is linear on log-log axes rather than in log n
        r2 = max(r2, _linfit(np.log(ns), np.log(E))[1])
    inc = np.diff(E)
    scale = max(abs(E[-1]), 1e-300)
    tail = inc[-4:]
    if np.all(np.abs(tail) <= 1e-12 * scale):
        ratio = 0.0
    elif np.all(tail > 0):
        ratio = float(np.exp(_linfit(np.arange(len(tail)), np.log(tail))[0])) if len(tail) > 1 else math.nan
    else:
        # oscillating or decreasing increments: no monotone divergence
        ratio = float(np.max(np.abs(tail[1:]) / np.maximum(np.abs(tail[:-1]), 1e-300))) if len(tail) > 1 else math.nan
    rel = abs(inc[-1]) / scale
    extrap = float(E[-1])
    if 0 < ratio < 1 and inc[-1] > 0:
        extrap = float(E[-1] + inc[-1] * ratio / (1.0 - ratio))
    if ratio <= th.rate_positive or (rel < th.stabilization and ratio < th.rate_zero):
        verdict = "Positive"
    elif ratio >= th.rate_zero and slope > th.growth_slope and r2 > th.growth_r2:
        verdict = "Zero"
    else:
        verdict = "Indeterminate"
    return verdict, slope, r2, ratio, extrap


def capacity_estimate(cset: CompactSet, kernel: KernelSpec, levels,
                      thresholds: CapacityThresholds = CapacityThresholds()) -> CapacityEstimate:
    """Equilibrium energies on successive nets of ``cset`` and the resulting verdict."""
    if kernel.dim != cset.dim:
        raise ValueError("kernel and set dimensions differ")
    rows, diag = [], {"solver": []}
    for level in levels:
        net = cset.discretize(level)
        if len(net) > thresholds.max_points:
            diag.setdefault("skipped_levels", []).append(level)
            continue
        if len(net) == 0:
            rows.append((0, math.inf))
            continue
        radius = 0.0 if cset.is_finite else 0.5 * net.spacing
        eq = equilibrium(net.points, kernel, self_radius=radius)
        rows.append((len(net), eq.min_energy))
        diag["solver"].append({"level": level, "n": len(net), "converged": eq.converged,
                               "kkt_residual": eq.kkt_residual, "iterations": eq.iterations})
    if any(n == 0 for n, _ in rows):
        # the empty set carries no measure: capacity zero
        verdict, slope, r2, ratio, extrap = "Zero", math.nan, math.nan, math.nan, math.inf
    elif len(rows) < 3:
        diag["reason"] = "fewer than three usable levels"
        verdict, slope, r2, ratio, extrap = "Indeterminate", math.nan, math.nan, math.nan, math.nan
    else:
        ns, es = zip(*rows)
        verdict, slope, r2, ratio, extrap = classify_energy_sequence(ns, es, thresholds)
    cap = 1.0 / extrap if verdict == "Positive" and extrap > 0 else 0.0
    return CapacityEstimate(rows, slope, r2, ratio, verdict, cap, extrap, kernel.label, thresholds, diag)


@dataclass
class ConsistencyReport:
    bessel: CapacityEstimate
    riesz: CapacityEstimate
    status: str  # "agree", "indeterminate" or "defect"

    @property
    def agree(self):
        return self.status == "agree"

    def to_dict(self):
        return {"status": self.status, "bessel": self.bessel.to_dict(), "riesz": self.riesz.to_dict()}


def bessel_riesz_consistency(cset: CompactSet, alpha: float, d: int, levels,
                             thresholds: CapacityThresholds = CapacityThresholds()) -> ConsistencyReport:
    """Compare zero/positive verdicts under γ_{2α} and the Riesz kernel of order d - 2α."""
    if 2 * alpha > d:
        raise ValueError("the Bessel/Riesz equivalence needs 2α <= d")
    b = capacity_estimate(cset, KernelSpec.bessel(2 * alpha, d), levels, thresholds)
    r = capacity_estimate(cset, KernelSpec.riesz(d - 2 * alpha, d), levels, thresholds)
    if "Indeterminate" in (b.verdict, r.verdict):
        status = "indeterminate"
    else:
        status = "agree" if b.verdict == r.verdict else "defect"
    return ConsistencyReport(b, r, status)
