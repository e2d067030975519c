"""Hitting estimates for one-parameter, additive and sheet processes, and polarity verdicts.

A trial records the minimum over grid points of ``distance(x + process, Σ)``.
One pool of trials serves every ε level (common random numbers), so the hit
frequency is nondecreasing in ε trial by trial.  The same holds under grid
refinement (coarser detection via ``stride`` inspects a subset of points) and
under a longer horizon (paths are prefixes of each other because every trial
owns its own counter-based stream).

Verdicts are horizon- and resolution-limited: "Polar" means that the ε-fattened
hit frequency vanishes at a power rate, or was never observed, for times up to
T on a grid of step Δt.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import stats

from ._bnb import min_distance
from .levy import PathConfig, RngStream, brownian_sheet, sample_stable_increment, simulate_path
from .sets import CompactSet

PROCESSES = ("one_param", "additive", "sheet")


@lru_cache(maxsize=None)
def median_unit_increment(alpha: float, d: int) -> float:
    """Median length ``m_α`` of the unit-time stable increment in R^d (estimated once for α < 2)."""
    if alpha == 2:
        return float(stats.chi.median(d))
    v = sample_stable_increment(alpha, 1.0, d, RngStream(0x5EED, d), size=1_000_000)
    return float(np.median(np.linalg.norm(v, axis=1)))


def coupled_step(alpha: float, d: int, eps_min: float) -> float:
    """Step with median one-step displacement ``Δt^{1/α} m_α = ε_min / 3``."""
    return (eps_min / (3.0 * median_unit_increment(alpha, d))) ** alpha


@dataclass(frozen=True)
class HittingConfig:
    process: str
    alpha: float
    dim: int
    start: tuple
    eps_levels: tuple
    trials: int = 100_000
    horizon: float = 1.0
    step: float | None = None
    stride: int = 1
    sheet_max_grid: int = 257
    kappa_low: float = 0.15
    kappa_high: float = 0.5
    p_max: float = 1e-4
    min_hits: int = 30
    confidence: float = 0.95
    auto_scale: bool = False
    max_trials: int = 1_000_000

    def __post_init__(self):
        if self.process not in PROCESSES:
            raise ValueError(f"unknown process {self.process!r}; choose from {PROCESSES}")
        if self.process == "sheet" and self.alpha != 2:
            raise ValueError("the Brownian sheet has α = 2")
        eps = tuple(float(e) for e in self.eps_levels)
        if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("ε levels must be positive and strictly decreasing")
        start = tuple(float(v) for v in np.ravel(self.start))
        if len(start) != self.dim:
            raise ValueError("start point has the wrong dimension")
        if self.trials < 1 or self.stride < 1:
            raise ValueError("trials and stride must be positive")
        object.__setattr__(self, "eps_levels", eps)
        object.__setattr__(self, "start", start)
        if self.step is None:
            object.__setattr__(self, "step", coupled_step(self.alpha, self.dim, eps[-1]))
        if self.process == "sheet":
            # the sheet grid is quadratic in size; cap it
            object.__setattr__(self, "step", max(self.step, self.horizon / (self.sheet_max_grid - 1)))
        PathConfig(self.alpha, self.dim, self.horizon, self.step)

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.horizon / self.step + 1e-9))


@dataclass
class AdditiveSheet:
    """Two path skeletons; the value at grid point (i, j) is ``first[i] + second[j]``."""

    times: np.ndarray
    first: np.ndarray
    second: np.ndarray

    def __getitem__(self, ij):
        i, j = ij
        return self.first[i] + self.second[j]

    def full(self) -> np.ndarray:
        return self.first[:, None, :] + self.second[None, :, :]


def simulate_additive(alpha, d, horizon, step, rng: RngStream) -> AdditiveSheet:
    """Additive process ``X_{t1} + X'_{t2}`` on the square grid, from two independent paths."""
    cfg = PathConfig(alpha, d, horizon, step)
    return AdditiveSheet(cfg.times, simulate_path(cfg, rng.child(0)), simulate_path(cfg, rng.child(1)))


def target_cloud(cset: CompactSet, eps_min: float) -> tuple[np.ndarray, float]:
    """Points standing in for Σ and their covering radius.

    Finite sets are used exactly; continua are replaced by a net with
    covering radius at most ``ε_min / 10``.
    """
    if cset.is_finite:
        return np.asarray(cset.points, dtype=float).reshape(-1, cset.dim), 0.0
    level = 0
    net = cset.discretize(level)
    while net.h > eps_min / 10.0:
        level += 1
        net = cset.discretize(level)
    return net.points, net.h


def min_pair_distance(P, Q, cap=np.inf):
    """``min |p - q|`` over two point clouds; values above ``cap`` are reported as inf."""
    return min_distance(P, Q, cap)


def brute_force_additive_distance(first, second, start, target):
    """Reference for the additive minimum: every ``(i, j)`` grid value against every target point.

    Uses the arithmetic of the skeleton search, ``|a_i - (σ - x - b_j)|``.
    """
    shifted = np.asarray(target)[None, :, :] - np.asarray(start) - np.asarray(second)[:, None, :]
    d2 = ((np.asarray(first)[:, None, None, :] - shifted[None, :, :, :]) ** 2).sum(axis=-1)
    return float(np.sqrt(d2.min()))


def trial_min_distance(cfg: HittingConfig, cloud: np.ndarray, rng: RngStream, cap=np.inf) -> float:
    """Minimum over the detection grid of the distance from ``x + process`` to the cloud."""
    x = np.asarray(cfg.start)
    s = cfg.stride
    if cfg.process == "one_param":
        path = simulate_path(PathConfig(cfg.alpha, cfg.dim, cfg.horizon, cfg.step), rng)[::s]
        return min_pair_distance(path + x, cloud, cap)
    if cfg.process == "additive":
        sheet = simulate_additive(cfg.alpha, cfg.dim, cfg.horizon, cfg.step, rng)
        a, b = sheet.first[::s], sheet.second[::s]
        # |x + a_i + b_j - σ| = |a_i - (σ - x - b_j)|
        shifted = (cloud[None, :, :] - x - b[:, None, :]).reshape(-1, cfg.dim)
        return min_pair_distance(a, shifted, cap)
    t = cfg.step * np.arange(1, cfg.n_steps + 1)
    w = brownian_sheet(t, t, cfg.dim, rng)[::s, ::s].reshape(-1, cfg.dim)
    # the sheet vanishes on the axes, where the process sits at x
    pts = np.vstack([w + x, x[None, :]])
    return min_pair_distance(pts, cloud, cap)


def _run_trials(args):
    cfg, cloud, seed, stream, lo, hi, cap = args
    base = RngStream(seed, stream)
    return np.array([trial_min_distance(cfg, cloud, base.child(i), cap) for i in range(lo, hi)])


def trial_min_distances(cfg: HittingConfig, cset: CompactSet, rng: RngStream, n_trials=None,
                        first_trial=0, workers=1) -> np.ndarray:
    """Per-trial minimum distances (inf beyond the largest ε) for trials ``first_trial, ...``.

    Trial ``i`` always draws from ``rng.child(i)``, so results do not depend on
    ``workers`` or on how trials are chunked.
    """
    if rng.subkeys:
        raise ValueError("pass a root RngStream (seed, stream); trials derive their own children")
    n = cfg.trials if n_trials is None else n_trials
    cloud, _ = target_cloud(cset, cfg.eps_levels[-1])
    d0 = cset.distance(np.asarray(cfg.start))
    if not d0 > cfg.eps_levels[0]:
        raise ValueError(f"start point is within the largest ε of Σ (distance {d0:g})")
    cap = cfg.eps_levels[0]
    if workers <= 1 or n < 64:
        return _run_trials((cfg, cloud, rng.seed, rng.stream, first_trial, first_trial + n, cap))
    edges = np.linspace(first_trial, first_trial + n, workers * 4 + 1).astype(int)
    jobs = [(cfg, cloud, rng.seed, rng.stream, a, b, cap) for a, b in zip(edges, edges[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return np.concatenate(list(ex.map(_run_trials, jobs)))


def hitting_frequency(cfg: HittingConfig, cset: CompactSet, eps: float, rng: RngStream,
                      workers=1) -> tuple[int, int]:
    """``(hits, trials)`` for a single ε level."""
    cfg = replace(cfg, eps_levels=(float(eps),), step=cfg.step)
    d0 = cset.distance(np.asarray(cfg.start))
    if eps >= d0:
        raise ValueError(f"ε = {eps:g} is not below the start distance {d0:g}")
    m = trial_min_distances(cfg, cset, rng, workers=workers)
    return int(np.sum(m <= eps)), len(m)


def clopper_pearson(hits, trials, confidence=0.95):
    a = 1.0 - confidence
    lo = 0.0 if hits == 0 else float(stats.beta.ppf(a / 2, hits, trials - hits + 1))
    hi = 1.0 if hits == trials else float(stats.beta.ppf(1 - a / 2, hits + 1, trials - hits))
    return lo, hi


@dataclass
class HittingEstimate:
    eps: list
    hits: list
    trials: int
    ci_low: list
    ci_high: list
    kappa: float
    kappa_se: float
    limit: float
    limit_se: float
    upper_bound: float
    rule_of_three: float
    verdict: str
    config: HittingConfig
    notes: dict = field(default_factory=dict)

    @property
    def frequencies(self):
        return [h / self.trials for h in self.hits]

    def table(self):
        return [{"eps": e, "hits": h, "trials": self.trials, "lo": lo, "hi": hi}
                for e, h, lo, hi in zip(self.eps, self.hits, self.ci_low, self.ci_high)]

    def to_dict(self):
        def clean(v):
            return None if v is None or (isinstance(v, float) and not math.isfinite(v)) else v
        cfg = self.config
        return {
            "verdict": self.verdict,
            "process": cfg.process, "alpha": cfg.alpha, "dim": cfg.dim, "start": list(cfg.start),
            "horizon": cfg.horizon, "step": cfg.step, "stride": cfg.stride,
            "table": self.table(),
            "kappa": clean(self.kappa), "kappa_se": clean(self.kappa_se),
            "limit": clean(self.limit), "limit_se": clean(self.limit_se),
            "upper_bound": clean(self.upper_bound), "rule_of_three": clean(self.rule_of_three),
            "thresholds": {"kappa_low": cfg.kappa_low, "kappa_high": cfg.kappa_high,
                           "p_max": cfg.p_max, "min_hits": cfg.min_hits},
            "notes": self.notes,
        }


def _ols_weights(x):
    """Rows ``(c_intercept, c_slope)`` with ``(a, b) = C @ y`` for least squares ``y ≈ a + b x``."""
    X = np.column_stack([np.ones_like(x), x])
    return np.linalg.pinv(X)


def summarize(cfg: HittingConfig, min_dist: np.ndarray, notes=None) -> HittingEstimate:
    """Frequencies, confidence intervals, fitted exponent, extrapolated limit and verdict.

    Standard errors come from per-trial influence values, which accounts for
    the correlation that common random numbers induce between levels.
    """
    eps = np.asarray(cfg.eps_levels)
    n = len(min_dist)
    ind = (min_dist[:, None] <= eps[None, :]).astype(float)
    hits = ind.sum(axis=0).astype(int)
    freq = hits / n
    cis = [clopper_pearson(int(h), n, cfg.confidence) for h in hits]
    z = float(stats.norm.ppf(0.5 + cfg.confidence / 2))

    use = hits >= cfg.min_hits
    kappa = kappa_se = math.nan
    if use.sum() >= 2:
        C = _ols_weights(np.log(eps[use]))
        kappa = float(C[1] @ np.log(freq[use]))
        infl = ind[:, use] @ (C[1] / freq[use])
        kappa_se = float(infl.std(ddof=1) / math.sqrt(n))
    C = _ols_weights(eps)
    limit = float(C[0] @ freq)
    limit_se = float((ind @ C[0]).std(ddof=1) / math.sqrt(n))

    upper = float(cis[-1][1])
    est = HittingEstimate(list(map(float, eps)), [int(h) for h in hits], n,
                          [c[0] for c in cis], [c[1] for c in cis], kappa, kappa_se, limit,
                          limit_se, upper, 3.0 / n, "Indeterminate", cfg, dict(notes or {}))
    est.notes.setdefault("semantics", f"horizon-limited: times up to T={cfg.horizon:g}, "
                                      f"grid step {cfg.step:.3g}, smallest ε {eps[-1]:g}")
    est.notes["z"] = z
    est.verdict = polarity_verdict(est)
    return est


def polarity_verdict(est: HittingEstimate) -> str:
    """Polar / NonPolar / Indeterminate from the ε-scaling of hit frequencies."""
    cfg = est.config
    if len(est.eps) >= 1 and all(h == 0 for h in est.hits):
        return "Polar" if est.upper_bound < cfg.p_max else "Indeterminate"
    usable = sum(h >= cfg.min_hits for h in est.hits)
    if usable < 2 or not math.isfinite(est.kappa):
        return "Indeterminate"
    z = est.notes.get("z", float(stats.norm.ppf(0.5 + cfg.confidence / 2)))
    if est.kappa > cfg.kappa_high:
        return "Polar"
    if est.kappa < cfg.kappa_low and est.limit - z * est.limit_se > 0:
        return "NonPolar"
    return "Indeterminate"


def hitting_scan(cfg: HittingConfig, cset: CompactSet, rng: RngStream, workers=1) -> HittingEstimate:
    """Run ``cfg.trials`` trials once and evaluate every ε level on them.

    With ``auto_scale`` the pool is doubled (up to ``max_trials``) until the
    smallest level with hits has a relative CI width below 10%.
    """
    m = trial_min_distances(cfg, cset, rng, workers=workers)
    while cfg.auto_scale and len(m) < cfg.max_trials:
        hits = np.sum(m[:, None] <= np.asarray(cfg.eps_levels)[None, :], axis=0)
        nz = np.nonzero(hits)[0]
        if len(nz) == 0:
            break
        h = int(hits[nz[-1]])
        lo, hi = clopper_pearson(h, len(m), cfg.confidence)
        if (hi - lo) / (h / len(m)) < 0.1:
            break
        extra = min(len(m), cfg.max_trials - len(m))
        m = np.concatenate([m, trial_min_distances(cfg, cset, rng, extra, first_trial=len(m), workers=workers)])
    _, res = target_cloud(cset, cfg.eps_levels[-1])
    return summarize(replace(cfg, trials=len(m)), m, {"target_resolution": res})
