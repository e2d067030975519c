"""Markov-uniqueness and essential-self-adjointness verdicts by three routes.

For the fractional Laplacian of order α on R^d minus a compact null set Σ:

* Markov uniqueness holds iff the Bessel capacity with energy kernel γ_α
  vanishes on Σ (Riesz equivalent: order d - α; critical dimension d - α;
  probabilistic form: Σ is polar for the α-stable process);
* essential self-adjointness holds iff the Bessel capacity with energy
  kernel γ_{2α} vanishes (Riesz order d - 2α; critical dimension d - 2α;
  polarity for the two-parameter additive α-stable process).

This bookkeeping lives in :func:`translation` and nowhere else.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .additive import HittingConfig, hitting_scan
from .capacity import CapacityThresholds, capacity_estimate
from .kernels import KernelSpec
from .levy import RngStream
from .sets import CantorDust, CompactSet, FinitePoints, box_dimension


class Tri(str, enum.Enum):
    TRUE = "True"
    FALSE = "False"
    INDETERMINATE = "Indeterminate"

    @classmethod
    def of(cls, flag):
        return cls.TRUE if flag else cls.FALSE

    @property
    def confident(self):
        return self is not Tri.INDETERMINATE


PROPERTIES = ("markov_unique", "essentially_self_adjoint")


@dataclass(frozen=True)
class OrderTranslation:
    """Kernel orders attached to one of the two properties at (α, d)."""

    prop: str
    capacity_index: float   # s in the Bessel capacity cap_{s,2}
    bessel_order: float     # energy kernel γ_{2s}
    riesz_order: float      # d - 2s
    dimension_threshold: float
    process: str            # whose polarity characterizes the property
    resolvent_kind: str


def translation(prop: str, alpha: float, d: int) -> OrderTranslation:
    """The single table mapping a property to kernel, Riesz order, threshold and process."""
    if prop == "markov_unique":
        s = alpha / 2.0
        return OrderTranslation(prop, s, 2 * s, d - 2 * s, d - 2 * s, "one_param", "stable_resolvent")
    if prop == "essentially_self_adjoint":
        s = float(alpha)
        return OrderTranslation(prop, s, 2 * s, d - 2 * s, d - 2 * s, "additive", "additive_resolvent")
    raise ValueError(f"unknown property {prop!r}")


@dataclass
class Verdict:
    markov_unique: Tri
    essentially_self_adjoint: Tri
    route: str
    parameters: dict
    evidence: dict = field(default_factory=dict)

    @property
    def implication_ok(self) -> bool:
        """Essential self-adjointness implies Markov uniqueness."""
        return not (self.essentially_self_adjoint is Tri.TRUE and self.markov_unique is Tri.FALSE)

    def get(self, prop) -> Tri:
        return getattr(self, prop)

    def to_dict(self):
        return {"route": self.route, "markov_unique": self.markov_unique.value,
                "essentially_self_adjoint": self.essentially_self_adjoint.value,
                "implication_ok": self.implication_ok, "evidence": self.evidence}


def _params(cset, alpha, d):
    return {"alpha": float(alpha), "dim": int(d), "set": cset.spec()}


def _check(cset: CompactSet, alpha, d):
    if not 0 < alpha <= 2:
        raise ValueError(f"stability index must lie in (0, 2], got {alpha}")
    if cset.dim != d:
        raise ValueError(f"set lives in dimension {cset.dim}, not {d}")


def _is_empty(cset):
    return isinstance(cset, FinitePoints) and len(cset.points) == 0


def default_levels(cset: CompactSet, max_points=2048, count=6):
    """The finest ``count`` net levels with between 8 and ``max_points`` points."""
    if cset.is_finite:
        return [0, 1, 2]
    levels = []
    for level in range(40):
        n = len(cset.discretize(level))
        if n > max_points:
            break
        if n >= 8:
            levels.append(level)
    return levels[-count:]


# ---------------------------------------------------------------- analytic

def classify_analytic(cset: CompactSet, alpha, d, levels=None,
                      thresholds: CapacityThresholds = CapacityThresholds()) -> Verdict:
    """Zero/positive Bessel capacity for γ_α (Markov uniqueness) and γ_{2α} (self-adjointness)."""
    _check(cset, alpha, d)
    levels = default_levels(cset, thresholds.max_points // 2) if levels is None else list(levels)
    out, evidence = {}, {}
    for prop in PROPERTIES:
        tr = translation(prop, alpha, d)
        est = capacity_estimate(cset, KernelSpec.bessel(tr.bessel_order, d), levels, thresholds)
        out[prop] = {"Zero": Tri.TRUE, "Positive": Tri.FALSE}.get(est.verdict, Tri.INDETERMINATE)
        evidence[prop] = est.to_dict()
    return Verdict(out["markov_unique"], out["essentially_self_adjoint"], "Analytic",
                   _params(cset, alpha, d), evidence)


# --------------------------------------------------------------- geometric

def default_scales(cset: CompactSet):
    if isinstance(cset, CantorDust):
        return cset.ratio ** np.arange(1, 10)
    lo, hi = cset.bounding_box()
    diam = float(np.max(hi - lo)) or 1.0
    return diam * 2.0 ** -np.arange(3, 12)


def estimate_dimension(cset: CompactSet, scales=None, max_points=2_000_000, stability=0.05) -> dict:
    """Box-counting estimate with a convergence check.

    The slope over the coarse half of the scales and over the fine half must
    agree within ``stability``; otherwise the estimate is flagged unconverged.
    """
    scales = np.sort(np.asarray(default_scales(cset) if scales is None else scales, float))[::-1]
    full = box_dimension(cset, scales, max_points)
    half = len(scales) // 2
    coarse = box_dimension(cset, scales[: half + 1], max_points).estimate
    fine = box_dimension(cset, scales[half:], max_points).estimate
    return {"estimate": full.estimate, "r_squared": full.r_squared, "coarse_slope": coarse,
            "fine_slope": fine, "converged": abs(coarse - fine) <= stability,
            "scales": scales.tolist(), "counts": full.counts.tolist()}


def _threshold_rule(D, threshold, margin):
    if D < threshold - margin:
        return Tri.TRUE
    if D > threshold + margin:
        return Tri.FALSE
    return Tri.INDETERMINATE


def classify_geometric(cset: CompactSet, alpha, d, margin=0.05, scales=None) -> Verdict:
    """Dimension versus the critical values d - α and d - 2α, with an indecision band."""
    _check(cset, alpha, d)
    params = _params(cset, alpha, d)
    thr = {p: translation(p, alpha, d).dimension_threshold for p in PROPERTIES}
    if _is_empty(cset):
        return Verdict(Tri.TRUE, Tri.TRUE, "Geometric", params, {"reason": "empty set"})
    if cset.is_finite:
        # finite sets: zero-dimensional Hausdorff measure is counting measure
        ev = {"dimension": 0.0, "thresholds": thr, "reason": "finite set"}
        return Verdict(Tri.of(thr["markov_unique"] >= 0), Tri.of(thr["essentially_self_adjoint"] >= 0),
                       "Geometric", params, ev)
    if not cset.dimensions_coincide:
        ind = Tri.INDETERMINATE
        return Verdict(ind, ind, "Geometric", params,
                       {"reason": "box and Hausdorff dimensions may differ for this set"})
    dim = estimate_dimension(cset, scales)
    ev = {"dimension": dim, "thresholds": thr, "margin": margin}
    if not dim["converged"]:
        ev["reason"] = "box-counting slope not converged over the scale range"
        return Verdict(Tri.INDETERMINATE, Tri.INDETERMINATE, "Geometric", params, ev)
    D = dim["estimate"]
    return Verdict(_threshold_rule(D, thr["markov_unique"], margin),
                   _threshold_rule(D, thr["essentially_self_adjoint"], margin), "Geometric", params, ev)


# ----------------------------------------------------------- probabilistic

@dataclass(frozen=True)
class ProbabilisticConfig:
    eps_levels: tuple = (0.4, 0.2, 0.1, 0.05)
    trials: int = 100_000
    horizon: float = 1.0
    n_starts: int = 2
    start_offset: float = 1.0
    seed: int = 0
    workers: int = 1


def start_points(cset: CompactSet, n, offset):
    """Points at distance about ``offset`` outside the bounding box, in fixed directions."""
    lo, hi = cset.bounding_box()
    c = (lo + hi) / 2.0
    R = float(np.linalg.norm(hi - lo)) / 2.0
    d = cset.dim
    dirs = []
    for k in range(n):
        u = np.zeros(d)
        u[k % d] = 1.0 if (k // d) % 2 == 0 else -1.0
        dirs.append(u)
    return [c + (R + offset) * u for u in dirs]


def _polarity_to_tri(verdicts):
    if any(v == "NonPolar" for v in verdicts):
        return Tri.FALSE
    if verdicts and all(v == "Polar" for v in verdicts):
        return Tri.TRUE
    return Tri.INDETERMINATE


def classify_probabilistic(cset: CompactSet, alpha, d, config: ProbabilisticConfig = ProbabilisticConfig(),
                           analytic: Verdict | None = None) -> Verdict:
    """Polarity of Σ for the one-parameter (Markov uniqueness) and additive (self-adjointness) processes.

    Outside d >= α (resp. d >= 2α) the polarity characterization does not
    apply; the property is then taken from the analytic route and marked.
    """
    _check(cset, alpha, d)
    params = _params(cset, alpha, d)
    if _is_empty(cset):
        return Verdict(Tri.TRUE, Tri.TRUE, "Probabilistic", params, {"reason": "empty set"})
    out, evidence = {}, {}
    for i, prop in enumerate(PROPERTIES):
        tr = translation(prop, alpha, d)
        order = alpha if prop == "markov_unique" else 2 * alpha
        if d < order:
            if analytic is None:
                analytic = classify_analytic(cset, alpha, d)
            out[prop] = analytic.get(prop)
            evidence[prop] = {"out_of_hypothesis": True, "deferred_to": "Analytic"}
            continue
        ests = []
        for j, x in enumerate(start_points(cset, config.n_starts, config.start_offset)):
            cfg = HittingConfig(tr.process, alpha, d, tuple(x), config.eps_levels,
                                trials=config.trials, horizon=config.horizon)
            ests.append(hitting_scan(cfg, cset, RngStream(config.seed, 100 * i + j), workers=config.workers))
        out[prop] = _polarity_to_tri([e.verdict for e in ests])
        evidence[prop] = {"process": tr.process, "estimates": [e.to_dict() for e in ests]}
    return Verdict(out["markov_unique"], out["essentially_self_adjoint"], "Probabilistic", params, evidence)


# -------------------------------------------------------------- cross-check

ROUTE_PRIORITY = ("Analytic", "Geometric", "Probabilistic")


@dataclass
class CrossCheckReport:
    parameters: dict
    verdicts: list
    contradictions: list
    implication_violations: list
    headline: dict
    seeds: dict = field(default_factory=dict)

    @property
    def falsified(self) -> bool:
        return bool(self.contradictions or self.implication_violations)

    def to_dict(self):
        return {
            "parameters": self.parameters,
            "headline": {k: v.value for k, v in self.headline.items()},
            "routes": {v.route: v.to_dict() for v in self.verdicts},
            "contradictions": self.contradictions,
            "implication_violations": self.implication_violations,
            "falsified": self.falsified,
            "toolkit_version": __version__,
            "seeds": self.seeds,
        }


def merge_verdicts(verdicts, parameters, seeds=None) -> CrossCheckReport:
    """Pure fold of route verdicts into a report; Indeterminate never contradicts."""
    contradictions, violations = [], []
    for v in verdicts:
        if not v.implication_ok:
            violations.append(v.route)
    for prop in PROPERTIES:
        for a in range(len(verdicts)):
            for b in range(a + 1, len(verdicts)):
                va, vb = verdicts[a].get(prop), verdicts[b].get(prop)
                if va.confident and vb.confident and va is not vb:
                    contradictions.append({"property": prop, "routes": [verdicts[a].route, verdicts[b].route],
                                           "values": [va.value, vb.value]})
    headline = {}
    ranked = sorted(verdicts, key=lambda v: ROUTE_PRIORITY.index(v.route))
    for prop in PROPERTIES:
        headline[prop] = next((v.get(prop) for v in ranked if v.get(prop).confident), Tri.INDETERMINATE)
    return CrossCheckReport(parameters, verdicts, contradictions, violations, headline, dict(seeds or {}))


def cross_check(cset: CompactSet, alpha, d, probabilistic: ProbabilisticConfig | None = ProbabilisticConfig(),
                levels=None, margin=0.05) -> CrossCheckReport:
    """Run every applicable route and report contradictions between confident verdicts.

    Pass ``probabilistic=None`` to skip the Monte Carlo route.
    """
    analytic = classify_analytic(cset, alpha, d, levels)
    verdicts = [analytic, classify_geometric(cset, alpha, d, margin)]
    seeds = {}
    if probabilistic is not None:
        verdicts.append(classify_probabilistic(cset, alpha, d, probabilistic, analytic))
        seeds["probabilistic"] = probabilistic.seed
    return merge_verdicts(verdicts, _params(cset, alpha, d), seeds)
