"""Acceptance battery: one function per criterion, each returning a :class:`CriterionResult`.

Used by ``tests/test_acceptance.py`` and by the ``battery`` CLI subcommand.
Expensive intermediate results (classification sweeps) are cached per
process so later criteria can audit them without recomputation.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import stats

from .additive import HittingConfig, hitting_scan, trial_min_distances
from .capacity import (DiscreteMeasure, bessel_riesz_consistency, capacity_estimate, energy,
                       equilibrium)
from .classify import Tri, classify_analytic, classify_geometric
from .kernels import KernelSpec, additive_resolvent_density, bessel_kernel, stable_resolvent_density
from .levy import RngStream, brownian_sheet, characteristic_function_table
from .sets import CantorDust, FinitePoints, Segment


@dataclass
class CriterionResult:
    key: str
    title: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.key}: {self.title} ({self.seconds:.1f}s)"


def _timed(key, title):
    def wrap(fn):
        def run(**kw):
            t0 = time.perf_counter()
            passed, detail = fn(**kw)
            return CriterionResult(key, title, bool(passed), detail, time.perf_counter() - t0)
        run.__name__ = fn.__name__
        run.key = key
        return run
    return wrap


def _variation(v):
    v = np.asarray(v, dtype=float)
    return float(v.max() / v.min() - 1.0)


# ------------------------------------------------------------------ 1

@_timed("C1", "characteristic function of stable increments within 0.01")
def characteristic_function_fidelity(n_samples=1_000_000, seed=0):
    rows = characteristic_function_table(n_samples=n_samples, seed=seed)
    worst = max(r["abs_error"] for r in rows)
    return worst <= 0.01, {"max_abs_error": worst, "rows": rows}


# ------------------------------------------------------------------ 2

@_timed("C2", "kernel asymptotics: ratio tests and additive log band")
def kernel_asymptotics():
    checks = {}
    r = np.geomspace(1e-6, 1e-4, 9)
    checks["bessel a<d (1,3): r^2 γ on [1e-6,1e-4], 5%"] = (_variation(bessel_kernel(1, 3, r) * r ** 2), 0.05)
    checks["bessel a=d (2,2): γ/(-ln r) on [1e-6,1e-4], 5%"] = (_variation(bessel_kernel(2, 2, r) / -np.log(r)), 0.05)
    r = np.geomspace(1e-3, 1e-2, 5)
    for a, d in ((2, 3), (1, 2)):
        v = np.array([stable_resolvent_density(a, d, x) for x in r]) * r ** (d - a)
        checks[f"resolvent ({a},{d}): r^(d-α) u on [1e-3,1e-2], 10%"] = (_variation(v), 0.10)
    bands = {}
    for a, d in ((1, 2), (2, 4)):
        rb = np.geomspace(1e-3, 1e-1, 9)
        ratio = np.array([additive_resolvent_density(a, d, x) for x in rb]) / -np.log(rb)
        bands[f"({a},{d})"] = [float(ratio.min()), float(ratio.max())]
        ok = bool(np.all(np.isfinite(ratio)) and ratio.min() > 0)
        checks[f"additive ({a},{d}): u/(-ln r) in a positive finite band on [1e-3,1e-1]"] = (0.0 if ok else math.inf, 0.0)
        rs = np.geomspace(1e-6, 1e-4, 5)
        u = np.array([additive_resolvent_density(a, d, x) for x in rs])
        slope = -np.diff(u) / np.diff(np.log(rs))
        checks[f"additive ({a},{d}): -du/dln r stable on [1e-6,1e-4], 5%"] = (_variation(slope), 0.05)
    passed = all(v <= tol for v, tol in checks.values())
    return passed, {"variations": {k: v for k, (v, _) in checks.items()}, "log_bands": bands}


# ------------------------------------------------------------------ 3

@lru_cache(maxsize=None)
def finite_battery():
    out = []
    for alpha in (0.5, 1.0, 1.5, 2.0):
        for d in range(1, 6):
            pt = FinitePoints(np.zeros((1, d)))
            for v in (classify_analytic(pt, alpha, d), classify_geometric(pt, alpha, d)):
                out.append((alpha, d, v))
    return tuple(out)


@_timed("C3", "finite-set classification: MU iff d >= α, ESA iff d >= 2α")
def finite_set_classification():
    wrong = []
    for alpha, d, v in finite_battery():
        expect = (Tri.of(d >= alpha), Tri.of(d >= 2 * alpha))
        got = (v.markov_unique, v.essentially_self_adjoint)
        boundary = (d == alpha, d == 2 * alpha)
        for k in range(2):
            if got[k] is Tri.INDETERMINATE and boundary[k]:
                continue
            if got[k] is not expect[k]:
                wrong.append({"alpha": alpha, "dim": d, "route": v.route, "property": k, "got": got[k].value})
    return not wrong, {"cases": len(finite_battery()), "wrong": wrong}


# ------------------------------------------------------------------ 4

def _point(d):
    return FinitePoints(np.zeros((1, d)))


def _axis(d, x):
    return (x,) + (0.0,) * (d - 1)


@_timed("C4", "additive Brownian motion vs a point: d=3 NonPolar, d=5 Polar with κ = 1 ± 0.3")
def additive_dichotomy(trials_d3=20_000, trials_d5=100_000, seed=4):
    cfg3 = HittingConfig("additive", 2.0, 3, _axis(3, 0.45), (0.4, 0.2, 0.1, 0.05), trials=trials_d3, horizon=4.0)
    e3 = hitting_scan(cfg3, _point(3), RngStream(seed, 3))
    lo3 = e3.limit - e3.notes["z"] * e3.limit_se
    cfg5 = HittingConfig("additive", 2.0, 5, _axis(5, 1.0), (0.4, 0.2, 0.1, 0.05), trials=trials_d5, horizon=2.0)
    e5 = hitting_scan(cfg5, _point(5), RngStream(seed, 5))
    ok3 = e3.verdict == "NonPolar" and lo3 > 0
    ok5 = e5.verdict == "Polar" and abs(e5.kappa - 1.0) <= 0.3
    return ok3 and ok5, {"d3": e3.to_dict(), "d3_limit_ci_low": lo3, "d5": e5.to_dict()}


# ------------------------------------------------------------------ 5

@_timed("C5", "one-parameter BM: κ = 1 ± 0.2 in d=3; reflection limit 0.3173 ± 0.005 in d=1")
def one_parameter_exponent(trials_d3=20_000, trials_d1=100_000, seed=5):
    cfg3 = HittingConfig("one_param", 2.0, 3, _axis(3, 1.0), (0.4, 0.2, 0.1, 0.05), trials=trials_d3, horizon=10.0)
    e3 = hitting_scan(cfg3, _point(3), RngStream(seed, 3))
    cfg1 = HittingConfig("one_param", 2.0, 1, (1.0,), (0.04, 0.03, 0.02, 0.01), trials=trials_d1, horizon=1.0)
    e1 = hitting_scan(cfg1, _point(1), RngStream(seed, 1))
    exact = 2.0 * (1.0 - stats.norm.cdf(1.0))
    ok3 = abs(e3.kappa - 1.0) <= 0.2
    ok1 = abs(e1.limit - exact) <= 0.005
    return ok3 and ok1, {"d3": e3.to_dict(), "d1": e1.to_dict(), "reflection_exact": exact,
                         "d1_error": e1.limit - exact}


# ------------------------------------------------------------------ 6

@_timed("C6", "equilibrium solver: unit segment log energy -> ln 4; symmetric configurations exact")
def capacity_solver():
    est = capacity_estimate(Segment([0.0], [1.0]), KernelSpec.riesz(0, 1), range(6, 12))
    n_last = est.levels[-1][0]
    rel = abs(est.extrapolated_energy - math.log(4)) / math.log(4)
    sym = {}
    k1 = KernelSpec.bessel(2, 1)
    two = equilibrium(np.array([[0.0], [1.0]]), k1)
    e_two = (k1.at_zero() + float(k1(1.0))) / 2
    sym["two_point"] = (float(np.max(np.abs(two.weights - 0.5))), abs(two.min_energy - e_two) / e_two)
    k2 = KernelSpec.bessel(3, 2)
    tri = np.array([[1.0, 0.0], [-0.5, math.sqrt(3) / 2], [-0.5, -math.sqrt(3) / 2]])
    eq = equilibrium(tri, k2)
    e_tri = (k2.at_zero() + 2 * float(k2(math.sqrt(3)))) / 3
    sym["triangle"] = (float(np.max(np.abs(eq.weights - 1 / 3))), abs(eq.min_energy - e_tri) / e_tri)
    ok_sym = all(w <= 1e-6 and e <= 1e-6 for w, e in sym.values())
    passed = n_last == 2049 and rel <= 0.02 and ok_sym
    return passed, {"segment": est.to_dict(), "relative_error_ln4": rel, "symmetric": sym}


# ------------------------------------------------------------------ 7

CANTOR_ALPHAS = (0.10, 0.15, 0.1645, 0.1845, 0.2045, 0.20, 0.25)
CANTOR_BAND = (0.1645, 0.2045)


@lru_cache(maxsize=None)
def cantor_sweep():
    C = CantorDust()
    rows = []
    for a in CANTOR_ALPHAS:
        rows.append((a, classify_analytic(C, a, 1), classify_geometric(C, a, 1),
                     bessel_riesz_consistency(C, a, 1, range(4, 10))))
    return tuple(rows)


@_timed("C7", "Cantor threshold sweep and Bessel/Riesz consistency")
def cantor_threshold_sweep():
    lo, hi = CANTOR_BAND
    bad, table = [], []
    for a, an, geo, cons in cantor_sweep():
        inside = lo - 1e-12 <= a <= hi + 1e-12
        row = {"alpha": a, "analytic": an.essentially_self_adjoint.value,
               "geometric": geo.essentially_self_adjoint.value, "consistency": cons.status}
        table.append(row)
        for v in (an, geo):
            got = v.essentially_self_adjoint
            if inside:
                continue
            if got is not Tri.of(a < lo):
                bad.append({**row, "route": v.route})
        if cons.status == "defect" or (not inside and cons.status != "agree"):
            bad.append({**row, "route": "consistency"})
    return not bad, {"table": table, "violations": bad}


# ------------------------------------------------------------------ 8

@_timed("C8", "properties: energy scaling, hit monotonicity, seed determinism, ESA implies MU")
def property_suites(seed=8):
    checks = {}
    rng = np.random.default_rng(seed)
    pts = rng.random((40, 2))
    w = rng.random(40)
    mu = DiscreteMeasure(pts, w / w.sum())
    s, c, t = 0.7, 3.0, 2.5
    k = KernelSpec.riesz(s, 2)
    e0 = energy(mu, k).value
    e_scaled = energy(DiscreteMeasure(c * pts, mu.weights), k).value
    e_mass = energy(DiscreteMeasure(pts, t * mu.weights), k).value
    checks["energy_scaling"] = (abs(e_scaled - c ** -s * e0) <= 1e-12 * e0
                                and abs(e_mass - t * t * e0) <= 1e-12 * e0)

    cfg = HittingConfig("additive", 2.0, 3, _axis(3, 0.6), (0.4, 0.2, 0.1), trials=300, horizon=0.5)
    target = _point(3)
    fine = trial_min_distances(cfg, target, RngStream(seed, 1))
    coarse = trial_min_distances(replace(cfg, stride=3), target, RngStream(seed, 1))
    longer = trial_min_distances(replace(cfg, horizon=1.0), target, RngStream(seed, 1))
    hits = [(fine <= e).sum() for e in cfg.eps_levels]
    checks["monotone_in_eps"] = all(a >= b for a, b in zip(hits, hits[1:]))
    checks["monotone_in_refinement"] = bool(np.all(fine <= coarse))
    checks["monotone_in_horizon"] = bool(np.all(longer <= fine))

    one = json.dumps(hitting_scan(cfg, target, RngStream(seed, 2)).to_dict()).encode()
    two = json.dumps(hitting_scan(cfg, target, RngStream(seed, 2)).to_dict()).encode()
    other = json.dumps(hitting_scan(cfg, target, RngStream(seed + 1, 2)).to_dict()).encode()
    checks["seed_determinism"] = one == two and one != other

    verdicts = [v for _, _, v in finite_battery()]
    for _, an, geo, _ in cantor_sweep():
        verdicts += [an, geo]
    checks["esa_implies_mu"] = all(v.implication_ok for v in verdicts)
    return all(checks.values()), {"checks": checks, "verdicts_audited": len(verdicts)}


# ------------------------------------------------------------------ 9

@_timed("C9", "Brownian sheet variance s·t within 3 s.e. on a 16x16 grid (diagonal + exceedance rate)")
def brownian_sheet_covariance(replicates=10_000, seed=9):
    g = np.arange(1, 17) / 16.0
    # coordinates of a vector-valued sheet are independent sheets: use them as replicates
    W = brownian_sheet(g, g, replicates, RngStream(seed, 0))
    var = W.var(axis=2, ddof=1)
    exact = np.outer(g, g)
    se = exact * math.sqrt(2.0 / (replicates - 1))
    z = np.abs(var - exact) / se
    V = brownian_sheet([1.0], [1.0, 2.0], replicates, RngStream(seed, 1))[0]
    cov = float(np.mean(V[0] * V[1]))
    # Var(XY) = Var X Var Y + Cov² = 1·2 + 1 for this Gaussian pair
    cov_z = abs(cov - 1.0) / math.sqrt(3.0 / replicates)
    worst = [int(i) for i in np.unravel_index(z.argmax(), z.shape)]
    # 256 correlated 3-s.e. tests exceed somewhere for about one seed in ten even
    # for an exact sampler; gate on the diagonal and on the exceedance rate
    exceed = float(np.mean(z > 3.0))
    passed = bool(np.all(np.diag(z) <= 3.0)) and exceed <= 0.05 and cov_z <= 3.0
    return passed, {"max_z": float(z.max()), "worst_index": worst, "diagonal_max_z": float(np.diag(z).max()),
                    "exceedance_fraction": exceed, "all_256_within_3se": bool(np.all(z <= 3.0)),
                    "cov_1_1_vs_1_2": cov, "cov_z": cov_z}


CRITERIA = (characteristic_function_fidelity, kernel_asymptotics, finite_set_classification,
            additive_dichotomy, one_parameter_exponent, capacity_solver, cantor_threshold_sweep,
            property_suites, brownian_sheet_covariance)


def run_battery(keys=None, report=print):
    results = []
    for fn in CRITERIA:
        if keys and fn.key not in keys:
            continue
        res = fn()
        report(res.line())
        results.append(res)
    return results
