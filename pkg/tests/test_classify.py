import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from esakit.classify import (PROPERTIES, ProbabilisticConfig, Tri, Verdict, classify_analytic,
                             classify_geometric, classify_probabilistic, cross_check,
                             estimate_dimension, merge_verdicts, start_points, translation)
from esakit.sets import CantorDust, FinitePoints, Segment


def _point(d):
    return FinitePoints([[0.0] * d])


@pytest.mark.parametrize("alpha, d", [(2.0, 5), (0.5, 1), (1.3, 3)])
def test_translation_table(alpha, d):
    mu = translation("markov_unique", alpha, d)
    esa = translation("essentially_self_adjoint", alpha, d)
    assert (mu.capacity_index, mu.bessel_order, mu.riesz_order, mu.dimension_threshold) == \
        pytest.approx((alpha / 2, alpha, d - alpha, d - alpha))
    assert (esa.capacity_index, esa.bessel_order, esa.riesz_order, esa.dimension_threshold) == \
        pytest.approx((alpha, 2 * alpha, d - 2 * alpha, d - 2 * alpha))
    assert (mu.process, esa.process) == ("one_param", "additive")
    with pytest.raises(ValueError):
        translation("feller", alpha, d)


def test_tri_helpers():
    assert Tri.of(True) is Tri.TRUE and Tri.of(False) is Tri.FALSE
    assert Tri.TRUE.confident and not Tri.INDETERMINATE.confident
    assert Tri("Indeterminate") is Tri.INDETERMINATE


# ---------------------------------------------------------------- analytic

def test_analytic_brownian_point_in_three_dimensions():
    v = classify_analytic(_point(3), 2.0, 3)
    assert v.markov_unique is Tri.TRUE
    assert v.essentially_self_adjoint is Tri.FALSE
    assert v.route == "Analytic" and v.implication_ok


def test_analytic_fractional_point_is_self_adjoint():
    assert classify_analytic(_point(1), 0.5, 1).essentially_self_adjoint is Tri.TRUE


def test_analytic_empty_set():
    v = classify_analytic(FinitePoints([], dim=2), 1.0, 2)
    assert v.markov_unique is Tri.TRUE and v.essentially_self_adjoint is Tri.TRUE


@given(alpha=st.sampled_from([0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]), d=st.integers(1, 5),
       k=st.integers(1, 4), seed=st.integers(0, 1000))
@settings(max_examples=40, deadline=None)
def test_finite_sets_follow_dimension_thresholds(alpha, d, k, seed):
    pts = np.random.default_rng(seed).uniform(size=(k, d))
    v = classify_analytic(FinitePoints(pts), alpha, d)
    assert v.markov_unique is Tri.of(alpha <= d)
    assert v.essentially_self_adjoint is Tri.of(2 * alpha <= d)
    assert v.implication_ok


def test_analytic_rejects_bad_inputs():
    with pytest.raises(ValueError):
        classify_analytic(_point(2), 2.5, 2)
    with pytest.raises(ValueError):
        classify_analytic(_point(2), 1.0, 3)


# ---------------------------------------------------------------- geometric

@pytest.mark.parametrize("alpha, esa", [(0.15, Tri.TRUE), (0.25, Tri.FALSE), (0.1845, Tri.INDETERMINATE)])
def test_geometric_cantor(alpha, esa):
    v = classify_geometric(CantorDust(1), alpha, 1)
    assert v.essentially_self_adjoint is esa
    assert v.evidence["dimension"]["estimate"] == pytest.approx(np.log(2) / np.log(3), abs=0.02)


def test_geometric_finite_set_short_circuit():
    v = classify_geometric(FinitePoints([[0.0, 0.0], [1.0, 1.0]]), 1.0, 2)
    assert v.essentially_self_adjoint is Tri.TRUE and v.markov_unique is Tri.TRUE
    v = classify_geometric(_point(1), 0.75, 1)
    assert v.essentially_self_adjoint is Tri.FALSE and v.markov_unique is Tri.TRUE


def test_geometric_empty_set():
    v = classify_geometric(FinitePoints([], dim=3), 2.0, 3)
    assert v.markov_unique is Tri.TRUE and v.essentially_self_adjoint is Tri.TRUE


def test_geometric_refuses_unsupported_variant():
    class Odd(Segment):
        dimensions_coincide = False

    v = classify_geometric(Odd([0.0], [1.0]), 0.2, 1)
    assert v.markov_unique is Tri.INDETERMINATE
    assert "reason" in v.evidence


def test_geometric_unconverged_slope_is_indeterminate():
    # boxes larger than the segment count one box: the coarse slope is flat
    scales = [8.0, 4.0, 2.0, 1.0, 0.5, 0.25, 0.125]
    assert not estimate_dimension(Segment([0.0], [1.0]), scales)["converged"]
    v = classify_geometric(Segment([0.0], [1.0]), 0.2, 1, scales=scales)
    assert v.essentially_self_adjoint is Tri.INDETERMINATE


def test_geometric_segment_in_high_dimension():
    seg = Segment([0.0] * 5, [1.0] + [0.0] * 4)
    v = classify_geometric(seg, 2.0, 5)
    # dimension 1 against thresholds 3 and 1: the self-adjointness boundary is inside the band
    assert v.markov_unique is Tri.TRUE
    assert v.essentially_self_adjoint is Tri.INDETERMINATE


# ---------------------------------------------------------------- probabilistic

def test_start_points_lie_outside_the_set():
    cset = Segment([0.0, 0.0], [1.0, 0.0])
    for x in start_points(cset, 4, 0.7):
        assert cset.distance(x) >= 0.7 - 1e-12


def test_probabilistic_defers_outside_the_polarity_regime():
    v = classify_probabilistic(_point(1), 2.0, 1, ProbabilisticConfig(trials=10))
    assert v.evidence["markov_unique"]["out_of_hypothesis"]
    assert v.markov_unique is Tri.FALSE and v.essentially_self_adjoint is Tri.FALSE


def test_probabilistic_brownian_point_in_three_dimensions():
    cfg = ProbabilisticConfig(trials=2000, seed=3)
    v = classify_probabilistic(_point(3), 2.0, 3, cfg)
    assert v.markov_unique is Tri.TRUE
    est = v.evidence["markov_unique"]["estimates"][0]
    assert est["kappa"] > 0.5
    # the additive process needs d >= 4 for polarity to characterize self-adjointness
    assert v.evidence["essentially_self_adjoint"]["out_of_hypothesis"]


def test_probabilistic_empty_set():
    v = classify_probabilistic(FinitePoints([], dim=1), 1.0, 1)
    assert v.markov_unique is Tri.TRUE and v.essentially_self_adjoint is Tri.TRUE


# ---------------------------------------------------------------- cross-check

def _v(route, mu, esa):
    return Verdict(Tri(mu), Tri(esa), route, {})


def test_merge_agreeing_routes():
    rep = merge_verdicts([_v("Analytic", "True", "False"), _v("Geometric", "True", "Indeterminate")], {})
    assert not rep.falsified
    assert rep.headline == {"markov_unique": Tri.TRUE, "essentially_self_adjoint": Tri.FALSE}


def test_merge_flags_contradiction():
    rep = merge_verdicts([_v("Analytic", "True", "False"), _v("Probabilistic", "True", "True")], {})
    assert rep.falsified
    assert rep.contradictions == [{"property": "essentially_self_adjoint",
                                   "routes": ["Analytic", "Probabilistic"], "values": ["False", "True"]}]


def test_merge_flags_implication_violation():
    rep = merge_verdicts([_v("Geometric", "False", "True")], {})
    assert rep.falsified and rep.implication_violations == ["Geometric"]


def test_headline_prefers_confident_routes_by_priority():
    rep = merge_verdicts([_v("Probabilistic", "False", "False"), _v("Analytic", "Indeterminate", "False")], {})
    assert rep.headline["markov_unique"] is Tri.FALSE
    assert rep.headline["essentially_self_adjoint"] is Tri.FALSE


def test_cross_check_without_monte_carlo():
    rep = cross_check(_point(2), 1.0, 2, probabilistic=None)
    assert not rep.falsified
    assert [v.route for v in rep.verdicts] == ["Analytic", "Geometric"]
    assert all(rep.headline[p] is Tri.TRUE for p in PROPERTIES)
    rec = rep.to_dict()
    assert rec["falsified"] is False and "toolkit_version" in rec


def test_cross_check_with_monte_carlo_records_seed():
    rep = cross_check(_point(1), 1.0, 1, ProbabilisticConfig(trials=3000, seed=11))
    assert rep.seeds == {"probabilistic": 11}
    assert not rep.falsified
    assert rep.headline["markov_unique"] is Tri.TRUE
    assert rep.headline["essentially_self_adjoint"] is Tri.FALSE


# ---------------------------------------------------------------- battery-level invariants

def _battery_groups():
    from esakit.battery import cantor_sweep, finite_battery
    groups = {}
    for alpha, d, v in finite_battery():
        groups.setdefault(("point", d), []).append((alpha, v))
    for alpha, an, geo, _ in cantor_sweep():
        groups.setdefault(("cantor", 1), []).extend([(alpha, an), (alpha, geo)])
    return groups


def test_battery_routes_agree_and_esa_is_monotone_in_alpha():
    for key, rows in _battery_groups().items():
        by_alpha = {}
        for alpha, v in rows:
            assert v.implication_ok
            by_alpha.setdefault(alpha, []).append(v)
        for alpha, vs in by_alpha.items():
            rep = merge_verdicts(vs, {})
            assert not rep.contradictions, (key, alpha)
        # self-adjointness at α forces it at every smaller α (confident verdicts only)
        confident = sorted((a, v.essentially_self_adjoint) for a, v in rows
                           if v.essentially_self_adjoint.confident)
        for (a1, t1), (a2, t2) in zip(confident, confident[1:]):
            assert not (t2 is Tri.TRUE and t1 is Tri.FALSE), (key, a1, a2)
