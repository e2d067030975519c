import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from esakit.levy import (PathConfig, RngStream, brownian_sheet, characteristic_function_table,
                         kanter_variate, sample_stable_increment, sample_subordinator_increment,
                         simulate_path)


# ---------------------------------------------------------------- RNG streams

def test_rng_stream_reproducible_and_distinct():
    a = RngStream(7, 3).generator().random(5)
    assert np.array_equal(a, RngStream(7, 3).generator().random(5))
    assert not np.array_equal(a, RngStream(7, 4).generator().random(5))
    assert not np.array_equal(a, RngStream(8, 3).generator().random(5))
    assert not np.array_equal(a, RngStream(7, 3).child(0).generator().random(5))


def test_rng_stream_validation():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(0, 2 ** 64)
    with pytest.raises(TypeError):
        sample_subordinator_increment(0.5, 1.0, rng=42)


def test_children_look_independent():
    x = RngStream(1).child(0).generator().standard_normal(100_000)
    y = RngStream(1).child(1).generator().standard_normal(100_000)
    assert abs(np.corrcoef(x, y)[0, 1]) < 3 / math.sqrt(len(x))


# ---------------------------------------------------------------- subordinator

def test_subordinator_laplace_transform():
    s = sample_subordinator_increment(0.5, 1.0, RngStream(11), size=1_000_000)
    for lam in (0.5, 1.0, 2.0):
        f = np.exp(-lam * s)
        se = f.std(ddof=1) / math.sqrt(len(f))
        assert abs(f.mean() - math.exp(-math.sqrt(lam))) < 3 * se


def test_subordinator_near_one_is_near_deterministic():
    s = sample_subordinator_increment(0.99, 1.0, RngStream(12), size=200_000)
    assert np.median(s) == pytest.approx(1.0, rel=0.2)


def test_subordinator_scaling_quantiles():
    q = np.linspace(0.1, 0.9, 9)
    dt = 0.3
    a = sample_subordinator_increment(0.6, dt, RngStream(13), size=1_000_000)
    b = dt ** (1 / 0.6) * sample_subordinator_increment(0.6, 1.0, RngStream(14), size=1_000_000)
    assert np.allclose(np.quantile(a, q), np.quantile(b, q), rtol=0.02)


def test_kanter_is_finite_near_beta_one():
    u = np.linspace(1e-6, math.pi - 1e-6, 1001)
    v = kanter_variate(0.999, u, np.ones_like(u))
    assert np.all(np.isfinite(v)) and np.all(v > 0)


def test_subordinator_validation():
    with pytest.raises(ValueError):
        sample_subordinator_increment(1.0, 1.0, RngStream(0))
    with pytest.raises(ValueError):
        sample_subordinator_increment(0.5, 0.0, RngStream(0))


# ---------------------------------------------------------------- stable increments

def test_gaussian_increment_variance():
    v = sample_stable_increment(2, 1.0, 1, RngStream(21), size=1_000_000)
    assert v.var() == pytest.approx(1.0, abs=0.01)


def test_cauchy_characteristic_function():
    rows = characteristic_function_table(alphas=(1.0,), dims=(1,), xis=(0.5, 1.0, 2.0), n_samples=1_000_000)
    for row in rows:
        assert row["exact"] == pytest.approx(math.exp(-row["xi"] / math.sqrt(2)))
        assert row["abs_error"] < 0.01


@pytest.mark.parametrize("alpha", [0.5, 1.3, 2.0])
def test_characteristic_function_at_zero(alpha):
    rows = characteristic_function_table(alphas=(alpha,), dims=(2,), xis=(0.0,), n_samples=1000)
    assert rows[0]["empirical_re"] == 1.0 and rows[0]["abs_error"] == 0.0


@pytest.mark.parametrize("alpha", [0.8, 1.5, 2.0])
def test_stable_scaling_quantiles(alpha):
    c = 5.0
    q = np.linspace(0.1, 0.9, 9)
    a = sample_stable_increment(alpha, c, 1, RngStream(31), size=1_000_000)[:, 0]
    b = c ** (1 / alpha) * sample_stable_increment(alpha, 1.0, 1, RngStream(32), size=1_000_000)[:, 0]
    qa, qb = np.quantile(a, q), np.quantile(b, q)
    # quantiles near the median are close to zero: compare on the scale of the spread
    assert np.max(np.abs(qa - qb)) < 0.02 * (qb[-1] - qb[0])


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_isotropy_in_plane(alpha):
    v = sample_stable_increment(alpha, 1.0, 2, RngStream(41), size=100_000)
    angle = (np.arctan2(v[:, 1], v[:, 0]) + math.pi) / (2 * math.pi)
    assert stats.kstest(angle, "uniform").pvalue > 0.01


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_isotropy_in_space(alpha):
    v = sample_stable_increment(alpha, 1.0, 3, RngStream(42), size=100_000)
    u = v / np.linalg.norm(v, axis=1, keepdims=True)
    # uniform on S²: the height is uniform on [-1, 1] and the azimuth on the circle
    assert stats.kstest((u[:, 2] + 1) / 2, "uniform").pvalue > 0.01
    azimuth = (np.arctan2(u[:, 1], u[:, 0]) + math.pi) / (2 * math.pi)
    assert stats.kstest(azimuth, "uniform").pvalue > 0.01


def test_increment_draws_extend_by_prefix():
    short = sample_stable_increment(1.2, 0.1, 2, RngStream(5), size=100)
    long = sample_stable_increment(1.2, 0.1, 2, RngStream(5), size=300)
    assert np.array_equal(short, long[:100])


def test_stable_increment_validation():
    with pytest.raises(ValueError):
        sample_stable_increment(2.5, 1.0, 1, RngStream(0))
    with pytest.raises(ValueError):
        sample_stable_increment(1.0, -1.0, 1, RngStream(0))


# ---------------------------------------------------------------- paths

@given(alpha=st.sampled_from([0.7, 1.5, 2.0]), seed=st.integers(0, 2 ** 32))
@settings(max_examples=20, deadline=None)
def test_path_starts_at_start_and_is_deterministic(alpha, seed):
    cfg = PathConfig(alpha, 2, 1.0, 0.01, start=(0.3, -1.0))
    p = simulate_path(cfg, RngStream(seed))
    assert p.shape == (101, 2)
    assert tuple(p[0]) == (0.3, -1.0)
    assert np.array_equal(p, simulate_path(cfg, RngStream(seed)))


def test_brownian_path_terminal_variance():
    # coordinates of a Brownian path are independent one-dimensional paths
    cfg = PathConfig(2, 1_000_000, 2.0, 0.5, start=np.ones(1_000_000))
    p = simulate_path(cfg, RngStream(51))
    assert (p[-1] - 1.0).var() == pytest.approx(2.0, rel=0.01)


def test_brownian_disjoint_increments_uncorrelated():
    n = 200_000
    p = simulate_path(PathConfig(2, n, 1.0, 0.25), RngStream(52))
    a, b = p[2] - p[1], p[4] - p[3]
    se = a.std() * b.std() / math.sqrt(n)
    assert abs(np.mean(a * b)) < 3 * se


def test_brownian_max_increment_at_gaussian_scale():
    n, dt = 1000, 1e-3
    cfg = PathConfig(2, 1, n * dt, dt)
    peaks = [np.abs(np.diff(simulate_path(cfg, RngStream(53, i))[:, 0])).max() for i in range(300)]
    assert np.quantile(peaks, 0.99) <= math.sqrt(dt) * (math.sqrt(2 * math.log(2 * n)) + 1.5)


def test_path_config_validation():
    with pytest.raises(ValueError):
        PathConfig(2, 1, 1.0, 2.0)
    with pytest.raises(ValueError):
        PathConfig(2, 2, 1.0, 0.1, start=(0.0,))
    with pytest.raises(ValueError):
        PathConfig(0, 1, 1.0, 0.1)
    assert PathConfig(1.0, 1, 1.0, 0.1).n_steps == 10


# ---------------------------------------------------------------- Brownian sheet

def test_sheet_vanishes_on_axes():
    w = brownian_sheet([0.0, 0.5, 1.0], [0.0, 1.0, 2.0], 3, RngStream(61))
    assert np.all(w[0] == 0.0) and np.all(w[:, 0] == 0.0)


def test_sheet_covariance():
    d = 100_000
    s, t = np.array([0.5, 1.0]), np.array([1.0, 2.0])
    w = brownian_sheet(s, t, d, RngStream(62))
    for i, si in enumerate(s):
        for j, tj in enumerate(t):
            x = w[i, j]
            se = si * tj * math.sqrt(2 / d)
            assert abs(x.var() - si * tj) < 3 * se
    prod = w[1, 0] * w[1, 1]
    assert abs(prod.mean() - 1.0) < 3 * prod.std() / math.sqrt(d)


def test_sheet_rejects_bad_grids():
    with pytest.raises(ValueError):
        brownian_sheet([1.0, 0.5], [1.0], 1, RngStream(0))
    with pytest.raises(ValueError):
        brownian_sheet([-1.0, 0.5], [1.0], 1, RngStream(0))
