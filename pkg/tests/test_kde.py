"""Kernel density estimation."""

import numpy as np
import pytest

from arffkit.exceptions import DegenerateDataError
from arffkit.kde import KdeEstimate, kde, silverman_bandwidth


def test_silverman_reference_value():
    # samples [0, 1]: std (ddof=1) = sqrt(0.5), IQR/1.34 = 0.5/1.34 wins,
    # h = 0.9 * (0.5/1.34) * 2^(-1/5)
    assert silverman_bandwidth(np.array([0.0, 1.0])) == pytest.approx(
        0.29234906976362374, abs=1e-15)


def test_silverman_positive_and_shrinks_with_n():
    rng = np.random.default_rng(0)
    # heavy tails make the IQR branch the winner, so repeating samples
    # changes only the n^(-1/5) factor (the ddof=1 std moves slightly)
    base = rng.standard_cauchy(100)
    h100 = silverman_bandwidth(base)
    h10000 = silverman_bandwidth(np.repeat(base, 100))
    assert h100 > 0
    assert h10000 < h100
    assert h10000 == pytest.approx(h100 * 100 ** (-0.2), rel=1e-12)


def test_silverman_zero_spread_fallback():
    h = silverman_bandwidth(np.full(50, 3.0))
    assert h == pytest.approx(1e-3 * 3.0)
    assert silverman_bandwidth(np.zeros(50)) == pytest.approx(1e-3)


def test_silverman_needs_two_samples():
    with pytest.raises(DegenerateDataError):
        silverman_bandwidth(np.array([1.0]))


def test_kde_recovers_normal_density():
    rng = np.random.default_rng(3)
    samples = rng.standard_normal(100_000)
    grid = np.linspace(-4, 4, 401)
    est = kde(samples, grid)
    truth = np.exp(-0.5 * grid * grid) / np.sqrt(2 * np.pi)
    assert np.abs(est.density - truth).max() < 0.02
    assert est.integral() == pytest.approx(1.0, abs=5e-3)
    assert est.bandwidth > 0
    assert isinstance(est, KdeEstimate)


def test_kde_mean_of_bumps_exact_small_case():
    # two samples, explicit bandwidth: density is the average of two Gaussians
    samples = np.array([-1.0, 1.0])
    grid = np.linspace(-3, 3, 61)
    h = 0.5
    est = kde(samples, grid, bandwidth=h)
    bump = lambda c: np.exp(-0.5 * ((grid - c) / h) ** 2) / (h * np.sqrt(2 * np.pi))
    assert np.allclose(est.density, 0.5 * (bump(-1.0) + bump(1.0)), atol=1e-12)


def test_kde_constant_samples_peak_at_value():
    grid = np.linspace(2.0, 4.0, 201)
    est = kde(np.full(500, 3.0), grid)
    assert grid[np.argmax(est.density)] == pytest.approx(3.0, abs=0.02)
    # symmetric around the atom
    left = est.density[: 100]
    right = est.density[101:][::-1]
    assert np.allclose(left, right, rtol=1e-10)


def test_kde_wider_bandwidth_lowers_peak():
    rng = np.random.default_rng(11)
    samples = rng.standard_normal(2000)
    grid = np.linspace(-5, 5, 301)
    narrow = kde(samples, grid, bandwidth=0.1)
    wide = kde(samples, grid, bandwidth=1.0)
    assert wide.density.max() < narrow.density.max()
    assert wide.integral() == pytest.approx(1.0, abs=2e-2)


def test_kde_axis_tag_carried():
    est = kde(np.array([0.0, 1.0]), np.linspace(-2, 3, 11), axis=1)
    assert est.axis == 1
