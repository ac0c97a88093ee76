#!/usr/bin/env python3
"""
Tests for stable subordinators, their inverses and regenerative set samples.
"""

import math
import os
import sys

import numpy as np
from scipy import special

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from limit import expected_shifted_inverse
from stats import EmpiricalDistribution, ks_threshold, ks_threshold_two_sample
from subordinator import (SubordinatorPath, epsilon_net, first_passage, ml_fractional_moment,
                          mittag_leffler_moment, sample_J_points, sample_inverse_at,
                          sample_inverse_at_one, sample_regenerative, sample_stable,
                          sample_shift_start, shift_start_from_uniform)
from utils import DegeneratePath, DomainError, PathExhausted, stream_rng


def test_stable_laplace_transform():
    """E e^{−θS} = exp{−scale·θ^β}."""
    print("Testing stable Laplace transform...")
    rng = stream_rng(11, 0)
    for beta, scale in ((0.25, 1.0), (0.6, 2.0)):
        s = sample_stable(beta, scale, rng, 200000)
        assert np.all(s > 0.0)
        for theta in (0.5, 1.0, 3.0):
            empirical = float(np.exp(-theta * s).mean())
            assert abs(empirical - math.exp(-scale * theta ** beta)) < 0.006, (beta, theta, empirical)
    print("✓ Laplace transform matches for β = 0.25 and 0.6")


def test_stable_half_cdf():
    """At β = 1/2 the law is Lévy with CDF erfc(1/(2√s))."""
    print("\nTesting β = 1/2 distribution...")
    sample = EmpiricalDistribution(sample_stable(0.5, 1.0, stream_rng(12, 0), 20000))
    distance = sample.ks_distance(lambda s: special.erfc(0.5 / np.sqrt(s)))
    assert distance < ks_threshold(sample.n, 0.001), distance
    print(f"✓ KS distance {distance:.4f}")


def test_stable_domain():
    print("\nTesting stable domain errors...")
    rng = stream_rng(1)
    for beta, scale in ((0.0, 1.0), (1.0, 1.0), (0.5, 0.0)):
        try:
            sample_stable(beta, scale, rng, 3)
            raise AssertionError(f"accepted beta={beta}, scale={scale}")
        except DomainError:
            pass
    print("✓ invalid β and scale raise DomainError")


def test_first_passage_handcrafted():
    print("\nTesting first passage on a fixed path...")
    path = SubordinatorPath(beta=0.5, grid=np.array([0.0, 1.0, 2.0]), values=np.array([0.0, 1.0, 3.0]))
    assert first_passage(path, 2.0) == 1.5
    assert first_passage(path, 0.5) == 0.5
    assert np.allclose(path.first_passage(np.array([0.5, 2.0])), [0.5, 1.5])
    shifted = SubordinatorPath(beta=0.5, grid=np.array([0.0, 1.0, 2.0]),
                               values=np.array([0.3, 1.0, 3.0]), shift=0.3)
    assert first_passage(shifted, 0.1) == 0.0
    try:
        first_passage(path, 3.0)
        raise AssertionError("level at the path end accepted")
    except PathExhausted:
        pass
    print("✓ interpolation, shifted start and exhaustion")


def test_shift_start():
    """P{Z*(0) ≤ x} = x^{1−β}."""
    print("\nTesting shifted start...")
    beta = 0.25
    x = np.array([0.01, 0.2, 0.5, 0.9])
    assert np.allclose(shift_start_from_uniform(x ** (1.0 - beta), beta), x, rtol=1e-12)
    assert shift_start_from_uniform(0.0, beta) == 0.0
    draws = EmpiricalDistribution(sample_shift_start(beta, stream_rng(19), 20000))
    assert draws.ks_distance(lambda x: np.clip(x, 0.0, 1.0) ** (1.0 - beta)) < ks_threshold(draws.n, 0.001)
    print("✓ inverse transform of x^{1−β}")


def test_inverse_at_one_moments():
    print("\nTesting exact inverse draws...")
    beta = 0.25
    unshifted = sample_inverse_at_one(beta, stream_rng(13, 0), 100000)
    shifted = sample_inverse_at_one(beta, stream_rng(13, 1), 100000, shifted=True)
    mean, se = unshifted.mean(), unshifted.std(ddof=1) / math.sqrt(unshifted.size)
    assert abs(mean - 1.0 / special.gamma(1.0 + beta)) < 4.0 * se
    mean, se = shifted.mean(), shifted.std(ddof=1) / math.sqrt(shifted.size)
    assert abs(mean - expected_shifted_inverse(beta)) < 4.0 * se
    assert np.all(shifted > 0.0)
    print("✓ E Z^←(1) and E Z*^←(1) match their closed forms")


def test_path_inverse_matches_exact():
    """First passage of simulated paths agrees in law with S^{−β}."""
    print("\nTesting simulated paths against exact draws...")
    beta = 0.25
    paths = EmpiricalDistribution(sample_inverse_at(beta, [1.0], 800, stream_rng(14, 0))[:, 0])
    exact = EmpiricalDistribution(sample_inverse_at_one(beta, stream_rng(14, 1), 800))
    distance = paths.ks_two_sample(exact)
    assert distance < ks_threshold_two_sample(800, 800, 0.001), distance
    print(f"✓ two-sample KS {distance:.4f}")


def test_ml_moments():
    print("\nTesting Mittag-Leffler moments...")
    assert mittag_leffler_moment(0.3, 0.0) == 1.0
    assert math.isclose(mittag_leffler_moment(0.5, 2.0), 2.0 / special.gamma(2.0), rel_tol=1e-12)
    for q in (1.0 / 3.0, 1.0, 2.0):
        estimate = ml_fractional_moment(0.25, q, 100000, stream_rng(15, int(q * 3)))
        assert estimate.within(4.0), (q, estimate)
    try:
        ml_fractional_moment(0.25, -1.0, 10, stream_rng(15))
        raise AssertionError("negative moment accepted")
    except DomainError:
        pass
    print("✓ fractional moments within four standard errors")


def test_epsilon_net():
    print("\nTesting ε-net...")
    points = np.sort(stream_rng(16).random(5000))
    net = epsilon_net(points, 0.01)
    assert net.size < points.size
    assert np.all(np.isin(net, points))
    nearest = np.abs(points[:, None] - net[None, :]).min(axis=1)
    assert nearest.max() <= 0.005
    assert epsilon_net(np.array([]), 0.01).size == 0
    print(f"✓ {net.size} points cover the sample at ε/2")


def test_regenerative_sample():
    print("\nTesting regenerative set samples...")
    beta = 0.25
    for key in range(5):
        s = sample_regenerative(beta, 0.005, True, stream_rng(17, key), dt=1e-3)
        assert 0.0 <= s.shift < 1.0
        assert np.all((s.hits >= s.shift) & (s.hits <= 1.0))
        assert math.isclose(float(s.eta(1.0)), 1.0, rel_tol=1e-12)
        eta = s.eta(np.linspace(0.0, 1.0, 50))
        assert np.all(np.diff(eta) >= 0.0)
        try:
            j = sample_J_points(s, 20, stream_rng(18, key))
        except DegeneratePath:
            continue
        assert np.all((j >= 0.0) & (j <= 1.0))
    for epsilon in (0.0, 0.02):
        try:
            sample_regenerative(beta, epsilon, False, stream_rng(19))
            raise AssertionError(f"epsilon {epsilon} accepted")
        except DomainError:
            pass
    print("✓ hits, η and J points stay in [0, 1]")


def test_determinism():
    print("\nTesting seeded determinism...")
    a = sample_regenerative(0.25, 0.01, True, stream_rng(20, 3), dt=1e-3)
    b = sample_regenerative(0.25, 0.01, True, stream_rng(20, 3), dt=1e-3)
    assert np.array_equal(a.hits, b.hits) and a.inv_at_1 == b.inv_at_1
    c = sample_regenerative(0.25, 0.01, True, stream_rng(20, 4), dt=1e-3)
    assert c.inv_at_1 != a.inv_at_1
    print("✓ equal keys give equal samples")


def main():
    """Run all tests."""
    print("Subordinator - Tests")
    print("=" * 40)

    tests = [
        test_stable_laplace_transform,
        test_stable_half_cdf,
        test_stable_domain,
        test_first_passage_handcrafted,
        test_shift_start,
        test_inverse_at_one_moments,
        test_path_inverse_matches_exact,
        test_ml_moments,
        test_epsilon_net,
        test_regenerative_sample,
        test_determinism,
    ]

    passed = 0
    for test in tests:
        try:
            test()
            passed += 1
        except Exception as e:
            print(f"✗ {test.__name__} failed: {e!r}")

    print(f"\n{'='*40}")
    print(f"Tests passed: {passed}/{len(tests)}")
    return 0 if passed == len(tests) else 1


if __name__ == "__main__":
    sys.exit(main())
