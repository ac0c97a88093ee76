#!/usr/bin/env python3
"""
Tests for capacities and the intersection constant c_∞.
"""

import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from capacity import (c_infty_series, capacity, capacity_exact, capacity_ratio, escape_probability,
                      escape_probability_exact, estimate_c_infty, gap_decoupling, truncation_displacement)
from utils import DomainError, stream_rng
from renewal import StepLaw


def test_small_sets_exact():
    print("Testing exact capacity of small sets...")
    law = StepLaw(0.25)
    u = law.renewal_sequence(100)
    assert capacity_exact([], law) == 0.0
    assert capacity_exact([7], law) == 1.0
    for d in (1, 3, 40):
        assert math.isclose(capacity_exact([0, d], law), 2.0 - u[d], rel_tol=1e-12)
        assert math.isclose(escape_probability_exact([5, 5 + d], 5, law), 1.0 - u[d], rel_tol=1e-12)
    assert escape_probability_exact([2, 9], 9, law) == 1.0
    # translation invariance
    assert math.isclose(capacity_exact([0, 2, 9, 30], law), capacity_exact([100, 102, 109, 130], law))
    print("✓ empty, singleton and two-point sets")


def test_capacity_monotone_and_subadditive():
    print("\nTesting capacity bounds...")
    law = StepLaw(0.25)
    A = [0, 1, 4, 10, 25, 60]
    B = A + [80, 81]
    cap_a, cap_b = capacity_exact(A, law), capacity_exact(B, law)
    assert 1.0 <= cap_a <= len(A)
    assert cap_a <= cap_b <= cap_a + capacity_exact([80, 81], law) + 1e-12
    print(f"✓ cap(A) = {cap_a:.4f} ≤ cap(B) = {cap_b:.4f}")


def test_monte_carlo_capacity():
    print("\nTesting Monte Carlo capacity...")
    law = StepLaw(0.25)
    A = [0, 1, 3, 7, 20, 50]
    exact = capacity_exact(A, law)
    for rebalance in (True, False):
        estimate = capacity(A, law, 4000, stream_rng(40, int(rebalance)), rebalance=rebalance)
        assert abs(estimate.value - exact) <= 4.0 * estimate.se + 1e-3, (rebalance, estimate, exact)
        lo, hi = estimate.interval(6.0)
        assert lo <= exact <= hi + 1e-3
    single = capacity([3], law, 100, stream_rng(41))
    assert single.value == 1.0 and single.se == 0.0
    p, se = escape_probability([0, 4], 0, law, 20000, stream_rng(42))
    assert abs(p - escape_probability_exact([0, 4], 0, law)) <= 4.0 * se
    assert escape_probability([0, 4], 4, law, 10, stream_rng(42)) == (1.0, 0.0)
    print("✓ Monte Carlo capacity matches the triangular solve")


def test_capacity_domain():
    print("\nTesting capacity domain errors...")
    law = StepLaw(0.25)
    cases = [
        lambda: capacity([], law, 10, stream_rng(43)),
        lambda: escape_probability([0, 4], 2, law, 10, stream_rng(43)),
        lambda: escape_probability_exact([0, 4], 2, law),
        lambda: capacity_ratio(law, 999, 10, stream_rng(43)),
        lambda: estimate_c_infty(law, 999, 10, stream_rng(43)),
        lambda: gap_decoupling(5000, law, 0.0, stream_rng(43)),
    ]
    for case in cases:
        try:
            case()
            raise AssertionError("invalid input accepted")
        except DomainError:
            pass
    print("✓ invalid inputs raise DomainError")


def test_series_constant():
    """c_∞ = 1/Σu(m)², with the power-law tail of the sum added."""
    print("\nTesting c_∞ series...")
    law = StepLaw(0.25)
    series = c_infty_series(law)
    assert 0.0 < series < 1.0
    u = law.renewal_sequence(2 ** 16)
    truncated = 1.0 / float(np.sum(u ** 2))
    assert series < truncated
    assert abs(series / truncated - 1.0) < 0.05
    print(f"✓ c_∞ ≈ {series:.4f}")


def test_truncation_displacement():
    print("\nTesting truncation displacement...")
    law = StepLaw(0.25)
    M = truncation_displacement(law)
    assert M >= 1000
    assert truncation_displacement(law, 1e-6) >= M
    print(f"✓ M = {M}")


def test_routes_against_series():
    """Both Monte Carlo routes land near the series value."""
    print("\nTesting c_∞ routes...")
    law = StepLaw(0.25)
    estimates = estimate_c_infty(law, 20000, 3000, stream_rng(44), tol=1e-2)
    for route in (estimates.intersection, estimates.capacity_ratio):
        assert 0.0 < route.value < 1.0
        assert abs(route.value - estimates.series) <= 4.0 * route.se + 0.05, (route, estimates.series)
    print(f"✓ routes {estimates.intersection.value:.3f} and {estimates.capacity_ratio.value:.3f}, "
          f"series {estimates.series:.3f}")


def test_gap_decoupling():
    print("\nTesting capacity decoupling across a gap...")
    law = StepLaw(0.25)
    defect = gap_decoupling(5000, law, 2.0, stream_rng(45))
    assert 0.0 <= defect <= 1.0
    print(f"✓ defect per point {defect:.4f}")


def main():
    """Run all tests."""
    print("Capacity - Tests")
    print("=" * 40)

    tests = [
        test_small_sets_exact,
        test_capacity_monotone_and_subadditive,
        test_monte_carlo_capacity,
        test_capacity_domain,
        test_series_constant,
        test_truncation_displacement,
        test_routes_against_series,
        test_gap_decoupling,
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
