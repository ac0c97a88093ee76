#!/usr/bin/env python3
"""
Tests for realizations of the stationary process and their sup-measures.
"""

import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from analytic import ModelParams, normalizers
from process import (NEG_INF, ProcessOptions, decomposed_maxima, normalized_max_sample, running_max,
                     sample_marginal, simulate_process, sup_measure, sup_measure_union)
from renewal import StepLaw
from utils import DomainError, stream_rng

PARAMS = ModelParams()
LAW = StepLaw.from_params(PARAMS)


def test_sparse_matches_dense():
    print("Testing sparse and dense values...")
    r = simulate_process(500, LAW, PARAMS, stream_rng(50))
    dense = r.dense_values()
    assert dense.size == 501
    assert np.array_equal(dense[r.support], r.support_values)
    outside = np.setdiff1d(np.arange(501), r.support)
    assert np.all(dense[outside] == 0.0)
    assert np.all(r.support_values > PARAMS.x0)
    assert np.all(np.diff(r.gammas) >= 0.0)
    t = int(r.support[0])
    assert r.value_at(t) == dense[t]
    print(f"✓ {len(r.zero_sets)} arrivals, {r.support.size} support points")


def test_sup_measure_cases():
    print("\nTesting sup-measure...")
    r = simulate_process(500, LAW, PARAMS, stream_rng(51))
    dense = r.dense_values()
    assert sup_measure(r, (0.0, 1.0)) == dense.max()
    assert sup_measure(r, (0.2, 0.3)) == dense[100:151].max()
    # no integer in n·B
    assert sup_measure(r, (0.0011, 0.0019)) == NEG_INF
    assert sup_measure_union(r, [(0.0, 0.1), (0.5, 1.0)]) == max(dense[:51].max(), dense[250:].max())
    try:
        sup_measure(r, (0.6, 0.4))
        raise AssertionError("reversed interval accepted")
    except DomainError:
        pass
    print("✓ sup-measure agrees with the dense path")


def test_degenerate_realization():
    """With x0 far out no arrival survives and X ≡ 0."""
    print("\nTesting degenerate realization...")
    p = ModelParams(x0=400.0)
    r = simulate_process(200, LAW, p, stream_rng(52))
    assert r.degenerate and r.support.size == 0
    assert sup_measure(r, (0.0, 1.0)) == 0.0
    assert np.all(running_max(r, [0.0, 0.5, 1.0]) == 0.0)
    assert r.value_at(10) == 0.0
    print("✓ empty support gives zero maxima")


def test_running_max():
    print("\nTesting running maximum...")
    r = simulate_process(400, LAW, PARAMS, stream_rng(53))
    grid = np.linspace(0.0, 1.0, 41)
    values = running_max(r, grid)
    assert np.all(np.diff(values) >= 0.0)
    dense = r.dense_values()
    for t, v in zip(grid, values):
        assert v == dense[:int(round(t * 400)) + 1].max()
    try:
        running_max(r, [1.5])
        raise AssertionError("grid outside [0, 1] accepted")
    except DomainError:
        pass
    print("✓ 𝕄_n is the prefix maximum")


def test_noise_option():
    print("\nTesting compound-Poisson noise...")
    options = ProcessOptions(noise_rate=0.5, noise_bound=2.0)
    r = simulate_process(300, LAW, PARAMS, stream_rng(54), options)
    dense = r.dense_values()
    assert r.noise is not None and np.all(r.noise >= 0.0)
    assert np.all(dense >= r.noise)
    assert sup_measure(r, (0.0, 1.0)) == dense.max()
    assert r.value_at(17) == dense[17]
    assert np.array_equal(running_max(r, [1.0]), [dense.max()])
    print("✓ noisy realizations stay consistent")


def test_decomposed_maxima():
    print("\nTesting decomposed maxima...")
    r = simulate_process(2000, LAW, PARAMS, stream_rng(55))
    table = normalizers(2000, 0.6, PARAMS, LAW)
    record = decomposed_maxima(r, (0.0, 1.0), 3, 2, table)
    assert record.raw == sup_measure(r, (0.0, 1.0))
    assert math.isclose(record.normalized, (record.raw - table.b_n) / table.a_n)
    assert len(record.per_k) == 3 and len(record.per_ki) == 6
    assert all(v <= record.raw for v in record.per_k)
    assert all(v <= record.raw for v in record.per_ki.values())
    assert record.upto_K == max(record.per_k)
    # the first set is never covered, so its maximum is its own height or more
    assert record.per_k[0] >= r.heights[0]
    try:
        decomposed_maxima(r, (0.0, 1.0), 0, 1)
        raise AssertionError("K = 0 accepted")
    except DomainError:
        pass
    print("✓ decomposed maxima are bounded by the raw maximum")


def test_normalized_sample_deterministic():
    print("\nTesting normalized maxima...")
    intervals = [(0.0, 1.0), (0.0, 0.5)]
    rows_a, rows_b = [], []
    first = normalized_max_sample(300, PARAMS, 6, intervals, 9, 0.6, LAW, rows=rows_a)
    second = normalized_max_sample(300, PARAMS, 6, intervals, 9, 0.6, LAW, rows=rows_b)
    assert rows_a == rows_b and len(rows_a) == 12
    for B in intervals:
        assert np.array_equal(first[B].sorted_sample, second[B].sorted_sample)
    assert np.all(first[(0.0, 0.5)].sorted_sample <= first[(0.0, 1.0)].sorted_sample.max())
    # a later batch continues the streams instead of repeating them
    later = normalized_max_sample(300, PARAMS, 3, intervals, 9, 0.6, LAW, rep_offset=3)
    tail = sorted(row[5] for row in rows_a if row[2] >= 3 and row[3] == "[0.0,1.0]")
    assert np.allclose(later[(0.0, 1.0)].sorted_sample, tail)
    print("✓ seeded per-rep streams are reproducible")


def test_marginal_law():
    """X_0 is compound Poisson: P{X_0 = 0} = e^{−ν̄(x0)} and E X_0 = 2.5 for the defaults."""
    print("\nTesting stationary marginal...")
    draws = sample_marginal(PARAMS, 100000, stream_rng(56))
    assert np.all(draws >= 0.0)
    zero = np.mean(draws == 0.0)
    assert abs(zero - math.exp(-1.0)) < 4.0 * math.sqrt(math.exp(-1.0) * (1 - math.exp(-1.0)) / draws.size)
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - 2.5) < 4.0 * se
    from_paths = np.array([simulate_process(40, LAW, PARAMS, stream_rng(57, rep)).value_at(0)
                           for rep in range(3000)])
    assert abs(np.mean(from_paths == 0.0) - math.exp(-1.0)) < 0.04
    print(f"✓ P(X_0 = 0) = {zero:.4f}, mean {draws.mean():.3f}")


def main():
    """Run all tests."""
    print("Process - Tests")
    print("=" * 40)

    tests = [
        test_sparse_matches_dense,
        test_sup_measure_cases,
        test_degenerate_realization,
        test_running_max,
        test_noise_option,
        test_decomposed_maxima,
        test_normalized_sample_deterministic,
        test_marginal_law,
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
