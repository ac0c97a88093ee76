#!/usr/bin/env python3
"""
Tests for the deterministic functions of the semi-exponential model.
"""

import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from analytic import (ModelParams, C_ab, K_ab, G, V, V1, V_log, cumulative_hazard, cumulative_hazard_inverse,
                      cvx_bound, cvx_envelope, h, log_tail_nu_bar, marginal_exponent, normalizers,
                      pi_variation, psi, psi_tilde, psi_tilde_exceeding, r_m, scrL, tail_H_bar, tail_nu_bar,
                      truncated_sum_tail_mc)
from subordinator import mittag_leffler_moment
from utils import DomainError, stream_rng
from renewal import StepLaw


def _raises(fn, *args, **kwargs):
    try:
        fn(*args, **kwargs)
    except DomainError:
        return True
    return False


def test_params_validation():
    """Out-of-range parameters are rejected at construction."""
    print("Testing parameter validation...")
    assert _raises(ModelParams, alpha=1.0)
    assert _raises(ModelParams, beta=0.5)
    assert _raises(ModelParams, gamma=0.0)
    assert _raises(ModelParams, x0=0.5)
    assert _raises(ModelParams, L_alpha_kind="power")
    assert _raises(ModelParams, L_alpha_kind="logpower", L_alpha_value=2.0)
    assert _raises(ModelParams, L_value=0.5)
    p = ModelParams.from_dict({'alpha': 0.7, 'ignored': 1})
    assert p.alpha == 0.7 and p.beta == 0.25
    assert ModelParams.from_dict(p.to_dict()) == p
    print("✓ invalid parameters raise DomainError")


def test_tail_closed_form():
    """Under L_α ≡ 1 the tail is exp{−(x^α − 1)/α}."""
    print("\nTesting tail closed form...")
    p = ModelParams()
    assert math.isclose(float(tail_H_bar(4.0, p)), math.exp(-2.0), rel_tol=1e-12)
    assert float(tail_H_bar(1.0, p)) == 1.0
    q = ModelParams(gamma=3.0)
    assert math.isclose(float(tail_nu_bar(9.0, q)), 3.0 * math.exp(-4.0), rel_tol=1e-12)
    assert _raises(cumulative_hazard, 0.5, p)
    # ν̄ at the level the normalizers reach underflows, its log does not
    assert np.isfinite(float(log_tail_nu_bar(1e12, p)))
    print("✓ H̄ and ν̄ match the closed form")


def test_hazard_inverse_round_trip():
    """q^{-1}(q(x)) = x for both slowly varying choices."""
    print("\nTesting cumulative hazard inverse...")
    for p in (ModelParams(), ModelParams(alpha=0.3, L_alpha_value=2.0),
              ModelParams(L_alpha_kind="logpower", L_alpha_value=0.5),
              ModelParams(L_alpha_kind="logpower", L_alpha_value=-0.5)):
        x = np.geomspace(1.0, 1e8, 40)
        back = cumulative_hazard_inverse(cumulative_hazard(x, p), p)
        assert np.allclose(back, x, rtol=1e-8, atol=0.0), p
    assert _raises(cumulative_hazard_inverse, -1.0, ModelParams())
    print("✓ q^{-1}∘q is the identity")


def test_V_inverts_nu_bar():
    """V(1/ν̄(x)) = x and V1 vanishes up to 1/ν̄(x0)."""
    print("\nTesting V and V1...")
    p = ModelParams(alpha=0.7, gamma=2.0)
    x = np.geomspace(1.0, 1e6, 50)
    assert np.allclose(V_log(-log_tail_nu_bar(x, p), p), x, rtol=1e-10, atol=0.0)
    cutoff = 1.0 / float(tail_nu_bar(p.x0, p))
    assert float(V1(0.9 * cutoff, p)) == 0.0
    assert float(V1(cutoff, p)) == 0.0
    assert float(V1(2.0 * cutoff, p)) == float(V(2.0 * cutoff, p)) > p.x0
    assert _raises(V, 0.0, p)
    print("✓ V is the inverse of 1/ν̄ and V1 is truncated at x0")


def test_G_equals_V_above_threshold():
    """Since ν̄ = γH̄, G and V coincide on y ≥ 1/γ."""
    print("\nTesting G...")
    p = ModelParams(gamma=2.0)
    y = np.geomspace(0.5, 1e9, 30)
    assert np.array_equal(G(y, p), V(y, p))
    closed = (1.0 + p.alpha * np.log(p.gamma * y)) ** (1.0 / p.alpha)
    assert np.allclose(G(y, p), closed, rtol=1e-12)
    x = 100.0
    delta = 1e-4
    derivative = float(G(x * math.exp(delta), p) - G(x * math.exp(-delta), p)) / (2.0 * x * math.sinh(delta))
    assert math.isclose(x * derivative, float(h(G(x, p), p)), rel_tol=1e-6)
    print("✓ G agrees with V and x·G′(x) = h(G(x))")


def test_pi_variation_error_form():
    """Under L_α ≡ 1, α = 1/2 the error is (log t)²/(4(1 + log(x)/2)) exactly."""
    print("\nTesting π-variation...")
    p = ModelParams()
    for t, decade in ((0.5, 12), (2.0, 12), (10.0, 12), (10.0, 24)):
        log_x = decade * math.log(10.0)
        expected = math.log(t) ** 2 / (4.0 * (1.0 + log_x / 2.0))
        assert math.isclose(pi_variation(t, log_x, p) - math.log(t), expected, rel_tol=1e-8)
    assert abs(pi_variation(2.0, 12 * math.log(10.0), p) - math.log(2.0)) < 0.05
    assert abs(pi_variation(10.0, 24 * math.log(10.0), p) - math.log(10.0)) < 0.05
    print("✓ π-variation error matches the closed form")


def test_scrL_limit():
    print("\nTesting slowly varying 𝓛...")
    p = ModelParams()
    assert abs(float(scrL(1e6, p)) / 0.25 - 1.0) < 0.01
    log_x = 12 * math.log(10.0)
    ratio = float(V_log(log_x, p)) / (log_x ** 2 * float(scrL(log_x, p)))
    assert math.isclose(ratio, 1.0, rel_tol=1e-12)
    assert _raises(scrL, 0.0, p)
    print("✓ 𝓛(x) → α^{1/α}")


def test_psi_functions():
    """ψ(0) = 1/9, ψ(r_1) = 1 and ψ̃ exceeds r + β."""
    print("\nTesting ψ, ψ̃ and r_m...")
    p = ModelParams()
    assert math.isclose(float(psi(0.0, p)), 0.625 / 0.5625 - 1.0, rel_tol=1e-14)
    r1 = float(r_m(1, p))
    assert abs(float(psi(r1, p)) - 1.0) <= 1e-10
    assert r1 < 0.5 - p.beta
    r = 0.75 * np.linspace(0.001, 0.999, 500)
    assert np.all(np.diff(psi(r, p)) > 0.0)
    assert np.all(psi_tilde(r, p) > r + p.beta)
    assert float(psi_tilde(0.75 - 1e-6, p)) > 1e3
    r_big = psi_tilde_exceeding(1e3, p)
    assert r_big is not None and 0.0 <= r_big < 0.75
    assert float(psi_tilde(r_big, p)) > 1e3
    p6 = ModelParams(alpha=0.6)
    r6 = psi_tilde_exceeding(1e3, p6)
    assert r6 is not None and float(psi_tilde(r6, p6)) > 1e3
    # ε underflows for alpha near 1
    assert psi_tilde_exceeding(1e3, ModelParams(alpha=0.9)) is None
    assert _raises(psi, 0.75, p)
    assert _raises(r_m, 0, p)
    print("✓ ψ properties hold for the default parameters")


def test_constants():
    print("\nTesting limit constants...")
    p = ModelParams()
    assert math.isclose(C_ab(p), 3.0, rel_tol=1e-14)
    assert math.isclose(marginal_exponent(p), 0.75 + 0.25 / 3.0, rel_tol=1e-14)
    K = K_ab(p, mittag_leffler_moment(p.beta, 1.0 / 3.0))
    assert 0.5 < K < 3.0
    assert _raises(K_ab, p, 0.0)
    for a in (0.2, 0.5, 0.8):
        for b in (0.1, 0.3, 0.45):
            assert C_ab(ModelParams(alpha=a, beta=b)) > 1.0
    print("✓ C > 1 and K > 0")


def test_normalizers():
    print("\nTesting normalizers...")
    p = ModelParams()
    law = StepLaw.from_params(p)
    table = normalizers(10000, 0.6, p, law)
    assert table.w_n == law.wandering_rate(10000)
    assert math.isclose(table.a_n, float(h(V(table.w_n, p), p)), rel_tol=1e-14)
    assert math.isclose(table.b_n, float(V(table.w_n, p)) + float(V(0.6 * table.theta_n, p)), rel_tol=1e-14)
    assert float(table.normalize(table.b_n)) == 0.0
    ratios = [normalizers(10 ** e, 0.6, p, law) for e in range(3, 7)]
    ab = [t.a_n / t.b_n for t in ratios]
    assert all(b < a for a, b in zip(ab, ab[1:]))
    assert _raises(normalizers, 1000, 1.5, p, law)
    print("✓ a_n, b_n follow their definitions and a_n/b_n decreases")


def test_truncated_sum_bound():
    print("\nTesting truncated jump sum bound...")
    p = ModelParams()
    prob, se = truncated_sum_tail_mc(p, 10.0, 2, 15.0, 50000, stream_rng(7, 1))
    assert prob <= cvx_bound(p, 10.0, 1, 15.0) + 3.0 * se
    assert _raises(cvx_envelope, p, 10.0, 1, 25.0)
    print("✓ Monte Carlo tail stays under the explicit bound")


def main():
    """Run all tests."""
    print("Analytic functions - Tests")
    print("=" * 40)

    tests = [
        test_params_validation,
        test_tail_closed_form,
        test_hazard_inverse_round_trip,
        test_V_inverts_nu_bar,
        test_G_equals_V_above_threshold,
        test_pi_variation_error_form,
        test_scrL_limit,
        test_psi_functions,
        test_constants,
        test_normalizers,
        test_truncated_sum_bound,
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
