"""Chebyshev traces, mixed moment estimation, exact linearization, cumulants."""

from fractions import Fraction

import numpy as np
import pytest
from scipy.special import eval_chebyu

from markovband._util import ValidationError
from markovband.chebyshev import (
    EXACT_COEFF_LIMIT,
    MomentRequest,
    chebyshev_trace,
    chebyshev_trace_eigen,
    chebyshev_u_scalar,
    cumulant_table,
    cumulants_from_moments,
    linearize_power,
    mixed_chebyshev_moment,
    moments_from_cumulants,
    sinc_order_for_scale,
    sinc_statistic,
)
from markovband.special import sinc_test_function


def _random_symmetric(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    return (a + a.T) / np.sqrt(2 * n)


# ---------------------------------------------------------------- traces


def test_u_scalar_matches_scipy():
    y = np.linspace(-1.2, 1.2, 25)
    for n in range(9):
        assert np.max(np.abs(chebyshev_u_scalar(n, y) - eval_chebyu(n, y))) <= 1e-10


@pytest.mark.parametrize("n", [0, 1, 2, 5, 9])
def test_trace_routes_agree(n):
    x = _random_symmetric(40, seed=1)
    assert chebyshev_trace(x, n) == pytest.approx(chebyshev_trace_eigen(x, n), abs=1e-9)


def test_trace_is_half_argument_convention():
    x = _random_symmetric(30, seed=2)
    eigs = np.linalg.eigvalsh(x)
    for n in (2, 4, 7):
        direct = eval_chebyu(n, eigs / 2.0).sum()
        assert chebyshev_trace(x, n) == pytest.approx(direct, abs=1e-9)


# ---------------------------------------------------------------- moments


def test_mixed_moment_on_a_deterministic_ensemble():
    x = _random_symmetric(24, seed=3)
    request = MomentRequest(orders=(2, 3), trials=5, seed=0, ensemble=lambda rng: x)
    est = mixed_chebyshev_moment(request)
    expected = chebyshev_trace(x, 2) * chebyshev_trace(x, 3)
    assert est.value == pytest.approx(expected, rel=1e-12)
    assert est.stderr == 0.0
    assert est.trials == 5


def test_mixed_moment_is_seed_reproducible():
    def ensemble(rng):
        return _random_symmetric(16, seed=int(rng.integers(1 << 31)))

    a = mixed_chebyshev_moment(MomentRequest((4,), 30, 7, ensemble))
    b = mixed_chebyshev_moment(MomentRequest((4,), 30, 7, ensemble))
    c = mixed_chebyshev_moment(MomentRequest((4,), 30, 8, ensemble))
    assert a.value == b.value and a.stderr == b.stderr
    assert a.value != c.value


def test_mixed_moment_rejects_empty_orders():
    with pytest.raises(ValidationError):
        mixed_chebyshev_moment(MomentRequest((), 5, 0, lambda rng: np.eye(2)))


# ---------------------------------------------------------------- linearization


def test_linearize_power_smallest_case_is_exact():
    assert linearize_power(1, 2) == {0: Fraction(1, 4), 2: Fraction(3, 4)}


def test_linearize_power_total_mass_is_one():
    for m, t in ((2, 2), (3, 3), (6, 4)):
        coeffs = linearize_power(m, t)
        assert sum(coeffs.values()) == 1


@pytest.mark.parametrize("m,t", [(3, 3), (6, 2), (4, 4)])
def test_linearize_power_reproduces_the_product_pointwise(m, t):
    coeffs = linearize_power(m, t)
    y = np.linspace(-0.99, 0.99, 41)
    lhs = (chebyshev_u_scalar(m, y) / (m + 1)) ** t
    rhs = np.zeros_like(y)
    for k, c in coeffs.items():
        rhs += float(c) * chebyshev_u_scalar(k, y) / (k + 1)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


def test_linearize_power_perturbed_variant_pointwise():
    m, t = 4, 3
    coeffs = linearize_power(m, t, perturbed=True)
    y = np.linspace(-0.99, 0.99, 41)
    lhs = (chebyshev_u_scalar(m - 1, y) / m) * (chebyshev_u_scalar(m, y) / (m + 1)) ** (t - 1)
    rhs = np.zeros_like(y)
    for k, c in coeffs.items():
        rhs += float(c) * chebyshev_u_scalar(k, y) / (k + 1)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


def test_linearize_power_parity_structure():
    for m in (2, 5, 10):
        for t in (2, 3, 4):
            for k in linearize_power(m, t):
                assert (k - m * t) % 2 == 0


def test_linearize_power_switches_to_floats_past_the_exact_limit():
    small = linearize_power(4, EXACT_COEFF_LIMIT // 4)
    assert all(isinstance(c, Fraction) for c in small.values())
    big = linearize_power(5, 13)  # 65 > EXACT_COEFF_LIMIT
    assert all(isinstance(c, float) for c in big.values())
    assert sum(big.values()) == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------- cumulants


def test_pair_cumulant_is_the_covariance():
    m = {frozenset({1}): 2.0, frozenset({2}): 3.0, frozenset({1, 2}): 6.5}
    assert cumulants_from_moments(m) == pytest.approx(0.5)


def test_independent_blocks_have_zero_mixed_cumulant():
    mx, my = 1.7, -0.4
    mxx, myy = 4.0, 1.0
    m = {
        frozenset({1}): mx,
        frozenset({2}): my,
        frozenset({1, 2}): mx * my,
    }
    assert cumulants_from_moments(m) == pytest.approx(0.0, abs=1e-14)


def test_cumulant_moment_round_trip():
    m = {
        frozenset({1}): 1.0,
        frozenset({2}): 1.0,
        frozenset({3}): 1.0,
        frozenset({1, 2}): 2.0,
        frozenset({1, 3}): 2.0,
        frozenset({2, 3}): 2.0,
        frozenset({1, 2, 3}): 5.0,
    }
    kappa = cumulant_table(m)
    assert kappa[frozenset({1, 2, 3})] == pytest.approx(1.0)
    back = moments_from_cumulants(kappa)
    for key, value in m.items():
        assert back[key] == pytest.approx(value, abs=1e-12)


# ---------------------------------------------------------------- sinc statistic


def test_sinc_statistic_matches_a_direct_sum():
    s_N = 0.1
    samples = [np.array([2.0, 1.0]), np.array([2.0, 1.0])]
    est = sinc_statistic(samples, 4, 4.0, s_N)
    direct = sinc_test_function(4, 4.0, (samples[0] - 2.0) / s_N).sum()
    assert est.value == pytest.approx(direct, rel=1e-12)
    assert est.stderr == 0.0
    assert est.trials == 2


def test_sinc_statistic_stderr_scales_with_spread():
    samples = [np.array([2.0]), np.array([2.2]), np.array([1.8])]
    est = sinc_statistic(samples, 4, 4.0, 0.5)
    assert est.stderr > 0.0


def test_sinc_order_for_scale():
    assert sinc_order_for_scale(4.0, 0.04) == 20
    assert sinc_order_for_scale(0.1, 1.0) == 1  # floors at 1
    with pytest.raises(ValidationError):
        sinc_order_for_scale(1.0, 0.0)
