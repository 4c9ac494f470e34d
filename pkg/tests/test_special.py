"""Stable densities, their periodizations, Skellam factors, edge reference laws."""

import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import levy_stable

from markovband._util import ValidationError
from markovband.special import (
    EULER_GAMMA,
    default_scale,
    limit_coeff,
    reference_cdf,
    reference_moments,
    sinc_test_function,
    skellam_kernel,
    stable_density,
    theta_alpha,
    theta_upper_bound_C,
)

from oracles import gumbel_cdf, painleve_edge_laws, skellam_direct


# ---------------------------------------------------------------- theta


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0])
@pytest.mark.parametrize("tau", [0.05, 0.5, 5.0])
def test_theta_routes_agree(alpha, tau):
    x = np.linspace(0.0, 1.0, 33, endpoint=False)
    spatial = theta_alpha(alpha, x, tau, route="spatial")
    frequency = theta_alpha(alpha, x, tau, route="frequency")
    assert np.max(np.abs(spatial - frequency)) <= 1e-10


@pytest.mark.parametrize("alpha", [1.0, 1.6, 2.0])
def test_theta_is_a_probability_density(alpha):
    # Riemann sum over a uniform grid kills every cosine mode the
    # frequency series keeps, so the sum collapses to the constant term.
    L = 128
    x = np.arange(L) / L
    mass = theta_alpha(alpha, x, 0.8).sum() / L
    assert abs(mass - 1.0) <= 1e-9


def test_theta_matches_gaussian_image_sum():
    # Gaussian summands decay fast enough for brute-force periodization
    tau = 0.3
    x = np.linspace(0.0, 1.0, 17, endpoint=False)
    images = sum(stable_density(2.0, x + k, tau) for k in range(-60, 61))
    assert np.max(np.abs(theta_alpha(2.0, x, tau) - images)) <= 1e-10


def test_theta_matches_wrapped_cauchy_closed_form():
    # sum_k gamma / (pi (gamma^2 + (x+k)^2)) has an exact sinh/cosh form
    tau = 0.2
    gamma = default_scale(1.0) * tau
    x = np.linspace(0.0, 1.0, 17, endpoint=False)
    closed = np.sinh(2.0 * np.pi * gamma) / (
        np.cosh(2.0 * np.pi * gamma) - np.cos(2.0 * np.pi * x)
    )
    assert np.max(np.abs(theta_alpha(1.0, x, tau) - closed)) <= 5e-12


def test_theta_upper_bound_holds():
    for alpha in (1.0, 1.5, 2.0):
        C = theta_upper_bound_C(alpha)
        for tau in (0.01, 0.1, 1.0, 10.0):
            x = np.linspace(0.0, 1.0, 64, endpoint=False)
            assert theta_alpha(alpha, x, tau).max() <= C * (1.0 + tau ** (-1.0 / alpha))


# ---------------------------------------------------------------- stable density


def test_stable_density_gaussian_closed_form():
    tau, c = 1.7, default_scale(2.0)
    var = 2.0 * c * tau
    x = np.linspace(-4.0, 4.0, 41)
    expected = np.exp(-(x**2) / (2.0 * var)) / np.sqrt(2.0 * np.pi * var)
    assert np.max(np.abs(stable_density(2.0, x, tau) - expected)) <= 1e-12


def test_stable_density_cauchy_closed_form():
    tau = 0.9
    gamma = default_scale(1.0) * tau
    x = np.linspace(-6.0, 6.0, 41)
    expected = gamma / (np.pi * (gamma**2 + x**2))
    assert np.max(np.abs(stable_density(1.0, x, tau) - expected)) <= 1e-12


def test_stable_density_generic_alpha_against_scipy():
    alpha, tau, c = 1.5, 0.7, 1.0
    sigma = (c * tau) ** (1.0 / alpha)
    x = np.array([-3.0, -1.0, -0.2, 0.0, 0.6, 2.5])
    ours = stable_density(alpha, x, tau, scale=c)
    ref = levy_stable.pdf(x, alpha, 0.0, loc=0.0, scale=sigma)
    assert np.max(np.abs(ours - ref)) <= 1e-6


def test_stable_density_symmetric_and_peaked_at_zero():
    x = np.linspace(0.1, 5.0, 25)
    for alpha in (1.2, 1.8):
        f_pos = stable_density(alpha, x, 1.0)
        f_neg = stable_density(alpha, -x, 1.0)
        assert np.max(np.abs(f_pos - f_neg)) <= 1e-12
        assert stable_density(alpha, 0.0, 1.0) > f_pos.max()


def test_default_scale_values():
    assert default_scale(2.0) == 0.5
    assert default_scale(1.0) == 1.0


# ---------------------------------------------------------------- skellam


@pytest.mark.parametrize("tau", [0.3, 1.0, 4.0])
def test_skellam_kernel_matches_direct_bessel_sum(tau):
    D = 9
    for k in range(D):
        ours = skellam_kernel(1, D, (k,), tau)
        ref = skellam_direct(k, D, tau, d=1)
        assert abs(ours - ref) <= 1e-13


def test_skellam_kernel_two_dimensional_product():
    D, tau = 5, 0.8
    for k in [(0, 0), (1, 3), (4, 2)]:
        ours = skellam_kernel(2, D, k, tau)
        ref = skellam_direct(k[0], D, tau, d=2) * skellam_direct(k[1], D, tau, d=2)
        assert abs(ours - ref) <= 1e-13


@pytest.mark.parametrize("d,D", [(1, 7), (2, 4)])
def test_skellam_kernel_normalizes(d, D):
    cells = np.ndindex(*(D,) * d)
    total = sum(skellam_kernel(d, D, k, 1.3) for k in cells)
    assert abs(total - 1.0) <= 1e-12


def test_skellam_kernel_infinite_period_drops_wraparound():
    from scipy.special import ive

    tau = 0.6
    for k in (0, 2, 5):
        ours = skellam_kernel(1, math.inf, (k,), tau)
        assert abs(ours - float(ive(k, 2.0 * tau))) <= 1e-13


# ---------------------------------------------------------------- reference laws


def test_gumbel_cdf_closed_form():
    x = np.linspace(-3.0, 6.0, 19)
    res = reference_cdf("Gumbel", x)
    assert np.max(np.abs(res.value - gumbel_cdf(x))) <= 1e-12
    assert not np.any(res.out_of_range)


@pytest.mark.parametrize("law,which", [("TW1", 1), ("TW2", 2)])
def test_tracy_widom_cdf_against_painleve(law, which):
    # the shipped tables hold 999 quantiles with linear interpolation, so
    # a couple of 1e-3 is the honest resolution in the steep region
    oracle = painleve_edge_laws()[which]
    x = np.linspace(-4.2, 2.8, 29)
    res = reference_cdf(law, x)
    assert np.max(np.abs(res.value - oracle.cdf(x))) <= 3e-3


def test_reference_cdf_is_monotone():
    x = np.linspace(-8.0, 6.0, 200)
    for law in ("Gumbel", "TW1", "TW2"):
        v = reference_cdf(law, x).value
        assert np.all(np.diff(v) >= -1e-15)
        assert v[0] >= 0.0 and v[-1] <= 1.0


def test_reference_cdf_flags_out_of_range():
    res = reference_cdf("TW2", -11.0)
    assert res.out_of_range
    in_range = reference_cdf("TW2", 0.0)
    assert not in_range.out_of_range


def test_reference_moments_gumbel_exact():
    mean, var = reference_moments("Gumbel")
    assert abs(mean - EULER_GAMMA) <= 1e-12
    assert abs(var - math.pi**2 / 6.0) <= 1e-12


@pytest.mark.parametrize("law,which", [("TW1", 1), ("TW2", 2)])
def test_reference_moments_tracy_widom_against_painleve(law, which):
    # quantile tables truncate the far tails, so the variance comes in a
    # touch low; the oracle integrates the Painleve representation instead
    oracle = painleve_edge_laws()[which]
    mean, var = reference_moments(law)
    assert abs(mean - oracle.mean) <= 0.01
    assert abs(var - oracle.std**2) <= 0.05


# ---------------------------------------------------------------- sinc family


def test_limit_coeff_exact_values():
    p, xp = limit_coeff(2, Fraction(1, 2))
    assert p == Fraction(1, 2)
    assert xp == Fraction(1, 4)
    p4, xp4 = limit_coeff(4, 1)
    assert p4 == Fraction(5, 16)
    assert xp4 == Fraction(5, 16)
    beyond, _ = limit_coeff(4, 5)
    assert beyond == 0


def test_limit_coeff_rejects_bad_input():
    with pytest.raises(ValidationError):
        limit_coeff(3, 0)
    with pytest.raises(ValidationError):
        limit_coeff(4, -1)


def test_sinc_test_function_warns_off_the_tuned_set():
    with pytest.warns(UserWarning):
        sinc_test_function(6, 2.7, 0.3)


def test_sinc_test_function_finite_on_tuned_set():
    x = np.linspace(-2.0, 2.0, 21)
    vals = sinc_test_function(4, 4.0, x)
    assert np.all(np.isfinite(vals))
