import math

import numpy as np
import pytest
from scipy import integrate

from spheric_radial.models.errors import NegativeArgument, OutOfRange
from spheric_radial.utils.distributions import (ChiDistribution, chi_cdf, chi_pdf, chi_quantile, chi_tail_quantile,
                                                normal_cdf, normal_pdf, normal_quantile)

DEGREES = [1, 2, 3, 5, 10]


def test_chi_values_in_two_dimensions():
    chi = ChiDistribution(2)
    assert chi_pdf(chi, 1.0) == pytest.approx(math.exp(-0.5), abs=1e-14)
    assert chi_cdf(chi, 1.0) == pytest.approx(1.0 - math.exp(-0.5), abs=1e-14)
    assert chi_pdf(chi, 0.0) == 0.0


def test_chi_values_in_three_dimensions():
    chi = ChiDistribution(3)
    assert chi_pdf(chi, 1.0) == pytest.approx(0.48394145, abs=1e-8)
    assert chi_cdf(chi, 1.0) == pytest.approx(0.19874804, abs=1e-8)


@pytest.mark.parametrize("m", DEGREES)
def test_chi_cdf_limits(m):
    chi = ChiDistribution(m)
    assert chi_cdf(chi, 0.0) == 0.0
    assert chi_cdf(chi, math.inf) == 1.0
    assert chi.pdf(math.inf) == 0.0


def test_chi_pdf_at_zero_for_one_degree():
    chi = ChiDistribution(1)
    assert chi.pdf(0.0) == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-14)


@pytest.mark.parametrize("m", DEGREES)
def test_chi_density_is_normalized(m):
    chi = ChiDistribution(m)
    upper = chi.tail_quantile(1e-14)
    total, _ = integrate.quad(chi.pdf, 0.0, upper, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert abs(total - 1.0) <= 1e-10


@pytest.mark.parametrize("m", DEGREES)
@pytest.mark.parametrize("t", [0.5, 1.0, 2.0, 5.0])
def test_chi_cdf_derivative_is_pdf(m, t):
    chi = ChiDistribution(m)
    h = 1e-5
    slope = (chi.cdf(t + h) - chi.cdf(t - h)) / (2.0 * h)
    assert slope == pytest.approx(chi.pdf(t), abs=1e-6)


@pytest.mark.parametrize("m", [2, 3, 5])
def test_chi_quantile_inverts_cdf(m):
    chi = ChiDistribution(m)
    # beyond t = 5 the cdf is within 1e-5 of 1 and the inverse loses digits; see the tail test below
    for t in np.linspace(0.1, 5.0, 25):
        assert chi_quantile(chi, chi.cdf(t)) == pytest.approx(t, abs=1e-8)


@pytest.mark.parametrize("m", [1, 2, 3, 5, 10])
def test_chi_tail_quantile_inverts_sf(m):
    chi = ChiDistribution(m)
    for t in np.linspace(5.0, 8.0, 7):
        assert chi_tail_quantile(chi, chi.sf(t)) == pytest.approx(t, abs=1e-8)


def test_chi_cutoff_in_two_dimensions():
    chi = ChiDistribution(2)
    expected = math.sqrt(-2.0 * math.log(1e-12))
    assert chi.tail_quantile(1e-12) == pytest.approx(expected, abs=1e-9)
    assert chi.tail_quantile(1e-12) == pytest.approx(7.43390, abs=1e-5)
    assert chi.quantile(0.0) == 0.0


@pytest.mark.parametrize("p", [-0.1, 1.0, 1.5])
def test_chi_quantile_rejects_levels_outside_unit_interval(p):
    with pytest.raises(OutOfRange):
        ChiDistribution(2).quantile(p)


@pytest.mark.parametrize("q", [0.0, -1e-3, 1.1])
def test_chi_tail_quantile_rejects_levels(q):
    with pytest.raises(OutOfRange):
        ChiDistribution(2).tail_quantile(q)


@pytest.mark.parametrize("t", [-1e-9, -1.0, math.nan])
def test_chi_rejects_negative_radius(t):
    chi = ChiDistribution(3)
    with pytest.raises(NegativeArgument):
        chi.pdf(t)
    with pytest.raises(NegativeArgument):
        chi.cdf(t)
    with pytest.raises(ValueError):
        chi.sf(t)


@pytest.mark.parametrize("m", [0, -2, 1.5])
def test_chi_rejects_bad_degrees(m):
    with pytest.raises(OutOfRange):
        ChiDistribution(m)


def test_chi_equality_follows_degrees():
    assert ChiDistribution(3) == ChiDistribution(3)
    assert ChiDistribution(3) != ChiDistribution(4)
    assert len({ChiDistribution(2), ChiDistribution(2)}) == 1


def test_normal_cdf_values():
    assert normal_cdf(0.0) == 0.5
    assert normal_cdf(1.0) == pytest.approx(0.8413447460685429, abs=1e-15)
    assert normal_pdf(1.0) == pytest.approx(0.24197072451914337, abs=1e-15)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_normal_cdf_symmetry(t):
    assert normal_cdf(-t) == pytest.approx(1.0 - normal_cdf(t), abs=1e-15)


def test_normal_quantile_inverts_cdf():
    # above t = 4 the rounding of Φ(t) near 1 dominates the round trip
    for t in np.linspace(-6.0, 4.0, 41):
        assert normal_quantile(normal_cdf(t)) == pytest.approx(t, abs=1e-10)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.5])
def test_normal_quantile_rejects_closed_endpoints(p):
    with pytest.raises(OutOfRange):
        normal_quantile(p)
