"""Closed-form asymptotics: double factorials, the alternating sum, optima."""

import math
from fractions import Fraction

import numpy as np
import pytest

from upbchain import (
    LatticeSpec,
    alternating_gsum,
    double_factorial,
    g_coefficient,
    gsum_identity,
    leading_amplitudes,
    occupation_estimate,
    optimal_point,
    singularity_radius,
    solve_one_photon,
    upb_alpha,
)
from upbchain.analytics import _recip_double_factorial_ext

# frozen high-precision reference values for the optimum at gamma = 0.3
N2_OPT_E = 0.08660254037844371
N2_OPT_ALPHA = 0.01039230484541325
OPT_ALPHA_03 = {
    2: N2_OPT_ALPHA,
    4: 1.5615095699313022e-3,
    6: 1.7416063241766462e-4,
    8: 1.8072496476191693e-5,
}


def test_double_factorial_values():
    assert double_factorial(-1) == 1
    assert double_factorial(0) == 1
    assert double_factorial(4) == 8
    assert double_factorial(7) == 105
    assert double_factorial(10) == 3840


def test_double_factorial_domain():
    with pytest.raises(ValueError, match="double factorial"):
        double_factorial(-2)


def test_extended_reciprocal_double_factorial():
    # downward recursion for odd negatives, vanishing for even negatives
    assert _recip_double_factorial_ext(-3) == Fraction(-1)
    assert _recip_double_factorial_ext(-5) == Fraction(1, 3)
    assert _recip_double_factorial_ext(-7) == Fraction(-1, 15)
    assert _recip_double_factorial_ext(-2) == 0
    assert _recip_double_factorial_ext(-4) == 0
    assert _recip_double_factorial_ext(3) == Fraction(1, 3)


def test_g_coefficient_rationals():
    assert g_coefficient(2, 3) == Fraction(3, 2)
    assert g_coefficient(2, 1) == Fraction(1, 2)
    assert g_coefficient(2, 2) == Fraction(1)
    with pytest.raises(ValueError, match="g_coefficient"):
        g_coefficient(4, 1)


def test_alternating_gsum_small_chains():
    assert alternating_gsum(4, 1) == Fraction(-1, 2)
    assert alternating_gsum(6, 2) == Fraction(3, 8)


@pytest.mark.parametrize("n,p", [(4, 2), (4, 3), (6, 3), (8, 4), (8, 6)])
def test_alternating_gsum_vanishes_beyond_the_chain(n, p):
    assert 2 * p >= n
    assert alternating_gsum(n, p) == 0


@pytest.mark.parametrize("n", list(range(4, 21, 2)))
def test_gsum_identity_rational(n):
    value = gsum_identity(n)
    sign = -1 if (n // 2 + 1) % 2 else 1
    assert value == sign * Fraction(double_factorial(n - 3), double_factorial(n - 2))


def test_gsum_identity_rejects_odd():
    with pytest.raises(ValueError, match="even"):
        gsum_identity(5)


def test_leading_amplitudes_single_dimer():
    # N=2 has no t dependence in the linear part
    z = -0.1 + 0.3j
    amps = leading_amplitudes(2, 0.4, z, 1.0)
    assert amps.linear_part == pytest.approx(z * z / math.sqrt(2), rel=1e-14)


def test_leading_amplitudes_four_site_correction():
    z = 0.2 - 0.12j
    f1 = 0.7
    amps = leading_amplitudes(4, 0.1, z, f1)
    expected = -(f1 * f1 / math.sqrt(2)) * 0.1**2 * 0.5 / (2 * z) ** 3
    assert amps.correction_part == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_cancellation_ratio_reproduces_upb_alpha(n):
    z = 0.17 - 0.11j
    amps = leading_amplitudes(n, 0.1, z, 1.3)
    ratio = -amps.linear_part / amps.correction_part
    assert ratio == pytest.approx(upb_alpha(n, z), rel=1e-12)


def test_upb_alpha_two_site_reference():
    gamma = 0.3
    z = gamma / (2 * math.sqrt(3)) - 0.5j * gamma
    alpha = upb_alpha(2, z)
    assert alpha.real == pytest.approx(N2_OPT_ALPHA, rel=1e-12)
    assert abs(alpha.imag) < 1e-16


def test_upb_alpha_wrong_phase_is_complex():
    alpha = upb_alpha(2, 0.1 - 0.02j)
    assert abs(alpha.imag) > 1e-6


def test_optimal_point_two_site_closed_form():
    point = optimal_point(2, 0.3)
    assert point.theta == pytest.approx(math.pi / 3, rel=1e-14)
    assert point.onsite_energy == pytest.approx(N2_OPT_E, rel=1e-14)
    assert point.kerr == pytest.approx(N2_OPT_ALPHA, rel=1e-13)
    # single-dimer reduction: E = gamma/(2 sqrt 3), alpha = (1/4)(2 gamma/sqrt 3)^3
    assert point.onsite_energy == pytest.approx(0.3 / (2 * math.sqrt(3)), rel=1e-14)
    assert point.kerr == pytest.approx(0.25 * (2 * 0.3 / math.sqrt(3)) ** 3, rel=1e-14)


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_optimal_point_frozen_references(n):
    point = optimal_point(n, 0.3)
    assert point.theta == pytest.approx((n / (n + 1)) * (math.pi / 2), rel=1e-14)
    assert point.kerr == pytest.approx(OPT_ALPHA_03[n], rel=1e-12)
    assert point.z.imag == pytest.approx(-0.15, rel=1e-14)
    assert point.kerr > 0


@pytest.mark.parametrize("n", [2, 4, 6, 8])
@pytest.mark.parametrize("gamma", [0.3, 0.45, 0.8])
def test_optimal_point_cancels_upb_alpha(n, gamma):
    point = optimal_point(n, gamma)
    assert abs(upb_alpha(n, point.z)) == pytest.approx(point.kerr, rel=1e-12)


def test_optimal_alpha_shrinks_with_chain_length():
    alphas = [optimal_point(n, 0.3).kerr for n in (2, 4, 6, 8)]
    for small, big in zip(alphas[1:], alphas[:-1]):
        assert 0 < small / big < 0.25


def test_optimal_point_negative_branch_and_roots():
    neg = optimal_point(2, 0.3, negative_kerr=True)
    assert neg.kerr < 0
    second = optimal_point(6, 0.3, root_index=1)
    assert second.kerr > optimal_point(6, 0.3).kerr
    with pytest.raises(ValueError, match="root_index"):
        optimal_point(2, 0.3, root_index=9)
    with pytest.raises(ValueError, match="gamma"):
        optimal_point(2, 0.0)


def test_singularity_radius_inverts_upb_alpha():
    for n in (2, 4, 6):
        point = optimal_point(n, 0.3)
        assert singularity_radius(n, point.kerr) == pytest.approx(abs(point.z), rel=1e-12)


def test_occupation_estimate_values():
    assert occupation_estimate(4, 0.1, 0.3j, 1e-4) == pytest.approx(9e-12, rel=1e-12)
    z = 0.25 - 0.1j
    assert occupation_estimate(2, 0.1, z, 0.3) == pytest.approx(0.09 * abs(z) ** 2, rel=1e-12)
    one = occupation_estimate(4, 0.1, z, 1.0)
    assert occupation_estimate(4, 0.1, z, 2.0) == pytest.approx(4 * one, rel=1e-12)


def test_occupation_estimate_tracks_one_photon_solve():
    t = 0.1
    spec = LatticeSpec(n_sites=4, intercell=t, onsite_energy=0.25, loss=0.4, drive=1e-3)
    psi1 = solve_one_photon(spec).amplitudes
    measured = abs(psi1[2]) ** 2
    estimate = occupation_estimate(4, t, spec.z, 1e-3)
    assert abs(measured - estimate) / estimate < 5 * t


def test_validity_warnings():
    with pytest.warns(UserWarning, match="t < 1"):
        leading_amplitudes(4, 1.5, 0.3 - 0.1j, 1.0)
    with pytest.warns(UserWarning, match="t < "):
        leading_amplitudes(4, 0.1, 0.01 - 0.01j, 1.0)  # |z| below the annulus
    with pytest.warns(UserWarning, match="t < 1"):
        occupation_estimate(4, 1.2, 0.3 - 0.1j, 1.0)
