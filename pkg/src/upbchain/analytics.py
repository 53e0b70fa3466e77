"""Closed-form asymptotics for the driven dimer chain.

Leading-order signal amplitudes, the Kerr strength that cancels the
two-photon amplitude, and the optimal drive point, all in the weak-drive,
small-t regime.  Double factorials follow the convention (-1)!! = 0!! = 1;
the combinatorial identity behind the correction term additionally needs
the extended values for negative odd arguments ((-3)!! = -1, (-5)!! = 1/3,
...) and vanishing reciprocals for negative even ones, which are kept
private to :func:`alternating_gsum`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


def _check_chain_length(n_sites: int) -> None:
    if n_sites < 2 or n_sites % 2:
        raise ValueError(f"n_sites must be even and >= 2, got {n_sites}")


def double_factorial(n: int) -> int:
    """n!! with (-1)!! = 0!! = 1.  Defined for n >= -1."""
    if n < -1:
        raise ValueError(f"double factorial undefined for n={n} (need n >= -1)")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def _recip_double_factorial_ext(n: int) -> Fraction:
    # 1/n!! continued to negative arguments: odd via the downward recursion,
    # even negative arguments have divergent n!! so the reciprocal is 0.
    if n >= -1:
        return Fraction(1, double_factorial(n))
    if n % 2 == 0:
        return Fraction(0)
    sign = -1 if ((-n - 1) // 2) % 2 else 1
    return sign * Fraction(double_factorial(-n - 2))


def g_coefficient(a: int, b: int) -> Fraction:
    """Exact rational b!! / (a!! (b-a)!!)."""
    if a < -1 or b < -1 or b - a < -1:
        raise ValueError(f"g_coefficient undefined for a={a}, b={b}")
    return Fraction(double_factorial(b), double_factorial(a) * double_factorial(b - a))


def _g_ext(a: int, b: int) -> Fraction:
    return Fraction(double_factorial(b), double_factorial(a)) * _recip_double_factorial_ext(b - a)


def alternating_gsum(n_sites: int, p: int) -> Fraction:
    """Alternating binomial sum of coefficient products, exact rational.

    sum_h (-1)^h C(2p, h) G(n-2, 2p-h+1) G(n-2, h+1), h = 0..2p.
    Vanishes identically for 2p >= n_sites.
    """
    _check_chain_length(n_sites)
    if p < 0:
        raise ValueError(f"p must be >= 0, got {p}")
    a = n_sites - 2
    total = Fraction(0)
    for h in range(2 * p + 1):
        term = Fraction(math.comb(2 * p, h)) * _g_ext(a, 2 * p - h + 1) * _g_ext(a, h + 1)
        total += -term if h % 2 else term
    return total


def gsum_identity(n_sites: int) -> Fraction:
    """The 2p = n-2 sum, checked against its closed form before returning.

    Closed form: (-1)^(n/2+1) (n-3)!! / (n-2)!!.
    """
    _check_chain_length(n_sites)
    value = alternating_gsum(n_sites, (n_sites - 2) // 2)
    sign = 1 if (n_sites // 2 + 1) % 2 == 0 else -1
    expected = sign * Fraction(double_factorial(n_sites - 3), double_factorial(n_sites - 2))
    if value != expected:
        raise AssertionError(
            f"gsum identity violated at n_sites={n_sites}: sum={value}, closed form={expected}"
        )
    return value


def _warn_validity(intercell: float, z: complex | None = None) -> None:
    if intercell >= 1:
        warnings.warn(
            f"asymptotics assume intercell t < 1; got t={intercell}", stacklevel=3
        )
    if z is not None and not (intercell < abs(z) < 1):
        warnings.warn(
            f"leading amplitudes assume t < |z| < 1; got t={intercell}, |z|={abs(z):.4g}",
            stacklevel=3,
        )


@dataclass(frozen=True)
class LeadingAmplitudes:
    """Leading-order signal-site two-photon amplitude, split by Kerr order.

    The full amplitude is approximately linear_part + kerr * correction_part.
    """

    linear_part: complex
    correction_part: complex


def leading_amplitudes(n_sites: int, intercell: float, z: complex, f1: float) -> LeadingAmplitudes:
    """Closed-form pieces of the doubly-occupied signal amplitude."""
    _check_chain_length(n_sites)
    _warn_validity(intercell, z)
    n = n_sites
    scale = f1**2 / math.sqrt(2) * intercell ** (n - 2)
    linear = scale * z**2
    sign = -1 if (n // 2 + 1) % 2 else 1
    ratio = double_factorial(n - 3) / double_factorial(n - 2)
    correction = scale * sign * ratio / (2 * z) ** (n - 1)
    return LeadingAmplitudes(linear_part=complex(linear), correction_part=complex(correction))


def upb_alpha(n_sites: int, z: complex) -> complex:
    """Kerr strength cancelling the leading two-photon signal amplitude at detuning z.

    Independent of the drive amplitude; real only on special rays of z.
    """
    _check_chain_length(n_sites)
    sign = 1 if (n_sites // 2) % 2 == 0 else -1
    ratio = double_factorial(n_sites - 2) / double_factorial(n_sites - 3)
    return sign * 0.25 * ratio * (2 * z) ** (n_sites + 1)


def singularity_radius(n_sites: int, alpha: float) -> float:
    """|z| at which ``upb_alpha`` reaches magnitude |alpha|."""
    _check_chain_length(n_sites)
    ratio = double_factorial(n_sites - 3) / double_factorial(n_sites - 2)
    return 0.5 * float((4 * abs(alpha) * ratio) ** (1.0 / (n_sites + 1)))


@dataclass(frozen=True)
class OptimalPoint:
    """Drive detuning and Kerr strength optimizing antibunching at fixed loss."""

    n_sites: int
    gamma: float
    theta: float
    onsite_energy: float
    kerr: float
    root_index: int = 0
    negative_kerr: bool = False

    @property
    def z(self) -> complex:
        return self.onsite_energy - 0.5j * self.gamma


def _admissible_phases(n_sites: int, negative_kerr: bool) -> np.ndarray:
    # arg z must make (2z)^(n+1) cancel the (-1)^(n/2) prefactor so alpha
    # comes out real with the requested sign; keep only decaying roots Im z < 0
    m = n_sites + 1
    want_negative = ((n_sites // 2) % 2 == 1) != negative_kerr
    base = math.pi / m if want_negative else 0.0
    phases = base + 2 * math.pi * np.arange(m) / m
    phases = np.angle(np.exp(1j * phases))
    return phases[np.sin(phases) < -1e-12]


def optimal_point(
    n_sites: int,
    gamma: float,
    root_index: int = 0,
    negative_kerr: bool = False,
) -> OptimalPoint:
    """Optimal (E, alpha) at fixed loss rate.

    Roots are ordered by how close arg z sits to -pi/2 (equivalently by
    increasing |alpha|), ties broken by smaller |E| then positive E;
    ``root_index`` = 0 is the optimum.  ``negative_kerr`` selects the
    opposite-parity root family with alpha < 0.
    """
    _check_chain_length(n_sites)
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    phases = _admissible_phases(n_sites, negative_kerr)
    if phases.size == 0:
        raise ValueError(f"no decaying roots for n_sites={n_sites}")
    thetas = -phases
    e_vals = 0.5 * gamma / np.tan(thetas)
    order = np.lexsort((e_vals < 0, np.abs(e_vals), np.abs(thetas - math.pi / 2)))
    if not 0 <= root_index < order.size:
        raise ValueError(
            f"root_index {root_index} out of range; {order.size} decaying roots available"
        )
    theta = float(thetas[order[root_index]])
    energy = float(e_vals[order[root_index]])
    ratio = double_factorial(n_sites - 2) / double_factorial(n_sites - 3)
    alpha = 0.25 * ratio * (gamma / math.sin(theta)) ** (n_sites + 1)
    if negative_kerr:
        alpha = -alpha
    return OptimalPoint(
        n_sites=n_sites,
        gamma=gamma,
        theta=theta,
        onsite_energy=energy,
        kerr=float(alpha),
        root_index=root_index,
        negative_kerr=negative_kerr,
    )


def occupation_estimate(n_sites: int, intercell: float, z: complex, f1: float) -> float:
    """Leading-order steady occupation of the signal site."""
    _check_chain_length(n_sites)
    _warn_validity(intercell)
    return float(f1**2 * intercell ** (n_sites - 2) * abs(z) ** 2)
