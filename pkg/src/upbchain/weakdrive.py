"""Steady-state photon amplitudes of the weakly driven chain.

Truncating the driven-dissipative steady state at two photons turns the
master equation into a pair of linear problems: the one-photon amplitudes
solve (z + H_c) psi1 = -F with z = E - i*gamma/2 (the minus sign is kept
on the source so amplitudes, not just correlations, are fixed), and the
two-photon amplitudes solve a driven linear system on the symmetric
tensor subspace.  The Kerr term only acts on doubly-occupied states,
which makes a perturbative split psi2 = psi2_0 + alpha * psi2_1 natural;
the exact route solves the symmetrized system of dimension n(n+1)/2
directly, with 1/sqrt(2) bookkeeping between the packed representation
and tensor components <i,j|psi2>.

Equal-time correlations at site s follow as
g2 = 2 |<s,s|psi2>|^2 / |<s|psi1>|^4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .lattice import (
    POLE_TOL,
    LatticeSpec,
    PoleError,
    SingleParticleSpectrum,
    build_hamiltonian,
    eigendecompose,
    signal_site,
)

_SQRT2 = math.sqrt(2.0)


class UndefinedCorrelationError(ValueError):
    """g2 requested at a site whose one-photon amplitude vanishes."""


@dataclass(frozen=True)
class OnePhotonState:
    """One-photon steady amplitudes <j|psi1>, length n_sites."""

    amplitudes: np.ndarray


@dataclass(frozen=True)
class TwoPhotonState:
    """Two-photon steady amplitudes <i,j|psi2> as a symmetric n x n matrix.

    For the perturbative route, ``linear`` and ``correction`` hold the
    alpha-independent part and the first-order-in-alpha coefficient, so
    amplitudes = linear + alpha * correction.  The exact route leaves
    them as None.
    """

    amplitudes: np.ndarray
    linear: np.ndarray | None = None
    correction: np.ndarray | None = None


@dataclass(frozen=True)
class WeakDriveSolution:
    spec: LatticeSpec
    method: str
    one_photon: OnePhotonState
    two_photon: TwoPhotonState
    g2_per_site: np.ndarray


def _check_poles_one(eigenvalues: np.ndarray, z: complex) -> None:
    den = z + eigenvalues
    k = int(np.argmin(np.abs(den)))
    if abs(den[k]) <= POLE_TOL:
        raise PoleError(
            f"one-photon system singular: z={z} within {POLE_TOL} of -eps_n,"
            f" eps_n={eigenvalues[k]}",
            eigenvalue=float(eigenvalues[k]),
        )


def _check_poles_two(eigenvalues: np.ndarray, z: complex) -> None:
    pair = 2 * z + eigenvalues[:, None] + eigenvalues[None, :]
    flat = np.abs(pair).ravel()
    k = int(np.argmin(flat))
    if flat[k] <= POLE_TOL:
        m, n = divmod(k, eigenvalues.size)
        raise PoleError(
            f"two-photon system singular: 2z={2 * z} within {POLE_TOL} of"
            f" -(eps_m + eps_n) for eps_m={eigenvalues[m]}, eps_n={eigenvalues[n]}",
            eigenvalue=float(eigenvalues[m] + eigenvalues[n]),
        )


def _eigen_one_photon(spectrum: SingleParticleSpectrum, z: complex, f: np.ndarray) -> np.ndarray:
    eps, w = spectrum.eigenvalues, spectrum.eigenvectors
    _check_poles_one(eps, z)
    return -w @ ((w.T @ f) / (z + eps))


def _perturbative_parts(spectrum: SingleParticleSpectrum, z: complex, f: np.ndarray):
    """(psi1, psi2 linear part, psi2 correction per unit alpha)."""
    eps, w = spectrum.eigenvalues, spectrum.eigenvectors
    psi1 = _eigen_one_photon(spectrum, z, f)
    _check_poles_two(eps, z)
    c0 = np.outer(psi1, psi1) / _SQRT2
    pair = 2 * z + eps[:, None] + eps[None, :]
    k = w.T @ ((psi1**2)[:, None] * w)
    c1 = -_SQRT2 * (w @ (k / pair) @ w.T)
    return psi1, c0, c1


def _symmetrizer(n: int) -> sparse.csr_matrix:
    # isometry from the packed basis {|i,j>, i<=j} into tensor coordinates
    rows, cols, vals = [], [], []
    p = 0
    s = 1.0 / _SQRT2
    for i in range(n):
        for j in range(i, n):
            if i == j:
                rows.append(i * n + i)
                cols.append(p)
                vals.append(1.0)
            else:
                rows.extend((i * n + j, j * n + i))
                cols.extend((p, p))
                vals.extend((s, s))
            p += 1
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n * n, p))


def _exact_two_photon(
    h: np.ndarray, z: complex, f: np.ndarray, alpha: float, psi1: np.ndarray
) -> np.ndarray:
    n = h.shape[0]
    b = sparse.csr_matrix(h.astype(complex)) + z * sparse.identity(n, dtype=complex)
    eye = sparse.identity(n, dtype=complex)
    h2 = sparse.kron(b, eye) + sparse.kron(eye, b)
    if alpha:
        diag = np.zeros(n * n, dtype=complex)
        diag[np.arange(n) * (n + 1)] = 2.0 * alpha
        h2 = h2 + sparse.diags(diag)
    s = _symmetrizer(n)
    h_sym = (s.T @ h2 @ s).toarray()
    source = (np.outer(f, psi1) + np.outer(psi1, f)).ravel() / _SQRT2
    rhs = -(s.T @ source)
    try:
        y = np.linalg.solve(h_sym, rhs)
    except np.linalg.LinAlgError as exc:
        raise PoleError(
            f"two-photon system singular at z={z}, alpha={alpha}: {exc}",
            eigenvalue=float("nan"),
        ) from exc
    c = np.zeros((n, n), dtype=complex)
    iu, ju = np.triu_indices(n)
    packed = np.where(iu == ju, y, y / _SQRT2)
    c[iu, ju] = packed
    c[ju, iu] = packed
    return c


def solve_one_photon(spec: LatticeSpec) -> OnePhotonState:
    """Direct linear solve of (z + H_c) psi1 = -F."""
    spectrum = eigendecompose(spec)
    _check_poles_one(spectrum.eigenvalues, spec.z)
    h = build_hamiltonian(spec).astype(complex)
    h[np.diag_indices_from(h)] += spec.z
    psi1 = np.linalg.solve(h, -spec.drive_vector)
    return OnePhotonState(amplitudes=psi1)


def solve_two_photon_exact(spec: LatticeSpec, one_photon: OnePhotonState | None = None) -> TwoPhotonState:
    """Direct solve on the packed symmetric two-photon basis."""
    if one_photon is None:
        one_photon = solve_one_photon(spec)
    c = _exact_two_photon(
        build_hamiltonian(spec), spec.z, spec.drive_vector, spec.kerr, one_photon.amplitudes
    )
    return TwoPhotonState(amplitudes=c)


def solve_two_photon_perturbative(
    spec: LatticeSpec, spectrum: SingleParticleSpectrum | None = None
) -> TwoPhotonState:
    """First-order-in-alpha two-photon amplitudes from the eigenbasis sums."""
    if spectrum is None:
        spectrum = eigendecompose(spec)
    _, c0, c1 = _perturbative_parts(spectrum, spec.z, spec.drive_vector)
    return TwoPhotonState(amplitudes=c0 + spec.kerr * c1, linear=c0, correction=c1)


def _g2_vector(psi1: np.ndarray, c: np.ndarray) -> np.ndarray:
    diag = np.abs(np.diagonal(c)) ** 2
    norm4 = np.abs(psi1) ** 4
    with np.errstate(divide="ignore", invalid="ignore"):
        g2 = 2.0 * diag / norm4
    g2[norm4 == 0.0] = np.nan
    return g2


def solve_weak_drive(spec: LatticeSpec, method: str = "exact") -> WeakDriveSolution:
    """One- and two-photon amplitudes plus per-site g2 in one bundle."""
    one = solve_one_photon(spec)
    if method == "exact":
        two = solve_two_photon_exact(spec, one)
    elif method == "perturbative":
        two = solve_two_photon_perturbative(spec)
    else:
        raise ValueError(f"unknown method {method!r} (use 'exact' or 'perturbative')")
    g2 = _g2_vector(one.amplitudes, two.amplitudes)
    return WeakDriveSolution(spec=spec, method=method, one_photon=one, two_photon=two, g2_per_site=g2)


def g2_zero_delay(solution: WeakDriveSolution, site: int | None = None) -> float:
    """Equal-time second-order correlation at ``site`` (default: signal site)."""
    if site is None:
        site = signal_site(solution.spec.n_sites)
    amp1 = solution.one_photon.amplitudes[site]
    if amp1 == 0:
        raise UndefinedCorrelationError(
            f"g2 undefined at site {site}: one-photon amplitude vanishes"
        )
    amp2 = solution.two_photon.amplitudes[site, site]
    return float(2.0 * abs(amp2) ** 2 / abs(amp1) ** 4)


def signal_amplitude(solution: WeakDriveSolution, site: int | None = None) -> complex:
    """Doubly-occupied amplitude <s,s|psi2> at ``site`` (default: signal site)."""
    if site is None:
        site = signal_site(solution.spec.n_sites)
    return complex(solution.two_photon.amplitudes[site, site])
