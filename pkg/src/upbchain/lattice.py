"""Single-particle structure of the alternating-bond resonator chain.

The chain has an even number of sites coupled by bonds that alternate
between 1 (intracell, the energy unit) and ``t`` (intercell), i.e. a line
of dimers.  Sites are indexed 0..n-1 throughout; the driven site is 0 and
the designated signal resonator sits one site from the far end
(:func:`signal_site`).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

POLE_TOL = 1e-12


class PoleError(ValueError):
    """Raised when a resolvent is evaluated too close to an eigenvalue.

    Carries the offending single-particle eigenvalue in ``eigenvalue``.
    """

    def __init__(self, message: str, eigenvalue: float):
        super().__init__(message)
        self.eigenvalue = eigenvalue


@dataclass(frozen=True)
class LatticeSpec:
    """Parameters of a driven, lossy Kerr dimer chain.

    Energies and rates are in units of the intracell coupling.  ``drive``
    may be given as a scalar (amplitude on site 0) or a length-n vector;
    it is stored as a tuple of complex amplitudes.
    """

    n_sites: int
    intercell: float = 0.1
    onsite_energy: float = 0.0
    loss: float = 0.0
    kerr: float = 0.0
    dephasing: float = 0.0
    drive: tuple = 0.0

    def __post_init__(self):
        n = self.n_sites
        if n < 2 or n % 2:
            raise ValueError(f"n_sites must be even and >= 2, got {n}")
        if not self.intercell > 0:
            raise ValueError(f"intercell coupling must be > 0, got {self.intercell}")
        if self.loss < 0:
            raise ValueError(f"loss rate must be >= 0, got {self.loss}")
        if self.dephasing < 0:
            raise ValueError(f"dephasing rate must be >= 0, got {self.dephasing}")
        drive = self.drive
        if np.isscalar(drive):
            vec = np.zeros(n, dtype=complex)
            vec[0] = drive
        else:
            vec = np.asarray(drive, dtype=complex)
            if vec.shape != (n,):
                raise ValueError(f"drive must be scalar or length-{n}, got shape {vec.shape}")
        object.__setattr__(self, "drive", tuple(vec))

    @property
    def z(self) -> complex:
        """Complex detuning z = E - i*loss/2 entering the weak-drive equations."""
        return self.onsite_energy - 0.5j * self.loss

    @property
    def drive_vector(self) -> np.ndarray:
        return np.asarray(self.drive, dtype=complex)


@dataclass(frozen=True)
class SingleParticleSpectrum:
    """Eigenvalues (ascending) and orthonormal eigenvector columns of the hopping matrix."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.eigenvalues.size


def signal_site(n_sites: int) -> int:
    """Index of the signal resonator: one site from the far end of the chain."""
    return n_sites - 2


def build_hamiltonian(spec: LatticeSpec) -> np.ndarray:
    """Real symmetric hopping matrix with off-diagonals 1, t, 1, t, ..."""
    n = spec.n_sites
    hop = np.empty(n - 1)
    hop[0::2] = 1.0
    hop[1::2] = spec.intercell
    h = np.zeros((n, n))
    idx = np.arange(n - 1)
    h[idx, idx + 1] = hop
    h[idx + 1, idx] = hop
    return h


def chiral_operator(n_sites: int) -> np.ndarray:
    """Diagonal +1/-1 matrix that anticommutes with the hopping matrix."""
    return np.diag(chiral_signs(n_sites)).astype(float)


def chiral_signs(n_sites: int) -> np.ndarray:
    signs = np.ones(n_sites, dtype=int)
    signs[1::2] = -1
    return signs


@lru_cache(maxsize=64)
def _eigensystem(n_sites: int, intercell: float):
    h = build_hamiltonian(LatticeSpec(n_sites=n_sites, intercell=intercell))
    vals, vecs = np.linalg.eigh(h)
    _sign_fixed(vals, vecs)
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return vals, vecs


def _sign_fixed(vals: np.ndarray, vecs: np.ndarray) -> SingleParticleSpectrum:
    for k in range(vals.size):
        col = vecs[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-10 * np.abs(col).max())
        if col[nz[0]] < 0:
            vecs[:, k] = -col
    return SingleParticleSpectrum(eigenvalues=vals, eigenvectors=vecs)


def eigendecompose(spec_or_matrix) -> SingleParticleSpectrum:
    """Eigendecomposition of the hopping matrix (a LatticeSpec or the matrix itself).

    Eigenvalues come back ascending, in +/- pairs by chiral symmetry; each
    eigenvector is normalized with its first nonzero component positive.
    Spec inputs hit a cache keyed by (n_sites, intercell).
    """
    if isinstance(spec_or_matrix, LatticeSpec):
        vals, vecs = _eigensystem(spec_or_matrix.n_sites, spec_or_matrix.intercell)
        return SingleParticleSpectrum(eigenvalues=vals, eigenvectors=vecs)
    h = np.asarray(spec_or_matrix, dtype=float)
    vals, vecs = np.linalg.eigh(h)
    return _sign_fixed(vals, vecs)


def green_element(
    spectrum: SingleParticleSpectrum,
    z: complex,
    i: int,
    j: int,
    pole_tol: float = POLE_TOL,
) -> complex:
    """Matrix element <i| (z + H_c)^[-1] |j> via the eigenbasis sum.

    Raises PoleError if z sits within ``pole_tol`` of a pole -eps_n.
    """
    eps = spectrum.eigenvalues
    den = z + eps
    closest = int(np.argmin(np.abs(den)))
    if abs(den[closest]) <= pole_tol:
        raise PoleError(
            f"z={z} lies within {pole_tol} of the pole at -eps_n, eps_n={eps[closest]}",
            eigenvalue=float(eps[closest]),
        )
    w = spectrum.eigenvectors
    return complex(np.sum(w[i, :] * w[j, :] / den))


def gc_power_element(spec_or_matrix, m: int, i: int, j: int) -> float:
    """Element <i| (H_c^[-1])^m |j> by repeated linear solves against the hopping matrix."""
    if m < 1:
        raise ValueError(f"power m must be >= 1, got {m}")
    if isinstance(spec_or_matrix, LatticeSpec):
        h = build_hamiltonian(spec_or_matrix)
    else:
        h = np.asarray(spec_or_matrix, dtype=float)
    lu = scipy.linalg.lu_factor(h)
    x = np.zeros(h.shape[0])
    x[j] = 1.0
    for _ in range(m):
        x = scipy.linalg.lu_solve(lu, x)
    return float(x[i])
