"""Full master-equation dynamics on a truncated Fock space.

Two routes to stationary statistics:

* a dense steady-state oracle: vectorize the Liouvillian (loss and pure
  dephasing channels), replace one row by the trace constraint and solve
  directly;
* wave-function Monte Carlo with identity-shifted jump operators,
  L_k -> L_k + beta, H -> H + (beta/2i) sum_k (L_k - L_k^dag).  The shift
  leaves the ensemble exact for any real beta but makes jumps fire at a
  useful rate even at vanishing occupation, where bare quantum jumps
  would be once-per-age-of-the-run events.  Between jumps the
  non-Hermitian drift is integrated adaptively (DOP853 at the configured
  tolerances) and the jump time is located by the integrator's event
  root-finding on the squared-norm threshold.

Tolerance note: the target tolerances for this family of problems are
tighter than double precision supports (the interesting two-photon
amplitudes sit ~18 orders below the vacuum amplitude in probability);
defaults are 1e-12, which the sector structure of the error propagation
makes sufficient in practice - integration error reaching the two-photon
amplitudes is suppressed by the same drive powers as the physics.

Trajectory statistics are reduced with leave-one-out jackknife over the
trajectory set.  Results are bit-reproducible for a fixed (seed, config):
trajectory k draws from default_rng(seed XOR k) and reductions run in
trajectory order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg
from scipy.integrate import solve_ivp

from .lattice import LatticeSpec, signal_site

ANNIHILATION_FLOOR = 1e-14


class UndefinedG2Error(ValueError):
    """g2 requested where the occupation denominator vanishes."""


class IntegrationError(RuntimeError):
    """Adaptive integrator failed to advance a trajectory."""


@dataclass(frozen=True)
class FockSpec:
    """Per-site photon-number cutoffs; site j keeps 0..cutoffs[j] photons."""

    cutoffs: tuple
    budget: int = 1_000_000

    def __post_init__(self):
        cuts = tuple(int(c) for c in self.cutoffs)
        if not cuts or any(c < 1 for c in cuts):
            raise ValueError(f"cutoffs must all be >= 1, got {self.cutoffs}")
        object.__setattr__(self, "cutoffs", cuts)

    @classmethod
    def uniform(cls, n_sites: int, cutoff: int = 3, budget: int = 1_000_000) -> "FockSpec":
        return cls(cutoffs=(cutoff,) * n_sites, budget=budget)

    @property
    def dims(self) -> tuple:
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def dimension(self) -> int:
        return int(np.prod(self.dims))


def _embed(local: sparse.spmatrix, dims: tuple, site: int) -> sparse.csr_matrix:
    left = int(np.prod(dims[:site], dtype=np.int64)) if site else 1
    right = int(np.prod(dims[site + 1 :], dtype=np.int64)) if site + 1 < len(dims) else 1
    op = sparse.kron(sparse.identity(left, format="csr"), local, format="csr")
    return sparse.kron(op, sparse.identity(right, format="csr"), format="csr")


def _occupation_diagonal(dims: tuple, site: int) -> np.ndarray:
    right = int(np.prod(dims[site + 1 :], dtype=np.int64)) if site + 1 < len(dims) else 1
    left = int(np.prod(dims[:site], dtype=np.int64)) if site else 1
    return np.tile(np.repeat(np.arange(dims[site], dtype=float), right), left)


@dataclass
class OperatorSet:
    """Sparse operators of the chain on the truncated product Fock space."""

    spec: LatticeSpec
    fock: FockSpec
    dimension: int
    annihilation: list
    occupations: list
    hamiltonian: sparse.csr_matrix

    def vacuum(self) -> np.ndarray:
        psi = np.zeros(self.dimension, dtype=complex)
        psi[0] = 1.0
        return psi

    def pair_moment_diagonal(self, site: int) -> np.ndarray:
        occ = self.occupations[site]
        return occ * (occ - 1.0)

    def bare_jump_matrices(self) -> list:
        """Loss and dephasing jump operators of the unshifted master equation."""
        jumps = []
        if self.spec.loss > 0:
            root = math.sqrt(self.spec.loss)
            jumps.extend(root * a for a in self.annihilation)
        if self.spec.dephasing > 0:
            root = math.sqrt(self.spec.dephasing)
            jumps.extend(sparse.diags(root * occ).tocsr() for occ in self.occupations)
        return jumps

    def drift_matrix(self, beta: float) -> sparse.csr_matrix:
        """Non-Hermitian drift H - (i/2) sum_k (L_k^dag L_k + 2 beta L_k + beta^2)."""
        drift = self.hamiltonian.astype(complex)
        diag = np.zeros(self.dimension, dtype=complex)
        n_channels = 0
        if self.spec.loss > 0:
            gamma = self.spec.loss
            for j, a in enumerate(self.annihilation):
                drift = drift + (-1j * beta * math.sqrt(gamma)) * a
                diag += -0.5j * gamma * self.occupations[j]
                n_channels += 1
        if self.spec.dephasing > 0:
            kappa = self.spec.dephasing
            for occ in self.occupations:
                diag += -0.5j * (kappa * occ**2 + 2.0 * beta * math.sqrt(kappa) * occ)
                n_channels += 1
        diag += -0.5j * beta**2 * n_channels
        return (drift + sparse.diags(diag)).tocsr()

    def channels(self, beta: float) -> list:
        """Shifted jump channels L_k + beta for the active dissipators."""
        chans = []
        if self.spec.loss > 0:
            root = math.sqrt(self.spec.loss)
            chans.extend(_LossChannel(a, root, beta) for a in self.annihilation)
        if self.spec.dephasing > 0:
            root = math.sqrt(self.spec.dephasing)
            chans.extend(_DephasingChannel(root * occ + beta) for occ in self.occupations)
        return chans


class _LossChannel:
    def __init__(self, a: sparse.csr_matrix, root_rate: float, beta: float):
        self.a = a
        self.root_rate = root_rate
        self.beta = beta

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.root_rate * (self.a @ psi) + self.beta * psi


class _DephasingChannel:
    def __init__(self, diagonal: np.ndarray):
        self.diagonal = diagonal

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.diagonal * psi


def build_operators(spec: LatticeSpec, fock: FockSpec) -> OperatorSet:
    """Annihilation, occupation and Hamiltonian operators on the product space.

    Raises if the cutoff list does not match the chain or the tensor
    dimension exceeds the Fock budget.
    """
    n = spec.n_sites
    if len(fock.cutoffs) != n:
        raise ValueError(f"need one cutoff per site: {len(fock.cutoffs)} cutoffs for {n} sites")
    dim = fock.dimension
    if dim > fock.budget:
        raise ValueError(
            f"truncated space dimension {dim} exceeds budget {fock.budget};"
            " lower the cutoffs or raise FockSpec.budget"
        )
    dims = fock.dims
    annihilation = []
    occupations = []
    for j, dj in enumerate(dims):
        local = sparse.diags(np.sqrt(np.arange(1, dj)), 1).tocsr()
        annihilation.append(_embed(local, dims, j))
        occupations.append(_occupation_diagonal(dims, j))

    diag = np.zeros(dim)
    for occ in occupations:
        diag += spec.onsite_energy * occ + spec.kerr * occ * (occ - 1.0)
    h = sparse.diags(diag).astype(complex).tocsr()
    for bond in range(n - 1):
        coupling = 1.0 if bond % 2 == 0 else spec.intercell
        hop = annihilation[bond].conj().T @ annihilation[bond + 1]
        h = h + coupling * (hop + hop.conj().T)
    f = spec.drive_vector
    for j in range(n):
        if f[j] != 0:
            h = h + f[j] * annihilation[j].conj().T + np.conj(f[j]) * annihilation[j]
    return OperatorSet(
        spec=spec,
        fock=fock,
        dimension=dim,
        annihilation=annihilation,
        occupations=occupations,
        hamiltonian=h.tocsr(),
    )


# ---------------------------------------------------------------------------
# dense steady-state oracle


@dataclass
class SteadyStateSolution:
    """Steady density matrix with expectation helpers."""

    spec: LatticeSpec
    fock: FockSpec
    operators: OperatorSet
    rho: np.ndarray

    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    def occupation(self, site: int) -> float:
        return float(np.real(self.rho.diagonal() @ self.operators.occupations[site]))

    def pair_moment(self, site: int) -> float:
        """<a^dag a^dag a a> at ``site``."""
        return float(np.real(self.rho.diagonal() @ self.operators.pair_moment_diagonal(site)))

    def g2_zero(self, site: int | None = None) -> float:
        if site is None:
            site = signal_site(self.spec.n_sites)
        den = self.occupation(site)
        if den == 0:
            raise UndefinedG2Error(f"zero occupation at site {site}: g2 undefined")
        return self.pair_moment(site) / den**2


MAX_LIOUVILLIAN_DIM = 300


def _basis_totals(fock: FockSpec) -> np.ndarray:
    """Total photon number of each product basis state."""
    totals = np.zeros(fock.dimension)
    for coord in np.unravel_index(np.arange(fock.dimension), fock.dims):
        totals += coord
    return totals


def _graded_base(f_base: float, max_exponent: float) -> float:
    # clamp so the scales stay normal floats at any cutoff
    return min(1.0, max(f_base, 10.0 ** (-250.0 / max(1.0, max_exponent))))


def _grading_scales(ops: OperatorSet) -> np.ndarray:
    """Equilibration scales F^(total photons of ket + bra) per vectorized entry.

    In the weakly driven regime rho is graded: an entry with m photons on
    the ket side and n on the bra side scales like F^(m+n), so the
    physically interesting pair populations sit at F^4 while rho_00 is
    O(1) and a plain linear solve loses them to roundoff.  Conjugating
    the Liouvillian with these scales makes every retained coupling O(1)
    and gives each entry full relative accuracy.
    """
    f_base = float(np.max(np.abs(ops.spec.drive_vector)))
    if f_base == 0.0:
        return np.ones(ops.dimension**2)
    totals = _basis_totals(ops.fock)
    f_base = _graded_base(f_base, 2.0 * float(totals.max()))
    return f_base ** (totals[:, None] + totals[None, :]).ravel(order="F")


def liouvillian_steady_state(spec: LatticeSpec, fock: FockSpec) -> SteadyStateSolution:
    """Direct solve of L[rho] = 0 with unit trace on the vectorized Liouvillian.

    The system is equilibrated by the drive-power grading of rho before
    solving (see _grading_scales); without it the two-photon populations,
    of order F^4, drown in the roundoff of the O(1) vacuum entry.
    Limited to tensor dimension <= MAX_LIOUVILLIAN_DIM; larger problems
    belong to wfmc_run.  Requires loss > 0 so the steady state is unique.
    """
    ops = build_operators(spec, fock)
    d = ops.dimension
    if d > MAX_LIOUVILLIAN_DIM:
        raise ValueError(
            f"tensor dimension {d} too large for the dense steady-state route"
            f" (limit {MAX_LIOUVILLIAN_DIM}); use wfmc_run instead"
        )
    if not spec.loss > 0:
        raise ValueError("steady state needs loss > 0 to be unique")
    eye = sparse.identity(d, format="csr", dtype=complex)
    h = ops.hamiltonian
    lind = -1j * (sparse.kron(eye, h) - sparse.kron(h.T, eye))
    for jump in ops.bare_jump_matrices():
        jdj = (jump.conj().T @ jump).tocsr()
        lind = lind + sparse.kron(jump.conj(), jump)
        lind = lind - 0.5 * (sparse.kron(eye, jdj) + sparse.kron(jdj.T, eye))
    scales = _grading_scales(ops)
    lind = lind.tocoo()
    data = lind.data * (scales[lind.col] / scales[lind.row])
    lind = sparse.coo_matrix((data, (lind.row, lind.col)), shape=lind.shape).tolil()
    trace_row = np.zeros(d * d)
    diag_positions = np.arange(d) * (d + 1)
    trace_row[diag_positions] = scales[diag_positions]
    lind[0, :] = trace_row
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    if d <= 100:
        x = scipy.sparse.linalg.spsolve(lind.tocsc(), rhs)
    else:
        # LU fill-in on the vectorized Liouvillian explodes past a few
        # thousand rows; the equilibrated system is well conditioned, so
        # GMRES converges without preconditioning
        x, info = scipy.sparse.linalg.gmres(
            lind.tocsr(), rhs, rtol=1e-13, atol=0.0, restart=100, maxiter=100
        )
        if info != 0:
            raise IntegrationError(
                f"steady-state GMRES failed to converge (info={info}, dimension {d})"
            )
    x = scales * x
    rho = x.reshape((d, d), order="F")
    rho = 0.5 * (rho + rho.conj().T)
    trace = float(rho.trace().real)
    if trace > 0:
        rho = rho / trace
    return SteadyStateSolution(spec=spec, fock=fock, operators=ops, rho=rho)


# ---------------------------------------------------------------------------
# trajectory statistics


@dataclass(frozen=True)
class TrajectoryConfig:
    """Knobs of the shifted-jump Monte Carlo run.

    Durations are in inverse intracell-coupling units.  ``t_record`` is
    also the span used to accumulate the denominator statistics of the
    delayed correlator.
    """

    beta: float = 0.1
    t_relax: float = 1.0e3
    t_record: float = 1.0e4
    n_traj: int = 10
    seed: int = 1
    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    sample_interval: float = 1.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        for name in ("t_relax", "t_record", "sample_interval"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.n_traj < 2:
            raise ValueError(f"need n_traj >= 2 for jackknife errors, got {self.n_traj}")


@dataclass(frozen=True)
class G2TauSeries:
    tau: np.ndarray
    values: np.ndarray
    errors: np.ndarray


class TrajectoryStats:
    """Jackknifed observables of a trajectory ensemble.

    ``g2_zero``/``g2_zero_err`` raise UndefinedG2Error when the mean
    signal occupation vanished (e.g. an undriven run), rather than
    handing back NaN.  ``g2_tau`` is None unless the delayed correlator
    was requested.
    """

    def __init__(
        self,
        occupations: np.ndarray,
        occupation_errs: np.ndarray,
        n_traj: int,
        seed: int,
        jump_count: int,
        resamples: int = 0,
        g2: tuple | None = None,
        g2_tau: G2TauSeries | None = None,
    ):
        self.occupations = occupations
        self.occupation_errs = occupation_errs
        self.n_traj = n_traj
        self.seed = seed
        self.jump_count = jump_count
        self.resamples = resamples
        self.g2_tau = g2_tau
        self._g2 = g2

    @property
    def g2_zero(self) -> float:
        if self._g2 is None:
            raise UndefinedG2Error("g2 undefined: mean signal occupation is zero")
        return self._g2[0]

    @property
    def g2_zero_err(self) -> float:
        if self._g2 is None:
            raise UndefinedG2Error("g2 undefined: mean signal occupation is zero")
        return self._g2[1]


def jackknife(samples) -> tuple:
    """Leave-one-out jackknife (mean, standard error) of scalar samples."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError(f"jackknife needs at least two samples, got {n}")
    loo = (x.sum() - x) / (n - 1)
    center = loo.mean()
    err = math.sqrt((n - 1) / n * float(((loo - center) ** 2).sum()))
    return float(x.mean()), err


def _ratio_jackknife(nums: np.ndarray, dens: np.ndarray) -> tuple:
    # estimator mean(num)/mean(den)^2, jackknifed over trajectories
    n = nums.shape[0]
    tn = nums.sum(axis=0)
    td = dens.sum()
    full = (tn / n) / (td / n) ** 2
    loo_den = ((td - dens) / (n - 1)) ** 2
    if nums.ndim > 1:
        loo_den = loo_den[:, None]
    loo = ((tn - nums) / (n - 1)) / loo_den
    center = loo.mean(axis=0)
    err = np.sqrt((n - 1) / n * ((loo - center) ** 2).sum(axis=0))
    return full, err


class _Unraveling:
    """Drift integration plus threshold-triggered shifted jumps."""

    def __init__(self, ops: OperatorSet, cfg: TrajectoryConfig):
        drift = ops.drift_matrix(cfg.beta)
        self.matrix = (-1j) * (drift.toarray() if ops.dimension <= 512 else drift.tocsr())
        self.channels = ops.channels(cfg.beta)
        self.rtol = cfg.rel_tol
        f_base = float(np.max(np.abs(ops.spec.drive_vector)))
        if f_base > 0.0:
            # grade the tolerance like the state itself: the n-photon
            # amplitudes are O(F^n), and a flat atol would let
            # integration noise swamp the pair amplitudes that g2 needs
            totals = _basis_totals(ops.fock)
            self.atol = cfg.abs_tol * _graded_base(f_base, float(totals.max())) ** totals
        else:
            self.atol = cfg.abs_tol

    def _rhs(self, t, y):
        return self.matrix @ y

    @staticmethod
    def _measure(y: np.ndarray, diag_obs: np.ndarray) -> np.ndarray:
        p = y.real**2 + y.imag**2
        return (diag_obs @ p) / p.sum()

    def evolve(
        self,
        psi: np.ndarray,
        r: float,
        t_start: float,
        t_end: float,
        rng: np.random.Generator,
        sample_times: np.ndarray | None = None,
        diag_obs: np.ndarray | None = None,
        label: str = "trajectory",
    ):
        """Advance [t_start, t_end]; returns (psi, r, samples, jump_count).

        ``sample_times`` must be sorted within [t_start, t_end]; each
        sample row in the result is the normalized expectation of the
        corresponding ``diag_obs`` row.
        """
        times = np.asarray(sample_times, dtype=float) if sample_times is not None else np.empty(0)
        n_obs = diag_obs.shape[0] if diag_obs is not None else 0
        out = np.empty((n_obs, times.size))
        ptr = 0
        jumps = 0
        t = t_start
        y = psi
        while ptr < times.size and times[ptr] <= t + 1e-12:
            if n_obs:
                out[:, ptr] = self._measure(y, diag_obs)
            ptr += 1
        while t < t_end - 1e-12:
            remaining = times[ptr:]
            extra_endpoint = remaining.size == 0 or remaining[-1] < t_end - 1e-12
            t_eval = np.append(remaining, t_end) if extra_endpoint else remaining

            def threshold(_t, _y, r=r):
                return float(_y.real @ _y.real + _y.imag @ _y.imag) - r

            threshold.terminal = True
            threshold.direction = -1
            sol = solve_ivp(
                self._rhs,
                (t, t_end),
                y,
                method="DOP853",
                rtol=self.rtol,
                atol=self.atol,
                t_eval=t_eval,
                events=threshold,
            )
            if sol.status < 0:
                raise IntegrationError(f"{label}: integrator failed near t={t}: {sol.message}")
            for col, t_col in enumerate(sol.t):
                if ptr < times.size and abs(t_col - times[ptr]) <= 1e-9:
                    if n_obs:
                        out[:, ptr] = self._measure(sol.y[:, col], diag_obs)
                    ptr += 1
            if sol.status == 1:
                t = float(sol.t_events[0][0])
                y = sol.y_events[0][0].astype(complex)
                y = self._jump(y, rng)
                r = rng.random()
                jumps += 1
            else:
                t = t_end
                y = sol.y[:, -1].astype(complex)
        return y, r, out, jumps

    def _jump(self, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        applied = [ch.apply(y) for ch in self.channels]
        weights = np.array([float(v.real @ v.real + v.imag @ v.imag) for v in applied])
        total = weights.sum()
        if total <= 0:
            raise IntegrationError("jump triggered with zero total channel weight")
        k = int(np.searchsorted(np.cumsum(weights), rng.random() * total, side="right"))
        k = min(k, len(applied) - 1)
        chosen = applied[k]
        return chosen / np.linalg.norm(chosen)


def _sample_grid(cfg: TrajectoryConfig) -> np.ndarray:
    count = int(math.floor(cfg.t_record / cfg.sample_interval + 1e-9)) + 1
    return cfg.t_relax + cfg.sample_interval * np.arange(count)


def _run_trajectory(args):
    ops, cfg, index, site, tau_grid, want_series = args
    spec = ops.spec
    n = spec.n_sites
    s = signal_site(n) if site is None else site
    rng = np.random.default_rng(cfg.seed ^ index)
    engine = _Unraveling(ops, cfg)
    label = f"trajectory {index}"

    obs = np.vstack([np.stack(ops.occupations), ops.pair_moment_diagonal(s)[None, :]])
    y = ops.vacuum()
    r = rng.random()
    y, r, _, jumps_relax = engine.evolve(y, r, 0.0, cfg.t_relax, rng, label=label + " (relax)")
    times = _sample_grid(cfg)
    y, r, samples, jumps_record = engine.evolve(
        y, r, cfg.t_relax, cfg.t_relax + cfg.t_record, rng, times, obs, label=label
    )
    result = {
        "occ": samples[:n].mean(axis=1),
        "num": float(samples[n].mean()),
        "den": float(samples[s].mean()),
        "jumps": jumps_relax + jumps_record,
        "resamples": 0,
    }
    if want_series:
        result["series"] = (times, samples[s].copy(), samples[n].copy())

    if tau_grid is not None:
        a_s = ops.annihilation[s]
        resamples = 0
        while True:
            phi = a_s @ y
            scale = np.linalg.norm(phi) / np.linalg.norm(y)
            if scale >= ANNIHILATION_FLOOR:
                break
            if resamples >= 1000:
                raise UndefinedG2Error(
                    f"{label}: signal annihilation kept vanishing after {resamples} resamples"
                )
            resamples += 1
            y, r, _, extra = engine.evolve(
                y, r, 0.0, cfg.sample_interval, rng, label=label + " (resample)"
            )
            result["jumps"] += extra
        p = y.real**2 + y.imag**2
        n0 = float((ops.occupations[s] @ p) / p.sum())
        phi = phi / np.linalg.norm(phi)
        tau_obs = ops.occupations[s][None, :]
        _, _, mseries, jumps_tau = engine.evolve(
            phi,
            rng.random(),
            0.0,
            float(tau_grid[-1]),
            rng,
            tau_grid,
            tau_obs,
            label=label + " (delay)",
        )
        result["jumps"] += jumps_tau
        result["resamples"] = resamples
        result["num_tau"] = mseries[0] * n0
    return result


def _resolve_workers(requested: int | None) -> int:
    cap = os.environ.get("UPB_THREADS")
    cap = int(cap) if cap else None
    if requested is None:
        requested = cap if cap is not None else 1
    if cap is not None:
        requested = min(requested, cap)
    return max(1, int(requested))


def _map_trajectories(ops, cfg, site, tau_grid, want_series, n_workers):
    workers = _resolve_workers(n_workers)
    arg_list = [(ops, cfg, k, site, tau_grid, want_series) for k in range(cfg.n_traj)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_trajectory, arg_list))
    return [_run_trajectory(a) for a in arg_list]


def _reduce_common(results):
    occs = np.stack([r["occ"] for r in results])
    occ_mean = np.empty(occs.shape[1])
    occ_err = np.empty(occs.shape[1])
    for j in range(occs.shape[1]):
        occ_mean[j], occ_err[j] = jackknife(occs[:, j])
    jumps = int(sum(r["jumps"] for r in results))
    resamples = int(sum(r["resamples"] for r in results))
    return occ_mean, occ_err, jumps, resamples


def wfmc_run(
    spec: LatticeSpec,
    fock: FockSpec,
    cfg: TrajectoryConfig,
    site: int | None = None,
    sample_log=None,
    n_workers: int | None = None,
) -> TrajectoryStats:
    """Stationary occupations and g2(0) from the shifted-jump ensemble.

    ``sample_log``, if given, is a path that receives one CSV record per
    sample: trajectory index, time, signal occupation, pair moment.
    """
    ops = build_operators(spec, fock)
    results = _map_trajectories(ops, cfg, site, None, sample_log is not None, n_workers)
    occ_mean, occ_err, jumps, resamples = _reduce_common(results)
    dens = np.array([r["den"] for r in results])
    nums = np.array([r["num"] for r in results])
    g2 = None
    if dens.mean() != 0:
        value, err = _ratio_jackknife(nums, dens)
        g2 = (float(value), float(err))
    if sample_log is not None:
        with open(sample_log, "w", encoding="utf-8") as fh:
            fh.write("trajectory,time,n_signal,pair_moment\n")
            for k, r in enumerate(results):
                times, n_sig, pair = r["series"]
                for t, a, b in zip(times, n_sig, pair):
                    fh.write(f"{k},{t:.17g},{a:.17g},{b:.17g}\n")
    return TrajectoryStats(
        occupations=occ_mean,
        occupation_errs=occ_err,
        n_traj=cfg.n_traj,
        seed=cfg.seed,
        jump_count=jumps,
        resamples=resamples,
        g2=g2,
    )


def g2_tau(
    spec: LatticeSpec,
    fock: FockSpec,
    cfg: TrajectoryConfig,
    tau_grid,
    site: int | None = None,
    n_workers: int | None = None,
) -> TrajectoryStats:
    """Delayed correlator g2(tau) on ``tau_grid`` by conditional evolution.

    Each trajectory relaxes, accumulates its occupation denominator over
    ``t_record``, then the signal mode is annihilated and the conditioned
    state is propagated under the same unraveling; the numerator is the
    conditioned occupation at tau times the occupation at the detection
    moment, averaged over trajectories.  States the annihilation maps
    below the norm floor are evolved a bit further and retried
    (counted in ``resamples``).
    """
    tau = np.asarray(tau_grid, dtype=float)
    if tau.size == 0 or np.any(np.diff(tau) <= 0) or tau[0] < 0:
        raise ValueError("tau_grid must be non-empty, strictly increasing and >= 0")
    ops = build_operators(spec, fock)
    results = _map_trajectories(ops, cfg, site, tau, False, n_workers)
    occ_mean, occ_err, jumps, resamples = _reduce_common(results)
    dens = np.array([r["den"] for r in results])
    nums = np.stack([r["num_tau"] for r in results])
    if dens.mean() == 0:
        raise UndefinedG2Error("g2(tau) undefined: mean signal occupation is zero")
    values, errors = _ratio_jackknife(nums, dens)
    series = G2TauSeries(tau=tau, values=values, errors=errors)
    g2 = (float(values[0]), float(errors[0])) if tau[0] == 0 else None
    return TrajectoryStats(
        occupations=occ_mean,
        occupation_errs=occ_err,
        n_traj=cfg.n_traj,
        seed=cfg.seed,
        jump_count=jumps,
        resamples=resamples,
        g2=g2,
        g2_tau=series,
    )
