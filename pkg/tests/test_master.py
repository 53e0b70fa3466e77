"""Truncated-Fock master equation: operators, dense steady state, Monte Carlo."""

import csv
from dataclasses import replace

import numpy as np
import pytest

from upbchain import (
    FockSpec,
    LatticeSpec,
    TrajectoryConfig,
    UndefinedG2Error,
    build_operators,
    g2_tau,
    g2_zero_delay,
    jackknife,
    liouvillian_steady_state,
    optimal_point,
    solve_weak_drive,
    wfmc_run,
)


def optimum_spec(f1: float, gamma: float = 0.3) -> LatticeSpec:
    point = optimal_point(2, gamma)
    return LatticeSpec(
        n_sites=2,
        intercell=0.1,
        onsite_energy=point.onsite_energy,
        loss=gamma,
        kerr=point.kerr,
        drive=f1,
    )


STRONG = optimum_spec(0.3)
WEAK_CFG = TrajectoryConfig(t_relax=300.0, t_record=500.0, n_traj=4, seed=3)


@pytest.fixture(scope="module")
def weak_run():
    return wfmc_run(optimum_spec(1e-4), FockSpec.uniform(2, 3), WEAK_CFG)


# -- Fock space and operators -----------------------------------------------


def test_fock_spec_dims():
    fock = FockSpec.uniform(4, 3)
    assert fock.dims == (4, 4, 4, 4)
    assert fock.dimension == 256
    mixed = FockSpec(cutoffs=(2, 1, 3))
    assert mixed.dims == (3, 2, 4)
    assert mixed.dimension == 24


def test_fock_spec_rejects_empty_and_zero_cutoffs():
    with pytest.raises(ValueError):
        FockSpec(cutoffs=())
    with pytest.raises(ValueError):
        FockSpec(cutoffs=(3, 0))


def test_build_operators_validation():
    spec = LatticeSpec(n_sites=4, loss=0.1)
    with pytest.raises(ValueError, match="cutoff"):
        build_operators(spec, FockSpec.uniform(2, 3))
    with pytest.raises(ValueError, match="budget"):
        build_operators(spec, FockSpec.uniform(4, 3, budget=100))


def _index_of(ops, occ_pattern):
    mask = np.ones(ops.dimension, dtype=bool)
    for site, n in enumerate(occ_pattern):
        mask &= ops.occupations[site] == n
    (idx,) = np.nonzero(mask)
    return int(idx[0])


def test_annihilation_ladder_elements():
    ops = build_operators(LatticeSpec(n_sites=2, loss=0.1), FockSpec.uniform(2, 3))
    a0 = ops.annihilation[0].toarray()
    for n in (1, 2, 3):
        src = _index_of(ops, (n, 0))
        dst = _index_of(ops, (n - 1, 0))
        assert a0[dst, src] == pytest.approx(np.sqrt(n), rel=1e-15)


def test_commutator_is_identity_below_cutoff():
    cutoff = 3
    ops = build_operators(LatticeSpec(n_sites=2, loss=0.1), FockSpec.uniform(2, cutoff))
    for j, a in enumerate(ops.annihilation):
        comm = (a @ a.conj().T - a.conj().T @ a).toarray()
        below = ops.occupations[j] < cutoff
        np.testing.assert_allclose(np.diag(comm)[below], 1.0, atol=1e-14)
        assert np.max(np.abs(comm - np.diag(np.diag(comm)))) == 0.0


def test_single_pair_hopping_block():
    # one dimer, one photon max per site: the only matrix elements are the
    # intracell hop between |01> and |10>
    spec = LatticeSpec(n_sites=2, loss=0.1)
    ops = build_operators(spec, FockSpec.uniform(2, 1))
    h = ops.hamiltonian.toarray()
    i01 = _index_of(ops, (0, 1))
    i10 = _index_of(ops, (1, 0))
    assert h[i01, i10] == 1.0 and h[i10, i01] == 1.0
    assert np.count_nonzero(h) == 2


def test_hamiltonian_hermitian():
    spec = LatticeSpec(
        n_sites=2, intercell=0.1, onsite_energy=0.2, loss=0.3, kerr=5e-3, drive=0.05
    )
    h = build_operators(spec, FockSpec.uniform(2, 3)).hamiltonian
    assert np.max(np.abs((h - h.conj().T).toarray())) == 0.0


# -- dense steady state ------------------------------------------------------


def test_undriven_steady_state_is_vacuum():
    spec = LatticeSpec(n_sites=2, intercell=0.1, loss=0.4)
    sol = liouvillian_steady_state(spec, FockSpec.uniform(2, 2))
    rho = sol.rho
    assert rho[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(rho.flatten()[1:])) < 1e-12
    assert sol.trace() == pytest.approx(1.0, abs=1e-12)
    assert sol.purity() == pytest.approx(1.0, abs=1e-12)


def test_driven_steady_state_is_physical():
    spec = LatticeSpec(
        n_sites=2, intercell=0.1, onsite_energy=0.2, loss=0.3, kerr=5e-3, drive=0.05
    )
    sol = liouvillian_steady_state(spec, FockSpec.uniform(2, 3))
    rho = sol.rho
    assert np.max(np.abs(rho - rho.conj().T)) < 1e-10
    assert np.linalg.eigvalsh(rho).min() > -1e-10
    assert sol.trace() == pytest.approx(1.0, abs=1e-10)
    assert 0 < sol.occupation(0) < 1
    assert sol.pair_moment(0) > 0


def test_dense_route_matches_weak_drive_hierarchy():
    # four sites exercises the iterative solver branch (dimension 256)
    spec = LatticeSpec(
        n_sites=4, intercell=0.1, onsite_energy=0.21, loss=0.34, kerr=2e-3, drive=1e-3
    )
    dense = liouvillian_steady_state(spec, FockSpec.uniform(4, 3)).g2_zero()
    wd = g2_zero_delay(solve_weak_drive(spec, method="exact"))
    assert abs(dense - wd) / wd < 1e-2


def test_dense_route_dimension_guard():
    spec = LatticeSpec(n_sites=6, intercell=0.1, loss=0.3, drive=1e-3)
    with pytest.raises(ValueError, match="wfmc_run"):
        liouvillian_steady_state(spec, FockSpec.uniform(6, 3))


def test_dense_route_needs_loss():
    spec = LatticeSpec(n_sites=2, intercell=0.1, drive=1e-3)
    with pytest.raises(ValueError, match="loss"):
        liouvillian_steady_state(spec, FockSpec.uniform(2, 2))


def test_dephasing_degrades_antibunching():
    base = optimum_spec(1e-3)
    values = []
    for kappa in (0.0, 1e-4, 1e-3, 1e-2):
        spec = replace(base, dephasing=kappa)
        values.append(liouvillian_steady_state(spec, FockSpec.uniform(2, 3)).g2_zero())
    assert all(a < b for a, b in zip(values, values[1:]))
    assert values[-1] / values[0] > 5


# -- trajectory configuration and jackknife ----------------------------------


def test_trajectory_config_validation():
    with pytest.raises(ValueError, match="beta"):
        TrajectoryConfig(beta=-0.1)
    with pytest.raises(ValueError, match="t_record"):
        TrajectoryConfig(t_record=0.0)
    with pytest.raises(ValueError, match="n_traj"):
        TrajectoryConfig(n_traj=1)
    with pytest.raises(ValueError, match="tolerances"):
        TrajectoryConfig(abs_tol=0.0)


def test_jackknife_constant_samples():
    mean, err = jackknife([2.5, 2.5, 2.5])
    assert mean == 2.5 and err == 0.0


def test_jackknife_two_samples():
    mean, err = jackknife([0.0, 2.0])
    assert mean == pytest.approx(1.0)
    assert err == pytest.approx(1.0)


def test_jackknife_permutation_invariant():
    samples = [0.3, 1.7, 0.9, 2.4]
    fwd = jackknife(samples)
    rev = jackknife(samples[::-1])
    assert fwd == pytest.approx(rev, rel=1e-14)


def test_jackknife_needs_two_samples():
    with pytest.raises(ValueError):
        jackknife([1.0])


# -- Monte Carlo -------------------------------------------------------------


def test_wfmc_undriven_gives_no_counts():
    cfg = TrajectoryConfig(t_relax=1.0, t_record=5.0, n_traj=2, seed=1)
    stats = wfmc_run(LatticeSpec(n_sites=2, loss=0.3), FockSpec.uniform(2, 2), cfg)
    assert np.all(stats.occupations == 0)
    assert stats.jump_count == 0
    with pytest.raises(UndefinedG2Error):
        stats.g2_zero


def test_wfmc_bitwise_deterministic():
    cfg = TrajectoryConfig(t_relax=20.0, t_record=50.0, n_traj=2, seed=9)
    fock = FockSpec.uniform(2, 3)
    a = wfmc_run(STRONG, fock, cfg)
    b = wfmc_run(STRONG, fock, cfg)
    assert np.array_equal(a.occupations, b.occupations)
    assert a.g2_zero == b.g2_zero and a.g2_zero_err == b.g2_zero_err
    assert a.jump_count == b.jump_count


def test_wfmc_worker_count_does_not_change_results():
    cfg = TrajectoryConfig(t_relax=20.0, t_record=50.0, n_traj=2, seed=9)
    fock = FockSpec.uniform(2, 3)
    serial = wfmc_run(STRONG, fock, cfg, n_workers=1)
    pooled = wfmc_run(STRONG, fock, cfg, n_workers=2)
    assert np.array_equal(serial.occupations, pooled.occupations)
    assert serial.g2_zero == pooled.g2_zero


def test_wfmc_matches_dense_weak_drive(weak_run):
    dense = liouvillian_steady_state(optimum_spec(1e-4), FockSpec.uniform(2, 3))
    pull = abs(weak_run.g2_zero - dense.g2_zero()) / weak_run.g2_zero_err
    assert pull < 3.0
    occ_pull = abs(weak_run.occupations[0] - dense.occupation(0))
    assert occ_pull < 3.0 * weak_run.occupation_errs[0]


def test_wfmc_cutoff_converged(weak_run):
    wider = wfmc_run(optimum_spec(1e-4), FockSpec.uniform(2, 4), WEAK_CFG)
    sigma = np.hypot(weak_run.g2_zero_err, wider.g2_zero_err)
    assert abs(weak_run.g2_zero - wider.g2_zero) < max(sigma, 1e-15)


def test_wfmc_unraveling_invariance():
    # the shift parameter changes the jump record, not the physics
    cfg0 = TrajectoryConfig(beta=0.0, t_relax=50.0, t_record=400.0, n_traj=6, seed=11)
    cfg1 = replace(cfg0, beta=0.1)
    fock = FockSpec.uniform(2, 3)
    plain = wfmc_run(STRONG, fock, cfg0)
    shifted = wfmc_run(STRONG, fock, cfg1)
    assert plain.jump_count != shifted.jump_count
    sigma = np.hypot(plain.g2_zero_err, shifted.g2_zero_err)
    assert abs(plain.g2_zero - shifted.g2_zero) < 3.0 * sigma


def test_wfmc_sample_log(tmp_path):
    path = tmp_path / "samples.csv"
    cfg = TrajectoryConfig(t_relax=10.0, t_record=20.0, n_traj=2, seed=5)
    wfmc_run(STRONG, FockSpec.uniform(2, 3), cfg, sample_log=str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["trajectory", "time", "n_signal", "pair_moment"]
    body = rows[1:]
    assert len(body) > 0 and all(len(r) == 4 for r in body)
    ids = {r[0] for r in body}
    assert ids == {"0", "1"}
    assert all(float(r[2]) >= 0 for r in body)


# -- delayed correlator ------------------------------------------------------


def test_g2_tau_zero_point_matches_direct(weak_run):
    grid = np.linspace(0.0, 20.0, 41)
    stats = g2_tau(optimum_spec(1e-4), FockSpec.uniform(2, 3), WEAK_CFG, grid)
    series = stats.g2_tau
    np.testing.assert_array_equal(series.tau, grid)
    assert np.all(series.errors > 0)
    sigma = np.hypot(series.errors[0], weak_run.g2_zero_err)
    assert abs(series.values[0] - weak_run.g2_zero) < 3.0 * sigma


def test_g2_tau_grid_validation():
    fock = FockSpec.uniform(2, 3)
    cfg = TrajectoryConfig(t_relax=1.0, t_record=5.0, n_traj=2, seed=1)
    with pytest.raises(ValueError):
        g2_tau(STRONG, fock, cfg, np.array([]))
    with pytest.raises(ValueError):
        g2_tau(STRONG, fock, cfg, np.array([-1.0, 0.0]))
    with pytest.raises(ValueError):
        g2_tau(STRONG, fock, cfg, np.array([0.0, 2.0, 1.0]))
