import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from surfdecay.dynamics import (CESIUM_D2_GAMMA0, DensityMatrix, DriveField, LevelBasis,
                                MasterEquation, RabiMatrix, decay_generator,
                                diagonal_decay_populations, driven_generator, evolve,
                                two_level_steady_state)
from surfdecay.errors import BasisMismatch, DomainError, StiffnessFailure
from surfdecay.overlaps import franck_condon_factors
from surfdecay.pipeline import lifetime_fit
from surfdecay.rates import RateTensor, build_rate_tensor

GAMMA0 = CESIUM_D2_GAMMA0


@pytest.fixture(scope="module")
def small(window_excited, window_ground, atom, quad):
    """Two excited and four ground levels near the top of the well, with their rates."""
    ex = [s for s in window_excited if s.nu in (427, 428)]
    gr = list(window_ground)[-4:]
    basis = LevelBasis(ex, gr, atom.omega0)
    return basis, build_rate_tensor(ex, gr, atom=atom, quad=quad)


def random_rho(basis, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(basis.dim, basis.dim)) + 1j * rng.normal(size=(basis.dim, basis.dim))
    rho = m @ m.conj().T
    return DensityMatrix(basis, rho / np.trace(rho))


def test_basis_validation(window_excited, window_ground, atom):
    ex, gr = window_excited[:2], window_ground[:2]
    b = LevelBasis(ex, gr, atom.omega0)
    assert b.dim == 4 and b.labels() == [f"e{ex[0].nu}", f"e{ex[1].nu}",
                                         f"g{gr[0].nu}", f"g{gr[1].nu}"]
    with pytest.raises(DomainError):
        LevelBasis([ex[0], ex[0]], gr, atom.omega0)
    with pytest.raises(DomainError):
        LevelBasis(ex, gr, atom.omega0, np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        LevelBasis(ex, gr, atom.omega0, np.ones(3))
    with pytest.raises(BasisMismatch):
        DensityMatrix(b, np.eye(3))


def test_density_matrix_validity(small):
    basis, _ = small
    assert DensityMatrix.pure_level(basis, 0).is_valid()
    assert random_rho(basis, 1).is_valid()
    bad = np.eye(basis.dim) / basis.dim
    bad[0, 1] = 0.1
    assert not DensityMatrix(basis, bad).is_valid()
    neg = np.diag([1.2, -0.2] + [0.0] * (basis.dim - 2))
    assert DensityMatrix(basis, neg).violations()["negative_diagonal"] == pytest.approx(0.2)


def test_drive_wave_number(atom):
    d = DriveField.plane_wave(1e6, atom.omega0, -1)
    assert d.beta_l == pytest.approx(-atom.k0, rel=1e-12)
    with pytest.raises(DomainError):
        DriveField(1e6, atom.omega0, 2 * atom.k0)
    with pytest.raises(DomainError):
        DriveField(1e6, 0.0, 0.0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), t=st.floats(0.0, 1e-6))
def test_generator_trace_and_hermiticity(small, seed, t):
    basis, rates = small
    rho = random_rho(basis, seed)
    d = decay_generator(rho, t, rates, gamma0=GAMMA0)
    scale = np.max(np.abs(d))
    assert abs(np.trace(d)) < 1e-12 * scale
    assert np.max(np.abs(d - d.conj().T)) < 1e-12 * scale


def test_ground_inflow_for_diagonal_state(small):
    basis, rates = small
    p = np.array([0.6, 0.4, 0, 0, 0, 0], dtype=float)
    d = decay_generator(DensityMatrix(basis, np.diag(p)), 0.0, rates, gamma0=GAMMA0)
    inflow = d.diagonal().real[2:].sum()
    assert inflow == pytest.approx(GAMMA0 * np.dot(rates.gamma_a, p[:2]), rel=1e-12)
    np.testing.assert_allclose(d.diagonal().real[:2], -GAMMA0 * rates.gamma_a * p[:2], rtol=1e-12)


def test_empty_drive_list(small):
    basis, rates = small
    rho = random_rho(basis, 3)
    np.testing.assert_array_equal(driven_generator(rho, 2e-8, rates, [], gamma0=GAMMA0),
                                  decay_generator(rho, 2e-8, rates, gamma0=GAMMA0))


def test_tensor_must_cover_basis(small, window_ground, atom):
    basis, rates = small
    other = LevelBasis(basis.excited, list(window_ground)[:2], atom.omega0)
    with pytest.raises(BasisMismatch):
        MasterEquation(other, rates)


def _two_level(atom, window_excited, window_ground):
    pair = LevelBasis(window_excited[:1], window_ground[:1], atom.omega0)
    return pair, RateTensor(pair.excited, pair.ground, np.ones((1, 1, 1, 1)))


@pytest.mark.parametrize("detuning_over_gamma", [0.0, 0.3, 1.0])
def test_two_level_steady_state(atom, window_excited, window_ground, detuning_over_gamma):
    pair, unit = _two_level(atom, window_excited, window_ground)
    a, b = pair.excited[0], pair.ground[0]
    rabi, detuning = 0.1 * GAMMA0, detuning_over_gamma * GAMMA0
    omega_l = pair.omega0 + a.energy - b.energy + detuning / (2 * math.pi)
    drive = DriveField.plane_wave(rabi, omega_l)
    t_end = 40.0 / GAMMA0
    out = evolve(DensityMatrix.pure_level(pair, 1), t_end, unit, drives=[drive],
                 rabi=RabiMatrix(np.full((1, 1, 1), rabi, dtype=complex)), tol=1e-10,
                 t_eval=[t_end])
    expected = two_level_steady_state(rabi, detuning, GAMMA0)
    assert out.populations[-1, 0] == pytest.approx(expected, abs=1e-4)


def test_single_level_exponential(small):
    basis, rates = small
    single = LevelBasis(basis.excited[:1], basis.ground, basis.omega0)
    tensor = RateTensor(single.excited, single.ground, rates.gamma_aabb[:1, :1])
    rate = float(tensor.gamma_a[0]) * GAMMA0
    times = np.linspace(0, 5 / rate, 41)
    traj = evolve(DensityMatrix.pure_level(single, 0), times[-1], tensor, t_eval=times)
    assert abs(lifetime_fit(times, traj.populations[:, 0]) / rate - 1) < 1e-6
    assert traj.audit["trace_drift"] < 1e-8


def test_diagonal_oracle(small):
    basis, rates = small
    diag_only = np.zeros_like(rates.gamma_aabb)
    for i in range(basis.n_excited):
        for j in range(basis.n_ground):
            diag_only[i, i, j, j] = rates.gamma_aabb[i, i, j, j]
    tensor = RateTensor(basis.excited, basis.ground, diag_only)
    p0 = np.array([0.7, 0.3, 0, 0, 0, 0], dtype=float)
    times = np.linspace(0, 3 / (GAMMA0 * tensor.gamma_a.min()), 9)
    traj = evolve(DensityMatrix(basis, np.diag(p0)), times[-1], tensor, t_eval=times)
    ref = diagonal_decay_populations(tensor, GAMMA0, p0, times)
    assert np.max(np.abs(traj.populations - ref)) < 1e-5


def test_zero_duration(small):
    basis, rates = small
    rho0 = random_rho(basis, 5)
    traj = evolve(rho0, 0.0, rates)
    assert traj.states.shape[0] == 2
    np.testing.assert_array_equal(traj.states[-1], rho0.rho)
    with pytest.raises(DomainError):
        evolve(rho0, -1.0, rates)


def test_trajectory_audit(small):
    basis, rates = small
    rate = GAMMA0 * rates.gamma_a.max()
    traj = evolve(DensityMatrix.pure_level(basis, 0), 5 / rate, rates,
                  t_eval=np.linspace(0, 5 / rate, 21))
    assert traj.audit["trace_drift"] < 1e-8
    assert traj.audit["hermiticity"] < 1e-8
    assert traj.audit["positivity_ok"]
    for i in range(len(traj.times)):
        assert traj[i].min_eigenvalue() > -1e-7


def test_secular_matches_full(window_excited, window_ground, atom, quad):
    ex = [s for s in window_excited if s.nu in (385, 386, 387)]
    fc = franck_condon_factors(ex[0], window_ground)
    gr = [window_ground[i] for i in sorted(np.argsort(fc)[-6:])]
    basis = LevelBasis(ex, gr, atom.omega0)
    rates = build_rate_tensor(ex, gr, atom=atom, quad=quad)
    t_end = 3 / (GAMMA0 * rates.gamma_a.min())
    times = np.linspace(0, t_end, 13)
    rho0 = DensityMatrix.pure_level(basis, 0)
    full = evolve(rho0, t_end, rates, t_eval=times)
    sec = evolve(rho0, t_end, rates, t_eval=times, secular=True)
    assert np.max(np.abs(full.populations - sec.populations)) < 1e-2


def test_momentum_route_rabi(window_excited, window_ground, atom):
    basis = LevelBasis(window_excited[-2:], list(window_ground)[-3:], atom.omega0)
    drives = [DriveField.plane_wave(1e6, atom.omega0, 1), DriveField.plane_wave(1e6, atom.omega0, -1)]
    direct = RabiMatrix.build(basis, drives).Omega
    momentum = RabiMatrix.build(basis, drives, method="momentum").Omega
    assert np.max(np.abs(direct - momentum)) < 1e-5 * 1e6
    with pytest.raises(DomainError):
        RabiMatrix.build(basis, drives, method="bogus")


def test_driven_trace_conserved(small, atom):
    basis, rates = small
    a, b = basis.excited[0], basis.ground[-1]
    drive = DriveField.plane_wave(0.5 * GAMMA0, atom.omega0 + a.energy - b.energy)
    t_end = 5 / GAMMA0
    traj = evolve(DensityMatrix.pure_level(basis, basis.dim - 1), t_end, rates, drives=[drive],
                  t_eval=np.linspace(0, t_end, 11), secular=True)
    assert traj.audit["trace_drift"] < 1e-8
    assert traj.audit["positivity_ok"]
    assert traj.populations[:, 0].max() > 1e-4


def test_relaxation_extension(small):
    basis, rates = small
    r = np.zeros((basis.dim, basis.dim))
    r[basis.dim - 1, basis.dim - 2] = 0.5 * GAMMA0
    t_end = 4 / (GAMMA0 * rates.gamma_a.max())
    rho0 = random_rho(basis, 11)
    traj = evolve(rho0, t_end, rates, relaxation=r, t_eval=np.linspace(0, t_end, 9))
    assert traj.audit["trace_drift"] < 1e-8
    plain = evolve(rho0, t_end, rates, t_eval=[0.0, t_end])
    assert traj.populations[-1, -1] > plain.populations[-1, -1]
    with pytest.raises(BasisMismatch):
        evolve(rho0, t_end, rates, relaxation=-r)


def test_stiffness_failure(small):
    basis, rates = small
    with pytest.raises(StiffnessFailure, match="secular"):
        evolve(DensityMatrix.pure_level(basis, 0), 1e-6, rates, max_evaluations=10)
