import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_hermitian, random_state
from qsllab.dynamics import (
    AffineHamiltonian, HamiltonianFunction, TimeGrid, adexp_h1, adiabatic_state,
    counterdiabatic, counterdiabatic_samples, cumtrapz, evolved_basis, propagate,
    propagate_diagonal, split_in_basis, time_derivative, trapz,
)
from qsllab.errors import DimensionError, GapCollisionError, NormDriftError
from qsllab.models import tfim as tm
from qsllab.models.two_level import TwoLevelModel
from qsllab.qcore import SX, SY, SZ, eig_herm, expectation, variance_sqrt
from qsllab.schedules import boundary_flat, linear


def const(m):
    m = np.asarray(m, dtype=complex)
    return HamiltonianFunction(lambda t: m, lambda t: np.zeros_like(m))


def sweep(T=50.0, shape=linear):
    return TwoLevelModel(1.0, shape(np.pi / 2, 0.0, T))


def test_time_grid():
    g = TimeGrid(0.0, 2.0, 5)
    assert g.dt == 0.5 and np.allclose(g.points, [0, .5, 1, 1.5, 2])
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1.0, 5)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 1)


def test_quadrature_helpers():
    t = np.linspace(0, 1, 11)
    assert abs(trapz(t, t) - 0.5) < 1e-15
    assert np.allclose(cumtrapz(2 * t, t), t ** 2, atol=1e-2)
    assert np.allclose(time_derivative(t ** 2, t), 2 * t, atol=1e-12)


def test_stationary_state():
    tr = propagate(const(0.5 * SZ), np.array([1, 0j]), TimeGrid(0, 7.0, 200))
    assert abs(abs(tr.states[-1] @ tr.states[0].conj()) - 1) < 1e-14


def test_rabi_half_period():
    tr = propagate(const(0.5 * SX), np.array([1, 0j]), TimeGrid(0, np.pi, 2001))
    assert abs(abs(tr.states[-1][1]) - 1) < 1e-8
    assert abs(tr.states[-1][1] / abs(tr.states[-1][1]) - (-1j)) < 1e-8


def test_self_convergence():
    h = sweep().hamiltonian()
    psi0 = np.array([1, -1], dtype=complex) / np.sqrt(2)
    a = propagate(h, psi0, TimeGrid(0, 50, 50001))
    b = propagate(h, psi0, TimeGrid(0, 50, 6251), substeps=64)
    assert np.linalg.norm(a.states[-1] - b.states[-1]) < 1e-8


def test_norm_drift_error_and_dim_check():
    with pytest.raises(NormDriftError):
        propagate(const(5.0 * SX), np.array([1, 0j]), TimeGrid(0, 100.0, 101))
    with pytest.raises(DimensionError):
        propagate(const(SX), np.ones(3) / np.sqrt(3), TimeGrid(0, 1.0, 11))


def test_energy_conserved_for_static_h(rng):
    h = random_hermitian(rng, 5)
    tr = propagate(const(h), random_state(rng, 5), TimeGrid(0, 10.0, 4001))
    e = [expectation(h, s) for s in tr.states]
    assert np.ptp(e) < 1e-8


def test_propagate_diagonal():
    psi = np.array([0.6, 0.8j])
    assert np.allclose(propagate_diagonal([1.0, 2.0], psi, 0.0), psi)
    out = propagate_diagonal([3.0, 3.0], psi, 1.7)
    assert abs(abs(np.vdot(psi, out)) - 1) < 1e-15
    e = np.array([-1.0, 0.3, 2.0])
    psi3 = np.ones(3) / np.sqrt(3)
    tr = propagate(const(np.diag(e)), psi3.astype(complex), TimeGrid(0, 3.0, 3001))
    assert np.max(np.abs(tr.states[-1] - propagate_diagonal(e, psi3, 3.0))) < 1e-8


def test_adiabatic_state_constant():
    h = np.array([[1.0, 0.2], [0.2, -0.4]])
    grid = TimeGrid(0, 5.0, 501)
    ad = adiabatic_state(const(h), 0, grid)
    w, _ = eig_herm(h)
    assert np.allclose(ad.states, np.exp(-1j * w[0] * grid.points)[:, None] * ad.states[0], atol=1e-10)


def test_adiabatic_state_two_level_ground():
    m = sweep()
    grid = TimeGrid(0, 50, 501)
    ad = adiabatic_state(m.hamiltonian(), 0, grid)
    ref = m.ground_state(grid.points)
    assert np.max(np.abs(np.abs(np.einsum("ti,ti->t", ref.conj(), ad.states)) - 1)) < 1e-12


def test_adiabatic_state_index_error():
    with pytest.raises(IndexError):
        adiabatic_state(const(SZ), 2, TimeGrid(0, 1, 5))


def test_tfim_mode_state_at_critical_point():
    model = tm.TfimModel(4, linear(1.0, 1.0 + 1e-9, 1.0), linear(1.0, 1.0, 1.0))
    hk, th = tm.tfim_mode(model, np.pi / 2, 0.0)
    assert abs(th - np.pi / 4) < 1e-8
    _, v = eig_herm(hk)
    assert abs(abs(np.vdot(v[:, 0], tm.mode_ground_state(np.pi / 4))) - 1) < 1e-8


def test_counterdiabatic_two_level_closed_form():
    m = sweep(shape=boundary_flat)
    h = m.hamiltonian()
    for t in (0.3, 10.0, 25.0, 49.0):
        ref = 0.5 * m.theta.deriv(t) * SY
        assert np.max(np.abs(counterdiabatic(h, t) - ref)) < 1e-12
    t = np.linspace(0, 50, 11)
    assert np.max(np.abs(counterdiabatic_samples(h, t) - m.counterdiabatic_samples(t))) < 1e-12


def test_counterdiabatic_constant_is_zero():
    assert np.max(np.abs(counterdiabatic(const(np.diag([0.0, 1.0, 3.0])), 1.0))) == 0.0


def test_counterdiabatic_gap_collision():
    with pytest.raises(GapCollisionError):
        counterdiabatic(const(np.eye(2)), 0.0)


def _poly_h(rng, d=4):
    m0, m1, m2 = (random_hermitian(rng, d) for _ in range(3))
    m0 = m0 + np.diag(np.arange(d) * 2.5)  # keep levels well separated
    return HamiltonianFunction(lambda t: m0 + t * m1 + t * t * m2, lambda t: m1 + 2 * t * m2)


def test_counterdiabatic_generates_adiabatic_propagator(rng):
    h = _poly_h(rng)
    grid = TimeGrid(0, 1.0, 16001)
    u = np.stack([adiabatic_state(h, n, grid).states for n in range(4)], axis=-1)
    du = time_derivative(u, grid.points)
    hs = h.samples(grid.points)
    cd = counterdiabatic_samples(h, grid.points)
    resid = 1j * du - np.einsum("tij,tjn->tin", hs + cd, u)
    assert np.max(np.linalg.norm(resid[2:-2], axis=1)) < 1e-6


def test_counterdiabatic_zero_diagonal_and_gauge_invariance(rng):
    h = _poly_h(rng)
    w, v = eig_herm(h(0.4))
    cd = counterdiabatic(h, 0.4, eig=(w, v))
    assert np.max(np.abs(np.diag(v.conj().T @ cd @ v))) < 1e-12
    ph = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    cd2 = counterdiabatic(h, 0.4, eig=(w, v * ph))
    psi = random_state(rng, 4)
    assert abs(variance_sqrt(cd, psi) - variance_sqrt(cd2, psi)) < 1e-10


def test_fd_fallback_matches_analytic(rng):
    h = _poly_h(rng)
    h_fd = HamiltonianFunction(h._eval)
    assert np.max(np.abs(counterdiabatic(h, 0.5) - counterdiabatic(h_fd, 0.5, fd_step=1e-4))) < 1e-7


def test_split_reconstructs(rng):
    hm = random_hermitian(rng, 5)
    _, u = eig_herm(random_hermitian(rng, 5))
    h0, h1 = split_in_basis(hm, u)
    assert np.max(np.abs(h0 + h1 - hm)) < 1e-12
    assert np.max(np.abs(h1 - h1.conj().T)) < 1e-12
    with pytest.raises(NormDriftError):
        split_in_basis(hm, 1.01 * u)


def test_moving_basis_static_h_gives_zero_h1(rng):
    hm = random_hermitian(rng, 4)
    grid = TimeGrid(0, 3.0, 1501)
    basis = evolved_basis(const(hm), grid)
    _, h1 = split_in_basis(np.broadcast_to(hm, (grid.n_steps, 4, 4)), basis)
    assert np.max(np.abs(h1)) < 1e-8


def test_moving_basis_time_zero():
    m = sweep(shape=boundary_flat)
    h = m.hamiltonian()
    basis = evolved_basis(h, TimeGrid(0, 50, 5001))
    _, h1 = split_in_basis(h(0.0), basis[0])
    assert np.max(np.abs(h1)) < 1e-12


def test_moving_basis_quench_reduction():
    # diagonal quench Hamiltonian, basis = S^x eigenbasis at t=0
    N, J, hf = 6, 1.0, 0.7
    m = np.arange(N + 1) - N / 2
    H = np.diag(-2 * (J * m * m / N + hf * m)).astype(complex)
    s = np.sqrt(np.arange(1, N + 1) * np.arange(N, 0, -1))
    sx = (np.diag(s, 1) + np.diag(s, -1)) / 2
    _, vx = np.linalg.eigh(sx)
    vx = vx[:, ::-1]  # column 0 is S^x = N/2
    grid = TimeGrid(0, 2.0, 4001)
    basis = evolved_basis(const(H), grid, initial=vx)
    _, h1 = split_in_basis(np.broadcast_to(H, (grid.n_steps, N + 1, N + 1)), basis)
    psi0, psi = vx[:, 0], basis[:, :, 0]
    lhs = np.einsum("i,tij,tj->t", psi0.conj(), h1, psi)
    e0 = np.vdot(psi0, H @ psi0).real
    rhs = psi @ (H @ psi0).conj() - (psi @ psi0.conj()) * e0
    assert np.max(np.abs(lhs - rhs)) < 1e-8
    assert abs(e0 + J / 2) < 1e-12


def test_adexp_h1_constant_and_first_order():
    grid = TimeGrid(0, 1.0, 101)
    assert np.max(np.abs(adexp_h1(const(np.diag([0.0, 2.0])), 0.5, grid))) < 1e-14
    m = sweep()
    h = m.hamiltonian()
    grid = TimeGrid(0, 50, 501)
    for t in (0.0, 20.0, 50.0):
        assert np.max(np.abs(adexp_h1(h, t, grid, second_order=False) - counterdiabatic(h, t))) < 1e-10


def test_adexp_second_order_scales_inverse_square():
    def second(T):
        m = sweep(T, boundary_flat)
        h = m.hamiltonian()
        grid = TimeGrid(0, T, 2001)
        ts = T * np.linspace(0.05, 0.95, 19)
        return max(np.max(np.abs(adexp_h1(h, t, grid) - adexp_h1(h, t, grid, second_order=False))) for t in ts)
    ratio = second(200.0) / second(400.0)
    assert abs(ratio / 4 - 1) < 0.05


@given(st.integers(0, 2 ** 32 - 1))
def test_shifted_hamiltonian_adds_identity(seed):
    rng = np.random.default_rng(seed)
    hf = _poly_h(rng, 3)
    sh = hf.shifted(2.5)
    assert np.allclose(sh(0.3) - hf(0.3), 2.5 * np.eye(3))
    aff = sweep().hamiltonian()
    assert np.allclose(aff.shifted(-1.0)(10.0) - aff(10.0), -np.eye(2))
    assert isinstance(aff.shifted(1.0), AffineHamiltonian)
