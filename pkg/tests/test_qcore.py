import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_hermitian, random_state
from qsllab.errors import DegenerateDecompositionError, DimensionError, GapCollisionError
from qsllab.qcore import (
    SX, SY, SZ, HermitianOperator, SpectralFrame, StateVector, eig_herm, expectation,
    fubini_angle, gauge_fix_continuity, orthogonal_component, variance_sqrt,
)

PLUS = np.array([1, 1]) / np.sqrt(2)
UP = np.array([1.0, 0.0])


def test_state_vector_normalises_and_is_readonly():
    s = StateVector([3.0, 4.0j])
    assert abs(np.linalg.norm(s.amplitudes) - 1) < 1e-12
    with pytest.raises(ValueError):
        s.amplitudes[0] = 1.0
    with pytest.raises(DimensionError):
        StateVector([1.0])


def test_hermitian_operator_validation():
    with pytest.raises(ValueError):
        HermitianOperator(np.array([[0, 1], [2, 0]]))
    d = HermitianOperator(np.array([1.0, -1.0]), "diagonal")
    assert d.data.dtype == np.float64
    assert np.allclose(d.dense(), SZ)
    assert HermitianOperator.from_matrix(SZ).kind == "two_by_two"


def test_expectation_examples(rng):
    assert expectation(SZ, UP) == 1.0
    assert abs(expectation(SZ, PLUS)) < 1e-15
    h, psi = random_hermitian(rng, 4), random_state(rng, 4)
    brute = sum(np.conj(psi[i]) * h[i, j] * psi[j] for i in range(4) for j in range(4))
    assert abs(expectation(h, psi) - brute.real) < 1e-12
    assert abs(expectation(HermitianOperator(h), StateVector(psi)) - brute.real) < 1e-12


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        expectation(SZ, np.ones(3) / np.sqrt(3))
    with pytest.raises(DimensionError):
        fubini_angle(UP, np.ones(3) / np.sqrt(3))


def test_variance_examples():
    assert variance_sqrt(SZ, UP) == 0.0
    assert abs(variance_sqrt(SZ, PLUS) - 1.0) < 1e-15
    thdot = -np.pi / 100
    psi = np.array([np.sin(0.3), -np.cos(0.3)])
    assert abs(variance_sqrt(0.5 * thdot * SY, psi) - np.pi / 200) < 1e-15


def test_fubini_examples():
    assert fubini_angle(PLUS, PLUS) < 1e-15
    assert abs(fubini_angle(UP, [0, 1]) - np.pi / 2) < 1e-15
    b = np.array([0.6, 0.8])
    assert abs(fubini_angle(UP, b) - np.arccos(0.6)) < 1e-15
    assert abs(fubini_angle(UP, b) - 0.927295218001612) < 1e-12


def test_orthogonal_component_examples(rng):
    perp, sig = orthogonal_component(SZ, PLUS)
    assert abs(sig - 1) < 1e-15
    assert abs(abs(perp @ (np.array([1, -1]) / np.sqrt(2))) - 1) < 1e-12
    perp, sig = orthogonal_component(SX, UP)
    assert abs(sig - 1) < 1e-15 and np.allclose(perp, [0, 1])
    h, psi = random_hermitian(rng, 6), random_state(rng, 6)
    perp, sig = orthogonal_component(h, psi)
    resid = h @ psi - (expectation(h, psi) * psi + sig * perp)
    assert np.linalg.norm(resid) < 1e-10
    assert abs(np.vdot(psi, perp)) < 1e-10
    with pytest.raises(DegenerateDecompositionError):
        orthogonal_component(SZ, UP)


def test_eig_examples(rng):
    w, _ = eig_herm(SZ)
    assert np.allclose(w, [-1, 1])
    for th in np.linspace(0, np.pi, 7):
        w, _ = eig_herm(0.7 / 2 * (SZ * np.cos(th) + SX * np.sin(th)))
        assert np.allclose(w, [-0.35, 0.35], atol=1e-15)
    h = random_hermitian(rng, 8)
    w, v = eig_herm(h)
    assert np.all(np.diff(w) >= 0)
    for i in range(8):
        assert np.linalg.norm(h @ v[:, i] - w[i] * v[:, i]) < 1e-10
    assert np.max(np.abs(v.conj().T @ v - np.eye(8))) < 1e-10
    # independent reference
    assert np.allclose(w, np.linalg.eigvalsh(h), atol=1e-10)


def test_eig_diagonal_kind():
    w, v = eig_herm(HermitianOperator(np.array([2.0, -1.0, 0.5]), "diagonal"))
    assert np.allclose(w, [-1, 0.5, 2])
    assert np.allclose(np.abs(v[[1, 2, 0], [0, 1, 2]]), 1)


def _two_level_frame(n=50, flip=False):
    t = np.linspace(0, 1, n)
    th = np.pi / 2 * (1 - t)
    hs = 0.5 * (np.cos(th)[:, None, None] * SZ + np.sin(th)[:, None, None] * SX)
    ws, vs = zip(*(eig_herm(h) for h in hs))
    vs = np.array(vs)
    if flip:
        vs[1::2] *= -1
    return SpectralFrame(t, np.array(ws), vs)


def test_gauge_fix_constant_and_alternating():
    t = np.linspace(0, 1, 10)
    h = np.array([[1.0, 0.3], [0.3, -0.5]])
    w, v = eig_herm(h)
    phases = np.exp(1j * np.arange(10))[:, None, None]
    fixed = gauge_fix_continuity(SpectralFrame(t, np.tile(w, (10, 1)), v[None] * phases))
    assert np.allclose(fixed.eigenvectors, fixed.eigenvectors[0][None], atol=1e-12)
    out = gauge_fix_continuity(_two_level_frame(flip=True))
    ov = np.einsum("tin,tin->tn", out.eigenvectors[:-1].conj(), out.eigenvectors[1:])
    assert np.all(ov.real >= 0)


def test_gauge_fixed_berry_connection_vanishes():
    out = gauge_fix_continuity(_two_level_frame(400))
    v = out.eigenvectors[:, :, 0]
    dv = np.gradient(v, out.times, axis=0, edge_order=2)
    conn = np.einsum("ti,ti->t", v.conj(), dv)
    assert np.max(np.abs(conn)) < 1e-8


def test_gauge_fix_rejects_degeneracy():
    t = np.linspace(0, 1, 3)
    w = np.array([[0.0, 1.0], [0.5, 0.5], [0.0, 1.0]])
    v = np.tile(np.eye(2, dtype=complex), (3, 1, 1))
    with pytest.raises(GapCollisionError) as exc:
        gauge_fix_continuity(SpectralFrame(t, w, v))
    assert exc.value.time == 0.5 and exc.value.levels == (0, 1)


dims = st.integers(2, 16)
seeds = st.integers(0, 2 ** 32 - 1)


@given(dims, seeds)
def test_variance_bounded_by_spectral_radius(d, seed):
    rng = np.random.default_rng(seed)
    h, psi = random_hermitian(rng, d), random_state(rng, d)
    w = np.linalg.eigvalsh(h)
    s = variance_sqrt(h, psi)
    assert 0 <= s <= (w[-1] - w[0]) / 2 + 1e-12


@given(dims, seeds)
def test_orthogonal_reconstruction(d, seed):
    rng = np.random.default_rng(seed)
    h, psi = random_hermitian(rng, d), random_state(rng, d)
    perp, sig = orthogonal_component(h, psi)
    assert np.linalg.norm(h @ psi - expectation(h, psi) * psi - sig * perp) < 1e-10


@given(dims, seeds, st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
def test_fubini_symmetry_and_phase(d, seed, p, q):
    rng = np.random.default_rng(seed)
    a, b = random_state(rng, d), random_state(rng, d)
    base = fubini_angle(a, b)
    assert abs(base - fubini_angle(b, a)) < 1e-14
    assert abs(base - fubini_angle(np.exp(1j * p) * a, np.exp(1j * q) * b)) < 1e-14


@given(st.integers(3, 10), seeds)
def test_eigenvalues_unitarily_invariant(d, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, d)
    _, u = eig_herm(random_hermitian(rng, d))
    w1, _ = eig_herm(h)
    w2, _ = eig_herm(u @ h @ u.conj().T)
    assert np.max(np.abs(w1 - w2)) < 1e-10
