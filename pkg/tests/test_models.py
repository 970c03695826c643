import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from qsllab.dynamics import TimeGrid
from qsllab.models import quench as qm
from qsllab.models import tfim as tm
from qsllab.models.two_level import TwoLevelModel, two_level_run
from qsllab.qcore import eig_herm
from qsllab.schedules import boundary_flat, linear


# ---------------------------------------------------------------- TFIM --

def _dense_sector(N):
    P = tm.even_parity_basis(N)
    return [P.T @ tm.chain_hamiltonian(N, x, y) @ P for x, y in ((1, 0), (0, 1))]


@pytest.mark.parametrize("N", [4, 6, 8])
def test_tfim_ground_energy_matches_dense(N):
    ha, hb = _dense_sector(N)
    model = tm.protocol("linear", N, 10.0)
    for t in (0.0, 2.5, 5.0, 7.5):
        a, b = model.A.value(t), model.B.value(t)
        e = np.linalg.eigvalsh(a * ha + b * hb)[0]
        assert abs(e - model.ground_energy(t)) < 1e-10


@pytest.mark.parametrize("N", [4, 6, 8])
def test_tfim_rate_matches_dense_evolution(N):
    T = 8.0
    ha, hb = _dense_sector(N)
    model = tm.protocol("boundary_flat", N, T)

    def hmat(t):
        return model.A.value(t) * ha + model.B.value(t) * hb

    psi0 = np.linalg.eigh(hmat(0.0))[1][:, 0].astype(complex)
    sol = solve_ivp(lambda t, y: -1j * (hmat(t) @ y), (0, T), psi0, method="DOP853",
                    rtol=1e-12, atol=1e-12, t_eval=np.linspace(0, T, 81))
    g_dense = []
    for t, y in zip(sol.t, sol.y.T):
        gs = np.linalg.eigh(hmat(t))[1][:, 0]
        g_dense.append(-np.log(abs(gs @ y)) / N)
    s = tm.tfim_run(model, n_rec=801)
    assert np.max(np.abs(s.g[::10] - np.array(g_dense))) < 1e-9


def test_mode_scale_is_pinned(monkeypatch):
    N = 6
    ha, hb = _dense_sector(N)
    model = tm.protocol("linear", N, 10.0)
    e = np.linalg.eigvalsh(0.5 * ha + 0.5 * hb)[0]
    monkeypatch.setattr(tm, "MODE_SCALE", 0.5)
    assert abs(e - model.ground_energy(5.0)) > 0.1


def test_mode_angles():
    k = np.pi / 4
    same = tm.TfimModel(4, linear(1.0, 1.0, 1.0), linear(1.0, 1.0, 1.0))
    h, th = tm.tfim_mode(same, k, 0.5)
    assert abs(th - (np.pi - k) / 2) < 1e-12 or abs(th - np.arctan2(np.sin(k), 1 - np.cos(k))) < 1e-12
    free = tm.TfimModel(4, linear(1.0, 1.0, 1.0), linear(0.0, 0.0, 1.0))
    h, th = tm.tfim_mode(free, k, 0.5)
    assert abs(th) < 1e-15
    w, v = eig_herm(h)
    gs = tm.mode_ground_state(th)
    assert abs(abs(np.vdot(v[:, 0], gs)) - 1) < 1e-12


def test_tfim_identity_and_start():
    s = tm.tfim_run(tm.protocol("linear", 10, 15.0), n_rec=15001, substeps=1)
    assert s.g[0] == 0.0 and s.extra["g_init"][0] == 0.0
    assert np.max(np.abs(10 * s.g_dot - s.extra["weak_im"])) < 1e-6


def test_tfim_validation():
    with pytest.raises(ValueError):
        tm.protocol("linear", 5, 10.0)
    with pytest.raises(ValueError):
        tm.protocol("nope", 4, 10.0)
    with pytest.raises(ValueError):
        tm.TfimModel(4, linear(1.0, -1.0, 1.0), linear(0.0, 1.0, 1.0))


# -------------------------------------------------------------- quench --

@settings(max_examples=15)
@given(st.integers(1, 4000), st.floats(0.1, 3.0), st.floats(-2.0, 2.0))
def test_quench_e0(N, J, h):
    m = qm.QuenchModel(N, J, h)
    direct = math.fsum(float(w * e) for w, e in zip(m.weights, m.energies))
    assert abs(direct - qm.quench_e0(m)) < 1e-9 * max(1.0, abs(J) + abs(h))


def test_quench_overlap_bounded_and_start():
    m = qm.QuenchModel(300, 1.0, 1.0)
    grid = TimeGrid(0.0, 3.0, 301)
    s = qm.quench_run(m, grid)
    assert s.g[0] == 0.0 and abs(s.g_dot[0]) < 1e-15
    assert np.all(s.g >= -1e-14)
    assert s.violation() < 1e-9


def test_quench_free_field_closed_form():
    N, h = 40, 0.7
    grid = TimeGrid(0.0, 1.5, 151)
    t = grid.points
    # |G| = |cos(ht)|^N reaches 1e-12 here; plain double sums lose digits
    s = qm.quench_run(qm.QuenchModel(N, 0.0, h), grid, "double")
    assert np.max(np.abs(s.g + np.log(np.abs(np.cos(h * t))))) > 1e-9
    s = qm.quench_run(qm.QuenchModel(N, 0.0, h), grid)
    assert np.max(np.abs(s.g + np.log(np.abs(np.cos(h * t))))) < 1e-10
    assert np.max(np.abs(s.g_dot - h * np.tan(h * t))) < 1e-8
    # J = 0 saturates the bound
    assert np.max(np.abs(np.abs(s.g_dot) - s.bound)) < 1e-8


def test_quench_double_vs_multiprecision():
    m = qm.QuenchModel(60, 1.0, 1.0)
    t = np.linspace(0.0, 2.0, 41)
    ld, rd = qm.overlap_data(m, t, "double")
    lm, rm = qm.overlap_data(m, t, "mp")
    ok = ld > np.log(qm.DOUBLE_FLOOR)
    assert ok.sum() > 10
    assert np.max(np.abs(ld - lm)[ok]) < 1e-10
    assert np.max(np.abs(rd - rm)[ok]) < 1e-8


def test_quench_large_N_uses_multiprecision():
    m = qm.QuenchModel(2000, 1.0, 1.0)
    t = np.array([0.0, 1.0, 2.0])
    lg, ratio = qm.overlap_data(m, t)
    assert np.all(np.isfinite(lg)) and lg[2] < np.log(qm.DOUBLE_FLOOR)
    assert np.all(np.isfinite(ratio))
    with pytest.raises(ValueError):
        qm.overlap_data(m, t, "quad")


def test_zero_crossing_flags_and_kinks():
    lg = np.array([0.0, -1.0, -60.0, -1.2, -1.4, -np.inf, -1.0])
    assert qm.zero_crossing_flags(lg).tolist() == [False, False, True, False, False, True, False]
    t = np.linspace(0, 1, 101)
    gd = np.sin(3 * t) + np.abs(t - 0.5)
    kinks = qm.kink_report(t, gd)
    assert len(kinks) == 1 and abs(kinks[0][0] - 0.5) < 1e-12
    assert qm.kink_report(t, np.sin(3 * t)) == []


# ----------------------------------------------------------- two-level --

def test_two_level_adiabatic_limit():
    m = TwoLevelModel(1.0, boundary_flat(np.pi / 2, 0.0, 1e4))
    r = two_level_run(m, substeps=2, with_inv=False, with_adexp=False)
    assert r.series.theta_final < 1e-3


def test_two_level_adiabatic_state_matches_closed_form():
    m = TwoLevelModel(1.0, linear(np.pi / 2, 0.0, 20.0))
    r = two_level_run(m)
    ov = np.einsum("ti,ti->t", r.ad_traj.states.conj(), m.ground_state(r.traj.times))
    assert np.max(np.abs(np.abs(ov) - 1)) < 1e-12


def test_two_level_validation():
    with pytest.raises(ValueError):
        TwoLevelModel(0.0, linear(1.0, 0.0, 1.0))
    m = TwoLevelModel(1.0, linear(1.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        two_level_run(m, grid=TimeGrid(0.0, 2.0, 11))
