"""Transverse-field Ising chain H = -(A/2) sum sx_i - (B/2) sum sz_i sz_{i+1}, periodic.

In the even-parity sector the chain splits into independent momentum modes
k_m = (2m-1) pi / N, m = 1..N/2. Mode k evolves under

    H_k = MODE_SCALE * [(A - B cos k) sz + (B sin k) sx]

with ground energy -eps_k, so E_ground = -sum_k eps_k. MODE_SCALE was fixed
against exact diagonalisation of the full chain (see tests).
"""
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .. import kernels
from ..bounds import rate_series
from ..dynamics import TimeGrid, time_derivative
from ..errors import NormDriftError
from ..qcore import SX, SZ
from ..schedules import Schedule, boundary_flat, boundary_steep, linear

MODE_SCALE = 1.0
# RK4 loses norm as (|H| dt)^6 per step; 0.01 keeps 1e5-step runs inside 1e-8
STEP_BUDGET = 0.01
DRIFT_TOL = 1e-8


@dataclass(frozen=True)
class TfimModel:
    N: int
    A: Schedule
    B: Schedule

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2 or self.N % 2:
            raise ValueError("N must be an even integer >= 2")
        if abs(self.A.T - self.B.T) > 1e-12 * self.A.T:
            raise ValueError("A and B schedules need the same horizon")
        probe = np.linspace(0.0, self.A.T, 257)
        if np.any(self.A.value(probe) < -1e-12) or np.any(self.B.value(probe) < -1e-12):
            raise ValueError("A(t) and B(t) must stay non-negative")

    @property
    def T(self):
        return self.A.T

    @property
    def modes(self):
        m = np.arange(1, self.N // 2 + 1)
        return (2 * m - 1) * np.pi / self.N

    def fields(self, k, t):
        """(z, x) field components of mode k at time t."""
        a, b = self.A.value(t), self.B.value(t)
        return MODE_SCALE * (a - b * np.cos(k)), MODE_SCALE * b * np.sin(k)

    def mode_energy(self, k, t):
        z, x = self.fields(k, t)
        return np.hypot(z, x)

    def ground_energy(self, t):
        return -float(np.sum(self.mode_energy(self.modes, t)))

    def default_dt(self):
        probe = np.linspace(0.0, self.T, 257)
        top = MODE_SCALE * float(np.max(self.A.value(probe) + self.B.value(probe)))
        return STEP_BUDGET / max(top, 1e-300)


def protocol(kind, N, T, A0=1.0):
    """A(t) ramps A0 -> 0 with the given shape and B(t) = A0 - A(t)."""
    make = {"linear": linear, "boundary_flat": boundary_flat, "boundary_steep": boundary_steep}
    if kind not in make:
        raise ValueError(f"unknown protocol {kind!r}")
    return TfimModel(int(N), make[kind](A0, 0.0, T), make[kind](0.0, A0, T))


def tfim_mode(model, k, t):
    """(2x2 mode Hamiltonian, mixing angle theta_k) at time t."""
    z, x = model.fields(k, t)
    return z * SZ + x * SX, float(np.arctan2(x, z))


def mode_ground_state(theta):
    return np.array([np.sin(0.5 * theta), -np.cos(0.5 * theta)], dtype=np.complex128)


def chain_hamiltonian(N, a, b):
    """Dense 2^N matrix of the periodic chain at fixed A=a, B=b."""
    eye = np.eye(2)

    def site(op, i):
        return reduce(np.kron, [op if j == i else eye for j in range(N)])

    sx, sz = SX.real, SZ.real
    h = np.zeros((2 ** N, 2 ** N))
    for i in range(N):
        h -= 0.5 * a * site(sx, i)
        h -= 0.5 * b * site(sz, i) @ site(sz, (i + 1) % N)
    return h


def even_parity_basis(N):
    """Orthonormal columns spanning prod sx_i = +1."""
    sx = SX.real
    parity = reduce(np.kron, [sx] * N)
    w, v = np.linalg.eigh(parity)
    return v[:, w > 0]


def _record_grid(model, n_rec, substeps):
    grid = TimeGrid.span(model.T, n_rec)
    if substeps is None:
        substeps = max(1, int(np.ceil(grid.dt / model.default_dt())))
    return grid, substeps


def tfim_run(model, n_rec=None, substeps=None):
    """Rate function of the fidelity with the adiabatic ground state.

    Every mode is propagated from its t=0 ground state with RK4. The
    returned series has g_ad, its central-difference derivative and the
    counterdiabatic weak-value bound; extra columns carry the H - H_CD and
    H1 - H_CD variants and the imaginary part of the H_CD weak value.
    """
    if n_rec is None:
        n_rec = int(round(model.T / (5 * model.default_dt()))) + 1
    grid, substeps = _record_grid(model, n_rec, substeps)
    n_int = (grid.n_steps - 1) * substeps
    half = grid.t0 + 0.5 * (grid.dt / substeps) * np.arange(2 * n_int + 1)
    t = grid.points
    log_ad, log_init, w_cd, excess, drift = kernels.tfim_mode_sums(
        model.modes, model.A.value(half), model.B.value(half),
        model.A.deriv(t), model.B.deriv(t), grid.dt / substeps, substeps, MODE_SCALE,
    )
    if drift > DRIFT_TOL:
        raise NormDriftError(f"mode norm drift {drift:.2e}; increase substeps")
    N = model.N
    e_ground = np.array([model.ground_energy(x) for x in t])
    extra = {
        "weak_im": w_cd.imag,
        "bound_h_minus_cd": np.abs(e_ground - w_cd) / N,
        "bound_h1_minus_cd": np.abs(-excess - w_cd) / N,
        "g_init": -log_init / N,
    }
    flags = log_ad < np.log(1e-300)
    out = rate_series(grid, log_ad, np.abs(w_cd) / N, N, flags, extra=extra)
    out.extra["g_init_dot"] = time_derivative(out.extra["g_init"], t)
    return out


def peak(series):
    """(time, max |g_dot|, max bound) of a rate series."""
    i = int(np.argmax(np.abs(series.g_dot)))
    return float(series.grid.points[i]), float(np.abs(series.g_dot[i])), float(np.max(series.bound))
