"""Time evolution, adiabatic states and counterdiabatic operators."""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionError, GapCollisionError, NormDriftError
from .qcore import SpectralFrame, eig2x2, eig_herm, gauge_fix_continuity, normalize

DRIFT_TOL = 1e-8
BASIS_CAP = 64
# integration steps handed to a kernel per call; bounds sampled-H memory
_CHUNK_STEPS = 8192


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    n_steps: int

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("TimeGrid needs t1 > t0")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ValueError("TimeGrid needs an integer n_steps >= 2")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @classmethod
    def span(cls, T, n_steps):
        return cls(0.0, float(T), n_steps)

    @property
    def dt(self):
        return (self.t1 - self.t0) / (self.n_steps - 1)

    @property
    def points(self):
        return np.linspace(self.t0, self.t1, self.n_steps)

    @property
    def T(self):
        return self.t1 - self.t0


def cumtrapz(f, t):
    """Cumulative trapezoid integral starting at zero (works along axis 0)."""
    f = np.asarray(f)
    dt = np.diff(t).reshape((-1,) + (1,) * (f.ndim - 1))
    inc = 0.5 * (f[1:] + f[:-1]) * dt
    return np.concatenate([np.zeros((1,) + f.shape[1:], dtype=inc.dtype), np.cumsum(inc, axis=0)])


def trapz(f, t):
    f = np.asarray(f)
    return float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(t)))


def time_derivative(f, t):
    """Central differences inside, second-order one-sided at the ends."""
    return np.gradient(f, t, axis=0, edge_order=2)


class HamiltonianFunction:
    """Map t -> dense Hermitian matrix, with an optional analytic dH/dt."""

    def __init__(self, evaluator, derivative=None, dim=None):
        self._eval = evaluator
        self._deriv = derivative
        self.dim = dim if dim is not None else np.asarray(evaluator(0.0)).shape[0]

    def __call__(self, t):
        return np.asarray(self._eval(float(t)), dtype=np.complex128)

    @property
    def has_derivative(self):
        return self._deriv is not None

    def derivative(self, t, fd_step=1e-5):
        if self._deriv is not None:
            return np.asarray(self._deriv(float(t)), dtype=np.complex128)
        return (self(t + fd_step) - self(t - fd_step)) / (2.0 * fd_step)

    def samples(self, times):
        return np.stack([self(t) for t in np.asarray(times, dtype=float)])

    def derivative_samples(self, times, fd_step=1e-5):
        return np.stack([self.derivative(t, fd_step) for t in np.asarray(times, dtype=float)])

    def shifted(self, c):
        """H(t) + c * identity."""
        eye = np.eye(self.dim)
        deriv = self._deriv
        return HamiltonianFunction(lambda t: self(t) + c * eye, deriv, self.dim)


class AffineHamiltonian(HamiltonianFunction):
    """H(t) = sum_j c_j(t) M_j with vectorised scalar coefficients."""

    def __init__(self, coeffs, mats, dcoeffs=None):
        self.coeffs = list(coeffs)
        self.dcoeffs = None if dcoeffs is None else list(dcoeffs)
        self.mats = np.asarray(mats, dtype=np.complex128)
        if self.mats.ndim != 3 or self.mats.shape[0] != len(self.coeffs):
            raise DimensionError("need one matrix per coefficient")
        deriv = None if self.dcoeffs is None else self._eval_deriv
        super().__init__(self._eval_one, deriv, self.mats.shape[1])

    def coefficient_samples(self, times):
        times = np.asarray(times, dtype=float)
        return np.stack([np.broadcast_to(np.asarray(c(times), dtype=float), times.shape) for c in self.coeffs], axis=-1)

    def _eval_one(self, t):
        c = self.coefficient_samples(np.array([t]))[0]
        return np.tensordot(c, self.mats, axes=1)

    def _eval_deriv(self, t):
        dc = np.array([float(np.asarray(f(np.array([t])))[0]) for f in self.dcoeffs])
        return np.tensordot(dc, self.mats, axes=1)

    def samples(self, times):
        return np.einsum("tj,jkl->tkl", self.coefficient_samples(times), self.mats)

    def derivative_samples(self, times, fd_step=1e-5):
        if self.dcoeffs is None:
            return super().derivative_samples(times, fd_step)
        times = np.asarray(times, dtype=float)
        dc = np.stack([np.broadcast_to(np.asarray(f(times), dtype=float), times.shape) for f in self.dcoeffs], axis=-1)
        return np.einsum("tj,jkl->tkl", dc, self.mats)

    def shifted(self, c):
        eye = np.eye(self.dim)[None]
        dco = None if self.dcoeffs is None else self.dcoeffs + [lambda t: np.zeros_like(t)]
        return AffineHamiltonian(self.coeffs + [lambda t: np.full_like(t, c)],
                                 np.concatenate([self.mats, eye]), dco)


@dataclass(frozen=True)
class Trajectory:
    grid: TimeGrid
    states: np.ndarray  # (n, d), renormalised
    norms: np.ndarray  # (n,), raw integrator norms

    @property
    def times(self):
        return self.grid.points

    def __len__(self):
        return self.states.shape[0]


def _half_times(grid, substeps, start, count):
    """Half-step lattice for ``count`` record intervals beginning at record ``start``."""
    dt = grid.dt / substeps
    j = np.arange(2 * count * substeps + 1)
    return grid.t0 + start * grid.dt + 0.5 * dt * j


def _finish(grid, states, drift_tol):
    norms = np.linalg.norm(states, axis=-1)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > drift_tol:
        raise NormDriftError(
            f"norm drift {drift:.2e} exceeds {drift_tol:.0e}; increase n_steps or substeps"
        )
    return norms, states / norms[..., None]


def propagate(h, psi0, grid, substeps=1, drift_tol=DRIFT_TOL):
    """Fixed-step RK4 for ``i d|psi>/dt = H(t)|psi>`` recorded on ``grid``.

    ``substeps`` RK4 steps are taken between consecutive grid points.
    """
    psi0 = np.asarray(psi0, dtype=np.complex128)
    if psi0.shape != (h.dim,):
        raise DimensionError(f"initial state shape {psi0.shape} does not match H dim {h.dim}")
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-12:
        raise ValueError("initial state must be normalised")
    states = propagate_batch(h, psi0[None], grid, substeps)[0]
    norms, states = _finish(grid, states, drift_tol)
    return Trajectory(grid, states, norms)


def propagate_batch(h, psi0s, grid, substeps=1):
    """Raw (unnormalised) RK4 states for several initial states: (B, n, d)."""
    psi0s = np.asarray(psi0s, dtype=np.complex128)
    n_int = grid.n_steps - 1
    per_chunk = max(1, _CHUNK_STEPS // substeps)
    dt = grid.dt / substeps
    out = np.empty((psi0s.shape[0], grid.n_steps, h.dim), dtype=np.complex128)
    out[:, 0] = psi0s
    cur = psi0s.copy()
    start = 0
    while start < n_int:
        count = min(per_chunk, n_int - start)
        times = _half_times(grid, substeps, start, count)
        if isinstance(h, AffineHamiltonian):
            coefs = h.coefficient_samples(times)[None]
            seg = kernels.rk4_affine_batch(coefs, h.mats[None], cur, dt, substeps)
        else:
            hs = h.samples(times)
            seg = np.stack([kernels.rk4_sampled(hs, p, dt, substeps) for p in cur])
        out[:, start + 1:start + count + 1] = seg[:, 1:]
        cur = seg[:, -1].copy()
        start += count
    return out


def propagate_diagonal(energies, psi0, t):
    """Exact evolution under a time-independent diagonal Hamiltonian."""
    energies = np.asarray(energies, dtype=float)
    psi0 = np.asarray(psi0, dtype=np.complex128)
    if energies.shape != psi0.shape:
        raise DimensionError("energies and state have different lengths")
    return psi0 * np.exp(-1j * energies * t)


# ----------------------------------------------------------- spectra --

def eig_stack(hs):
    """Eigen-decompose a stack of Hermitian matrices."""
    hs = np.asarray(hs, dtype=np.complex128)
    if hs.shape[-1] == 2:
        return eig2x2(hs)
    ws, vs = zip(*(eig_herm(m) for m in hs))
    return np.stack(ws), np.stack(vs)


def spectral_frame(h, times, levels=None, min_gap=1e-10):
    """Gauge-fixed instantaneous eigensystem of ``h`` on ``times``."""
    times = np.asarray(times, dtype=float)
    w, v = eig_stack(h.samples(times))
    return gauge_fix_continuity(SpectralFrame(times, w, v), min_gap=min_gap, levels=levels)


def berry_connection(frame, n):
    """<n|d/dt n> on the frame grid (purely imaginary up to round-off)."""
    vec = frame.eigenvectors[:, :, n]
    dvec = time_derivative(vec, frame.times)
    return np.einsum("ti,ti->t", vec.conj(), dvec)


def adiabatic_state(h, n0, grid, frame=None):
    """|psi_ad(t)> = exp(-i int eps_n - int <n|n'>) |n(t)> on the grid.

    Only the imaginary part of the Berry connection is integrated, so the
    prefactor stays unimodular. In the real gauge of real Hamiltonians the
    geometric factor is 1.
    """
    if frame is None:
        frame = spectral_frame(h, grid.points, levels=[n0])
    if not 0 <= n0 < frame.dim:
        raise IndexError(f"level {n0} out of range for dimension {frame.dim}")
    t = frame.times
    dyn = cumtrapz(frame.eigenvalues[:, n0], t)
    geo = cumtrapz(berry_connection(frame, n0).imag, t)
    phase = np.exp(-1j * (dyn + geo))
    states = phase[:, None] * frame.eigenvectors[:, :, n0]
    return Trajectory(grid, states, np.ones(t.shape[0]))


def _check_gap_matrix(w, t):
    gaps = np.diff(w, axis=-1)
    if gaps.size and np.min(gaps) <= 1e-10:
        if np.ndim(t) and np.ndim(gaps) > 1:
            i = int(np.argmin(np.min(gaps, axis=-1)))
            ti, j = float(np.asarray(t)[i]), int(np.argmin(gaps[i]))
        else:
            ti, j = float(np.asarray(t).ravel()[0]), int(np.argmin(gaps))
        raise GapCollisionError(f"levels {j} and {j + 1} collide at t={ti:.6g}", time=ti, levels=(j, j + 1))


def _cd_in_eigenbasis(w, v, dh):
    """i <m|dH|n> / (eps_n - eps_m), zero diagonal; works on stacks."""
    m = np.einsum("...ki,...kl,...lj->...ij", v.conj(), dh, v)
    gap = w[..., None, :] - w[..., :, None]  # eps_n - eps_m
    d = w.shape[-1]
    off = ~np.eye(d, dtype=bool)
    safe = np.where(off, gap, 1.0)
    return np.where(off, 1j * m / safe, 0.0)


def _to_lab(v, c):
    out = np.einsum("...ik,...kl,...jl->...ij", v, c, v.conj())
    return 0.5 * (out + np.swapaxes(out.conj(), -1, -2))


def counterdiabatic(h, t, eig=None, fd_step=1e-5):
    """Counterdiabatic operator at time t (dense matrix).

    Matrix elements ``<m|H_CD|n> = i<m|dH/dt|n>/(eps_n - eps_m)`` for m != n.
    ``dH/dt`` is analytic when ``h`` provides it, else a central difference
    with step ``fd_step``.
    """
    w, v = eig if eig is not None else eig_herm(h(t))
    _check_gap_matrix(w, t)
    return _to_lab(v, _cd_in_eigenbasis(w, v, h.derivative(t, fd_step)))


def counterdiabatic_samples(h, times, frame=None, fd_step=1e-5):
    times = np.asarray(times, dtype=float)
    if frame is None:
        w, v = eig_stack(h.samples(times))
    else:
        w, v = frame.eigenvalues, frame.eigenvectors
    _check_gap_matrix(w, times)
    return _to_lab(v, _cd_in_eigenbasis(w, v, h.derivative_samples(times, fd_step)))


# ------------------------------------------- dynamical-invariant split --

def evolved_basis(h, grid, substeps=1, drift_tol=DRIFT_TOL, initial=None):
    """{U(t)|n(0)>}: array (n_t, d, d), columns = n.

    The initial basis defaults to the eigenbasis of H(t0); ``initial`` may
    supply any orthonormal set of columns instead.
    """
    if h.dim > BASIS_CAP:
        raise DimensionError(f"full-basis propagation limited to d <= {BASIS_CAP}")
    v0 = eig_herm(h(grid.t0))[1] if initial is None else np.asarray(initial, dtype=np.complex128)
    raw = propagate_batch(h, v0.T, grid, substeps)
    _, states = _finish(grid, raw, drift_tol)
    return np.transpose(states, (1, 2, 0))


def split_in_basis(hmat, basis, orth_tol=1e-8):
    """H0 = diagonal part of H in the (moving) basis, H1 = H - H0."""
    hmat = np.asarray(hmat, dtype=np.complex128)
    u = np.asarray(basis, dtype=np.complex128)
    gram = np.einsum("...ki,...kj->...ij", u.conj(), u)
    dev = np.max(np.abs(gram - np.eye(u.shape[-1])))
    if dev > orth_tol:
        raise NormDriftError(f"evolved basis lost orthonormality ({dev:.2e}); refine the propagation")
    diag = np.einsum("...ki,...kl,...li->...i", u.conj(), hmat, u).real
    h0 = np.einsum("...ik,...k,...jk->...ij", u, diag, u.conj())
    h0 = 0.5 * (h0 + np.swapaxes(h0.conj(), -1, -2))
    return h0, hmat - h0


def moving_basis_decomposition(h, u_traj, t_index):
    """(H0, H1) at grid index ``t_index`` from the evolved basis.

    ``u_traj`` is either the (n_t, d, d) array from :func:`evolved_basis` or a
    sequence of per-level Trajectory objects.
    """
    if isinstance(u_traj, np.ndarray):
        basis = u_traj[t_index]
        t = None
    else:
        basis = np.stack([tr.states[t_index] for tr in u_traj], axis=-1)
        t = u_traj[0].grid.points[t_index]
    if t is None:
        raise ValueError("pass Trajectory objects, or use split_in_basis with an explicit H")
    return split_in_basis(h(t), basis)


# ------------------------------------------------ adiabatic expansion --

def _cd_over_gap(w, c):
    # <m|H_CD|n> / (eps_m - eps_n)
    gap = w[..., :, None] - w[..., None, :]
    d = w.shape[-1]
    off = ~np.eye(d, dtype=bool)
    return np.where(off, c / np.where(off, gap, 1.0), 0.0)


def adexp_h1(h, t, grid, second_order=True):
    """Off-diagonal part of H1 through second order of the adiabatic expansion.

    ``<m|H1|n> ~ <m|H_CD|n> + i d/dt [<m|H_CD|n>/(eps_m - eps_n)]`` with the
    derivative taken by finite differences (step ``grid.dt``) in the
    parallel-transport gauge. Diagonal elements are set to zero.
    """
    dt = grid.dt
    if t - dt < grid.t0 - 1e-12:
        ts = np.array([t, t + dt, t + 2 * dt])
        coeff = np.array([-1.5, 2.0, -0.5]) / dt
        at = 0
    elif t + dt > grid.t1 + 1e-12:
        ts = np.array([t - 2 * dt, t - dt, t])
        coeff = np.array([0.5, -2.0, 1.5]) / dt
        at = 2
    else:
        ts = np.array([t - dt, t, t + dt])
        coeff = np.array([-0.5, 0.0, 0.5]) / dt
        at = 1
    frame = spectral_frame(h, ts)
    w, v = frame.eigenvalues, frame.eigenvectors
    c = _cd_in_eigenbasis(w, v, h.derivative_samples(ts))
    out = c[at].copy()
    if second_order:
        q = _cd_over_gap(w, c)
        out = out + 1j * np.tensordot(coeff, q, axes=1)
    np.fill_diagonal(out, 0.0)
    return _to_lab(v[at], out)


def adexp_second_order_series(h, grid, frame=None):
    """d/dt [<m|H_CD|n>/(eps_m - eps_n)] on the grid, shape (n_t, d, d)."""
    times = grid.points
    if frame is None:
        frame = spectral_frame(h, times)
    w, v = frame.eigenvalues, frame.eigenvectors
    c = _cd_in_eigenbasis(w, v, h.derivative_samples(times))
    return time_derivative(_cd_over_gap(w, c), times)


__all__ = [
    "TimeGrid", "HamiltonianFunction", "AffineHamiltonian", "Trajectory",
    "propagate", "propagate_batch", "propagate_diagonal", "spectral_frame",
    "adiabatic_state", "counterdiabatic", "counterdiabatic_samples",
    "evolved_basis", "split_in_basis", "moving_basis_decomposition",
    "adexp_h1", "adexp_second_order_series", "cumtrapz", "trapz",
    "time_derivative", "normalize",
]
