"""Speed-limit quantities evaluated along trajectories.

Series are computed on the propagation grid. Time derivatives use central
differences with second-order one-sided ends; integrals are trapezoidal
sums in grid order.
"""
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    TimeGrid,
    adexp_second_order_series,
    counterdiabatic_samples,
    evolved_basis,
    split_in_basis,
    time_derivative,
    trapz,
)
from .errors import ContractError, UnderflowError
from .qcore import eig_herm

CONTRACT_TOL = 1e-8
EIGENSTART_TOL = 1e-10
ZERO_OVERLAP = 1e-12
UNDERFLOW = 1e-300


# ------------------------------------------------------ vector helpers --

def _inner(a, b):
    return np.einsum("...i,...i->...", a.conj(), b)


def _apply_stack(ops, states):
    return np.einsum("...ij,...j->...i", ops, states)


def sigma_series(ops, states):
    """sigma(op_t, psi_t) for stacks, via the norm of (op - <op>) psi."""
    hpsi = _apply_stack(ops, states)
    mean = _inner(states, hpsi).real
    return np.linalg.norm(hpsi - mean[..., None] * states, axis=-1)


def angle_series(a, b):
    """Fubini-Study angle between paired rows of a and b."""
    ov = _inner(a, b)
    perp = b - ov[..., None] * a
    return np.arctan2(np.linalg.norm(perp, axis=-1), np.abs(ov))


def weak_value(bra, op_ket, ket):
    """<bra|A|ket> / <bra|ket> given ``op_ket = A|ket>``."""
    return _inner(bra, op_ket) / _inner(bra, ket)


# -------------------------------------------------------- containers --

@dataclass
class BoundSeries:
    grid: TimeGrid
    theta_ad: np.ndarray
    dtheta_ad_abs: np.ndarray
    dtheta_ad: np.ndarray = None
    bound_values: dict = field(default_factory=dict)
    integrals: dict = field(default_factory=dict)

    def __post_init__(self):
        t = self.grid.points
        self.integrals.setdefault("dtheta_ad_abs", trapz(self.dtheta_ad_abs, t))
        if self.dtheta_ad is not None:
            self.integrals.setdefault("dtheta_ad", trapz(self.dtheta_ad, t))

    @property
    def theta_final(self):
        return float(self.theta_ad[-1])

    def add(self, name, values):
        values = np.asarray(values, dtype=float)
        self.bound_values[name] = values
        self.integrals[name] = trapz(values, self.grid.points)
        return self

    def chain_violations(self):
        """theta_ad(T) <= int|dtheta_ad| <= int(bound) for every recorded bound."""
        lhs = self.integrals["dtheta_ad_abs"]
        out = {"theta_vs_variation": self.theta_final - lhs}
        for name in self.bound_values:
            out[name] = lhs - self.integrals[name]
        return out

    def columns(self):
        cols = {"t": self.grid.points, "theta_ad": self.theta_ad, "dtheta_ad_abs": self.dtheta_ad_abs}
        if self.dtheta_ad is not None:
            cols["dtheta_ad"] = self.dtheta_ad
        cols.update(self.bound_values)
        return cols


@dataclass
class RateSeries:
    grid: TimeGrid
    g: np.ndarray
    g_dot: np.ndarray
    bound: np.ndarray
    N: int
    flags: np.ndarray = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.flags is None:
            self.flags = np.zeros(self.g.shape, dtype=bool)

    @property
    def valid(self):
        return ~self.flags

    def violation(self, bound=None):
        """max(|g_dot| - bound) over unflagged points (<= 0 means it holds)."""
        b = self.bound if bound is None else bound
        v = np.abs(self.g_dot) - b
        v = v[self.valid]
        return float(np.max(v)) if v.size else 0.0

    def check(self, tol=CONTRACT_TOL):
        v = self.violation()
        if v > tol:
            raise ContractError(f"rate bound violated by {v:.3e}")
        return v

    def columns(self):
        cols = {
            "t": self.grid.points,
            "g": self.g,
            "g_dot": self.g_dot,
            "g_dot_abs": np.abs(self.g_dot),
            "qsl_bound": self.bound,
        }
        cols.update(self.extra)
        cols["flag"] = self.flags.astype(float)
        return cols


def rate_series(grid, log_abs_overlap, bound, N, flags=None, g_dot=None, extra=None):
    """Build a RateSeries from ``ln|overlap|`` and a bound series."""
    g = -np.asarray(log_abs_overlap, dtype=float) / N
    if g_dot is None:
        g_dot = time_derivative(g, grid.points)
    return RateSeries(grid, g, np.asarray(g_dot, float), np.asarray(bound, float), N, flags, dict(extra or {}))


# ---------------------------------------------------------- MT bound --

def mt_bound(traj, h):
    """(angle between psi(0) and psi(T), trapezoidal integral of sigma(H, psi))."""
    t = traj.grid.points
    sig = sigma_series(h.samples(t), traj.states)
    lhs = float(angle_series(traj.states[0], traj.states[-1]))
    return lhs, trapz(sig, t)


# ------------------------------------------------- adiabatic fidelity --

def theta_ad_series(traj, ad_traj):
    if traj.states.shape != ad_traj.states.shape or traj.grid != ad_traj.grid:
        raise ValueError("trajectory and adiabatic trajectory use different grids")
    t = traj.grid.points
    theta = angle_series(ad_traj.states, traj.states)
    dtheta = time_derivative(theta, t)
    return BoundSeries(traj.grid, theta, np.abs(dtheta), dtheta)


def _require_eigenstart(traj, h):
    _, v = eig_herm(h(traj.grid.t0))
    fid = np.abs(v.conj().T @ traj.states[0])
    n = int(np.argmax(fid))
    if fid[n] < 1.0 - EIGENSTART_TOL:
        raise ContractError(
            f"initial state is not an eigenstate of H(t0) (best fidelity {fid[n]:.12f})"
        )
    return n


def _cd(h, t, cd_samples):
    return counterdiabatic_samples(h, t) if cd_samples is None else np.asarray(cd_samples)


def delta_e1(traj, h, ad_traj=None, cd_samples=None):
    """sigma(H_CD, .) along ``ad_traj`` when given, else along ``traj``."""
    t = traj.grid.points
    host = traj if ad_traj is None else ad_traj
    return sigma_series(_cd(h, t, cd_samples), host.states)


def delta_e2(traj, h, cd_samples=None):
    """sigma(H - H_CD, psi); requires an eigenstate start."""
    _require_eigenstart(traj, h)
    t = traj.grid.points
    return sigma_series(h.samples(t) - _cd(h, t, cd_samples), traj.states)


def h1_samples(h, grid, basis=None, substeps=1):
    """H1(t) on the grid from the evolved eigenbasis."""
    if basis is None:
        basis = evolved_basis(h, grid, substeps)
    _, h1 = split_in_basis(h.samples(grid.points), basis)
    return h1


def delta_e_inv(traj, h, cd_samples=None, basis=None, substeps=1):
    """sigma(H1 - H_CD, psi); requires an eigenstate start."""
    _require_eigenstart(traj, h)
    t = traj.grid.points
    h1 = h1_samples(h, traj.grid, basis, substeps)
    return sigma_series(h1 - _cd(h, t, cd_samples), traj.states)


def adexp_estimate(h, grid, n, frame=None):
    """sqrt(sum_{m != n} |d/dt(<m|H_CD|n>/(eps_m - eps_n))|^2) on the grid."""
    dq = adexp_second_order_series(h, grid, frame)
    col = np.abs(dq[:, :, n]) ** 2
    col[:, n] = 0.0
    return np.sqrt(np.sum(col, axis=1))


# ------------------------------------------------- many-body rate bounds --

def _overlap_with_initial(traj):
    ov = traj.states @ traj.states[0].conj()
    if np.any(np.abs(ov) < UNDERFLOW):
        raise UnderflowError(
            "overlap underflows double precision; use a model-specific log-space path"
        )
    return ov


def rate_bound_perp(traj, h, N):
    """|g_dot| <= (sigma/N) |<psi0|psi_perp>/<psi0|psi>| (explicit psi_perp)."""
    t = traj.grid.points
    ov = _overlap_with_initial(traj)
    hs = h.samples(t)
    hpsi = _apply_stack(hs, traj.states)
    mean = _inner(traj.states, hpsi).real
    resid = hpsi - mean[:, None] * traj.states
    sig = np.linalg.norm(resid, axis=-1)
    bound = np.zeros(t.shape[0])
    live = sig > 1e-13
    if not np.any(live):
        # stationary state: g stays 0 and the bound is trivially saturated
        return rate_series(traj.grid, np.log(np.abs(ov)), bound, N, np.abs(ov) < ZERO_OVERLAP)
    perp = resid[live] / sig[live, None]
    bound[live] = sig[live] / N * np.abs((perp @ traj.states[0].conj()) / ov[live])
    return rate_series(traj.grid, np.log(np.abs(ov)), bound, N, np.abs(ov) < ZERO_OVERLAP)


def rate_bound_weak_initial(traj, h, N, basis=None, substeps=1):
    """|g_dot| <= (1/N) |<psi0|H1|psi>/<psi0|psi>| (generic dense path)."""
    _require_eigenstart(traj, h)
    ov = _overlap_with_initial(traj)
    h1 = h1_samples(h, traj.grid, basis, substeps)
    w = weak_value(traj.states[0], _apply_stack(h1, traj.states), traj.states)
    return rate_series(traj.grid, np.log(np.abs(ov)), np.abs(w) / N, N,
                       np.abs(ov) < ZERO_OVERLAP, extra={"weak_im": w.imag})


ADIABATIC_OPERATORS = ("cd", "h_minus_cd", "h1_minus_cd")


def rate_bound_weak_adiabatic(traj, ad_traj, h, N, operator="cd", cd_samples=None, basis=None, substeps=1):
    """|g_ad_dot| <= (1/N) |<psi_ad|O|psi>/<psi_ad|psi>|, O selected by ``operator``."""
    if operator not in ADIABATIC_OPERATORS:
        raise ValueError(f"operator must be one of {ADIABATIC_OPERATORS}")
    t = traj.grid.points
    cd = _cd(h, t, cd_samples)
    if operator == "cd":
        op = cd
    else:
        _require_eigenstart(traj, h)
        if operator == "h_minus_cd":
            op = h.samples(t) - cd
        else:
            op = h1_samples(h, traj.grid, basis, substeps) - cd
    ov = _inner(ad_traj.states, traj.states)
    if np.any(np.abs(ov) < UNDERFLOW):
        raise UnderflowError("adiabatic overlap underflows; use a model-specific path")
    w = weak_value(ad_traj.states, _apply_stack(op, traj.states), traj.states)
    return rate_series(traj.grid, np.log(np.abs(ov)), np.abs(w) / N, N,
                       np.abs(ov) < ZERO_OVERLAP, extra={"weak_im": w.imag})


__all__ = [
    "BoundSeries", "RateSeries", "rate_series", "sigma_series", "angle_series",
    "weak_value", "mt_bound", "theta_ad_series", "delta_e1", "delta_e2",
    "delta_e_inv", "h1_samples", "adexp_estimate", "rate_bound_perp",
    "rate_bound_weak_initial", "rate_bound_weak_adiabatic",
]
