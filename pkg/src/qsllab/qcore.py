"""Complex linear algebra and quantum primitives.

Functions accept plain numpy arrays or the thin wrappers defined here, and
broadcast over leading axes: an operator stack of shape ``(n, d, d)`` pairs
with a state stack of shape ``(n, d)``.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    ConvergenceError,
    DegenerateDecompositionError,
    DimensionError,
    GapCollisionError,
)

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
DENSE_CAP = 4096
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.shape[0] < 2:
            raise DimensionError(f"state needs a 1-d array of length >= 2, got shape {amps.shape}")
        nrm = np.linalg.norm(amps)
        if nrm == 0.0:
            raise ValueError("zero vector cannot be normalised")
        amps = amps / nrm
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self):
        return self.amplitudes.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)


@dataclass(frozen=True)
class HermitianOperator:
    """Hermitian matrix with a representation tag.

    ``kind='diagonal'`` stores only the real diagonal.
    """

    data: np.ndarray
    kind: str = field(default="dense")

    def __post_init__(self):
        if self.kind not in ("dense", "two_by_two", "diagonal"):
            raise ValueError(f"unknown representation {self.kind!r}")
        arr = np.asarray(self.data)
        if self.kind == "diagonal":
            if arr.ndim != 1:
                raise DimensionError("diagonal operator needs a 1-d array")
            if np.iscomplexobj(arr) and np.max(np.abs(arr.imag), initial=0.0) > HERMITIAN_TOL:
                raise ValueError("diagonal entries of a Hermitian operator must be real")
            arr = np.real(arr).astype(np.float64)
        else:
            arr = arr.astype(np.complex128)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise DimensionError(f"operator must be square, got {arr.shape}")
            if self.kind == "two_by_two" and arr.shape != (2, 2):
                raise DimensionError("two_by_two operator must be 2x2")
            scale = max(1.0, float(np.max(np.abs(arr), initial=0.0)))
            if np.max(np.abs(arr - arr.conj().T), initial=0.0) > HERMITIAN_TOL * scale:
                raise ValueError("matrix is not Hermitian")
            arr = 0.5 * (arr + arr.conj().T)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m)
        return cls(m, "two_by_two" if m.shape == (2, 2) else "dense")

    @property
    def dim(self):
        return self.data.shape[0]

    def dense(self):
        if self.kind == "diagonal":
            return np.diag(self.data).astype(np.complex128)
        return self.data

    def apply(self, psi):
        psi = _state_array(psi)
        if self.kind == "diagonal":
            return self.data * psi
        return psi @ self.data.T

    def __array__(self, dtype=None, copy=None):
        d = self.dense()
        return d if dtype is None else d.astype(dtype)

    def __add__(self, other):
        return HermitianOperator.from_matrix(self.dense() + _op_array(other))

    def __sub__(self, other):
        return HermitianOperator.from_matrix(self.dense() - _op_array(other))

    def __mul__(self, c):
        c = float(c)
        if self.kind == "diagonal":
            return HermitianOperator(self.data * c, "diagonal")
        return HermitianOperator(self.data * c, self.kind)

    __rmul__ = __mul__


# Pauli matrices
SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
ID2 = np.eye(2, dtype=np.complex128)


def _state_array(psi):
    if isinstance(psi, StateVector):
        return psi.amplitudes
    return np.asarray(psi, dtype=np.complex128)


def _op_array(op):
    if isinstance(op, HermitianOperator):
        return op.dense()
    return np.asarray(op, dtype=np.complex128)


def normalize(psi):
    psi = _state_array(psi)
    return psi / np.linalg.norm(psi, axis=-1, keepdims=True)


def _apply(op, psi):
    if isinstance(op, HermitianOperator) and op.kind == "diagonal":
        return op.data * psi
    op = _op_array(op)
    if op.shape[-1] != psi.shape[-1]:
        raise DimensionError(f"operator dim {op.shape[-1]} vs state dim {psi.shape[-1]}")
    return np.einsum("...ij,...j->...i", op, psi)


def _scale(op):
    if isinstance(op, HermitianOperator) and op.kind == "diagonal":
        return max(1.0, float(np.max(np.abs(op.data))))
    return max(1.0, float(np.max(np.abs(_op_array(op)), initial=0.0)))


def expectation(op, psi):
    """Real part of <psi|op|psi>; complains if the imaginary part is not round-off."""
    psi = _state_array(psi)
    val = np.einsum("...i,...i->...", psi.conj(), _apply(op, psi))
    if np.max(np.abs(np.imag(val)), initial=0.0) > 1e-10 * _scale(op):
        raise ValueError("expectation value has a non-negligible imaginary part; operator not Hermitian?")
    return np.real(val)


def variance_sqrt(op, psi):
    """sigma(op, psi) = sqrt(<op^2> - <op>^2) for normalised psi.

    Evaluated as the norm of ``(op - <op>) psi``: same quantity, but free of
    the cancellation that ruins tiny variances in the textbook form.
    """
    psi = _state_array(psi)
    hpsi = _apply(op, psi)
    mean = np.real(np.einsum("...i,...i->...", psi.conj(), hpsi))
    resid = hpsi - mean[..., None] * psi
    return np.linalg.norm(resid, axis=-1)


def fubini_angle(a, b):
    """Fubini-Study angle arccos|<a|b>| of normalised states, in [0, pi/2].

    Computed as atan2(|b_perp|, |<a|b>|), which keeps full relative accuracy
    for nearly parallel states where arccos does not.
    """
    a = _state_array(a)
    b = _state_array(b)
    if a.shape[-1] != b.shape[-1]:
        raise DimensionError(f"state dims differ: {a.shape[-1]} vs {b.shape[-1]}")
    ov = np.einsum("...i,...i->...", a.conj(), b)
    mag = np.abs(ov)
    if np.max(mag, initial=0.0) > 1.0 + 1e-10:
        raise ValueError("overlap magnitude exceeds 1: states not normalised")
    perp = np.linalg.norm(b - ov[..., None] * a, axis=-1)
    return np.arctan2(perp, np.minimum(mag, 1.0))


def orthogonal_component(op, psi, tol=1e-13):
    """Split ``op|psi> = <op>|psi> + sigma |psi_perp>`` and return (psi_perp, sigma)."""
    psi = _state_array(psi)
    if psi.ndim != 1:
        raise DimensionError("orthogonal_component works on a single state")
    hpsi = _apply(op, psi)
    mean = np.vdot(psi, hpsi).real
    resid = hpsi - mean * psi
    sigma = float(np.linalg.norm(resid))
    if sigma <= tol:
        raise DegenerateDecompositionError(f"variance {sigma:.3e} too small: psi is an eigenstate")
    perp = resid / sigma
    # project out the round-off parallel piece once more
    perp = perp - np.vdot(psi, perp) * psi
    perp /= np.linalg.norm(perp)
    return perp, sigma


def eig2x2(h):
    """Closed-form eigenpairs of (stacks of) 2x2 Hermitian matrices.

    For ``(h/2)(cos t sz + sin t sx)`` with cos t >= 0 the ground vector comes
    out as ``(sin(t/2), -cos(t/2))`` and the excited one as ``(cos(t/2), sin(t/2))``.
    """
    h = np.asarray(h, dtype=np.complex128)
    a = h[..., 0, 0].real
    d = h[..., 1, 1].real
    b = h[..., 0, 1]
    mean = 0.5 * (a + d)
    half = 0.5 * (a - d)
    r = np.hypot(half, np.abs(b))
    evals = np.stack([mean - r, mean + r], axis=-1)
    pos = half >= 0
    lo = np.where(pos[..., None], np.stack([b, -(half + r)], axis=-1), np.stack([half - r, b.conj()], axis=-1))
    hi = np.where(pos[..., None], np.stack([half + r, b.conj()], axis=-1), np.stack([b, r - half], axis=-1))
    vecs = np.stack([lo, hi], axis=-1)
    norms = np.linalg.norm(vecs, axis=-2, keepdims=True)
    flat = (norms[..., 0, :] == 0.0)
    safe = np.where(norms == 0.0, 1.0, norms)
    vecs = vecs / safe
    if np.any(flat):
        eye = np.broadcast_to(ID2, vecs.shape)
        vecs = np.where(flat[..., None, :], eye, vecs)
    return evals, vecs


def eig_herm(op, cap=DENSE_CAP, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Ascending eigenvalues and orthonormal eigenvector columns.

    2x2 input uses the closed form; anything larger runs cyclic Jacobi
    rotations until the off-diagonal Frobenius norm is below ``tol`` (scaled
    by the matrix norm when that exceeds one).
    """
    if isinstance(op, HermitianOperator) and op.kind == "diagonal":
        order = np.argsort(op.data)
        return op.data[order], np.eye(op.dim, dtype=np.complex128)[:, order]
    m = _op_array(op)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got {m.shape}")
    n = m.shape[0]
    if n == 2:
        return eig2x2(m)
    if n > cap:
        raise DimensionError(f"dimension {n} exceeds dense cap {cap}")
    scale = max(1.0, float(np.linalg.norm(m)))
    w, v, sweeps = kernels.jacobi_eigh(np.ascontiguousarray(m), tol * scale, max_sweeps)
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps (d={n})")
    return w, v


@dataclass(frozen=True)
class SpectralFrame:
    times: np.ndarray
    eigenvalues: np.ndarray  # (n_t, d)
    eigenvectors: np.ndarray  # (n_t, d, d), columns are levels

    @property
    def dim(self):
        return self.eigenvalues.shape[1]


def check_gaps(frame, min_gap=1e-10, levels=None):
    """Raise GapCollisionError when adjacent levels come within ``min_gap``."""
    ev = frame.eigenvalues
    gaps = np.diff(ev, axis=1)
    if levels is not None:
        idx = sorted({j for n in levels for j in (n - 1, n) if 0 <= j < gaps.shape[1]})
        gaps = gaps[:, idx]
        cols = idx
    else:
        cols = list(range(gaps.shape[1]))
    if gaps.size and gaps.min() <= min_gap:
        i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
        lvl = cols[j]
        t = float(frame.times[i])
        raise GapCollisionError(
            f"levels {lvl} and {lvl + 1} collide at t={t:.6g} (gap {gaps[i, j]:.3e})",
            time=t, levels=(lvl, lvl + 1),
        )


def _real_phase(v):
    # phase that makes the largest-magnitude component real positive
    k = np.argmax(np.abs(v), axis=0)
    pivot = v[k, np.arange(v.shape[1])]
    return np.conj(pivot) / np.abs(pivot)


def gauge_fix_continuity(frame, min_gap=1e-10, levels=None):
    """Parallel-transport gauge on the grid.

    The first frame gets its largest component real positive per level; each
    later eigenvector is rephased so the overlap with its predecessor is real
    and positive. For real symmetric Hamiltonians this leaves real vectors.
    """
    check_gaps(frame, min_gap, levels)
    vecs = np.array(frame.eigenvectors, dtype=np.complex128, copy=True)
    vecs[0] = vecs[0] * _real_phase(vecs[0])[None, :]
    for i in range(1, vecs.shape[0]):
        ov = np.einsum("ij,ij->j", vecs[i - 1].conj(), vecs[i])
        mag = np.abs(ov)
        if np.min(mag) < 1e-8:
            n = int(np.argmin(mag))
            raise GapCollisionError(
                f"level {n} changes character abruptly at t={frame.times[i]:.6g}; refine the grid",
                time=float(frame.times[i]), levels=(n, n),
            )
        vecs[i] = vecs[i] * (ov.conj() / mag)[None, :]
    return SpectralFrame(np.asarray(frame.times), np.asarray(frame.eigenvalues), vecs)
