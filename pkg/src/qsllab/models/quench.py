"""Collective-spin quench H = -2((J/N)(S^z)^2 + h S^z) from the S^x = N/2 state.

H is diagonal in the S^z basis, so the evolution is exact:
G(t) = sum_m w_m exp(-i E_m t) with binomial weights w_m. The overlap decays
like exp(-N g), which defeats double precision at a few hundred spins; such
points are recomputed with adaptive-precision arithmetic (gmpy2).
"""
from dataclasses import dataclass
from math import comb

import gmpy2
import numpy as np

from .. import kernels
from ..bounds import ZERO_OVERLAP, rate_series
from ..dynamics import cumtrapz, time_derivative

# double-precision sums are trusted above this |G|
DOUBLE_FLOOR = 1e-6
# guard bits kept above the cancellation depth in the multiprecision path
GUARD_BITS = 80
START_PREC = 64


@dataclass(frozen=True)
class QuenchModel:
    N: int
    J: float
    h: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")

    @property
    def m(self):
        return np.arange(self.N + 1) - 0.5 * self.N

    @property
    def energies(self):
        m = self.m
        return -2.0 * (self.J * m * m / self.N + self.h * m)

    @property
    def weights(self):
        """|a_m|^2 = C(N, k) / 2^N, exact to double rounding."""
        n = self.N
        return np.array([float(gmpy2.mpq(comb(n, k), 2 ** n)) for k in range(n + 1)])

    @property
    def amplitudes(self):
        return np.sqrt(self.weights)


def quench_e0(model):
    """<psi0|H|psi0> = -2 (J/N) <(S^z)^2> = -J/2; the field term averages out."""
    return -0.5 * model.J


class _Multiprecision:
    """G and X = sum w E e^{-iEt} with precision raised until the sum is resolved."""

    def __init__(self, model):
        self.model = model
        self.counts = [comb(model.N, k) for k in range(model.N + 1)]
        self._weights = {}
        self.prec = START_PREC

    def weights(self, prec):
        if prec not in self._weights:
            with gmpy2.context(precision=prec):
                scale = gmpy2.mpfr(2) ** self.model.N
                self._weights[prec] = [gmpy2.mpfr(c) / scale for c in self.counts]
        return self._weights[prec]

    def sums(self, t, prec):
        md = self.model
        n, J, h = md.N, gmpy2.mpfr(md.J), gmpy2.mpfr(md.h)
        w = self.weights(prec)
        with gmpy2.context(precision=prec):
            t = gmpy2.mpfr(t)
            m0 = gmpy2.mpfr(-n) / 2
            # e^{-i E_m t} = e^{2i (J m^2/N + h m) t}; consecutive ratios form a geometric chain
            z = gmpy2.exp(gmpy2.mpc(0, 2 * (J * m0 * m0 / n + h * m0) * t))
            r = gmpy2.exp(gmpy2.mpc(0, 2 * t * (J * (2 * m0 + 1) / n + h)))
            q = gmpy2.exp(gmpy2.mpc(0, 4 * J * t / n))
            g = gmpy2.mpc(0)
            x = gmpy2.mpc(0)
            for k in range(n + 1):
                m = m0 + k
                term = w[k] * z
                g += term
                x += term * (-2 * (J * m * m / n + h * m))
                z *= r
                r *= q
            return g, x

    def evaluate(self, t):
        """(ln|G|, X/G) with enough bits to resolve G; precision is warm-started."""
        prec = max(START_PREC, self.prec - 64)
        while True:
            g, x = self.sums(t, prec)
            if g != 0:
                depth = -float(gmpy2.log2(abs(g)))
                if depth < prec - GUARD_BITS:
                    break
                prec = max(2 * prec, int(depth) + 2 * GUARD_BITS)
            else:
                prec *= 2
        self.prec = prec
        with gmpy2.context(precision=prec):
            ratio = x / g
            return float(gmpy2.log(abs(g))), complex(float(ratio.real), float(ratio.imag))


def overlap_data(model, times, precision="auto"):
    """ln|G(t)| and X(t)/G(t) on ``times``.

    ``precision``: "double", "mp" or "auto" (double where |G| >= DOUBLE_FLOOR).
    """
    times = np.asarray(times, dtype=float)
    if precision not in ("auto", "double", "mp"):
        raise ValueError("precision must be auto, double or mp")
    log_g = np.empty(times.shape)
    ratio = np.empty(times.shape, dtype=np.complex128)
    redo = np.ones(times.shape, dtype=bool)
    if precision != "mp":
        g, x = kernels.quench_sums(model.weights, model.energies, times)
        mag = np.abs(g)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_g[:] = np.log(mag)
            ratio[:] = x / g
        redo = mag < DOUBLE_FLOOR if precision == "auto" else np.zeros(times.shape, dtype=bool)
    if np.any(redo):
        mp = _Multiprecision(model)
        for i in np.flatnonzero(redo):
            log_g[i], ratio[i] = mp.evaluate(float(times[i]))
    return log_g, ratio


def zero_crossing_flags(log_g):
    """Points where |G| dips by more than 1e12 relative to its neighbours, or vanishes."""
    lg = np.asarray(log_g, dtype=float)
    flags = ~np.isfinite(lg)
    if lg.size >= 3:
        ref = 0.5 * (lg[:-2] + lg[2:])
        dip = np.zeros(lg.shape, dtype=bool)
        with np.errstate(invalid="ignore"):
            dip[1:-1] = lg[1:-1] < ref + np.log(ZERO_OVERLAP)
        flags |= dip
    return flags


def kink_report(times, g_dot, top=5, factor=10.0, separation=3):
    """Times of curvature spikes: local maxima of |second difference of g_dot|.

    A spike must exceed ``factor`` times the median curvature and lie at least
    ``separation`` grid points from a larger one; at most ``top`` are
    returned, largest first.
    """
    d2 = np.abs(np.diff(g_dot, 2))
    if d2.size < 3:
        return []
    med = float(np.median(d2)) or np.finfo(float).tiny
    idx = [i for i in range(1, d2.size - 1) if d2[i] >= d2[i - 1] and d2[i] >= d2[i + 1] and d2[i] > factor * med]
    idx.sort(key=lambda i: (-d2[i], i))
    picked = []
    for i in idx:
        if all(abs(i - j) >= separation for j in picked):
            picked.append(i)
    return [(float(times[i + 1]), float(d2[i])) for i in picked[:top]]


def quench_run(model, grid, precision="auto"):
    """Loschmidt rate, its analytic derivative and the reduced H1 weak-value bound.

    With the eigenstate start and a time-independent diagonal H, the weak
    value of H1 reduces to X/G - E0. Integrated columns exclude flagged points.
    """
    t = grid.points
    log_g, ratio = overlap_data(model, t, precision)
    flags = zero_crossing_flags(log_g)
    N = model.N
    e0 = quench_e0(model)
    weak = ratio - e0
    g_dot = -ratio.imag / N
    bound = np.abs(weak) / N

    def safe(v):
        return np.where(flags, 0.0, v)

    extra = {
        "weak_im": weak.imag,
        "int_g_dot": cumtrapz(safe(g_dot), t),
        "int_g_dot_abs": cumtrapz(safe(np.abs(g_dot)), t),
        "int_bound": cumtrapz(safe(bound), t),
    }
    out = rate_series(grid, log_g, bound, N, flags, g_dot=g_dot, extra=extra)
    out.extra["g_dot_fd"] = time_derivative(out.g, t)
    return out
