"""Hot numeric kernels.

Every kernel exists twice: a loop-style ``_*_numba`` version compiled with
``njit`` and a vectorised ``_*_numpy`` version. The public name dispatches on
``qsllab._accel.USE_NUMBA``. Both twins perform the same reductions in the
same order wherever a caller relies on fixed-order sums.

Sampling convention for RK4 kernels: Hamiltonian data is supplied on the
half-step lattice ``t0 + j*dt/2`` for ``j = 0 .. 2*n_int``, so step ``s`` uses
indices ``2s`` (start), ``2s+1`` (midpoint) and ``2s+2`` (end).
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit


# ---------------------------------------------------------------- Jacobi --

@njit
def jacobi_eigh(a, tol, max_sweeps):
    """Cyclic Jacobi diagonalisation of a complex Hermitian matrix.

    Returns ``(w, v, sweeps)`` with ascending ``w``; ``sweeps`` is -1 when the
    off-diagonal norm did not drop below ``tol`` within ``max_sweeps``.
    """
    n = a.shape[0]
    A = a.astype(np.complex128).copy()
    V = np.eye(n, dtype=np.complex128)
    done = -1
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += A[i, j].real ** 2 + A[i, j].imag ** 2
        if math.sqrt(off) < tol:
            done = sweep
            break
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                e = apq / mag
                theta = 0.5 * math.atan2(2.0 * mag, A[q, q].real - A[p, p].real)
                c = math.cos(theta)
                s = math.sin(theta)
                se = s * e
                sce = s * np.conj(e)
                colp = A[:, p].copy()
                colq = A[:, q].copy()
                A[:, p] = c * colp - sce * colq
                A[:, q] = se * colp + c * colq
                rowp = A[p, :].copy()
                rowq = A[q, :].copy()
                A[p, :] = c * rowp - se * rowq
                A[q, :] = sce * rowp + c * rowq
                A[p, q] = 0.0
                A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - sce * vq
                V[:, q] = se * vp + c * vq
    w = np.empty(n)
    for i in range(n):
        w[i] = A[i, i].real
    order = np.argsort(w)
    return w[order], V[:, order], done


# ------------------------------------------------------- RK4, sampled H --

@njit
def _matvec(h, v, out):
    d = v.shape[0]
    for i in range(d):
        acc = 0j
        for j in range(d):
            acc += h[i, j] * v[j]
        out[i] = acc


@njit
def _rk4_sampled_numba(hs, psi0, dt, stride):
    n_int = (hs.shape[0] - 1) // 2
    d = psi0.shape[0]
    n_rec = n_int // stride + 1
    out = np.empty((n_rec, d), dtype=np.complex128)
    psi = psi0.astype(np.complex128).copy()
    out[0] = psi
    k1 = np.empty(d, dtype=np.complex128)
    k2 = np.empty(d, dtype=np.complex128)
    k3 = np.empty(d, dtype=np.complex128)
    k4 = np.empty(d, dtype=np.complex128)
    tmp = np.empty(d, dtype=np.complex128)
    rec = 1
    for s in range(n_int):
        _matvec(hs[2 * s], psi, k1)
        for i in range(d):
            k1[i] *= -1j
            tmp[i] = psi[i] + 0.5 * dt * k1[i]
        _matvec(hs[2 * s + 1], tmp, k2)
        for i in range(d):
            k2[i] *= -1j
            tmp[i] = psi[i] + 0.5 * dt * k2[i]
        _matvec(hs[2 * s + 1], tmp, k3)
        for i in range(d):
            k3[i] *= -1j
            tmp[i] = psi[i] + dt * k3[i]
        _matvec(hs[2 * s + 2], tmp, k4)
        for i in range(d):
            psi[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] - 1j * k4[i])
        if (s + 1) % stride == 0:
            out[rec] = psi
            rec += 1
    return out


def _rk4_sampled_numpy(hs, psi0, dt, stride):
    n_int = (hs.shape[0] - 1) // 2
    n_rec = n_int // stride + 1
    out = np.empty((n_rec, psi0.shape[0]), dtype=np.complex128)
    psi = np.asarray(psi0, dtype=np.complex128).copy()
    out[0] = psi
    rec = 1
    for s in range(n_int):
        hm = hs[2 * s + 1]
        k1 = -1j * (hs[2 * s] @ psi)
        k2 = -1j * (hm @ (psi + 0.5 * dt * k1))
        k3 = -1j * (hm @ (psi + 0.5 * dt * k2))
        k4 = -1j * (hs[2 * s + 2] @ (psi + dt * k3))
        psi = psi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (s + 1) % stride == 0:
            out[rec] = psi
            rec += 1
    return out


def rk4_sampled(hs, psi0, dt, stride=1):
    """Integrate ``i dpsi/dt = H psi`` given ``hs`` on the half-step lattice.

    Returns the states at every ``stride``-th integration step, including the
    initial state.
    """
    hs = np.ascontiguousarray(hs, dtype=np.complex128)
    psi0 = np.ascontiguousarray(psi0, dtype=np.complex128)
    if (hs.shape[0] - 1) % (2 * stride):
        raise ValueError("half-step samples do not match the record stride")
    if USE_NUMBA:
        return _rk4_sampled_numba(hs, psi0, float(dt), int(stride))
    return _rk4_sampled_numpy(hs, psi0, float(dt), int(stride))


# ------------------------------------------- RK4, batched affine H(t) --
# H_b(t) = sum_j coefs[b, t, j] * mats[b, j]; leading dims of size 1 broadcast.

@njit
def _affine_h(coefs, cb, idx, mats, mb, out):
    d = out.shape[0]
    for i in range(d):
        for j in range(d):
            out[i, j] = 0j
    for term in range(mats.shape[1]):
        c = coefs[cb, idx, term]
        for i in range(d):
            for j in range(d):
                out[i, j] += c * mats[mb, term, i, j]


@njit
def _rk4_affine_numba(coefs, mats, psi0, dt, stride):
    nb = psi0.shape[0]
    d = psi0.shape[1]
    n_int = (coefs.shape[1] - 1) // 2
    n_rec = n_int // stride + 1
    out = np.empty((nb, n_rec, d), dtype=np.complex128)
    h0 = np.empty((d, d), dtype=np.complex128)
    hm = np.empty((d, d), dtype=np.complex128)
    h1 = np.empty((d, d), dtype=np.complex128)
    k1 = np.empty(d, dtype=np.complex128)
    k2 = np.empty(d, dtype=np.complex128)
    k3 = np.empty(d, dtype=np.complex128)
    k4 = np.empty(d, dtype=np.complex128)
    tmp = np.empty(d, dtype=np.complex128)
    for b in range(nb):
        cb = b if coefs.shape[0] > 1 else 0
        mb = b if mats.shape[0] > 1 else 0
        psi = psi0[b].copy()
        out[b, 0] = psi
        rec = 1
        _affine_h(coefs, cb, 0, mats, mb, h1)
        for s in range(n_int):
            h0[:, :] = h1
            _affine_h(coefs, cb, 2 * s + 1, mats, mb, hm)
            _affine_h(coefs, cb, 2 * s + 2, mats, mb, h1)
            _matvec(h0, psi, k1)
            for i in range(d):
                k1[i] *= -1j
                tmp[i] = psi[i] + 0.5 * dt * k1[i]
            _matvec(hm, tmp, k2)
            for i in range(d):
                k2[i] *= -1j
                tmp[i] = psi[i] + 0.5 * dt * k2[i]
            _matvec(hm, tmp, k3)
            for i in range(d):
                k3[i] *= -1j
                tmp[i] = psi[i] + dt * k3[i]
            _matvec(h1, tmp, k4)
            for i in range(d):
                psi[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] - 1j * k4[i])
            if (s + 1) % stride == 0:
                out[b, rec] = psi
                rec += 1
    return out


def _rk4_affine_numpy(coefs, mats, psi0, dt, stride):
    nb, d = psi0.shape
    n_int = (coefs.shape[1] - 1) // 2
    n_rec = n_int // stride + 1
    out = np.empty((nb, n_rec, d), dtype=np.complex128)
    psi = psi0.copy()
    out[:, 0] = psi

    def ham(idx):
        h = np.einsum("bj,bjkl->bkl", coefs[:, idx, :], mats)
        return np.broadcast_to(h, (nb, d, d))

    def apply(h, v):
        return -1j * np.einsum("bkl,bl->bk", h, v)

    h1 = ham(0)
    rec = 1
    for s in range(n_int):
        h0, hm, h1 = h1, ham(2 * s + 1), ham(2 * s + 2)
        k1 = apply(h0, psi)
        k2 = apply(hm, psi + 0.5 * dt * k1)
        k3 = apply(hm, psi + 0.5 * dt * k2)
        k4 = apply(h1, psi + dt * k3)
        psi = psi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (s + 1) % stride == 0:
            out[:, rec] = psi
            rec += 1
    return out


def rk4_affine_batch(coefs, mats, psi0, dt, stride=1):
    """Batched RK4 for Hamiltonians linear in a few time-dependent coefficients.

    coefs : (B or 1, 2*n_int+1, n_terms) real, on the half-step lattice
    mats  : (B or 1, n_terms, d, d) complex
    psi0  : (B, d) complex
    """
    coefs = np.ascontiguousarray(coefs, dtype=np.float64)
    mats = np.ascontiguousarray(mats, dtype=np.complex128)
    psi0 = np.ascontiguousarray(psi0, dtype=np.complex128)
    if (coefs.shape[1] - 1) % (2 * stride):
        raise ValueError("half-step samples do not match the record stride")
    if USE_NUMBA:
        return _rk4_affine_numba(coefs, mats, psi0, float(dt), int(stride))
    return _rk4_affine_numpy(coefs, mats, psi0, float(dt), int(stride))


# --------------------------------------------------- Ising-chain modes --
# Mode k evolves under scale * [(A - B cos k) sz + (B sin k) sx]. Only
# mode-summed observables leave the kernel, accumulated in mode-index order.

@njit
def _tfim_modes_numba(ks, a_half, b_half, adot, bdot, dt, stride, scale):
    n_int = (a_half.shape[0] - 1) // 2
    n_rec = n_int // stride + 1
    log_ad = np.zeros(n_rec)
    log_init = np.zeros(n_rec)
    w_cd = np.zeros(n_rec, dtype=np.complex128)
    excess = np.zeros(n_rec)
    drift = 0.0
    for m in range(ks.shape[0]):
        ck = math.cos(ks[m])
        sk = math.sin(ks[m])
        th0 = math.atan2(scale * b_half[0] * sk, scale * (a_half[0] - b_half[0] * ck))
        i0 = math.sin(0.5 * th0)
        i1 = -math.cos(0.5 * th0)
        p0 = i0 + 0j
        p1 = i1 + 0j
        for r in range(n_rec):
            j = 2 * r * stride
            x = scale * (a_half[j] - b_half[j] * ck)
            y = scale * b_half[j] * sk
            xd = scale * (adot[r] - bdot[r] * ck)
            yd = scale * bdot[r] * sk
            th = math.atan2(y, x)
            g0 = math.sin(0.5 * th)
            g1 = -math.cos(0.5 * th)
            nrm2 = p0.real ** 2 + p0.imag ** 2 + p1.real ** 2 + p1.imag ** 2
            nrm = math.sqrt(nrm2)
            dev = abs(nrm - 1.0)
            if dev > drift:
                drift = dev
            alpha = (g0 * p0 + g1 * p1) / nrm
            beta = (-g1 * p0 + g0 * p1) / nrm
            eps = math.sqrt(x * x + y * y)
            thd = (x * yd - y * xd) / (x * x + y * y)
            log_ad[r] += math.log(abs(alpha))
            log_init[r] += math.log(abs((i0 * p0 + i1 * p1) / nrm))
            w_cd[r] += -0.5j * thd * beta / alpha
            excess[r] += 2.0 * eps * (beta.real ** 2 + beta.imag ** 2)
            if r == n_rec - 1:
                break
            for s in range(stride):
                j = 2 * (r * stride + s)
                z0 = scale * (a_half[j] - b_half[j] * ck)
                x0 = scale * b_half[j] * sk
                z1 = scale * (a_half[j + 1] - b_half[j + 1] * ck)
                x1 = scale * b_half[j + 1] * sk
                z2 = scale * (a_half[j + 2] - b_half[j + 2] * ck)
                x2 = scale * b_half[j + 2] * sk
                f0a = -1j * (z0 * p0 + x0 * p1)
                f0b = -1j * (x0 * p0 - z0 * p1)
                q0 = p0 + 0.5 * dt * f0a
                q1 = p1 + 0.5 * dt * f0b
                f1a = -1j * (z1 * q0 + x1 * q1)
                f1b = -1j * (x1 * q0 - z1 * q1)
                q0 = p0 + 0.5 * dt * f1a
                q1 = p1 + 0.5 * dt * f1b
                f2a = -1j * (z1 * q0 + x1 * q1)
                f2b = -1j * (x1 * q0 - z1 * q1)
                q0 = p0 + dt * f2a
                q1 = p1 + dt * f2b
                f3a = -1j * (z2 * q0 + x2 * q1)
                f3b = -1j * (x2 * q0 - z2 * q1)
                p0 = p0 + dt / 6.0 * (f0a + 2.0 * f1a + 2.0 * f2a + f3a)
                p1 = p1 + dt / 6.0 * (f0b + 2.0 * f1b + 2.0 * f2b + f3b)
    return log_ad, log_init, w_cd, excess, drift


def _tfim_modes_numpy(ks, a_half, b_half, adot, bdot, dt, stride, scale):
    n_int = (a_half.shape[0] - 1) // 2
    n_rec = n_int // stride + 1
    log_ad = np.zeros(n_rec)
    log_init = np.zeros(n_rec)
    w_cd = np.zeros(n_rec, dtype=np.complex128)
    excess = np.zeros(n_rec)
    ck = np.cos(ks)
    sk = np.sin(ks)
    th0 = np.arctan2(scale * b_half[0] * sk, scale * (a_half[0] - b_half[0] * ck))
    i0 = np.sin(0.5 * th0)
    i1 = -np.cos(0.5 * th0)
    p0 = i0.astype(np.complex128)
    p1 = i1.astype(np.complex128)
    drift = 0.0
    for r in range(n_rec):
        j = 2 * r * stride
        x = scale * (a_half[j] - b_half[j] * ck)
        y = scale * b_half[j] * sk
        xd = scale * (adot[r] - bdot[r] * ck)
        yd = scale * bdot[r] * sk
        th = np.arctan2(y, x)
        g0 = np.sin(0.5 * th)
        g1 = -np.cos(0.5 * th)
        nrm = np.sqrt(np.abs(p0) ** 2 + np.abs(p1) ** 2)
        drift = max(drift, float(np.max(np.abs(nrm - 1.0))))
        alpha = (g0 * p0 + g1 * p1) / nrm
        beta = (-g1 * p0 + g0 * p1) / nrm
        eps = np.sqrt(x * x + y * y)
        thd = (x * yd - y * xd) / (x * x + y * y)
        log_ad[r] = np.sum(np.log(np.abs(alpha)))
        log_init[r] = np.sum(np.log(np.abs((i0 * p0 + i1 * p1) / nrm)))
        w_cd[r] = np.sum(-0.5j * thd * beta / alpha)
        excess[r] = np.sum(2.0 * eps * np.abs(beta) ** 2)
        if r == n_rec - 1:
            break
        for s in range(stride):
            j = 2 * (r * stride + s)
            z0 = scale * (a_half[j] - b_half[j] * ck)
            x0 = scale * b_half[j] * sk
            z1 = scale * (a_half[j + 1] - b_half[j + 1] * ck)
            x1 = scale * b_half[j + 1] * sk
            z2 = scale * (a_half[j + 2] - b_half[j + 2] * ck)
            x2 = scale * b_half[j + 2] * sk
            f0a = -1j * (z0 * p0 + x0 * p1)
            f0b = -1j * (x0 * p0 - z0 * p1)
            f1a = -1j * (z1 * (p0 + 0.5 * dt * f0a) + x1 * (p1 + 0.5 * dt * f0b))
            f1b = -1j * (x1 * (p0 + 0.5 * dt * f0a) - z1 * (p1 + 0.5 * dt * f0b))
            f2a = -1j * (z1 * (p0 + 0.5 * dt * f1a) + x1 * (p1 + 0.5 * dt * f1b))
            f2b = -1j * (x1 * (p0 + 0.5 * dt * f1a) - z1 * (p1 + 0.5 * dt * f1b))
            f3a = -1j * (z2 * (p0 + dt * f2a) + x2 * (p1 + dt * f2b))
            f3b = -1j * (x2 * (p0 + dt * f2a) - z2 * (p1 + dt * f2b))
            p0 = p0 + dt / 6.0 * (f0a + 2.0 * f1a + 2.0 * f2a + f3a)
            p1 = p1 + dt / 6.0 * (f0b + 2.0 * f1b + 2.0 * f2b + f3b)
    return log_ad, log_init, w_cd, excess, drift


def tfim_mode_sums(ks, a_half, b_half, adot, bdot, dt, stride=1, scale=1.0):
    """Propagate all momentum modes from their t=0 ground states.

    Returns mode sums on the record grid: ``log|<ad_k|psi_k>|``,
    ``log|<psi_k(0)|psi_k>|``, the weak value of the counterdiabatic term,
    the excitation energy ``<H_k> - eps_ground_k``, and the worst norm drift.
    """
    args = (
        np.ascontiguousarray(ks, dtype=np.float64),
        np.ascontiguousarray(a_half, dtype=np.float64),
        np.ascontiguousarray(b_half, dtype=np.float64),
        np.ascontiguousarray(adot, dtype=np.float64),
        np.ascontiguousarray(bdot, dtype=np.float64),
        float(dt),
        int(stride),
        float(scale),
    )
    if (args[1].shape[0] - 1) % (2 * stride):
        raise ValueError("half-step samples do not match the record stride")
    if USE_NUMBA:
        return _tfim_modes_numba(*args)
    return _tfim_modes_numpy(*args)


# --------------------------------------------- diagonal-quench overlaps --
# G(t) = sum_m w_m exp(-i E_m t),  X(t) = sum_m w_m E_m exp(-i E_m t),
# Kahan-compensated, summed over m in index order for both backends.

@njit
def _quench_sums_numba(weights, energies, times):
    nt = times.shape[0]
    g = np.empty(nt, dtype=np.complex128)
    x = np.empty(nt, dtype=np.complex128)
    for i in range(nt):
        t = times[i]
        gs = 0j
        gc = 0j
        xs = 0j
        xc = 0j
        for m in range(weights.shape[0]):
            ph = -energies[m] * t
            term = weights[m] * complex(math.cos(ph), math.sin(ph))
            y = term - gc
            tot = gs + y
            gc = (tot - gs) - y
            gs = tot
            y = term * energies[m] - xc
            tot = xs + y
            xc = (tot - xs) - y
            xs = tot
        g[i] = gs
        x[i] = xs
    return g, x


def _quench_sums_numpy(weights, energies, times):
    gs = np.zeros(times.shape[0], dtype=np.complex128)
    gc = np.zeros_like(gs)
    xs = np.zeros_like(gs)
    xc = np.zeros_like(gs)
    for m in range(weights.shape[0]):
        ph = -energies[m] * times
        term = weights[m] * (np.cos(ph) + 1j * np.sin(ph))
        y = term - gc
        tot = gs + y
        gc = (tot - gs) - y
        gs = tot
        y = term * energies[m] - xc
        tot = xs + y
        xc = (tot - xs) - y
        xs = tot
    return gs, xs


def quench_sums(weights, energies, times):
    """Double-precision ``(G, X)`` for a diagonal Hamiltonian quench."""
    args = (
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(energies, dtype=np.float64),
        np.ascontiguousarray(times, dtype=np.float64),
    )
    if USE_NUMBA:
        return _quench_sums_numba(*args)
    return _quench_sums_numpy(*args)


IMPLEMENTATIONS = {
    "rk4_sampled": (_rk4_sampled_numba, _rk4_sampled_numpy),
    "rk4_affine_batch": (_rk4_affine_numba, _rk4_affine_numpy),
    "tfim_mode_sums": (_tfim_modes_numba, _tfim_modes_numpy),
    "quench_sums": (_quench_sums_numba, _quench_sums_numpy),
}
