"""Time the numba kernels against their numpy twins on representative inputs.

    python benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Both twins are called directly, so the QSLLAB_DISABLE_JIT flag does not
matter here. The first numba call (compilation or cache load) is excluded.
"""
import argparse
import time

import numpy as np

from qsllab import _accel, kernels
from qsllab.qcore import SX, SZ


def _cases(scale):
    rng = np.random.default_rng(0)
    cases = {}

    n = int(4000 * scale)
    d = 8
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    base = (a + a.conj().T) / 8
    hs = base[None] * (1 + 0.1 * np.sin(np.linspace(0, 3, 2 * n + 1)))[:, None, None]
    psi = np.ones(d, complex) / np.sqrt(d)
    cases["rk4_sampled"] = (hs, psi, 0.01, 1)

    n = int(20000 * scale)
    t = np.linspace(0, np.pi / 2, 2 * n + 1)
    coefs = np.stack([0.5 * np.cos(t), 0.5 * np.sin(t)], axis=-1)[None]
    mats = np.stack([SZ, SX])[None]
    psi = np.array([[1, 0], [0, 1]], complex)
    cases["rk4_affine_batch"] = (coefs, mats, psi, 0.01, 10)

    N = int(400 * scale) // 2 * 2
    n = int(5000 * scale)
    ks = (2 * np.arange(1, N // 2 + 1) - 1) * np.pi / N
    T = n * 0.01
    th = np.linspace(0, T, 2 * n + 1) / T
    rec = np.linspace(0, T, n // 10 + 1)
    cases["tfim_mode_sums"] = (ks, 1 - th, th, -np.ones_like(rec) / T, np.ones_like(rec) / T, 0.01, 10, 1.0)

    N = int(2000 * scale)
    m = np.arange(N + 1) - N / 2
    w = np.exp(-0.5 * (m / np.sqrt(N / 4)) ** 2)
    w /= w.sum()
    e = -2 * (m * m / N + m)
    cases["quench_sums"] = (w, e, np.linspace(0, 3, 601))
    return cases


def _time(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _max_diff(a, b):
    if isinstance(a, tuple):
        return max(_max_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--scale", type=float, default=1.0, help="problem-size multiplier")
    args = p.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    print(f"{'kernel':<18} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8} {'max |diff|':>11}")
    for name, case in _cases(args.scale).items():
        fast, slow = kernels.IMPLEMENTATIONS[name]
        fast(*case)  # compile or load from cache
        tf, a = _time(fast, case, args.repeat)
        ts, b = _time(slow, case, args.repeat)
        print(f"{name:<18} {tf:>10.4f} {ts:>10.4f} {ts / tf:>8.1f} {_max_diff(a, b):>11.2e}")


if __name__ == "__main__":
    main()
