"""Annealing protocols: smooth scalar ramps on [0, T] with two derivatives."""
from dataclasses import dataclass, field

import numpy as np

KINDS = ("linear", "boundary_flat", "boundary_steep", "piecewise_monotone")

# cos-argument cap for the steep ramp; 1 would give infinite end slopes
STEEP_C = 0.98


@dataclass(frozen=True)
class Schedule:
    kind: str
    v0: float
    v1: float
    T: float
    knots: tuple = ()
    seed: int = None
    steepness: float = STEEP_C
    _slopes: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}; choose from {KINDS}")
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        if self.kind == "piecewise_monotone":
            y = np.asarray(self.knots, dtype=float)
            if y.size < 2:
                raise ValueError("piecewise_monotone needs at least two knots")
            dy = np.diff(y)
            if not (np.all(dy > 0) or np.all(dy < 0)):
                raise ValueError("knots must be strictly monotone")
            if abs(y[0] - self.v0) > 1e-12 or abs(y[-1] - self.v1) > 1e-12:
                raise ValueError("first/last knot must equal the endpoints")
            object.__setattr__(self, "knots", tuple(float(v) for v in y))
            object.__setattr__(self, "_slopes", tuple(_fritsch_carlson(self.knot_times, y)))
        if self.kind == "boundary_steep" and not 0.0 < self.steepness < 1.0:
            raise ValueError("steepness must lie in (0, 1)")

    @property
    def knot_times(self):
        return np.linspace(0.0, self.T, len(self.knots))

    # --- evaluation ------------------------------------------------------
    def _check(self, t):
        t = np.asarray(t, dtype=float)
        eps = 1e-12 * self.T
        if np.any(t < -eps) or np.any(t > self.T + eps):
            raise ValueError(f"t outside [0, {self.T}]")
        return np.clip(t, 0.0, self.T)

    def value(self, t):
        return self._eval(self._check(t), 0)

    def deriv(self, t):
        return self._eval(self._check(t), 1)

    def deriv2(self, t):
        return self._eval(self._check(t), 2)

    def _eval(self, t, order):
        if self.kind == "piecewise_monotone":
            return _hermite_eval(self.knot_times, np.asarray(self.knots), np.asarray(self._slopes), t, order)
        span = self.v1 - self.v0
        s = t / self.T
        f = _SHAPES[self.kind](s, order, self.steepness)
        if order == 0:
            return self.v0 + span * f
        return span * f / self.T ** order

    def to_dict(self):
        d = {"kind": self.kind, "v0": self.v0, "v1": self.v1, "T": self.T}
        if self.kind == "piecewise_monotone":
            d["knots"] = list(self.knots)
        if self.seed is not None:
            d["seed"] = self.seed
        if self.kind == "boundary_steep":
            d["steepness"] = self.steepness
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        knots = tuple(d.pop("knots", ()))
        return cls(knots=knots, **d)

    def rescaled(self, T):
        """Same shape stretched to a new horizon."""
        return Schedule(self.kind, self.v0, self.v1, T, self.knots, self.seed, self.steepness)


def _linear(s, order, _):
    if order == 0:
        return s
    if order == 1:
        return np.ones_like(s)
    return np.zeros_like(s)


def _flat(s, order, _):
    # sin^2(pi s / 2): zero slope at both ends
    if order == 0:
        return np.sin(0.5 * np.pi * s) ** 2
    if order == 1:
        return 0.5 * np.pi * np.sin(np.pi * s)
    return 0.5 * np.pi ** 2 * np.cos(np.pi * s)


def _steep(s, order, c):
    # regularised arccos ramp: fast at both ends, slow in the middle
    u = c * (1.0 - 2.0 * s)
    base = np.arccos(c)
    norm = np.pi - 2.0 * base
    if order == 0:
        return (np.arccos(u) - base) / norm
    root = np.sqrt(1.0 - u * u)
    if order == 1:
        return 2.0 * c / (root * norm)
    return -4.0 * c * c * u / (root ** 3 * norm)


_SHAPES = {"linear": _linear, "boundary_flat": _flat, "boundary_steep": _steep}


def _fritsch_carlson(x, y):
    """Monotone cubic Hermite slopes (Fritsch & Carlson 1980)."""
    h = np.diff(x)
    delta = np.diff(y) / h
    m = np.empty_like(y)
    m[0] = delta[0]
    m[-1] = delta[-1]
    m[1:-1] = 0.5 * (delta[:-1] + delta[1:])
    flat = delta[:-1] * delta[1:] <= 0
    m[1:-1][flat] = 0.0
    for k in range(delta.size):
        if delta[k] == 0.0:
            m[k] = m[k + 1] = 0.0
            continue
        a = m[k] / delta[k]
        b = m[k + 1] / delta[k]
        r = a * a + b * b
        if r > 9.0:
            tau = 3.0 / np.sqrt(r)
            m[k] = tau * a * delta[k]
            m[k + 1] = tau * b * delta[k]
    return m


def _hermite_eval(x, y, m, t, order):
    t = np.asarray(t, dtype=float)
    k = np.clip(np.searchsorted(x, t, side="right") - 1, 0, x.size - 2)
    h = x[k + 1] - x[k]
    s = (t - x[k]) / h
    y0, y1, m0, m1 = y[k], y[k + 1], m[k] * h, m[k + 1] * h
    if order == 0:
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1
    if order == 1:
        d00 = 6 * s * s - 6 * s
        d10 = 3 * s * s - 4 * s + 1
        d01 = -d00
        d11 = 3 * s * s - 2 * s
        return (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / h
    e00 = 12 * s - 6
    e10 = 6 * s - 4
    e01 = -e00
    e11 = 6 * s - 2
    return (e00 * y0 + e10 * m0 + e01 * y1 + e11 * m1) / h ** 2


def linear(v0, v1, T):
    return Schedule("linear", v0, v1, T)


def boundary_flat(v0, v1, T):
    return Schedule("boundary_flat", v0, v1, T)


def boundary_steep(v0, v1, T, steepness=STEEP_C):
    return Schedule("boundary_steep", v0, v1, T, steepness=steepness)


def random_monotone(seed, T, v0=np.pi / 2, v1=0.0, n_knots=8):
    """Seeded monotone protocol from v0 to v1 through ``n_knots`` knots.

    Increments are uniform on (0, 1], normalised so the knots span exactly
    [v0, v1]; the interpolant is the Fritsch-Carlson monotone cubic.
    """
    if n_knots < 2:
        raise ValueError("n_knots must be >= 2")
    rng = np.random.default_rng(seed)
    inc = 1.0 - rng.random(n_knots - 1)
    frac = np.concatenate([[0.0], np.cumsum(inc) / inc.sum()])
    knots = v0 + (v1 - v0) * frac
    knots[0], knots[-1] = v0, v1
    return Schedule("piecewise_monotone", float(v0), float(v1), float(T), tuple(knots), seed=int(seed))
