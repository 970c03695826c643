"""Log-log least-squares power-law fits."""
from dataclasses import dataclass
import math

from ..errors import QslError


class FitDomainError(QslError, ValueError):
    pass


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float
    residual: float  # max |ln value - fitted ln value|
    window: tuple  # (N_min, N_max) actually used
    n_points: int


def powerlaw_fit(points, window=None):
    """Fit value = exp(intercept) * N**exponent on points with N inside ``window``."""
    pts = sorted((float(n), float(v)) for n, v in points)
    if window is not None:
        lo, hi = window
        pts = [(n, v) for n, v in pts if lo <= n <= hi]
    if len(pts) < 4:
        raise FitDomainError(f"power-law fit needs at least 4 points, got {len(pts)}")
    if any(n <= 0 or v <= 0 for n, v in pts):
        raise FitDomainError("power-law fit needs positive N and values")
    x = [math.log(n) for n, _ in pts]
    y = [math.log(v) for _, v in pts]
    k = len(x)
    mx = math.fsum(x) / k
    my = math.fsum(y) / k
    sxx = math.fsum((a - mx) ** 2 for a in x)
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    slope = sxy / sxx
    icpt = my - slope * mx
    resid = max(abs(b - (icpt + slope * a)) for a, b in zip(x, y))
    return FitResult(slope, icpt, resid, (pts[0][0], pts[-1][0]), k)


def window_study(points, min_points=4):
    """Fits over every contiguous window of at least ``min_points`` sizes."""
    pts = sorted((float(n), float(v)) for n, v in points)
    out = []
    for i in range(len(pts)):
        for j in range(i + min_points, len(pts) + 1):
            out.append(powerlaw_fit(pts[i:j]))
    return out
