"""Self-contained SVG line charts (axes, ticks, legend), byte-stable for fixed input."""
import math
import os

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=72, right=20, top=30, bottom=50)
COLORS = ("#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#8c564b")
DASHES = ("", "6,3", "2,2", "8,3,2,3", "4,4", "1,3")


def _nice_ticks(lo, hi, count=5):
    if not hi > lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _num(v):
    return format(v, ".6g")


def _esc(s):
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_svg(x, series, title="", xlabel="", ylabel="", logx=False, logy=False, markers=False):
    """``series`` maps legend label -> y values aligned with ``x``.

    ``markers`` draws points instead of connected lines (scatter plots).
    """
    x = np.asarray(x, dtype=float)
    tx = np.log10(x) if logx else x
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    ty = {k: (np.log10(np.where(v > 0, v, np.nan)) if logy else v) for k, v in ys.items()}
    finite = np.concatenate([v[np.isfinite(v)] for v in ty.values()] or [np.zeros(1)])
    if finite.size == 0:
        finite = np.zeros(1)
    x0, x1 = float(np.nanmin(tx)) if tx.size else 0.0, float(np.nanmax(tx)) if tx.size else 1.0
    y0, y1 = float(finite.min()), float(finite.max())
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    L, R, T, B = MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]

    def px(v):
        return L + (v - x0) / (x1 - x0) * (R - L)

    def py(v):
        return B - (v - y0) / (y1 - y0) * (B - T)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        f'<line x1="{L}" y1="{B}" x2="{R}" y2="{B}" stroke="black"/>',
        f'<line x1="{L}" y1="{B}" x2="{L}" y2="{T}" stroke="black"/>',
    ]
    for v in _nice_ticks(x0, x1):
        lab = _num(10 ** v) if logx else _num(v)
        out.append(f'<line x1="{px(v):.2f}" y1="{B}" x2="{px(v):.2f}" y2="{B + 5}" stroke="black"/>')
        out.append(f'<text x="{px(v):.2f}" y="{B + 18}" text-anchor="middle">{lab}</text>')
    for v in _nice_ticks(y0, y1):
        lab = _num(10 ** v) if logy else _num(v)
        out.append(f'<line x1="{L - 5}" y1="{py(v):.2f}" x2="{L}" y2="{py(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{L - 8}" y="{py(v) + 4:.2f}" text-anchor="end">{lab}</text>')
    out.append(f'<text x="{(L + R) / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="16" y="{(T + B) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {(T + B) / 2:.1f})">{_esc(ylabel)}</text>')
    for i, (label, v) in enumerate(ty.items()):
        color, dash = COLORS[i % len(COLORS)], DASHES[i % len(DASHES)]
        pts, segs = [], []
        for a, b in zip(tx, v):
            if np.isfinite(a) and np.isfinite(b):
                pts.append(f"{px(a):.2f},{py(b):.2f}")
            elif pts:
                segs.append(pts)
                pts = []
        if pts:
            segs.append(pts)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        if markers:
            for seg in segs:
                for p in seg:
                    cx, cy = p.split(",")
                    out.append(f'<circle cx="{cx}" cy="{cy}" r="2" fill="{color}"/>')
            segs = []
        for seg in segs:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{extra} points="{" ".join(seg)}"/>')
        ly = T + 14 + 16 * i
        out.append(f'<line x1="{R - 150}" y1="{ly}" x2="{R - 125}" y2="{ly}" stroke="{color}" stroke-width="1.5"{extra}/>')
        out.append(f'<text x="{R - 120}" y="{ly + 4}">{_esc(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(x, series, path, **kw):
    text = render_svg(x, series, **kw)
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write SVG {path}: {exc.strerror}") from None
    return path
