"""Minimal self-contained SVG line plots: axes, ticks, polylines, legend.

Deliberately dependency-free; output is deterministic (fixed float
formatting) so plots from identical runs are byte-identical.
"""

from __future__ import annotations

import math

__all__ = ["line_plot"]

_W, _H = 640, 460
_ML, _MR, _MT, _MB = 70, 20, 34, 50
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / n))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * span:
        ticks.append(t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list[float]:
    return [10.0**e for e in range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1)]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def line_plot(
    path,
    series,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
) -> None:
    """Write a line plot to ``path``.

    ``series`` is a list of (xs, ys, label); non-finite and (on log axes)
    non-positive points are dropped per series.
    """
    cleaned = []
    for xs, ys, label in series:
        pts = [
            (float(x), float(y))
            for x, y in zip(xs, ys)
            if math.isfinite(x) and math.isfinite(y) and (not logx or x > 0) and (not logy or y > 0)
        ]
        if pts:
            cleaned.append((pts, label))
    if not cleaned:
        cleaned = [([(0.0, 0.0), (1.0, 0.0)], "empty")]

    all_x = [p[0] for pts, _ in cleaned for p in pts]
    all_y = [p[1] for pts, _ in cleaned for p in pts]
    tx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: math.log10(v)) if logy else (lambda v: v)
    x_lo, x_hi = min(map(tx, all_x)), max(map(tx, all_x))
    y_lo, y_hi = min(map(ty, all_y)), max(map(ty, all_y))
    if x_hi - x_lo < 1e-12:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi - y_lo < 1e-12:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad_x, pad_y = 0.04 * (x_hi - x_lo), 0.06 * (y_hi - y_lo)
    x_lo, x_hi = x_lo - pad_x, x_hi + pad_x
    y_lo, y_hi = y_lo - pad_y, y_hi + pad_y

    def px(v: float) -> float:
        return _ML + (tx(v) - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def py(v: float) -> float:
        return _H - _MB - (ty(v) - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    xticks = _log_ticks(10**x_lo, 10**x_hi) if logx else _nice_ticks(x_lo, x_hi)
    yticks = _log_ticks(10**y_lo, 10**y_hi) if logy else _nice_ticks(y_lo, y_hi)
    xticks = [t for t in xticks if x_lo - 1e-12 <= tx(t) <= x_hi + 1e-12]
    yticks = [t for t in yticks if y_lo - 1e-12 <= ty(t) <= y_hi + 1e-12]

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        'fill="none" stroke="black" stroke-width="1"/>',
    ]
    font = 'font-family="monospace" font-size="11"'
    for t in xticks:
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{_H - _MB}" x2="{x:.2f}" y2="{_H - _MB + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{_H - _MB + 18}" text-anchor="middle" {font}>{_fmt(t)}</text>')
    for t in yticks:
        y = py(t)
        out.append(f'<line x1="{_ML - 5}" y1="{y:.2f}" x2="{_ML}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{_ML - 8}" y="{y + 4:.2f}" text-anchor="end" {font}>{_fmt(t)}</text>')
    if title:
        out.append(f'<text x="{_W / 2:.0f}" y="20" text-anchor="middle" font-family="monospace" font-size="14">{title}</text>')
    if xlabel:
        out.append(f'<text x="{_W / 2:.0f}" y="{_H - 12}" text-anchor="middle" {font}>{xlabel}</text>')
    if ylabel:
        out.append(
            f'<text x="16" y="{_H / 2:.0f}" text-anchor="middle" {font} transform="rotate(-90 16 {_H / 2:.0f})">{ylabel}</text>'
        )
    for i, (pts, label) in enumerate(cleaned):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        for x, y in pts:
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.2" fill="{color}"/>')
        if label:
            ly = _MT + 16 + 14 * i
            out.append(f'<line x1="{_W - _MR - 120}" y1="{ly - 4}" x2="{_W - _MR - 100}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{_W - _MR - 95}" y="{ly}" {font}>{label}</text>')
    out.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
