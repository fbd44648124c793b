"""Minimal deterministic SVG line plots (polyline + axes + ticks).

CSV files remain the ground truth for all emitted data; these plots are a
convenience rendering with no external dependency.
"""

from __future__ import annotations

import math

__all__ = ["line_plot_svg"]

_WIDTH, _HEIGHT = 720, 460
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 28, 44
_COLORS = ("#1f6fb2", "#c44e52", "#55a868", "#8172b2", "#937860")


def _ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def line_plot_svg(series: list[tuple[list[float], list[float], str]],
                  title: str = "", xlabel: str = "", ylabel: str = "",
                  log_y: bool = False) -> str:
    """Render one or more (xs, ys, label) series as an SVG document string."""
    if not series:
        raise ValueError("need at least one series")
    xs_all = [x for xs, _, _ in series for x in xs]
    ys_raw = [y for _, ys, _ in series for y in ys]
    if log_y:
        ys_all = [math.log10(y) for y in ys_raw if y > 0]
        if not ys_all:
            raise ValueError("log_y requires positive values")
    else:
        ys_all = ys_raw
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pw = _WIDTH - _MARGIN_L - _MARGIN_R
    ph = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y: float) -> float:
        return _MARGIN_T + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="18" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    axis = (f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T + ph}" x2="{_MARGIN_L + pw}" '
            f'y2="{_MARGIN_T + ph}" stroke="black"/>'
            f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
            f'y2="{_MARGIN_T + ph}" stroke="black"/>')
    parts.append(axis)
    for tx in _ticks(x_lo, x_hi):
        parts.append(f'<line x1="{px(tx):.2f}" y1="{_MARGIN_T + ph}" '
                     f'x2="{px(tx):.2f}" y2="{_MARGIN_T + ph + 5}" stroke="black"/>')
        parts.append(f'<text x="{px(tx):.2f}" y="{_MARGIN_T + ph + 18}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{_fmt(tx)}</text>')
    for ty in _ticks(y_lo, y_hi):
        label = f"1e{_fmt(ty)}" if log_y else _fmt(ty)
        parts.append(f'<line x1="{_MARGIN_L - 5}" y1="{py(ty):.2f}" '
                     f'x2="{_MARGIN_L}" y2="{py(ty):.2f}" stroke="black"/>')
        parts.append(f'<text x="{_MARGIN_L - 8}" y="{py(ty) + 4:.2f}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{label}</text>')
    parts.append(f'<text x="{_MARGIN_L + pw / 2:.1f}" y="{_HEIGHT - 8}" '
                 f'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="12">{xlabel}</text>')
    parts.append(f'<text x="14" y="{_MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12" '
                 f'transform="rotate(-90 14 {_MARGIN_T + ph / 2:.1f})">{ylabel}</text>')
    for idx, (xs, ys, label) in enumerate(series):
        color = _COLORS[idx % len(_COLORS)]
        pts = []
        for x, y in zip(xs, ys):
            if log_y:
                if y <= 0:
                    continue
                y = math.log10(y)
            pts.append(f"{px(x):.2f},{py(y):.2f}")
        parts.append(f'<polyline points="{" ".join(pts)}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        if label:
            ly = _MARGIN_T + 14 + 16 * idx
            parts.append(f'<line x1="{_MARGIN_L + pw - 150}" y1="{ly - 4}" '
                         f'x2="{_MARGIN_L + pw - 126}" y2="{ly - 4}" '
                         f'stroke="{color}" stroke-width="1.5"/>')
            parts.append(f'<text x="{_MARGIN_L + pw - 120}" y="{ly}" '
                         f'font-family="sans-serif" font-size="11">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
