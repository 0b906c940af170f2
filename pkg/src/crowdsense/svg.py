"""Dependency-free SVG line charts.

Charts are built by direct string assembly with fixed-precision
coordinate formatting, so identical inputs always yield byte-identical
files.
"""

from __future__ import annotations

import numpy as np

from .errors import CrowdsenseError

WIDTH = 640.0
HEIGHT = 400.0
MARGIN_LEFT = 62.0
MARGIN_RIGHT = 18.0
MARGIN_TOP = 32.0
MARGIN_BOTTOM = 48.0

LINE_COLOR = "#1f6fb4"
BAND_COLOR = "#1f6fb4"
BAND_OPACITY = "0.18"
AXIS_COLOR = "#333333"
GRID_COLOR = "#dddddd"


def _fmt(value: float) -> str:
    return format(value, ".2f")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def _tick_label(value: float) -> str:
    return format(value, ".4g")


def line_chart(
    x: np.ndarray,
    mean: np.ndarray,
    band: np.ndarray,
    *,
    title: str,
    x_label: str,
    y_label: str,
) -> str:
    """Render a mean line with a symmetric mean +/- band envelope.

    `band` holds the half-width of the envelope at each point (pass zeros
    for no band). Returns the SVG document as a string.
    """
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    band = np.asarray(band, dtype=float)
    if x.size == 0:
        raise CrowdsenseError("no data to plot")
    if not (x.shape == mean.shape == band.shape):
        raise CrowdsenseError(
            f"mismatched plot arrays: x {x.shape}, mean {mean.shape}, band {band.shape}"
        )

    x_lo, x_hi = float(x.min()), float(x.max())
    y_lo = float((mean - band).min())
    y_hi = float((mean + band).max())
    if y_hi == y_lo:
        y_lo -= 1.0
        y_hi += 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(v: float) -> float:
        if x_hi == x_lo:
            return MARGIN_LEFT + plot_w / 2.0
        return MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v: float) -> float:
        return MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h

    parts: list[str] = []
    parts.append('<?xml version="1.0" encoding="UTF-8"?>')
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(WIDTH)}" '
        f'height="{_fmt(HEIGHT)}" viewBox="0 0 {_fmt(WIDTH)} {_fmt(HEIGHT)}">'
    )
    parts.append(f'<rect width="{_fmt(WIDTH)}" height="{_fmt(HEIGHT)}" fill="#ffffff"/>')

    # grid and tick labels
    for ty in _ticks(y_lo, y_hi):
        py = sy(ty)
        parts.append(
            f'<line x1="{_fmt(MARGIN_LEFT)}" y1="{_fmt(py)}" '
            f'x2="{_fmt(WIDTH - MARGIN_RIGHT)}" y2="{_fmt(py)}" '
            f'stroke="{GRID_COLOR}" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(MARGIN_LEFT - 6)}" y="{_fmt(py + 4)}" '
            f'font-family="sans-serif" font-size="11" text-anchor="end" '
            f'fill="{AXIS_COLOR}">{_tick_label(ty)}</text>'
        )
    for tx in _ticks(x_lo, x_hi):
        px = sx(tx)
        parts.append(
            f'<text x="{_fmt(px)}" y="{_fmt(HEIGHT - MARGIN_BOTTOM + 16)}" '
            f'font-family="sans-serif" font-size="11" text-anchor="middle" '
            f'fill="{AXIS_COLOR}">{_tick_label(tx)}</text>'
        )

    # variance band: forward along the top edge, back along the bottom
    if band.any():
        pts = [f"{_fmt(sx(xv))},{_fmt(sy(yv))}" for xv, yv in zip(x, mean + band)]
        pts += [f"{_fmt(sx(xv))},{_fmt(sy(yv))}" for xv, yv in zip(x[::-1], (mean - band)[::-1])]
        parts.append(
            f'<polygon points="{" ".join(pts)}" fill="{BAND_COLOR}" '
            f'fill-opacity="{BAND_OPACITY}" stroke="none"/>'
        )

    line_pts = " ".join(f"{_fmt(sx(xv))},{_fmt(sy(yv))}" for xv, yv in zip(x, mean))
    parts.append(
        f'<polyline points="{line_pts}" fill="none" stroke="{LINE_COLOR}" stroke-width="1.5"/>'
    )

    # axes on top of everything else
    parts.append(
        f'<line x1="{_fmt(MARGIN_LEFT)}" y1="{_fmt(MARGIN_TOP)}" '
        f'x2="{_fmt(MARGIN_LEFT)}" y2="{_fmt(HEIGHT - MARGIN_BOTTOM)}" '
        f'stroke="{AXIS_COLOR}" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_fmt(MARGIN_LEFT)}" y1="{_fmt(HEIGHT - MARGIN_BOTTOM)}" '
        f'x2="{_fmt(WIDTH - MARGIN_RIGHT)}" y2="{_fmt(HEIGHT - MARGIN_BOTTOM)}" '
        f'stroke="{AXIS_COLOR}" stroke-width="1"/>'
    )

    parts.append(
        f'<text x="{_fmt(WIDTH / 2)}" y="{_fmt(MARGIN_TOP - 12)}" '
        f'font-family="sans-serif" font-size="14" text-anchor="middle" '
        f'fill="{AXIS_COLOR}">{title}</text>'
    )
    parts.append(
        f'<text x="{_fmt(WIDTH / 2)}" y="{_fmt(HEIGHT - 10)}" '
        f'font-family="sans-serif" font-size="12" text-anchor="middle" '
        f'fill="{AXIS_COLOR}">{x_label}</text>'
    )
    parts.append(
        f'<text x="14.00" y="{_fmt(HEIGHT / 2)}" font-family="sans-serif" font-size="12" '
        f'text-anchor="middle" fill="{AXIS_COLOR}" '
        f'transform="rotate(-90 14.00 {_fmt(HEIGHT / 2)})">{y_label}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
