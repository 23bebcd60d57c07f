"""Minimal SVG output: basin rasters and line charts, written as plain text."""

from __future__ import annotations

from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .classifier import BasinGrid, EXCLUDED_B, EXCLUDED_GAMMA, IN_WA, IN_WS, UNRESOLVED

COLOURS = {
    IN_WS: "#2b6cb0",
    IN_WA: "#e2e8f0",
    EXCLUDED_B: "#c53030",
    EXCLUDED_GAMMA: "#dd6b20",
    UNRESOLVED: "#1a202c",
}


def _fmt(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".")


def _header(width: int, height: int, title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]


def basin_svg(grid: BasinGrid, size: int = 512, overlay: bool = True) -> str:
    """Raster of cell verdicts; runs of equal cells in a row become one rectangle."""
    n = 2**grid.level
    cell = size / (2 * n + 1)

    def px(x1: float, x2: float) -> tuple[float, float]:
        return (x1 * n + n + 0.5) * cell, (n - x2 * n + 0.5) * cell

    out = _header(size, size, f"basin of sink {grid.sink}, level {grid.level}")
    out.append('<circle cx="{0}" cy="{0}" r="{1}" fill="none" stroke="#718096" stroke-width="1"/>'.format(
        _fmt(size / 2), _fmt(n * cell)))
    if len(grid.ij):
        order = np.lexsort((grid.ij[:, 0], -grid.ij[:, 1]))
        ij, v = grid.ij[order], grid.verdict[order]
        start = 0
        for k in range(1, len(ij) + 1):
            if k < len(ij) and ij[k, 1] == ij[start, 1] and ij[k, 0] == ij[k - 1, 0] + 1 and v[k] == v[start]:
                continue
            i0, j0 = int(ij[start, 0]), int(ij[start, 1])
            run = k - start
            x = (i0 + n) * cell
            y = (n - j0) * cell
            out.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(run * cell)}" height="{_fmt(cell)}" '
                f'fill="{COLOURS[int(v[start])]}"/>'
            )
            start = k
    if overlay and grid.portrait is not None:
        for s in grid.portrait.squares:
            c = px(float(s.centre[0]), float(s.centre[1]))
            h = float(s.side) * n * cell
            colour = {"sink": "#22543d", "source": "#742a2a", "saddle": "#7b341e"}[s.marker]
            out.append(
                f'<rect x="{_fmt(c[0] - h / 2)}" y="{_fmt(c[1] - h / 2)}" width="{_fmt(h)}" height="{_fmt(h)}" '
                f'fill="none" stroke="{colour}" stroke-width="1.5"/>'
            )
        for a in grid.portrait.annuli:
            for poly in (a.inner, a.outer):
                out.append(_polyline([px(p[0], p[1]) for p in poly], "#276749" if a.marker == "attracting" else "#9b2c2c", True))
        for arc in grid.arcs:
            out.append(_polyline([px(p[0], p[1]) for p in arc.vertices], "#c05621", False))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _polyline(points, colour: str, closed: bool) -> str:
    tag = "polygon" if closed else "polyline"
    pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
    return f'<{tag} points="{pts}" fill="none" stroke="{colour}" stroke-width="1"/>'


def line_chart(
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    title: str = "",
    width: int = 640,
    height: int = 400,
    log_y: bool = False,
) -> str:
    """Polylines for named ``(x, y)`` series on shared axes."""
    palette = ["#2b6cb0", "#c53030", "#2f855a", "#b7791f", "#6b46c1", "#2c7a7b"]
    xs = [np.asarray(x, float) for x, _ in series.values()]
    ys = [np.asarray(y, float) for _, y in series.values()]
    if log_y:
        ys = [np.log10(np.maximum(y, 1e-300)) for y in ys]
    allx = np.concatenate(xs) if xs else np.zeros(1)
    ally = np.concatenate(ys) if ys else np.zeros(1)
    ally = ally[np.isfinite(ally)] if np.any(np.isfinite(ally)) else np.zeros(1)
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    m = 48
    out = _header(width, height, title)
    out.append(f'<text x="{m}" y="20" font-family="sans-serif" font-size="13">{escape(title)}</text>')
    out.append(f'<rect x="{m}" y="{m}" width="{width - 2 * m}" height="{height - 2 * m}" fill="none" stroke="#a0aec0"/>')
    for lab, val, yy in ((_fmt(y1), y1, m), (_fmt(y0), y0, height - m)):
        out.append(f'<text x="4" y="{yy + 4}" font-family="sans-serif" font-size="10">{"1e" if log_y else ""}{lab}</text>')
    out.append(f'<text x="{m}" y="{height - m + 14}" font-family="sans-serif" font-size="10">{_fmt(x0)}</text>')
    out.append(f'<text x="{width - m - 24}" y="{height - m + 14}" font-family="sans-serif" font-size="10">{_fmt(x1)}</text>')
    for n, (name, x, y) in enumerate(zip(series, xs, ys)):
        colour = palette[n % len(palette)]
        ok = np.isfinite(y)
        px = m + (x[ok] - x0) / (x1 - x0) * (width - 2 * m)
        py = height - m - (y[ok] - y0) / (y1 - y0) * (height - 2 * m)
        out.append(_polyline(list(zip(px, py)), colour, False))
        out.append(f'<text x="{width - m + 4}" y="{m + 14 * (n + 1)}" font-family="sans-serif" font-size="10" fill="{colour}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
