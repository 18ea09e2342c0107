"""Static SVG heatmaps of polar fields.

Colormap: linear blend from blue (33, 102, 172) at -v through white at 0 to red
(178, 24, 43) at +v, with v = sup|u| (v = 1 for the zero field).  Output is built
from fixed-precision strings only, so equal inputs give byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .grid import Direction, ScalarField
from .symmetry import best_axis

BLUE = (33, 102, 172)
WHITE = (255, 255, 255)
RED = (178, 24, 43)

SIZE = 480
MARGIN = 20
LEGEND_W = 90


def color(t: float) -> str:
    """Hex colour for t in [-1, 1]."""
    t = min(1.0, max(-1.0, t))
    end = RED if t >= 0 else BLUE
    a = abs(t)
    rgb = [round(w + (e - w) * a) for w, e in zip(WHITE, end)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _f(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def emit_heatmap(field: ScalarField, path: str | Path, axis: Direction | None = None, title: str = "") -> Path:
    """Write ``field`` as annular cells with the axis drawn and a value legend."""
    g = field.grid
    axis = best_axis(field) if axis is None else axis
    vmax = field.sup()
    scale_v = vmax if vmax > 0 else 1.0
    cx = cy = MARGIN + SIZE / 2
    k = (SIZE / 2) / g.r_outer

    def pt(r: float, th: float) -> tuple[str, str]:
        return _f(cx + k * r * math.cos(th)), _f(cy - k * r * math.sin(th))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE + 2 * MARGIN + LEGEND_W}" '
        f'height="{SIZE + 2 * MARGIN}" viewBox="0 0 {SIZE + 2 * MARGIN + LEGEND_W} {SIZE + 2 * MARGIN}">',
        '<rect width="100%" height="100%" fill="#ffffff"/>',
    ]
    if title:
        parts.append(f'<title>{title}</title>')
    half = g.dtheta / 2
    for i in range(g.n_r):
        r_in = max(g.r[i] - g.dr / 2, 0.0)
        r_out = g.r[i] + g.dr / 2
        for j in range(g.n_theta):
            a0, a1 = g.theta[j] - half, g.theta[j] + half
            x0, y0 = pt(r_out, a0)
            x1, y1 = pt(r_out, a1)
            x2, y2 = pt(r_in, a1)
            x3, y3 = pt(r_in, a0)
            ro, ri = _f(k * r_out), _f(k * r_in)
            c = color(float(field.values[i, j]) / scale_v)
            parts.append(
                f'<path d="M{x0} {y0}A{ro} {ro} 0 0 0 {x1} {y1}L{x2} {y2}A{ri} {ri} 0 0 1 {x3} {y3}Z" '
                f'fill="{c}" stroke="{c}" stroke-width="0.3"/>'
            )
    if g.has_center:
        c = color(float(field.center) / scale_v)
        parts.append(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(k * g.dr / 2)}" fill="{c}"/>')
    # axis overlay: the ray through the axis direction, dashed towards its opposite
    phi = axis.angle
    xa, ya = pt(g.r_outer, phi)
    xb, yb = pt(g.r_outer, phi + math.pi)
    parts.append(f'<line x1="{_f(cx)}" y1="{_f(cy)}" x2="{xa}" y2="{ya}" stroke="#000000" stroke-width="2"/>')
    parts.append(f'<line x1="{_f(cx)}" y1="{_f(cy)}" x2="{xb}" y2="{yb}" stroke="#000000" '
                 f'stroke-width="1" stroke-dasharray="6 4"/>')
    parts.append(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(k * g.r_outer)}" fill="none" stroke="#606060"/>')
    # legend
    lx = SIZE + 2 * MARGIN + 10
    top, height, steps = MARGIN + 20, SIZE - 40, 64
    for s in range(steps):
        t = 1.0 - 2.0 * (s + 0.5) / steps
        parts.append(f'<rect x="{lx}" y="{_f(top + s * height / steps)}" width="20" '
                     f'height="{_f(height / steps + 0.5)}" fill="{color(t)}"/>')
    for frac, val in ((0.0, scale_v), (0.5, 0.0), (1.0, -scale_v)):
        parts.append(f'<text x="{lx + 24}" y="{_f(top + frac * height + 4)}" font-size="11" '
                     f'font-family="monospace">{val:.3g}</text>')
    parts.append(f'<text x="{lx}" y="{MARGIN + 8}" font-size="11" font-family="monospace">'
                 f'axis {axis.half_index}</text>')
    parts.append("</svg>")
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(parts) + "\n")
    return out


def colors_used(field: ScalarField) -> set[str]:
    """Distinct cell colours the heatmap would use (for tests)."""
    scale_v = field.sup() if field.sup() > 0 else 1.0
    return {color(float(v) / scale_v) for v in np.ravel(field.values)}
