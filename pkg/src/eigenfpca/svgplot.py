"""Minimal SVG output for label/eigenvalue heatmaps and eigenfunction lines.

Presentation only; none of the estimators depend on this module.
"""

import numpy as np

from .textio import open_text

_LABEL_COLORS = ("#101010", "#8e8e8e", "#f4f4f4")  # S0, S1, S2


def _ramp(v):
    """Map v in [0, 1] to a blue-to-red hex color."""
    v = min(1.0, max(0.0, float(v)))
    r = int(round(255 * v))
    b = int(round(255 * (1.0 - v)))
    g = int(round(64 + 96 * (1.0 - abs(2 * v - 1.0))))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(path, grid, categorical=False, cell: int = 6) -> None:
    """Write a q1 x q2 grid as an SVG rectangle raster.

    ``categorical`` grids color by label (3 classes); numeric grids use a
    linear ramp between their min and max.
    """
    g = np.asarray(grid)
    q1, q2 = g.shape
    w, h = q2 * cell, q1 * cell
    lo, hi = float(np.nanmin(g)), float(np.nanmax(g))
    span = hi - lo if hi > lo else 1.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">']
    for i in range(q1):
        for j in range(q2):
            if categorical:
                color = _LABEL_COLORS[int(g[i, j]) % len(_LABEL_COLORS)]
            else:
                color = _ramp((float(g[i, j]) - lo) / span)
            # row i paints from the bottom so axis 0 points up
            y = (q1 - 1 - i) * cell
            parts.append(f'<rect x="{j * cell}" y="{y}" width="{cell}" '
                         f'height="{cell}" fill="{color}"/>')
    parts.append("</svg>")
    with open_text(path, "w") as f:
        f.write("\n".join(parts) + "\n")


def lines_svg(path, x, ys, width: int = 640, height: int = 360) -> None:
    """Write one polyline per column of ``ys`` against ``x``."""
    x = np.asarray(x, dtype=float)
    Y = np.atleast_2d(np.asarray(ys, dtype=float))
    if Y.shape[0] != x.size:
        Y = Y.T
    lo, hi = float(np.nanmin(Y)), float(np.nanmax(Y))
    span = hi - lo if hi > lo else 1.0
    xspan = x[-1] - x[0] if x[-1] > x[0] else 1.0
    colors = ["#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#d35400", "#16a085"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    for k in range(Y.shape[1]):
        pts = []
        for i in range(x.size):
            px = (x[i] - x[0]) / xspan * (width - 20) + 10
            py = height - 10 - (Y[i, k] - lo) / span * (height - 20)
            pts.append(f"{px:.2f},{py:.2f}")
        color = colors[k % len(colors)]
        parts.append(f'<polyline points="{" ".join(pts)}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
    parts.append("</svg>")
    with open_text(path, "w") as f:
        f.write("\n".join(parts) + "\n")
