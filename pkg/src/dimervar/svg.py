"""Minimal SVG output: tilings with the four domino classes colored, and
solved fields as a tilt-magnitude heat map with the frozen frontier."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .lattice import Region, Tiling
from .variational import DiscreteField, tilt_field

CLASS_COLORS = {"a": "#d62728", "b": "#1f77b4", "c": "#2ca02c", "d": "#ff7f0e"}


def _header(x0, y0, w, h, scale):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * scale:.0f}" '
        f'height="{h * scale:.0f}" viewBox="{x0} {y0} {w} {h}">\n'
        f'<g transform="translate(0,{2 * y0 + h}) scale(1,-1)">\n'
    )


def render_tiling(tiling: Tiling, path: str, scale: float = 12.0):
    cells = [c for d in tiling.dominos for c in d.cells()]
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    x0, y0 = min(xs), min(ys)
    w = max(xs) - x0 + 1
    h = max(ys) - y0 + 1
    parts = [_header(x0, y0, w, h, scale)]
    for dom in sorted(tiling.dominos, key=lambda d: d.cells()):
        (cx1, cy1), (cx2, cy2) = dom.cells()
        ww = abs(cx2 - cx1) + 1
        hh = abs(cy2 - cy1) + 1
        color = CLASS_COLORS[dom.orientation_class]
        parts.append(
            f'<rect x="{min(cx1, cx2)}" y="{min(cy1, cy2)}" width="{ww}" height="{hh}" '
            f'fill="{color}" stroke="black" stroke-width="0.05"/>\n'
        )
    parts.append("</g>\n</svg>\n")
    with open(path, "w") as fh:
        fh.write("".join(parts))


def _heat_color(value: float) -> str:
    # 0 -> deep blue (flat), 1 -> white (frozen)
    v = float(np.clip(value, 0.0, 1.0))
    r = int(255 * v)
    g = int(255 * (0.3 + 0.7 * v))
    b = int(255 * (0.9 - 0.4 * v) + 255 * 0.4 * v)
    return f"rgb({r},{g},{min(b, 255)})"


def render_field(field: DiscreteField, path: str, margin: float = 0.05, scale: float = 400.0):
    s2, t2, cx, cy = tilt_field(field)
    mag = np.abs(s2) + np.abs(t2)
    x0, y0, x1, y1 = field.region.bbox
    d = field.delta
    parts = [_header(x0, y0, x1 - x0, y1 - y0, scale)]
    nxc, nyc = mag.shape
    for i in range(nxc):
        for j in range(nyc):
            if np.isnan(mag[i, j]):
                continue
            parts.append(
                f'<rect x="{cx[i] - d / 2:.5f}" y="{cy[j] - d / 2:.5f}" '
                f'width="{d:.5f}" height="{d:.5f}" fill="{_heat_color(mag[i, j] / 2)}"/>\n'
            )
    # frozen frontier: edges between cells on opposite sides of 2 - margin
    frozen = mag >= 2.0 - margin
    seg = []
    for i in range(nxc - 1):
        for j in range(nyc):
            if np.isnan(mag[i, j]) or np.isnan(mag[i + 1, j]):
                continue
            if frozen[i, j] != frozen[i + 1, j]:
                xm = 0.5 * (cx[i] + cx[i + 1])
                seg.append((xm, cy[j] - d / 2, xm, cy[j] + d / 2))
    for i in range(nxc):
        for j in range(nyc - 1):
            if np.isnan(mag[i, j]) or np.isnan(mag[i, j + 1]):
                continue
            if frozen[i, j] != frozen[i, j + 1]:
                ym = 0.5 * (cy[j] + cy[j + 1])
                seg.append((cx[i] - d / 2, ym, cx[i] + d / 2, ym))
    for (ax, ay, bx, by) in seg:
        parts.append(
            f'<line x1="{ax:.5f}" y1="{ay:.5f}" x2="{bx:.5f}" y2="{by:.5f}" '
            f'stroke="black" stroke-width="{d / 4:.5f}"/>\n'
        )
    parts.append("</g>\n</svg>\n")
    with open(path, "w") as fh:
        fh.write("".join(parts))
