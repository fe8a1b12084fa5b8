"""Minimal deterministic SVG rendering of polygons and boxes.

No plotting library: output bytes depend only on the input geometry, which
keeps artifact files reproducible byte-for-byte.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import AlignedBox, VPolygon

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]
_SIZE = 640.0
_MARGIN = 40.0


def _fmt(x: float) -> str:
    return f"{x:.4f}"


class _Mapper:
    def __init__(self, lo, hi):
        span = np.maximum(hi - lo, 1e-12)
        scale = (_SIZE - 2 * _MARGIN) / span.max()
        self.scale = scale
        self.lo = lo
        self.hi = hi

    def point(self, p):
        x = _MARGIN + (p[0] - self.lo[0]) * self.scale
        y = _SIZE - _MARGIN - (p[1] - self.lo[1]) * self.scale
        return x, y


def render_svg(
    path: str | Path,
    polygons: list[tuple[str, VPolygon]] = (),
    boxes: list[tuple[str, AlignedBox]] = (),
) -> None:
    """Write an SVG overlay of labelled polygons and 2D boxes with a legend."""
    shapes_lo, shapes_hi = [], []
    for _, poly in polygons:
        shapes_lo.append(poly.vertices.min(axis=0))
        shapes_hi.append(poly.vertices.max(axis=0))
    for _, box in boxes:
        if box.dim != 2:
            raise ValueError("SVG rendering handles 2D geometry only")
        shapes_lo.append(np.asarray(box.lo))
        shapes_hi.append(np.asarray(box.hi))
    if not shapes_lo:
        raise ValueError("nothing to draw")
    lo = np.min(shapes_lo, axis=0)
    hi = np.max(shapes_hi, axis=0)
    mapper = _Mapper(lo, hi)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(_SIZE)}" height="{int(_SIZE)}" '
        f'viewBox="0 0 {int(_SIZE)} {int(_SIZE)}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    legend = []
    color_idx = 0

    for name, poly in polygons:
        color = _PALETTE[color_idx % len(_PALETTE)]
        color_idx += 1
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in (mapper.point(v) for v in poly.vertices))
        parts.append(
            f'<polygon points="{pts}" fill="{color}" fill-opacity="0.15" stroke="{color}" stroke-width="1.5"/>'
        )
        legend.append((name, color))

    for name, box in boxes:
        color = _PALETTE[color_idx % len(_PALETTE)]
        color_idx += 1
        x0, y1 = mapper.point(box.lo)
        x1, y0 = mapper.point(box.hi)
        parts.append(
            f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1 - x0)}" height="{_fmt(y1 - y0)}" '
            f'fill="{color}" fill-opacity="0.25" stroke="{color}" stroke-width="1"/>'
        )
        legend.append((name, color))

    for i, (name, color) in enumerate(legend):
        y = 20 + 16 * i
        parts.append(f'<rect x="10" y="{y - 10}" width="12" height="12" fill="{color}"/>')
        parts.append(f'<text x="28" y="{y}" font-family="monospace" font-size="12">{name}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
