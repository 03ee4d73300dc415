"""SVG 1.1 export of planar frameworks with flex and stress overlays.

Bars are drawn solid, cables dashed, struts double-stroked.  A flex
overlay adds velocity arrows scaled so the longest arrow spans 10% of the
bounding box; a stress overlay labels each member with its value.
"""

from __future__ import annotations

from typing import Optional, Union
from xml.sax.saxutils import escape

import numpy as np

from .model import Framework, MemberKind, StressField, Tensegrity, VelocityField

__all__ = ["render_svg", "DimensionError"]


class DimensionError(ValueError):
    """SVG export handles two-dimensional frameworks only."""


def _fmt(x: float) -> str:
    return f"{x:.4f}".rstrip("0").rstrip(".")


def render_svg(
    obj: Union[Framework, Tensegrity],
    flex: Optional[Union[VelocityField, np.ndarray]] = None,
    stress: Optional[StressField] = None,
    size: int = 640,
    margin: float = 0.1,
) -> str:
    framework = obj.framework if isinstance(obj, Tensegrity) else obj
    if framework.dimension != 2:
        raise DimensionError(f"SVG export requires dimension 2, got {framework.dimension}")
    P = framework.placement_array
    lo = P.min(axis=0)
    hi = P.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    pad = margin * span.max()
    lo = lo - pad
    hi = hi + pad
    span = hi - lo
    scale = size / span.max()
    height = span[1] * scale
    width = span[0] * scale

    def to_px(point: np.ndarray) -> tuple[float, float]:
        x = (point[0] - lo[0]) * scale
        y = height - (point[1] - lo[1]) * scale  # flip the y axis for screen coords
        return x, y

    lines: list[str] = []
    lines.append('<?xml version="1.0" encoding="UTF-8"?>')
    lines.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">'
    )
    lines.append('<g stroke-linecap="round">')
    stroke = max(1.2, size / 400.0)
    for idx, member in enumerate(framework.members):
        a = to_px(P[member.i - 1])
        b = to_px(P[member.j - 1])
        common = f'x1="{_fmt(a[0])}" y1="{_fmt(a[1])}" x2="{_fmt(b[0])}" y2="{_fmt(b[1])}"'
        if member.kind is MemberKind.CABLE:
            lines.append(f'<line {common} stroke="#555555" stroke-width="{_fmt(stroke)}" stroke-dasharray="6,5"/>')
        elif member.kind is MemberKind.STRUT:
            # Double stroke: one wide line under a narrow background-coloured core.
            lines.append(f'<line {common} stroke="#222222" stroke-width="{_fmt(3 * stroke)}"/>')
            lines.append(f'<line {common} stroke="#ffffff" stroke-width="{_fmt(stroke)}"/>')
        else:
            lines.append(f'<line {common} stroke="#222222" stroke-width="{_fmt(1.5 * stroke)}"/>')
        if stress is not None:
            mid = 0.5 * (np.asarray(a) + np.asarray(b))
            value = stress.values[idx]
            lines.append(
                f'<text x="{_fmt(mid[0])}" y="{_fmt(mid[1] - 3)}" font-size="{_fmt(size / 45)}" '
                f'fill="#aa2222" text-anchor="middle">{escape(f"{value:g}")}</text>'
            )
    for v in range(framework.n_vertices):
        cx, cy = to_px(P[v])
        lines.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(2 * stroke)}" fill="#111111"/>')
    if flex is not None:
        U = flex.array if isinstance(flex, VelocityField) else np.asarray(flex, dtype=float)
        U = U.reshape(framework.n_vertices, 2)
        max_len = float(np.linalg.norm(U, axis=1).max())
        if max_len > 0:
            arrow_scale = 0.10 * span.max() / max_len
            for v in range(framework.n_vertices):
                if np.linalg.norm(U[v]) == 0:
                    continue
                tip_world = P[v] + arrow_scale * U[v]
                tail = to_px(P[v])
                tip = to_px(tip_world)
                lines.append(
                    f'<line x1="{_fmt(tail[0])}" y1="{_fmt(tail[1])}" x2="{_fmt(tip[0])}" y2="{_fmt(tip[1])}" '
                    f'stroke="#1f6fb2" stroke-width="{_fmt(stroke)}"/>'
                )
                direction = np.asarray(tip) - np.asarray(tail)
                norm = np.linalg.norm(direction)
                if norm > 0:
                    d = direction / norm
                    perp = np.array([-d[1], d[0]])
                    head = 4.0 * stroke
                    p1 = np.asarray(tip) - head * d + 0.5 * head * perp
                    p2 = np.asarray(tip) - head * d - 0.5 * head * perp
                    lines.append(
                        f'<polygon points="{_fmt(tip[0])},{_fmt(tip[1])} {_fmt(p1[0])},{_fmt(p1[1])} '
                        f'{_fmt(p2[0])},{_fmt(p2[1])}" fill="#1f6fb2"/>'
                    )
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
