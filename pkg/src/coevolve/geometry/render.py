"""Deterministic SVG rendering of diagrams; auxiliary elements are dashed."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

from .diagram import CIRCLE, RAY, SEGMENT, Diagram


@dataclass(frozen=True)
class SvgStyle:
    width: int = 400
    height: int = 400
    margin: float = 32.0
    stroke: str = "#000000"
    aux_stroke: str = "#1f5fbf"
    stroke_width: float = 1.5
    dash: str = "6,4"
    point_radius: float = 2.5
    font_size: int = 14
    label_offset: float = 11.0
    background: str = "#ffffff"


def _fmt(v: float) -> str:
    text = f"{v:.2f}"
    return "0.00" if text == "-0.00" else text


def _bounds(d: Diagram) -> tuple[float, float, float, float]:
    xs = [p.x for p in d.points]
    ys = [p.y for p in d.points]
    for prim in d.primitives:
        if prim.kind == CIRCLE:
            cx, cy = d.xy(prim.args[0])
            xs += [cx - prim.radius, cx + prim.radius]
            ys += [cy - prim.radius, cy + prim.radius]
    if not xs:
        return (0.0, 0.0, 1.0, 1.0)
    return (min(xs), min(ys), max(xs), max(ys))


def render_svg(d: Diagram, style: SvgStyle | None = None) -> str:
    style = style or SvgStyle()
    x0, y0, x1, y1 = _bounds(d)
    span = max(x1 - x0, y1 - y0)
    inner_w = style.width - 2 * style.margin
    inner_h = style.height - 2 * style.margin
    scale = min(inner_w, inner_h) / span if span > 0 else 1.0
    off_x = style.margin + (inner_w - (x1 - x0) * scale) / 2.0
    off_y = style.margin + (inner_h - (y1 - y0) * scale) / 2.0

    def to_canvas(x: float, y: float) -> tuple[float, float]:
        # SVG y axis points down
        return (off_x + (x - x0) * scale, style.height - (off_y + (y - y0) * scale))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.width}" height="{style.height}" '
        f'viewBox="0 0 {style.width} {style.height}">',
        f'<rect x="0" y="0" width="{style.width}" height="{style.height}" fill="{style.background}"/>',
    ]

    def stroke_attrs(aux: bool) -> str:
        colour = style.aux_stroke if aux else style.stroke
        attrs = f'stroke="{colour}" stroke-width="{_fmt(style.stroke_width)}"'
        if aux:
            attrs += f' stroke-dasharray="{style.dash}"'
        return attrs

    reach = 2.0 * math.hypot(style.width, style.height)
    for prim in d.primitives:
        if prim.kind == SEGMENT:
            (ax, ay), (bx, by) = to_canvas(*d.xy(prim.args[0])), to_canvas(*d.xy(prim.args[1]))
        elif prim.kind == RAY:
            (ax, ay), (px, py) = to_canvas(*d.xy(prim.args[0])), to_canvas(*d.xy(prim.args[1]))
            n = math.hypot(px - ax, py - ay) or 1.0
            bx, by = ax + (px - ax) / n * reach, ay + (py - ay) / n * reach
        elif prim.kind == CIRCLE:
            cx, cy = to_canvas(*d.xy(prim.args[0]))
            out.append(
                f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(prim.radius * scale)}" fill="none" '
                f"{stroke_attrs(prim.aux)}/>"
            )
            continue
        else:
            continue
        out.append(
            f'<line x1="{_fmt(ax)}" y1="{_fmt(ay)}" x2="{_fmt(bx)}" y2="{_fmt(by)}" {stroke_attrs(prim.aux)}/>'
        )

    if d.points:
        gx = sum(p.x for p in d.points) / len(d.points)
        gy = sum(p.y for p in d.points) / len(d.points)
    for p in d.points:
        cx, cy = to_canvas(p.x, p.y)
        out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(style.point_radius)}" fill="{style.stroke}"/>')
        dx, dy = p.x - gx, p.y - gy
        n = math.hypot(dx, dy)
        ux, uy = (dx / n, -dy / n) if n > 0 else (0.0, -1.0)
        tx, ty = cx + ux * style.label_offset, cy + uy * style.label_offset + style.font_size / 3.0
        out.append(
            f'<text x="{_fmt(tx)}" y="{_fmt(ty)}" font-family="sans-serif" font-size="{style.font_size}" '
            f'text-anchor="middle">{escape(p.label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(d: Diagram, path: str | Path, style: SvgStyle | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_svg(d, style), encoding="utf-8")
    return path
