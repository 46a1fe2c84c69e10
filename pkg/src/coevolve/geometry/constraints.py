"""Numeric residuals for constraint tags.

Angle-type tags (perpendicular, parallel) use normalized residuals |cos| and
|sin| of the angle between the two directions. Length-type tags report
absolute deviations in diagram units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .diagram import TOLERANCE, ConstraintTag, Diagram, DanglingReferenceError
from .measure import distance

Vec = tuple[float, float]


def _sub(p: Vec, q: Vec) -> Vec:
    return (p[0] - q[0], p[1] - q[1])


def _cos_sin(u: Vec, v: Vec) -> tuple[float, float] | None:
    nu, nv = math.hypot(*u), math.hypot(*v)
    if nu == 0.0 or nv == 0.0:
        return None
    dot = (u[0] * v[0] + u[1] * v[1]) / (nu * nv)
    cross = (u[0] * v[1] - u[1] * v[0]) / (nu * nv)
    return dot, cross


def line_distance(p: Vec, a: Vec, b: Vec) -> float:
    """Distance from ``p`` to the infinite line through ``a`` and ``b``."""
    d = _sub(b, a)
    n = math.hypot(*d)
    if n == 0.0:
        return distance(p, a)
    w = _sub(p, a)
    return abs(d[0] * w[1] - d[1] * w[0]) / n


def residual(d: Diagram, tag: ConstraintTag) -> float:
    xy = [d.xy(label) for label in tag.args]
    kind = tag.kind
    if kind in ("perpendicular", "parallel"):
        cs = _cos_sin(_sub(xy[1], xy[0]), _sub(xy[3], xy[2]))
        if cs is None:
            return 1.0
        return abs(cs[0]) if kind == "perpendicular" else abs(cs[1])
    if kind == "equal-length":
        return abs(distance(xy[0], xy[1]) - distance(xy[2], xy[3]))
    if kind == "point-on":
        return line_distance(xy[0], xy[1], xy[2])
    if kind == "midpoint-of":
        mid = ((xy[1][0] + xy[2][0]) / 2.0, (xy[1][1] + xy[2][1]) / 2.0)
        return distance(xy[0], mid)
    if kind == "tangent":
        circles = d.circles_at(tag.args[0])
        if not circles:
            raise DanglingReferenceError(f"tangent tag needs a circle centred at {tag.args[0]!r}")
        return abs(line_distance(xy[0], xy[1], xy[2]) - circles[0].radius)
    raise ValueError(f"unknown constraint kind {kind!r}")


@dataclass(frozen=True)
class ResidualReport:
    entries: tuple[tuple[ConstraintTag, float], ...]
    tolerance: float = TOLERANCE

    @property
    def max_residual(self) -> float:
        return max((r for _, r in self.entries), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def worst(self) -> tuple[ConstraintTag, float] | None:
        if not self.entries:
            return None
        return max(self.entries, key=lambda e: e[1])


def check_constraints(d: Diagram, tolerance: float = TOLERANCE) -> ResidualReport:
    return ResidualReport(tuple((tag, residual(d, tag)) for tag in d.constraints), tolerance)
