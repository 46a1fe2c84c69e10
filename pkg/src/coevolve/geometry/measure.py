"""Exact measurements on diagram coordinates (the ground-truth oracle)."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .diagram import DegenerateGeometryError, Diagram, SpecError

EPS = 1e-12

MEASUREMENT_ARITY = {
    "distance": (2, 2),
    "angle": (3, 3),  # vertex is the middle label, result in degrees
    "polygon-area": (3, None),
    "circle-arc-length": (3, 3),  # centre, arc start, arc end (minor arc)
    "perimeter": (3, None),
}


@dataclass(frozen=True)
class MeasurementQuery:
    kind: str
    args: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.kind not in MEASUREMENT_ARITY:
            raise SpecError(f"unknown measurement kind {self.kind!r}")
        lo, hi = MEASUREMENT_ARITY[self.kind]
        n = len(self.args)
        if n < lo or (hi is not None and n > hi):
            raise SpecError(f"{self.kind} takes {lo}{'' if hi == lo else '+'} labels, got {n}")

    def normalized(self) -> "MeasurementQuery":
        """Canonical argument order, so equal quantities compare equal."""
        a = self.args
        if self.kind == "distance":
            return MeasurementQuery(self.kind, tuple(sorted(a)))
        if self.kind == "angle":
            lo, hi = sorted((a[0], a[2]))
            return MeasurementQuery(self.kind, (lo, a[1], hi))
        if self.kind in ("polygon-area", "perimeter") and len(a) == 3:
            return MeasurementQuery(self.kind, tuple(sorted(a)))
        if self.kind == "circle-arc-length":
            lo, hi = sorted(a[1:])
            return MeasurementQuery(self.kind, (a[0], lo, hi))
        return self

    @property
    def unit(self) -> str:
        return "°" if self.kind == "angle" else ""

    def to_dict(self) -> dict:
        return {"kind": self.kind, "args": list(self.args)}

    @classmethod
    def from_dict(cls, raw: dict) -> "MeasurementQuery":
        return cls(raw["kind"], tuple(raw["args"]))


def distance(p: tuple[float, float], q: tuple[float, float]) -> float:
    return math.hypot(q[0] - p[0], q[1] - p[1])


def angle_deg(a: tuple[float, float], b: tuple[float, float], c: tuple[float, float]) -> float:
    ux, uy = a[0] - b[0], a[1] - b[1]
    vx, vy = c[0] - b[0], c[1] - b[1]
    nu, nv = math.hypot(ux, uy), math.hypot(vx, vy)
    if nu < EPS or nv < EPS:
        raise DegenerateGeometryError("angle at coincident points")
    # atan2 of cross and dot stays accurate near 0 and 180 degrees
    return math.degrees(math.atan2(abs(ux * vy - uy * vx), ux * vx + uy * vy))


def shoelace(coords: list[tuple[float, float]]) -> float:
    s = 0.0
    for (x1, y1), (x2, y2) in zip(coords, coords[1:] + coords[:1]):
        s += x1 * y2 - x2 * y1
    return abs(s) / 2.0


def measure(d: Diagram, q: MeasurementQuery) -> float:
    pts = [d.xy(label) for label in q.args]
    if q.kind == "distance":
        return distance(pts[0], pts[1])
    if q.kind == "angle":
        return angle_deg(*pts)
    if q.kind == "polygon-area":
        return shoelace(pts)
    if q.kind == "perimeter":
        return sum(distance(p, r) for p, r in zip(pts, pts[1:] + pts[:1]))
    # circle-arc-length
    center, start, end = pts
    r = distance(center, start)
    if r < EPS:
        raise DegenerateGeometryError("arc with zero radius")
    if abs(distance(center, end) - r) > 1e-6 * max(1.0, r):
        raise DegenerateGeometryError("arc endpoints are not on a common circle")
    return r * math.radians(angle_deg(start, center, end))
