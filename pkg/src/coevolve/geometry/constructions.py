"""Typed auxiliary constructions applied to diagrams."""

from __future__ import annotations

import string
from dataclasses import dataclass, replace
from typing import Any

from .constraints import line_distance
from .diagram import (
    SEGMENT,
    ConstraintTag,
    DanglingReferenceError,
    DegenerateGeometryError,
    Diagram,
    LabelCollisionError,
    Point,
    Primitive,
    SpecError,
)
from .measure import distance

DEGENERATE_EPS = 1e-9

COMMAND_ARITY = {
    "connect": 2,  # A, B
    "perpendicular-foot": 3,  # P, A, B: foot of P on line AB
    "parallel-through": 3,  # P, A, B: line through P parallel to AB
    "midpoint": 3,  # A, B, P: midpoint M of AB joined to P
    "extend-to-intersection": 4,  # A, B, C, D: extend AB to meet line CD
}


@dataclass(frozen=True)
class AuxiliaryCommand:
    kind: str
    args: tuple[str, ...]
    new_label: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in COMMAND_ARITY:
            raise SpecError(f"unknown auxiliary command {self.kind!r}")
        if len(self.args) != COMMAND_ARITY[self.kind]:
            raise SpecError(f"{self.kind} takes {COMMAND_ARITY[self.kind]} labels, got {len(self.args)}")

    @property
    def creates_point(self) -> bool:
        return self.kind != "connect"

    def describe(self) -> str:
        a = self.args
        new = self.new_label or "?"
        if self.kind == "connect":
            return f"Connect {a[0]} and {a[1]} with an auxiliary segment {a[0]}{a[1]}."
        if self.kind == "perpendicular-foot":
            return f"Drop a perpendicular from {a[0]} to {a[1]}{a[2]} with foot {new}."
        if self.kind == "parallel-through":
            return f"Draw {a[0]}{new} through {a[0]} parallel to {a[1]}{a[2]}."
        if self.kind == "midpoint":
            return f"Mark the midpoint {new} of {a[0]}{a[1]} and connect {a[2]}{new}."
        return f"Extend {a[0]}{a[1]} to meet line {a[2]}{a[3]} at {new}."

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "args": list(self.args), "new": self.new_label}

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "AuxiliaryCommand":
        return cls(raw["kind"], tuple(raw["args"]), raw.get("new"))


def next_free_label(d: Diagram, taken: set[str] = frozenset()) -> str:
    used = set(d.labels) | set(taken)
    for ch in string.ascii_uppercase:
        if ch not in used:
            return ch
    i = 1
    while True:
        for ch in string.ascii_uppercase:
            if f"{ch}{i}" not in used:
                return f"{ch}{i}"
        i += 1


def _segment(a: str, b: str) -> Primitive:
    return Primitive(SEGMENT, (a, b), aux=True)


def foot_of_perpendicular(p, a, b) -> tuple[float, float]:
    dx, dy = b[0] - a[0], b[1] - a[1]
    t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)
    return (a[0] + t * dx, a[1] + t * dy)


def line_intersection(a, b, c, d) -> tuple[float, float] | None:
    r = (b[0] - a[0], b[1] - a[1])
    s = (d[0] - c[0], d[1] - c[1])
    denom = r[0] * s[1] - r[1] * s[0]
    scale = max(abs(r[0]) + abs(r[1]), DEGENERATE_EPS) * max(abs(s[0]) + abs(s[1]), DEGENERATE_EPS)
    if abs(denom) <= DEGENERATE_EPS * scale:
        return None
    t = ((c[0] - a[0]) * s[1] - (c[1] - a[1]) * s[0]) / denom
    return (a[0] + t * r[0], a[1] + t * r[1])


def apply_auxiliary(d: Diagram, cmd: AuxiliaryCommand) -> Diagram:
    """Return a new diagram with ``cmd`` applied; ``d`` is left untouched.

    New primitives carry ``aux=True``. Degenerate constructions raise
    DegenerateGeometryError instead of being skipped.
    """
    for label in cmd.args:
        if not d.has_label(label):
            raise DanglingReferenceError(f"{cmd.kind} references undefined point {label!r}")
    new = None
    if cmd.creates_point:
        new = cmd.new_label or next_free_label(d)
        if d.has_label(new):
            raise LabelCollisionError(f"label {new!r} already used")
    xy = [d.xy(label) for label in cmd.args]
    points: list[Point] = []
    prims: list[Primitive] = []
    tags: list[ConstraintTag] = []

    if cmd.kind == "connect":
        a, b = cmd.args
        if distance(*xy) < DEGENERATE_EPS:
            raise DegenerateGeometryError(f"{a} and {b} coincide")
        if d.has_segment(a, b):
            raise DegenerateGeometryError(f"segment {a}{b} already present")
        prims.append(_segment(a, b))

    elif cmd.kind == "perpendicular-foot":
        p, a, b = cmd.args
        if distance(xy[1], xy[2]) < DEGENERATE_EPS:
            raise DegenerateGeometryError(f"cannot project onto zero-length {a}{b}")
        if line_distance(xy[0], xy[1], xy[2]) < DEGENERATE_EPS:
            raise DegenerateGeometryError(f"{p} already lies on line {a}{b}")
        fx, fy = foot_of_perpendicular(*xy)
        points.append(Point(new, fx, fy))
        prims.append(_segment(p, new))
        tags += [ConstraintTag("perpendicular", (p, new, a, b)), ConstraintTag("point-on", (new, a, b))]

    elif cmd.kind == "parallel-through":
        p, a, b = cmd.args
        if distance(xy[1], xy[2]) < DEGENERATE_EPS:
            raise DegenerateGeometryError(f"direction {a}{b} has zero length")
        if line_distance(xy[0], xy[1], xy[2]) < DEGENERATE_EPS:
            raise DegenerateGeometryError(f"{p} already lies on line {a}{b}")
        points.append(Point(new, xy[0][0] + xy[2][0] - xy[1][0], xy[0][1] + xy[2][1] - xy[1][1]))
        prims.append(_segment(p, new))
        tags.append(ConstraintTag("parallel", (p, new, a, b)))

    elif cmd.kind == "midpoint":
        a, b, p = cmd.args
        if distance(xy[0], xy[1]) < DEGENERATE_EPS:
            raise DegenerateGeometryError(f"{a}{b} has zero length")
        mx, my = (xy[0][0] + xy[1][0]) / 2.0, (xy[0][1] + xy[1][1]) / 2.0
        if distance(xy[2], (mx, my)) < DEGENERATE_EPS:
            raise DegenerateGeometryError(f"{p} coincides with the midpoint of {a}{b}")
        points.append(Point(new, mx, my))
        prims.append(_segment(p, new))
        tags.append(ConstraintTag("midpoint-of", (new, a, b)))

    else:  # extend-to-intersection
        a, b, c, e = cmd.args
        if distance(xy[0], xy[1]) < DEGENERATE_EPS or distance(xy[2], xy[3]) < DEGENERATE_EPS:
            raise DegenerateGeometryError("zero-length line in extension")
        hit = line_intersection(*xy)
        if hit is None:
            raise DegenerateGeometryError(f"{a}{b} is parallel to {c}{e}")
        da, db = distance(xy[0], hit), distance(xy[1], hit)
        if min(da, db) < DEGENERATE_EPS:
            raise DegenerateGeometryError(f"{a}{b} already meets {c}{e} at an endpoint")
        points.append(Point(new, *hit))
        prims.append(_segment(b if db <= da else a, new))
        tags += [ConstraintTag("point-on", (new, a, b)), ConstraintTag("point-on", (new, c, e))]

    return replace(
        d,
        points=d.points + tuple(points),
        primitives=d.primitives + tuple(prims),
        constraints=d.constraints + tuple(tags),
    )
