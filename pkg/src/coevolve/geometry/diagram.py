"""Immutable diagram value types and the JSON spec format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Mapping

SEGMENT = "segment"
RAY = "ray"
CIRCLE = "circle"
PRIMITIVE_KINDS = (SEGMENT, RAY, CIRCLE)

CONSTRAINT_ARITY = {
    "perpendicular": 4,  # AB ⊥ CD
    "parallel": 4,  # AB ∥ CD
    "equal-length": 4,  # |AB| = |CD|
    "point-on": 3,  # P on line AB
    "midpoint-of": 3,  # M midpoint of AB
    "tangent": 3,  # line AB tangent to the circle centred at O
}

TOLERANCE = 1e-6


class GeometryError(ValueError):
    """Base class for malformed or degenerate geometry."""


class SpecError(GeometryError):
    pass


class DuplicateLabelError(GeometryError):
    pass


class LabelCollisionError(DuplicateLabelError):
    pass


class DanglingReferenceError(GeometryError):
    pass


class DegenerateGeometryError(GeometryError):
    pass


class ConstraintViolationError(GeometryError):
    def __init__(self, message: str, residual: float, tag: "ConstraintTag"):
        super().__init__(message)
        self.residual = residual
        self.tag = tag


@dataclass(frozen=True)
class Point:
    label: str
    x: float
    y: float

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Primitive:
    kind: str
    args: tuple[str, ...]
    radius: float | None = None
    aux: bool = False

    def to_spec(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "args": list(self.args), "aux": self.aux}
        if self.radius is not None:
            out["radius"] = self.radius
        return out


@dataclass(frozen=True)
class ConstraintTag:
    kind: str
    args: tuple[str, ...]

    def to_spec(self) -> dict[str, Any]:
        return {"kind": self.kind, "args": list(self.args)}


@dataclass(frozen=True)
class Diagram:
    points: tuple[Point, ...] = ()
    primitives: tuple[Primitive, ...] = ()
    constraints: tuple[ConstraintTag, ...] = ()
    provenance: int = 1
    _index: dict[str, Point] = field(default=None, init=False, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {p.label: p for p in self.points})

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(p.label for p in self.points)

    def has_label(self, label: str) -> bool:
        return label in self._index

    def point(self, label: str) -> Point:
        try:
            return self._index[label]
        except KeyError:
            raise DanglingReferenceError(f"unknown point {label!r}") from None

    def xy(self, label: str) -> tuple[float, float]:
        return self.point(label).xy

    @property
    def aux_count(self) -> int:
        return sum(1 for p in self.primitives if p.aux)

    def segments(self) -> Iterator[Primitive]:
        return (p for p in self.primitives if p.kind == SEGMENT)

    def has_segment(self, a: str, b: str) -> bool:
        return any(set(p.args) == {a, b} for p in self.segments())

    def circles_at(self, center: str) -> list[Primitive]:
        return [p for p in self.primitives if p.kind == CIRCLE and p.args[0] == center]

    def to_spec(self) -> dict[str, Any]:
        return {
            "points": [{"label": p.label, "x": p.x, "y": p.y} for p in self.points],
            "primitives": [p.to_spec() for p in self.primitives],
            "constraints": [c.to_spec() for c in self.constraints],
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_spec(), sort_keys=True)


_TOP_KEYS = {"points", "primitives", "constraints", "provenance"}
_POINT_KEYS = {"label", "x", "y"}
_PRIMITIVE_KEYS = {"kind", "args", "aux", "radius"}
_CONSTRAINT_KEYS = {"kind", "args"}


def _reject_unknown(obj: Mapping[str, Any], allowed: set[str], where: str) -> None:
    if not isinstance(obj, Mapping):
        raise SpecError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise SpecError(f"{where}: unknown keys {unknown}")


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise SpecError(f"{where}: coordinate must be finite")
    return value


def _labels(args: Any, where: str) -> tuple[str, ...]:
    if not isinstance(args, (list, tuple)) or not all(isinstance(a, str) and a for a in args):
        raise SpecError(f"{where}: args must be a list of point labels")
    return tuple(args)


def parse_spec(spec: Mapping[str, Any]) -> Diagram:
    """Structural parse of a spec mapping; no reference or constraint checks."""
    _reject_unknown(spec, _TOP_KEYS, "diagram")
    points = []
    for i, raw in enumerate(spec.get("points", [])):
        _reject_unknown(raw, _POINT_KEYS, f"points[{i}]")
        label = raw.get("label")
        if not isinstance(label, str) or not label:
            raise SpecError(f"points[{i}]: label must be a non-empty string")
        points.append(Point(label, _number(raw.get("x"), f"points[{i}].x"), _number(raw.get("y"), f"points[{i}].y")))

    primitives = []
    for i, raw in enumerate(spec.get("primitives", [])):
        _reject_unknown(raw, _PRIMITIVE_KEYS, f"primitives[{i}]")
        kind = raw.get("kind")
        if kind not in PRIMITIVE_KINDS:
            raise SpecError(f"primitives[{i}]: unknown kind {kind!r}")
        args = _labels(raw.get("args"), f"primitives[{i}]")
        radius = raw.get("radius")
        if kind == CIRCLE:
            if len(args) != 1:
                raise SpecError(f"primitives[{i}]: circle takes one centre label")
            radius = _number(radius, f"primitives[{i}].radius")
            if radius <= 0:
                raise SpecError(f"primitives[{i}]: radius must be positive")
        else:
            if radius is not None:
                raise SpecError(f"primitives[{i}]: radius only applies to circles")
            if len(args) != 2:
                raise SpecError(f"primitives[{i}]: {kind} takes two endpoint labels")
            if args[0] == args[1]:
                raise SpecError(f"primitives[{i}]: {kind} endpoints must be distinct")
        aux = raw.get("aux", False)
        if not isinstance(aux, bool):
            raise SpecError(f"primitives[{i}].aux must be a boolean")
        primitives.append(Primitive(kind, args, radius, aux))

    constraints = []
    for i, raw in enumerate(spec.get("constraints", [])):
        _reject_unknown(raw, _CONSTRAINT_KEYS, f"constraints[{i}]")
        kind = raw.get("kind")
        if kind not in CONSTRAINT_ARITY:
            raise SpecError(f"constraints[{i}]: unknown kind {kind!r}")
        args = _labels(raw.get("args"), f"constraints[{i}]")
        if len(args) != CONSTRAINT_ARITY[kind]:
            raise SpecError(f"constraints[{i}]: {kind} takes {CONSTRAINT_ARITY[kind]} labels, got {len(args)}")
        constraints.append(ConstraintTag(kind, args))

    provenance = spec.get("provenance", 1)
    if isinstance(provenance, bool) or not isinstance(provenance, int):
        raise SpecError("provenance must be an integer iteration index")
    return Diagram(tuple(points), tuple(primitives), tuple(constraints), provenance)


def load_spec(path: str | Path) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
