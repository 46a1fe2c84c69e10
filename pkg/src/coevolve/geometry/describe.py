"""Exact formal descriptions: one fact per primitive and per constraint tag."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from ..canonical import format_canonical
from .constraints import residual
from .diagram import CIRCLE, RAY, SEGMENT, TOLERANCE, ConstraintTag, Diagram
from .measure import MeasurementQuery, measure


@dataclass(frozen=True)
class Fact:
    relation: str
    args: tuple[str, ...]
    value: float | None = None

    @property
    def text(self) -> str:
        a = self.args
        r = self.relation
        if r == "length":
            return f"{a[0]}{a[1]} = {format_canonical(self.value)}"
        if r == "radius":
            return f"circle {a[0]} has radius {format_canonical(self.value)}"
        if r == "ray":
            return f"ray {a[0]}{a[1]}"
        if r == "perpendicular":
            return f"{a[0]}{a[1]} ⊥ {a[2]}{a[3]}"
        if r == "parallel":
            return f"{a[0]}{a[1]} ∥ {a[2]}{a[3]}"
        if r == "equal-length":
            return f"{a[0]}{a[1]} = {a[2]}{a[3]}"
        if r == "point-on":
            return f"{a[0]} on {a[1]}{a[2]}"
        if r == "midpoint-of":
            return f"{a[0]} midpoint of {a[1]}{a[2]}"
        if r == "tangent":
            return f"{a[1]}{a[2]} tangent to circle {a[0]}"
        raise ValueError(f"unknown relation {r!r}")

    @property
    def is_constraint(self) -> bool:
        return self.relation not in ("length", "radius", "ray")

    def to_dict(self) -> dict[str, Any]:
        return {"relation": self.relation, "args": list(self.args), "value": self.value, "text": self.text}


@dataclass(frozen=True)
class FormalDescription:
    facts: tuple[Fact, ...]
    source: str = ""

    def texts(self) -> list[str]:
        return [f.text for f in self.facts]

    def to_text(self) -> str:
        return "\n".join(f"- {t}" for t in self.texts())

    def index(self, relation: str, args: tuple[str, ...]) -> int | None:
        for i, f in enumerate(self.facts):
            if f.relation == relation and f.args == tuple(args):
                return i
        return None

    def length_index(self, a: str, b: str) -> int | None:
        for i, f in enumerate(self.facts):
            if f.relation == "length" and set(f.args) == {a, b}:
                return i
        return None

    def to_dict(self) -> dict[str, Any]:
        return {"source": self.source, "facts": [f.to_dict() for f in self.facts]}


def emit_formal_description(d: Diagram, source: str = "") -> FormalDescription:
    facts: list[Fact] = []
    for prim in d.primitives:
        if prim.kind == SEGMENT:
            facts.append(Fact("length", prim.args, measure(d, MeasurementQuery("distance", prim.args))))
        elif prim.kind == RAY:
            facts.append(Fact("ray", prim.args))
        elif prim.kind == CIRCLE:
            facts.append(Fact("radius", prim.args, prim.radius))
    for tag in d.constraints:
        facts.append(Fact(tag.kind, tag.args))
    return FormalDescription(tuple(facts), source)


def verify_fact(d: Diagram, fact: Fact, tolerance: float = TOLERANCE) -> bool:
    """True when ``fact`` holds numerically in ``d``."""
    if fact.relation == "length":
        return abs(measure(d, MeasurementQuery("distance", fact.args)) - fact.value) <= tolerance
    if fact.relation == "radius":
        return any(abs(c.radius - fact.value) <= tolerance for c in d.circles_at(fact.args[0]))
    if fact.relation == "ray":
        return all(d.has_label(a) for a in fact.args)
    return residual(d, ConstraintTag(fact.relation, fact.args)) <= tolerance
