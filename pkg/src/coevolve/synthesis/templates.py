"""Sub-problem templates, one family per principle.

A template scans the diagram's structure (segments, triangles, tagged
relations) and yields candidates: a target quantity, the given quantities it
is derived from, the theorem that derives it, and the facts it cites.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator

from ..canonical import format_canonical
from ..geometry.constraints import line_distance
from ..geometry.describe import Fact, FormalDescription
from ..geometry.diagram import Diagram
from ..geometry.measure import MeasurementQuery, distance, shoelace

GEOM_EPS = 1e-9


class Principle(str, Enum):
    GEOMETRIC_CONSTRAINTS = "GeometricConstraints"
    NEW_THEOREMS = "NewTheorems"
    BACKWARD_REASONING = "BackwardReasoning"


ALL_PRINCIPLES = frozenset(Principle)


def dist(a: str, b: str) -> MeasurementQuery:
    return MeasurementQuery("distance", (a, b)).normalized()


def ang(a: str, vertex: str, b: str) -> MeasurementQuery:
    return MeasurementQuery("angle", (a, vertex, b)).normalized()


def area(*labels: str) -> MeasurementQuery:
    return MeasurementQuery("polygon-area", labels).normalized()


def perim(*labels: str) -> MeasurementQuery:
    return MeasurementQuery("perimeter", labels).normalized()


def quantity_name(q: MeasurementQuery) -> str:
    a = q.args
    if q.kind == "distance":
        return f"{a[0]}{a[1]}"
    if q.kind == "angle":
        return f"∠{a[0]}{a[1]}{a[2]}"
    if q.kind == "polygon-area":
        return f"the area of triangle {''.join(a)}" if len(a) == 3 else f"the area of {''.join(a)}"
    if q.kind == "perimeter":
        return f"the perimeter of triangle {''.join(a)}" if len(a) == 3 else f"the perimeter of {''.join(a)}"
    return f"arc {a[1]}{a[2]} of circle {a[0]}"


def with_unit(q: MeasurementQuery, text: str) -> str:
    return f"{text}°" if q.kind == "angle" else text


@dataclass(frozen=True)
class Candidate:
    template: str
    principle: Principle
    target: MeasurementQuery
    givens: tuple[MeasurementQuery, ...]
    derive: Callable[[tuple[float, ...]], float] = field(compare=False)
    explain: Callable[[tuple[str, ...], str], str] = field(compare=False)
    facts: tuple[int, ...] = ()

    @property
    def key(self) -> tuple:
        return (self.target, frozenset(self.givens))


class Structure:
    """Derived incidence structure of a diagram: adjacency, triangles, right angles."""

    def __init__(self, d: Diagram, f: FormalDescription):
        self.d = d
        self.f = f
        self.order = {label: i for i, label in enumerate(d.labels)}
        adj: set[frozenset[str]] = set()
        for seg in d.segments():
            a, b = (d.xy(x) for x in seg.args)
            members = [p.label for p in d.points if self._within(d.xy(p.label), a, b)]
            for x, y in itertools.combinations(members, 2):
                if distance(d.xy(x), d.xy(y)) > GEOM_EPS:
                    adj.add(frozenset((x, y)))
        self.adjacent = adj
        self.triangles = [
            t
            for t in itertools.combinations(d.labels, 3)
            if all(frozenset(p) in adj for p in itertools.combinations(t, 2))
            and shoelace([d.xy(x) for x in t]) > GEOM_EPS * max(1.0, self._span(t))
        ]

    def _span(self, labels) -> float:
        return max(distance(self.d.xy(a), self.d.xy(b)) for a, b in itertools.combinations(labels, 2)) ** 2

    @staticmethod
    def _within(p, a, b) -> bool:
        dx, dy = b[0] - a[0], b[1] - a[1]
        n2 = dx * dx + dy * dy
        if n2 == 0:
            return False
        t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / n2
        return -GEOM_EPS <= t <= 1 + GEOM_EPS and line_distance(p, a, b) <= GEOM_EPS * max(1.0, math.sqrt(n2))

    def collinear(self, p: str, a: str, b: str) -> bool:
        pa, pb = self.d.xy(a), self.d.xy(b)
        return line_distance(self.d.xy(p), pa, pb) <= GEOM_EPS * max(1.0, distance(pa, pb))

    def coincident(self, a: str, b: str) -> bool:
        return distance(self.d.xy(a), self.d.xy(b)) <= GEOM_EPS

    def constraint_facts(self, relation: str) -> Iterator[tuple[int, Fact]]:
        for i, fact in enumerate(self.f.facts):
            if fact.relation == relation:
                yield i, fact

    def right_angle_fact(self, x: str, y: str, z: str) -> int | None:
        """Index of a perpendicular fact making the angle at ``x`` in triangle xyz right."""
        for i, fact in self.constraint_facts("perpendicular"):
            p, q, r, s = fact.args
            for l1, l2 in (((p, q), (r, s)), ((r, s), (p, q))):
                if all(self.collinear(v, *l1) for v in (x, y)) and all(self.collinear(v, *l2) for v in (x, z)):
                    return i
        return None

    def right_triangles(self) -> Iterator[tuple[str, str, str, int]]:
        for t in self.triangles:
            for x in t:
                y, z = (v for v in t if v != x)
                idx = self.right_angle_fact(x, y, z)
                if idx is not None:
                    yield x, y, z, idx


# --- template generators ---------------------------------------------------------

Gen = Callable[[Structure], Iterator[Candidate]]
GC, NT, BR = Principle.GEOMETRIC_CONSTRAINTS, Principle.NEW_THEOREMS, Principle.BACKWARD_REASONING


def _ident(g):
    return g[0]


def gc_segment_length(s: Structure) -> Iterator[Candidate]:
    for i, fact in enumerate(s.f.facts):
        if fact.relation != "length":
            continue
        a, b = fact.args
        value = fact.value
        yield Candidate(
            "gc-segment-length", GC, dist(a, b), (),
            derive=lambda g, v=value: v,
            explain=lambda g, t, a=a, b=b: f"From the figure, {a}{b} = {t}.",
            facts=(i,),
        )


def gc_right_angle(s: Structure) -> Iterator[Candidate]:
    for i, fact in s.constraint_facts("perpendicular"):
        p, q, r, w = fact.args
        meet = [x for x in s.d.labels if s.collinear(x, p, q) and s.collinear(x, r, w)]
        if not meet:
            continue
        x = meet[0]
        ys = [v for v in (p, q) if not s.coincident(v, x)]
        zs = [v for v in (r, w) if not s.coincident(v, x)]
        if not ys or not zs:
            continue
        y, z = ys[0], zs[0]
        yield Candidate(
            "gc-right-angle", GC, ang(y, x, z), (),
            derive=lambda g: 90.0,
            explain=lambda g, t, p=p, q=q, r=r, w=w, y=y, x=x, z=z: f"Since {p}{q} ⊥ {r}{w}, ∠{y}{x}{z} = {t}°.",
            facts=(i,),
        )


def gc_equal_length(s: Structure) -> Iterator[Candidate]:
    for i, fact in s.constraint_facts("equal-length"):
        a, b, c, e = fact.args
        for src, dst in (((a, b), (c, e)), ((c, e), (a, b))):
            yield Candidate(
                "gc-equal-length", GC, dist(*dst), (dist(*src),),
                derive=_ident,
                explain=lambda g, t, src=src, dst=dst: f"Since {src[0]}{src[1]} = {dst[0]}{dst[1]}, {dst[0]}{dst[1]} = {g[0]}.",
                facts=(i,),
            )


def gc_midpoint_half(s: Structure) -> Iterator[Candidate]:
    for i, fact in s.constraint_facts("midpoint-of"):
        m, a, b = fact.args
        yield Candidate(
            "gc-midpoint-half", GC, dist(a, m), (dist(a, b),),
            derive=lambda g: g[0] / 2.0,
            explain=lambda g, t, m=m, a=a, b=b: f"{m} is the midpoint of {a}{b}, so {a}{m} = {a}{b} / 2 = {g[0]} / 2 = {t}.",
            facts=(i,),
        )


def gc_point_on_sum(s: Structure) -> Iterator[Candidate]:
    for i, fact in s.constraint_facts("point-on"):
        p, a, b = fact.args
        if s.coincident(p, a) or s.coincident(p, b):
            continue
        if not Structure._within(s.d.xy(p), s.d.xy(a), s.d.xy(b)):
            continue
        yield Candidate(
            "gc-point-on-sum", GC, dist(a, b), (dist(a, p), dist(p, b)),
            derive=lambda g: g[0] + g[1],
            explain=lambda g, t, p=p, a=a, b=b: f"{p} lies on {a}{b}, so {a}{b} = {a}{p} + {p}{b} = {g[0]} + {g[1]} = {t}.",
            facts=(i,),
        )


def gc_perimeter(s: Structure) -> Iterator[Candidate]:
    for x, y, z in s.triangles:
        yield Candidate(
            "gc-perimeter", GC, perim(x, y, z), (dist(x, y), dist(y, z), dist(x, z)),
            derive=lambda g: g[0] + g[1] + g[2],
            explain=lambda g, t, n=f"{x}{y}{z}": f"The perimeter of triangle {n} is {g[0]} + {g[1]} + {g[2]} = {t}.",
        )


def nt_pythagoras(s: Structure) -> Iterator[Candidate]:
    for x, y, z, i in s.right_triangles():
        yield Candidate(
            "nt-pythagoras", NT, dist(y, z), (dist(x, y), dist(x, z)),
            derive=lambda g: math.hypot(g[0], g[1]),
            explain=lambda g, t, x=x, y=y, z=z: (
                f"Triangle {x}{y}{z} is right-angled at {x}, so by the Pythagorean theorem "
                f"{y}{z} = sqrt({x}{y}^2 + {x}{z}^2) = sqrt({g[0]}^2 + {g[1]}^2) = {t}."
            ),
            facts=(i,),
        )


def nt_angle_sum(s: Structure) -> Iterator[Candidate]:
    for tri in s.triangles:
        for v in tri:
            u, w = (x for x in tri if x != v)
            yield Candidate(
                "nt-angle-sum", NT, ang(u, v, w), (ang(v, u, w), ang(u, w, v)),
                derive=lambda g: 180.0 - g[0] - g[1],
                explain=lambda g, t, n="".join(tri), v=v, u=u, w=w: (
                    f"The angles of triangle {n} sum to 180°, so ∠{u}{v}{w} = 180° - {g[0]}° - {g[1]}° = {t}°."
                ),
            )


def nt_right_triangle_area(s: Structure) -> Iterator[Candidate]:
    for x, y, z, i in s.right_triangles():
        yield Candidate(
            "nt-right-triangle-area", NT, area(x, y, z), (dist(x, y), dist(x, z)),
            derive=lambda g: g[0] * g[1] / 2.0,
            explain=lambda g, t, x=x, y=y, z=z: (
                f"The legs {x}{y} and {x}{z} of right triangle {x}{y}{z} are perpendicular, "
                f"so its area is {g[0]} * {g[1]} / 2 = {t}."
            ),
            facts=(i,),
        )


def _parallel(s: Structure, a: str, b: str, c: str, e: str) -> bool:
    pa, pb, pc, pe = (s.d.xy(v) for v in (a, b, c, e))
    u = (pb[0] - pa[0], pb[1] - pa[1])
    v = (pe[0] - pc[0], pe[1] - pc[1])
    nu, nv = math.hypot(*u), math.hypot(*v)
    return nu > GEOM_EPS and nv > GEOM_EPS and abs(u[0] * v[1] - u[1] * v[0]) / (nu * nv) <= GEOM_EPS


def _parallel_fact(s: Structure, a: str, b: str, c: str, e: str) -> int | None:
    for i, fact in s.constraint_facts("parallel"):
        p, q, r, w = fact.args
        for l1, l2 in (((p, q), (r, w)), ((r, w), (p, q))):
            if all(s.collinear(v, *l1) for v in (a, b)) and all(s.collinear(v, *l2) for v in (c, e)):
                return i
    return None


def nt_parallelogram_opposite(s: Structure) -> Iterator[Candidate]:
    for quad in itertools.combinations(s.d.labels, 4):
        a0 = quad[0]
        for rest in itertools.permutations(quad[1:]):
            if rest[0] > rest[2]:
                continue  # each cycle once
            a, b, c, e = (a0,) + rest
            sides = ((a, b), (b, c), (c, e), (e, a))
            if not all(frozenset(p) in s.adjacent for p in sides):
                continue
            if not (_parallel(s, a, b, e, c) and _parallel(s, b, c, a, e)):
                continue
            if shoelace([s.d.xy(v) for v in (a, b, c, e)]) <= GEOM_EPS:
                continue
            name = f"{a}{b}{c}{e}"
            for (p, q), (r, w) in (((a, b), (e, c)), ((b, c), (a, e))):
                idx = _parallel_fact(s, p, q, r, w)
                yield Candidate(
                    "nt-parallelogram-opposite", NT, dist(r, w), (dist(p, q),),
                    derive=_ident,
                    explain=lambda g, t, n=name, p=p, q=q, r=r, w=w: (
                        f"{n} is a parallelogram, so opposite sides are equal: {r}{w} = {p}{q} = {g[0]}."
                    ),
                    facts=(idx,) if idx is not None else (),
                )


def nt_tangent_radius(s: Structure) -> Iterator[Candidate]:
    for i, fact in s.constraint_facts("tangent"):
        o, a, b = fact.args
        circles = s.d.circles_at(o)
        if not circles:
            continue
        r = circles[0].radius
        touch = [
            t for t in s.d.labels
            if t != o and s.collinear(t, a, b) and abs(distance(s.d.xy(o), s.d.xy(t)) - r) <= 1e-6
        ]
        if not touch:
            continue
        t = touch[0]
        other = a if not s.coincident(a, t) else b
        yield Candidate(
            "nt-tangent-radius", NT, ang(o, t, other), (),
            derive=lambda g: 90.0,
            explain=lambda g, v, o=o, t=t, other=other, a=a, b=b: (
                f"{a}{b} is tangent to circle {o} at {t}, and a radius is perpendicular to the tangent, "
                f"so ∠{o}{t}{other} = {v}°."
            ),
            facts=(i,),
        )


def nt_isosceles_base_angles(s: Structure) -> Iterator[Candidate]:
    for i, fact in s.constraint_facts("equal-length"):
        a, b, c, e = fact.args
        shared = {a, b} & {c, e}
        if len(shared) != 1:
            continue
        v = shared.pop()
        (y,) = {a, b} - {v}
        (z,) = {c, e} - {v}
        if tuple(sorted((v, y, z), key=s.order.get)) not in s.triangles:
            continue
        yield Candidate(
            "nt-isosceles-base-angles", NT, ang(v, z, y), (ang(v, y, z),),
            derive=_ident,
            explain=lambda g, t, v=v, y=y, z=z: (
                f"Since {v}{y} = {v}{z}, triangle {v}{y}{z} is isosceles and its base angles are equal: "
                f"∠{v}{z}{y} = ∠{v}{y}{z} = {g[0]}°."
            ),
            facts=(i,),
        )


def br_pythagoras_leg(s: Structure) -> Iterator[Candidate]:
    for x, y, z, i in s.right_triangles():
        for known, unknown in ((y, z), (z, y)):
            yield Candidate(
                "br-pythagoras-leg", BR, dist(x, unknown), (dist(y, z), dist(x, known)),
                derive=lambda g: math.sqrt(max(g[0] ** 2 - g[1] ** 2, 0.0)),
                explain=lambda g, t, x=x, y=y, z=z, k=known, u=unknown: (
                    f"Working back from hypotenuse {y}{z} of right triangle {x}{y}{z}, "
                    f"{x}{u} = sqrt({y}{z}^2 - {x}{k}^2) = sqrt({g[0]}^2 - {g[1]}^2) = {t}."
                ),
                facts=(i,),
            )


def br_area_leg(s: Structure) -> Iterator[Candidate]:
    for x, y, z, i in s.right_triangles():
        for known, unknown in ((y, z), (z, y)):
            yield Candidate(
                "br-area-leg", BR, dist(x, unknown), (area(x, y, z), dist(x, known)),
                derive=lambda g: 2.0 * g[0] / g[1],
                explain=lambda g, t, x=x, y=y, z=z, k=known, u=unknown: (
                    f"The area of right triangle {x}{y}{z} is {x}{k} * {x}{u} / 2, "
                    f"so {x}{u} = 2 * {g[0]} / {g[1]} = {t}."
                ),
                facts=(i,),
            )


def br_perimeter_side(s: Structure) -> Iterator[Candidate]:
    for tri in s.triangles:
        for u, w in itertools.combinations(tri, 2):
            (v,) = set(tri) - {u, w}
            yield Candidate(
                "br-perimeter-side", BR, dist(u, w), (perim(*tri), dist(u, v), dist(v, w)),
                derive=lambda g: g[0] - g[1] - g[2],
                explain=lambda g, t, n="".join(tri), u=u, v=v, w=w: (
                    f"Subtracting the other two sides from the perimeter of triangle {n}, "
                    f"{u}{w} = {g[0]} - {g[1]} - {g[2]} = {t}."
                ),
            )


def br_midpoint_whole(s: Structure) -> Iterator[Candidate]:
    for i, fact in s.constraint_facts("midpoint-of"):
        m, a, b = fact.args
        yield Candidate(
            "br-midpoint-whole", BR, dist(a, b), (dist(a, m),),
            derive=lambda g: 2.0 * g[0],
            explain=lambda g, t, m=m, a=a, b=b: f"{m} is the midpoint of {a}{b}, so {a}{b} = 2 * {a}{m} = 2 * {g[0]} = {t}.",
            facts=(i,),
        )


TEMPLATES: dict[str, tuple[Principle, Gen]] = {
    "gc-segment-length": (GC, gc_segment_length),
    "gc-right-angle": (GC, gc_right_angle),
    "gc-equal-length": (GC, gc_equal_length),
    "gc-midpoint-half": (GC, gc_midpoint_half),
    "gc-point-on-sum": (GC, gc_point_on_sum),
    "gc-perimeter": (GC, gc_perimeter),
    "nt-pythagoras": (NT, nt_pythagoras),
    "nt-angle-sum": (NT, nt_angle_sum),
    "nt-right-triangle-area": (NT, nt_right_triangle_area),
    "nt-parallelogram-opposite": (NT, nt_parallelogram_opposite),
    "nt-tangent-radius": (NT, nt_tangent_radius),
    "nt-isosceles-base-angles": (NT, nt_isosceles_base_angles),
    "br-pythagoras-leg": (BR, br_pythagoras_leg),
    "br-area-leg": (BR, br_area_leg),
    "br-perimeter-side": (BR, br_perimeter_side),
    "br-midpoint-whole": (BR, br_midpoint_whole),
}

TemplateRegistry = dict[Principle, tuple[str, ...]]


def default_registry() -> TemplateRegistry:
    reg: dict[Principle, list[str]] = {p: [] for p in Principle}
    for tid, (principle, _) in TEMPLATES.items():
        reg[principle].append(tid)
    return {p: tuple(ids) for p, ids in reg.items()}


def parse_registry(raw: dict) -> TemplateRegistry:
    """Validate a ``{principle: [template ids]}`` mapping."""
    reg: dict[Principle, tuple[str, ...]] = {p: () for p in Principle}
    for key, ids in raw.items():
        try:
            principle = Principle(key)
        except ValueError:
            raise ValueError(f"unknown principle {key!r}") from None
        for tid in ids:
            if tid not in TEMPLATES:
                raise ValueError(f"unknown template id {tid!r}")
            if TEMPLATES[tid][0] is not principle:
                raise ValueError(f"template {tid!r} belongs to {TEMPLATES[tid][0].value}, not {key}")
        reg[principle] = tuple(ids)
    return reg


def load_registry(path: str | Path) -> TemplateRegistry:
    with open(path, encoding="utf-8") as fh:
        return parse_registry(json.load(fh))


def registry_to_json(reg: TemplateRegistry) -> dict[str, list[str]]:
    return {p.value: list(ids) for p, ids in reg.items()}


def fmt(value: float) -> str:
    return format_canonical(value)
