"""Seeded generators for the seed diagrams fed into the evolution loop."""

from __future__ import annotations

import math
import random

from .build import build_diagram
from .diagram import Diagram

FAMILIES = ("right-triangle", "triangle", "isosceles", "parallelogram", "tangent", "median")


def _place(rng: random.Random, pts: dict[str, tuple[float, float]]) -> dict[str, tuple[float, float]]:
    """Random rotation and translation, rounded to 4 decimals for readable specs."""
    theta = rng.uniform(0, 2 * math.pi)
    c, s = math.cos(theta), math.sin(theta)
    tx, ty = rng.uniform(-5, 5), rng.uniform(-5, 5)
    return {k: (round(c * x - s * y + tx, 4), round(s * x + c * y + ty, 4)) for k, (x, y) in pts.items()}


def _spec(pts, segments, constraints=(), circles=()) -> dict:
    return {
        "points": [{"label": k, "x": x, "y": y} for k, (x, y) in pts.items()],
        "primitives": [{"kind": "segment", "args": list(s), "aux": False} for s in segments]
        + [{"kind": "circle", "args": [c], "radius": r, "aux": False} for c, r in circles],
        "constraints": [{"kind": k, "args": list(a)} for k, a in constraints],
    }


def _triangle_sides(rng: random.Random) -> tuple[float, float, float]:
    """Base length and apex position with all angles at least 30 degrees."""
    while True:
        base = rng.randint(4, 12)
        ax, ay = rng.uniform(0.2, 0.8) * base, rng.uniform(0.4, 1.2) * base
        a = math.degrees(math.atan2(ay, ax))
        b = math.degrees(math.atan2(ay, base - ax))
        if min(a, b, 180 - a - b) >= 30:
            return base, ax, ay


def seed_spec(family: str, rng: random.Random) -> dict:
    if family == "right-triangle":
        a, b = rng.randint(3, 12), rng.randint(3, 12)
        # exact perpendicularity survives only unrotated coordinates after rounding
        pts = {"A": (0.0, 0.0), "B": (float(a), 0.0), "C": (0.0, float(b))}
        return _spec(pts, [("A", "B"), ("A", "C"), ("B", "C")], [("perpendicular", ("A", "B", "A", "C"))])
    if family == "triangle":
        base, ax, ay = _triangle_sides(rng)
        pts = _place(rng, {"A": (ax, ay), "B": (0.0, 0.0), "C": (float(base), 0.0)})
        return _spec(pts, [("A", "B"), ("B", "C"), ("A", "C")])
    if family == "isosceles":
        half, h = rng.randint(2, 6), rng.randint(3, 9)
        pts = {"A": (0.0, float(h)), "B": (-float(half), 0.0), "C": (float(half), 0.0)}
        return _spec(pts, [("A", "B"), ("A", "C"), ("B", "C")], [("equal-length", ("A", "B", "A", "C"))])
    if family == "parallelogram":
        w, sx, h = rng.randint(4, 10), rng.randint(1, 4), rng.randint(3, 7)
        pts = {"A": (0.0, 0.0), "B": (float(w), 0.0), "C": (float(w + sx), float(h)), "D": (float(sx), float(h))}
        return _spec(
            pts,
            [("A", "B"), ("B", "C"), ("C", "D"), ("D", "A")],
            [("parallel", ("A", "B", "D", "C")), ("parallel", ("A", "D", "B", "C"))],
        )
    if family == "tangent":
        r, la, lb = rng.randint(2, 6), rng.randint(3, 9), rng.randint(3, 9)
        pts = {"O": (0.0, float(r)), "T": (0.0, 0.0), "A": (-float(la), 0.0), "B": (float(lb), 0.0)}
        return _spec(
            pts,
            [("O", "T"), ("A", "B"), ("O", "A")],
            [("tangent", ("O", "A", "B")), ("point-on", ("T", "A", "B")), ("perpendicular", ("O", "T", "A", "B"))],
            circles=[("O", float(r))],
        )
    if family == "median":
        base, ax, ay = _triangle_sides(rng)
        base = 2 * (base // 2) or 2
        pts = {"A": (round(ax, 1), round(ay, 1)), "B": (0.0, 0.0), "C": (float(base), 0.0), "M": (base / 2.0, 0.0)}
        return _spec(pts, [("A", "B"), ("B", "C"), ("A", "C"), ("A", "M")], [("midpoint-of", ("M", "B", "C"))])
    if family == "segment":
        return _spec({"A": (0.0, 0.0), "B": (float(rng.randint(2, 9)), 0.0)}, [("A", "B")])
    raise ValueError(f"unknown family {family!r}")


def seed_diagram(family: str, rng: random.Random) -> Diagram:
    return build_diagram(seed_spec(family, rng))


def seed_corpus(n: int, seed: int, families: tuple[str, ...] = FAMILIES) -> list[tuple[str, Diagram]]:
    """``n`` (family, diagram) pairs, cycling through ``families``."""
    rng = random.Random(seed)
    return [(families[i % len(families)], seed_diagram(families[i % len(families)], rng)) for i in range(n)]
