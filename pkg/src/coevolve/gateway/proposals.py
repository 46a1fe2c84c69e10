"""Auxiliary-construction proposals: rule-based rules and remote-reply parsing."""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass

from ..geometry.constructions import AuxiliaryCommand, apply_auxiliary, next_free_label
from ..geometry.describe import emit_formal_description
from ..geometry.diagram import Diagram, GeometryError
from ..geometry.measure import distance
from ..synthesis.templates import Structure


@dataclass(frozen=True)
class Proposal:
    commands: tuple[AuxiliaryCommand, ...]
    thought: str
    report: tuple[str, ...] = ()


def _has_altitude(s: Structure, apex: str, y: str, z: str) -> bool:
    for f in s.d.labels:
        if f == apex or not s.collinear(f, y, z) or frozenset((apex, f)) not in s.adjacent:
            continue
        a, p = s.d.xy(apex), s.d.xy(f)
        u = (a[0] - p[0], a[1] - p[1])
        w = (s.d.xy(z)[0] - s.d.xy(y)[0], s.d.xy(z)[1] - s.d.xy(y)[1])
        nu, nw = distance(a, p), distance(s.d.xy(y), s.d.xy(z))
        if nu > 0 and nw > 0 and abs(u[0] * w[0] + u[1] * w[1]) / (nu * nw) <= 1e-9:
            return True
    return False


def _on_common_segment_line(s: Structure, a: str, b: str) -> bool:
    return any(s.collinear(a, *seg.args) and s.collinear(b, *seg.args) for seg in s.d.segments())


def rule_based_proposal(d: Diagram) -> tuple[list[AuxiliaryCommand], str]:
    """At most one construction, by the first rule that fires.

    1. In the first triangle lacking it, drop the altitude from the vertex
       opposite the longest side (its foot falls inside that side).
    2. Connect the first pair of non-adjacent labelled points.
    3. Join a vertex to the midpoint of the opposite (longest) side.
    """
    s = Structure(d, emit_formal_description(d))
    for tri in s.triangles:
        y, z = max(itertools.combinations(tri, 2), key=lambda e: distance(d.xy(e[0]), d.xy(e[1])))
        (apex,) = set(tri) - {y, z}
        if not _has_altitude(s, apex, y, z):
            foot = next_free_label(d)
            return (
                [AuxiliaryCommand("perpendicular-foot", (apex, y, z), foot)],
                f"Triangle {''.join(tri)} needs an altitude: drop a perpendicular from {apex} to {y}{z}.",
            )
    for a, b in itertools.combinations(d.labels, 2):
        if frozenset((a, b)) in s.adjacent or s.coincident(a, b) or _on_common_segment_line(s, a, b):
            continue
        return [AuxiliaryCommand("connect", (a, b))], f"Connecting {a} and {b} exposes new triangles."
    midpoints = {frozenset(f.args[1:]) for f in s.f.facts if f.relation == "midpoint-of"}
    for tri in s.triangles:
        y, z = max(itertools.combinations(tri, 2), key=lambda e: distance(d.xy(e[0]), d.xy(e[1])))
        (apex,) = set(tri) - {y, z}
        if frozenset((y, z)) not in midpoints:
            return (
                [AuxiliaryCommand("midpoint", (y, z, apex), next_free_label(d))],
                f"Draw the median from {apex} to the midpoint of {y}{z}.",
            )
    return [], "No auxiliary construction is needed."


_JSON_BLOCK = re.compile(r"\{.*\}", re.DOTALL)


def parse_remote_proposal(text: str) -> tuple[list[AuxiliaryCommand], str, list[str]]:
    """Parse ``{"thought": ..., "commands": [{"kind", "args", "new"}]}`` from model text."""
    m = _JSON_BLOCK.search(text or "")
    if not m:
        return [], "", ["unparseable proposal: no JSON object found"]
    try:
        payload = json.loads(m.group(0))
    except json.JSONDecodeError as exc:
        return [], "", [f"unparseable proposal: {exc.msg}"]
    if not isinstance(payload, dict):
        return [], "", ["unparseable proposal: expected an object"]
    thought = str(payload.get("thought", ""))
    commands, report = [], []
    for i, raw in enumerate(payload.get("commands") or []):
        try:
            commands.append(AuxiliaryCommand(raw["kind"], tuple(raw["args"]), raw.get("new")))
        except (KeyError, TypeError, GeometryError) as exc:
            report.append(f"command {i} dropped: {exc}")
    return commands, thought, report


def validate_commands(d: Diagram, commands: list[AuxiliaryCommand]) -> tuple[list[AuxiliaryCommand], list[str]]:
    """Apply commands in order on a scratch copy; invalid ones are dropped and reported."""
    kept, report = [], []
    current = d
    for cmd in commands:
        if cmd.creates_point and cmd.new_label is None:
            cmd = AuxiliaryCommand(cmd.kind, cmd.args, next_free_label(current))
        try:
            current = apply_auxiliary(current, cmd)
        except GeometryError as exc:
            report.append(f"dropped {cmd.kind}{list(cmd.args)}: {exc}")
            continue
        kept.append(cmd)
    return kept, report
