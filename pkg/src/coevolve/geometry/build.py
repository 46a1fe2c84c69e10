from __future__ import annotations

from typing import Any, Mapping

from .constraints import check_constraints
from .diagram import (
    CIRCLE,
    ConstraintViolationError,
    DanglingReferenceError,
    Diagram,
    DuplicateLabelError,
    SpecError,
    TOLERANCE,
    parse_spec,
)


def validate(d: Diagram, tolerance: float = TOLERANCE) -> Diagram:
    """Check labels, references and constraint residuals; return ``d`` unchanged."""
    seen: set[str] = set()
    for p in d.points:
        if p.label in seen:
            raise DuplicateLabelError(f"duplicate point label {p.label!r}")
        seen.add(p.label)
    for prim in d.primitives:
        for label in prim.args:
            if label not in seen:
                raise DanglingReferenceError(f"{prim.kind} references undefined point {label!r}")
    for tag in d.constraints:
        for label in tag.args:
            if label not in seen:
                raise DanglingReferenceError(f"{tag.kind} tag references undefined point {label!r}")
        if tag.kind == "tangent" and not any(
            p.kind == CIRCLE and p.args[0] == tag.args[0] for p in d.primitives
        ):
            raise SpecError(f"tangent tag needs a circle centred at {tag.args[0]!r}")
    report = check_constraints(d, tolerance)
    if not report.passed:
        tag, worst = report.worst()
        raise ConstraintViolationError(
            f"{tag.kind}{list(tag.args)} violated: residual {worst:.3g} > {tolerance:g}", worst, tag
        )
    return d


def build_diagram(spec: Mapping[str, Any], tolerance: float = TOLERANCE) -> Diagram:
    """Parse and validate a declarative diagram spec.

    Raises DuplicateLabelError, DanglingReferenceError, SpecError, or
    ConstraintViolationError (carrying the worst residual).
    """
    return validate(parse_spec(spec), tolerance)
