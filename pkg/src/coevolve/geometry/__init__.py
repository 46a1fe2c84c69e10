from .build import build_diagram, validate
from .constraints import ResidualReport, check_constraints, residual
from .constructions import AuxiliaryCommand, apply_auxiliary, next_free_label
from .describe import Fact, FormalDescription, emit_formal_description, verify_fact
from .diagram import (
    TOLERANCE,
    ConstraintTag,
    ConstraintViolationError,
    DanglingReferenceError,
    DegenerateGeometryError,
    Diagram,
    DuplicateLabelError,
    GeometryError,
    LabelCollisionError,
    Point,
    Primitive,
    SpecError,
    load_spec,
)
from .measure import MeasurementQuery, measure
from .render import SvgStyle, render_svg, write_svg

__all__ = [
    "AuxiliaryCommand",
    "ConstraintTag",
    "ConstraintViolationError",
    "DanglingReferenceError",
    "DegenerateGeometryError",
    "Diagram",
    "DuplicateLabelError",
    "Fact",
    "FormalDescription",
    "GeometryError",
    "LabelCollisionError",
    "MeasurementQuery",
    "Point",
    "Primitive",
    "ResidualReport",
    "SpecError",
    "SvgStyle",
    "TOLERANCE",
    "apply_auxiliary",
    "build_diagram",
    "check_constraints",
    "emit_formal_description",
    "load_spec",
    "measure",
    "next_free_label",
    "render_svg",
    "residual",
    "validate",
    "verify_fact",
    "write_svg",
]
