"""Canonical numeric answer strings shared by synthesis, gateway and rewards."""

from __future__ import annotations

import math
from decimal import Decimal

SIGNIFICANT_DIGITS = 6


def format_canonical(value: float, digits: int = SIGNIFICANT_DIGITS) -> str:
    """Render ``value`` as a plain decimal with at most ``digits`` significant digits.

    No exponent notation, no trailing zeros, and ``-0`` collapses to ``0``.
    """
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"cannot canonicalize non-finite value {value!r}")
    if value == 0.0:
        return "0"
    text = format(Decimal(f"{value:.{digits}g}"), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    if text in ("-0", ""):
        return "0"
    return text


def canonical_equal(a: str | float, b: str | float) -> bool:
    return format_canonical(float(a)) == format_canonical(float(b))
