"""Rule-based rewards: answer accuracy, response format, and step order.

Responses must follow ``<think>...</think><answer>...</answer>``. Accuracy is
only read from a well-formed answer tag.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .canonical import format_canonical

_TEMPLATE = re.compile(r"\s*<think>(.*?)</think>\s*<answer>(.*?)</answer>\s*", re.DOTALL)
_TAGS = ("<think>", "</think>", "<answer>", "</answer>")
_STEP = re.compile(r"\bStep\s+(\d+)\s*:")
_NUMBER = re.compile(
    r"""^\s*
    (?:[A-Za-z∠]{1,6}\s*=\s*)?           # optional "BC =" prefix
    (?P<sign>[+-]?)\s*
    (?P<num>\d+(?:\.\d*)?|\.\d+)
    (?:\s*/\s*(?P<den>\d+(?:\.\d*)?|\.\d+))?
    \s*(?P<unit>°|degrees?|deg)?
    \s*\.?\s*$""",
    re.VERBOSE,
)


@dataclass(frozen=True)
class NumericAnswer:
    canonical: str
    value: float
    unit: str | None = None


@dataclass(frozen=True)
class ParsedResponse:
    think: str | None = None
    answer: str | None = None
    value: str | None = None
    steps: tuple[int, ...] = ()

    @property
    def well_formed(self) -> bool:
        return self.think is not None and self.answer is not None


def parse_numeric(text: str | None) -> NumericAnswer | None:
    if text is None:
        return None
    m = _NUMBER.match(text)
    if not m:
        return None
    num = Fraction(m.group("num"))
    if m.group("den") is not None:
        den = Fraction(m.group("den"))
        if den == 0:
            return None
        num /= den
    if m.group("sign") == "-":
        num = -num
    value = float(num)
    return NumericAnswer(format_canonical(value), value, "deg" if m.group("unit") else None)


def extract_answer(text: str | None) -> str | None:
    """Canonical numeric string for an answer, or None when it is not numeric."""
    parsed = parse_numeric(text)
    return parsed.canonical if parsed else None


def parse_response(raw: str) -> ParsedResponse:
    if any(raw.count(tag) != 1 for tag in _TAGS):
        return ParsedResponse()
    m = _TEMPLATE.fullmatch(raw)
    if not m:
        return ParsedResponse()
    think, answer = m.group(1), m.group(2)
    steps = tuple(int(s) for s in _STEP.findall(think))
    return ParsedResponse(think, answer.strip(), extract_answer(answer), steps)


def steps_in_order(steps: tuple[int, ...]) -> bool:
    return list(steps) == list(range(1, len(steps) + 1))


@dataclass(frozen=True)
class RewardConfig:
    w_acc: float = 1.0
    w_fmt: float = 1.0
    order_penalty: float = -0.5
    abs_tol: float = 1e-6
    rel_tol: float = 1e-3


@dataclass(frozen=True)
class RewardBreakdown:
    accuracy: int
    format: int
    order_penalty: float
    total: float
    ground_truth: str
    tolerance: float


def score(raw: str, ground_truth: str | float, cfg: RewardConfig | None = None) -> RewardBreakdown:
    cfg = cfg or RewardConfig()
    truth = float(ground_truth)
    tol = max(cfg.abs_tol, cfg.rel_tol * abs(truth))
    parsed = parse_response(raw)
    fmt = int(parsed.well_formed)
    accuracy = 0
    if fmt and parsed.value is not None and abs(float(parsed.value) - truth) <= tol:
        accuracy = 1
    penalty = cfg.order_penalty if parsed.steps and not steps_in_order(parsed.steps) else 0.0
    total = cfg.w_acc * accuracy + cfg.w_fmt * fmt + penalty
    return RewardBreakdown(accuracy, fmt, penalty, total, format_canonical(truth), tol)


def format_response(think: str, answer: str) -> str:
    return f"<think>{think}</think><answer>{answer}</answer>"
