"""Keep/drop filters for composed problems."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..canonical import format_canonical
from ..geometry.describe import verify_fact
from ..geometry.diagram import Diagram, GeometryError
from ..geometry.measure import measure
from ..records import SampleRecord
from .compose import ComposedProblem, reasoning_length

_LABEL_RUN = re.compile(r"(?<![A-Za-z0-9])[A-Z][A-Z0-9']*(?![a-z])")


@dataclass(frozen=True)
class FilterDecision:
    keep: bool
    reason: str = ""
    transcript: tuple = ()


def problem_record(p: ComposedProblem, d: Diagram, sample_id: str = "candidate", iteration: int = 0) -> SampleRecord:
    return SampleRecord(
        id=sample_id,
        iteration=iteration,
        diagram=d.to_spec(),
        question=p.question,
        ground_truth=p.ground_truth,
        ground_truth_value=p.ground_truth_value,
        reasoning=p.reasoning,
        target=p.target.to_dict(),
        subproblem_ids=p.component_ids,
        principles=tuple(x.value for x in p.principles),
        aux_count=p.aux_count,
        chain_length=p.chain_length,
        difficulty=p.difficulty,
        reasoning_length=reasoning_length(p),
    )


def consistency_filter(
    p: ComposedProblem, solver, n_attempts: int = 3, *, diagram: Diagram | None = None, sample_id: str = "candidate"
) -> FilterDecision:
    """Keep iff all ``n_attempts`` solver answers agree canonically.

    Solver transport errors propagate (retryable); they are not drops.
    """
    record = problem_record(p, diagram or Diagram(), sample_id)
    if diagram is None:
        record = SampleRecord(**{**record.to_dict(), "target": None})
    transcript = tuple(solver.answer(record, attempt=i) for i in range(n_attempts))
    answers = [r.extracted for r in transcript]
    if any(a is None for a in answers):
        return FilterDecision(False, "unparseable answer", transcript)
    if len({format_canonical(float(a)) for a in answers}) != 1:
        return FilterDecision(False, f"inconsistent answers {answers}", transcript)
    return FilterDecision(True, "consistent", transcript)


def question_labels(text: str, known: tuple[str, ...]) -> tuple[list[str], list[str]]:
    """Split capital-letter runs of ``text`` into known labels (longest match first)."""
    by_length = sorted(known, key=len, reverse=True)
    found, unknown = [], []
    for run in _LABEL_RUN.findall(text):
        i = 0
        while i < len(run):
            match = next((lab for lab in by_length if run.startswith(lab, i)), None)
            if match is None:
                unknown.append(run[i:])
                break
            found.append(match)
            i += len(match)
    return found, unknown


def alignment_filter(p: ComposedProblem, d: Diagram) -> FilterDecision:
    """Keep iff every cited fact and stated given holds in ``d`` and every label resolves."""
    missing = [label for label in p.labels if not d.has_label(label)]
    _, stray = question_labels(p.question, d.labels)
    if missing or stray:
        return FilterDecision(False, f"unresolved labels {sorted(set(missing + stray))}")
    for fact in p.facts:
        try:
            ok = verify_fact(d, fact)
        except GeometryError as exc:
            return FilterDecision(False, f"fact {fact.text!r} not checkable: {exc}")
        if not ok:
            return FilterDecision(False, f"fact {fact.text!r} inconsistent with the diagram")
    for q, stated in p.givens:
        if format_canonical(measure(d, q)) != stated:
            return FilterDecision(False, f"stated {q.kind}{list(q.args)} = {stated} disagrees with the diagram")
    if format_canonical(measure(d, p.target)) != p.ground_truth:
        return FilterDecision(False, "ground truth disagrees with the diagram")
    return FilterDecision(True, "aligned")
