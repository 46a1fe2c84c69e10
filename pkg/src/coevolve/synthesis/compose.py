from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from ..geometry.describe import Fact
from ..geometry.measure import MeasurementQuery
from .generate import SubProblem, SynthesisError, question_text
from .templates import Principle

_CLOSINGS = ("", " This is the required value.", " Hence the answer is {answer}.")


class CompositionError(SynthesisError):
    pass


@dataclass(frozen=True)
class ComposedProblem:
    question: str
    ground_truth: str
    ground_truth_value: float
    unit: str
    reasoning: str
    component_ids: tuple[str, ...]
    principles: tuple[Principle, ...]
    chain_length: int
    aux_count: int
    difficulty: int
    target: MeasurementQuery
    givens: tuple[tuple[MeasurementQuery, str], ...]
    facts: tuple[Fact, ...]

    @property
    def steps(self) -> list[str]:
        return [line for line in self.reasoning.split("\n") if line]

    @property
    def labels(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for q in (self.target, *(g for g, _ in self.givens)):
            seen.update(dict.fromkeys(q.args))
        for fact in self.facts:
            seen.update(dict.fromkeys(fact.args))
        return tuple(seen)


def _chain_ok(chain: Sequence[SubProblem]) -> bool:
    targets = [s.target for s in chain]
    if len(set(targets)) != len(targets):
        return False
    for k, s in enumerate(chain):
        for g in s.given_queries:
            if g in targets and g not in targets[:k]:
                return False
    return True


def find_chain(subs: Sequence[SubProblem]) -> list[SubProblem]:
    """Longest dependency chain; ties go to the first found in id order."""
    best: list[SubProblem] = []

    def extend(chain: list[SubProblem]) -> None:
        nonlocal best
        if len(chain) > len(best):
            best = list(chain)
        last = chain[-1]
        for nxt in subs:
            if nxt in chain or last.target not in nxt.given_queries:
                continue
            chain.append(nxt)
            if _chain_ok(chain):
                extend(chain)
            chain.pop()

    for start in subs:
        extend([start])
    return best


def number_steps(lines: Sequence[str]) -> str:
    return "\n".join(f"Step {k}: {line}" for k, line in enumerate(lines, start=1))


def compose_problem(
    subs: Sequence[SubProblem],
    seed: int = 0,
    *,
    aux_count: int = 0,
    constructions: Sequence[str] = (),
) -> ComposedProblem:
    """Chain sub-problems so each answer feeds the next; the last answer is G.

    Sub-problems are considered in id order and the longest valid chain wins.
    ``constructions`` are auxiliary-construction steps prepended to the
    reasoning trace. ``seed`` only varies phrasing.
    """
    unique: dict[tuple, SubProblem] = {}
    for s in subs:
        unique.setdefault((s.target, frozenset(s.given_queries)), s)
    if len(unique) < 2:
        raise CompositionError("need at least two distinct sub-problems")
    ordered = list(unique.values())
    chain = find_chain(ordered)
    if len(chain) < 2:
        raise CompositionError("no sub-problem feeds another; nothing to compose")

    targets = {s.target for s in chain}
    external: dict[MeasurementQuery, str] = {}
    facts: dict[Fact, None] = {}
    for s in chain:
        for q, v in s.givens:
            if q not in targets:
                external.setdefault(q, v)
        facts.update(dict.fromkeys(s.facts))
    terminal = chain[-1]
    closing = random.Random(seed).choice(_CLOSINGS).format(answer=terminal.answer)
    steps = list(constructions) + [s.explanation for s in chain]
    steps[-1] += closing
    principles = tuple(dict.fromkeys(s.principle for s in chain))
    return ComposedProblem(
        question=question_text(facts, tuple(external.items()), terminal.target),
        ground_truth=terminal.answer,
        ground_truth_value=terminal.value,
        unit=terminal.unit,
        reasoning=number_steps(steps),
        component_ids=tuple(s.id for s in chain),
        principles=principles,
        chain_length=len(chain),
        aux_count=aux_count,
        difficulty=aux_count + len(chain),
        target=terminal.target,
        givens=tuple(external.items()),
        facts=tuple(facts),
    )


def reasoning_length(trace: "ComposedProblem | str") -> int:
    """Whitespace token count of a reasoning trace."""
    text = trace.reasoning if isinstance(trace, ComposedProblem) else trace
    return len(text.split())
