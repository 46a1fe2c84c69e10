from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable

from ..canonical import format_canonical
from ..geometry.describe import Fact, FormalDescription
from ..geometry.diagram import Diagram
from ..geometry.measure import MeasurementQuery, measure
from .templates import (
    ALL_PRINCIPLES,
    TEMPLATES,
    Candidate,
    Principle,
    Structure,
    TemplateRegistry,
    default_registry,
    quantity_name,
    with_unit,
)

DEFAULT_M_RANGE = (4, 10)
ORACLE_TOL = 1e-6


class SynthesisError(ValueError):
    pass


class TooSimpleError(SynthesisError):
    """The diagram supports fewer sub-problems than requested; evolve it further."""


@dataclass(frozen=True)
class SubProblem:
    id: str
    question: str
    answer: str
    unit: str
    principle: Principle
    depends_on: str | None
    facts_used: tuple[int, ...]
    template: str
    target: MeasurementQuery
    givens: tuple[tuple[MeasurementQuery, str], ...]
    value: float
    facts: tuple[Fact, ...]
    explanation: str

    @property
    def given_queries(self) -> tuple[MeasurementQuery, ...]:
        return tuple(q for q, _ in self.givens)


def question_text(facts: Iterable[Fact], givens, target: MeasurementQuery) -> str:
    cited = [f.text for f in facts if f.is_constraint]
    stated = ", ".join(f"{quantity_name(q)} = {with_unit(q, v)}" for q, v in givens)
    ask = f"find {quantity_name(target)}."
    body = f"given {stated}, {ask}" if stated else ask
    if cited:
        return "In the figure, " + "; ".join(cited) + ". " + body[0].upper() + body[1:]
    return "In the figure, " + body


def enumerate_candidates(
    f: FormalDescription, d: Diagram, principles: Iterable[Principle], registry: TemplateRegistry | None = None
) -> list[Candidate]:
    """All oracle-verified, de-duplicated candidates in deterministic order."""
    registry = registry or default_registry()
    structure = Structure(d, f)
    out: list[Candidate] = []
    seen: set = set()
    for principle in Principle:  # fixed order, independent of set iteration
        if principle not in principles:
            continue
        for tid in registry.get(principle, ()):
            for cand in TEMPLATES[tid][1](structure):
                if cand.key in seen or cand.target in cand.givens:
                    continue
                given_values = tuple(measure(d, q) for q in cand.givens)
                truth = measure(d, cand.target)
                derived = cand.derive(given_values)
                if abs(derived - truth) > ORACLE_TOL * max(1.0, abs(truth)):
                    continue
                seen.add(cand.key)
                out.append(cand)
    return out


def _linked(a: Candidate, b: Candidate) -> bool:
    return a.target in b.givens or b.target in a.givens


def generate_subproblems(
    f: FormalDescription,
    d: Diagram,
    principles: Iterable[Principle] = ALL_PRINCIPLES,
    seed: int = 0,
    m_range: tuple[int, int] = DEFAULT_M_RANGE,
    registry: TemplateRegistry | None = None,
) -> list[SubProblem]:
    """Draw between ``m_range[0]`` and ``m_range[1]`` principle-tagged sub-problems.

    ``m`` is drawn uniformly from ``m_range`` and capped by the number of
    applicable templates. Every enabled principle with an applicable template
    contributes at least one sub-problem; the rest are filled preferring
    candidates linked to ones already chosen, so compositions can chain.
    Raises TooSimpleError when fewer than ``m_range[0]`` candidates exist.
    """
    lo, hi = m_range
    if not 1 <= lo <= hi:
        raise ValueError(f"bad m_range {m_range}")
    principles = frozenset(principles)
    cands = enumerate_candidates(f, d, principles, registry)
    if len(cands) < lo:
        raise TooSimpleError(f"only {len(cands)} sub-problem templates apply, need at least {lo}")
    rng = random.Random(seed)
    m = min(rng.randint(lo, hi), len(cands))

    chosen: list[int] = []
    for principle in Principle:
        pool = [i for i, c in enumerate(cands) if c.principle is principle]
        if principle in principles and pool and len(chosen) < m:
            chosen.append(rng.choice(pool))
    while len(chosen) < m:
        rest = [i for i in range(len(cands)) if i not in chosen]
        linked = [i for i in rest if any(_linked(cands[i], cands[j]) for j in chosen)]
        chosen.append(rng.choice(linked or rest))
    chosen.sort()

    subs: list[SubProblem] = []
    for n, i in enumerate(chosen, start=1):
        c = cands[i]
        givens = tuple((q, format_canonical(measure(d, q))) for q in c.givens)
        value = measure(d, c.target)
        answer = format_canonical(value)
        facts = tuple(f.facts[k] for k in c.facts)
        provider = next((s.id for s in subs if s.target in c.givens), None)
        subs.append(
            SubProblem(
                id=f"q{n}",
                question=question_text(facts, givens, c.target),
                answer=answer,
                unit=c.target.unit,
                principle=c.principle,
                depends_on=provider,
                facts_used=c.facts,
                template=c.template,
                target=c.target,
                givens=givens,
                value=value,
                facts=facts,
                explanation=c.explain(tuple(v for _, v in givens), answer),
            )
        )
    return subs
