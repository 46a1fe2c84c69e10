"""Seed datasets and one round of diagram/question evolution."""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Sequence

from ..geometry.build import build_diagram
from ..geometry.constructions import apply_auxiliary
from ..geometry.corpus import seed_corpus
from ..geometry.describe import emit_formal_description
from ..geometry.diagram import Diagram
from ..geometry.render import write_svg
from ..records import SampleRecord
from ..synthesis.compose import CompositionError, compose_problem, reasoning_length
from ..synthesis.filters import alignment_filter, consistency_filter, problem_record
from ..synthesis.generate import TooSimpleError, generate_subproblems
from ..synthesis.templates import ALL_PRINCIPLES
from .config import SynthesisConfig, derive_seed

ASSETS = "assets"


def _svg(d: Diagram, sample_id: str, dataset_dir: Path | None) -> str | None:
    if dataset_dir is None:
        return None
    rel = f"{ASSETS}/{sample_id}.svg"
    write_svg(d, dataset_dir / rel)
    return rel


def seed_record(sample_id: str, d: Diagram, seed: int, dataset_dir: Path | None = None) -> SampleRecord:
    """A single-step question about ``d`` (one sub-problem, no composition)."""
    f = emit_formal_description(d, sample_id)
    (sub,) = generate_subproblems(f, d, ALL_PRINCIPLES, seed=seed, m_range=(1, 1))
    reasoning = f"Step 1: {sub.explanation}"
    return SampleRecord(
        id=sample_id,
        iteration=1,
        diagram=d.to_spec(),
        question=sub.question,
        ground_truth=sub.answer,
        ground_truth_value=sub.value,
        reasoning=reasoning,
        target=sub.target.to_dict(),
        svg_path=_svg(d, sample_id, dataset_dir),
        subproblem_ids=(f"{sample_id}/{sub.id}",),
        principles=(sub.principle.value,),
        aux_count=d.aux_count,
        chain_length=1,
        difficulty=d.aux_count + 1,
        reasoning_length=reasoning_length(reasoning),
        meta={"template": sub.template},
    )


def build_seed_dataset(n: int, seed: int, cfg: SynthesisConfig = SynthesisConfig(),
                       dataset_dir: Path | None = None) -> list[SampleRecord]:
    corpus = seed_corpus(n, seed, cfg.families)
    return [
        dataclasses.replace(seed_record(f"s{i:03d}", d, derive_seed(seed, 0, "seed", i), dataset_dir),
                            meta={"family": fam})
        for i, (fam, d) in enumerate(corpus)
    ]


def evolve_sample(
    record: SampleRecord, gateway, cfg: SynthesisConfig, seed: int, t: int, dataset_dir: Path | None = None
) -> tuple[SampleRecord | None, dict[str, Any]]:
    """Evolve one record created at iteration ``t`` into a record for ``t + 1``.

    Returns (record or None, report entry). Gateway failures propagate.
    """
    new_id = f"{record.id}.{t + 1}"
    entry: dict[str, Any] = {"id": record.id, "new_id": new_id}
    d = build_diagram(record.diagram)
    proposal = gateway.propose_auxiliary(d, record.question)
    for cmd in proposal.commands:
        d = apply_auxiliary(d, cmd)
    f = emit_formal_description(d, new_id)
    s = derive_seed(seed, t, "synthesis", record.id)
    try:
        subs = generate_subproblems(f, d, cfg.principles, seed=s, m_range=cfg.m_range)
    except TooSimpleError as exc:
        return None, {**entry, "status": "too-simple", "reason": str(exc)}
    try:
        problem = compose_problem(subs, seed=s, aux_count=d.aux_count,
                                  constructions=[c.describe() for c in proposal.commands])
    except CompositionError as exc:
        return None, {**entry, "status": "no-chain", "reason": str(exc)}
    decision = consistency_filter(problem, gateway, cfg.consistency_attempts, diagram=d, sample_id=new_id)
    if not decision.keep:
        return None, {**entry, "status": "inconsistent", "reason": decision.reason}
    decision = alignment_filter(problem, d)
    if not decision.keep:
        return None, {**entry, "status": "misaligned", "reason": decision.reason}
    base = problem_record(problem, d, new_id, t + 1)
    out = dataclasses.replace(
        base,
        parent_id=record.id,
        svg_path=_svg(d, new_id, dataset_dir),
        subproblem_ids=tuple(f"{new_id}/{sid}" for sid in problem.component_ids),
        meta={
            "constructions": [c.to_dict() for c in proposal.commands],
            "subproblems": len(subs),
            "family": record.meta.get("family"),
        },
    )
    return out, {**entry, "status": "evolved", "subproblems": len(subs), "chain_length": problem.chain_length}


def evolve_dataset(
    records: Sequence[SampleRecord],
    gateway,
    cfg: SynthesisConfig = SynthesisConfig(),
    seed: int = 0,
    t: int = 1,
    dataset_dir: Path | None = None,
    workers: int = 4,
) -> tuple[list[SampleRecord], list[SampleRecord], list[dict[str, Any]]]:
    """Evolve ``records`` in parallel; results keep input order.

    Returns (evolved, passed_through, report). Samples that are too simple to
    synthesise from are passed through unchanged.
    """

    def one(r: SampleRecord):
        return evolve_sample(r, gateway, cfg, seed, t, dataset_dir)

    if workers > 1 and len(records) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, records))
    else:
        results = [one(r) for r in records]
    evolved, passed, report = [], [], []
    for r, (new, entry) in zip(records, results):
        report.append(entry)
        if new is not None:
            evolved.append(new)
        elif entry["status"] == "too-simple":
            passed.append(r)
    return evolved, passed, report

