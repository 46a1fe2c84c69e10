"""Dataset summary statistics (reasoning length, auxiliary counts, principle usage)."""

from __future__ import annotations

from collections import Counter
from pathlib import Path
from statistics import fmean
from typing import Any, Sequence

from ..records import SampleRecord, read_jsonl_lenient
from ..synthesis.compose import reasoning_length


def _summary(values: Sequence[float]) -> dict[str, Any]:
    if not values:
        return {"mean": 0.0, "min": 0, "max": 0, "counts": {}}
    counts = Counter(values)
    return {
        "mean": fmean(values),
        "min": min(values),
        "max": max(values),
        "counts": {str(k): counts[k] for k in sorted(counts)},
    }


def stats(records: Sequence[SampleRecord]) -> dict[str, Any]:
    lengths = [reasoning_length(r.reasoning) for r in records]
    aux = [r.aux_count for r in records]
    principles = Counter(p for r in records for p in r.principles)
    by_iteration: dict[str, Any] = {}
    for t in sorted({r.iteration for r in records}):
        subset = [r for r in records if r.iteration == t]
        by_iteration[str(t)] = {
            "count": len(subset),
            "mean_reasoning_length": fmean(reasoning_length(r.reasoning) for r in subset),
            "mean_aux_count": fmean(r.aux_count for r in subset),
        }
    return {
        "count": len(records),
        "reasoning_length": _summary(lengths),
        "aux_count": _summary(aux),
        "chain_length": _summary([r.chain_length for r in records]),
        "principles": dict(sorted(principles.items())),
        "status": dict(sorted(Counter(r.status for r in records).items())),
        "by_iteration": by_iteration,
    }


def stats_file(path: str | Path) -> dict[str, Any]:
    """Stats of a JSONL dataset; malformed lines are listed with their line numbers."""
    records, errors = read_jsonl_lenient(path)
    out = stats(records)
    out["malformed"] = [{"line": e.line, "error": str(e)} for e in errors]
    return out
