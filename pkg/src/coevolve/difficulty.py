"""Error-rate estimation by repeated solver forwards and threshold selection."""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

from .gateway.config import SolverError
from .records import SampleRecord
from .rewards import score

EPS = 1e-12
N_BINS = 11


class EstimationError(RuntimeError):
    def __init__(self, sample_id: str, cause: Exception):
        super().__init__(f"{sample_id}: {cause}")
        self.sample_id = sample_id
        self.cause = cause


@dataclass(frozen=True)
class SelectionPolicy:
    threshold: float = 0.3
    inclusive: bool = True
    k: int = 32

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def admits(self, rate: float) -> bool:
        if self.inclusive:
            return rate >= self.threshold - EPS
        return rate > self.threshold + EPS


@dataclass(frozen=True)
class ErrorRateEstimate:
    sample_id: str
    k: int
    wrong: int
    model_tag: str = ""
    transcript_ids: tuple[str, ...] = ()
    status: str = "evaluated"  # or "unevaluated"
    error: str = ""

    def __post_init__(self) -> None:
        if self.status == "evaluated" and not 0 <= self.wrong <= self.k:
            raise ValueError("wrong count must lie in [0, k]")

    @property
    def evaluated(self) -> bool:
        return self.status == "evaluated"

    @property
    def error_rate(self) -> float | None:
        return self.wrong / self.k if self.evaluated else None


def estimate_error_rate(sample: SampleRecord, gateway, policy: SelectionPolicy = SelectionPolicy()) -> ErrorRateEstimate:
    """K scored forwards; an answer is wrong when its reward accuracy is 0.

    Raises EstimationError when the gateway gives up on any forward.
    """
    wrong = 0
    ids = []
    for attempt in range(policy.k):
        try:
            resp = gateway.answer(sample, attempt=attempt)
        except SolverError as exc:
            raise EstimationError(sample.id, exc) from exc
        if score(resp.raw, sample.ground_truth_value).accuracy == 0:
            wrong += 1
        ids.append(f"{sample.id}#{attempt}")
    return ErrorRateEstimate(sample.id, policy.k, wrong, gateway.tag, tuple(ids))


def estimate_error_rates(
    samples: Sequence[SampleRecord], gateway, policy: SelectionPolicy = SelectionPolicy(), workers: int = 4
) -> list[ErrorRateEstimate]:
    """Estimates in input order; failed samples come back with status "unevaluated"."""

    def one(sample: SampleRecord) -> ErrorRateEstimate:
        try:
            return estimate_error_rate(sample, gateway, policy)
        except EstimationError as exc:
            return ErrorRateEstimate(sample.id, policy.k, 0, gateway.tag, status="unevaluated", error=str(exc.cause))

    if workers <= 1 or len(samples) <= 1:
        return [one(s) for s in samples]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, samples))


def bin_index(rate: float) -> int:
    """0 for rate == 0; k for rate in ((k-1)/10, k/10]."""
    if rate <= EPS:
        return 0
    return min(N_BINS - 1, max(1, math.ceil(rate * 10 - 1e-9)))


@dataclass(frozen=True)
class DifficultyHistogram:
    counts: tuple[int, ...] = (0,) * N_BINS
    fully_correct: int = 0
    completely_wrong: int = 0
    model_tag: str = ""
    iteration: int | None = None
    edges: tuple[float, ...] = field(default=tuple(i / 10 for i in range(N_BINS)))

    @property
    def total(self) -> int:
        return sum(self.counts)

    def to_dict(self) -> dict[str, Any]:
        return {
            "edges": list(self.edges),
            "counts": list(self.counts),
            "fully_correct": self.fully_correct,
            "completely_wrong": self.completely_wrong,
            "model_tag": self.model_tag,
            "iteration": self.iteration,
        }


def difficulty_histogram(estimates: Sequence[ErrorRateEstimate], model_tag: str = "", iteration: int | None = None):
    """Bin evaluated estimates; bin 0 holds rate 0, the last bin (0.9, 1]."""
    counts = [0] * N_BINS
    full = wrong = 0
    for e in estimates:
        if not e.evaluated:
            continue
        counts[bin_index(e.error_rate)] += 1
        full += e.wrong == 0
        wrong += e.wrong == e.k
    return DifficultyHistogram(tuple(counts), full, wrong, model_tag, iteration)


def select_training_set(
    estimates: Sequence[ErrorRateEstimate], policy: SelectionPolicy = SelectionPolicy(), pool_size: int | None = None
) -> tuple[list[str], dict[str, Any]]:
    """Ids whose error rate clears the threshold, plus a JSON-ready report.

    ``pool_size`` (cumulative dataset size) only feeds the data-size column.
    """
    retained = [e.sample_id for e in estimates if e.evaluated and policy.admits(e.error_rate)]
    unevaluated = [e.sample_id for e in estimates if not e.evaluated]
    tags = sorted({e.model_tag for e in estimates if e.model_tag})
    report = {
        "threshold": policy.threshold,
        "inclusive": policy.inclusive,
        "k": policy.k,
        "total": len(estimates),
        "retained": len(retained),
        "unevaluated": len(unevaluated),
        "unevaluated_ids": unevaluated,
        "retained_ids": retained,
        "data_size": f"{len(retained)}/{pool_size if pool_size is not None else len(estimates)}",
        "model_tag": tags[0] if len(tags) == 1 else tags,
        "histogram": difficulty_histogram(estimates, tags[0] if len(tags) == 1 else "").to_dict(),
    }
    return retained, report


def annotate(records: Sequence[SampleRecord], estimates: Sequence[ErrorRateEstimate], retained: Sequence[str]):
    """Copy estimates and selection status onto the records (matched by id)."""
    by_id = {e.sample_id: e for e in estimates}
    keep = set(retained)
    out = []
    for r in records:
        e = by_id.get(r.id)
        if e is None:
            out.append(r)
            continue
        status = "unevaluated" if not e.evaluated else ("active" if r.id in keep else "filtered-out")
        out.append(dataclasses.replace(r, error_rate=e.error_rate, error_k=e.k, model_tag=e.model_tag, status=status))
    return out
