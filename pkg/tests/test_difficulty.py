import dataclasses
import random

import pytest

from coevolve.difficulty import (
    ErrorRateEstimate,
    SelectionPolicy,
    annotate,
    bin_index,
    difficulty_histogram,
    estimate_error_rate,
    estimate_error_rates,
    select_training_set,
)
from coevolve.gateway import SkillProfile, SolverConfig, SolverGateway, TransportError
from coevolve.geometry import build_diagram
from coevolve.orchestrator.evolve import seed_record
from test_geometry import RIGHT


@pytest.fixture(scope="module")
def base():
    return seed_record("s0", build_diagram(RIGHT), seed=0)


def samples(base, n):
    return [dataclasses.replace(base, id=f"s{i:03d}") for i in range(n)]


def simulated(p, seed=0):
    return SolverGateway(SolverConfig(backend="simulated", seed=seed, skill=SkillProfile(p0=p)))


def est(sid, wrong, k=32):
    return ErrorRateEstimate(sid, k, wrong, "m")


def test_oracle_zero_error(base):
    e = estimate_error_rate(base, SolverGateway(SolverConfig(backend="oracle")))
    assert e.error_rate == 0.0 and len(e.transcript_ids) == 32


def test_hopeless_solver_full_error(base):
    assert estimate_error_rate(base, simulated(0.0)).error_rate == 1.0


def test_reproducible_with_seed(base):
    xs = samples(base, 10)
    a = estimate_error_rates(xs, simulated(0.5, seed=7))
    b = estimate_error_rates(xs, simulated(0.5, seed=7), workers=1)
    assert [e.wrong for e in a] == [e.wrong for e in b]
    assert [e.sample_id for e in a] == [x.id for x in xs]


def test_selection_examples():
    es = [est("a", 0), est("b", 10), est("c", 29)]  # 0, 0.3125, 0.906
    ids, report = select_training_set(es)
    assert ids == ["b", "c"]
    assert report["retained"] == 2 and report["data_size"] == "2/3"
    exact = [ErrorRateEstimate("x", 10, 3), ErrorRateEstimate("y", 10, 2)]
    assert select_training_set(exact)[0] == ["x"]  # 0.3 is admitted
    assert select_training_set(exact, SelectionPolicy(inclusive=False))[0] == []
    assert select_training_set(es, SelectionPolicy(threshold=1.0))[0] == []
    assert select_training_set(es, SelectionPolicy(threshold=0.0))[0] == ["a", "b", "c"]


def test_selection_monotone_in_threshold():
    rng = random.Random(3)
    es = [est(f"s{i}", rng.randint(0, 32)) for i in range(200)]
    sizes = [len(select_training_set(es, SelectionPolicy(threshold=t / 20))[0]) for t in range(21)]
    assert sizes == sorted(sizes, reverse=True)
    for t in (0.1, 0.5, 0.8):
        hi = set(select_training_set(es, SelectionPolicy(threshold=t + 0.1))[0])
        assert hi <= set(select_training_set(es, SelectionPolicy(threshold=t))[0])


class FlakyGateway:
    tag = "flaky"

    def __init__(self, inner, bad):
        self.inner, self.bad = inner, bad

    def answer(self, record, attempt=0):
        if record.id in self.bad:
            raise TransportError("connection refused")
        return self.inner.answer(record, attempt)


def test_transport_failure_is_unevaluated(base):
    xs = samples(base, 4)
    es = estimate_error_rates(xs, FlakyGateway(simulated(0.0), {"s001"}))
    assert [e.status for e in es] == ["evaluated", "unevaluated", "evaluated", "evaluated"]
    assert es[1].error_rate is None and "refused" in es[1].error
    ids, report = select_training_set(es)
    assert "s001" not in ids and report["unevaluated_ids"] == ["s001"]
    out = annotate(xs, es, ids)
    assert [r.status for r in out] == ["active", "unevaluated", "active", "active"]
    assert out[0].error_rate == 1.0 and out[0].error_k == 32


def test_histogram_matches_brute_force():
    rng = random.Random(5)
    es = [est(f"s{i}", rng.randint(0, 32)) for i in range(300)]
    h = difficulty_histogram(es, "m", 2)
    expected = [0] * 11
    for e in es:
        r = e.wrong / 32
        k = 0 if r == 0 else next(k for k in range(1, 11) if r <= k / 10 + 1e-12)
        expected[k] += 1
    assert list(h.counts) == expected and h.total == 300
    assert h.fully_correct == sum(e.wrong == 0 for e in es)
    assert h.completely_wrong == sum(e.wrong == 32 for e in es)
    assert h.to_dict()["iteration"] == 2


def test_histogram_edges():
    assert difficulty_histogram([]).total == 0
    assert bin_index(1.0) == 10 and bin_index(0.0) == 0
    assert bin_index(0.1) == 1 and bin_index(0.3) == 3 and bin_index(0.31) == 4
    h = difficulty_histogram([est("a", 32)])
    assert h.counts[10] == 1 and h.completely_wrong == 1


def test_policy_validation():
    with pytest.raises(ValueError):
        SelectionPolicy(threshold=1.5)
    with pytest.raises(ValueError):
        SelectionPolicy(k=0)
