import dataclasses
import json

import pytest

from coevolve.geometry import build_diagram
from coevolve.orchestrator import (
    ConfigError,
    IterationPlan,
    LoopConfig,
    LoopError,
    PlanError,
    SchedulePlan,
    SynthesisConfig,
    TrainJobSpec,
    complete_external,
    parse_config,
    run_loop,
    stats,
)
from coevolve.orchestrator.config import ToyTrainConfig, derive_seed
from coevolve.orchestrator.evolve import build_seed_dataset, evolve_dataset, seed_record
from coevolve.orchestrator.loop import AWAITING, COMPLETE, Workdir
from coevolve.orchestrator.schedule import INITIAL, PREVIOUS_RL, RL_ONLY, SFT_RL
from coevolve.gateway import SolverConfig, SolverGateway
from test_geometry import spec

SMALL = LoopConfig(iterations=3, synthesis=SynthesisConfig(seed_size=6), workers=2)

# preset -> expected (phases, warm-start source) for iterations 1..3
TABLE = {
    "sft-rl-warm": [(("SFT", "RL"), "initial"), (("SFT", "RL"), "t1-rl"), (("SFT", "RL"), "t2-rl")],
    "rl-only-warm": [(("SFT", "RL"), "initial"), (("RL",), "t1-rl"), (("RL",), "t2-rl")],
    "sft-rl-initial": [(("SFT", "RL"), "initial"), (("SFT", "RL"), "initial"), (("SFT", "RL"), "initial")],
}


def test_presets_and_plan_validation():
    p = SchedulePlan.preset("rl-only-warm", 3)
    assert [it.phases for it in p.iterations] == [("SFT", "RL"), ("RL",), ("RL",)]
    assert p.at(1).warm_start == INITIAL and p.at(2).warm_start == PREVIOUS_RL
    assert SchedulePlan.default(2) == SchedulePlan.preset("rl-only-warm", 2)
    assert SchedulePlan.preset("sft-rl-initial", 0).T == 0
    with pytest.raises(PlanError):
        SchedulePlan((IterationPlan(RL_ONLY),))
    with pytest.raises(PlanError):
        SchedulePlan.preset("mystery", 3)
    with pytest.raises(PlanError):
        p.at(4)


def test_train_job_spec_validation():
    TrainJobSpec("SFT", "d.jsonl", "initial", 1e-5)
    with pytest.raises(ValueError):
        TrainJobSpec("RL", "d.jsonl", "initial", 1e-6)  # RL needs group size etc.
    with pytest.raises(ValueError):
        TrainJobSpec("DPO", "d.jsonl", "initial", 1e-6)


def _warm_prefix(cid):
    return cid.rsplit("-", 1)[0]


@pytest.mark.parametrize("preset", sorted(TABLE))
def test_manifests_follow_schedule(tmp_path, preset):
    ms = run_loop(dataclasses.replace(SMALL, preset=preset), tmp_path)
    assert [m.iteration for m in ms] == [1, 2, 3]
    for m, (phases, warm) in zip(ms, TABLE[preset]):
        on_disk = json.loads((tmp_path / Workdir.manifest(m.iteration)).read_text())
        assert tuple(on_disk["schedule"]["phases"]) == phases
        assert _warm_prefix(on_disk["checkpoints"]["warm_start"]) == warm
        assert on_disk["status"] == COMPLETE
        assert (on_disk["checkpoints"]["SFT"] is not None) == ("SFT" in phases)
    for prev, m in zip(ms, ms[1:]):
        if m.schedule["warm_start"] == PREVIOUS_RL:
            assert m.checkpoints["warm_start"] == prev.checkpoints["RL"]


def test_zero_iterations(tmp_path):
    assert run_loop(dataclasses.replace(SMALL, iterations=0), tmp_path) == []
    assert not any(tmp_path.iterdir())


def _snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*"))
            if p.is_file() and p.suffix in (".jsonl", ".npz")}


def test_rerun_and_resume_reproduce(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_loop(SMALL, a)
    run_loop(SMALL, b)
    assert _snapshot(a) == _snapshot(b)
    before = _snapshot(a)
    for t in (2, 3):
        (a / Workdir.manifest(t)).unlink()
    ms = run_loop(SMALL, a)
    assert [m.iteration for m in ms] == [1, 2, 3]
    assert _snapshot(a) == before


def test_resume_rejects_mismatched_plan(tmp_path):
    run_loop(dataclasses.replace(SMALL, iterations=2), tmp_path)
    with pytest.raises(LoopError):
        run_loop(dataclasses.replace(SMALL, preset="sft-rl-warm"), tmp_path)


def test_loop_datasets_and_selection(tmp_path):
    ms = run_loop(SMALL, tmp_path)
    wd = Workdir(tmp_path)
    for m in ms:
        train = wd.read(m.train_dataset)
        assert all(r.status == "active" and r.error_rate >= 0.3 and r.model_tag == m.solver_tag for r in train)
        assert m.solver_tag == f"simulated@t{m.iteration}"
        evolved = [r for r in wd.read(m.evolved_dataset) if r.iteration == m.iteration + 1]
        assert all(r.parent_id and r.id == f"{r.parent_id}.{m.iteration + 1}" for r in evolved)
        assert len(evolved) == m.stats["evolved"]["count"]
    lens = [m.stats["evolved"]["mean_reasoning_length"] for m in ms]
    aux = [m.stats["evolved"]["mean_aux_count"] for m in ms]
    assert lens == sorted(lens) and aux == sorted(aux)


def test_replace_pool_and_cumulative_scope(tmp_path):
    cfg = dataclasses.replace(SMALL, iterations=2, scope="cumulative",
                              synthesis=SynthesisConfig(seed_size=6, pool="replace"))
    ms = run_loop(cfg, tmp_path)
    wd = Workdir(tmp_path)
    pool = wd.read(ms[0].evolved_dataset)
    assert all(r.iteration == 2 for r in pool)  # seeds replaced by their evolved children
    assert ms[1].stats["candidates"] == ms[1].stats["pool_size"]


def test_external_trainer_pauses_and_resumes(tmp_path):
    cfg = dataclasses.replace(SMALL, iterations=2, train=ToyTrainConfig(trainer="external"))
    ms = run_loop(cfg, tmp_path)
    assert len(ms) == 1 and ms[0].status == AWAITING
    jobs = [json.loads((tmp_path / j["path"]).read_text()) for j in ms[0].jobs]
    assert [j["phase"] for j in jobs] == ["SFT", "RL"]
    assert jobs[1]["warm_start"] == "job:t1-sft" and jobs[1]["group_size"] == 32
    assert run_loop(cfg, tmp_path)[-1].status == AWAITING  # still paused
    with pytest.raises(LoopError):
        complete_external(tmp_path, 1, {"SFT": "ckpt-a"})
    complete_external(tmp_path, 1, {"SFT": "ckpt-a", "RL": "ckpt-b"})
    ms = run_loop(cfg, tmp_path)
    assert [m.status for m in ms] == [COMPLETE, AWAITING]
    assert ms[1].checkpoints["warm_start"] == "ckpt-b" and ms[1].phases == ("RL",)
    assert ms[1].jobs[0]["group_size"] == 8


def test_evolve_is_deterministic_and_passes_through_bare_segment(tmp_path):
    seeds = build_seed_dataset(4, 3, SynthesisConfig())
    bare = seed_record("bare", build_diagram(spec({"A": (0, 0), "B": (3, 0)}, [("A", "B")])), seed=0)
    runs = []
    for _ in range(2):
        with SolverGateway(SolverConfig(backend="oracle")) as gw:
            runs.append(evolve_dataset(seeds + [bare], gw, SynthesisConfig(), 3, 1, None, 2))
    assert runs[0] == runs[1]
    evolved, passed, report = runs[0]
    assert [r.id for r in passed] == ["bare"]
    assert {r["status"] for r in report if r["id"] == "bare"} == {"too-simple"}
    assert all(r.aux_count == 1 and r.iteration == 2 for r in evolved)


def test_stats_examples(tmp_path):
    empty = stats([])
    assert empty["count"] == 0 and empty["reasoning_length"]["mean"] == 0.0
    r = seed_record("s", build_diagram(spec({"A": (0, 0), "B": (3, 0), "C": (0, 4)},
                                            [("A", "B"), ("A", "C"), ("B", "C")])), seed=0)
    s = stats([dataclasses.replace(r, reasoning="Step 1: x")])
    assert s["reasoning_length"]["mean"] == 3 and s["count"] == 1


def test_config_parsing():
    cfg = parse_config({
        "schedule": {"iterations": 2, "preset": "sft-rl-initial", "seed": 5},
        "filter": {"threshold": 0.5, "k": 16},
        "grpo": {"epsilon": 0.1, "group_sizes": [16, 4], "rl_steps": 2},
        "solver": {"p0": 0.6},
    })
    assert cfg.plan.at(2).warm_start == INITIAL and cfg.plan.at(2).mode == SFT_RL
    assert cfg.filter.k == 16 and cfg.grpo.group_size(2) == 4 and cfg.train.rl_steps == 2
    assert parse_config(cfg.to_dict()) == cfg
    for bad in ({"nope": {}}, {"filter": {"tau": 0.3}}, {"filter": {"threshold": 2}}, {"schedule": {"T": 3}}):
        with pytest.raises(ConfigError):
            parse_config(bad)


def test_derive_seed_stable():
    assert derive_seed(0, 1, "rl") == derive_seed(0, 1, "rl") != derive_seed(0, 2, "rl")
    assert 0 <= derive_seed(123, "x") < 2**63
