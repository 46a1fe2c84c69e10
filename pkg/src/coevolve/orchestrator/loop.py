"""The iteration loop: evolve, filter by error rate, train, persist a manifest."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from statistics import fmean
from typing import Any, Mapping

import numpy as np

from ..difficulty import SelectionPolicy, annotate, estimate_error_rates, select_training_set
from ..gateway.client import SolverGateway
from ..grpo.policy import ToyPolicy
from ..grpo.train import train_grpo, train_sft
from ..records import SampleRecord, read_jsonl, write_json, write_jsonl
from ..synthesis.compose import reasoning_length
from .config import LoopConfig, derive_seed
from .evolve import build_seed_dataset, evolve_dataset
from .schedule import CUMULATIVE, INITIAL, IterationPlan, PlanError, SchedulePlan, TrainJobSpec

COMPLETE = "complete"
AWAITING = "awaiting-checkpoints"


class LoopError(RuntimeError):
    pass


@dataclass(frozen=True)
class IterationManifest:
    iteration: int
    input_dataset: str
    evolved_dataset: str
    candidates_dataset: str
    train_dataset: str
    evolve_report: str
    filter_report: str
    schedule: dict[str, Any]
    solver_tag: str
    checkpoints: dict[str, str | None]
    jobs: list[dict[str, Any]] = field(default_factory=list)
    metrics: str | None = None
    stats: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    status: str = COMPLETE
    created_at: str = ""

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "IterationManifest":
        return cls(**raw)

    @property
    def phases(self) -> tuple[str, ...]:
        return tuple(self.schedule["phases"])


class Workdir:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path(self, rel: str) -> Path:
        return self.root / rel

    @staticmethod
    def dataset(t: int) -> str:
        return f"datasets/D{t}.jsonl"

    @staticmethod
    def manifest(t: int) -> str:
        return f"manifests/manifest_t{t}.json"

    def manifests(self) -> list[IterationManifest]:
        out = []
        t = 1
        while self.path(self.manifest(t)).exists():
            out.append(IterationManifest.from_dict(json.loads(self.path(self.manifest(t)).read_text("utf-8"))))
            t += 1
        return out

    def read(self, rel: str) -> list[SampleRecord]:
        return read_jsonl(self.path(rel))

    # checkpoints --------------------------------------------------------------------

    def save_policy(self, policy: ToyPolicy, prefix: str) -> str:
        digest = hashlib.sha1(np.ascontiguousarray(policy.theta).tobytes()).hexdigest()[:12]
        cid = f"{prefix}-{digest}"
        path = self.path(f"checkpoints/{cid}.npz")
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_name(f".{cid}.tmp.npz")
            np.savez(tmp, theta=policy.theta, vocab=np.array(policy.vocab))
            tmp.replace(path)
        return cid

    def load_policy(self, cid: str) -> ToyPolicy:
        path = self.path(f"checkpoints/{cid}.npz")
        if not path.exists():
            raise LoopError(f"checkpoint {cid} not found")
        with np.load(path) as data:
            return ToyPolicy(data["theta"], tuple(str(v) for v in data["vocab"]))


def _mean(values) -> float:
    values = list(values)
    return fmean(values) if values else 0.0


def _dataset_stats(records: list[SampleRecord]) -> dict[str, float]:
    return {
        "count": len(records),
        "mean_reasoning_length": _mean(reasoning_length(r.reasoning) for r in records),
        "mean_aux_count": _mean(r.aux_count for r in records),
    }


def ensure_seed_dataset(cfg: LoopConfig, wd: Workdir) -> str:
    rel = wd.dataset(1)
    if not wd.path(rel).exists():
        records = build_seed_dataset(cfg.synthesis.seed_size, cfg.seed, cfg.synthesis, wd.path("datasets"))
        write_jsonl(wd.path(rel), records)
    return rel


def _warm_start(plan: IterationPlan, t: int, history: list[IterationManifest], initial_id: str) -> str:
    if plan.warm_start == INITIAL or t == 1:
        return initial_id
    prev = history[-1]
    rl = prev.checkpoints.get("RL")
    if not rl:
        raise LoopError(f"iteration {t - 1} has no RL checkpoint to warm-start from")
    return rl


def _jobs(cfg: LoopConfig, plan: IterationPlan, t: int, train_rel: str, warm: str) -> list[TrainJobSpec]:
    tc = cfg.train
    jobs = []
    source = warm
    for phase in plan.phases:
        job_id = f"t{t}-{phase.lower()}"
        if phase == "SFT":
            jobs.append(TrainJobSpec("SFT", train_rel, source, tc.job_sft_lr, tc.job_epochs, tc.job_batch_size,
                                     job_id=job_id))
        else:
            jobs.append(TrainJobSpec("RL", train_rel, source, tc.job_rl_lr, tc.job_epochs, tc.job_batch_size,
                                     cfg.grpo.group_size(t), cfg.grpo.epsilon, cfg.grpo.beta, tc.job_temperature,
                                     job_id=job_id))
        source = f"job:{job_id}"
    return jobs


def _train_toy(cfg: LoopConfig, plan: IterationPlan, t: int, train: list[SampleRecord], policy: ToyPolicy,
               wd: Workdir) -> tuple[dict[str, str | None], str | None]:
    tasks = [(r.question, r.ground_truth) for r in train]
    checkpoints: dict[str, str | None] = {"SFT": None, "RL": None}
    metrics_rel = None
    if "SFT" in plan.phases:
        if tasks:
            tc = cfg.train
            policy, _ = train_sft(policy, tasks, tc.sft_lr, tc.sft_epochs, tc.sft_batch_size)
        checkpoints["SFT"] = wd.save_policy(policy, f"t{t}-sft")
    if tasks:
        metrics_rel = f"metrics/grpo_t{t}.jsonl"
        wd.path(metrics_rel).parent.mkdir(parents=True, exist_ok=True)
        policy, _ = train_grpo(policy, tasks[: cfg.train.max_rl_tasks], cfg.grpo, cfg.train.rl_steps,
                               cfg.grpo.group_size(t), derive_seed(cfg.seed, t, "rl"),
                               metrics_path=wd.path(metrics_rel))
    checkpoints["RL"] = wd.save_policy(policy, f"t{t}-rl")
    return checkpoints, metrics_rel


def run_iteration(
    t: int,
    history: list[IterationManifest],
    plan: SchedulePlan,
    cfg: LoopConfig,
    workdir: str | Path,
    checkpoint_ids: Mapping[str, str] | None = None,
) -> IterationManifest:
    """Run iteration ``t`` (1-based) given manifests for 1..t-1 and write its manifest."""
    wd = Workdir(workdir)
    if len(history) != t - 1 or [m.iteration for m in history] != list(range(1, t)):
        raise LoopError(f"iteration {t} needs manifests for iterations 1..{t - 1}")
    if history and history[-1].status != COMPLETE:
        raise LoopError(f"iteration {t - 1} is still {history[-1].status}")
    try:
        it_plan = plan.at(t)
    except PlanError as exc:
        raise LoopError(str(exc)) from None

    # evolve D_t -> D_{t+1}
    input_rel = wd.dataset(t) if t == 1 else history[-1].evolved_dataset
    if t == 1:
        ensure_seed_dataset(cfg, wd)
    pool = wd.read(input_rel)
    frontier = [r for r in pool if r.iteration == t]
    evo_cfg = cfg.solver.solver(cfg.solver.evolution_backend, derive_seed(cfg.seed, t, "evolve"), t)
    with SolverGateway(evo_cfg, transcripts=wd.path(f"transcripts/evolve_t{t}.jsonl")
                       if evo_cfg.backend == "http" else None) as gw:
        evolved, passed, evo_report = evolve_dataset(frontier, gw, cfg.synthesis, cfg.seed, t,
                                                     wd.path("datasets"), cfg.workers)
    if cfg.synthesis.pool == "accumulate":
        next_pool = pool + evolved
    else:
        next_pool = passed + evolved
    evolved_rel = wd.dataset(t + 1)
    write_jsonl(wd.path(evolved_rel), next_pool)
    evolve_report_rel = f"reports/evolve_t{t}.json"
    write_json(wd.path(evolve_report_rel), {"iteration": t, "frontier": len(frontier), "evolved": len(evolved),
                                            "passed_through": len(passed), "samples": evo_report})

    # error-rate selection with the iteration-t solver
    candidates = next_pool if it_plan.scope == CUMULATIVE else evolved
    policy: SelectionPolicy = cfg.filter
    filt_cfg = cfg.solver.solver(cfg.solver.filter_backend, derive_seed(cfg.seed, t, "filter"), t)
    with SolverGateway(filt_cfg, transcripts=wd.path(f"transcripts/filter_t{t}.jsonl")
                       if filt_cfg.backend == "http" else None) as gw:
        estimates = estimate_error_rates(candidates, gw, policy, cfg.workers)
        tag = gw.tag
    retained, report = select_training_set(estimates, policy, pool_size=len(next_pool))
    report["iteration"] = t
    report["scope"] = it_plan.scope
    annotated = annotate(candidates, estimates, retained)
    candidates_rel = f"datasets/candidates_t{t}.jsonl"
    write_jsonl(wd.path(candidates_rel), annotated)
    train = [r for r in annotated if r.status == "active"]
    train_rel = f"datasets/train_t{t}.jsonl"
    write_jsonl(wd.path(train_rel), train)
    filter_report_rel = f"reports/filter_t{t}.json"
    write_json(wd.path(filter_report_rel), report)

    # train
    initial_id = wd.save_policy(ToyPolicy.initial(cfg.train.n_features), "initial")
    warm = _warm_start(it_plan, t, history, initial_id)
    jobs: list[dict[str, Any]] = []
    metrics_rel = None
    status = COMPLETE
    if cfg.train.trainer == "toy":
        checkpoints, metrics_rel = _train_toy(cfg, it_plan, t, train, wd.load_policy(warm), wd)
    else:
        specs = _jobs(cfg, it_plan, t, train_rel, warm)
        for spec in specs:
            rel = f"jobs/{spec.job_id}.json"
            write_json(wd.path(rel), spec.to_dict())
            jobs.append({**spec.to_dict(), "path": rel})
        checkpoints = {"SFT": None, "RL": None}
        supplied = dict(checkpoint_ids or {})
        if all(p in supplied for p in it_plan.phases):
            checkpoints.update({p: supplied[p] for p in it_plan.phases})
        else:
            status = AWAITING
    checkpoints = {"warm_start": warm, **checkpoints}

    manifest = IterationManifest(
        iteration=t,
        input_dataset=input_rel,
        evolved_dataset=evolved_rel,
        candidates_dataset=candidates_rel,
        train_dataset=train_rel,
        evolve_report=evolve_report_rel,
        filter_report=filter_report_rel,
        schedule={"mode": it_plan.mode, "warm_start": it_plan.warm_start, "scope": it_plan.scope,
                  "phases": list(it_plan.phases)},
        solver_tag=tag,
        checkpoints=checkpoints,
        jobs=jobs,
        metrics=metrics_rel,
        stats={
            "input": _dataset_stats(frontier),
            "evolved": _dataset_stats(evolved),
            "pool_size": len(next_pool),
            "passed_through": len(passed),
            "candidates": len(candidates),
            "retained": len(train),
            "unevaluated": report["unevaluated"],
        },
        seed=cfg.seed,
        status=status,
        created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    for rel in (input_rel, evolved_rel, candidates_rel, train_rel, evolve_report_rel, filter_report_rel):
        if not wd.path(rel).exists():
            raise LoopError(f"{rel} missing at manifest time")
    write_json(wd.path(Workdir.manifest(t)), manifest.to_dict())
    return manifest


def complete_external(workdir: str | Path, t: int, checkpoint_ids: Mapping[str, str]) -> IterationManifest:
    """Record externally trained checkpoint ids for a paused iteration."""
    wd = Workdir(workdir)
    path = wd.path(Workdir.manifest(t))
    m = IterationManifest.from_dict(json.loads(path.read_text("utf-8")))
    if m.status != AWAITING:
        raise LoopError(f"iteration {t} is not awaiting checkpoints")
    missing = [p for p in m.phases if p not in checkpoint_ids]
    if missing:
        raise LoopError(f"missing checkpoint ids for phases {missing}")
    checkpoints = {**m.checkpoints, **{p: checkpoint_ids[p] for p in m.phases}}
    done = IterationManifest.from_dict({**m.to_dict(), "checkpoints": checkpoints, "status": COMPLETE})
    write_json(path, done.to_dict())
    return done


def run_loop(cfg: LoopConfig, workdir: str | Path, plan: SchedulePlan | None = None) -> list[IterationManifest]:
    """Run the remaining iterations of ``plan``, resuming after any complete manifests on disk."""
    plan = plan or cfg.plan
    if plan.T == 0:
        return []
    wd = Workdir(workdir)
    history = wd.manifests()
    for m in history:
        if m.iteration > plan.T:
            raise LoopError("existing manifests extend beyond the plan")
        expected = plan.at(m.iteration)
        if tuple(m.schedule["phases"]) != expected.phases or m.schedule["warm_start"] != expected.warm_start:
            raise LoopError(f"manifest for iteration {m.iteration} does not match the plan")
    if history and history[-1].status != COMPLETE:
        return history
    for t in range(len(history) + 1, plan.T + 1):
        m = run_iteration(t, history, plan, cfg, workdir)
        history.append(m)
        if m.status != COMPLETE:
            break
    return history
