"""Command-line entry point."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .difficulty import SelectionPolicy, annotate, estimate_error_rates, select_training_set
from .gateway.client import SolverGateway
from .gateway.config import SkillProfile, SolverConfig
from .geometry.build import build_diagram
from .geometry.diagram import GeometryError, load_spec
from .geometry.render import write_svg
from .grpo.losses import GrpoHyperparams
from .grpo.policy import ToyPolicy
from .grpo.train import train_grpo, train_sft
from .orchestrator.config import LoopConfig, SynthesisConfig, load_config
from .orchestrator.evolve import build_seed_dataset, evolve_dataset
from .orchestrator.loop import complete_external, run_loop
from .orchestrator.schedule import PRESETS, SCOPES
from .orchestrator.stats import stats_file
from .records import read_jsonl, write_json, write_jsonl

BACKEND_ALIASES = {"sim": "simulated", "simulated": "simulated", "oracle": "oracle", "http": "http"}


def _print(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _solver(args, iteration: int) -> SolverConfig:
    backend = BACKEND_ALIASES[args.solver]
    base = SolverConfig.from_env() if backend == "http" else SolverConfig()
    return replace(base, backend=backend, seed=args.seed, iteration=iteration,
                   skill=SkillProfile(args.p0, args.slope, args.delta))


def cmd_seed(args) -> int:
    out = Path(args.out)
    records = build_seed_dataset(args.n, args.seed, SynthesisConfig(), out.parent)
    write_jsonl(out, records)
    print(f"wrote {len(records)} seed records to {out}")
    return 0


def cmd_evolve(args) -> int:
    records = read_jsonl(args.dataset)
    t = args.iteration
    frontier = [r for r in records if r.iteration == t] if not args.all else records
    out = Path(args.out)
    with SolverGateway(_solver(args, t), transcripts=args.transcripts) as gw:
        evolved, passed, report = evolve_dataset(frontier, gw, SynthesisConfig(), args.seed, t, out.parent,
                                                 args.workers)
    write_jsonl(out, passed + evolved)
    if args.report:
        write_json(args.report, {"iteration": t, "evolved": len(evolved), "passed_through": len(passed),
                                 "samples": report})
    print(f"evolved {len(evolved)} of {len(frontier)} samples ({len(passed)} passed through) -> {out}")
    return 0


def cmd_filter(args) -> int:
    records = read_jsonl(args.dataset)
    policy = SelectionPolicy(args.threshold, not args.strict, args.k)
    with SolverGateway(_solver(args, args.iteration), transcripts=args.transcripts) as gw:
        estimates = estimate_error_rates(records, gw, policy, args.workers)
    retained, report = select_training_set(estimates, policy)
    annotated = annotate(records, estimates, retained)
    if args.out:
        write_jsonl(args.out, [r for r in annotated if r.status == "active"])
    if args.report:
        write_json(args.report, report)
    print(f"retained {report['retained']}/{report['total']} (unevaluated {report['unevaluated']})")
    return 0


def cmd_loop(args) -> int:
    cfg = load_config(args.config) if args.config else LoopConfig()
    overrides = {}
    for key in ("iterations", "seed", "preset", "scope"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.trainer:
        overrides["train"] = replace(cfg.train, trainer=args.trainer)
    cfg = replace(cfg, **overrides)
    if args.complete is not None:
        ids = json.loads(args.checkpoints or "{}")
        complete_external(args.workdir, args.complete, ids)
    manifests = run_loop(cfg, args.workdir)
    for m in manifests:
        ev = m.stats["evolved"]
        print(f"t={m.iteration} phases={'+'.join(m.phases)} status={m.status} evolved={ev['count']} "
              f"retained={m.stats['retained']} mean_len={ev['mean_reasoning_length']:.2f} "
              f"mean_aux={ev['mean_aux_count']:.2f}")
    return 0


def cmd_grpo_demo(args) -> int:
    tasks = [(f"toy question {i}", ans) for i, ans in enumerate(args.answers)]
    policy = ToyPolicy.initial(args.features)
    policy, _ = train_sft(policy, tasks, args.sft_lr, args.sft_epochs, len(tasks))
    hp = GrpoHyperparams(epsilon=args.epsilon, beta=args.beta, lr=args.lr)
    _, history = train_grpo(policy, tasks, hp, args.steps, args.group_size, args.seed, metrics_path=args.metrics)
    for m in history:
        print(m.to_json())
    return 0


def cmd_stats(args) -> int:
    report = stats_file(args.dataset)
    _print(report)
    return 1 if report["malformed"] else 0


def cmd_render(args) -> int:
    try:
        d = build_diagram(load_spec(args.spec))
    except GeometryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    write_svg(d, args.out)
    print(f"wrote {args.out}")
    return 0


def _solver_flags(p: argparse.ArgumentParser, default: str) -> None:
    p.add_argument("--solver", choices=sorted(BACKEND_ALIASES), default=default)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p0", type=float, default=0.5, help="simulated solver base accuracy")
    p.add_argument("--delta", type=float, default=0.0, help="simulated accuracy gain per iteration")
    p.add_argument("--slope", type=float, default=0.0, help="simulated accuracy loss per difficulty unit")
    p.add_argument("--iteration", type=int, default=1)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--transcripts", help="append request/response transcripts to this JSONL file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coevolve", description="Geometry data/model co-evolution toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("seed", help="build a seed dataset from the built-in diagram corpus")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_seed)

    p = sub.add_parser("evolve", help="evolve the records created at --iteration")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--all", action="store_true", help="evolve every record, not just the frontier")
    _solver_flags(p, "oracle")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("filter", help="estimate error rates and keep samples at or above the threshold")
    p.add_argument("--dataset", required=True)
    p.add_argument("--k", type=int, default=32)
    p.add_argument("--threshold", type=float, default=0.3)
    p.add_argument("--strict", action="store_true", help="use > instead of >=")
    p.add_argument("--out")
    p.add_argument("--report")
    _solver_flags(p, "sim")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("loop", help="run (or resume) the iteration loop")
    p.add_argument("--iterations", type=int)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--workdir", default="runs/default")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--scope", choices=SCOPES)
    p.add_argument("--trainer", choices=("toy", "external"))
    p.add_argument("--complete", type=int, help="iteration whose external checkpoints are supplied")
    p.add_argument("--checkpoints", help='JSON object, e.g. {"SFT": "ckpt-a", "RL": "ckpt-b"}')
    p.set_defaults(func=cmd_loop)

    p = sub.add_parser("grpo-demo", help="SFT warm-up then GRPO on the toy policy; prints per-step metrics")
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--group-size", type=int, default=8)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--features", type=int, default=32)
    p.add_argument("--sft-lr", type=float, default=2.0)
    p.add_argument("--sft-epochs", type=int, default=10)
    p.add_argument("--answers", nargs="+", default=["3.5", "12", "7", "0.25"])
    p.add_argument("--metrics", help="write metrics JSONL here")
    p.set_defaults(func=cmd_grpo_demo)

    p = sub.add_parser("stats", help="summarise a dataset")
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("render", help="render a diagram spec to SVG")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
