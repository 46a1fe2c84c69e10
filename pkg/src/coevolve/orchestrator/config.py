"""Loop configuration and its TOML form."""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..difficulty import SelectionPolicy
from ..gateway.config import RetryPolicy, SkillProfile, SolverConfig
from ..geometry.corpus import FAMILIES
from ..grpo.losses import GrpoHyperparams
from ..synthesis.templates import ALL_PRINCIPLES, Principle
from .schedule import CURRENT, DEFAULT_PRESET, SCOPES, SchedulePlan

POOL_MODES = ("accumulate", "replace")
TRAINERS = ("toy", "external")


class ConfigError(ValueError):
    pass


def derive_seed(root: int, *parts: Any) -> int:
    """Independent 63-bit seed for one (iteration, stage, sample, ...) slot."""
    key = "|".join(str(p) for p in (root, *parts)).encode("utf-8")
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


@dataclass(frozen=True)
class SynthesisConfig:
    seed_size: int = 20
    families: tuple[str, ...] = FAMILIES
    principles: tuple[Principle, ...] = ALL_PRINCIPLES
    m_range: tuple[int, int] = (4, 10)
    consistency_attempts: int = 3
    pool: str = "accumulate"

    def __post_init__(self) -> None:
        object.__setattr__(self, "principles", tuple(sorted(set(self.principles), key=lambda p: p.value)))
        lo, hi = self.m_range
        if not 1 <= lo <= hi:
            raise ConfigError("m_range must satisfy 1 <= min <= max")
        if self.pool not in POOL_MODES:
            raise ConfigError(f"pool must be one of {POOL_MODES}")
        if self.consistency_attempts < 1:
            raise ConfigError("consistency_attempts must be >= 1")


@dataclass(frozen=True)
class ToyTrainConfig:
    """In-process trainer settings (toy scale) plus the values written into external job specs."""

    trainer: str = "toy"
    n_features: int = 32
    sft_lr: float = 4.0
    sft_epochs: int = 20
    sft_batch_size: int = 16
    rl_steps: int = 4
    max_rl_tasks: int = 16
    # external job defaults mirror the reported training parameters
    job_sft_lr: float = 1e-5
    job_rl_lr: float = 1e-6
    job_epochs: int = 2
    job_batch_size: int = 128
    job_temperature: float = 0.9

    def __post_init__(self) -> None:
        if self.trainer not in TRAINERS:
            raise ConfigError(f"trainer must be one of {TRAINERS}")


@dataclass(frozen=True)
class SolverSettings:
    evolution_backend: str = "oracle"
    filter_backend: str = "simulated"
    p0: float = 0.4
    delta: float = 0.2
    slope: float = 0.05
    base_url: str | None = None
    model: str | None = None
    max_in_flight: int = 4
    max_attempts: int = 3
    timeout: float = 60.0

    def solver(self, backend: str, seed: int, iteration: int) -> SolverConfig:
        base = SolverConfig.from_env() if backend == "http" else SolverConfig()
        return replace(
            base,
            backend=backend,
            base_url=self.base_url or base.base_url,
            model=self.model or base.model,
            max_in_flight=self.max_in_flight,
            retry=RetryPolicy(self.max_attempts),
            timeout=self.timeout,
            seed=seed,
            skill=SkillProfile(self.p0, self.slope, self.delta),
            iteration=iteration,
        )


@dataclass(frozen=True)
class LoopConfig:
    iterations: int = 3
    preset: str = DEFAULT_PRESET
    scope: str = CURRENT
    seed: int = 0
    synthesis: SynthesisConfig = SynthesisConfig()
    filter: SelectionPolicy = SelectionPolicy()
    grpo: GrpoHyperparams = GrpoHyperparams()
    train: ToyTrainConfig = ToyTrainConfig()
    solver: SolverSettings = SolverSettings()
    workers: int = 4
    plan_override: SchedulePlan | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if self.scope not in SCOPES:
            raise ConfigError(f"scope must be one of {SCOPES}")

    @property
    def plan(self) -> SchedulePlan:
        if self.plan_override is not None:
            return self.plan_override
        return SchedulePlan.preset(self.preset, self.iterations, self.scope)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schedule": {"iterations": self.iterations, "preset": self.preset, "scope": self.scope,
                         "seed": self.seed, "workers": self.workers},
            "synthesis": {
                "seed_size": self.synthesis.seed_size,
                "families": list(self.synthesis.families),
                "principles": [p.value for p in self.synthesis.principles],
                "m_range": list(self.synthesis.m_range),
                "consistency_attempts": self.synthesis.consistency_attempts,
                "pool": self.synthesis.pool,
            },
            "filter": {"threshold": self.filter.threshold, "inclusive": self.filter.inclusive, "k": self.filter.k},
            "grpo": {
                "epsilon": self.grpo.epsilon,
                "beta": self.grpo.beta,
                "lr": self.grpo.lr,
                "group_sizes": list(self.grpo.group_sizes),
                **{f.name: getattr(self.train, f.name) for f in fields(self.train)},
            },
            "solver": {f.name: getattr(self.solver, f.name) for f in fields(self.solver)},
        }


def _pick(section: dict, cls, name: str, convert: dict | None = None) -> dict:
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"[{name}] unknown keys {unknown}")
    out = dict(section)
    for key, fn in (convert or {}).items():
        if key in out:
            out[key] = fn(out[key])
    return out


def parse_config(raw: dict[str, Any]) -> LoopConfig:
    sections = {"schedule", "synthesis", "filter", "grpo", "solver"}
    unknown = sorted(set(raw) - sections)
    if unknown:
        raise ConfigError(f"unknown config sections {unknown}")
    sched = dict(raw.get("schedule", {}))
    bad = sorted(set(sched) - {"iterations", "preset", "scope", "seed", "workers"})
    if bad:
        raise ConfigError(f"[schedule] unknown keys {bad}")
    try:
        synthesis = SynthesisConfig(**_pick(raw.get("synthesis", {}), SynthesisConfig, "synthesis", {
            "families": tuple,
            "principles": lambda xs: tuple(Principle(x) for x in xs),
            "m_range": tuple,
        }))
        filt = SelectionPolicy(**_pick(raw.get("filter", {}), SelectionPolicy, "filter"))
        grpo_raw = dict(raw.get("grpo", {}))
        hp_keys = {f.name for f in fields(GrpoHyperparams)}
        hp = GrpoHyperparams(**_pick({k: v for k, v in grpo_raw.items() if k in hp_keys}, GrpoHyperparams, "grpo",
                                     {"group_sizes": tuple}))
        train = ToyTrainConfig(**_pick({k: v for k, v in grpo_raw.items() if k not in hp_keys}, ToyTrainConfig, "grpo"))
        solver = SolverSettings(**_pick(raw.get("solver", {}), SolverSettings, "solver"))
        return LoopConfig(synthesis=synthesis, filter=filt, grpo=hp, train=train, solver=solver, **sched)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> LoopConfig:
    with open(path, "rb") as fh:
        return parse_config(tomllib.load(fh))
