"""Per-iteration training schedules and external training job specs."""

from __future__ import annotations

from dataclasses import asdict, dataclass

SFT_RL = "SFT+RL"
RL_ONLY = "RL-only"
MODES = (SFT_RL, RL_ONLY)
PREVIOUS_RL = "previous-RL"
INITIAL = "initial"
WARM_STARTS = (PREVIOUS_RL, INITIAL)
CURRENT = "current"
CUMULATIVE = "cumulative"
SCOPES = (CURRENT, CUMULATIVE)


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class IterationPlan:
    mode: str = SFT_RL
    warm_start: str = PREVIOUS_RL
    scope: str = CURRENT

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise PlanError(f"unknown mode {self.mode!r}")
        if self.warm_start not in WARM_STARTS:
            raise PlanError(f"unknown warm start {self.warm_start!r}")
        if self.scope not in SCOPES:
            raise PlanError(f"unknown dataset scope {self.scope!r}")

    @property
    def phases(self) -> tuple[str, ...]:
        return ("SFT", "RL") if self.mode == SFT_RL else ("RL",)


# name -> (mode, warm start) for iterations >= 2; iteration 1 is always SFT+RL from the initial model
PRESETS = {
    "rl-only-warm": (RL_ONLY, PREVIOUS_RL),  # progressive updates, RL continuation (best regime)
    "sft-rl-warm": (SFT_RL, PREVIOUS_RL),  # progressive updates, SFT then RL again
    "sft-rl-initial": (SFT_RL, INITIAL),  # every iteration retrains from the initial model
    "rl-only-initial": (RL_ONLY, INITIAL),
}
DEFAULT_PRESET = "rl-only-warm"


@dataclass(frozen=True)
class SchedulePlan:
    iterations: tuple[IterationPlan, ...] = ()

    def __post_init__(self) -> None:
        its = tuple(self.iterations)
        object.__setattr__(self, "iterations", its)
        if its and its[0].mode != SFT_RL:
            raise PlanError("iteration 1 must run SFT+RL (warm-up)")

    @property
    def T(self) -> int:
        return len(self.iterations)

    def at(self, t: int) -> IterationPlan:
        if not 1 <= t <= self.T:
            raise PlanError(f"iteration {t} outside plan of length {self.T}")
        return self.iterations[t - 1]

    @classmethod
    def preset(cls, name: str, T: int, scope: str = CURRENT) -> "SchedulePlan":
        try:
            mode, warm = PRESETS[name]
        except KeyError:
            raise PlanError(f"unknown schedule preset {name!r}; expected one of {sorted(PRESETS)}") from None
        if T < 0:
            raise PlanError("T must be >= 0")
        rest = [IterationPlan(mode, warm, scope) for _ in range(T - 1)]
        return cls(tuple([IterationPlan(SFT_RL, INITIAL, scope)] + rest)[:T])

    @classmethod
    def default(cls, T: int) -> "SchedulePlan":
        return cls.preset(DEFAULT_PRESET, T)

    def to_dict(self) -> list[dict]:
        return [{**asdict(p), "phases": list(p.phases)} for p in self.iterations]


@dataclass(frozen=True)
class TrainJobSpec:
    """A training job handed to an external trainer."""

    phase: str
    dataset: str
    warm_start: str
    learning_rate: float
    epochs: int = 2
    batch_size: int = 128
    group_size: int | None = None
    epsilon: float | None = None
    beta: float | None = None
    temperature: float | None = None
    job_id: str = ""

    def __post_init__(self) -> None:
        if self.phase not in ("SFT", "RL"):
            raise PlanError(f"unknown phase {self.phase!r}")
        if not 0 < self.learning_rate < 1:
            raise PlanError("learning rate must lie in (0, 1)")
        if self.epochs < 1 or self.batch_size < 1:
            raise PlanError("epochs and batch size must be >= 1")
        if self.phase == "RL":
            if self.group_size is None or self.group_size < 1:
                raise PlanError("RL jobs need a group size >= 1")
            if self.epsilon is None or not 0 < self.epsilon < 1:
                raise PlanError("RL jobs need epsilon in (0, 1)")
            if self.beta is None or self.beta < 0:
                raise PlanError("RL jobs need beta >= 0")
            if self.temperature is None or self.temperature < 0:
                raise PlanError("RL jobs need a temperature >= 0")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}
