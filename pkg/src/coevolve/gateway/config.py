from __future__ import annotations

import os
from dataclasses import dataclass, field

BACKENDS = ("http", "oracle", "simulated")


class SolverError(RuntimeError):
    """A solver call failed for a reason other than a wrong answer."""


class TransportError(SolverError):
    pass


class SolverTimeout(TransportError):
    pass


class MalformedResponseError(SolverError):
    pass


@dataclass(frozen=True)
class SkillProfile:
    """Simulated solver skill: P(correct) = p0 + delta * iteration - slope * difficulty."""

    p0: float = 0.5
    slope: float = 0.0
    delta: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p0 <= 1.0:
            raise ValueError("p0 must lie in [0, 1]")
        if self.slope < 0 or self.delta < 0:
            raise ValueError("slope and delta must be non-negative")

    def probability(self, iteration: int, difficulty: float) -> float:
        p = self.p0 + self.delta * iteration - self.slope * difficulty
        return min(1.0, max(0.0, p))


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff: float = 1.0  # seconds before the second attempt, doubling after

    def delay(self, failed_attempts: int) -> float:
        return self.backoff * 2 ** (failed_attempts - 1)


@dataclass(frozen=True)
class SolverConfig:
    backend: str = "oracle"
    base_url: str | None = None
    model: str | None = None
    api_key: str | None = field(default=None, repr=False)
    temperature: float = 0.9
    max_in_flight: int = 4
    retry: RetryPolicy = RetryPolicy()
    timeout: float = 60.0
    seed: int = 0
    skill: SkillProfile = SkillProfile()
    iteration: int = 1

    def __post_init__(self) -> None:
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; expected one of {BACKENDS}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.retry.max_attempts < 1:
            raise ValueError("retry.max_attempts must be >= 1")

    @classmethod
    def from_env(cls, **overrides) -> "SolverConfig":
        """HTTP settings from SOLVER_API_BASE / SOLVER_API_KEY / SOLVER_MODEL."""
        env = {
            "base_url": os.environ.get("SOLVER_API_BASE"),
            "api_key": os.environ.get("SOLVER_API_KEY"),
            "model": os.environ.get("SOLVER_MODEL"),
        }
        env.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**env)

    @property
    def tag(self) -> str:
        """Identifies the evaluating model, e.g. ``simulated@t2``."""
        name = self.model or self.backend
        return f"{name}@t{self.iteration}"
