"""Central finite-difference checks for the SFT and GRPO gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .losses import (
    GrpoHyperparams,
    RolloutGroup,
    compute_group_advantages,
    grpo_loss,
    grpo_objective,
    sft_loss,
    sft_loss_and_grad,
)
from .policy import ANSWER_VOCAB, ToyPolicy

KINK_MARGIN = 1e-4


@dataclass(frozen=True)
class SftInstance:
    policy: ToyPolicy
    question: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class GrpoInstance:
    policy: ToyPolicy
    group: RolloutGroup
    advantages: np.ndarray
    hp: GrpoHyperparams
    ref_logps: np.ndarray | None = None

    def ratios(self, theta: np.ndarray | None = None) -> np.ndarray:
        policy = self.policy if theta is None else self.policy.with_theta(theta)
        new = np.array([policy.sequence_log_prob(self.group.question, s) for s in self.group.sequences])
        return np.exp(new - self.group.logp_old)

    def near_kink(self, margin: float = KINK_MARGIN) -> bool:
        r = self.ratios()
        eps = self.hp.epsilon
        return bool(np.any(np.abs(r - (1 - eps)) < margin) or np.any(np.abs(r - (1 + eps)) < margin))


@dataclass(frozen=True)
class GradientReport:
    analytic: np.ndarray
    numeric: np.ndarray
    max_rel_discrepancy: float
    non_smooth: bool = False

    def __post_init__(self) -> None:
        if self.analytic.shape != self.numeric.shape:
            raise ValueError("gradient shapes differ")

    def ok(self, tol: float = 1e-5) -> bool:
        return not self.non_smooth and self.max_rel_discrepancy < tol


def relative_discrepancy(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), 1e-12)
    return float(np.abs(a - b).max(initial=0.0) / scale)


def central_differences(f: Callable[[np.ndarray], float], theta: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(theta)
    work = theta.copy()
    for idx in np.ndindex(theta.shape):
        orig = work[idx]
        work[idx] = orig + h
        up = f(work)
        work[idx] = orig - h
        down = f(work)
        work[idx] = orig
        out[idx] = (up - down) / (2 * h)
    return out


def _grpo_value(inst: GrpoInstance, theta: np.ndarray) -> float:
    policy = inst.policy.with_theta(theta)
    g = inst.group
    new = [policy.sequence_log_prob(g.question, s) for s in g.sequences]
    group = RolloutGroup(g.question, g.sequences, g.rewards, np.array(new), g.logp_old)
    return grpo_loss(group, inst.advantages, inst.hp, inst.ref_logps)


def verify_gradients(kind: str, instance, h: float = 1e-5) -> GradientReport:
    """Compare the analytic gradient of ``kind`` ("sft" or "grpo") with central differences.

    GRPO instances with a ratio within KINK_MARGIN of a clip boundary are
    flagged non-smooth; the comparison is still reported but should be excluded.
    """
    theta = instance.policy.theta
    if kind == "sft":
        _, analytic = sft_loss_and_grad(instance.policy, instance.question, instance.tokens)
        numeric = central_differences(
            lambda th: sft_loss(instance.policy.with_theta(th), instance.question, instance.tokens), theta, h
        )
        return GradientReport(analytic, numeric, relative_discrepancy(analytic, numeric))
    if kind == "grpo":
        _, analytic, _ = grpo_objective(instance.policy, instance.group, instance.advantages, instance.hp,
                                        instance.ref_logps)
        numeric = central_differences(lambda th: _grpo_value(instance, th), theta, h)
        return GradientReport(analytic, numeric, relative_discrepancy(analytic, numeric), instance.near_kink())
    raise ValueError(f"unknown loss kind {kind!r}")


def _question(rng: np.random.Generator) -> str:
    return f"toy question {int(rng.integers(1_000_000))}"


def random_sft_instance(seed: int, n_features: int = 6) -> SftInstance:
    rng = np.random.default_rng(seed)
    policy = ToyPolicy(rng.normal(0.0, 0.5, (len(ANSWER_VOCAB), n_features)))
    length = int(rng.integers(1, 7))
    tokens = tuple(ANSWER_VOCAB[i] for i in rng.integers(len(ANSWER_VOCAB), size=length))
    return SftInstance(policy, _question(rng), tokens)


def random_grpo_instance(seed: int, beta: float = 0.0, n_features: int = 6, epsilon: float = 0.2) -> GrpoInstance:
    """A seeded GRPO instance; resamples deterministically until no ratio sits near a clip kink."""
    hp = GrpoHyperparams(epsilon=epsilon, beta=beta)
    for sub in range(100):
        rng = np.random.default_rng([seed, sub])
        theta = rng.normal(0.0, 0.5, (len(ANSWER_VOCAB), n_features))
        old = ToyPolicy(theta + rng.normal(0.0, 0.05, theta.shape))
        policy = ToyPolicy(theta)
        question = _question(rng)
        size, length = int(rng.integers(2, 9)), int(rng.integers(2, 6))
        seqs = [old.sample(question, length, rng) for _ in range(size)]
        rewards = rng.integers(0, 3, size=size).astype(float)
        rewards[0] = rewards[1] + 1.0  # keep the advantages non-trivial
        group = RolloutGroup.collect(policy, question, seqs, rewards, old_policy=old)
        ref = None
        if beta:
            ref_policy = ToyPolicy(theta + rng.normal(0.0, 0.05, theta.shape))
            ref = np.array([ref_policy.sequence_log_prob(question, s) for s in group.sequences])
        inst = GrpoInstance(policy, group, compute_group_advantages(rewards), hp, ref)
        if not inst.near_kink():
            return inst
    raise RuntimeError("could not draw a kink-free instance")
