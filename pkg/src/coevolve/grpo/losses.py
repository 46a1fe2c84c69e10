"""Group-relative advantages and the SFT / clipped-GRPO objectives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .policy import ToyPolicy

STD_FLOOR = 1e-8


@dataclass(frozen=True)
class GrpoHyperparams:
    epsilon: float = 0.2
    beta: float = 0.0
    lr: float = 0.5
    group_sizes: tuple[int, ...] = (32, 8)

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if not self.group_sizes or min(self.group_sizes) < 1:
            raise ValueError("group sizes must be >= 1")

    def group_size(self, iteration: int) -> int:
        """Rollouts per question at 1-based ``iteration``; the last entry repeats."""
        return self.group_sizes[min(iteration, len(self.group_sizes)) - 1]


@dataclass(frozen=True)
class RolloutGroup:
    question: str
    sequences: tuple[tuple[str, ...], ...]
    rewards: np.ndarray
    logp_new: np.ndarray
    logp_old: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.sequences)
        if n < 1:
            raise ValueError("a rollout group needs at least one rollout")
        for name in ("rewards", "logp_new", "logp_old"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},)")
            object.__setattr__(self, name, arr)

    @property
    def size(self) -> int:
        return len(self.sequences)

    @classmethod
    def collect(cls, policy: ToyPolicy, question: str, sequences, rewards, old_policy: ToyPolicy | None = None):
        old_policy = old_policy or policy
        seqs = tuple(tuple(s) for s in sequences)
        new = [policy.sequence_log_prob(question, s) for s in seqs]
        old = [old_policy.sequence_log_prob(question, s) for s in seqs]
        return cls(question, seqs, np.asarray(rewards, dtype=np.float64), np.array(new), np.array(old))


def compute_group_advantages(rewards: Sequence[float]) -> np.ndarray:
    """(r - mean) / population std; all zeros when std <= 1e-8."""
    r = np.asarray(rewards, dtype=np.float64)
    if r.size == 0:
        raise ValueError("cannot normalise an empty reward group")
    std = r.std()
    if std <= STD_FLOOR:
        return np.zeros_like(r)
    return (r - r.mean()) / std


def _check_finite(*arrays: np.ndarray) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise FloatingPointError("non-finite log-probabilities")


def surrogate_terms(logp_new, logp_old, adv, epsilon: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-rollout min(rho A, clip(rho) A), the ratios, and whether the gradient is cut off."""
    ratio = np.exp(np.asarray(logp_new) - np.asarray(logp_old))
    adv = np.asarray(adv, dtype=np.float64)
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - epsilon, 1.0 + epsilon) * adv
    outside = (ratio < 1.0 - epsilon) | (ratio > 1.0 + epsilon)
    cut = outside & (clipped < unclipped)
    return np.minimum(unclipped, clipped), ratio, cut


def kl_terms(logp_new, logp_ref) -> np.ndarray:
    """Per-sequence k3 estimate exp(d) - d - 1 with d = log pi_ref - log pi_theta."""
    d = np.asarray(logp_ref) - np.asarray(logp_new)
    return np.expm1(d) - d


def grpo_loss(group: RolloutGroup, adv, hp: GrpoHyperparams, ref_logps=None) -> float:
    """-mean_i min(rho_i A_i, clip(rho_i) A_i) + beta * mean_i KL_i, sequence-level ratios."""
    adv = np.asarray(adv, dtype=np.float64)
    if adv.shape != (group.size,):
        raise ValueError("advantages and rollouts disagree in size")
    ref = group.logp_old if ref_logps is None else np.asarray(ref_logps, dtype=np.float64)
    _check_finite(group.logp_new, group.logp_old, ref)
    surr, _, _ = surrogate_terms(group.logp_new, group.logp_old, adv, hp.epsilon)
    loss = -float(np.mean(surr))
    if hp.beta:
        loss += hp.beta * float(np.mean(kl_terms(group.logp_new, ref)))
    return loss


def grpo_objective(policy: ToyPolicy, group: RolloutGroup, adv, hp: GrpoHyperparams, ref_logps=None):
    """Loss with log pi_theta recomputed from ``policy``, its gradient, and diagnostics."""
    adv = np.asarray(adv, dtype=np.float64)
    ref = group.logp_old if ref_logps is None else np.asarray(ref_logps, dtype=np.float64)
    logp, grads = [], []
    for seq in group.sequences:
        lp, g = policy.sequence_log_prob_grad(group.question, seq)
        logp.append(lp)
        grads.append(g)
    logp = np.array(logp)
    _check_finite(logp, group.logp_old, ref)
    surr, ratio, cut = surrogate_terms(logp, group.logp_old, adv, hp.epsilon)
    n = group.size
    coef = np.where(cut, 0.0, -adv * ratio / n)
    loss = -float(np.mean(surr))
    if hp.beta:
        loss += hp.beta * float(np.mean(kl_terms(logp, ref)))
        # d/dlogp of (exp(d) - d - 1), d = ref - logp
        coef = coef + hp.beta * (1.0 - np.exp(ref - logp)) / n
    grad = np.zeros_like(policy.theta)
    for c, g in zip(coef, grads):  # fixed summation order
        grad += c * g
    return loss, grad, {"ratio": ratio, "cut": cut, "logp": logp}


def sft_loss(policy: ToyPolicy, question: str, tokens) -> float:
    """Mean negative log-likelihood per token."""
    idx = policy.encode(tokens)
    if len(idx) == 0:
        return 0.0
    lp = policy.log_probs(question, len(idx))
    return -float(lp[np.arange(len(idx)), idx].mean())


def sft_loss_and_grad(policy: ToyPolicy, question: str, tokens) -> tuple[float, np.ndarray]:
    n = len(tokens)
    if n == 0:
        return 0.0, np.zeros_like(policy.theta)
    lp, g = policy.sequence_log_prob_grad(question, tokens)
    return -lp / n, -g / n
