"""Single-writer gradient steps and a small in-process SFT/GRPO trainer for the toy policy."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..rewards import RewardConfig, format_response, score
from .losses import GrpoHyperparams, RolloutGroup, compute_group_advantages, grpo_objective, sft_loss_and_grad
from .policy import ToyPolicy, answer_tokens, decode

TOY_THINK = "Step 1: Recall the required quantity."


@dataclass(frozen=True)
class StepMetrics:
    step: int
    mean_reward: float
    mean_abs_advantage: float
    clip_fraction: float
    loss: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _finite(grad: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient")
    return grad


def toy_train_step(
    policy: ToyPolicy, groups: Sequence[RolloutGroup], hp: GrpoHyperparams, step: int = 0, ref_logps=None
) -> tuple[ToyPolicy, StepMetrics]:
    """One GRPO gradient step averaged over ``groups`` (reduced in list order)."""
    if not groups:
        raise ValueError("empty batch")
    grad = np.zeros_like(policy.theta)
    losses, rewards, abs_adv, cut = [], [], [], []
    for i, group in enumerate(groups):
        adv = compute_group_advantages(group.rewards)
        ref = None if ref_logps is None else ref_logps[i]
        loss, g, info = grpo_objective(policy, group, adv, hp, ref)
        grad += g
        losses.append(loss)
        rewards.extend(group.rewards.tolist())
        abs_adv.extend(np.abs(adv).tolist())
        cut.extend(info["cut"].tolist())
    grad = _finite(grad / len(groups))
    metrics = StepMetrics(
        step=step,
        mean_reward=float(np.mean(rewards)),
        mean_abs_advantage=float(np.mean(abs_adv)),
        clip_fraction=float(np.mean(cut)),
        loss=float(np.mean(losses)),
    )
    if not grad.any():
        return policy, metrics
    return policy.with_theta(policy.theta - hp.lr * grad), metrics


def sft_train_step(policy: ToyPolicy, batch: Sequence[tuple[str, Sequence[str]]], lr: float) -> tuple[ToyPolicy, float]:
    """One step on the mean per-sample NLL of (question, tokens) pairs."""
    if not batch:
        raise ValueError("empty batch")
    grad = np.zeros_like(policy.theta)
    total = 0.0
    for question, tokens in batch:
        loss, g = sft_loss_and_grad(policy, question, tokens)
        total += loss
        grad += g
    grad = _finite(grad / len(batch))
    return policy.with_theta(policy.theta - lr * grad), total / len(batch)


def answer_reward(tokens: Sequence[str], ground_truth: str, cfg: RewardConfig = RewardConfig()) -> float:
    """Verifier reward of a sampled answer wrapped in a fixed reasoning template."""
    return score(format_response(TOY_THINK, decode(tokens)), ground_truth, cfg).total


def rollout_group(
    policy: ToyPolicy,
    question: str,
    ground_truth: str,
    size: int,
    rng: np.random.Generator,
    reward: Callable[[Sequence[str], str], float] = answer_reward,
) -> RolloutGroup:
    length = len(answer_tokens(ground_truth))
    seqs = [policy.sample(question, length, rng) for _ in range(size)]
    return RolloutGroup.collect(policy, question, seqs, [reward(s, ground_truth) for s in seqs])


def train_sft(policy: ToyPolicy, tasks: Sequence[tuple[str, str]], lr: float, epochs: int, batch_size: int):
    """Epochs of SFT on (question, answer) pairs in fixed order; returns policy and per-step losses."""
    losses = []
    data = [(q, answer_tokens(a)) for q, a in tasks]
    for _ in range(epochs):
        for start in range(0, len(data), batch_size):
            policy, loss = sft_train_step(policy, data[start:start + batch_size], lr)
            losses.append(loss)
    return policy, losses


def train_grpo(
    policy: ToyPolicy,
    tasks: Sequence[tuple[str, str]],
    hp: GrpoHyperparams,
    steps: int,
    group_size: int,
    seed: int,
    inner_updates: int = 2,
    metrics_path: str | Path | None = None,
) -> tuple[ToyPolicy, list[StepMetrics]]:
    """Sample groups from the current policy, then take ``inner_updates`` clipped steps on them."""
    rng = np.random.default_rng(seed)
    history: list[StepMetrics] = []
    sink = open(metrics_path, "w", encoding="utf-8") if metrics_path else None
    try:
        for step in range(steps):
            groups = [rollout_group(policy, q, a, group_size, rng) for q, a in tasks]
            metrics = None
            for _ in range(inner_updates):
                policy, m = toy_train_step(policy, groups, hp, step)
                metrics = metrics or m
            history.append(metrics)
            if sink:
                sink.write(metrics.to_json() + "\n")
    finally:
        if sink:
            sink.close()
    return policy, history
