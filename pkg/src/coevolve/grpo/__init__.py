from .gradcheck import (
    GradientReport,
    GrpoInstance,
    SftInstance,
    random_grpo_instance,
    random_sft_instance,
    verify_gradients,
)
from .losses import (
    GrpoHyperparams,
    RolloutGroup,
    compute_group_advantages,
    grpo_loss,
    grpo_objective,
    sft_loss,
    sft_loss_and_grad,
)
from .policy import ANSWER_VOCAB, EOS, OutOfVocabularyError, ToyPolicy, answer_tokens, decode
from .train import StepMetrics, sft_train_step, toy_train_step, train_grpo, train_sft

__all__ = [
    "ANSWER_VOCAB",
    "EOS",
    "GradientReport",
    "GrpoHyperparams",
    "GrpoInstance",
    "OutOfVocabularyError",
    "RolloutGroup",
    "SftInstance",
    "StepMetrics",
    "ToyPolicy",
    "answer_tokens",
    "compute_group_advantages",
    "decode",
    "grpo_loss",
    "grpo_objective",
    "random_grpo_instance",
    "random_sft_instance",
    "sft_loss",
    "sft_loss_and_grad",
    "sft_train_step",
    "toy_train_step",
    "train_grpo",
    "train_sft",
    "verify_gradients",
]
