"""Linear-softmax sequence policy over a small closed answer vocabulary."""

from __future__ import annotations

import zlib
from functools import lru_cache
from typing import Sequence

import numpy as np

EOS = "<eos>"
ANSWER_VOCAB: tuple[str, ...] = tuple("0123456789.-") + (EOS,)


class OutOfVocabularyError(ValueError):
    pass


@lru_cache(maxsize=65536)
def _features(question: str, position: int, n_features: int) -> np.ndarray:
    rng = np.random.default_rng([zlib.crc32(question.encode("utf-8")), position, n_features])
    phi = np.empty(n_features)
    phi[0] = 1.0  # bias
    phi[1:] = rng.standard_normal(n_features - 1) / np.sqrt(n_features)
    phi.setflags(write=False)
    return phi


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


class ToyPolicy:
    """pi(token_t | question) = softmax(theta @ phi(question, t)).

    ``theta`` has shape (vocab size, feature size). Features are a fixed,
    deterministic function of (question, position); tokens are conditionally
    independent given the question.
    """

    def __init__(self, theta: np.ndarray, vocab: Sequence[str] = ANSWER_VOCAB):
        theta = np.array(theta, dtype=np.float64)
        if theta.ndim != 2 or theta.shape[0] != len(vocab):
            raise ValueError(f"theta must have shape ({len(vocab)}, F), got {theta.shape}")
        theta.setflags(write=False)
        self.theta = theta
        self.vocab = tuple(vocab)
        self._index = {tok: i for i, tok in enumerate(self.vocab)}

    @classmethod
    def initial(cls, n_features: int = 8, vocab: Sequence[str] = ANSWER_VOCAB, seed: int | None = None,
                scale: float = 0.0) -> "ToyPolicy":
        if seed is None or scale == 0.0:
            return cls(np.zeros((len(vocab), n_features)), vocab)
        return cls(np.random.default_rng(seed).normal(0.0, scale, (len(vocab), n_features)), vocab)

    @property
    def n_features(self) -> int:
        return self.theta.shape[1]

    def with_theta(self, theta: np.ndarray) -> "ToyPolicy":
        return ToyPolicy(theta, self.vocab)

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        try:
            return np.array([self._index[t] for t in tokens], dtype=np.int64)
        except KeyError as exc:
            raise OutOfVocabularyError(f"token {exc.args[0]!r} not in vocabulary") from None

    def feature_matrix(self, question: str, length: int) -> np.ndarray:
        return np.stack([_features(question, t, self.n_features) for t in range(length)]) if length else np.zeros(
            (0, self.n_features)
        )

    def log_probs(self, question: str, length: int) -> np.ndarray:
        """(length, V) per-position log-probabilities."""
        return log_softmax(self.feature_matrix(question, length) @ self.theta.T)

    def sequence_log_prob(self, question: str, tokens: Sequence[str]) -> float:
        idx = self.encode(tokens)
        lp = self.log_probs(question, len(idx))
        return float(lp[np.arange(len(idx)), idx].sum())

    def sequence_log_prob_grad(self, question: str, tokens: Sequence[str]) -> tuple[float, np.ndarray]:
        """log pi(tokens) and its gradient sum_t (onehot(y_t) - p_t) phi_t^T."""
        idx = self.encode(tokens)
        phi = self.feature_matrix(question, len(idx))
        lp = log_softmax(phi @ self.theta.T)
        resid = -np.exp(lp)
        resid[np.arange(len(idx)), idx] += 1.0
        return float(lp[np.arange(len(idx)), idx].sum()), resid.T @ phi

    def sample(self, question: str, length: int, rng: np.random.Generator) -> tuple[str, ...]:
        probs = np.exp(self.log_probs(question, length))
        return tuple(self.vocab[rng.choice(len(self.vocab), p=row / row.sum())] for row in probs)


def answer_tokens(answer: str) -> tuple[str, ...]:
    return tuple(answer) + (EOS,)


def decode(tokens: Sequence[str]) -> str:
    out = []
    for t in tokens:
        if t == EOS:
            break
        out.append(t)
    return "".join(out)
