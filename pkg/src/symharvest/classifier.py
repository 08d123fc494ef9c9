"""Multi-label linear classifier: per-label sigmoid + BCE, mini-batch GD.

One weight row per label over the embedding space. The same machinery
serves the symptom detector (label space 1-10) and, specialized to a
single label, the binary depression-post detector; dpd_predict adds
majority voting over an ensemble of binary models.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import expit

from .store import DatasetRecord

SYMPTOM_SPACE: tuple[int, ...] = tuple(range(1, 11))
DEPRESSION_SPACE: tuple[int, ...] = (11,)

DEFAULT_LEARNING_RATE = 0.1  # tuned for the native linear model; encoder
# fine-tuning rates from the literature do not transfer to it.


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    max_seq_len: int = 30
    learning_rate: float = DEFAULT_LEARNING_RATE
    seed: int = 42
    loss: str = "bce"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.loss != "bce":
            raise ValueError(f"unsupported loss: {self.loss}")


@dataclass
class Model:
    W: np.ndarray
    b: np.ndarray
    label_space: tuple[int, ...]
    threshold: float = 0.5
    provider_signature: str = ""
    train_config: TrainConfig | None = None
    epoch_losses: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.W.shape[0] != len(self.label_space):
            raise ValueError("W must have one row per label")
        if self.b.shape != (len(self.label_space),):
            raise ValueError("b length must match label space")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")

    @property
    def dim(self) -> int:
        return self.W.shape[1]


class LabelSpaceError(ValueError):
    """A training post carries a label outside the model's label space."""


def project_labels(
    labels: frozenset[int] | None, label_space: Sequence[int]
) -> frozenset[int]:
    """Restrict a label set to the given space (unlabelled -> empty)."""
    if labels is None:
        return frozenset()
    return frozenset(labels) & frozenset(label_space)


def labels_matrix(
    posts: Sequence[DatasetRecord], label_space: Sequence[int]
) -> np.ndarray:
    col = {lab: i for i, lab in enumerate(label_space)}
    Y = np.zeros((len(posts), len(label_space)), dtype=np.float64)
    for i, post in enumerate(posts):
        for lab in post.labels or ():
            if lab not in col:
                raise LabelSpaceError(
                    f"post {post.id!r} has label {lab} outside {list(label_space)}"
                )
            Y[i, col[lab]] = 1.0
    return Y


def bce_loss_and_grads(
    W: np.ndarray, b: np.ndarray, X: np.ndarray, Y: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean BCE over examples and labels, with analytic gradients.

    Stable formulation: -log sigmoid(z) = softplus(-z), so the loss is
    mean(y*softplus(-z) + (1-y)*softplus(z)) and dL/dz = (sigmoid(z)-y)/NL.
    """
    Z = X @ W.T + b
    loss = float(np.mean(Y * np.logaddexp(0.0, -Z) + (1.0 - Y) * np.logaddexp(0.0, Z)))
    G = (expit(Z) - Y) / Z.size
    return loss, G.T @ X, G.sum(axis=0)


def _embed_training_posts(posts, provider, max_seq_len: int) -> np.ndarray:
    truncated = [
        DatasetRecord(id=p.id, text=p.text, tokens=tuple(p.tokens)[:max_seq_len])
        for p in posts
    ]
    return np.asarray(provider.embed_posts(truncated), dtype=np.float64)


def train(
    dataset: Sequence[DatasetRecord],
    provider,
    cfg: TrainConfig,
    label_space: Sequence[int] = SYMPTOM_SPACE,
    threshold: float = 0.5,
) -> Model:
    """Fit from zero-initialized weights with seeded shuffling.

    Deterministic: the same dataset, provider, and config reproduce the
    same weights. The recorded epoch losses are full-dataset values taken
    after each epoch's updates.
    """
    if not dataset:
        raise ValueError("empty training dataset")
    label_space = tuple(label_space)
    Y = labels_matrix(dataset, label_space)
    X = _embed_training_posts(dataset, provider, cfg.max_seq_len)
    n, dim = X.shape

    W = np.zeros((len(label_space), dim), dtype=np.float64)
    b = np.zeros(len(label_space), dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    losses: list[float] = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            _, dW, db = bce_loss_and_grads(W, b, X[idx], Y[idx])
            W -= cfg.learning_rate * dW
            b -= cfg.learning_rate * db
        losses.append(bce_loss_and_grads(W, b, X, Y)[0])

    signature = f"{type(provider).__name__}:dim={dim}"
    return Model(
        W=W, b=b, label_space=label_space, threshold=threshold,
        provider_signature=signature, train_config=cfg, epoch_losses=losses,
    )


def scores(model: Model, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (model.dim,):
        raise ValueError(f"vector shape {v.shape} does not match model dim {model.dim}")
    return expit(model.W @ v + model.b)


def predict(model: Model, v: np.ndarray) -> tuple[frozenset[int], np.ndarray]:
    """Labels whose sigmoid score reaches the threshold (inclusive)."""
    s = scores(model, v)
    labels = frozenset(
        lab for lab, sc in zip(model.label_space, s) if sc >= model.threshold
    )
    return labels, s


def predict_batch(model: Model, X: np.ndarray) -> tuple[list[frozenset[int]], np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ValueError(f"matrix shape {X.shape} does not match model dim {model.dim}")
    S = expit(X @ model.W.T + model.b)
    out = [
        frozenset(
            lab for lab, sc in zip(model.label_space, row) if sc >= model.threshold
        )
        for row in S
    ]
    return out, S


DEPRESSION = "depression"
CONTROL = "control"


def make_zsl_voter(
    descriptors: Mapping[int, np.ndarray], threshold: float = 1.0, k: int = 3
) -> Callable[[np.ndarray], bool]:
    """Voter that says depression iff zero-shot labelling finds a symptom."""
    from .zsl import UnembeddableError, zsl_label

    def vote(v: np.ndarray) -> bool:
        try:
            return bool(zsl_label(v, descriptors, threshold=threshold, k=k))
        except UnembeddableError:
            return False

    return vote


def dpd_predict(
    ensemble: Sequence[Model],
    v: np.ndarray,
    extra_voters: Sequence[Callable[[np.ndarray], bool]] = (),
) -> str:
    """Majority vote over binary models (and optional extra voters).

    A model votes depression when it predicts a non-empty label set.
    Ties go to depression: missing a depressive post costs more than a
    false alarm here.
    """
    if not ensemble and not extra_voters:
        raise ValueError("empty ensemble")
    votes = [bool(predict(m, v)[0]) for m in ensemble]
    votes += [bool(voter(v)) for voter in extra_voters]
    dep = sum(votes)
    return DEPRESSION if dep * 2 >= len(votes) else CONTROL


def save_model(path, model: Model) -> None:
    payload = {
        "label_space": list(model.label_space),
        "dim": model.dim,
        "W": model.W.tolist(),
        "b": model.b.tolist(),
        "threshold": model.threshold,
        "provider_signature": model.provider_signature,
        "train_config": None
        if model.train_config is None
        else vars(model.train_config).copy(),
        "epoch_losses": list(model.epoch_losses),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    cfg = payload.get("train_config")
    return Model(
        W=np.asarray(payload["W"], dtype=np.float64),
        b=np.asarray(payload["b"], dtype=np.float64),
        label_space=tuple(payload["label_space"]),
        threshold=payload["threshold"],
        provider_signature=payload.get("provider_signature", ""),
        train_config=None if cfg is None else TrainConfig(**cfg),
        epoch_losses=list(payload.get("epoch_losses", ())),
    )
