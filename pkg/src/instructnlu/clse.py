"""Shallow multi-label classifier over fixed sentence embeddings (CL-SE).

A single tanh hidden layer feeds one sigmoid output per intent class,
trained with binary cross-entropy; at inference a class is predicted when
its sigmoid probability clears the threshold.  Slot value extraction is not
supported by this baseline.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from .corpus import DomainOntology


@dataclass(frozen=True)
class CLSEConfig:
    hidden_size: int = 512
    threshold: float = 0.3
    epochs: int = 10
    batch_size: int = 8
    learning_rate: float = 5e-5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.hidden_size < 1:
            raise ValueError(f"hidden_size must be >= 1, got {self.hidden_size}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must be in (0, 1), got {self.threshold}")
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs/batch_size must be >= 1 and learning_rate > 0")


@dataclass
class CLSEClassifier:
    network: nn.Module
    intent_names: tuple[str, ...]
    input_dim: int
    config: CLSEConfig


def _as_matrix(embeddings) -> np.ndarray:
    matrix = np.asarray(embeddings, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError(f"embeddings must be a 2-D matrix, got shape {matrix.shape}")
    return matrix


def train_clse(
    embeddings,
    gold: list[set[str]] | list[frozenset[str]],
    ontology: DomainOntology,
    config: CLSEConfig,
) -> CLSEClassifier:
    """Fit the classifier on embedded utterances with multi-label targets."""
    matrix = _as_matrix(embeddings)
    if len(matrix) == 0:
        raise ValueError("embeddings must be non-empty")
    if len(matrix) != len(gold):
        raise ValueError(f"{len(matrix)} embeddings but {len(gold)} gold label sets")

    intent_names = ontology.intent_names
    index = {name: i for i, name in enumerate(intent_names)}
    targets = np.zeros((len(matrix), len(intent_names)), dtype=np.float32)
    for row, labels in enumerate(gold):
        for label in labels:
            if label not in index:
                raise ValueError(f"gold intent {label!r} not in ontology")
            targets[row, index[label]] = 1.0

    torch.manual_seed(config.seed)
    network = nn.Sequential(
        nn.Linear(matrix.shape[1], config.hidden_size),
        nn.Tanh(),
        nn.Linear(config.hidden_size, len(intent_names)),
    )
    optimizer = torch.optim.Adam(network.parameters(), lr=config.learning_rate)
    loss_fn = nn.BCEWithLogitsLoss()

    inputs = torch.tensor(matrix, dtype=torch.float32)
    labels = torch.tensor(targets)
    order = list(range(len(matrix)))
    rng = random.Random(config.seed)
    network.train()
    for _ in range(config.epochs):
        rng.shuffle(order)
        for start in range(0, len(order), config.batch_size):
            rows = order[start : start + config.batch_size]
            loss = loss_fn(network(inputs[rows]), labels[rows])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
    network.eval()

    return CLSEClassifier(
        network=network,
        intent_names=intent_names,
        input_dim=matrix.shape[1],
        config=config,
    )


def save_classifier(classifier: CLSEClassifier, path) -> None:
    """Persist the trained network weights (state dict) to ``path``."""
    torch.save(classifier.network.state_dict(), path)


def predict_proba_clse(classifier: CLSEClassifier, embeddings) -> np.ndarray:
    """Per-class sigmoid probabilities for a batch of embeddings."""
    matrix = _as_matrix(embeddings)
    if matrix.shape[1] != classifier.input_dim:
        raise ValueError(
            f"embedding dimension {matrix.shape[1]} does not match training "
            f"dimension {classifier.input_dim}"
        )
    with torch.no_grad():
        logits = classifier.network(torch.tensor(matrix, dtype=torch.float32))
        return torch.sigmoid(logits).numpy()


def predict_clse(
    classifier: CLSEClassifier,
    embedding,
    threshold: float | None = None,
) -> set[str]:
    """Intent names whose sigmoid probability exceeds the threshold."""
    theta = classifier.config.threshold if threshold is None else threshold
    probabilities = predict_proba_clse(classifier, np.asarray(embedding)[None, :])[0]
    return {
        name for name, p in zip(classifier.intent_names, probabilities) if p > theta
    }


def predict_clse_batch(
    classifier: CLSEClassifier,
    embeddings,
    threshold: float | None = None,
) -> list[set[str]]:
    theta = classifier.config.threshold if threshold is None else threshold
    probabilities = predict_proba_clse(classifier, embeddings)
    return [
        {name for name, p in zip(classifier.intent_names, row) if p > theta}
        for row in probabilities
    ]
