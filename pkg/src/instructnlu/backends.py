"""Model backends: fine-tuning, batched generation, and sentence embedding.

Two backend kinds sit behind one handle type:

* ``seq2seq-checkpoint`` wraps an encoder-decoder language model and its
  tokenizer.  Training runs standard sequence cross-entropy with Adam at a
  constant learning rate; decoding is always greedy.
* ``gold-oracle`` answers every instruction with its compiled target and
  needs no weights; it is the official test double for pipeline checks.

Handles are immutable snapshots: training deep-copies the model and returns
a new handle, so generation on the original is unaffected.

Checkpoints are referred to by alias or raw identifier; aliases resolve
through a JSON configuration file (a packaged default plus an optional user
override), never through code.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
import random
from dataclasses import dataclass, field
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np
import torch
import torch.nn as nn

from .compiler import InstructionInstance
from .errors import BackendError, ConfigurationError, GenerationError

CACHE_DIR_ENV = "INSTRUCTNLU_CACHE_DIR"
CHECKPOINT_CONFIG_ENV = "INSTRUCTNLU_CHECKPOINTS"

DEFAULT_LEARNING_RATE = 5e-5
ADAPTER_LEARNING_RATE = 5e-4

# Greedy decoding budgets: targets are short for both tasks.
ID_MAX_NEW_TOKENS = 16
VE_MAX_NEW_TOKENS = 32

SEQ2SEQ = "seq2seq-checkpoint"
GOLD_ORACLE = "gold-oracle"


@dataclass(frozen=True)
class AdapterConfig:
    reduction_factor: int = 16

    def __post_init__(self) -> None:
        if self.reduction_factor < 1:
            raise ValueError(f"reduction_factor must be >= 1, got {self.reduction_factor}")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 8
    learning_rate: float | None = None  # resolved per adapter setting when unset
    seed: int = 0
    adapter: AdapterConfig | None = None
    max_input_length: int = 256
    max_target_length: int = 32

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")

    @property
    def resolved_learning_rate(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return ADAPTER_LEARNING_RATE if self.adapter else DEFAULT_LEARNING_RATE


@dataclass
class Seq2SeqState:
    model: Any
    tokenizer: Any
    truncation_warnings: list[str] = field(default_factory=list)


@dataclass
class OracleState:
    answers: dict[str, str]


@dataclass(frozen=True)
class ModelHandle:
    backend_kind: str
    checkpoint_id: str
    state: Any


# ---------------------------------------------------------------------------
# Checkpoint resolution and loading
# ---------------------------------------------------------------------------


def checkpoint_aliases() -> dict[str, str]:
    """Alias -> checkpoint identifier map from configuration files.

    The packaged defaults can be extended or overridden by a JSON file named
    in the ``INSTRUCTNLU_CHECKPOINTS`` environment variable.
    """
    with importlib_resources.files("instructnlu.resources").joinpath("checkpoints.json").open(
        encoding="utf-8"
    ) as f:
        aliases = json.load(f)
    override = os.environ.get(CHECKPOINT_CONFIG_ENV)
    if override:
        try:
            with open(override, encoding="utf-8") as f:
                aliases.update(json.load(f))
        except OSError as exc:
            raise ConfigurationError(f"cannot read checkpoint config {override}: {exc}") from exc
    return aliases


def resolve_checkpoint(name: str) -> str:
    return checkpoint_aliases().get(name, name)


def model_cache_dir(explicit: str | None = None) -> str | None:
    return explicit or os.environ.get(CACHE_DIR_ENV)


def oracle_handle(instances: Iterable[InstructionInstance]) -> ModelHandle:
    """Backend that answers each compiled input with its compiled target."""
    answers: dict[str, str] = {}
    for instance in instances:
        existing = answers.get(instance.input_text)
        if existing is not None and existing != instance.target_text:
            raise ValueError(
                f"conflicting targets for identical input (utterance {instance.utterance_id!r})"
            )
        answers[instance.input_text] = instance.target_text
    return ModelHandle(backend_kind=GOLD_ORACLE, checkpoint_id=GOLD_ORACLE, state=OracleState(answers))


def seq2seq_handle(model, tokenizer, checkpoint_id: str = "in-memory") -> ModelHandle:
    """Wrap an already-constructed model/tokenizer pair.

    Inputs longer than the budget are truncated from the left so the
    question at the end of the instruction is always preserved.
    """
    tokenizer.truncation_side = "left"
    model.eval()
    return ModelHandle(
        backend_kind=SEQ2SEQ, checkpoint_id=checkpoint_id, state=Seq2SeqState(model, tokenizer)
    )


def load_seq2seq(checkpoint: str, cache_dir: str | None = None) -> ModelHandle:
    """Load a checkpoint (by alias or identifier) into a fresh handle."""
    from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

    checkpoint_id = resolve_checkpoint(checkpoint)
    kwargs = {"cache_dir": model_cache_dir(cache_dir)}
    try:
        tokenizer = AutoTokenizer.from_pretrained(checkpoint_id, **kwargs)
        model = AutoModelForSeq2SeqLM.from_pretrained(checkpoint_id, **kwargs)
    except Exception as exc:
        raise ConfigurationError(f"cannot load checkpoint {checkpoint_id!r}: {exc}") from exc
    return seq2seq_handle(model, tokenizer, checkpoint_id=checkpoint_id)


# ---------------------------------------------------------------------------
# Encoder-decoder architectures (for weight-free parameter accounting)
# ---------------------------------------------------------------------------

_T5_DIMS = {
    "small": dict(d_model=512, d_ff=1024, num_layers=8, num_decoder_layers=8, num_heads=6),
    "base": dict(d_model=768, d_ff=2048, num_layers=12, num_decoder_layers=12, num_heads=12),
    "large": dict(d_model=1024, d_ff=2816, num_layers=24, num_decoder_layers=24, num_heads=16),
}


def t5_architecture(size: str):
    """Architecture config for the small/base/large encoder-decoder family.

    Lets parameter accounting (e.g. adapter budgets) run without weights.
    """
    from transformers import T5Config

    if size not in _T5_DIMS:
        raise ConfigurationError(f"unknown architecture size {size!r}; pick one of {sorted(_T5_DIMS)}")
    config = T5Config(
        vocab_size=32128,
        d_kv=64,
        feed_forward_proj="gated-gelu",
        decoder_start_token_id=0,
        **_T5_DIMS[size],
    )
    # untied lm_head, set post-construction for compatibility across versions
    config.tie_word_embeddings = False
    return config


def t5_model(size: str):
    """Randomly initialized model with the published checkpoint's layout.

    Input embeddings are shared between encoder and decoder; the output head
    is a separate matrix.  Useful for parameter accounting without weights.
    """
    from transformers import T5ForConditionalGeneration

    model = T5ForConditionalGeneration(t5_architecture(size))
    model.set_input_embeddings(model.get_input_embeddings())
    return model


# ---------------------------------------------------------------------------
# Bottleneck adapters
# ---------------------------------------------------------------------------


class BottleneckAdapter(nn.Module):
    """Residual bottleneck module inserted after a feed-forward sublayer."""

    def __init__(self, d_model: int, reduction_factor: int) -> None:
        super().__init__()
        bottleneck = max(1, d_model // reduction_factor)
        self.down = nn.Linear(d_model, bottleneck)
        self.up = nn.Linear(bottleneck, d_model)
        self.activation = nn.ReLU()
        # Start as identity so the frozen model's behaviour is unchanged.
        nn.init.zeros_(self.up.weight)
        nn.init.zeros_(self.up.bias)

    def forward(self, hidden_states):
        return hidden_states + self.up(self.activation(self.down(hidden_states)))


class _AdapterizedFF(nn.Module):
    def __init__(self, wrapped: nn.Module, adapter: BottleneckAdapter) -> None:
        super().__init__()
        self.wrapped = wrapped
        self.adapter = adapter

    def forward(self, hidden_states):
        return self.adapter(self.wrapped(hidden_states))


def attach_bottleneck_adapters(model, reduction_factor: int) -> int:
    """Freeze the model and insert one adapter after each block's FF layer.

    Returns the number of adapters inserted.
    """
    for parameter in model.parameters():
        parameter.requires_grad = False

    d_model = model.config.d_model
    inserted = 0
    for stack in (model.encoder, model.decoder):
        for block in stack.block:
            adapter = BottleneckAdapter(d_model, reduction_factor)
            block.layer[-1] = _AdapterizedFF(block.layer[-1], adapter)
            inserted += 1
    return inserted


def count_trainable_parameters(target) -> int:
    model = target.state.model if isinstance(target, ModelHandle) else target
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


def count_parameters(target) -> int:
    model = target.state.model if isinstance(target, ModelHandle) else target
    return sum(p.numel() for p in model.parameters())


# ---------------------------------------------------------------------------
# Training and generation
# ---------------------------------------------------------------------------


def _truncation_warnings(tokenizer, instances, max_input_length: int, max_target_length: int) -> list[str]:
    warnings = []
    for instance in instances:
        n_input = len(tokenizer(instance.input_text).input_ids)
        if n_input > max_input_length:
            warnings.append(
                f"input truncated {n_input}->{max_input_length} tokens "
                f"(utterance {instance.utterance_id}, class {instance.class_name})"
            )
        n_target = len(tokenizer(text_target=instance.target_text).input_ids)
        if n_target > max_target_length:
            warnings.append(
                f"target truncated {n_target}->{max_target_length} tokens "
                f"(utterance {instance.utterance_id}, class {instance.class_name})"
            )
    return warnings


def train(
    handle: ModelHandle,
    data: Sequence[InstructionInstance],
    config: TrainConfig,
) -> ModelHandle:
    """Fine-tune on instruction instances and return a new handle.

    The loss is sequence cross-entropy on the target text; the optimizer is
    Adam at a constant learning rate with zero weight decay.  Training is
    seeded and leaves the input handle untouched.
    """
    if handle.backend_kind != SEQ2SEQ:
        raise BackendError(f"backend {handle.backend_kind!r} is not trainable")
    if not data:
        raise ValueError("training data must be non-empty")

    torch.manual_seed(config.seed)

    tokenizer = handle.state.tokenizer
    model = copy.deepcopy(handle.state.model)
    if config.adapter is not None:
        attach_bottleneck_adapters(model, config.adapter.reduction_factor)
    model.train()

    warnings = _truncation_warnings(tokenizer, data, config.max_input_length, config.max_target_length)

    parameters = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(parameters, lr=config.resolved_learning_rate)

    order = list(range(len(data)))
    rng = random.Random(config.seed)
    for _ in range(config.epochs):
        rng.shuffle(order)
        for start in range(0, len(order), config.batch_size):
            batch = [data[i] for i in order[start : start + config.batch_size]]
            encoded = tokenizer(
                [instance.input_text for instance in batch],
                padding=True,
                truncation=True,
                max_length=config.max_input_length,
                return_tensors="pt",
            )
            labels = tokenizer(
                text_target=[instance.target_text for instance in batch],
                padding=True,
                truncation=True,
                max_length=config.max_target_length,
                return_tensors="pt",
            ).input_ids
            labels[labels == tokenizer.pad_token_id] = -100
            loss = model(**encoded, labels=labels).loss
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()

    model.eval()
    return ModelHandle(
        backend_kind=SEQ2SEQ,
        checkpoint_id=handle.checkpoint_id,
        state=Seq2SeqState(model=model, tokenizer=tokenizer, truncation_warnings=warnings),
    )


def save_handle(handle: ModelHandle, directory: str | Path) -> Path:
    """Persist a trained model and its tokenizer under ``directory``."""
    if handle.backend_kind != SEQ2SEQ:
        raise BackendError(f"backend {handle.backend_kind!r} has no weights to persist")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    handle.state.model.save_pretrained(directory)
    handle.state.tokenizer.save_pretrained(directory)
    return directory


def generate(
    handle: ModelHandle,
    inputs: Sequence[str],
    max_new_tokens: int = VE_MAX_NEW_TOKENS,
    batch_size: int = 16,
    max_input_length: int = 512,
) -> list[str]:
    """Greedy generation, one output string per input (order preserving)."""
    if not inputs:
        raise ValueError("inputs must be non-empty")

    if handle.backend_kind == GOLD_ORACLE:
        answers = handle.state.answers
        outputs = []
        for index, text in enumerate(inputs):
            if text not in answers:
                raise GenerationError(index, "input was not compiled into this oracle")
            outputs.append(answers[text])
        return outputs

    model = handle.state.model
    tokenizer = handle.state.tokenizer
    outputs = []
    for start in range(0, len(inputs), batch_size):
        batch = list(inputs[start : start + batch_size])
        try:
            encoded = tokenizer(
                batch,
                padding=True,
                truncation=True,
                max_length=max_input_length,
                return_tensors="pt",
            )
            with torch.no_grad():
                generated = model.generate(
                    **encoded,
                    max_new_tokens=max_new_tokens,
                    do_sample=False,
                    num_beams=1,
                )
            outputs.extend(tokenizer.batch_decode(generated, skip_special_tokens=True))
        except Exception as exc:
            raise GenerationError(start, str(exc)) from exc
    return outputs


# ---------------------------------------------------------------------------
# Sentence embedding
# ---------------------------------------------------------------------------

HASH_ENCODER_ID = "hash-ngram"
_HASH_DIM = 256

_ENCODERS: dict[str, Callable[[list[str]], np.ndarray]] = {}


def register_encoder(name: str, fn: Callable[[list[str]], np.ndarray]) -> None:
    """Register a local encoder callable under a configuration name."""
    _ENCODERS[name] = fn


def _hash_ngram_encode(texts: list[str]) -> np.ndarray:
    """Deterministic character-trigram hashing encoder (no weights needed)."""
    matrix = np.zeros((len(texts), _HASH_DIM), dtype=np.float64)
    for row, text in enumerate(texts):
        padded = f" {text.lower()} "
        for i in range(max(1, len(padded) - 2)):
            gram = padded[i : i + 3]
            digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
            index = int.from_bytes(digest[:4], "little") % _HASH_DIM
            sign = 1.0 if digest[4] % 2 == 0 else -1.0
            matrix[row, index] += sign
    return matrix


register_encoder(HASH_ENCODER_ID, _hash_ngram_encode)


def embed(texts: Sequence[str], encoder_id: str) -> np.ndarray:
    """Embed texts into unit-norm vectors with the named sentence encoder."""
    if not texts:
        raise ValueError("texts must be non-empty")
    resolved = resolve_checkpoint(encoder_id)
    encoder = _ENCODERS.get(encoder_id) or _ENCODERS.get(resolved)
    if encoder is not None:
        matrix = np.asarray(encoder(list(texts)), dtype=np.float64)
    else:
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ConfigurationError(
                f"encoder {encoder_id!r} is not registered and sentence-transformers "
                f"is not installed"
            ) from exc
        try:
            model = SentenceTransformer(resolved, cache_folder=model_cache_dir())
        except Exception as exc:
            raise ConfigurationError(f"cannot load sentence encoder {resolved!r}: {exc}") from exc
        matrix = np.asarray(model.encode(list(texts), show_progress_bar=False), dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != len(texts):
        raise ConfigurationError(f"encoder {encoder_id!r} returned shape {matrix.shape}")
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return matrix / norms


def embed_cached(
    texts: Sequence[str],
    encoder_id: str,
    cache_path: str | Path | None = None,
) -> np.ndarray:
    """Embed with an on-disk cache keyed by (encoder id, text hash)."""
    if cache_path is None:
        return embed(texts, encoder_id)

    cache_path = Path(cache_path)
    cached: dict[str, np.ndarray] = {}
    if cache_path.exists():
        with np.load(cache_path) as stored:
            cached = {key: stored[key] for key in stored.files}

    def key_for(text: str) -> str:
        digest = hashlib.sha256(f"{encoder_id}\x00{text}".encode("utf-8")).hexdigest()
        return f"k{digest}"

    missing = [text for text in texts if key_for(text) not in cached]
    if missing:
        fresh = embed(missing, encoder_id)
        for text, vector in zip(missing, fresh):
            cached[key_for(text)] = vector
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        np.savez_compressed(cache_path, **cached)

    return np.stack([cached[key_for(text)] for text in texts])
