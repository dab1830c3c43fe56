"""Backend tests: oracle semantics, training, adapters, and embedding."""

from __future__ import annotations

import json

import numpy as np
import pytest

from instructnlu.backends import (
    ADAPTER_LEARNING_RATE,
    DEFAULT_LEARNING_RATE,
    GOLD_ORACLE,
    HASH_ENCODER_ID,
    AdapterConfig,
    ModelHandle,
    TrainConfig,
    attach_bottleneck_adapters,
    checkpoint_aliases,
    count_parameters,
    count_trainable_parameters,
    embed,
    embed_cached,
    generate,
    oracle_handle,
    register_encoder,
    resolve_checkpoint,
    seq2seq_handle,
    t5_architecture,
    train,
)
from instructnlu.compiler import PRESETS, compile_task
from instructnlu.corpus import load_nluplusplus
from instructnlu.errors import BackendError, ConfigurationError, GenerationError


def _instances(nlupp_root, domain="banking", task="both", limit=None):
    ontology, utterances, _ = load_nluplusplus(nlupp_root, domain)
    if limit:
        utterances = utterances[:limit]
    return ontology, utterances, compile_task(utterances, ontology, PRESETS["desc"], task)


# ---------------------------------------------------------------------------
# Gold oracle
# ---------------------------------------------------------------------------


def test_oracle_answers_every_compiled_target(nlupp_root):
    for domain in ("banking", "hotels"):
        ontology, utterances, instances = _instances(nlupp_root, domain)
        instances += compile_task(utterances, ontology, PRESETS["desc"], "mc")
        handle = oracle_handle(instances)
        answers = generate(handle, [i.input_text for i in instances])
        assert answers == [i.target_text for i in instances]


def test_oracle_ve_unanswerable(nlupp_root):
    ontology, utterances, instances = _instances(nlupp_root, "banking", task="ve")
    handle = oracle_handle(instances)
    unanswered = [i for i in instances if i.target_text == "unanswerable"]
    assert unanswered
    assert generate(handle, [unanswered[0].input_text]) == ["unanswerable"]


def test_oracle_unknown_input_carries_index(nlupp_root):
    _, _, instances = _instances(nlupp_root, limit=2)
    handle = oracle_handle(instances)
    with pytest.raises(GenerationError) as excinfo:
        generate(handle, [instances[0].input_text, "never compiled"])
    assert excinfo.value.index == 1


def test_oracle_rejects_conflicting_targets(nlupp_root):
    _, _, instances = _instances(nlupp_root, limit=1)
    clash = instances[0]
    conflicting = [clash, clash.__class__(
        input_text=clash.input_text,
        target_text="something else",
        task_kind=clash.task_kind,
        class_name=clash.class_name,
        utterance_id=clash.utterance_id,
    )]
    with pytest.raises(ValueError):
        oracle_handle(conflicting)


def test_oracle_is_not_trainable(nlupp_root):
    _, _, instances = _instances(nlupp_root, limit=1)
    handle = oracle_handle(instances)
    with pytest.raises(BackendError):
        train(handle, instances, TrainConfig(epochs=1))


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@pytest.fixture()
def tiny_handle(tiny_seq2seq):
    model, tokenizer = tiny_seq2seq
    return seq2seq_handle(model, tokenizer, checkpoint_id="tiny-test")


def _smoke_config(**overrides):
    defaults = dict(epochs=1, batch_size=4, seed=0, max_input_length=48, max_target_length=8)
    defaults.update(overrides)
    return TrainConfig(**defaults)


def test_train_smoke_returns_distinct_handle(tiny_handle, nlupp_root):
    _, _, instances = _instances(nlupp_root, limit=1)
    assert len(instances) >= 8
    trained = train(tiny_handle, instances[:8], _smoke_config())
    assert trained is not tiny_handle
    assert trained.state.model is not tiny_handle.state.model
    assert trained.checkpoint_id == tiny_handle.checkpoint_id


def test_train_leaves_original_handle_untouched(tiny_handle, nlupp_root):
    _, _, instances = _instances(nlupp_root, limit=2)
    probe = [i.input_text for i in instances[:3]]
    before = generate(tiny_handle, probe, max_new_tokens=4)
    train(tiny_handle, instances, _smoke_config(epochs=2))
    after = generate(tiny_handle, probe, max_new_tokens=4)
    assert before == after


def test_train_accepts_mixed_task_data(tiny_handle, nlupp_root):
    ontology, utterances, _ = _instances(nlupp_root, limit=2)
    mixed = compile_task(utterances[:2], ontology, PRESETS["desc"], "both")
    kinds = {i.task_kind for i in mixed}
    assert kinds == {"ID-binary", "VE-extractive"}
    trained = train(tiny_handle, mixed, _smoke_config())
    assert trained.backend_kind == "seq2seq-checkpoint"


def test_train_is_deterministic_under_seed(tiny_handle, nlupp_root):
    _, _, instances = _instances(nlupp_root, limit=2)
    probe = [i.input_text for i in instances[:4]]
    first = train(tiny_handle, instances, _smoke_config(epochs=2, seed=7))
    second = train(tiny_handle, instances, _smoke_config(epochs=2, seed=7))
    assert generate(first, probe, max_new_tokens=6) == generate(second, probe, max_new_tokens=6)


def test_train_rejects_empty_data(tiny_handle):
    with pytest.raises(ValueError):
        train(tiny_handle, [], _smoke_config())


def test_truncation_warnings_are_recorded(tiny_handle, nlupp_root):
    _, _, instances = _instances(nlupp_root, limit=2)
    trained = train(tiny_handle, instances, _smoke_config(max_input_length=4))
    assert trained.state.truncation_warnings
    assert "truncated" in trained.state.truncation_warnings[0]


def test_generate_preserves_order_and_length(tiny_handle, nlupp_root):
    _, _, instances = _instances(nlupp_root, limit=3)
    inputs = [i.input_text for i in instances]
    outputs = generate(tiny_handle, inputs, max_new_tokens=4, batch_size=2)
    assert len(outputs) == len(inputs)
    assert all(isinstance(o, str) for o in outputs)


def test_generate_rejects_empty_inputs(tiny_handle):
    with pytest.raises(ValueError):
        generate(tiny_handle, [])


# ---------------------------------------------------------------------------
# Train config
# ---------------------------------------------------------------------------


def test_train_config_defaults_follow_protocol():
    config = TrainConfig()
    assert config.epochs == 10
    assert config.batch_size == 8
    assert config.resolved_learning_rate == DEFAULT_LEARNING_RATE
    adapter_config = TrainConfig(adapter=AdapterConfig())
    assert adapter_config.adapter.reduction_factor == 16
    assert adapter_config.resolved_learning_rate == ADAPTER_LEARNING_RATE
    explicit = TrainConfig(learning_rate=1e-3, adapter=AdapterConfig())
    assert explicit.resolved_learning_rate == 1e-3


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-1.0)
    with pytest.raises(ValueError):
        AdapterConfig(reduction_factor=0)


# ---------------------------------------------------------------------------
# Adapters
# ---------------------------------------------------------------------------


def test_adapters_freeze_base_and_expose_bottlenecks(tiny_seq2seq):
    import copy

    model, _ = tiny_seq2seq
    model = copy.deepcopy(model)
    total_before = count_parameters(model)
    inserted = attach_bottleneck_adapters(model, reduction_factor=16)
    blocks = len(model.encoder.block) + len(model.decoder.block)
    assert inserted == blocks
    d_model = model.config.d_model
    bottleneck = max(1, d_model // 16)
    per_adapter = 2 * d_model * bottleneck + bottleneck + d_model
    assert count_trainable_parameters(model) == blocks * per_adapter
    assert count_parameters(model) == total_before + blocks * per_adapter


def test_adapter_training_touches_only_adapters(tiny_handle, nlupp_root):
    _, _, instances = _instances(nlupp_root, limit=2)
    trained = train(tiny_handle, instances, _smoke_config(adapter=AdapterConfig(reduction_factor=8)))
    base = tiny_handle.state.model
    tuned = trained.state.model
    # base weights are bit-identical; adapters carry all the difference
    assert (
        tuned.encoder.block[0].layer[0].SelfAttention.q.weight
        == base.encoder.block[0].layer[0].SelfAttention.q.weight
    ).all()
    assert count_trainable_parameters(tuned) < count_parameters(tuned)


def test_adapters_start_as_identity(tiny_handle, nlupp_root):
    import copy

    _, _, instances = _instances(nlupp_root, limit=2)
    probe = [i.input_text for i in instances[:3]]
    baseline = generate(tiny_handle, probe, max_new_tokens=4)
    adapterized = copy.deepcopy(tiny_handle.state.model)
    attach_bottleneck_adapters(adapterized, reduction_factor=16)
    wrapped = seq2seq_handle(adapterized, tiny_handle.state.tokenizer)
    assert generate(wrapped, probe, max_new_tokens=4) == baseline


def test_base_architecture_parameter_budget():
    from instructnlu.backends import t5_model

    model = t5_model("base")
    total = count_parameters(model)
    assert total == pytest.approx(248_000_000, rel=0.02)
    with pytest.raises(ConfigurationError):
        t5_architecture("giant")


# ---------------------------------------------------------------------------
# Checkpoint aliases
# ---------------------------------------------------------------------------


def test_checkpoint_aliases_resolve_from_config():
    aliases = checkpoint_aliases()
    assert "instruct-base" in aliases
    assert resolve_checkpoint("instruct-base") == aliases["instruct-base"]
    assert resolve_checkpoint("some/raw-id") == "some/raw-id"


def test_checkpoint_alias_override_file(tmp_path, monkeypatch):
    override = tmp_path / "checkpoints.json"
    override.write_text(json.dumps({"instruct-base": "my/local-model"}))
    monkeypatch.setenv("INSTRUCTNLU_CHECKPOINTS", str(override))
    assert resolve_checkpoint("instruct-base") == "my/local-model"


# ---------------------------------------------------------------------------
# Embedding
# ---------------------------------------------------------------------------


def test_embed_is_deterministic_and_normalized():
    texts = ["hello world", "hello world", "completely different"]
    matrix = embed(texts, HASH_ENCODER_ID)
    assert matrix.shape[0] == 3
    assert np.allclose(matrix[0], matrix[1])
    assert not np.allclose(matrix[0], matrix[2])
    norms = np.linalg.norm(matrix, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-6)


def test_embed_cosine_symmetry():
    matrix = embed(["a short one", "another text entirely"], HASH_ENCODER_ID)
    forward = float(matrix[0] @ matrix[1])
    backward = float(matrix[1] @ matrix[0])
    assert abs(forward - backward) < 1e-9


def test_embed_unknown_encoder_is_a_configuration_error():
    with pytest.raises(ConfigurationError):
        embed(["text"], "definitely/not-a-real-encoder-anywhere")


def test_embed_rejects_empty_input():
    with pytest.raises(ValueError):
        embed([], HASH_ENCODER_ID)


def test_registered_encoder_is_used():
    calls = []

    def fake(texts):
        calls.append(list(texts))
        return np.eye(8)[: len(texts)]

    register_encoder("test-basis", fake)
    matrix = embed(["a", "b"], "test-basis")
    assert calls == [["a", "b"]]
    assert np.allclose(matrix @ matrix.T, np.eye(2))


def test_embed_cached_avoids_recomputation(tmp_path):
    calls = []

    def counting(texts):
        calls.append(list(texts))
        return np.ones((len(texts), 4))

    register_encoder("test-counting", counting)
    cache = tmp_path / "cache.npz"
    first = embed_cached(["x", "y"], "test-counting", cache)
    second = embed_cached(["x", "y", "z"], "test-counting", cache)
    assert len(calls) == 2
    assert calls[1] == ["z"]  # only the novel text is embedded again
    assert first.shape == (2, 4)
    assert second.shape == (3, 4)
