"""Similarity and correlation tests, with a closed-form correlation oracle."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest

from instructnlu.backends import HASH_ENCODER_ID, register_encoder
from instructnlu.errors import UndefinedCorrelationError
from instructnlu.similarity import (
    CorrelationReport,
    TransferMatrix,
    correlation_report,
    pearson,
    sim_c,
    sim_e,
    similarity_grid,
)


def closed_form_pearson(xs, ys):
    """Direct covariance / sigma computation, independent of the implementation."""
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    cov = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    var_x = sum((x - mean_x) ** 2 for x in xs)
    var_y = sum((y - mean_y) ** 2 for y in ys)
    return cov / math.sqrt(var_x * var_y)


@pytest.fixture(scope="module", autouse=True)
def basis_encoder():
    """Encoder mapping known words onto orthogonal unit vectors."""

    words = ["apple", "banana", "cherry", "date", "elder"]

    def encode(texts):
        matrix = np.zeros((len(texts), len(words)))
        for row, text in enumerate(texts):
            for column, word in enumerate(words):
                if word in text:
                    matrix[row, column] += 1.0
        return matrix

    register_encoder("test-orthogonal", encode)
    return words


# ---------------------------------------------------------------------------
# sim-E / sim-C
# ---------------------------------------------------------------------------


def test_identical_singletons_have_similarity_one():
    assert sim_e(["apple"], ["apple"], "test-orthogonal") == pytest.approx(1.0)
    assert sim_c(["banana"], ["banana"], "test-orthogonal") == pytest.approx(1.0)


def test_orthogonal_singletons_have_similarity_zero():
    assert sim_e(["apple"], ["banana"], "test-orthogonal") == pytest.approx(0.0)
    assert sim_c(["cherry"], ["date"], "test-orthogonal") == pytest.approx(0.0)


def test_similarity_is_symmetric():
    a = ["apple banana", "cherry", "apple date"]
    b = ["banana", "date elder"]
    forward = sim_e(a, b, HASH_ENCODER_ID)
    backward = sim_e(b, a, HASH_ENCODER_ID)
    assert abs(forward - backward) < 1e-9


def test_similarity_rejects_empty_lists():
    with pytest.raises(ValueError):
        sim_e([], ["x"], HASH_ENCODER_ID)
    with pytest.raises(ValueError):
        sim_c(["x"], [], HASH_ENCODER_ID)


def test_pair_budget_sampling_is_seeded_and_close():
    rng = random.Random(0)
    a = [f"apple {rng.random():.6f}" for _ in range(40)]
    b = [f"banana {rng.random():.6f}" for _ in range(40)]
    exact = sim_e(a, b, HASH_ENCODER_ID)
    sampled_once = sim_e(a, b, HASH_ENCODER_ID, pair_budget=400, seed=5)
    sampled_twice = sim_e(a, b, HASH_ENCODER_ID, pair_budget=400, seed=5)
    assert sampled_once == sampled_twice
    assert sampled_once == pytest.approx(exact, abs=0.05)


def test_similarity_grid_covers_all_ordered_pairs():
    texts = {"d1": ["apple"], "d2": ["banana"], "d3": ["apple banana"]}
    grid = similarity_grid(texts, "test-orthogonal")
    assert set(grid) == {(a, b) for a in texts for b in texts if a != b}
    assert grid[("d1", "d2")] == grid[("d2", "d1")]
    assert grid[("d1", "d2")] == pytest.approx(0.0)
    assert grid[("d1", "d3")] == pytest.approx(1 / math.sqrt(2))


# ---------------------------------------------------------------------------
# Pearson correlation
# ---------------------------------------------------------------------------


def test_pearson_perfect_linear_relations():
    xs = [1.0, 2.0, 3.0, 4.0]
    assert pearson(xs, [2 * x + 1 for x in xs]) == pytest.approx(1.0)
    assert pearson(xs, [-x for x in xs]) == pytest.approx(-1.0)


def test_pearson_matches_closed_form_oracle():
    rng = random.Random(991)
    for _ in range(50):
        xs = [rng.uniform(-5, 5) for _ in range(9)]
        ys = [rng.uniform(-5, 5) for _ in range(9)]
        assert pearson(xs, ys) == pytest.approx(closed_form_pearson(xs, ys), abs=1e-12)


def test_pearson_is_invariant_under_positive_affine_maps():
    rng = random.Random(17)
    xs = [rng.uniform(0, 10) for _ in range(12)]
    ys = [rng.uniform(0, 10) for _ in range(12)]
    base = pearson(xs, ys)
    scaled = pearson([3.5 * x + 2.0 for x in xs], [0.25 * y - 7.0 for y in ys])
    assert scaled == pytest.approx(base, abs=1e-9)


def test_pearson_error_cases():
    with pytest.raises(UndefinedCorrelationError):
        pearson([1.0], [2.0])
    with pytest.raises(UndefinedCorrelationError):
        pearson([1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(UndefinedCorrelationError):
        pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


# ---------------------------------------------------------------------------
# Transfer matrix and correlation report
# ---------------------------------------------------------------------------


def _toy_matrix():
    domains = ("a", "b", "c")
    scores = [
        [90.0, 50.0, 10.0],
        [40.0, 91.0, 30.0],
        [20.0, 70.0, 92.0],
    ]
    return TransferMatrix(domains=domains, scores=scores)


def test_transfer_matrix_validation_and_lookup():
    matrix = _toy_matrix()
    assert matrix.score("a", "b") == 50.0
    assert matrix.in_domain("c") == 92.0
    with pytest.raises(ValueError):
        TransferMatrix(domains=("a", "b"), scores=[[1.0]])
    with pytest.raises(ValueError):
        TransferMatrix(domains=("a",), scores=[[150.0]])


def test_correlation_report_perfect_alignment():
    matrix = _toy_matrix()
    # similarities proportional to transfer scores -> rho exactly 1 per target
    sims = {
        (source, target): matrix.score(source, target) / 100.0
        for source in matrix.domains
        for target in matrix.domains
        if source != target
    }
    anti = {pair: -value for pair, value in sims.items()}
    report = correlation_report(matrix, sims, anti)
    assert isinstance(report, CorrelationReport)
    for target in matrix.domains:
        assert report.rho_examples[target] == pytest.approx(1.0)
        assert report.rho_class_prompts[target] == pytest.approx(-1.0)
    assert report.average_examples == pytest.approx(1.0)
    assert report.average_class_prompts == pytest.approx(-1.0)


def test_correlation_report_excludes_diagonal():
    matrix = _toy_matrix()
    # IN-domain scores are huge; if the diagonal leaked into the correlation
    # the coefficient could not be exactly -1 on these off-diagonal sims.
    sims = {
        (s, t): -matrix.score(s, t) for s in matrix.domains for t in matrix.domains if s != t
    }
    report = correlation_report(matrix, sims, sims)
    for target in matrix.domains:
        assert report.rho_examples[target] == pytest.approx(-1.0)


def test_correlation_report_missing_pair_and_constant_column():
    matrix = _toy_matrix()
    sims = {
        (s, t): 0.5 for s in matrix.domains for t in matrix.domains if s != t
    }
    incomplete = dict(sims)
    incomplete.pop(("a", "b"))
    with pytest.raises(ValueError):
        correlation_report(matrix, incomplete, sims)
    # constant similarities make the correlation undefined
    with pytest.raises(UndefinedCorrelationError):
        correlation_report(matrix, sims, sims)


def test_correlation_report_is_deterministic():
    matrix = _toy_matrix()
    rng = random.Random(4)
    sims = {
        (s, t): rng.random() for s in matrix.domains for t in matrix.domains if s != t
    }
    first = correlation_report(matrix, sims, sims)
    second = correlation_report(matrix, sims, sims)
    assert first == second


def test_full_correlation_pipeline_over_fixture_prompts(clinc_file):
    """End-to-end shape of the published correlation analysis, desk-scale."""
    from instructnlu import reference
    from instructnlu.compiler import PRESETS
    from instructnlu.corpus import load_clinc
    from instructnlu.similarity import class_prompt_texts, example_texts

    template = PRESETS["desc"]
    domains = load_clinc(clinc_file)
    prompts = {
        name: class_prompt_texts(ontology, template) for name, (ontology, _) in domains.items()
    }
    examples = {
        name: example_texts(utterances[:10], template) for name, (_, utterances) in domains.items()
    }
    sims_c = similarity_grid(prompts, HASH_ENCODER_ID)
    sims_e = similarity_grid(examples, HASH_ENCODER_ID)
    matrix = reference.transfer_matrix("desc")
    report = correlation_report(matrix, sims_e, sims_c)
    assert set(report.rho_class_prompts) == set(reference.CLINC_DOMAINS)
    for value in report.rho_class_prompts.values():
        assert -1.0 <= value <= 1.0
    assert -1.0 <= report.average_abs_class_prompts <= 1.0


def test_prompt_and_example_decorations_differ_by_template(clinc_file):
    from instructnlu.compiler import PRESETS
    from instructnlu.corpus import load_clinc
    from instructnlu.similarity import class_prompt_texts, example_texts

    ontology, utterances = load_clinc(clinc_file)["banking"]
    bare = class_prompt_texts(ontology, PRESETS["none"])
    decorated = class_prompt_texts(ontology, PRESETS["desc"])
    assert decorated[0] == f"Question: {bare[0]}"
    assert example_texts(utterances[:1], PRESETS["desc"])[0].startswith("The user says: ")
