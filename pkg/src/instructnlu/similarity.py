"""Domain similarity measures and their correlation with transfer scores.

Two similarity views of a domain pair: the mean pairwise cosine between the
domains' utterance embeddings, and the same over their rendered class
question prompts.  Pearson correlation relates either similarity to
cross-domain transfer performance, one coefficient per target domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .backends import embed
from .errors import UndefinedCorrelationError

DEFAULT_PAIR_BUDGET = 250_000


def _mean_pairwise_cosine(
    a: np.ndarray, b: np.ndarray, pair_budget: int, seed: int
) -> float:
    total_pairs = a.shape[0] * b.shape[0]
    if total_pairs <= pair_budget:
        return float(np.mean(a @ b.T))
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, a.shape[0], size=pair_budget)
    cols = rng.integers(0, b.shape[0], size=pair_budget)
    return float(np.mean(np.sum(a[rows] * b[cols], axis=1)))


def sim_e(
    utterances_a: Sequence[str],
    utterances_b: Sequence[str],
    encoder_id: str,
    pair_budget: int = DEFAULT_PAIR_BUDGET,
    seed: int = 0,
) -> float:
    """Mean cosine over all cross-domain utterance pairs.

    Above the pair budget the mean is estimated over a seeded uniform sample
    of pairs.
    """
    if not utterances_a or not utterances_b:
        raise ValueError("both utterance lists must be non-empty")
    a = embed(utterances_a, encoder_id)
    b = embed(utterances_b, encoder_id)
    return _mean_pairwise_cosine(a, b, pair_budget, seed)


def sim_c(
    prompts_a: Sequence[str],
    prompts_b: Sequence[str],
    encoder_id: str,
    pair_budget: int = DEFAULT_PAIR_BUDGET,
    seed: int = 0,
) -> float:
    """Mean cosine over all cross-domain class-prompt pairs."""
    if not prompts_a or not prompts_b:
        raise ValueError("both prompt lists must be non-empty")
    a = embed(prompts_a, encoder_id)
    b = embed(prompts_b, encoder_id)
    return _mean_pairwise_cosine(a, b, pair_budget, seed)


def similarity_grid(
    texts_by_domain: Mapping[str, Sequence[str]],
    encoder_id: str,
    pair_budget: int = DEFAULT_PAIR_BUDGET,
    seed: int = 0,
) -> dict[tuple[str, str], float]:
    """Pairwise similarity for every ordered pair of distinct domains.

    Each domain is embedded once; the measure is symmetric, so both
    orderings of a pair share one value.
    """
    domains = list(texts_by_domain)
    embedded = {}
    for domain in domains:
        texts = list(texts_by_domain[domain])
        if not texts:
            raise ValueError(f"domain {domain!r} has no texts")
        embedded[domain] = embed(texts, encoder_id)
    grid: dict[tuple[str, str], float] = {}
    for i, src in enumerate(domains):
        for tgt in domains[i + 1 :]:
            value = _mean_pairwise_cosine(embedded[src], embedded[tgt], pair_budget, seed)
            grid[(src, tgt)] = value
            grid[(tgt, src)] = value
    return grid


def class_prompt_texts(ontology, template) -> list[str]:
    """Class prompts as embedded for sim-C: decorated intent questions.

    The pre-question decoration is kept so differently decorated templates
    yield different similarity values, as in the published analysis.
    """
    from .compiler import question_for_intent

    return [f"{template.pre_question}{question_for_intent(cls)}" for cls in ontology.intents]


def example_texts(utterances, template) -> list[str]:
    """Training examples as embedded for sim-E: context-decorated utterances."""
    return [f"{template.context}{u.text}" for u in utterances]


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(xs) != len(ys):
        raise UndefinedCorrelationError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise UndefinedCorrelationError("need at least two points")
    if len(set(xs)) == 1 or len(set(ys)) == 1:
        raise UndefinedCorrelationError("correlation undefined for constant input")
    return float(stats.pearsonr(xs, ys).statistic)


@dataclass(frozen=True)
class TransferMatrix:
    """Source x target grid of transfer scores; the diagonal is in-domain."""

    domains: tuple[str, ...]
    scores: np.ndarray  # percent scale

    def __post_init__(self) -> None:
        matrix = np.asarray(self.scores, dtype=np.float64)
        object.__setattr__(self, "scores", matrix)
        n = len(self.domains)
        if matrix.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix, got {matrix.shape}")
        if np.any(matrix < 0.0) or np.any(matrix > 100.0):
            raise ValueError("transfer scores must lie in [0, 100]")

    def score(self, source: str, target: str) -> float:
        return float(self.scores[self.domains.index(source), self.domains.index(target)])

    def in_domain(self, domain: str) -> float:
        return self.score(domain, domain)


@dataclass(frozen=True)
class CorrelationReport:
    targets: tuple[str, ...]
    rho_examples: dict[str, float]  # per-target, similarity of training examples
    rho_class_prompts: dict[str, float]  # per-target, similarity of class prompts
    average_examples: float  # unweighted signed mean over targets
    average_class_prompts: float
    # mean of absolute per-target coefficients: the published summary column
    # follows this convention (it does not match the signed mean)
    average_abs_examples: float = 0.0
    average_abs_class_prompts: float = 0.0


def correlation_report(
    matrix: TransferMatrix,
    sims_examples: Mapping[tuple[str, str], float],
    sims_class_prompts: Mapping[tuple[str, str], float],
) -> CorrelationReport:
    """Per-target correlation between transfer scores and domain similarity.

    For each target domain, the off-diagonal transfer scores from every
    source are correlated against that pair's similarity; in-domain cells
    are excluded.
    """
    rho_examples: dict[str, float] = {}
    rho_class_prompts: dict[str, float] = {}
    for target in matrix.domains:
        sources = [d for d in matrix.domains if d != target]
        transfer = [matrix.score(source, target) for source in sources]
        for sims in (sims_examples, sims_class_prompts):
            missing = [(s, target) for s in sources if (s, target) not in sims]
            if missing:
                raise ValueError(f"missing similarity for pairs: {missing[:3]}")
        rho_examples[target] = pearson(
            transfer, [sims_examples[(source, target)] for source in sources]
        )
        rho_class_prompts[target] = pearson(
            transfer, [sims_class_prompts[(source, target)] for source in sources]
        )
    return CorrelationReport(
        targets=matrix.domains,
        rho_examples=rho_examples,
        rho_class_prompts=rho_class_prompts,
        average_examples=float(np.mean(list(rho_examples.values()))),
        average_class_prompts=float(np.mean(list(rho_class_prompts.values()))),
        average_abs_examples=float(np.mean(np.abs(list(rho_examples.values())))),
        average_abs_class_prompts=float(np.mean(np.abs(list(rho_class_prompts.values())))),
    )
