"""Decode generated answers into predictions and score them with micro-F1.

Decoding is deliberately forgiving about surface noise (case, surrounding
whitespace, terminal punctuation) but defaults to the negative/absent
reading for anything it cannot recognize: a malformed generation never
inflates recall.  Value comparisons reuse the corpus-wide normalization so
"exact match" means the same thing everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import mean
from typing import Iterable, Sequence

from .compiler import ID_BINARY, MC_ID, NONE_OPTION, VE_EXTRACTIVE, InstructionInstance
from .corpus import AnnotatedUtterance, DomainOntology, gold_value_map, normalize_value

_TERMINAL_PUNCTUATION = ".!?,;:"


def _normalize_answer(text: str) -> str:
    return text.strip().rstrip(_TERMINAL_PUNCTUATION + " \t\n").lower()


def parse_id_answer(text: str) -> bool:
    """True iff the generation reads as an affirmative answer.

    Total over arbitrary strings; anything that is not "yes" after
    normalization counts as negative.
    """
    return _normalize_answer(text) == "yes"


def parse_ve_answer(text: str) -> str | None:
    """Extracted value, or ``None`` for empty/unanswerable generations."""
    trimmed = normalize_value(text)
    if not trimmed:
        return None
    if _normalize_answer(trimmed) == "unanswerable":
        return None
    return trimmed


def parse_mc_answer(text: str, options: Sequence[str]) -> set[int]:
    """Greedy longest-match scan of a generation against answer options.

    Returns the indices of matched options; spans already claimed by a
    longer option are not re-matched, unmatched stretches of text are
    ignored, and the none-case option collapses the result to the empty set.
    """
    if not options:
        raise ValueError("options must be non-empty")
    if len(set(options)) != len(options):
        raise ValueError("options must be mutually distinct")

    haystack = text.lower()
    claimed: list[tuple[int, int]] = []
    matched: set[int] = set()
    by_length = sorted(range(len(options)), key=lambda i: len(options[i]), reverse=True)
    for index in by_length:
        needle = options[index].lower()
        start = 0
        while True:
            pos = haystack.find(needle, start)
            if pos < 0:
                break
            end = pos + len(needle)
            if all(end <= s or pos >= e for s, e in claimed):
                claimed.append((pos, end))
                matched.add(index)
                break
            start = pos + 1

    none_indices = {i for i in matched if options[i].lower() == NONE_OPTION}
    if none_indices:
        return set()
    return matched


@dataclass(frozen=True)
class Prediction:
    utterance_id: str
    intents: frozenset[str] = frozenset()
    slot_values: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for slot, value in self.slot_values.items():
            if _normalize_answer(value) == "unanswerable":
                raise ValueError(f"slot {slot!r} must be absent rather than 'unanswerable'")


def assemble(
    instances: Sequence[InstructionInstance],
    answers: Sequence[str],
    ontology: DomainOntology | None = None,
) -> list[Prediction]:
    """Group per-class answers back into one prediction per utterance.

    Grouping is keyed on utterance id, so instance order does not matter.
    The multiple-choice kind needs the ontology to map matched option
    descriptions back to class names.
    """
    if len(instances) != len(answers):
        raise ValueError(f"{len(instances)} instances but {len(answers)} answers")
    kinds = {instance.task_kind for instance in instances}
    if len(kinds) > 1:
        raise ValueError(f"instances mix task kinds: {sorted(kinds)}")
    kind = kinds.pop() if kinds else ID_BINARY

    if kind == MC_ID and ontology is None:
        raise ValueError("assembling multiple-choice answers requires the ontology")

    intents: dict[str, set[str]] = {}
    slot_values: dict[str, dict[str, str]] = {}
    order: list[str] = []
    for instance, answer in zip(instances, answers):
        uid = instance.utterance_id
        if uid not in intents:
            intents[uid] = set()
            slot_values[uid] = {}
            order.append(uid)
        if kind == ID_BINARY:
            if parse_id_answer(answer):
                intents[uid].add(instance.class_name)  # type: ignore[arg-type]
        elif kind == VE_EXTRACTIVE:
            value = parse_ve_answer(answer)
            if value is not None:
                slot_values[uid][instance.class_name] = value  # type: ignore[index]
        elif kind == MC_ID:
            options = [cls.description for cls in ontology.intents] + [NONE_OPTION]
            for index in parse_mc_answer(answer, options):
                if index < len(ontology.intents):
                    intents[uid].add(ontology.intents[index].name)
        else:
            raise ValueError(f"unsupported task kind {kind!r}")

    return [
        Prediction(utterance_id=uid, intents=frozenset(intents[uid]), slot_values=slot_values[uid])
        for uid in order
    ]


@dataclass(frozen=True)
class EvalReport:
    task: str  # "ID" | "VE"
    micro_f1: float
    tp: int
    fp: int
    fn: int
    per_fold: tuple[tuple[int, float], ...]
    aggregate_rule: str = "mean-of-folds"
    pooled_micro_f1: float | None = None


def _micro_f1(tp: int, fp: int, fn: int) -> float:
    denominator = 2 * tp + fp + fn
    if denominator == 0:
        # No gold and no predicted decisions at all: perfect vacuous agreement.
        return 1.0
    return 2 * tp / denominator


def _paired(
    predictions: Sequence[Prediction], gold: Sequence[AnnotatedUtterance]
) -> list[tuple[Prediction, AnnotatedUtterance]]:
    predicted_ids = {p.utterance_id for p in predictions}
    gold_ids = {u.id for u in gold}
    if predicted_ids != gold_ids:
        missing = sorted(gold_ids - predicted_ids)[:3]
        extra = sorted(predicted_ids - gold_ids)[:3]
        raise ValueError(f"utterance id mismatch (missing {missing}, extra {extra})")
    if len(predictions) != len(gold):
        raise ValueError("duplicate utterance ids in predictions or gold")
    by_id = {p.utterance_id: p for p in predictions}
    return [(by_id[u.id], u) for u in gold]


def micro_f1_id(
    predictions: Sequence[Prediction],
    gold: Sequence[AnnotatedUtterance],
    fold_id: int = 0,
) -> EvalReport:
    """Micro-F1 over (utterance, intent) decisions."""
    tp = fp = fn = 0
    for prediction, utterance in _paired(predictions, gold):
        tp += len(prediction.intents & utterance.gold_intents)
        fp += len(prediction.intents - utterance.gold_intents)
        fn += len(utterance.gold_intents - prediction.intents)
    score = _micro_f1(tp, fp, fn)
    return EvalReport(task="ID", micro_f1=score, tp=tp, fp=fp, fn=fn, per_fold=((fold_id, score),))


def micro_f1_ve(
    predictions: Sequence[Prediction],
    gold: Sequence[AnnotatedUtterance],
    fold_id: int = 0,
) -> EvalReport:
    """Micro-F1 over (utterance, slot) decisions with exact value match.

    A predicted value for an annotated slot that does not match the gold
    value counts as both a false positive and a false negative.
    """
    tp = fp = fn = 0
    for prediction, utterance in _paired(predictions, gold):
        gold_values = {slot: normalize_value(v) for slot, v in gold_value_map(utterance).items()}
        predicted = {slot: normalize_value(v) for slot, v in prediction.slot_values.items()}
        for slot, value in predicted.items():
            if slot not in gold_values:
                fp += 1
            elif value == gold_values[slot]:
                tp += 1
            else:
                fp += 1
                fn += 1
        fn += len([slot for slot in gold_values if slot not in predicted])
    score = _micro_f1(tp, fp, fn)
    return EvalReport(task="VE", micro_f1=score, tp=tp, fp=fp, fn=fn, per_fold=((fold_id, score),))


def aggregate(reports: Iterable[EvalReport]) -> EvalReport:
    """Combine per-fold reports: the headline score is the mean over folds.

    Counts are summed and the pooled-counts score is kept alongside for
    comparison, but the unweighted mean of fold scores is authoritative.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("cannot aggregate zero reports")
    tasks = {report.task for report in reports}
    if len(tasks) != 1:
        raise ValueError(f"cannot aggregate mixed tasks: {sorted(tasks)}")
    per_fold = tuple(entry for report in reports for entry in report.per_fold)
    tp = sum(report.tp for report in reports)
    fp = sum(report.fp for report in reports)
    fn = sum(report.fn for report in reports)
    return EvalReport(
        task=tasks.pop(),
        micro_f1=mean(score for _, score in per_fold),
        tp=tp,
        fp=fp,
        fn=fn,
        per_fold=per_fold,
        pooled_micro_f1=_micro_f1(tp, fp, fn),
    )
