"""Corpus types, dataset loaders, and fold/sampling splits.

Both supported datasets are normalized into the same in-memory types so
everything downstream (instruction compilation, scoring, experiment
runners) is dataset-agnostic:

* A multi-domain multi-intent corpus laid out as one directory per domain
  holding ``ontology.json`` plus per-fold utterance files ``fold0.json``,
  ``fold1.json``, ... (the published few-shot cross-validation layout).
* The 150-intent single-file release (``data_full.json``) whose intents are
  grouped into 10 domains of 15 intents each; the grouping and per-intent
  question descriptions ship as package resources.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Iterable

from .errors import DatasetError, ValidationError

#: Canonical separator for multi-value slot targets (kept invertible by the
#: answer decoder; do not change without regenerating golden files).
VALUE_SEPARATOR = "; "

#: Held-out test size used by the sample-efficiency protocol.
SAMPLE_EFFICIENCY_TEST_SIZE = 1000


def normalize_value(text: str) -> str:
    """Single definition of "exact" used at load time and at scoring time.

    Trims surrounding whitespace only; case is preserved.
    """
    return text.strip()


@dataclass(frozen=True)
class IntentClass:
    name: str
    description: str
    question: str | None = None  # full question override, used verbatim when set

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("intent class name must be non-empty")
        if not self.description:
            raise ValidationError(f"intent class {self.name!r} has an empty description")


@dataclass(frozen=True)
class SlotClass:
    name: str
    description: str
    question: str | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("slot class name must be non-empty")
        if not self.description:
            raise ValidationError(f"slot class {self.name!r} has an empty description")


@dataclass(frozen=True)
class SlotAnnotation:
    slot: str
    value: str
    span: tuple[int, int] | None = None  # [start, end) into the utterance text


@dataclass(frozen=True)
class AnnotatedUtterance:
    id: str
    text: str
    gold_intents: frozenset[str]
    gold_slots: tuple[SlotAnnotation, ...] = ()


@dataclass(frozen=True)
class DomainOntology:
    domain_name: str
    intents: tuple[IntentClass, ...]
    slots: tuple[SlotClass, ...] = ()

    def __post_init__(self) -> None:
        if not self.domain_name:
            raise ValidationError("domain name must be non-empty")
        intent_names = [c.name for c in self.intents]
        if len(set(intent_names)) != len(intent_names):
            raise ValidationError(f"duplicate intent names in domain {self.domain_name!r}")
        slot_names = [c.name for c in self.slots]
        if len(set(slot_names)) != len(slot_names):
            raise ValidationError(f"duplicate slot names in domain {self.domain_name!r}")

    @property
    def intent_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.intents)

    @property
    def slot_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.slots)


@dataclass(frozen=True)
class FoldSplit:
    fold_id: int
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        overlap = set(self.train_ids) & set(self.test_ids)
        if overlap:
            raise ValidationError(f"fold {self.fold_id}: train/test overlap on {sorted(overlap)[:3]}")


def validate_utterance(utterance: AnnotatedUtterance, ontology: DomainOntology) -> None:
    """Check referential integrity and span consistency of one utterance."""
    known_intents = set(ontology.intent_names)
    for intent in utterance.gold_intents:
        if intent not in known_intents:
            raise ValidationError(
                f"utterance {utterance.id!r}: unknown intent {intent!r} "
                f"(domain {ontology.domain_name!r})"
            )
    known_slots = set(ontology.slot_names)
    for ann in utterance.gold_slots:
        if ann.slot not in known_slots:
            raise ValidationError(
                f"utterance {utterance.id!r}: unknown slot {ann.slot!r} "
                f"(domain {ontology.domain_name!r})"
            )
        if ann.span is not None:
            start, end = ann.span
            if not (0 <= start <= end <= len(utterance.text)):
                raise ValidationError(f"utterance {utterance.id!r}: span {ann.span} out of range")
            if normalize_value(utterance.text[start:end]) != normalize_value(ann.value):
                raise ValidationError(
                    f"utterance {utterance.id!r}: span text "
                    f"{utterance.text[start:end]!r} does not match value {ann.value!r}"
                )


def gold_value_map(utterance: AnnotatedUtterance) -> dict[str, str]:
    """Canonical gold value per annotated slot.

    Multiple values for one slot are joined with ``VALUE_SEPARATOR`` in
    utterance order (span start when spans are present, annotation order
    otherwise).
    """
    per_slot: dict[str, list[SlotAnnotation]] = {}
    for ann in utterance.gold_slots:
        per_slot.setdefault(ann.slot, []).append(ann)
    joined: dict[str, str] = {}
    for slot, anns in per_slot.items():
        if all(a.span is not None for a in anns):
            anns = sorted(anns, key=lambda a: a.span)  # type: ignore[arg-type,return-value]
        joined[slot] = VALUE_SEPARATOR.join(normalize_value(a.value) for a in anns)
    return joined


# ---------------------------------------------------------------------------
# Multi-domain folded dataset (per-domain directory layout)
# ---------------------------------------------------------------------------


def _read_json(path: Path):
    if not path.exists():
        raise DatasetError(f"missing dataset file: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"corrupt dataset file {path}: {exc}") from exc


def _parse_class_entry(name: str, entry) -> tuple[str, str | None]:
    """Accept either a bare description string or a dict with metadata."""
    if isinstance(entry, str):
        return entry, None
    if isinstance(entry, dict):
        description = entry.get("description", "")
        question = entry.get("question")
        return description, question
    raise DatasetError(f"class {name!r}: unsupported ontology entry {type(entry).__name__}")


def _parse_ontology(domain_name: str, raw: dict) -> DomainOntology:
    intents = []
    for name, entry in raw.get("intents", {}).items():
        description, question = _parse_class_entry(name, entry)
        intents.append(IntentClass(name=name, description=description, question=question))
    slots = []
    for name, entry in raw.get("slots", {}).items():
        description, question = _parse_class_entry(name, entry)
        slots.append(SlotClass(name=name, description=description, question=question))
    return DomainOntology(domain_name=domain_name, intents=tuple(intents), slots=tuple(slots))


def _parse_slot_annotations(record: dict, utterance_id: str) -> tuple[SlotAnnotation, ...]:
    annotations: list[SlotAnnotation] = []
    for slot, entry in (record.get("slots") or {}).items():
        entries = entry if isinstance(entry, list) else [entry]
        for ann in entries:
            if not isinstance(ann, dict):
                raise DatasetError(f"utterance {utterance_id!r}: malformed slot entry for {slot!r}")
            value = ann.get("text", ann.get("value"))
            if value is None:
                raise DatasetError(f"utterance {utterance_id!r}: slot {slot!r} has no value text")
            span = tuple(ann["span"]) if ann.get("span") is not None else None
            annotations.append(SlotAnnotation(slot=slot, value=str(value), span=span))
    return tuple(annotations)


def _fold_index(path: Path) -> int:
    stem = path.stem  # "fold17"
    digits = "".join(ch for ch in stem if ch.isdigit())
    if not digits:
        raise DatasetError(f"cannot parse fold index from file name: {path}")
    return int(digits)


def load_nluplusplus(
    path: str | Path,
    domain_name: str,
    fold_setup: str = "20F",
) -> tuple[DomainOntology, list[AnnotatedUtterance], list[FoldSplit]]:
    """Load one domain of the per-domain folded dataset.

    ``path`` is the dataset root; ``path/<domain>/`` must hold
    ``ontology.json`` and fold files ``fold*.json``.  The published fold
    files are taken verbatim: in the ``"20F"`` setup split *i* trains on the
    utterances of fold file *i* and evaluates on all other folds; ``"10F"``
    merges consecutive fold-file pairs into one training fold.
    """
    if fold_setup not in ("10F", "20F"):
        raise ValueError(f"fold_setup must be '10F' or '20F', got {fold_setup!r}")
    domain_dir = Path(path) / domain_name
    ontology = _parse_ontology(domain_name, _read_json(domain_dir / "ontology.json"))

    fold_files = sorted(domain_dir.glob("fold*.json"), key=_fold_index)
    if not fold_files:
        raise DatasetError(f"no fold files found under {domain_dir}")

    utterances: list[AnnotatedUtterance] = []
    file_ids: list[list[str]] = []
    for file_pos, fold_file in enumerate(fold_files):
        records = _read_json(fold_file)
        ids: list[str] = []
        for pos, record in enumerate(records):
            utterance_id = f"{domain_name}-f{file_pos:02d}-u{pos:03d}"
            utterance = AnnotatedUtterance(
                id=utterance_id,
                text=record["text"],
                gold_intents=frozenset(record.get("intents") or ()),
                gold_slots=_parse_slot_annotations(record, utterance_id),
            )
            validate_utterance(utterance, ontology)
            utterances.append(utterance)
            ids.append(utterance_id)
        file_ids.append(ids)

    if fold_setup == "20F":
        cells = file_ids
    else:
        if len(file_ids) % 2 != 0:
            raise DatasetError(
                f"10F setup needs an even number of fold files, found {len(file_ids)}"
            )
        cells = [file_ids[i] + file_ids[i + 1] for i in range(0, len(file_ids), 2)]

    folds = _folds_from_cells(cells)
    return ontology, utterances, folds


def _folds_from_cells(cells: list[list[str]]) -> list[FoldSplit]:
    """One split per cell: train on the cell, evaluate on everything else."""
    folds = []
    for i, cell in enumerate(cells):
        test = [uid for j, other in enumerate(cells) if j != i for uid in other]
        folds.append(FoldSplit(fold_id=i, train_ids=tuple(cell), test_ids=tuple(test)))
    return folds


# ---------------------------------------------------------------------------
# 150-intent release (single JSON file, 10 domains x 15 intents)
# ---------------------------------------------------------------------------

INTENTS_PER_DOMAIN = 15


def _load_resource(name: str) -> dict:
    with importlib_resources.files("instructnlu.resources").joinpath(name).open(
        encoding="utf-8"
    ) as f:
        return json.load(f)


def clinc_domain_map() -> dict[str, list[str]]:
    """Domain name -> its 15 intent names, in the release's domain grouping."""
    return _load_resource("clinc_domains.json")


def clinc_intent_descriptions() -> dict[str, str]:
    """Intent name -> natural-language description used to build questions."""
    return _load_resource("clinc_descriptions.json")


def _resolve_clinc_file(path: str | Path) -> Path:
    p = Path(path)
    if p.is_dir():
        p = p / "data_full.json"
    return p


def load_clinc(
    path: str | Path,
    splits: tuple[str, ...] = ("train",),
) -> dict[str, tuple[DomainOntology, list[AnnotatedUtterance]]]:
    """Load the 150-intent release grouped into its 10 domains.

    By default only the release's training split is loaded: that is the pool
    the folded few-shot protocol divides into 10 folds of 150 examples.
    Out-of-scope utterances never enter domain corpora; fetch them with
    :func:`load_clinc_out_of_scope` when they should join an evaluation set.
    """
    raw = _read_json(_resolve_clinc_file(path))
    domain_map = clinc_domain_map()
    descriptions = clinc_intent_descriptions()

    intent_to_domain: dict[str, str] = {}
    for domain, intents in domain_map.items():
        if len(intents) != INTENTS_PER_DOMAIN:
            raise ValidationError(
                f"domain {domain!r} lists {len(intents)} intents, expected {INTENTS_PER_DOMAIN}"
            )
        for intent in intents:
            if intent in intent_to_domain:
                raise ValidationError(f"intent {intent!r} mapped to more than one domain")
            intent_to_domain[intent] = domain

    ontologies: dict[str, DomainOntology] = {}
    for domain, intents in domain_map.items():
        classes = []
        for intent in intents:
            if intent not in descriptions:
                raise ValidationError(f"intent {intent!r} has no description resource")
            classes.append(IntentClass(name=intent, description=descriptions[intent]))
        ontologies[domain] = DomainOntology(domain_name=domain, intents=tuple(classes))

    per_domain: dict[str, list[AnnotatedUtterance]] = {d: [] for d in domain_map}
    for split in splits:
        if split not in raw:
            raise DatasetError(f"release file has no {split!r} split")
        for pos, record in enumerate(raw[split]):
            text, label = record
            domain = intent_to_domain.get(label)
            if domain is None:
                raise ValidationError(f"{split}[{pos}]: unknown intent label {label!r}")
            utterance = AnnotatedUtterance(
                id=f"{domain}-{split}-{pos:05d}",
                text=text,
                gold_intents=frozenset({label}),
            )
            per_domain[domain].append(utterance)

    return {domain: (ontologies[domain], per_domain[domain]) for domain in domain_map}


def load_clinc_out_of_scope(
    path: str | Path,
    splits: tuple[str, ...] = ("train", "val", "test"),
) -> list[AnnotatedUtterance]:
    """Out-of-scope utterances, kept with empty gold intent sets."""
    raw = _read_json(_resolve_clinc_file(path))
    utterances = []
    for split in splits:
        for pos, record in enumerate(raw.get(f"oos_{split}", ())):
            text, _label = record
            utterances.append(
                AnnotatedUtterance(
                    id=f"oos-{split}-{pos:05d}",
                    text=text,
                    gold_intents=frozenset(),
                )
            )
    return utterances


# ---------------------------------------------------------------------------
# Fold construction and sampling
# ---------------------------------------------------------------------------


def make_folds(
    utterances: list[AnnotatedUtterance],
    k: int,
    seed: int,
) -> list[FoldSplit]:
    """Split a corpus into ``k`` few-shot folds.

    Utterances are stratified by their gold intent signature and assigned
    round-robin to ``k`` cells after a seeded shuffle, so classes spread
    evenly (for a 15-intent domain with 100 examples per intent and ``k=10``
    each cell holds 150 examples, 10 per intent).  Fold *i* trains on cell
    *i* and evaluates on the union of all other cells; the cells partition
    the corpus.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if len(utterances) < k:
        raise ValueError(f"need at least k={k} utterances, got {len(utterances)}")

    strata: dict[tuple[str, ...], list[AnnotatedUtterance]] = {}
    for utterance in utterances:
        strata.setdefault(tuple(sorted(utterance.gold_intents)), []).append(utterance)

    rng = random.Random(seed)
    cells: list[list[str]] = [[] for _ in range(k)]
    cursor = 0
    for signature in sorted(strata):
        members = list(strata[signature])
        rng.shuffle(members)
        for member in members:
            cells[cursor % k].append(member.id)
            cursor += 1

    return _folds_from_cells(cells)


def sample_efficiency_split(
    utterances: list[AnnotatedUtterance],
    n_train: int,
    seed: int,
) -> tuple[list[AnnotatedUtterance], list[AnnotatedUtterance]]:
    """Fixed held-out test set plus a random training subset.

    The 1000-example test set is drawn first, so for a given seed it is
    identical across all ``n_train`` values; training sets for different
    sizes are independent samples from the remainder.
    """
    if n_train < 1:
        raise ValueError(f"n_train must be positive, got {n_train}")
    required = SAMPLE_EFFICIENCY_TEST_SIZE + n_train
    if len(utterances) < required:
        raise ValueError(
            f"need at least {required} utterances "
            f"({SAMPLE_EFFICIENCY_TEST_SIZE} test + {n_train} train), got {len(utterances)}"
        )
    order = list(utterances)
    random.Random(seed).shuffle(order)
    test = order[:SAMPLE_EFFICIENCY_TEST_SIZE]
    train = order[SAMPLE_EFFICIENCY_TEST_SIZE : SAMPLE_EFFICIENCY_TEST_SIZE + n_train]
    return train, test


def select(utterances: Iterable[AnnotatedUtterance], ids: Iterable[str]) -> list[AnnotatedUtterance]:
    """Materialize utterances for a fold's id list, preserving id order."""
    by_id = {u.id: u for u in utterances}
    missing = [uid for uid in ids if uid not in by_id]
    if missing:
        raise ValueError(f"unknown utterance ids: {missing[:3]}")
    return [by_id[uid] for uid in ids]


# ---------------------------------------------------------------------------
# Audit snapshot and fingerprinting
# ---------------------------------------------------------------------------


def utterance_record(utterance: AnnotatedUtterance) -> dict:
    return {
        "id": utterance.id,
        "text": utterance.text,
        "intents": sorted(utterance.gold_intents),
        "slots": [
            {"slot": a.slot, "value": a.value, "span": list(a.span) if a.span else None}
            for a in utterance.gold_slots
        ],
    }


def write_snapshot(utterances: Iterable[AnnotatedUtterance], path: str | Path) -> None:
    """Emit one JSON record per utterance for corpus audits."""
    with open(path, "w", encoding="utf-8") as f:
        for utterance in utterances:
            f.write(json.dumps(utterance_record(utterance), ensure_ascii=False) + "\n")


def corpus_fingerprint(utterances: Iterable[AnnotatedUtterance]) -> str:
    """Stable content hash of a corpus, recorded in run manifests."""
    digest = hashlib.sha256()
    for utterance in sorted(utterances, key=lambda u: u.id):
        digest.update(json.dumps(utterance_record(utterance), sort_keys=True).encode("utf-8"))
    return digest.hexdigest()
