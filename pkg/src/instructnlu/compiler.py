"""Instruction templates and per-class instruction compilation.

Every utterance is turned into one yes/no question per intent class and one
extractive question per slot class.  An instruction is rendered as::

    <context> <utterance> <pre-question> <question> <prompt suffix>

with single-space joins; the decorations come from a small grid of template
options, of which two named presets get day-to-day use: ``none`` (bare
utterance and question) and ``desc`` (utterance prefixed with
``"The user says:"`` and the question with ``"Question:"``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Iterable, Literal

from .corpus import (
    VALUE_SEPARATOR,
    AnnotatedUtterance,
    DomainOntology,
    IntentClass,
    SlotClass,
    gold_value_map,
)

CONTEXT_OPTIONS: dict[str, str] = {
    "none": "",
    "given": "Given the following sentence: ",
    "sent": "Sentence: ",
    "usersaid": "The user says: ",
}

PRE_QUESTION_OPTIONS: dict[str, str] = {
    "none": "",
    "question": "Question: ",
    "based": "Based on the question: ",
    "basedabove": "Based on the question above: ",
}

PROMPT_OPTIONS: dict[str, str] = {
    "none": "",
    "answer": "Answer: ",
    "answeroptions": "Options: -yes -no\nAnswer:",
}

YES = "yes"
NO = "no"
UNANSWERABLE = "unanswerable"
NONE_OPTION = "none of the above"
MC_QUESTION = "what is the intent of this sentence?"

TaskKind = Literal["ID-binary", "VE-extractive", "MC-ID", "MC-VE"]
ID_BINARY: TaskKind = "ID-binary"
VE_EXTRACTIVE: TaskKind = "VE-extractive"
MC_ID: TaskKind = "MC-ID"
MC_VE: TaskKind = "MC-VE"


@dataclass(frozen=True)
class InstructionTemplate:
    """One cell of the decoration grid; fields hold the literal strings."""

    context: str = ""
    pre_question: str = ""
    prompt_suffix: str = ""

    def __post_init__(self) -> None:
        if self.context not in CONTEXT_OPTIONS.values():
            raise ValueError(f"unknown context decoration: {self.context!r}")
        if self.pre_question not in PRE_QUESTION_OPTIONS.values():
            raise ValueError(f"unknown pre-question decoration: {self.pre_question!r}")
        if self.prompt_suffix not in PROMPT_OPTIONS.values():
            raise ValueError(f"unknown prompt suffix: {self.prompt_suffix!r}")

    @classmethod
    def from_keys(
        cls, context: str = "none", pre_question: str = "none", prompt: str = "none"
    ) -> "InstructionTemplate":
        try:
            return cls(
                context=CONTEXT_OPTIONS[context],
                pre_question=PRE_QUESTION_OPTIONS[pre_question],
                prompt_suffix=PROMPT_OPTIONS[prompt],
            )
        except KeyError as exc:
            raise ValueError(f"unknown template option key: {exc.args[0]!r}") from exc


#: Named presets: the bare formulation and the descriptive-context one.
PRESETS: dict[str, InstructionTemplate] = {
    "none": InstructionTemplate.from_keys("none", "none", "none"),
    "desc": InstructionTemplate.from_keys("usersaid", "question", "none"),
}


def template_grid() -> list[InstructionTemplate]:
    """All constructible template combinations (4 x 4 x 3 = 48)."""
    return [
        InstructionTemplate(context=c, pre_question=p, prompt_suffix=s)
        for c, p, s in product(
            CONTEXT_OPTIONS.values(), PRE_QUESTION_OPTIONS.values(), PROMPT_OPTIONS.values()
        )
    ]


def render(template: InstructionTemplate, utterance_text: str, question: str) -> str:
    """Assemble one instruction string.

    The options block, when present, starts on its own line; every other
    join is a single space.  Trailing whitespace is stripped so the rendered
    string is stable regardless of which decorations are in play.
    """
    if not utterance_text:
        raise ValueError("utterance_text must be non-empty")
    if not question:
        raise ValueError("question must be non-empty")
    body = f"{template.context}{utterance_text} {template.pre_question}{question}"
    if template.prompt_suffix:
        separator = "\n" if template.prompt_suffix.startswith("Options:") else " "
        body = f"{body}{separator}{template.prompt_suffix}"
    return body.rstrip()


def _question_core(description: str) -> str:
    core = description.strip()
    while core.endswith("?"):
        core = core[:-1].rstrip()
    return core


def question_for_intent(cls: IntentClass) -> str:
    """Yes/no question for an intent class, from its description."""
    if cls.question:
        return cls.question
    return f"did the user {_question_core(cls.description)}?"


def question_for_slot(cls: SlotClass) -> str:
    """Extractive question for a slot class, from its description."""
    if cls.question:
        return cls.question
    return f"what is the {_question_core(cls.description)} mentioned?"


@dataclass(frozen=True)
class InstructionInstance:
    input_text: str
    target_text: str
    task_kind: TaskKind
    class_name: str | None
    utterance_id: str


def compile_id(
    utterance: AnnotatedUtterance,
    ontology: DomainOntology,
    template: InstructionTemplate,
) -> list[InstructionInstance]:
    """One yes/no instance per intent class, in ontology order."""
    return [
        InstructionInstance(
            input_text=render(template, utterance.text, question_for_intent(cls)),
            target_text=YES if cls.name in utterance.gold_intents else NO,
            task_kind=ID_BINARY,
            class_name=cls.name,
            utterance_id=utterance.id,
        )
        for cls in ontology.intents
    ]


def compile_ve(
    utterance: AnnotatedUtterance,
    ontology: DomainOntology,
    template: InstructionTemplate,
) -> list[InstructionInstance]:
    """One extractive instance per slot class, in ontology order.

    The target is the gold value (multiple values joined in utterance
    order), or the literal ``unanswerable`` for slots without a gold value.
    """
    values = gold_value_map(utterance)
    return [
        InstructionInstance(
            input_text=render(template, utterance.text, question_for_slot(cls)),
            target_text=values.get(cls.name, UNANSWERABLE),
            task_kind=VE_EXTRACTIVE,
            class_name=cls.name,
            utterance_id=utterance.id,
        )
        for cls in ontology.slots
    ]


def mc_options(ontology: DomainOntology) -> list[str]:
    """Answer options for the multiple-choice formulation, in ontology order.

    Each intent is represented by its natural-language description; the
    none-case option is always listed last.
    """
    return [cls.description for cls in ontology.intents] + [NONE_OPTION]


def compile_mc(
    utterance: AnnotatedUtterance,
    ontology: DomainOntology,
    template: InstructionTemplate,
) -> InstructionInstance:
    """Single multiple-choice instance listing every intent as an option.

    The target joins the descriptions of all gold intents; an empty gold set
    maps to the none-case option.  The options block replaces the template's
    prompt suffix.
    """
    options = mc_options(ontology)
    gold = [cls.description for cls in ontology.intents if cls.name in utterance.gold_intents]
    target = VALUE_SEPARATOR.join(gold) if gold else NONE_OPTION
    body = f"{template.context}{utterance.text} {template.pre_question}{MC_QUESTION}"
    options_block = "Options:" + "".join(f" -{option}" for option in options)
    return InstructionInstance(
        input_text=f"{body}\n{options_block}\nAnswer:",
        target_text=target,
        task_kind=MC_ID,
        class_name=None,
        utterance_id=utterance.id,
    )


def compile_task(
    utterances: Iterable[AnnotatedUtterance],
    ontology: DomainOntology,
    template: InstructionTemplate,
    task: str,
) -> list[InstructionInstance]:
    """Compile a batch of utterances for ``task``: id, ve, both, or mc."""
    instances: list[InstructionInstance] = []
    for utterance in utterances:
        if task == "id":
            instances.extend(compile_id(utterance, ontology, template))
        elif task == "ve":
            instances.extend(compile_ve(utterance, ontology, template))
        elif task == "both":
            instances.extend(compile_id(utterance, ontology, template))
            instances.extend(compile_ve(utterance, ontology, template))
        elif task == "mc":
            instances.append(compile_mc(utterance, ontology, template))
        else:
            raise ValueError(f"unknown task {task!r}")
    return instances


def write_instances(instances: Iterable[InstructionInstance], path: str | Path) -> None:
    """Emit compiled instances as line-delimited JSON (the interchange format)."""
    with open(path, "w", encoding="utf-8") as f:
        for instance in instances:
            f.write(
                json.dumps(
                    {
                        "input_text": instance.input_text,
                        "target_text": instance.target_text,
                        "task_kind": instance.task_kind,
                        "class_name": instance.class_name,
                        "utterance_id": instance.utterance_id,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_instances(path: str | Path) -> list[InstructionInstance]:
    instances = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            instances.append(
                InstructionInstance(
                    input_text=record["input_text"],
                    target_text=record["target_text"],
                    task_kind=record["task_kind"],
                    class_name=record.get("class_name"),
                    utterance_id=record["utterance_id"],
                )
            )
    return instances
