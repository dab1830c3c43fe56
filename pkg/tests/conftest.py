"""Shared fixtures: miniature corpora in the real datasets' file layouts.

The folded two-domain fixture mirrors the per-domain directory layout
(``ontology.json`` plus ``fold*.json``); the 150-intent fixture mirrors the
single-file release (``data_full.json``) and covers every intent of every
domain so round-trip properties run against the full ontology inventory.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from instructnlu.corpus import clinc_domain_map


BANKING_ONTOLOGY = {
    "intents": {
        "booking": {"description": "intend to talk about some booking", "general": True},
        "change": {"description": "intend to change something", "general": True},
        "cancel": {"description": "intend to cancel something", "general": True},
        "credit_card": {"description": "intend to talk about their credit card"},
        "transfer_money": {"description": "intend to transfer money"},
    },
    "slots": {
        "date": {"description": "date"},
        "amount_of_money": {"description": "amount of money"},
        "person_name": {"description": "name of a person"},
    },
}

HOTELS_ONTOLOGY = {
    "intents": {
        "booking": {"description": "intend to talk about some booking", "general": True},
        "change": {"description": "intend to change something", "general": True},
        "room": {"description": "talk about their room"},
        "wifi": {"description": "ask about the wifi"},
        "housekeeping": {"description": "request housekeeping"},
    },
    "slots": {
        "date_from": {"description": "date of arrival"},
        "date_to": {"description": "date of departure"},
        "num_guests": {
            "description": "number of people",
            "question": "what is the number of people mentioned?",
        },
    },
}


def _banking_examples() -> list[dict]:
    examples = [
        {
            "text": "i want to book a table for friday",
            "intents": ["booking"],
            "slots": {"date": {"text": "friday", "span": [27, 33]}},
        },
        {
            "text": "wanna change my room reservation",
            "intents": ["change", "booking"],
        },
        {
            "text": "cancel the transfer of 200 pounds to alice",
            "intents": ["cancel", "transfer_money"],
            "slots": {
                "amount_of_money": {"text": "200 pounds", "span": [23, 33]},
                "person_name": {"text": "alice", "span": [37, 42]},
            },
        },
        {
            "text": "my credit card got declined yesterday",
            "intents": ["credit_card"],
            "slots": {"date": {"text": "yesterday", "span": [28, 37]}},
        },
        {
            "text": "move money from savings on monday or tuesday",
            "intents": ["transfer_money"],
            "slots": {
                "date": [
                    {"text": "monday", "span": [27, 33]},
                    {"text": "tuesday", "span": [37, 44]},
                ]
            },
        },
        {
            "text": "what is the weather like",
            "intents": [],
        },
        {
            "text": "send 50 euros to bob and cancel my card",
            "intents": ["transfer_money", "cancel", "credit_card"],
            "slots": {
                "amount_of_money": {"text": "50 euros", "span": [5, 13]},
                "person_name": {"text": "bob", "span": [17, 20]},
            },
        },
        {
            "text": "book me in for the 3rd of may please",
            "intents": ["booking"],
            "slots": {"date": {"text": "3rd of may", "span": [19, 29]}},
        },
    ]
    rng = random.Random(13)
    fillers = [
        ("can you help me with a booking", ["booking"]),
        ("i need to change the date", ["change"]),
        ("cancel everything", ["cancel"]),
        ("is my credit card active", ["credit_card"]),
        ("wire the rent to my landlord", ["transfer_money"]),
        ("do you sell stamps", []),
        ("change my transfer to next week", ["change", "transfer_money"]),
        ("i would like to cancel my booking", ["cancel", "booking"]),
    ]
    for i in range(32):
        text, intents = fillers[i % len(fillers)]
        examples.append({"text": f"{text} variant {i}", "intents": list(intents)})
    rng.shuffle(examples)
    return examples


def _hotels_examples() -> list[dict]:
    examples = [
        {
            "text": "the wifi in my room is not working",
            "intents": ["wifi", "room"],
        },
        {
            "text": "i am arriving on the 4th of july with 2 friends",
            "intents": ["booking"],
            "slots": {
                "date_from": {"text": "4th of july", "span": [21, 32]},
                "num_guests": {"text": "2", "span": [38, 39]},
            },
        },
        {
            "text": "please send housekeeping tomorrow",
            "intents": ["housekeeping"],
        },
        {
            "text": "change my stay to end on sunday",
            "intents": ["change", "booking"],
            "slots": {"date_to": {"text": "sunday", "span": [25, 31]}},
        },
        {
            "text": "how do i get to the airport",
            "intents": [],
        },
        {
            "text": "we are 4 people checking in on friday and out on monday",
            "intents": ["booking"],
            "slots": {
                "num_guests": {"text": "4", "span": [7, 8]},
                "date_from": {"text": "friday", "span": [31, 37]},
                "date_to": {"text": "monday", "span": [49, 55]},
            },
        },
    ]
    fillers = [
        ("does the room have a view", ["room"]),
        ("what is the wifi password", ["wifi"]),
        ("my room needs cleaning", ["housekeeping", "room"]),
        ("i want to book a suite", ["booking"]),
        ("change the reservation", ["change", "booking"]),
        ("tell me a joke", []),
    ]
    for i in range(34):
        text, intents = fillers[i % len(fillers)]
        examples.append({"text": f"{text} variant {i}", "intents": list(intents)})
    random.Random(29).shuffle(examples)
    return examples


def write_nlupp_fixture(root: Path, n_folds: int = 20) -> Path:
    """Write the two-domain fixture tree under ``root`` and return it."""
    for domain, ontology, examples in (
        ("banking", BANKING_ONTOLOGY, _banking_examples()),
        ("hotels", HOTELS_ONTOLOGY, _hotels_examples()),
    ):
        domain_dir = root / domain
        domain_dir.mkdir(parents=True, exist_ok=True)
        (domain_dir / "ontology.json").write_text(json.dumps(ontology, indent=1))
        folds: list[list[dict]] = [[] for _ in range(n_folds)]
        for i, example in enumerate(examples):
            folds[i % n_folds].append(example)
        for fold_id, records in enumerate(folds):
            (domain_dir / f"fold{fold_id}.json").write_text(json.dumps(records, indent=1))
    return root


def write_clinc_fixture(path: Path, per_intent: int = 3, oos: int = 6) -> Path:
    """Write a release-shaped file covering all 150 intents."""
    domain_map = clinc_domain_map()
    rng = random.Random(7)
    raw: dict[str, list] = {"train": [], "val": [], "test": []}
    for domain, intents in domain_map.items():
        for intent in intents:
            base = intent.replace("_", " ")
            for i in range(per_intent):
                raw["train"].append([f"can you {base} for me please {i}", intent])
            raw["val"].append([f"help with {base} now", intent])
            raw["test"].append([f"i need {base} today", intent])
    for key in raw:
        rng.shuffle(raw[key])
    raw["oos_train"] = [[f"completely unrelated chatter {i}", "oos"] for i in range(oos)]
    raw["oos_val"] = [["what even is this", "oos"]]
    raw["oos_test"] = [["out of scope question", "oos"]]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(raw))
    return path


ACCEPTANCE_RESULTS: list[tuple[str, str, str]] = []


def record_acceptance(criterion: str, status: str, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((criterion, status, detail))


def pytest_terminal_summary(terminalreporter) -> None:
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for criterion, status, detail in ACCEPTANCE_RESULTS:
        suffix = f"  [{detail}]" if detail else ""
        terminalreporter.write_line(f"{status:<5} {criterion}{suffix}")


@pytest.fixture(scope="session")
def nlupp_root(tmp_path_factory) -> Path:
    return write_nlupp_fixture(tmp_path_factory.mktemp("nlupp"))


@pytest.fixture(scope="session")
def clinc_file(tmp_path_factory) -> Path:
    return write_clinc_fixture(tmp_path_factory.mktemp("clinc") / "data_full.json")


@pytest.fixture(scope="session")
def tiny_seq2seq():
    """A trainable word-level encoder-decoder small enough for test runs."""
    from tests.tiny_model import build_tiny_seq2seq

    return build_tiny_seq2seq()
