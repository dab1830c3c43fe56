"""Dialogue NLU as per-class question-answering instructions.

Intent detection becomes one yes/no question per intent class and value
extraction one extractive question per slot class; an instruction-pretrained
sequence-to-sequence model is fine-tuned on the compiled instances and its
generations are decoded back into structured predictions and micro-F1.
"""

__version__ = "0.1.0"

from .corpus import (
    AnnotatedUtterance,
    DomainOntology,
    FoldSplit,
    IntentClass,
    SlotAnnotation,
    SlotClass,
    load_clinc,
    load_nluplusplus,
    make_folds,
    sample_efficiency_split,
)
from .compiler import (
    PRESETS,
    InstructionInstance,
    InstructionTemplate,
    compile_id,
    compile_mc,
    compile_ve,
    render,
)
from .backends import ModelHandle, TrainConfig, embed, generate, load_seq2seq, oracle_handle, train
from .scoring import (
    EvalReport,
    Prediction,
    aggregate,
    assemble,
    micro_f1_id,
    micro_f1_ve,
    parse_id_answer,
    parse_mc_answer,
    parse_ve_answer,
)
from .similarity import CorrelationReport, TransferMatrix, correlation_report, pearson, sim_c, sim_e
from .runs import RunSpec, run

__all__ = [
    "AnnotatedUtterance",
    "CorrelationReport",
    "DomainOntology",
    "EvalReport",
    "FoldSplit",
    "InstructionInstance",
    "InstructionTemplate",
    "IntentClass",
    "ModelHandle",
    "PRESETS",
    "Prediction",
    "RunSpec",
    "SlotAnnotation",
    "SlotClass",
    "TrainConfig",
    "TransferMatrix",
    "aggregate",
    "assemble",
    "compile_id",
    "compile_mc",
    "compile_ve",
    "correlation_report",
    "embed",
    "generate",
    "load_clinc",
    "load_nluplusplus",
    "load_seq2seq",
    "make_folds",
    "micro_f1_id",
    "micro_f1_ve",
    "oracle_handle",
    "parse_id_answer",
    "parse_mc_answer",
    "parse_ve_answer",
    "pearson",
    "render",
    "run",
    "sample_efficiency_split",
    "sim_c",
    "sim_e",
    "train",
]
