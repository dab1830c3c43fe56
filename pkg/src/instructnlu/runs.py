"""Configuration-driven experiment runners.

Every protocol shares one folded engine: compile the fold's training split
into instructions, fine-tune, compile the evaluation split, generate,
decode, score, then aggregate across folds.  A manifest (resolved spec,
seeds, corpus fingerprint, code fingerprint) is persisted before any
training starts, result files are written atomically, and re-running a
completed spec with an identical manifest is a no-op unless forced.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import yaml

from .backends import (
    GOLD_ORACLE,
    HASH_ENCODER_ID,
    ID_MAX_NEW_TOKENS,
    VE_MAX_NEW_TOKENS,
    ModelHandle,
    AdapterConfig,
    TrainConfig,
    embed_cached,
    generate,
    load_seq2seq,
    oracle_handle,
    save_handle,
    train,
)
from .clse import CLSEConfig, predict_clse_batch, save_classifier, train_clse
from .compiler import PRESETS, InstructionInstance, InstructionTemplate, compile_task
from .corpus import (
    AnnotatedUtterance,
    DomainOntology,
    FoldSplit,
    corpus_fingerprint,
    load_clinc,
    load_clinc_out_of_scope,
    load_nluplusplus,
    make_folds,
    sample_efficiency_split,
    select,
)
from .reference import reference_score, transfer_matrix as reference_transfer_matrix
from .scoring import EvalReport, Prediction, aggregate, assemble, micro_f1_id, micro_f1_ve
from .similarity import (
    DEFAULT_PAIR_BUDGET,
    CorrelationReport,
    TransferMatrix,
    class_prompt_texts,
    correlation_report,
    example_texts,
    similarity_grid,
)

PROTOCOLS = (
    "zero-shot",
    "in-domain",
    "cross-domain",
    "cross-task",
    "multi-task",
    "sample-efficiency",
    "mc-ablation",
    "clse-baseline",
)

MC_MAX_NEW_TOKENS = 64


@dataclass
class RunSpec:
    protocol: str
    dataset: str = "nlupp"  # "nlupp" | "clinc"
    data_path: str = ""
    domain: str | None = None
    source: str | None = None  # cross-domain only
    target: str | None = None
    fold_setup: str = "20F"  # "10F" | "20F" (published folds) | "custom" (generated)
    k: int = 10  # fold count when folds are generated
    fold_seed: int = 0
    template: str = "desc"  # preset name or "context/prequestion/prompt" option keys
    task: str = "id"  # "id" | "ve" | "both"
    backend: str = GOLD_ORACLE  # checkpoint alias/id, or the gold oracle
    encoder: str = HASH_ENCODER_ID  # sentence encoder for the embedding baseline
    train: TrainConfig = field(default_factory=TrainConfig)
    clse: CLSEConfig = field(default_factory=CLSEConfig)
    seeds: tuple[int, ...] = (0,)
    sizes: tuple[int, ...] = ()  # sample-efficiency training sizes
    folds: tuple[int, ...] | None = None  # restrict to these fold ids
    include_out_of_scope_eval: bool = False
    save_models: bool = False  # persist each fold's tuned weights under the run dir
    output_dir: str = "runs/latest"
    cache_dir: str | None = None
    force: bool = False

    def __post_init__(self) -> None:
        self.seeds = tuple(self.seeds)
        self.sizes = tuple(self.sizes)
        if self.folds is not None:
            self.folds = tuple(self.folds)

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}; pick one of {PROTOCOLS}")
        if self.dataset not in ("nlupp", "clinc"):
            raise ValueError(f"unknown dataset {self.dataset!r}")
        if self.dataset == "nlupp" and self.fold_setup not in ("10F", "20F"):
            raise ValueError("the folded two-domain dataset ships 10F and 20F setups only")
        if self.protocol == "cross-domain":
            if not self.source or not self.target:
                raise ValueError("cross-domain runs need both --source and --target")
            if self.source == self.target:
                raise ValueError("cross-domain runs need distinct source and target domains")
        elif self.protocol == "sample-efficiency":
            if not self.domain:
                raise ValueError(f"{self.protocol} runs need a domain")
            if self.sizes and list(self.sizes) != sorted(self.sizes):
                raise ValueError("sample-efficiency sizes must be ascending")
        elif not self.domain:
            raise ValueError(f"{self.protocol} runs need a domain")
        if self.protocol == "multi-task":
            if self.task != "both":
                raise ValueError("multi-task runs require task=both")
        elif self.task == "both":
            raise ValueError("task=both is reserved for the multi-task protocol")
        elif self.task not in ("id", "ve"):
            raise ValueError(f"task must be 'id' or 've', got {self.task!r}")
        if self.protocol == "clse-baseline" and self.task != "id":
            raise ValueError("the sentence-embedding baseline supports intent detection only")

    def to_dict(self) -> dict:
        raw = dataclasses.asdict(self)
        raw["seeds"] = list(self.seeds)
        raw["sizes"] = list(self.sizes)
        raw["folds"] = list(self.folds) if self.folds is not None else None
        return raw

    @classmethod
    def from_dict(cls, raw: dict) -> "RunSpec":
        data = dict(raw)
        train_raw = dict(data.pop("train", {}) or {})
        adapter_raw = train_raw.pop("adapter", None)
        adapter = AdapterConfig(**adapter_raw) if adapter_raw else None
        clse_raw = dict(data.pop("clse", {}) or {})
        spec = cls(
            train=TrainConfig(adapter=adapter, **train_raw),
            clse=CLSEConfig(**clse_raw),
            **data,
        )
        return spec

    @classmethod
    def from_file(cls, path: str | Path) -> "RunSpec":
        text = Path(path).read_text(encoding="utf-8")
        raw = yaml.safe_load(text)
        if not isinstance(raw, dict):
            raise ValueError(f"run spec file {path} must hold a mapping")
        return cls.from_dict(raw)


def resolve_template(name: str) -> InstructionTemplate:
    """Preset name ('none', 'desc') or 'context/prequestion/prompt' option keys."""
    if name in PRESETS:
        return PRESETS[name]
    parts = name.split("/")
    if len(parts) == 3:
        return InstructionTemplate.from_keys(*parts)
    raise ValueError(f"unknown template {name!r}; use a preset or 'ctx/preq/prompt' keys")


# ---------------------------------------------------------------------------
# Manifest and result persistence
# ---------------------------------------------------------------------------


def write_json_atomic(payload: Any, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, ensure_ascii=False, default=str)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def code_fingerprint() -> str:
    """Revision of the running code: git commit if available, source hash otherwise."""
    package_dir = Path(__file__).resolve().parent
    try:
        revision = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            cwd=package_dir,
            capture_output=True,
            text=True,
            timeout=10,
        )
        if revision.returncode == 0:
            return revision.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    digest = hashlib.sha256()
    for source in sorted(package_dir.rglob("*.py")):
        digest.update(source.read_bytes())
    return f"src-{digest.hexdigest()[:40]}"


def build_manifest(spec: RunSpec, corpus_fingerprints: dict[str, str]) -> dict:
    return {
        "spec": spec.to_dict(),
        "protocol": spec.protocol,
        "template": spec.template,
        "backend": spec.backend,
        "seed": spec.train.seed,
        "seeds": list(spec.seeds),
        "corpus_fingerprints": corpus_fingerprints,
        "code_fingerprint": code_fingerprint(),
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }


_MANIFEST_VOLATILE_KEYS = ("created_at", "truncation_warnings")


def _manifest_matches(old: dict, new: dict) -> bool:
    def stripped(manifest: dict) -> dict:
        clean = dict(manifest)
        for key in _MANIFEST_VOLATILE_KEYS:
            clean.pop(key, None)
        clean["spec"] = {k: v for k, v in clean.get("spec", {}).items() if k != "force"}
        return clean

    return stripped(old) == stripped(new)


def _existing_results(out_dir: Path, manifest: dict, force: bool) -> dict | None:
    manifest_path = out_dir / "manifest.json"
    results_path = out_dir / "results.json"
    if force or not manifest_path.exists() or not results_path.exists():
        return None
    try:
        with open(manifest_path, encoding="utf-8") as f:
            old_manifest = json.load(f)
        with open(results_path, encoding="utf-8") as f:
            results = json.load(f)
    except (OSError, json.JSONDecodeError):
        return None
    if results.get("status") == "complete" and _manifest_matches(old_manifest, manifest):
        results["resumed"] = True
        return results
    return None


def _report_dict(report: EvalReport) -> dict:
    payload = dataclasses.asdict(report)
    payload["per_fold"] = [list(entry) for entry in report.per_fold]
    return payload


def _write_results_csv(rows: list[dict], path: Path) -> None:
    import csv

    if not rows:
        return
    fieldnames = sorted({key for row in rows for key in row})
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# Data plumbing
# ---------------------------------------------------------------------------


def _load_domain(
    spec: RunSpec, domain: str
) -> tuple[DomainOntology, list[AnnotatedUtterance], list[FoldSplit]]:
    if spec.dataset == "nlupp":
        return load_nluplusplus(spec.data_path, domain, spec.fold_setup)
    ontology, utterances = load_clinc(spec.data_path)[domain]
    folds = make_folds(utterances, spec.k, spec.fold_seed)
    if spec.include_out_of_scope_eval:
        extra = load_clinc_out_of_scope(spec.data_path)
        utterances = utterances + extra
        extra_ids = tuple(u.id for u in extra)
        folds = [
            FoldSplit(f.fold_id, f.train_ids, f.test_ids + extra_ids) for f in folds
        ]
    return ontology, utterances, folds


def _check_task_supported(ontology: DomainOntology, task: str) -> None:
    if task in ("ve", "both") and not ontology.slots:
        raise ValueError(
            f"domain {ontology.domain_name!r} defines no slots; value extraction "
            f"is not available"
        )


def _decode_budget(task: str) -> int:
    if task == "id":
        return ID_MAX_NEW_TOKENS
    if task == "mc":
        return MC_MAX_NEW_TOKENS
    return VE_MAX_NEW_TOKENS


def _evaluate_instances(
    handle: ModelHandle,
    instances: list[InstructionInstance],
    gold: list[AnnotatedUtterance],
    ontology: DomainOntology,
    task: str,
    fold_id: int,
    answer_cache: dict[str, str] | None = None,
) -> EvalReport:
    inputs = [instance.input_text for instance in instances]
    budget = _decode_budget(task)
    if answer_cache is None:
        answers = generate(handle, inputs, max_new_tokens=budget)
    else:
        novel = [text for text in dict.fromkeys(inputs) if text not in answer_cache]
        if novel:
            answer_cache.update(zip(novel, generate(handle, novel, max_new_tokens=budget)))
        answers = [answer_cache[text] for text in inputs]
    predictions = assemble(instances, answers, ontology if task == "mc" else None)
    if task == "ve":
        return micro_f1_ve(predictions, gold, fold_id=fold_id)
    return micro_f1_id(predictions, gold, fold_id=fold_id)


# ---------------------------------------------------------------------------
# Folded protocol engine
# ---------------------------------------------------------------------------


def _protocol_roles(spec: RunSpec) -> tuple[str, str, list[str], list[str], bool]:
    """(train_domain, eval_domain, train_tasks, eval_tasks, trains_model)."""
    if spec.protocol == "cross-domain":
        return spec.source, spec.target, [spec.task], [spec.task], True
    domain = spec.domain
    if spec.protocol == "in-domain":
        return domain, domain, [spec.task], [spec.task], True
    if spec.protocol == "multi-task":
        return domain, domain, ["id", "ve"], ["id", "ve"], True
    if spec.protocol == "cross-task":
        other = "ve" if spec.task == "id" else "id"
        return domain, domain, [other], [spec.task], True
    if spec.protocol == "zero-shot":
        return domain, domain, [], [spec.task], False
    if spec.protocol == "mc-ablation":
        return domain, domain, ["mc"], ["mc"], True
    raise ValueError(f"protocol {spec.protocol!r} does not use the folded engine")


def _run_folded(spec: RunSpec) -> dict:
    spec.validate()
    out_dir = Path(spec.output_dir)
    template = resolve_template(spec.template)
    train_domain, eval_domain, train_tasks, eval_tasks, trains_model = _protocol_roles(spec)

    train_ontology, train_utterances, train_folds = _load_domain(spec, train_domain)
    if eval_domain == train_domain:
        eval_ontology, eval_utterances, eval_folds = train_ontology, train_utterances, train_folds
    else:
        eval_ontology, eval_utterances, eval_folds = _load_domain(spec, eval_domain)
        if len(train_folds) != len(eval_folds):
            raise ValueError(
                f"fold setups do not pair up: {len(train_folds)} source folds vs "
                f"{len(eval_folds)} target folds"
            )
    for task in set(train_tasks) | set(eval_tasks):
        if task != "mc":
            _check_task_supported(train_ontology if task in train_tasks else eval_ontology, task)

    fingerprints = {train_domain: corpus_fingerprint(train_utterances)}
    if eval_domain != train_domain:
        fingerprints[eval_domain] = corpus_fingerprint(eval_utterances)
    manifest = build_manifest(spec, fingerprints)

    existing = _existing_results(out_dir, manifest, spec.force)
    if existing is not None:
        return existing

    write_json_atomic(manifest, out_dir / "manifest.json")

    base_handle = None
    if spec.backend != GOLD_ORACLE:
        base_handle = load_seq2seq(spec.backend, spec.cache_dir)

    fold_ids = list(spec.folds) if spec.folds is not None else [f.fold_id for f in train_folds]
    folds_by_id = {fold.fold_id: fold for fold in train_folds}
    eval_folds_by_id = {fold.fold_id: fold for fold in eval_folds}

    answer_cache: dict[str, str] | None = {} if not trains_model else None
    rows: list[dict] = []
    fold_reports: dict[str, list[EvalReport]] = {task: [] for task in eval_tasks}
    truncation_warnings: list[str] = []

    def write_results(status: str) -> dict:
        reports = {
            task: _report_dict(aggregate(reports_for_task))
            for task, reports_for_task in fold_reports.items()
            if reports_for_task
        }
        results = {
            "status": status,
            "protocol": spec.protocol,
            "dataset": spec.dataset,
            "train_domain": train_domain,
            "eval_domain": eval_domain,
            "fold_setup": spec.fold_setup if spec.dataset == "nlupp" else f"{spec.k}F",
            "template": spec.template,
            "backend": spec.backend,
            "seed": spec.train.seed,
            "reports": reports,
            "rows": rows,
            "reference": {
                task: reference_score(
                    spec.protocol,
                    spec.dataset,
                    eval_domain,
                    task,
                    spec.fold_setup,
                    spec.template,
                    source=train_domain if spec.protocol == "cross-domain" else None,
                )
                for task in eval_tasks
            },
        }
        if truncation_warnings:
            manifest["truncation_warnings"] = truncation_warnings
            write_json_atomic(manifest, out_dir / "manifest.json")
            results["truncation_warnings"] = truncation_warnings
        write_json_atomic(results, out_dir / "results.json")
        _write_results_csv(rows, out_dir / "results.csv")
        return results

    try:
        for fold_id in fold_ids:
            if fold_id not in folds_by_id:
                raise ValueError(f"fold {fold_id} does not exist (have {sorted(folds_by_id)})")
            train_fold = folds_by_id[fold_id]
            eval_fold = eval_folds_by_id[fold_id]
            eval_gold = select(eval_utterances, eval_fold.test_ids)
            eval_instances = {
                task: compile_task(eval_gold, eval_ontology, template, task)
                for task in eval_tasks
            }

            if spec.backend == GOLD_ORACLE:
                handle = oracle_handle(
                    [instance for batch in eval_instances.values() for instance in batch]
                )
            elif trains_model:
                train_gold = select(train_utterances, train_fold.train_ids)
                train_instances: list[InstructionInstance] = []
                for task in train_tasks:
                    train_instances.extend(
                        compile_task(train_gold, train_ontology, template, task)
                    )
                handle = train(base_handle, train_instances, spec.train)
                truncation_warnings.extend(
                    w for w in handle.state.truncation_warnings if w not in truncation_warnings
                )
                if spec.save_models:
                    save_handle(handle, out_dir / "models" / f"fold{fold_id}")
            else:
                handle = base_handle

            for task in eval_tasks:
                report = _evaluate_instances(
                    handle,
                    eval_instances[task],
                    eval_gold,
                    eval_ontology,
                    task,
                    fold_id,
                    answer_cache=answer_cache,
                )
                fold_reports[task].append(report)
                rows.append(
                    {
                        "protocol": spec.protocol,
                        "fold_id": fold_id,
                        "task": task,
                        "micro_f1": report.micro_f1,
                        "tp": report.tp,
                        "fp": report.fp,
                        "fn": report.fn,
                    }
                )
    except BaseException:
        write_results("partial")
        raise

    results = write_results("complete")

    if spec.protocol == "zero-shot":
        # Fold-independent view: each utterance scored exactly once.
        full = {}
        for task in eval_tasks:
            instances = compile_task(eval_utterances, eval_ontology, template, task)
            handle = (
                oracle_handle(instances) if spec.backend == GOLD_ORACLE else base_handle
            )
            report = _evaluate_instances(
                handle, instances, list(eval_utterances), eval_ontology, task, 0,
                answer_cache=answer_cache,
            )
            full[task] = report.micro_f1
        results["full_corpus_micro_f1"] = full
        write_json_atomic(results, out_dir / "results.json")

    return results


def _aggregated(results: dict, task: str) -> EvalReport:
    payload = results["reports"][task]
    return EvalReport(
        task=payload["task"],
        micro_f1=payload["micro_f1"],
        tp=payload["tp"],
        fp=payload["fp"],
        fn=payload["fn"],
        per_fold=tuple((fold, score) for fold, score in payload["per_fold"]),
        aggregate_rule=payload["aggregate_rule"],
        pooled_micro_f1=payload.get("pooled_micro_f1"),
    )


# ---------------------------------------------------------------------------
# Protocol entry points
# ---------------------------------------------------------------------------


def run_in_domain(spec: RunSpec) -> EvalReport:
    if spec.protocol != "in-domain":
        raise ValueError(f"expected protocol in-domain, got {spec.protocol!r}")
    return _aggregated(_run_folded(spec), spec.task)


def run_cross_domain(spec: RunSpec) -> EvalReport:
    if spec.protocol != "cross-domain":
        raise ValueError(f"expected protocol cross-domain, got {spec.protocol!r}")
    return _aggregated(_run_folded(spec), spec.task)


def run_cross_task(spec: RunSpec) -> EvalReport:
    if spec.protocol != "cross-task":
        raise ValueError(f"expected protocol cross-task, got {spec.protocol!r}")
    return _aggregated(_run_folded(spec), spec.task)


def run_zero_shot(spec: RunSpec) -> EvalReport:
    if spec.protocol != "zero-shot":
        raise ValueError(f"expected protocol zero-shot, got {spec.protocol!r}")
    return _aggregated(_run_folded(spec), spec.task)


def run_multi_task(spec: RunSpec) -> dict[str, EvalReport]:
    if spec.protocol != "multi-task":
        raise ValueError(f"expected protocol multi-task, got {spec.protocol!r}")
    results = _run_folded(spec)
    return {task: _aggregated(results, task) for task in ("id", "ve")}


def run_mc_ablation(spec: RunSpec) -> EvalReport:
    if spec.protocol != "mc-ablation":
        raise ValueError(f"expected protocol mc-ablation, got {spec.protocol!r}")
    return _aggregated(_run_folded(spec), "mc")


def run_transfer_grid(spec: RunSpec, domains: Sequence[str]) -> TransferMatrix:
    """Fill a source x target grid; the diagonal holds in-domain scores.

    Each cell runs as its own sub-spec under ``output_dir/<source>--<target>``
    so completed cells are reused on rerun.
    """
    domains = list(domains)
    if len(domains) < 2:
        raise ValueError("a transfer grid needs at least two domains")
    scores = []
    for source in domains:
        row = []
        for target in domains:
            cell_dir = str(Path(spec.output_dir) / f"{source}--{target}")
            if source == target:
                cell = dataclasses.replace(
                    spec,
                    protocol="in-domain",
                    domain=source,
                    source=None,
                    target=None,
                    output_dir=cell_dir,
                )
            else:
                cell = dataclasses.replace(
                    spec,
                    protocol="cross-domain",
                    domain=None,
                    source=source,
                    target=target,
                    output_dir=cell_dir,
                )
            report = _aggregated(_run_folded(cell), spec.task)
            row.append(report.micro_f1 * 100.0)
        scores.append(row)
    matrix = TransferMatrix(domains=tuple(domains), scores=scores)
    payload = {
        "status": "complete",
        "protocol": "transfer-grid",
        "task": spec.task,
        "domains": domains,
        "scores": [[float(v) for v in row] for row in matrix.scores],
    }
    write_json_atomic(payload, Path(spec.output_dir) / "transfer_matrix.json")
    return matrix


def run_sample_efficiency(
    spec: RunSpec,
    sizes: Sequence[int] | None = None,
    seeds: Sequence[int] | None = None,
) -> list[dict]:
    """Train at increasing data sizes against one fixed held-out test set.

    Returns one row per (size, seed) plus the per-size mean over seeds.
    """
    if spec.protocol != "sample-efficiency":
        raise ValueError(f"expected protocol sample-efficiency, got {spec.protocol!r}")
    spec.validate()
    sizes = list(sizes if sizes is not None else spec.sizes)
    seeds = list(seeds if seeds is not None else spec.seeds)
    if not sizes:
        raise ValueError("sample-efficiency runs need at least one training size")
    if sorted(sizes) != sizes:
        raise ValueError("sizes must be ascending")

    template = resolve_template(spec.template)
    out_dir = Path(spec.output_dir)
    ontology, utterances, _ = _load_domain(spec, spec.domain)
    _check_task_supported(ontology, spec.task)

    manifest = build_manifest(spec, {spec.domain: corpus_fingerprint(utterances)})
    manifest["sizes"] = sizes
    existing = _existing_results(out_dir, manifest, spec.force)
    if existing is not None:
        return existing["rows"]

    write_json_atomic(manifest, out_dir / "manifest.json")

    base_handle = None
    if spec.backend != GOLD_ORACLE:
        base_handle = load_seq2seq(spec.backend, spec.cache_dir)

    rows: list[dict] = []
    try:
        for seed in seeds:
            reference_test_ids: tuple[str, ...] | None = None
            for size in sizes:
                train_split, test_split = sample_efficiency_split(utterances, size, seed)
                test_ids = tuple(u.id for u in test_split)
                if reference_test_ids is None:
                    reference_test_ids = test_ids
                elif test_ids != reference_test_ids:
                    raise AssertionError(
                        f"test set changed between sizes for seed {seed}; "
                        f"the held-out split must be size-independent"
                    )
                eval_instances = compile_task(test_split, ontology, template, spec.task)
                if spec.backend == GOLD_ORACLE:
                    handle = oracle_handle(eval_instances)
                else:
                    train_instances = compile_task(train_split, ontology, template, spec.task)
                    handle = train(
                        base_handle,
                        train_instances,
                        dataclasses.replace(spec.train, seed=seed),
                    )
                report = _evaluate_instances(
                    handle, eval_instances, test_split, ontology, spec.task, 0
                )
                rows.append(
                    {
                        "protocol": spec.protocol,
                        "n_train": size,
                        "seed": seed,
                        "task": spec.task,
                        "micro_f1": report.micro_f1,
                        "tp": report.tp,
                        "fp": report.fp,
                        "fn": report.fn,
                    }
                )
    except BaseException:
        write_json_atomic(
            {"status": "partial", "protocol": spec.protocol, "rows": rows},
            out_dir / "results.json",
        )
        raise

    means = []
    for size in sizes:
        scores = [row["micro_f1"] for row in rows if row["n_train"] == size]
        means.append({"n_train": size, "mean_micro_f1": sum(scores) / len(scores)})
    results = {
        "status": "complete",
        "protocol": spec.protocol,
        "dataset": spec.dataset,
        "domain": spec.domain,
        "task": spec.task,
        "template": spec.template,
        "backend": spec.backend,
        "rows": rows,
        "means": means,
    }
    write_json_atomic(results, out_dir / "results.json")
    _write_results_csv(rows, out_dir / "results.csv")
    return rows


def run_clse_baseline(spec: RunSpec) -> EvalReport:
    """Folded baseline: a shallow classifier over fixed sentence embeddings."""
    if spec.protocol != "clse-baseline":
        raise ValueError(f"expected protocol clse-baseline, got {spec.protocol!r}")
    spec.validate()
    out_dir = Path(spec.output_dir)
    ontology, utterances, folds = _load_domain(spec, spec.domain)

    manifest = build_manifest(spec, {spec.domain: corpus_fingerprint(utterances)})
    manifest["encoder"] = spec.encoder
    existing = _existing_results(out_dir, manifest, spec.force)
    if existing is not None:
        return _aggregated(existing, "id")

    write_json_atomic(manifest, out_dir / "manifest.json")
    cache_path = out_dir / "embedding_cache.npz"

    fold_ids = list(spec.folds) if spec.folds is not None else [f.fold_id for f in folds]
    folds_by_id = {fold.fold_id: fold for fold in folds}
    rows: list[dict] = []
    reports: list[EvalReport] = []
    try:
        for fold_id in fold_ids:
            fold = folds_by_id[fold_id]
            train_gold = select(utterances, fold.train_ids)
            test_gold = select(utterances, fold.test_ids)
            train_matrix = embed_cached([u.text for u in train_gold], spec.encoder, cache_path)
            test_matrix = embed_cached([u.text for u in test_gold], spec.encoder, cache_path)
            classifier = train_clse(
                train_matrix, [set(u.gold_intents) for u in train_gold], ontology, spec.clse
            )
            if spec.save_models:
                save_classifier(classifier, out_dir / f"classifier_fold{fold_id}.pt")
            predicted = predict_clse_batch(classifier, test_matrix)
            predictions = [
                Prediction(utterance_id=u.id, intents=frozenset(labels))
                for u, labels in zip(test_gold, predicted)
            ]
            report = micro_f1_id(predictions, test_gold, fold_id=fold_id)
            reports.append(report)
            rows.append(
                {
                    "protocol": spec.protocol,
                    "fold_id": fold_id,
                    "task": "id",
                    "micro_f1": report.micro_f1,
                    "tp": report.tp,
                    "fp": report.fp,
                    "fn": report.fn,
                }
            )
    except BaseException:
        write_json_atomic(
            {"status": "partial", "protocol": spec.protocol, "rows": rows},
            out_dir / "results.json",
        )
        raise

    combined = aggregate(reports)
    results = {
        "status": "complete",
        "protocol": spec.protocol,
        "dataset": spec.dataset,
        "domain": spec.domain,
        "fold_setup": spec.fold_setup if spec.dataset == "nlupp" else f"{spec.k}F",
        "encoder": spec.encoder,
        "reports": {"id": _report_dict(combined)},
        "rows": rows,
        "reference": {
            "id": reference_score(
                spec.protocol, spec.dataset, spec.domain, "id", spec.fold_setup, spec.template
            )
        },
    }
    write_json_atomic(results, out_dir / "results.json")
    _write_results_csv(rows, out_dir / "results.csv")
    return combined


def run_correlation_analysis(
    data_path: str,
    template: str = "desc",
    encoder: str = HASH_ENCODER_ID,
    matrix: str = "desc",
    output_dir: str = "runs/correlation",
    pair_budget: int = DEFAULT_PAIR_BUDGET,
    seed: int = 0,
    max_examples_per_domain: int | None = None,
) -> CorrelationReport:
    """Correlate a transfer grid with fresh domain similarities.

    ``matrix`` names a bundled reference grid (``none``, ``desc``,
    ``qa-ft``) or points at a ``transfer_matrix.json`` produced by a grid
    run.  Emits a CSV mirroring the published table layout, a JSON report,
    and a per-target figure.
    """
    from .reporting import correlation_figure_path, correlation_report_rows, write_delimited

    template_obj = resolve_template(template)
    matrix_path = Path(matrix)
    if matrix_path.suffix == ".json" and matrix_path.exists():
        with open(matrix_path, encoding="utf-8") as f:
            payload = json.load(f)
        grid = TransferMatrix(domains=tuple(payload["domains"]), scores=payload["scores"])
    else:
        grid = reference_transfer_matrix(matrix)

    domains = load_clinc(data_path)
    missing = [d for d in grid.domains if d not in domains]
    if missing:
        raise ValueError(f"transfer grid names domains absent from the dataset: {missing}")

    prompts = {d: class_prompt_texts(domains[d][0], template_obj) for d in grid.domains}
    examples = {}
    for d in grid.domains:
        texts = example_texts(domains[d][1], template_obj)
        if max_examples_per_domain is not None:
            texts = texts[:max_examples_per_domain]
        examples[d] = texts

    sims_c = similarity_grid(prompts, encoder, pair_budget, seed)
    sims_e = similarity_grid(examples, encoder, pair_budget, seed)
    report = correlation_report(grid, sims_e, sims_c)

    out_dir = Path(output_dir)
    rows = correlation_report_rows(report)
    write_delimited(rows, out_dir / "correlation.csv")
    write_json_atomic(
        {
            "template": template,
            "encoder": encoder,
            "matrix": matrix,
            "targets": list(report.targets),
            "rho_examples": report.rho_examples,
            "rho_class_prompts": report.rho_class_prompts,
            "average_examples": report.average_examples,
            "average_class_prompts": report.average_class_prompts,
            "average_abs_examples": report.average_abs_examples,
            "average_abs_class_prompts": report.average_abs_class_prompts,
        },
        out_dir / "correlation.json",
    )
    correlation_figure_path(report, out_dir / "correlation.png")
    return report


def run(spec: RunSpec):
    """Dispatch a spec to its protocol runner."""
    dispatch = {
        "in-domain": run_in_domain,
        "cross-domain": run_cross_domain,
        "cross-task": run_cross_task,
        "zero-shot": run_zero_shot,
        "multi-task": run_multi_task,
        "mc-ablation": run_mc_ablation,
        "sample-efficiency": run_sample_efficiency,
        "clse-baseline": run_clse_baseline,
    }
    spec.validate()
    return dispatch[spec.protocol](spec)
