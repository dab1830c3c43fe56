"""Command-line interface: one subcommand per experiment protocol, plus
instruction compilation, corpus snapshots, and report rendering."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .backends import GOLD_ORACLE, HASH_ENCODER_ID, AdapterConfig, TrainConfig
from .clse import CLSEConfig
from .compiler import compile_task, write_instances
from .corpus import load_clinc, load_nluplusplus, write_snapshot
from .reporting import render_report
from .runs import (
    RunSpec,
    resolve_template,
    run,
    run_correlation_analysis,
    run_sample_efficiency,
    run_transfer_grid,
)

RUN_PROTOCOLS = (
    "zero-shot",
    "in-domain",
    "cross-domain",
    "cross-task",
    "multi-task",
    "sample-efficiency",
    "mc-ablation",
    "clse-baseline",
)


def _add_run_arguments(parser: argparse.ArgumentParser, protocol: str) -> None:
    parser.add_argument("--config", help="YAML/JSON run spec file (replaces the flags below)")
    parser.add_argument("--dataset", choices=["nlupp", "clinc"], default="nlupp")
    parser.add_argument("--data-path", default="", help="dataset root (or release file)")
    if protocol == "cross-domain":
        parser.add_argument("--source", help="training domain")
        parser.add_argument("--target", help="evaluation domain")
        parser.add_argument("--grid", action="store_true", help="fill the full transfer grid")
        parser.add_argument("--domains", nargs="+", help="domain list for --grid")
    else:
        parser.add_argument("--domain", help="domain to train/evaluate in")
    parser.add_argument("--fold-setup", choices=["10F", "20F", "custom"], default=None)
    parser.add_argument("--k", type=int, default=10, help="fold count for generated folds")
    parser.add_argument("--fold-seed", type=int, default=0)
    parser.add_argument("--folds", nargs="+", type=int, default=None, help="restrict to these folds")
    parser.add_argument("--template", default="desc", help="preset or ctx/preq/prompt keys")
    if protocol == "multi-task":
        parser.set_defaults(task="both")
    else:
        parser.add_argument("--task", choices=["id", "ve"], default="id")
    parser.add_argument("--backend", default=GOLD_ORACLE, help="checkpoint alias/id or gold-oracle")
    parser.add_argument("--encoder", default=HASH_ENCODER_ID, help="sentence encoder name")
    parser.add_argument("--cache-dir", default=None, help="model cache root")
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--learning-rate", type=float, default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--seeds", nargs="+", type=int, default=None)
    parser.add_argument("--adapters", action="store_true", help="tune bottleneck adapters only")
    parser.add_argument("--reduction-factor", type=int, default=16)
    parser.add_argument("--max-input-length", type=int, default=256)
    parser.add_argument("--max-target-length", type=int, default=32)
    if protocol == "sample-efficiency":
        parser.add_argument("--sizes", nargs="+", type=int, required=False)
    parser.add_argument("--include-oos-eval", action="store_true")
    parser.add_argument("--out", default=None, help="run output directory")
    parser.add_argument("--force", action="store_true", help="recompute even if complete")


def _spec_from_args(args: argparse.Namespace, protocol: str) -> RunSpec:
    if args.config:
        spec = RunSpec.from_file(args.config)
        if spec.protocol != protocol:
            raise ValueError(
                f"config file declares protocol {spec.protocol!r} but the "
                f"{protocol!r} subcommand was invoked"
            )
        if args.out:
            spec = replace(spec, output_dir=args.out)
        if args.force:
            spec = replace(spec, force=True)
        return spec

    fold_setup = args.fold_setup
    if fold_setup is None:
        fold_setup = "custom" if args.dataset == "clinc" else "20F"
    train_config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
        adapter=AdapterConfig(reduction_factor=args.reduction_factor) if args.adapters else None,
        max_input_length=args.max_input_length,
        max_target_length=args.max_target_length,
    )
    out = args.out or f"runs/{protocol}"
    return RunSpec(
        protocol=protocol,
        dataset=args.dataset,
        data_path=args.data_path,
        domain=getattr(args, "domain", None),
        source=getattr(args, "source", None),
        target=getattr(args, "target", None),
        fold_setup=fold_setup,
        k=args.k,
        fold_seed=args.fold_seed,
        template=args.template,
        task=args.task,
        backend=args.backend,
        encoder=args.encoder,
        train=train_config,
        clse=CLSEConfig(
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate or 5e-5,
            seed=args.seed,
        ),
        seeds=tuple(args.seeds) if args.seeds else (args.seed,),
        sizes=tuple(getattr(args, "sizes", None) or ()),
        folds=tuple(args.folds) if args.folds else None,
        include_out_of_scope_eval=args.include_oos_eval,
        output_dir=out,
        cache_dir=args.cache_dir,
        force=args.force,
    )


def _summarize(result) -> str:
    from .scoring import EvalReport

    if isinstance(result, EvalReport):
        pooled = f", pooled {result.pooled_micro_f1:.4f}" if result.pooled_micro_f1 is not None else ""
        return f"{result.task}: micro-F1 {result.micro_f1:.4f} over {len(result.per_fold)} fold(s){pooled}"
    if isinstance(result, dict) and all(isinstance(v, EvalReport) for v in result.values()):
        return "; ".join(f"{task}={report.micro_f1:.4f}" for task, report in result.items())
    if isinstance(result, list):
        return f"{len(result)} rows"
    return str(result)


def _cmd_run(args: argparse.Namespace, protocol: str) -> int:
    spec = _spec_from_args(args, protocol)
    if protocol == "cross-domain" and getattr(args, "grid", False):
        domains = args.domains
        if not domains:
            raise ValueError("--grid needs --domains")
        matrix = run_transfer_grid(spec, domains)
        print(f"transfer grid over {len(domains)} domains written to {spec.output_dir}")
        for i, source in enumerate(matrix.domains):
            row = " ".join(f"{matrix.scores[i, j]:6.2f}" for j in range(len(matrix.domains)))
            print(f"  {source:>16} {row}")
        return 0
    if protocol == "sample-efficiency":
        rows = run_sample_efficiency(spec)
        print(f"sample efficiency rows: {len(rows)} (see {spec.output_dir})")
        return 0
    result = run(spec)
    print(_summarize(result))
    print(f"results in {spec.output_dir}")
    return 0


def _cmd_compile(args: argparse.Namespace) -> int:
    template = resolve_template(args.template)
    if args.dataset == "nlupp":
        ontology, utterances, _ = load_nluplusplus(args.data_path, args.domain)
    else:
        ontology, utterances = load_clinc(args.data_path)[args.domain]
    instances = compile_task(utterances, ontology, template, args.task)
    write_instances(instances, args.out)
    print(f"wrote {len(instances)} instances to {args.out}")
    return 0


def _cmd_snapshot(args: argparse.Namespace) -> int:
    if args.dataset == "nlupp":
        _, utterances, _ = load_nluplusplus(args.data_path, args.domain)
    else:
        _, utterances = load_clinc(args.data_path)[args.domain]
    write_snapshot(utterances, args.out)
    print(f"wrote {len(utterances)} utterance records to {args.out}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    written = render_report(args.run_dir, args.out)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_correlate(args: argparse.Namespace) -> int:
    report = run_correlation_analysis(
        data_path=args.data_path,
        template=args.template,
        encoder=args.encoder,
        matrix=args.matrix,
        output_dir=args.out,
        pair_budget=args.pair_budget,
        seed=args.seed,
        max_examples_per_domain=args.max_examples,
    )
    print(
        f"avg |rho|: examples {report.average_abs_examples:.4f}, "
        f"class prompts {report.average_abs_class_prompts:.4f} (see {args.out})"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="instructnlu",
        description="QA-instruction tuning and evaluation for dialogue NLU",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    for protocol in RUN_PROTOCOLS:
        sub = subparsers.add_parser(protocol, help=f"run the {protocol} protocol")
        _add_run_arguments(sub, protocol)
        sub.set_defaults(handler=lambda args, p=protocol: _cmd_run(args, p))

    compile_parser = subparsers.add_parser("compile", help="emit compiled instruction instances")
    compile_parser.add_argument("--dataset", choices=["nlupp", "clinc"], default="nlupp")
    compile_parser.add_argument("--data-path", required=True)
    compile_parser.add_argument("--domain", required=True)
    compile_parser.add_argument("--template", default="desc")
    compile_parser.add_argument("--task", choices=["id", "ve", "both", "mc"], default="id")
    compile_parser.add_argument("--out", required=True, help="output JSONL file")
    compile_parser.set_defaults(handler=_cmd_compile)

    snapshot_parser = subparsers.add_parser("snapshot", help="emit a normalized corpus snapshot")
    snapshot_parser.add_argument("--dataset", choices=["nlupp", "clinc"], default="nlupp")
    snapshot_parser.add_argument("--data-path", required=True)
    snapshot_parser.add_argument("--domain", required=True)
    snapshot_parser.add_argument("--out", required=True, help="output JSONL file")
    snapshot_parser.set_defaults(handler=_cmd_snapshot)

    report_parser = subparsers.add_parser("report", help="render CSV tables and figures for a run")
    report_parser.add_argument("run_dir")
    report_parser.add_argument("--out", default=None, help="write report files here instead")
    report_parser.set_defaults(handler=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except Exception as exc:  # surface a clean error; non-zero exit on any failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
