"""Render run results into delimited tables and figures.

Reads the JSON a runner left in its output directory and writes, next to
it, a CSV view of the same rows plus matplotlib figures appropriate to the
protocol: per-fold bars for folded runs, a learning curve for
sample-efficiency sweeps, and a heatmap for transfer grids.  Bundled
reference expectations are attached wherever a run configuration matches a
published setup.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reference import reference_score
from .similarity import CorrelationReport, TransferMatrix


def write_delimited(rows: list[dict], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fieldnames: list[str] = []
    for row in rows:
        for key in row:
            if key not in fieldnames:
                fieldnames.append(key)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    return path


def _save(figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    figure.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(figure)
    return path


def fold_scores_figure(results: dict):
    """Per-fold micro-F1 bars, one subplot per task, reference line if known."""
    rows = results.get("rows", [])
    tasks = sorted({row["task"] for row in rows})
    figure, axes = plt.subplots(1, max(len(tasks), 1), figsize=(5 * max(len(tasks), 1), 3.2))
    if len(tasks) <= 1:
        axes = [axes]
    for axis, task in zip(axes, tasks):
        task_rows = [row for row in rows if row["task"] == task]
        folds = [row["fold_id"] for row in task_rows]
        scores = [row["micro_f1"] * 100.0 for row in task_rows]
        axis.bar(range(len(folds)), scores, color="tab:blue")
        axis.set_xticks(range(len(folds)), [str(f) for f in folds])
        axis.set_xlabel("fold")
        axis.set_ylabel("micro-F1 (%)")
        axis.set_ylim(0, 100)
        title = f"{results.get('protocol', 'run')} / {task}"
        mean = np.mean(scores) if scores else 0.0
        axis.set_title(f"{title} (mean {mean:.2f})")
        reference = (results.get("reference") or {}).get(task)
        if reference is not None:
            axis.axhline(reference, color="tab:red", linestyle="--", label=f"reference {reference}")
            axis.legend(loc="lower right")
    figure.tight_layout()
    return figure


def sample_efficiency_figure(results: dict):
    """Mean micro-F1 versus training-set size (log2 x-axis)."""
    rows = results.get("rows", [])
    sizes = sorted({row["n_train"] for row in rows})
    means = []
    for size in sizes:
        scores = [row["micro_f1"] for row in rows if row["n_train"] == size]
        means.append(100.0 * sum(scores) / len(scores))
    figure, axis = plt.subplots(figsize=(5, 3.2))
    axis.plot(sizes, means, marker="o", color="tab:blue")
    for row in rows:
        axis.plot(row["n_train"], row["micro_f1"] * 100.0, marker=".", color="tab:gray", alpha=0.5)
    axis.set_xscale("log", base=2)
    axis.set_xticks(sizes, [str(s) for s in sizes])
    axis.set_xlabel("training examples")
    axis.set_ylabel("micro-F1 (%)")
    axis.set_title(f"sample efficiency: {results.get('domain', '')} {results.get('task', '')}")
    figure.tight_layout()
    return figure


def transfer_matrix_figure(matrix: TransferMatrix, title: str = "cross-domain transfer"):
    figure, axis = plt.subplots(figsize=(7, 6))
    image = axis.imshow(matrix.scores, cmap="viridis", vmin=0, vmax=100)
    axis.set_xticks(range(len(matrix.domains)), matrix.domains, rotation=45, ha="right")
    axis.set_yticks(range(len(matrix.domains)), matrix.domains)
    axis.set_xlabel("target domain")
    axis.set_ylabel("source domain")
    axis.set_title(title)
    for i in range(len(matrix.domains)):
        for j in range(len(matrix.domains)):
            axis.text(
                j, i, f"{matrix.scores[i, j]:.1f}", ha="center", va="center",
                color="white", fontsize=7,
            )
    figure.colorbar(image, ax=axis, label="micro-F1 (%)")
    figure.tight_layout()
    return figure


def transfer_matrix_rows(matrix: TransferMatrix) -> list[dict]:
    rows = []
    for i, source in enumerate(matrix.domains):
        for j, target in enumerate(matrix.domains):
            rows.append(
                {
                    "source": source,
                    "target": target,
                    "micro_f1": float(matrix.scores[i, j]),
                    "in_domain": source == target,
                }
            )
    return rows


def correlation_report_rows(report: CorrelationReport) -> list[dict]:
    """Table mirroring the published layout: one row per similarity kind.

    The ``avg`` column follows the published convention (mean of absolute
    per-target coefficients); the signed mean is kept alongside.
    """
    rows = []
    for kind, values, average_abs, average_signed in (
        ("sim_e", report.rho_examples, report.average_abs_examples, report.average_examples),
        (
            "sim_c",
            report.rho_class_prompts,
            report.average_abs_class_prompts,
            report.average_class_prompts,
        ),
    ):
        row: dict = {"similarity": kind}
        row.update({target: round(values[target], 4) for target in report.targets})
        row["avg"] = round(average_abs, 4)
        row["avg_signed"] = round(average_signed, 4)
        rows.append(row)
    return rows


def correlation_figure_path(report: CorrelationReport, path: str | Path) -> Path:
    """Grouped per-target bars for both similarity kinds."""
    targets = list(report.targets)
    positions = np.arange(len(targets))
    figure, axis = plt.subplots(figsize=(max(6, 0.8 * len(targets)), 3.4))
    width = 0.38
    axis.bar(
        positions - width / 2,
        [report.rho_examples[t] for t in targets],
        width,
        label="training examples",
        color="tab:gray",
    )
    axis.bar(
        positions + width / 2,
        [report.rho_class_prompts[t] for t in targets],
        width,
        label="class prompts",
        color="tab:blue",
    )
    axis.axhline(0.0, color="black", linewidth=0.8)
    axis.set_xticks(positions, targets, rotation=45, ha="right")
    axis.set_ylabel("Pearson rho vs transfer score")
    axis.set_title("domain similarity vs transfer performance")
    axis.legend()
    figure.tight_layout()
    return _save(figure, Path(path))


def render_report(run_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Write CSV tables and figures for whatever a run directory contains."""
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir is not None else run_dir
    written: list[Path] = []

    matrix_path = run_dir / "transfer_matrix.json"
    if matrix_path.exists():
        with open(matrix_path, encoding="utf-8") as f:
            payload = json.load(f)
        matrix = TransferMatrix(domains=tuple(payload["domains"]), scores=payload["scores"])
        written.append(write_delimited(transfer_matrix_rows(matrix), out_dir / "transfer_matrix.csv"))
        written.append(_save(transfer_matrix_figure(matrix), out_dir / "transfer_matrix.png"))

    results_path = run_dir / "results.json"
    if results_path.exists():
        with open(results_path, encoding="utf-8") as f:
            results = json.load(f)
        rows = results.get("rows", [])
        if rows:
            enriched = [dict(row) for row in rows]
            for row in enriched:
                row.setdefault("reference", (results.get("reference") or {}).get(row.get("task")))
            written.append(write_delimited(enriched, out_dir / "report.csv"))
        if results.get("protocol") == "sample-efficiency" and rows:
            written.append(_save(sample_efficiency_figure(results), out_dir / "sample_efficiency.png"))
        elif rows:
            written.append(_save(fold_scores_figure(results), out_dir / "fold_scores.png"))

    if not written:
        raise FileNotFoundError(f"no results.json or transfer_matrix.json under {run_dir}")
    return written
