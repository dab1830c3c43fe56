"""Report rendering: delimited tables plus figures."""

from __future__ import annotations

import csv

import pytest

from instructnlu.reporting import (
    correlation_report_rows,
    render_report,
    transfer_matrix_rows,
    write_delimited,
)
from instructnlu.runs import RunSpec, run_sample_efficiency, run_transfer_grid
from instructnlu.similarity import CorrelationReport, TransferMatrix
import instructnlu.corpus as corpus_module


def test_write_delimited_preserves_column_order(tmp_path):
    rows = [{"b": 1, "a": 2}, {"a": 3, "b": 4, "c": 5}]
    path = write_delimited(rows, tmp_path / "table.csv")
    with open(path) as f:
        reader = csv.reader(f)
        header = next(reader)
    assert header == ["b", "a", "c"]


def test_render_report_for_folded_run(nlupp_root, tmp_path):
    from instructnlu.runs import run_in_domain

    spec = RunSpec(
        protocol="in-domain",
        data_path=str(nlupp_root),
        domain="banking",
        backend="gold-oracle",
        output_dir=str(tmp_path / "run"),
    )
    run_in_domain(spec)
    written = render_report(tmp_path / "run")
    names = {p.name for p in written}
    assert names == {"report.csv", "fold_scores.png"}
    assert (tmp_path / "run" / "fold_scores.png").stat().st_size > 0
    with open(tmp_path / "run" / "report.csv") as f:
        rows = list(csv.DictReader(f))
    assert rows and rows[0]["reference"]  # bundled expectation attached


def test_render_report_for_sample_efficiency(nlupp_root, tmp_path, monkeypatch):
    monkeypatch.setattr(corpus_module, "SAMPLE_EFFICIENCY_TEST_SIZE", 20)
    spec = RunSpec(
        protocol="sample-efficiency",
        data_path=str(nlupp_root),
        domain="banking",
        backend="gold-oracle",
        sizes=(4, 8),
        seeds=(0, 1),
        output_dir=str(tmp_path / "se"),
    )
    run_sample_efficiency(spec)
    written = render_report(tmp_path / "se")
    assert {p.name for p in written} == {"report.csv", "sample_efficiency.png"}


def test_render_report_for_transfer_grid(nlupp_root, tmp_path):
    spec = RunSpec(
        protocol="cross-domain",
        data_path=str(nlupp_root),
        source="banking",
        target="hotels",
        backend="gold-oracle",
        output_dir=str(tmp_path / "grid"),
    )
    run_transfer_grid(spec, ["banking", "hotels"])
    written = render_report(tmp_path / "grid")
    names = {p.name for p in written}
    assert "transfer_matrix.csv" in names
    assert "transfer_matrix.png" in names


def test_render_report_needs_results(tmp_path):
    with pytest.raises(FileNotFoundError):
        render_report(tmp_path)


def test_transfer_matrix_rows_flag_diagonal():
    matrix = TransferMatrix(domains=("a", "b"), scores=[[90.0, 10.0], [20.0, 95.0]])
    rows = transfer_matrix_rows(matrix)
    assert len(rows) == 4
    assert [r["in_domain"] for r in rows] == [True, False, False, True]


def test_correlation_rows_mirror_published_layout():
    report = CorrelationReport(
        targets=("a", "b", "c"),
        rho_examples={"a": 0.5, "b": -0.5, "c": 0.1},
        rho_class_prompts={"a": 0.4, "b": 0.2, "c": 0.3},
        average_examples=0.0333,
        average_class_prompts=0.3,
        average_abs_examples=0.3667,
        average_abs_class_prompts=0.3,
    )
    rows = correlation_report_rows(report)
    assert rows[0]["similarity"] == "sim_e"
    assert rows[0]["avg"] == 0.3667  # published column: mean of absolute values
    assert rows[0]["avg_signed"] == 0.0333
    assert rows[1]["a"] == 0.4
