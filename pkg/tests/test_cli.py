"""Command-line interface tests (in-process)."""

from __future__ import annotations

import json

import yaml

from instructnlu.cli import main


def test_in_domain_subcommand(nlupp_root, tmp_path, capsys):
    out = tmp_path / "run"
    code = main(
        [
            "in-domain",
            "--data-path", str(nlupp_root),
            "--domain", "banking",
            "--backend", "gold-oracle",
            "--out", str(out),
        ]
    )
    assert code == 0
    captured = capsys.readouterr().out
    assert "micro-F1 1.0000" in captured
    assert (out / "results.json").exists()


def test_cross_domain_subcommand(nlupp_root, tmp_path):
    out = tmp_path / "xd"
    code = main(
        [
            "cross-domain",
            "--data-path", str(nlupp_root),
            "--source", "banking",
            "--target", "hotels",
            "--task", "ve",
            "--backend", "gold-oracle",
            "--out", str(out),
        ]
    )
    assert code == 0
    results = json.loads((out / "results.json").read_text())
    assert results["train_domain"] == "banking"
    assert results["eval_domain"] == "hotels"


def test_cross_domain_grid_subcommand(nlupp_root, tmp_path, capsys):
    out = tmp_path / "grid"
    code = main(
        [
            "cross-domain",
            "--data-path", str(nlupp_root),
            "--grid",
            "--domains", "banking", "hotels",
            "--source", "banking",
            "--target", "hotels",
            "--backend", "gold-oracle",
            "--out", str(out),
        ]
    )
    assert code == 0
    assert (out / "transfer_matrix.json").exists()
    assert "transfer grid" in capsys.readouterr().out


def test_missing_required_flags_exit_nonzero(nlupp_root, tmp_path, capsys):
    code = main(
        [
            "cross-domain",
            "--data-path", str(nlupp_root),
            "--source", "banking",
            "--target", "banking",
            "--backend", "gold-oracle",
            "--out", str(tmp_path / "bad"),
        ]
    )
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_config_file_run(nlupp_root, tmp_path):
    out = tmp_path / "cfg-run"
    config = {
        "protocol": "zero-shot",
        "dataset": "nlupp",
        "data_path": str(nlupp_root),
        "domain": "hotels",
        "fold_setup": "10F",
        "template": "none",
        "task": "id",
        "backend": "gold-oracle",
        "output_dir": str(out),
    }
    config_path = tmp_path / "spec.yaml"
    config_path.write_text(yaml.safe_dump(config))
    code = main(["zero-shot", "--config", str(config_path)])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["spec"]["template"] == "none"


def test_config_protocol_mismatch_fails(nlupp_root, tmp_path, capsys):
    config_path = tmp_path / "spec.yaml"
    config_path.write_text(yaml.safe_dump({"protocol": "in-domain", "domain": "banking"}))
    code = main(["zero-shot", "--config", str(config_path)])
    assert code == 1
    assert "protocol" in capsys.readouterr().err


def test_compile_subcommand(nlupp_root, tmp_path, capsys):
    out = tmp_path / "instances.jsonl"
    code = main(
        [
            "compile",
            "--data-path", str(nlupp_root),
            "--domain", "banking",
            "--task", "both",
            "--out", str(out),
        ]
    )
    assert code == 0
    lines = [json.loads(line) for line in out.read_text().splitlines()]
    assert lines
    assert {"input_text", "target_text", "task_kind", "class_name", "utterance_id"} <= set(lines[0])


def test_snapshot_subcommand(nlupp_root, tmp_path):
    out = tmp_path / "snapshot.jsonl"
    code = main(
        [
            "snapshot",
            "--data-path", str(nlupp_root),
            "--domain", "hotels",
            "--out", str(out),
        ]
    )
    assert code == 0
    assert out.exists()


def test_report_subcommand(nlupp_root, tmp_path, capsys):
    run_dir = tmp_path / "run"
    assert (
        main(
            [
                "in-domain",
                "--data-path", str(nlupp_root),
                "--domain", "banking",
                "--backend", "gold-oracle",
                "--out", str(run_dir),
            ]
        )
        == 0
    )
    code = main(["report", str(run_dir)])
    assert code == 0
    assert (run_dir / "report.csv").exists()
    assert (run_dir / "fold_scores.png").exists()


def test_report_on_empty_dir_fails(tmp_path, capsys):
    code = main(["report", str(tmp_path / "nothing")])
    assert code == 1
