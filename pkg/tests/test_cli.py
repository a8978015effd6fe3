import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from linkmark.cli import build_parser, main

REPO = Path(__file__).resolve().parent.parent

SUBCOMMANDS = ["datagen", "split", "wm-gen", "train", "eval", "threshold",
               "attack", "register", "dispute", "serve", "report",
               "reproduce-table1"]


def write_config(tmp_path, **extra):
    doc = {"blocks": 2, "per_block": 40, "p_in": 0.3, "p_out": 0.02,
           "feature_dim": 16, "rate": 0.1, "arch": "gcn", "hidden": 32,
           "epochs": 60, "lr": 0.001, "method": "genie"}
    doc.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """datagen + split + wm-gen + short train, shared by the CLI tests."""
    out = tmp_path_factory.mktemp("cli")
    cfg = write_config(out)
    base = ["--out", str(out), "--seed", "42", "--config", str(cfg)]
    assert main(["datagen"] + base) == 0
    edges = [str(out / "graph.edges"), "--features", str(out / "graph.features")]
    assert main(["split"] + base + ["--edges"] + edges) == 0
    assert main(["wm-gen"] + base + ["--edges"] + edges) == 0
    assert main(["train"] + base + ["--dataset", str(out / "dataset.npz"),
                                    "--wm", str(out / "trigger.gwm")]) == 0
    return out, cfg


class TestParser:
    @pytest.mark.parametrize("command", SUBCOMMANDS)
    def test_help_available(self, command, capsys):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args([command, "--help"])
        assert exc.value.code == 0
        assert command in capsys.readouterr().out or True

    def test_unknown_flag_fails_fast(self):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["datagen", "--no-such-flag"])
        assert exc.value.code == 2

    def test_missing_subcommand_fails(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


class TestPipeline:
    def test_artifacts_exist(self, pipeline):
        out, _ = pipeline
        for name in ("graph.edges", "graph.features", "dataset.npz",
                     "trigger.gwm", "model.ckpt"):
            assert (out / name).exists()

    def test_manifests_record_seed_and_hashes(self, pipeline):
        out, _ = pipeline
        doc = json.loads((out / "datagen_manifest.json").read_text())
        assert doc["seed"] == 42
        assert len(doc["config_sha256"]) == 64
        for digest in doc["artifacts"].values():
            assert len(digest) == 64

    def test_eval_reports_both_aucs(self, pipeline, tmp_path):
        out, _ = pipeline
        rc = main(["eval", "--out", str(tmp_path), "--dataset",
                   str(out / "dataset.npz"), "--checkpoint", str(out / "model.ckpt"),
                   "--wm", str(out / "trigger.gwm")])
        assert rc == 0
        report = json.loads((tmp_path / "eval.json").read_text())
        assert 0.0 <= report["auc_test"] <= 1.0
        assert 0.0 <= report["auc_wm"] <= 1.0

    def test_rerun_reproduces_artifact_hashes(self, pipeline, tmp_path):
        out, cfg = pipeline
        manifest = json.loads((out / "datagen_manifest.json").read_text())
        rc = main(["datagen", "--out", str(tmp_path), "--seed",
                   str(manifest["seed"]), "--config", str(cfg)])
        assert rc == 0
        redone = json.loads((tmp_path / "datagen_manifest.json").read_text())
        assert redone["artifacts"] == manifest["artifacts"]

    def test_train_then_eval_missing_file_errors(self, tmp_path, capsys):
        rc = main(["eval", "--out", str(tmp_path), "--dataset",
                   str(tmp_path / "nope.npz"), "--checkpoint",
                   str(tmp_path / "nope.ckpt")])
        assert rc == 1
        err = capsys.readouterr().err
        doc = json.loads(err.strip().splitlines()[-1])
        assert doc["error"] in ("missing_file", "invalid_input")


class TestThresholdAndDispute:
    def test_threshold_from_csv_samples(self, tmp_path):
        clean = tmp_path / "clean.csv"
        wm = tmp_path / "wm.csv"
        clean.write_text("".join(f"{v}\n" for v in (0.05, 0.08, 0.10, 0.12)))
        wm.write_text("".join(f"{v}\n" for v in (0.95, 0.96, 0.97, 0.98)))
        rc = main(["threshold", "--out", str(tmp_path), "--seed", "1",
                   "--clean-csv", str(clean), "--wm-csv", str(wm),
                   "--gamma", "0.95", "--n", "100000"])
        assert rc == 0
        report = json.loads((tmp_path / "threshold.json").read_text())
        assert report["certificate"] is True
        assert 0.2 < report["threshold"] < 0.9

    def test_dispute_no_record(self, pipeline, tmp_path):
        out, _ = pipeline
        clean = tmp_path / "clean.csv"
        wm_csv = tmp_path / "wm.csv"
        clean.write_text("".join(f"{v}\n" for v in (0.2, 0.3, 0.35, 0.4)))
        wm_csv.write_text("".join(f"{v}\n" for v in (0.9, 0.92, 0.95, 0.97)))
        empty_board = tmp_path / "board.jsonl"
        empty_board.write_text("")
        rc = main(["dispute", "--out", str(tmp_path), "--board", str(empty_board),
                   "--wm", str(out / "trigger.gwm"), "--checkpoint",
                   str(out / "model.ckpt"), "--clean-csv", str(clean),
                   "--wm-csv", str(wm_csv), "--gamma", "0.95", "--n", "10000"])
        assert rc == 0
        verdict = json.loads((tmp_path / "verdict.json").read_text())
        assert verdict["winner"] == "defendant"
        assert verdict["reason"] == "no_record"

    def test_register_then_dispute_finds_record(self, pipeline, tmp_path):
        out, cfg = pipeline
        board = tmp_path / "board.jsonl"
        rc = main(["register", "--out", str(tmp_path), "--seed", "42",
                   "--edges", str(out / "graph.edges"), "--features",
                   str(out / "graph.features"), "--board", str(board),
                   "--who", "owner", "--config", str(cfg)])
        assert rc == 0
        clean = tmp_path / "clean.csv"
        wm_csv = tmp_path / "wm.csv"
        clean.write_text("".join(f"{v}\n" for v in (0.2, 0.3, 0.35, 0.4)))
        wm_csv.write_text("".join(f"{v}\n" for v in (0.82, 0.86, 0.9, 0.94)))
        rc = main(["dispute", "--out", str(tmp_path), "--board", str(board),
                   "--wm", str(tmp_path / "trigger.gwm"), "--checkpoint",
                   str(out / "model.ckpt"), "--clean-csv", str(clean),
                   "--wm-csv", str(wm_csv), "--gamma", "0.95", "--n", "10000",
                   "--seed", "3"])
        assert rc == 0
        verdict = json.loads((tmp_path / "verdict.json").read_text())
        assert verdict["reason"] in ("auc_above_t", "auc_below_t")


class TestAttackCommand:
    def test_prune_attack_report(self, pipeline, tmp_path):
        out, _ = pipeline
        rc = main(["attack", "--out", str(tmp_path), "--seed", "5",
                   "--dataset", str(out / "dataset.npz"), "--checkpoint",
                   str(out / "model.ckpt"), "--wm", str(out / "trigger.gwm"),
                   "--kind", "prune", "--fraction", "0.4", "--threshold", "0.6"])
        assert rc == 0
        report = json.loads((tmp_path / "attack_prune.json").read_text())
        assert report["verdict"] in ("watermark_success", "watermark_failure")
        assert report["threshold"] == 0.6


class TestReport:
    def test_main_results_table(self, pipeline, tmp_path):
        out, _ = pipeline
        runs = tmp_path / "runs"
        clean_dir = runs / "clean"
        wm_dir = runs / "wm"
        clean_dir.mkdir(parents=True)
        wm_dir.mkdir(parents=True)
        (clean_dir / "eval.json").write_text(json.dumps({"auc_test": 0.71}))
        (wm_dir / "eval.json").write_text(json.dumps({"auc_test": 0.70,
                                                      "auc_wm": 0.93}))
        rc = main(["report", "--out", str(tmp_path), "--runs", str(runs)])
        assert rc == 0
        lines = (tmp_path / "mainResults.csv").read_text().strip().splitlines()
        assert lines[0] == "auc_test_clean,auc_test_wm,auc_wm_wm"
        assert lines[1] == "0.71,0.7,0.93"


class TestServeCommand:
    def test_serve_plain_graph_without_watermark(self, pipeline):
        out, _ = pipeline
        proc = subprocess.run(
            [sys.executable, "-m", "linkmark.cli", "serve",
             "--checkpoint", str(out / "model.ckpt"),
             "--edges", str(out / "graph.edges"),
             "--features", str(out / "graph.features")],
            input="0 1\n", capture_output=True, text=True, timeout=120)
        assert proc.returncode == 0
        bit, prob = proc.stdout.strip().split()
        assert bit in ("0", "1") and 0.0 <= float(prob) <= 1.0

    def test_defense_without_watermark_fails(self, pipeline, capsys):
        out, _ = pipeline
        rc = main(["serve", "--checkpoint", str(out / "model.ckpt"),
                   "--edges", str(out / "graph.edges"),
                   "--features", str(out / "graph.features"), "--defense"])
        assert rc == 1
        assert "missing_wm" in capsys.readouterr().err

    def test_line_protocol_over_subprocess(self, pipeline):
        out, _ = pipeline
        proc = subprocess.run(
            [sys.executable, "-m", "linkmark.cli", "serve",
             "--checkpoint", str(out / "model.ckpt"),
             "--wm", str(out / "trigger.gwm"), "--defense"],
            input="0 1\n2 3\n", capture_output=True, text=True, timeout=120)
        assert proc.returncode == 0
        lines = proc.stdout.strip().splitlines()
        assert len(lines) == 2
        for line in lines:
            bit, prob = line.split()
            assert bit in ("0", "1")
            assert 0.0 <= float(prob) <= 1.0


def test_jobs_env_var_fallback(monkeypatch):
    from linkmark.cli import _resolve_jobs

    class Args:
        jobs = None

    monkeypatch.setenv("GENIE_LPWM_JOBS", "3")
    assert _resolve_jobs(Args()) == 3
    monkeypatch.delenv("GENIE_LPWM_JOBS")
    assert _resolve_jobs(Args()) == 1
    Args.jobs = 5
    assert _resolve_jobs(Args()) == 5


@pytest.mark.slow
def test_end_to_end_script_plaintiff_wins(tmp_path):
    proc = subprocess.run(
        [sys.executable, str(REPO / "scripts" / "end_to_end.py"),
         "--out", str(tmp_path), "--epochs", "120", "--models", "4",
         "--jobs", "4"],
        capture_output=True, text=True, timeout=900)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    verdict = json.loads((tmp_path / "verdict.json").read_text())
    assert verdict["winner"] == "plaintiff"


def test_subgraph_pathway_through_cli(pipeline, tmp_path):
    out, _ = pipeline
    cfg = tmp_path / "sg.json"
    cfg.write_text(json.dumps({"pathway": "subgraph", "rate": 0.2, "hops": 1,
                               "arch": "gcn", "hidden": 32, "epochs": 25,
                               "lr": 0.001, "method": "genie"}))
    rc = main(["wm-gen", "--out", str(tmp_path), "--seed", "42",
               "--edges", str(out / "graph.edges"), "--features",
               str(out / "graph.features"), "--config", str(cfg)])
    assert rc == 0
    rc = main(["train", "--out", str(tmp_path), "--seed", "42",
               "--dataset", str(out / "dataset.npz"),
               "--wm", str(tmp_path / "trigger.gwm"), "--config", str(cfg)])
    assert rc == 0
    rc = main(["eval", "--out", str(tmp_path), "--dataset", str(out / "dataset.npz"),
               "--checkpoint", str(tmp_path / "model.ckpt"),
               "--wm", str(tmp_path / "trigger.gwm"), "--config", str(cfg)])
    assert rc == 0
    report = json.loads((tmp_path / "eval.json").read_text())
    assert 0.0 <= report["auc_test"] <= 1.0
    assert 0.0 <= report["auc_wm"] <= 1.0


def test_attack_matrix_script_subset(pipeline, tmp_path):
    out, _ = pipeline
    csv_path = tmp_path / "matrix.csv"
    proc = subprocess.run(
        [sys.executable, str(REPO / "scripts" / "attack_matrix.py"),
         "--dataset", str(out / "dataset.npz"), "--wm", str(out / "trigger.gwm"),
         "--checkpoint", str(out / "model.ckpt"), "--threshold", "0.6",
         "--out", str(csv_path), "--attacks", "prune,quantize", "--jobs", "1"],
        capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0].startswith("kind,")
    assert len(lines) == 6  # header + 4 prune fractions + quantize
    for line in lines[1:]:
        assert line.split(",")[-1] in ("watermark_success", "watermark_failure")


def test_reproduce_table1_small(pipeline, tmp_path):
    out, cfg = pipeline
    rc = main(["reproduce-table1", "--out", str(tmp_path), "--seed", "11",
               "--dataset", str(out / "dataset.npz"), "--edges",
               str(out / "graph.edges"), "--features", str(out / "graph.features"),
               "--models", "4", "--jobs", "4", "--config", str(cfg)])
    assert rc == 0
    doc = json.loads((tmp_path / "table1.json").read_text())
    assert len(doc["clean_auc_wm"]) == 4
    assert len(doc["wm_auc_wm"]) == 4
    assert all(a > c for a, c in zip(sorted(doc["wm_auc_wm"]),
                                     sorted(doc["clean_auc_wm"])))
    csv_lines = (tmp_path / "table1.csv").read_text().strip().splitlines()
    assert csv_lines[0].startswith("score,i=1")
    assert len(csv_lines) == 3
