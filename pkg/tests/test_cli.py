import json

import pytest

from citesum.cli import main
from citesum.corpus import read_jsonl

from pipeline import full_pipeline, run, write_raw


@pytest.fixture
def data_dir(tmp_path):
    write_raw(tmp_path / "raw.jsonl", n=30)
    run("build-dataset", "--in", tmp_path / "raw.jsonl", "--out", tmp_path / "data",
        "--citation-limit", 3, "--seed", 7)
    return tmp_path / "data"


def test_build_dataset_contract(data_dir):
    names = {p.name for p in data_dir.iterdir()}
    assert {"train.jsonl", "val.jsonl", "test.jsonl", "aux.jsonl", "stats.json"} <= names
    sizes = [len(read_jsonl(data_dir / f"{s}.jsonl")) for s in ("train", "val", "test")]
    assert sizes == [24, 3, 3]
    manifest = json.loads((data_dir / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 7


def test_stats_to_stdout(data_dir, capsys):
    assert main(["stats", "--data", str(data_dir), "--split", "test"]) == 0
    assert json.loads(capsys.readouterr().out)["test"]["sample_count"] == 3


def test_extract_graph(data_dir, tmp_path):
    seed_uid = read_jsonl(data_dir / "train.jsonl")[0]["uid"]
    out = tmp_path / "hood.jsonl"
    run("extract-graph", "--data", data_dir, "--seed-uid", seed_uid, "--hop-max", 1, "--n-max", 12, "--out", out)
    rows = read_jsonl(out)
    assert rows[0] == {"uid": seed_uid, "hop": 0}
    assert all(r["hop"] == 1 for r in rows[1:]) and 2 <= len(rows) <= 12


def test_extract_graph_unknown_seed(data_dir, capsys):
    assert main(["extract-graph", "--data", str(data_dir), "--seed-uid", "nope"]) == 1
    assert "UnknownSeed" in capsys.readouterr().err


def test_baselines_and_evaluate(data_dir, tmp_path):
    for system in ("lead3", "oracle"):
        out = tmp_path / f"{system}.jsonl"
        run("baseline", "--system", system, "--data", data_dir / "test.jsonl", "--out", out)
        run("evaluate", "--pred", out, "--data", data_dir / "test.jsonl", "--out", tmp_path / f"{system}.json")
    lead = json.loads((tmp_path / "lead3.json").read_text())
    oracle = json.loads((tmp_path / "oracle.json").read_text())
    assert lead["count"] == oracle["count"] == 3
    assert oracle["mean"]["rouge1"]["f1"] >= lead["mean"]["rouge1"]["f1"] - 1e-12


def test_evaluate_missing_uid(data_dir, tmp_path, capsys):
    pred = tmp_path / "p.jsonl"
    pred.write_text(json.dumps({"uid": "ghost", "summary": "x"}) + "\n")
    assert main(["evaluate", "--pred", str(pred), "--data", str(data_dir / "test.jsonl")]) == 1
    assert "MissingReference" in capsys.readouterr().err


def test_bad_flag_and_unknown_command(capsys):
    assert main(["stats", "--data", "x", "--bogus"]) == 1
    assert main(["frobnicate"]) == 1
    assert main([]) == 1
    err = capsys.readouterr().err
    assert "BadFlag" in err and "UnknownCommand" in err


def test_missing_input_is_io_error(tmp_path):
    assert main(["build-dataset", "--in", str(tmp_path / "absent.jsonl"), "--out", str(tmp_path / "d")]) == 2


def test_config_file_precedence(tmp_path):
    write_raw(tmp_path / "raw.jsonl", n=30)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("ratios = 0.6,0.2,0.2\nseed = 3\n")
    run("build-dataset", "--in", tmp_path / "raw.jsonl", "--out", tmp_path / "a", "--config", cfg)
    run("build-dataset", "--in", tmp_path / "raw.jsonl", "--out", tmp_path / "b", "--config", cfg, "--seed", 9)
    a = json.loads((tmp_path / "a" / "manifest.json").read_text())["config"]
    b = json.loads((tmp_path / "b" / "manifest.json").read_text())["config"]
    assert a["ratios"] == b["ratios"] == "0.6,0.2,0.2"
    assert (a["seed"], b["seed"]) == (3, 9)
    assert len(read_jsonl(tmp_path / "a" / "test.jsonl")) == 6


def test_train_generate_evaluate(tmp_path):
    full_pipeline(tmp_path)
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["count"] == 3
    assert report["corpus_perplexity"] > 1
    log = read_jsonl(tmp_path / "model" / "train_log.jsonl")
    assert len(log) == 50
