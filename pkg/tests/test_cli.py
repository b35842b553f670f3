import json
import subprocess
import sys

import pytest

from roomtrack import cli


def run(*args):
    return cli.main([str(a) for a in args])


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    """Survey, impute and split the apartment once for the whole module."""
    d = tmp_path_factory.mktemp("cli")
    assert run("simulate-survey", "--plan", "apartment", "--samples", 60, "--seed", 3, "--out", d / "raw.csv") == 0
    assert run("impute", "--in", d / "raw.csv", "--out", d / "dense.csv") == 0
    assert run("split", "--in", d / "dense.csv", "--seed", 1, "--train-out", d / "train.csv",
               "--test-out", d / "test.csv") == 0
    return d


class TestPipeline:
    def test_survey_outputs(self, work):
        assert (work / "raw.radio.json").exists()
        m = json.loads((work / "raw.csv.manifest.json").read_text())
        assert m["subcommand"] == "simulate-survey" and m["seed"] == 3
        assert m["params"]["samples"] == 60
        assert str(work / "raw.csv") in m["outputs"]

    def test_split_sizes(self, work):
        train = (work / "train.csv").read_text().splitlines()
        test = (work / "test.csv").read_text().splitlines()
        assert len(test) - 1 == 5 * 12 and len(train) - 1 == 5 * 48

    def test_eval_knn(self, work):
        assert run("eval-knn", "--train", work / "train.csv", "--test", work / "test.csv",
                   "--model-out", work / "model", "--out", work / "knn.json") == 0
        rep = json.loads((work / "knn.json").read_text())
        assert 0 <= rep["accuracy"] <= 1
        assert (work / "model.json").exists() and (work / "knn.json.manifest.json").exists()

    def test_eval_multilat(self, work):
        assert run("eval-multilat", "--plan", "apartment", "--test", work / "test.csv", "--resolution", 0.1,
                   "--predictions-out", work / "pred.csv", "--out", work / "ml.json") == 0
        rep = json.loads((work / "ml.json").read_text())
        assert sum(rep["case_counts"].values()) == rep["total"] == 60

    def test_sweeps(self, work):
        assert run("sweep-subsets", "--data", work / "dense.csv", "--method", "multilat", "--plan", "apartment",
                   "--repeats", 2, "--jobs", 1, "--stats-out", work / "stats.csv", "--out", work / "sweep.csv") == 0
        assert len((work / "sweep.csv").read_text().splitlines()) == 32
        assert run("sweep-subsets", "--data", work / "dense.csv", "--max-size", 2, "--per-size", 3,
                   "--repeats", 1, "--jobs", 1, "--out", work / "capped.csv") == 0
        assert len((work / "capped.csv").read_text().splitlines()) == 1 + 3 + 3
        assert run("sweep-subsets", "--data", work / "dense.csv", "--max-size", 2, "--per-size", 3, "--exhaustive",
                   "--repeats", 1, "--jobs", 1, "--out", work / "full.csv") == 0
        assert len((work / "full.csv").read_text().splitlines()) == 1 + 5 + 10
        assert run("beacon-frequency", "--results", work / "sweep.csv", "--plan", "apartment",
                   "--out", work / "freq.csv") == 0
        assert run("sweep-training", "--data", work / "dense.csv", "--sizes", "10,20", "--beacons", "2,5",
                   "--repeats", 2, "--out", work / "train_sweep.csv") == 0
        assert len((work / "train_sweep.csv").read_text().splitlines()) == 5

    def test_stream_and_query(self, tmp_path, capsys):
        assert run("simulate-survey", "--plan", "office", "--samples", 100, "--sigma", 0, "--floor", -110,
                   "--out", tmp_path / "raw.csv") == 0
        assert run("impute", "--in", tmp_path / "raw.csv", "--out", tmp_path / "dense.csv") == 0
        assert run("split", "--in", tmp_path / "dense.csv", "--test-fraction", 0.1,
                   "--train-out", tmp_path / "train.csv", "--test-out", tmp_path / "test.csv") == 0
        assert run("eval-knn", "--train", tmp_path / "train.csv", "--test", tmp_path / "test.csv",
                   "--model-out", tmp_path / "model", "--out", tmp_path / "knn.json") == 0
        assert run("simulate-walk", "--plan", "office", "--duration", 300, "--scan-interval", 10, "--assets", 2,
                   "--floor", -110, "--seed", 2, "--out", tmp_path / "ev.jsonl") == 0
        inv = tmp_path / "ev.inventory.csv"
        assert inv.exists() and (tmp_path / "ev.assets.csv").exists()
        assert run("replay-stream", "--events", tmp_path / "ev.jsonl", "--inventory", inv, "--model",
                   tmp_path / "model", "--window", 10, "--fixes-out", tmp_path / "fixes.csv", "--out", tmp_path / "store.csv") == 0
        counters = json.loads((tmp_path / "store.csv.manifest.json").read_text())["results"]["counters"]
        assert counters["parsed"] == counters["enriched"] + counters["filtered"] + counters["malformed"]
        capsys.readouterr()
        assert run("query", "--store", tmp_path / "store.csv", "--asset", "asset-01", "--now", 1_700_000_400_000,
                   "--inventory", inv, "--manifest", tmp_path / "query.manifest.json") == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["asset"] == "asset-01"
        assert run("query", "--store", tmp_path / "store.csv", "--asset", "ghost", "--now", 0,
                   "--inventory", inv, "--manifest", tmp_path / "ghost.manifest.json") == 3

    def test_econ(self, tmp_path, capsys):
        assert run("econ", "--csv-out", tmp_path / "econ.csv") == 0
        out = capsys.readouterr().out
        assert "$6,250.00" in out and "NOT reproduced" in out
        assert (tmp_path / "econ.csv").exists()


class TestErrors:
    def test_unknown_flag(self, tmp_path):
        assert run("impute", "--in", "x", "--out", tmp_path / "y", "--bogus") == 2

    def test_missing_required(self):
        assert run("impute") == 2

    def test_unknown_command(self):
        assert run("frobnicate") == 2

    def test_missing_file(self, tmp_path):
        assert run("impute", "--in", tmp_path / "absent.csv", "--out", tmp_path / "y.csv") == 3

    def test_bad_plan(self, tmp_path):
        assert run("simulate-survey", "--plan", "castle", "--out", tmp_path / "r.csv") == 3

    def test_bad_config_key(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("colour: red\n")
        assert run("econ", "--config", cfg, "--out", tmp_path / "e.txt") == 3


class TestConfigAndDeterminism:
    def test_config_supplies_and_flags_win(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text(f"plan: apartment\nsamples: 5\nseed: 3\nout: {tmp_path / 'a.csv'}\n")
        assert run("simulate-survey", "--config", cfg) == 0
        assert json.loads((tmp_path / "a.csv.manifest.json").read_text())["seed"] == 3
        assert run("simulate-survey", "--config", cfg, "--seed", 4, "--out", tmp_path / "b.csv") == 0
        assert json.loads((tmp_path / "b.csv.manifest.json").read_text())["seed"] == 4

    def test_identical_runs_identical_bytes(self, tmp_path):
        for name in ("x", "y"):
            assert run("simulate-walk", "--plan", "office", "--duration", 120, "--scan-interval", 10, "--seed", 9,
                       "--out", tmp_path / f"{name}.jsonl") == 0
            assert run("simulate-survey", "--plan", "apartment", "--samples", 20, "--seed", 9,
                       "--out", tmp_path / f"{name}.csv") == 0
        assert (tmp_path / "x.jsonl").read_bytes() == (tmp_path / "y.jsonl").read_bytes()
        assert (tmp_path / "x.csv").read_bytes() == (tmp_path / "y.csv").read_bytes()

    def test_manifest_hashes_inputs(self, work):
        m = json.loads((work / "dense.csv.manifest.json").read_text())
        assert len(m["inputs"][str(work / "raw.csv")]) == 64
        assert m["duration_s"] >= 0 and m["version"]

    def test_module_entry_point(self):
        out = subprocess.run([sys.executable, "-m", "roomtrack", "--version"], capture_output=True, text=True)
        assert out.returncode == 0 and "roomtrack" in out.stdout
