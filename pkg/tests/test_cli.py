import csv
import json

import numpy as np
import pytest

from judgekit.assembly import FeatureMatrix
from judgekit.cli import main
from judgekit.models import load_model

SYNTH = {"spec": {"type": "pointwise", "L": 5}, "target_delta": 0.3, "n_instances": 120, "k": 4, "d": 5, "seed": 1}


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    (d / "synth.json").write_text(json.dumps(SYNTH))
    assert run("synth", "--config", d / "synth.json", "--out", d) == 0
    return d


@pytest.fixture(scope="module")
def extracted(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("features")
    code = run("extract", "--dataset", corpus / "dataset.jsonl", "--scale", corpus / "scale.json",
               "--cache", corpus / "cache.jsonl", "--offline", "strict", "--provider-config", corpus / "judge.json",
               "--out", out)
    assert code == 0
    return out / "features.csv"


@pytest.fixture(scope="module")
def trained(extracted, tmp_path_factory):
    out = tmp_path_factory.mktemp("model")
    assert run("train", "--matrix", extracted, "--out", out, "--seed", 0) == 0
    return out / "model.json"


def test_synth_outputs(corpus):
    for name in ("dataset.jsonl", "scale.json", "cache.jsonl", "judge.json", "manifest.json"):
        assert (corpus / name).is_file()
    manifest = json.loads((corpus / "manifest.json").read_text())
    assert manifest["seeds"] == [1] and "dataset.jsonl" in manifest["outputs"]
    assert manifest["backend"] in ("numba", "numpy")


def test_synth_deterministic(corpus, tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    names = ("dataset.jsonl", "cache.jsonl", "scale.json", "manifest.json")
    snaps = []
    for _ in range(2):
        assert run("synth", "--config", corpus / "synth.json", "--out", tmp_path) == 0
        snaps.append([(tmp_path / n).read_bytes() for n in names])
    assert snaps[0] == snaps[1]
    assert (tmp_path / "dataset.jsonl").read_bytes() == (corpus / "dataset.jsonl").read_bytes()


def test_extract_full(extracted):
    m = FeatureMatrix.from_csv(extracted)
    assert len(m) == 240
    assert any(n.startswith("llm.") for n in m.schema.names) and any(n.startswith("ling.") for n in m.schema.names)


def test_extract_base_only(corpus, tmp_path):
    assert run("extract", "--dataset", corpus / "dataset.jsonl", "--scale", corpus / "scale.json",
               "--ablation", "base_only", "--out", tmp_path) == 0
    header = (tmp_path / "features.csv").read_text().splitlines()[0].split(",")
    assert not any(h.startswith(("llm.", "ling.")) for h in header)


def test_offline_strict_miss_exits_3(corpus, tmp_path, capsys):
    lines = (corpus / "cache.jsonl").read_text().splitlines(keepends=True)
    (tmp_path / "partial.jsonl").write_text("".join(lines[1:]))
    code = run("extract", "--dataset", corpus / "dataset.jsonl", "--scale", corpus / "scale.json",
               "--cache", tmp_path / "partial.jsonl", "--offline", "strict", "--model-id", "synthetic-judge",
               "--out", tmp_path / "o")
    assert code == 3
    assert "instance '" in capsys.readouterr().err


def test_offline_lenient_miss_succeeds(corpus, tmp_path):
    (tmp_path / "empty.jsonl").write_text("")
    code = run("extract", "--dataset", corpus / "dataset.jsonl", "--scale", corpus / "scale.json",
               "--cache", tmp_path / "empty.jsonl", "--offline", "lenient", "--model-id", "synthetic-judge",
               "--out", tmp_path)
    assert code == 0
    m = FeatureMatrix.from_csv(tmp_path / "features.csv")
    assert not m.values[:, m.schema.index("llm.valid")].any()


def test_train_detect_separable(trained, extracted, tmp_path):
    assert run("detect", "--model", trained, "--matrix", extracted, "--out", tmp_path) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["f1"] >= 0.99 and summary["n_groups"] == 60
    rows = [json.loads(line) for line in (tmp_path / "group_scores.jsonl").read_text().splitlines()]
    assert all(abs(r["aggregate"] - sum(r["instance_logits"])) < 1e-9 for r in rows)


def test_detect_k1_is_instance_thresholding(trained, extracted, tmp_path):
    assert run("detect", "--model", trained, "--matrix", extracted, "--k", 1, "--out", tmp_path) == 0
    rows = [json.loads(line) for line in (tmp_path / "group_scores.jsonl").read_text().splitlines()]
    model = load_model(trained)
    m = FeatureMatrix.from_csv(extracted, model.schema)
    z = model.logits_for(m)
    assert len(rows) == len(m)
    assert sorted(r["prediction"] for r in rows) == sorted((z >= 0).astype(int).tolist())
    assert all(len(r["instance_logits"]) == 1 and r["prediction"] == int(r["aggregate"] >= 0) for r in rows)


def test_detect_from_dataset(trained, corpus, tmp_path):
    code = run("detect", "--model", trained, "--dataset", corpus / "dataset.jsonl", "--scale", corpus / "scale.json",
               "--cache", corpus / "cache.jsonl", "--offline", "strict", "--model-id", "synthetic-judge",
               "--out", tmp_path)
    assert code == 0


def test_evaluate_five_repeats(trained, extracted, tmp_path):
    assert run("evaluate", "--model", trained, "--matrix", extracted, "--repeats", 5, "--out", tmp_path) == 0
    rows = list(csv.reader((tmp_path / "metrics.csv").open()))
    assert len(rows) == 1 + 5 + 1 and rows[-1][0] == "mean"
    assert len(json.loads((tmp_path / "metrics.json").read_text())["runs"]) == 5


def test_evaluate_retrain(extracted, tmp_path):
    code = run("evaluate", "--train-matrix", extracted, "--matrix", extracted, "--kind", "logistic",
               "--seeds", "0,1", "--out", tmp_path)
    assert code == 0


def test_evaluate_seed_repeat_mismatch(trained, extracted, tmp_path):
    assert run("evaluate", "--model", trained, "--matrix", extracted, "--repeats", 3, "--seeds", "1,2",
               "--out", tmp_path) == 2


def test_bias_default_twenty(trained, tmp_path):
    assert run("bias", "--model", trained, "--out", tmp_path) == 0
    rows = list(csv.DictReader((tmp_path / "bias.csv").open()))
    assert len(rows) == 20
    vals = [abs(float(r["value"])) for r in rows]
    assert vals == sorted(vals, reverse=True)
    assert {r["block"] for r in rows} <= {"base", "llm", "linguistic"}


def test_schema_mismatch_exit_2(trained, corpus, tmp_path):
    assert run("extract", "--dataset", corpus / "dataset.jsonl", "--scale", corpus / "scale.json",
               "--ablation", "base_only", "--out", tmp_path) == 0
    assert run("detect", "--model", trained, "--matrix", tmp_path / "features.csv", "--out", tmp_path / "d") == 2


def test_bad_model_file_exit_2(tmp_path):
    (tmp_path / "m.json").write_text('{"format_version": 42}')
    assert run("bias", "--model", tmp_path / "m.json", "--out", tmp_path) == 2


def test_missing_input_exit_2(tmp_path):
    assert run("train", "--matrix", tmp_path / "nope.csv", "--out", tmp_path) == 2
    assert run("train", "--out", tmp_path) == 2


def test_malformed_dataset_exit_2(corpus, tmp_path):
    (tmp_path / "bad.jsonl").write_text("{not json\n")
    assert run("extract", "--dataset", tmp_path / "bad.jsonl", "--scale", corpus / "scale.json",
               "--ablation", "base_only", "--out", tmp_path) == 2


def test_online_without_provider_exit_2(corpus, tmp_path):
    assert run("extract", "--dataset", corpus / "dataset.jsonl", "--scale", corpus / "scale.json",
               "--out", tmp_path) == 2


def test_unreachable_provider_exit_3(corpus, tmp_path):
    cfg = {"endpoint": "http://127.0.0.1:9/v1", "model_id": "m", "max_retries": 0, "timeout": 1, "max_concurrent": 1}
    (tmp_path / "p.json").write_text(json.dumps(cfg))
    lines = (corpus / "dataset.jsonl").read_text().splitlines(keepends=True)[:1]
    (tmp_path / "one.jsonl").write_text("".join(lines))
    code = run("extract", "--dataset", tmp_path / "one.jsonl", "--scale", corpus / "scale.json",
               "--provider-config", tmp_path / "p.json", "--out", tmp_path)
    assert code == 3


def test_cache_commands(corpus, tmp_path, capsys):
    assert run("cache", "stats", "--cache", corpus / "cache.jsonl") == 0
    assert json.loads(capsys.readouterr().out)["records"] == 240
    assert run("cache", "export", tmp_path / "x.jsonl", "--cache", corpus / "cache.jsonl") == 0
    assert run("cache", "import", tmp_path / "x.jsonl", "--cache", tmp_path / "new.jsonl") == 0
    assert (tmp_path / "new.jsonl").read_bytes() == (corpus / "cache.jsonl").read_bytes()


def test_theory_sweep(tmp_path):
    cfg = {"specs": [{"type": "pointwise", "L": 5}], "deltas": [0.3], "ks": [1, 4], "seeds": [0],
           "n_instances": 150, "train": {"kind": "forest", "n_trees": 20, "min_leaf": 10}}
    (tmp_path / "sweep.json").write_text(json.dumps(cfg))
    assert run("theory", "--config", tmp_path / "sweep.json", "--out", tmp_path) == 0
    rows = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    assert list(rows[0]) == ["m", "d", "S", "delta", "beta_hat", "det_predicted", "auroc_observed", "f1_observed", "seed"]
    assert [int(r["m"]) for r in rows] == [1, 4]
    assert np.isfinite(float(rows[0]["beta_hat"]))


def test_pipeline_idempotent(corpus, extracted, tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    names = ("features.csv", "model.json", "metrics.json", "metrics.csv", "manifest.json")
    out = tmp_path
    snaps = []
    for _ in range(2):
        assert run("extract", "--dataset", corpus / "dataset.jsonl", "--scale", corpus / "scale.json",
                   "--cache", corpus / "cache.jsonl", "--offline", "strict", "--model-id", "synthetic-judge",
                   "--out", out) == 0
        assert run("train", "--matrix", out / "features.csv", "--out", out, "--seed", 3) == 0
        assert run("evaluate", "--model", out / "model.json", "--matrix", out / "features.csv", "--out", out) == 0
        snaps.append([(out / n).read_bytes() for n in names])
    assert snaps[0] == snaps[1]
