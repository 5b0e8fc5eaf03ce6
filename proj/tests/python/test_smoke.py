import json
import math

import pytest

import dhap


def test_tokenize_and_metrics():
    assert dhap.tokenize("Hello, World!") == ["hello", ",", "world", "!"]
    assert dhap.bleu(["a", "b", "c"], ["a", "c", "d"], 1) == pytest.approx(200 / 3)
    assert dhap.dist_n([["a", "a", "a"]], 1) == pytest.approx(1 / 3)
    assert dhap.rouge_l(["a", "b", "c"], ["b", "c", "d"]) == pytest.approx(200 / 3)
    assert dhap.persona_f1(["a", "b"], [["a", "c"]]) == pytest.approx(0.5)


def test_synth_is_deterministic():
    a = dhap.synth_tsv(users=3, pairs=12)
    assert a == dhap.synth_tsv(users=3, pairs=12)
    assert len(a.splitlines()) == 36
    assert all(len(line.split("\t")) == 6 for line in a.splitlines())


def test_pipeline_and_generator(tmp_path):
    corpus = tmp_path / "corpus.tsv"
    corpus.write_text(dhap.synth_tsv(users=6))
    data, run = str(tmp_path / "data"), str(tmp_path / "run")
    assert dhap.run(["prepare", "--input", str(corpus), "--out", data])[0] == 0
    code, out, err = dhap.run(["train", "--data", data, "--out", run, "--epochs", "1"])
    assert code == 0, err
    report = tmp_path / "report.json"
    code, _, err = dhap.run(["evaluate", "--checkpoint", run + "/best", "--data", data, "--report", str(report)])
    assert code == 0, err
    metrics = json.loads(report.read_text())["metrics"]
    assert len(metrics) == 10
    assert all(math.isfinite(v) for v in metrics.values())

    gen = dhap.Generator(run + "/best")
    assert gen.variant == "full"
    history = [("how was the match", "great game today"), ("", "love my dog")]
    text = gen.generate("what are you doing", history, beam=2, max_len=8)
    assert isinstance(text, str)
    steps = gen.trace("what are you doing", history, max_len=5)
    assert 1 <= len(steps) <= 5
    for s in steps:
        assert s["p_gen"] + s["p_copy"] == 1.0
        assert sum(s["memory_weights"]) == pytest.approx(1.0)


def test_usage_errors():
    assert dhap.run(["frobnicate"])[0] == 1
    with pytest.raises(Exception):
        dhap.Generator("/nonexistent/checkpoint")
