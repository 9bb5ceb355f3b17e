import json
from dataclasses import replace
from pathlib import Path

import pytest

from pie_ie.cli import main
from pie_ie.corpus import read_jsonl_corpus, write_jsonl
from pie_ie.document import LabeledSpan
from pie_ie.metrics import describe
from pie_ie.synthetic import ner_corpus, re_corpus

FIXTURES = Path(__file__).parent / "fixtures"


def write_corpus(path, docs):
    with open(path, "w", encoding="utf-8") as fh:
        write_jsonl(docs, fh)
    return str(path)


def read_corpus(path):
    with open(path, encoding="utf-8") as fh:
        return read_jsonl_corpus(fh)[1]


@pytest.fixture
def ner_files(tmp_path):
    docs = ner_corpus(120, seed=3)
    return write_corpus(tmp_path / "train.jsonl", docs[:100]), write_corpus(tmp_path / "dev.jsonl", docs[100:])


def test_convert_conll_to_jsonl(tmp_path, capsys):
    out = tmp_path / "out.jsonl"
    assert main(["convert", "--from", "conll2003", "--to", "jsonl", str(FIXTURES / "sample.conll"), str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1 + 2 and json.loads(lines[0])["name"] == "entities_relations"
    assert "documents read: 2" in capsys.readouterr().err


def test_convert_jsonl_is_canonical_identity(tmp_path):
    src = write_corpus(tmp_path / "a.jsonl", re_corpus(5, seed=1))
    out = tmp_path / "b.jsonl"
    assert main(["convert", "--from", "jsonl", "--to", "jsonl", src, str(out)]) == 0
    assert out.read_bytes() == Path(src).read_bytes()


def test_convert_brat_both_ways(tmp_path):
    jsonl, brat = tmp_path / "c.jsonl", tmp_path / "brat"
    assert main(["convert", "--from", "brat", "--to", "jsonl", str(FIXTURES / "brat"), str(jsonl)]) == 0
    assert main(["convert", "--from", "jsonl", "--to", "brat", str(jsonl), str(brat)]) == 0
    assert (brat / "news1.ann").read_text() == (FIXTURES / "brat" / "news1.ann").read_text()


def test_convert_unknown_format(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["convert", "--from", "xml", "--to", "jsonl", "a", "b"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_convert_hard_error_leaves_no_output(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"not":"a schema"}\n')
    out = tmp_path / "out.jsonl"
    assert main(["convert", "--from", "jsonl", "--to", "jsonl", str(bad), str(out)]) == 2
    assert not out.exists()


def test_stats_json(tmp_path, capsys):
    assert main(["stats", str(FIXTURES / "sample.conll"), "--input-format", "conll2003", "--json"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["documents"] == 2
    assert record["label_counts"]["entities"] == {"LOC": 1, "MISC": 3, "ORG": 2, "PER": 1}


def test_stats_layer_flag(tmp_path, capsys):
    assert main(["stats", str(FIXTURES / "brat"), "--input-format", "brat", "--layer", "relations"]) == 0
    out = capsys.readouterr().out
    assert "layer relations" in out and "layer entities" not in out


def test_train_predict_evaluate(tmp_path, ner_files, capsys):
    train, dev = ner_files
    model_dir = tmp_path / "model"
    assert main(["train", "--task", "ner", "--train", train, "--dev", dev, "--model-dir", str(model_dir), "--json"]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["micro"]["f1"] >= 0.99
    assert "skipped annotations" in captured.err
    assert sorted(p.name for p in model_dir.iterdir()) == ["config.json", "meta.json", "model.txt"]

    pred = tmp_path / "pred.jsonl"
    assert main(["predict", "--model-dir", str(model_dir), train, str(pred)]) == 0
    for doc in read_corpus(pred):
        assert set(doc["entities"].predictions) == set(doc["entities"].gold)
    assert main(["evaluate", str(pred), "--layer", "entities", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["micro"]["f1"] == 1.0


def test_train_is_deterministic(tmp_path, ner_files):
    train, _ = ner_files
    for name in ("a", "b"):
        assert main(["train", "--task", "ner", "--train", train, "--model-dir", str(tmp_path / name), "--seed", "5"]) == 0
    for f in ("model.txt", "config.json", "meta.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_seed_from_environment(tmp_path, ner_files, monkeypatch):
    train, _ = ner_files
    monkeypatch.setenv("PIE_SEED", "11")
    assert main(["train", "--task", "ner", "--train", train, "--model-dir", str(tmp_path / "m"), "--epochs", "1"]) == 0
    assert json.loads((tmp_path / "m" / "meta.json").read_text())["train_config"]["seed"] == 11
    monkeypatch.setenv("PIE_SEED", "eleven")
    assert main(["train", "--task", "ner", "--train", train, "--model-dir", str(tmp_path / "n")]) == 2


def test_train_missing_file(tmp_path):
    assert main(["train", "--task", "ner", "--train", str(tmp_path / "nope.jsonl"), "--model-dir", str(tmp_path / "m")]) == 2


def test_train_empty_set(tmp_path):
    empty = write_corpus(tmp_path / "empty.jsonl", [])
    assert main(["train", "--task", "re", "--train", empty, "--model-dir", str(tmp_path / "m")]) == 3
    assert not (tmp_path / "m").exists()


def test_train_re(tmp_path, capsys):
    docs = re_corpus(150, seed=2)
    train, dev = write_corpus(tmp_path / "t.jsonl", docs[:120]), write_corpus(tmp_path / "d.jsonl", docs[120:])
    assert main(["train", "--task", "re", "--train", train, "--dev", dev, "--model-dir", str(tmp_path / "m"),
                 "--max-pair-distance", "none", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["micro"]["f1"] >= 0.99
    config = json.loads((tmp_path / "m" / "config.json").read_text())
    assert config["task"] == "re" and config["max_pair_distance"] is None


def test_predict_empty_input(tmp_path, ner_files):
    train, _ = ner_files
    main(["train", "--task", "ner", "--train", train, "--model-dir", str(tmp_path / "m"), "--epochs", "1"])
    empty = write_corpus(tmp_path / "empty.jsonl", [])
    out = tmp_path / "out.jsonl"
    assert main(["predict", "--model-dir", str(tmp_path / "m"), empty, str(out)]) == 0
    assert out.read_bytes() == Path(empty).read_bytes()


def test_predict_version_mismatch(tmp_path, ner_files):
    train, _ = ner_files
    main(["train", "--task", "ner", "--train", train, "--model-dir", str(tmp_path / "m"), "--epochs", "1"])
    meta = tmp_path / "m" / "meta.json"
    meta.write_text(meta.read_text().replace("pie-model-dir v1", "pie-model-dir v9"))
    assert main(["predict", "--model-dir", str(tmp_path / "m"), train, str(tmp_path / "o.jsonl")]) == 2
    model = tmp_path / "m" / "model.txt"
    meta.write_text(meta.read_text().replace("v9", "v1"))
    model.write_text(model.read_text().replace("pie-linear-model v1", "pie-linear-model v0"))
    assert main(["predict", "--model-dir", str(tmp_path / "m"), train, str(tmp_path / "o.jsonl")]) == 2


def test_predict_output_ignores_gold(tmp_path, ner_files):
    train, dev = ner_files
    main(["train", "--task", "ner", "--train", train, "--model-dir", str(tmp_path / "m")])
    docs = read_corpus(dev)
    stripped = write_corpus(tmp_path / "stripped.jsonl", [d.copy(exclude_ids=d["entities"].gold_ids).seal() for d in docs])
    outs = []
    for name, src in (("gold", dev), ("stripped", stripped)):
        out = tmp_path / f"{name}.out.jsonl"
        assert main(["predict", "--model-dir", str(tmp_path / "m"), "--predictions-only", src, str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_evaluate_identity_and_errors(tmp_path, capsys):
    docs = []
    for doc in re_corpus(6, seed=4):
        d = doc.copy()
        for span in doc["entities"].gold[::2]:
            d.add("entities", replace(span, score=0.5), prediction=True)
        d.add("entities", LabeledSpan(0, 1, "ZZZ"), prediction=True)
        docs.append(d.seal())
    path = write_corpus(tmp_path / "e.jsonl", docs)
    assert main(["evaluate", path, "--layer", "entities", "--errors", "--json"]) == 0
    errors = json.loads(capsys.readouterr().out)["errors"]
    expected = []
    for doc in docs:
        gold, pred = set(doc["entities"].gold), set(doc["entities"].predictions)
        expected += [(doc.id, "FP", describe(doc, a)) for a in pred - gold]
        expected += [(doc.id, "FN", describe(doc, a)) for a in gold - pred]
    got = [(e["document"], e["type"], e["annotation"]) for e in errors]
    assert sorted(got) == sorted(expected) and len(set(got)) == len(got)

    assert main(["evaluate", path, "--layer", "entities", "--errors"]) == 0
    text = capsys.readouterr().out
    assert text.count("  FP ") + text.count("  FN ") == len(expected)


def test_evaluate_perfect(tmp_path, capsys):
    docs = []
    for doc in ner_corpus(4, seed=9):
        d = doc.copy()
        for span in doc["entities"].gold:
            d.add("entities", replace(span, score=1.0), prediction=True)
        docs.append(d.seal())
    path = write_corpus(tmp_path / "p.jsonl", docs)
    assert main(["evaluate", path, "--layer", "entities"]) == 0
    assert "MICRO" in capsys.readouterr().out


def test_evaluate_missing_layer(tmp_path):
    path = write_corpus(tmp_path / "p.jsonl", ner_corpus(2))
    assert main(["evaluate", path, "--layer", "events"]) == 2
