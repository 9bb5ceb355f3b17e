from collections import defaultdict
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pie_ie.errors import EmptyTrainingSetError, ParseError, SingleClassWarning, VersionMismatchError
from pie_ie.models import (
    LinearModel,
    TrainConfig,
    _argmax,
    _shuffled_orders,
    classifier_features,
    dumps_model,
    loads_model,
    predict_label,
    predict_tags,
    tagger_features,
    train_classifier,
    train_tagger,
    word_shape,
)
from pie_ie.taskmodules.ner import NerEncoding
from pie_ie.taskmodules.relation import ReEncoding, is_marker
from pie_ie.tokenization import Token


def ner_enc(words, tags=None):
    tokens, offset = [], 0
    for w in words:
        tokens.append(Token(offset, offset + len(w), w))
        offset += len(w) + 1
    return NerEncoding("d", (0, len(words)), tuple(tokens), (0, len(words)), tuple(tags) if tags else None)


def re_enc(marked, target=None):
    return ReEncoding("d", 0, 1, tuple(marked), (0, len(marked)), target)


ALICE = re_enc(["<H:PER>", "Alice", "</H:PER>", "works", "for", "<T:ORG>", "Acme", "</T:ORG>"])


@pytest.mark.parametrize("token,shape", [("Alice", "Xx"), ("ACME2", "Xd"), ("a-b", "xox"), ("1999", "d"), ("漢字", "x")])
def test_word_shape(token, shape):
    assert word_shape(token) == shape


def test_tagger_features_example():
    feats = tagger_features(["Alice"], 0, "<BOS>")
    for f in ("shape=Xx", "first", "prev_w=<BOS>", "next_w=<EOS>", "w=alice", "prev_t+w=<BOS>|alice"):
        assert f in feats
    assert "not_first" in tagger_features(["a", "b"], 1, "O")


@given(st.lists(st.text(min_size=1, max_size=6), min_size=1, max_size=6), st.data(), st.sampled_from(["O", "B-X", "<BOS>"]))
def test_tagger_feature_count_is_constant(tokens, data, prev):
    pos = data.draw(st.integers(0, len(tokens) - 1))
    assert len(tagger_features(tokens, pos, prev)) == 10


def test_classifier_features_example():
    feats = classifier_features(ALICE)
    for f in ("bias", "head=alice", "tail=acme", "between:w=works", "between:w=for", "dist=2", "order=head_first",
              "h-1=<BOS>", "h+1=works", "t-1=for", "t+1=<EOS>"):
        assert f in feats
    adjacent = re_enc(["<T:ORG>", "Acme", "</T:ORG>", "<H:PER>", "Bob", "</H:PER>"])
    feats = classifier_features(adjacent)
    assert "dist=0" in feats and "order=tail_first" in feats


def test_markers_only_in_adjacency_slots():
    adjacent = re_enc(["x", "<T:ORG>", "Acme", "</T:ORG>", "<H:PER>", "Bob", "</H:PER>"])
    seen = []
    for feat in classifier_features(ALICE) + classifier_features(adjacent):
        name, _, value = feat.partition("=")
        if any(is_marker(part) for part in value.split()):
            seen.append(name)
    assert seen and set(seen) <= {"h-1", "h+1", "t-1", "t+1"}


TOY_NER = [ner_enc(["aaa", "bbb", "aaa"], ["B-X", "O", "B-X"]), ner_enc(["bbb", "bbb", "aaa"], ["O", "O", "B-X"])]


def test_tagger_converges_on_toy_set():
    model = train_tagger(TOY_NER, TrainConfig(epochs=2))
    for enc in TOY_NER:
        assert predict_tags(model, enc) == list(enc.target)
    assert len(predict_tags(model, ["ccc"] * 7)) == 7


def test_zero_weight_model_uses_smallest_tag():
    model = LinearModel(["O", "B-X", "I-X"])
    assert predict_tags(model, ["a", "b"]) == ["B-X", "B-X"]
    assert predict_label(LinearModel(["works_for", "no_relation"]), ALICE) == ("no_relation", 0.0)
    assert _argmax({"b": 1.0, "a": 1.0, "c": 0.5}) == ("a", 1.0)


def _toy_re():
    encs = []
    for h, t in [("Alice", "Acme"), ("Bob", "Initech"), ("Carol", "Hooli")]:
        encs.append(re_enc(["<H:PER>", h, "</H:PER>", "works", "for", "<T:ORG>", t, "</T:ORG>"], "works_for"))
        encs.append(re_enc(["<T:PER>", h, "</T:PER>", "works", "for", "<H:ORG>", t, "</H:ORG>"], "no_relation"))
        encs.append(re_enc(["<H:PER>", h, "</H:PER>", "met", "<T:ORG>", t, "</T:ORG>"], "no_relation"))
    return encs


def test_classifier_converges_on_toy_set():
    encs = _toy_re()
    model = train_classifier(encs, TrainConfig(epochs=3))
    assert [predict_label(model, e)[0] for e in encs] == [e.target for e in encs]
    label, score = predict_label(model, encs[0])
    assert score == model.scores(classifier_features(encs[0]))[label]


def test_unseen_features_contribute_nothing():
    model = LinearModel(["a", "b"], {"f": {"a": 1.0}})
    assert model.scores(["f", "never_seen"]) == {"a": 1.0, "b": 0.0}


def test_training_is_deterministic():
    a = dumps_model(train_classifier(_toy_re(), TrainConfig(seed=7)))
    b = dumps_model(train_classifier(_toy_re(), TrainConfig(seed=7)))
    assert a == b
    assert dumps_model(train_tagger(TOY_NER)) == dumps_model(train_tagger(TOY_NER))


def test_empty_training_set():
    with pytest.raises(EmptyTrainingSetError):
        train_tagger([])
    with pytest.raises(EmptyTrainingSetError):
        train_classifier([])
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)


def test_single_class_warning():
    encs = [e for e in _toy_re() if e.target == "no_relation"]
    with pytest.warns(SingleClassWarning):
        model = train_classifier(encs)
    assert model.labels == ["no_relation"]


# brute-force oracle: keep every post-instance weight snapshot and average exactly


def _oracle_classifier(encodings, config):
    labels = sorted({e.target for e in encodings})
    feats = [classifier_features(e) for e in encodings]
    weights = defaultdict(int)
    snapshots = []
    for order in _shuffled_orders(len(encodings), config):
        for idx in order:
            scores = {label: sum(weights[(f, label)] for f in feats[idx]) for label in labels}
            guess = _argmax(scores)[0]
            gold = encodings[idx].target
            if guess != gold:
                for f in feats[idx]:
                    weights[(f, gold)] += 1
                    weights[(f, guess)] -= 1
            snapshots.append(dict(weights))
    keys = {k for snap in snapshots for k in snap}
    return {k: Fraction(sum(s.get(k, 0) for s in snapshots), len(snapshots)) for k in keys}


def _oracle_tagger(encodings, config):
    labels = sorted({t for e in encodings for t in e.target})
    weights = defaultdict(int)
    snapshots = []
    for order in _shuffled_orders(len(encodings), config):
        for idx in order:
            enc, prev = encodings[idx], "<BOS>"
            for pos, gold in enumerate(enc.target):
                feats = tagger_features(enc.token_texts, pos, prev)
                guess = _argmax({label: sum(weights[(f, label)] for f in feats) for label in labels})[0]
                if guess != gold:
                    for f in feats:
                        weights[(f, gold)] += 1
                        weights[(f, guess)] -= 1
                snapshots.append(dict(weights))
                prev = guess
    keys = {k for snap in snapshots for k in snap}
    return {k: Fraction(sum(s.get(k, 0) for s in snapshots), len(snapshots)) for k in keys}


def _flatten(model):
    return {(f, label): w for f, row in model.weights.items() for label, w in row.items()}


def _compare(model, oracle):
    expected = {k: float(f"{float(v):.12g}") for k, v in oracle.items() if v != 0}
    assert _flatten(model) == expected


@settings(max_examples=40)
@given(st.integers(0, 1000), st.integers(1, 4), st.booleans())
def test_classifier_average_matches_snapshot_oracle(seed, epochs, shuffle):
    config = TrainConfig(epochs=epochs, seed=seed, shuffle=shuffle)
    encs = _toy_re()[: 3 + seed % 6]
    _compare(train_classifier(encs, config), _oracle_classifier(encs, config))


@settings(max_examples=40)
@given(st.lists(st.lists(st.sampled_from(["aaa", "bbb", "Ccc", "d1"]), min_size=1, max_size=5), min_size=1, max_size=4),
       st.integers(0, 1000), st.integers(1, 3))
def test_tagger_average_matches_snapshot_oracle(sentences, seed, epochs):
    tag = {"aaa": "B-X", "bbb": "O", "Ccc": "B-Y", "d1": "I-Y"}
    encs = [ner_enc(words, [tag[w] for w in words]) for words in sentences]
    config = TrainConfig(epochs=epochs, seed=seed)
    _compare(train_tagger(encs, config), _oracle_tagger(encs, config))


# persistence


def test_save_load_save_is_byte_identical():
    model = train_classifier(_toy_re())
    text = dumps_model(model)
    assert text.splitlines()[0] == "pie-linear-model v1"
    assert text.splitlines()[1] == "labels\tno_relation\tworks_for"
    again = loads_model(text)
    assert dumps_model(again) == text
    for enc in _toy_re():
        assert predict_label(again, enc) == predict_label(model, enc)


def test_weight_lines_are_sorted_and_nonzero():
    text = dumps_model(LinearModel(["b", "a"], {"z": {"a": 0.5, "b": 0.0}, "y": {"b": -1.0}}))
    assert text == "pie-linear-model v1\nlabels\ta\tb\ny\tb\t-1\nz\ta\t0.5\n"


def test_empty_model_round_trip():
    text = dumps_model(LinearModel(["O"]))
    assert text == "pie-linear-model v1\nlabels\tO\n"
    assert dumps_model(loads_model(text)) == text


@given(st.dictionaries(st.text("abc=:", min_size=1, max_size=4),
                       st.dictionaries(st.sampled_from(["x", "y"]), st.floats(-1e6, 1e6).map(lambda v: float(f"{v:.12g}")))))
def test_round_trip_property(weights):
    model = LinearModel(["x", "y"], weights)
    text = dumps_model(model)
    loaded = loads_model(text)
    assert dumps_model(loaded) == text
    for feat in weights:
        assert loaded.scores([feat]) == model.scores([feat])


@pytest.mark.parametrize("text", [
    "", "garbage\n", "pie-linear-model v1\n", "pie-linear-model v1\nlabels\tb\ta\n",
    "pie-linear-model v1\nlabels\ta\nf\tz\t1\n", "pie-linear-model v1\nlabels\ta\nf\ta\tnan\n",
    "pie-linear-model v1\nlabels\ta\nf\ta\tone\n", "pie-linear-model v1\nlabels\ta\nf\ta\n",
    "pie-linear-model v1\nlabels\ta\nf\ta\t1\nf\ta\t2\n",
])
def test_corrupted_files(text):
    with pytest.raises(ParseError):
        loads_model(text)


def test_version_mismatch():
    with pytest.raises(VersionMismatchError):
        loads_model("pie-linear-model v2\nlabels\ta\n")


def test_unstorable_label():
    with pytest.raises(ValueError):
        dumps_model(LinearModel(["a\tb"]))
