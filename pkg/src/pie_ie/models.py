"""Averaged-perceptron models for the NER and RE task modules.

Both learners keep integer weights during training (every update is +1/-1)
and average them over all training steps with the usual timestamp trick, so
the final weights are exact quotients of integers.  They are rounded to 12
significant digits once, at the end of training, which makes the in-memory
model and its saved text form predict identically.
"""

from __future__ import annotations

import io
import random
import unicodedata
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, TextIO, Tuple

from pie_ie.errors import EmptyTrainingSetError, ParseError, SingleClassWarning, VersionMismatchError
from pie_ie.taskmodules.ner import NerEncoding
from pie_ie.taskmodules.relation import ReEncoding, is_marker

FORMAT_NAME = "pie-linear-model"
FORMAT_VERSION = "v1"
BOS = "<BOS>"
EOS = "<EOS>"


@dataclass
class TrainConfig:
    epochs: int = 5
    seed: int = 42
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class LinearModel:
    labels: List[str]
    weights: Dict[str, Dict[str, float]] = field(default_factory=dict)
    training_meta: Dict = field(default_factory=dict)

    def scores(self, features: Iterable[str]) -> Dict[str, float]:
        totals = {label: 0.0 for label in self.labels}
        for feat in features:
            for label, w in self.weights.get(feat, {}).items():
                totals[label] += w
        return totals

    def best(self, features: Iterable[str]) -> Tuple[str, float]:
        return _argmax(self.scores(features))

    @property
    def feature_count(self) -> int:
        return len(self.weights)


def _argmax(scores: Dict[str, float]) -> Tuple[str, float]:
    # lexicographic tie-break: the first label in sorted order keeps a tie
    best_label, best_score = None, None
    for label in sorted(scores):
        if best_score is None or scores[label] > best_score:
            best_label, best_score = label, scores[label]
    return best_label, best_score


class _Perceptron:
    """Integer perceptron weights plus the bookkeeping to average them.

    ``step`` counts completed training instances.  The average is taken over
    the weight vectors as they stand after each instance.
    """

    def __init__(self, labels: Sequence[str]):
        self.labels = list(labels)
        self.weights: Dict[str, Dict[str, int]] = defaultdict(dict)
        self._totals: Dict[Tuple[str, str], int] = {}
        self._stamps: Dict[Tuple[str, str], int] = {}
        self.step = 0

    def predict(self, features: Sequence[str]) -> str:
        scores = {label: 0 for label in self.labels}
        for feat in features:
            row = self.weights.get(feat)
            if row:
                for label, w in row.items():
                    scores[label] += w
        return _argmax(scores)[0]

    def begin_instance(self):
        self.step += 1

    def update(self, gold: str, guess: str, features: Sequence[str]):
        if gold == guess:
            return
        for feat in features:
            self._bump(feat, gold, 1)
            self._bump(feat, guess, -1)

    def _bump(self, feat: str, label: str, delta: int):
        key = (feat, label)
        w = self.weights[feat].get(label, 0)
        # the old value was held after instances stamp+1 .. step-1
        self._totals[key] = self._totals.get(key, 0) + (self.step - 1 - self._stamps.get(key, 0)) * w
        self._stamps[key] = self.step - 1
        self.weights[feat][label] = w + delta

    def averaged(self) -> Dict[str, Dict[str, float]]:
        out: Dict[str, Dict[str, float]] = {}
        if self.step == 0:
            return out
        for (feat, label), total in self._totals.items():
            w = self.weights[feat][label]
            total += (self.step - self._stamps[(feat, label)]) * w
            if total:
                value = float(f"{total / self.step:.12g}")
                if value:
                    out.setdefault(feat, {})[label] = value
        return out


def _shuffled_orders(n: int, config: TrainConfig):
    rng = random.Random(config.seed)
    order = list(range(n))
    for _ in range(config.epochs):
        if config.shuffle:
            rng.shuffle(order)  # Fisher-Yates
        yield list(order)


# ---------------------------------------------------------------------------
# sequence tagger


def word_shape(token: str) -> str:
    out = []
    for ch in token:
        if ch.isupper():
            c = "X"
        elif ch.islower():
            c = "x"
        else:
            cat = unicodedata.category(ch)
            c = "d" if cat[0] == "N" else "x" if cat[0] == "L" else "o"
        if not out or out[-1] != c:
            out.append(c)
    return "".join(out)


def tagger_features(tokens: Sequence[str], position: int, prev_tag: str) -> List[str]:
    token = tokens[position]
    lower = token.lower()
    return [
        "bias",
        f"w={lower}",
        f"suf3={token[-3:]}",
        f"suf2={token[-2:]}",
        f"shape={word_shape(token)}",
        "first" if position == 0 else "not_first",
        f"prev_w={tokens[position - 1].lower() if position > 0 else BOS}",
        f"next_w={tokens[position + 1].lower() if position + 1 < len(tokens) else EOS}",
        f"prev_t={prev_tag}",
        f"prev_t+w={prev_tag}|{lower}",
    ]


def _tokens_of(encoding) -> List[str]:
    if isinstance(encoding, NerEncoding):
        return encoding.token_texts
    return list(encoding)


def train_tagger(encodings: Sequence[NerEncoding], config: TrainConfig = None) -> LinearModel:
    config = config or TrainConfig()
    if not encodings:
        raise EmptyTrainingSetError("no encodings to train on")
    if any(enc.target is None for enc in encodings):
        raise ValueError("every training encoding needs a target")
    labels = sorted({tag for enc in encodings for tag in enc.target})
    if not labels:
        raise EmptyTrainingSetError("training encodings contain no tokens")
    model = _Perceptron(labels)
    for order in _shuffled_orders(len(encodings), config):
        for idx in order:
            enc = encodings[idx]
            tokens = enc.token_texts
            prev = BOS
            for pos, gold in enumerate(enc.target):
                feats = tagger_features(tokens, pos, prev)
                model.begin_instance()
                guess = model.predict(feats)
                model.update(gold, guess, feats)
                prev = guess
    weights = model.averaged()
    meta = {"kind": "tagger", "epochs": config.epochs, "seed": config.seed, "shuffle": config.shuffle, "feature_count": len(weights)}
    return LinearModel(labels, weights, meta)


def predict_tags(model: LinearModel, encoding) -> List[str]:
    tokens = _tokens_of(encoding)
    tags = []
    prev = BOS
    for pos in range(len(tokens)):
        prev = model.best(tagger_features(tokens, pos, prev))[0]
        tags.append(prev)
    return tags


# ---------------------------------------------------------------------------
# relation classifier


def _distance_bucket(n: int) -> str:
    if n <= 2:
        return str(n)
    if n <= 5:
        return "3-5"
    if n <= 10:
        return "6-10"
    return ">10"


def classifier_features(encoding: ReEncoding) -> List[str]:
    toks = list(encoding.marked_tokens)
    positions = {}
    for i, tok in enumerate(toks):
        if is_marker(tok):
            role = ("close_" if tok[1] == "/" else "open_") + tok.lstrip("</")[0]
            positions[role] = i
    hs, he, ts, te = positions["open_H"], positions["close_H"], positions["open_T"], positions["close_T"]
    head_first = hs < ts
    first_close, second_open = (he, ts) if head_first else (te, hs)

    def at(i):
        if i < 0:
            return BOS
        if i >= len(toks):
            return EOS
        return toks[i].lower()

    between = toks[first_close + 1:second_open]
    feats = [
        "bias",
        "head=" + " ".join(t.lower() for t in toks[hs + 1:he]),
        "tail=" + " ".join(t.lower() for t in toks[ts + 1:te]),
    ]
    feats += [f"before:w={t.lower()}" for t in toks[:min(hs, ts)]]
    feats += [f"between:w={t.lower()}" for t in between]
    feats += [f"after:w={t.lower()}" for t in toks[max(he, te) + 1:]]
    feats += [
        f"dist={_distance_bucket(len(between))}",
        f"order={'head_first' if head_first else 'tail_first'}",
        f"h-1={at(hs - 1)}",
        f"h+1={at(he + 1)}",
        f"t-1={at(ts - 1)}",
        f"t+1={at(te + 1)}",
    ]
    return list(dict.fromkeys(feats))


def train_classifier(encodings: Sequence[ReEncoding], config: TrainConfig = None) -> LinearModel:
    config = config or TrainConfig()
    if not encodings:
        raise EmptyTrainingSetError("no encodings to train on")
    if any(enc.target is None for enc in encodings):
        raise ValueError("every training encoding needs a target")
    labels = sorted({enc.target for enc in encodings})
    if len(labels) == 1:
        warnings.warn(f"training data has a single class {labels[0]!r}", SingleClassWarning, stacklevel=2)
    features = [classifier_features(enc) for enc in encodings]
    model = _Perceptron(labels)
    for order in _shuffled_orders(len(encodings), config):
        for idx in order:
            model.begin_instance()
            model.update(encodings[idx].target, model.predict(features[idx]), features[idx])
    weights = model.averaged()
    meta = {"kind": "classifier", "epochs": config.epochs, "seed": config.seed, "shuffle": config.shuffle, "feature_count": len(weights)}
    return LinearModel(labels, weights, meta)


def predict_label(model: LinearModel, encoding: ReEncoding) -> Tuple[str, float]:
    return model.best(classifier_features(encoding))


# ---------------------------------------------------------------------------
# persistence


def _check_field(value: str, what: str):
    if not value or any(c in value for c in "\t\n\r"):
        raise ValueError(f"{what} {value!r} cannot be stored in the model format")


def save_model(model: LinearModel, sink: TextIO) -> None:
    for label in model.labels:
        _check_field(label, "label")
    sink.write(f"{FORMAT_NAME} {FORMAT_VERSION}\n")
    sink.write("\t".join(["labels", *sorted(model.labels)]) + "\n")
    lines = []
    for feat, row in model.weights.items():
        _check_field(feat, "feature")
        for label, w in row.items():
            if w:
                lines.append((feat, label, f"{w:.12g}"))
    for feat, label, w in sorted(lines):
        sink.write(f"{feat}\t{label}\t{w}\n")


def dumps_model(model: LinearModel) -> str:
    buf = io.StringIO()
    save_model(model, buf)
    return buf.getvalue()


def load_model(source: TextIO) -> LinearModel:
    lines = source.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty model file")
    header = lines[0].split(" ")
    if len(header) != 2 or header[0] != FORMAT_NAME:
        raise ParseError(f"not a {FORMAT_NAME} file")
    if header[1] != FORMAT_VERSION:
        raise VersionMismatchError(f"model format {header[1]!r}, expected {FORMAT_VERSION!r}")
    if len(lines) < 2 or lines[1].split("\t")[0] != "labels":
        raise ParseError("missing label line")
    labels = lines[1].split("\t")[1:]
    if len(set(labels)) != len(labels) or labels != sorted(labels):
        raise ParseError("label line must list unique labels in sorted order")
    known = set(labels)
    weights: Dict[str, Dict[str, float]] = {}
    for lineno, line in enumerate(lines[2:], start=3):
        parts = line.split("\t")
        if len(parts) != 3 or not parts[0]:
            raise ParseError(f"line {lineno}: expected feature<TAB>label<TAB>weight")
        feat, label, raw = parts
        if label not in known:
            raise ParseError(f"line {lineno}: unknown label {label!r}")
        try:
            value = float(raw)
        except ValueError:
            raise ParseError(f"line {lineno}: bad weight {raw!r}") from None
        if value != value or value in (float("inf"), float("-inf")):
            raise ParseError(f"line {lineno}: non-finite weight")
        row = weights.setdefault(feat, {})
        if label in row:
            raise ParseError(f"line {lineno}: duplicate weight for ({feat!r}, {label!r})")
        row[label] = value
    return LinearModel(labels, weights)


def loads_model(text: str) -> LinearModel:
    return load_model(io.StringIO(text))
