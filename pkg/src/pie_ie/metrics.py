"""Set-based precision/recall/F1 and corpus statistics.

Gold and predicted annotations of a layer are compared as Python sets.
Structural annotation equality ignores scores, so a predicted span matches a
gold span exactly when offsets and label agree.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

from pie_ie.document import BINARY_RELATION, LABELED_SPAN, Document
from pie_ie.errors import UnknownLayerError
from pie_ie.tokenization import tokenize

TOKEN_BIN_WIDTH = 50
CHAR_BIN_WIDTH = 250


@dataclass
class PRFScore:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn,
                "precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass
class F1Report:
    layer: str
    match: str
    micro: PRFScore
    per_label: Dict[str, PRFScore] = field(default_factory=dict)
    macro_precision: float = 0.0
    macro_recall: float = 0.0
    macro_f1: float = 0.0

    def to_dict(self) -> dict:
        out = {"layer": self.layer, "match": self.match, "micro": self.micro.to_dict()}
        if self.match == "labeled":
            out["per_label"] = {label: self.per_label[label].to_dict() for label in sorted(self.per_label)}
            out["macro"] = {"precision": self.macro_precision, "recall": self.macro_recall, "f1": self.macro_f1}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def render(self) -> str:
        rows = [("label", "tp", "fp", "fn", "precision", "recall", "f1")]

        def row(name, s):
            return (name, str(s.tp), str(s.fp), str(s.fn), f"{s.precision:.4f}", f"{s.recall:.4f}", f"{s.f1:.4f}")

        if self.match == "labeled":
            rows += [row(label, self.per_label[label]) for label in sorted(self.per_label)]
        rows.append(row("MICRO", self.micro))
        if self.match == "labeled":
            rows.append(("MACRO", "", "", "", f"{self.macro_precision:.4f}", f"{self.macro_recall:.4f}", f"{self.macro_f1:.4f}"))
        return f"layer {self.layer} ({self.match})\n" + render_table(rows)


def render_table(rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for r in rows:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)


def unlabeled_key(ann):
    if ann.kind == LABELED_SPAN:
        return ("span", ann.start, ann.end)
    if ann.kind == BINARY_RELATION:
        return ("relation", ann.head, ann.tail)
    return ("document",)


def layer_counts(doc: Document, layer: str, match: str = "labeled") -> Dict[Optional[str], PRFScore]:
    """Per-label tp/fp/fn for one document (key ``None`` when unlabeled)."""
    if layer not in doc:
        raise UnknownLayerError(f"document {doc.id!r} has no layer {layer!r}")
    gold, pred = set(doc[layer].gold), set(doc[layer].predictions)
    counts: Dict[Optional[str], PRFScore] = {}
    if match == "unlabeled":
        g, p = {unlabeled_key(a) for a in gold}, {unlabeled_key(a) for a in pred}
        counts[None] = PRFScore(len(g & p), len(p - g), len(g - p))
        return counts

    def bucket(label):
        return counts.setdefault(label, PRFScore())

    for ann in gold & pred:
        bucket(ann.label).tp += 1
    for ann in pred - gold:
        bucket(ann.label).fp += 1
    for ann in gold - pred:
        bucket(ann.label).fn += 1
    return counts


def layer_f1(docs: Iterable[Document], layer: str, match: str = "labeled") -> F1Report:
    if match not in ("labeled", "unlabeled"):
        raise ValueError("match must be 'labeled' or 'unlabeled'")
    micro = PRFScore()
    per_label: Dict[str, PRFScore] = {}
    gold_labels = set()
    for doc in docs:
        if match == "labeled":
            gold_labels.update(a.label for a in doc[layer].gold)
        for label, c in layer_counts(doc, layer, match).items():
            micro.tp += c.tp
            micro.fp += c.fp
            micro.fn += c.fn
            if label is not None:
                total = per_label.setdefault(label, PRFScore())
                total.tp += c.tp
                total.fp += c.fp
                total.fn += c.fn
    report = F1Report(layer, match, micro, per_label if match == "labeled" else {})
    rows = [per_label[label] for label in sorted(gold_labels)]
    if rows:
        report.macro_precision = sum(r.precision for r in rows) / len(rows)
        report.macro_recall = sum(r.recall for r in rows) / len(rows)
        report.macro_f1 = sum(r.f1 for r in rows) / len(rows)
    return report


def prediction_errors(doc: Document, layer: str):
    """``(false_positives, false_negatives)`` of one document, in insertion order."""
    gold, pred = set(doc[layer].gold), set(doc[layer].predictions)
    return [a for a in doc[layer].predictions if a not in gold], [a for a in doc[layer].gold if a not in pred]


def describe(doc: Document, ann) -> str:
    """Short human-readable rendering that resolves references into the text."""
    if ann.kind == LABELED_SPAN:
        return f"{ann.label} [{ann.start}:{ann.end}] {doc.text_of(ann)!r}"
    if ann.kind == BINARY_RELATION:
        return f"{ann.label}({describe(doc, ann.head)} -> {describe(doc, ann.tail)})"
    return ann.label


# ---------------------------------------------------------------------------
# dataset statistics


@dataclass
class LengthStats:
    count: int
    min: Optional[int]
    max: Optional[int]
    mean: Optional[float]
    median: Optional[int]
    bin_width: int
    histogram: List[int]

    @property
    def defined(self) -> bool:
        return self.count > 0


def length_stats(lengths: Sequence[int], bin_width: int) -> LengthStats:
    if not lengths:
        return LengthStats(0, None, None, None, None, bin_width, [])
    ordered = sorted(lengths)
    histogram = [0] * (ordered[-1] // bin_width + 1)
    for n in ordered:
        histogram[n // bin_width] += 1
    return LengthStats(
        len(ordered), ordered[0], ordered[-1], sum(ordered) / len(ordered),
        ordered[(len(ordered) - 1) // 2], bin_width, histogram,
    )


@dataclass
class StatsReport:
    documents: int
    label_counts: Dict[str, Dict[str, int]]
    char_lengths: LengthStats
    token_lengths: LengthStats

    def to_dict(self) -> dict:
        return {
            "documents": self.documents,
            "label_counts": {layer: dict(sorted(c.items())) for layer, c in sorted(self.label_counts.items())},
            "char_lengths": asdict(self.char_lengths),
            "token_lengths": asdict(self.token_lengths),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def render(self) -> str:
        out = [f"documents: {self.documents}"]
        for layer in sorted(self.label_counts):
            counts = self.label_counts[layer]
            rows = [("label", "count")] + [(label, str(n)) for label, n in sorted(counts.items())]
            rows.append(("TOTAL", str(sum(counts.values()))))
            out.append(f"\nlayer {layer}\n" + render_table(rows))
        for name, stats in (("chars", self.char_lengths), ("tokens", self.token_lengths)):
            if not stats.defined:
                out.append(f"\nlength ({name}): undefined (no documents)")
                continue
            out.append(
                f"\nlength ({name}): min {stats.min}  max {stats.max}  mean {stats.mean:.2f}  median {stats.median}"
            )
            rows = [("bin", "documents")] + [
                (f"[{k * stats.bin_width}, {(k + 1) * stats.bin_width})", str(n)) for k, n in enumerate(stats.histogram)
            ]
            out.append(render_table(rows))
        return "\n".join(out)


def dataset_stats(docs: Iterable[Document], layers: Optional[Sequence[str]] = None) -> StatsReport:
    docs = list(docs)
    if layers is None:
        layers = docs[0].schema.layer_names if docs else []
    label_counts = {layer: Counter() for layer in layers}
    for doc in docs:
        for layer in layers:
            label_counts[layer].update(a.label for a in doc[layer].gold)
    return StatsReport(
        len(docs),
        {layer: dict(c) for layer, c in label_counts.items()},
        length_stats([len(d.text) for d in docs], CHAR_BIN_WIDTH),
        length_stats([len(tokenize(d.text)) for d in docs], TOKEN_BIN_WIDTH),
    )
