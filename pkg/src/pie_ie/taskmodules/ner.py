"""Span detection as BIO token classification over sliding windows.

Long documents are cut into windows of ``max_tokens`` tokens advancing by
``stride``.  Each token is *owned* by exactly one window (the one whose
center is nearest, ties to the earlier window); at decode time only spans
lying inside a window's owned range are kept, so overlapping windows never
produce duplicate predictions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from pie_ie.document import LABELED_SPAN, Document, LabeledSpan
from pie_ie.errors import AlignmentError, ConfigError, OverlapError, TagVocabularyError
from pie_ie.taskmodules.base import Skipped
from pie_ie.tokenization import Token, char_span_to_token_span, tokenize

OUTSIDE = "O"


# ---------------------------------------------------------------------------
# BIO helpers


def parse_tag(tag: str) -> Tuple[str, Optional[str]]:
    if tag == OUTSIDE:
        return OUTSIDE, None
    if isinstance(tag, str) and len(tag) > 2 and tag[1] == "-" and tag[0] in "BI":
        return tag[0], tag[2:]
    raise TagVocabularyError(f"malformed tag {tag!r}")


def bio_tags_to_spans(tags: Sequence[str]) -> List[Tuple[int, int, str]]:
    """Decode tags into ``(start, end, label)`` token ranges, end exclusive.

    Lenient: an ``I-X`` that does not continue an ``X`` span opens a new one,
    so every tag sequence decodes (IOB1 input included).

    >>> bio_tags_to_spans(["I-PER", "I-PER", "B-PER", "I-ORG", "O"])
    [(0, 2, 'PER'), (2, 3, 'PER'), (3, 4, 'ORG')]
    """
    spans = []
    start, label = None, None
    for i, tag in enumerate(tags):
        prefix, tag_label = parse_tag(tag)
        if prefix == "I" and label == tag_label:
            continue
        if label is not None:
            spans.append((start, i, label))
        if prefix == OUTSIDE:
            start, label = None, None
        else:
            start, label = i, tag_label
    if label is not None:
        spans.append((start, len(tags), label))
    return spans


def spans_to_bio_tags(length: int, spans: Sequence[Tuple[int, int, str]]) -> List[str]:
    tags = [OUTSIDE] * length
    for start, end, label in spans:
        if any(tags[k] != OUTSIDE for k in range(start, end)):
            raise OverlapError(f"span ({start}, {end}, {label}) overlaps another span")
        tags[start] = f"B-{label}"
        for k in range(start + 1, end):
            tags[k] = f"I-{label}"
    return tags


# ---------------------------------------------------------------------------
# windows


def sliding_windows(token_count: int, max_tokens: int, stride: int) -> List[Tuple[int, int]]:
    windows = []
    start = 0
    while start < token_count:
        end = min(start + max_tokens, token_count)
        windows.append((start, end))
        if end == token_count:
            break
        start += stride
    return windows


def ownership_ranges(windows: Sequence[Tuple[int, int]]) -> List[Tuple[int, int]]:
    """Owned token range of each window under the nearest-center rule."""
    if not windows:
        return []
    token_count = windows[-1][1]
    owner = []
    w = 0
    for t in range(token_count):
        best, best_dist = None, None
        # only windows containing t compete; they form a contiguous index run
        while windows[w][1] <= t:
            w += 1
        k = w
        while k < len(windows) and windows[k][0] <= t:
            s, e = windows[k]
            dist = abs(2 * t - (s + e - 1))
            if best is None or dist < best_dist:
                best, best_dist = k, dist
            k += 1
        owner.append(best)
    bounds: Dict[int, List[int]] = {}
    for t, k in enumerate(owner):
        bounds.setdefault(k, [t, t])[1] = t + 1
    ranges = []
    previous_end = 0
    for k in range(len(windows)):
        start, end = bounds.get(k, (previous_end, previous_end))
        ranges.append((start, end))
        previous_end = end
    return ranges


# ---------------------------------------------------------------------------
# task module


@dataclass
class NerTaskConfig:
    layer: str = "entities"
    max_tokens: int = 128
    stride: Optional[int] = None

    def __post_init__(self):
        if self.max_tokens < 2:
            raise ConfigError("max_tokens must be at least 2")
        if self.stride is None:
            self.stride = max(1, self.max_tokens // 2)
        if not 1 <= self.stride <= self.max_tokens:
            raise ConfigError("stride must lie in [1, max_tokens]")


@dataclass(frozen=True)
class NerEncoding:
    document_id: str
    window: Tuple[int, int]
    tokens: Tuple[Token, ...]
    owned: Tuple[int, int]  # absolute token indices, inside ``window``
    target: Optional[Tuple[str, ...]] = None

    @property
    def token_texts(self) -> List[str]:
        return [t.text for t in self.tokens]


@dataclass
class NerTaskModule:
    config: NerTaskConfig = field(default_factory=NerTaskConfig)
    tag_vocabulary: List[str] = field(default_factory=list)

    # -- encoding

    def _aligned_gold(self, doc: Document, tokens: Sequence[Token]):
        aligned, failed = [], []
        for span in doc[self.config.layer].gold:
            try:
                aligned.append((span, char_span_to_token_span(tokens, span.start, span.end)))
            except AlignmentError as exc:
                failed.append((span, str(exc)))
        return aligned, failed

    def encode_inputs(self, doc: Document) -> Tuple[List[NerEncoding], List[Skipped]]:
        layer = doc[self.config.layer]
        if layer.spec.kind != LABELED_SPAN:
            raise ConfigError(f"layer {self.config.layer!r} is not a labeled_span layer")
        tokens = tokenize(doc.text)
        windows = sliding_windows(len(tokens), self.config.max_tokens, self.config.stride)
        owned = ownership_ranges(windows)
        encodings = [
            NerEncoding(doc.id, (s, e), tuple(tokens[s:e]), o) for (s, e), o in zip(windows, owned)
        ]

        # gold spans only feed the skip report, never the encodings
        skipped = []
        aligned, failed = self._aligned_gold(doc, tokens)
        for span, detail in failed:
            skipped.append(Skipped(doc.id, "alignment_error", span, detail))
        for span, (i, j) in aligned:
            if not any(o_start <= i and j <= o_end for o_start, o_end in owned):
                skipped.append(Skipped(doc.id, "crosses_window_boundary", span, f"tokens [{i}, {j})"))
        return encodings, skipped

    def encode_targets(self, encoding: NerEncoding, doc: Document) -> NerEncoding:
        tokens = tokenize(doc.text)
        aligned, _ = self._aligned_gold(doc, tokens)
        ordered = sorted((i, j, span.label) for span, (i, j) in aligned)
        for (i1, j1, l1), (i2, j2, l2) in zip(ordered, ordered[1:]):
            if i2 < j1:
                raise OverlapError(
                    f"document {doc.id!r}: gold spans over tokens [{i1}, {j1}) {l1} and [{i2}, {j2}) {l2} overlap"
                )
        s, e = encoding.window
        inside = [(i - s, j - s, label) for i, j, label in ordered if s <= i and j <= e]
        return replace(encoding, target=tuple(spans_to_bio_tags(e - s, inside)))

    def encode(self, doc: Document, with_targets: bool) -> Tuple[List[NerEncoding], List[Skipped]]:
        encodings, skipped = self.encode_inputs(doc)
        if with_targets:
            encodings = [self.encode_targets(enc, doc) for enc in encodings]
        return encodings, skipped

    # -- decoding

    def decode(self, doc: Document, encodings: Sequence[NerEncoding], tag_sequences: Sequence[Sequence[str]]) -> Document:
        if len(encodings) != len(tag_sequences):
            raise ValueError("need exactly one tag sequence per encoding")
        out = doc.copy()
        for enc, tags in zip(encodings, tag_sequences):
            if enc.document_id != doc.id:
                raise ValueError(f"encoding of {enc.document_id!r} passed for document {doc.id!r}")
            if len(tags) != len(enc.tokens):
                raise ValueError("tag sequence length differs from the encoding's token count")
            offset = enc.window[0]
            for i, j, label in bio_tags_to_spans(tags):
                a, b = i + offset, j + offset
                if enc.owned[0] <= a and b <= enc.owned[1]:
                    out.add(self.config.layer, LabeledSpan(enc.tokens[i].start, enc.tokens[j - 1].end, label), prediction=True)
        return out.seal()

    # -- persistence

    def config_record(self) -> Dict:
        return {
            "task": "ner",
            "layer": self.config.layer,
            "max_tokens": self.config.max_tokens,
            "stride": self.config.stride,
            "tag_vocabulary": list(self.tag_vocabulary),
        }

    @classmethod
    def from_config_record(cls, record: Dict) -> "NerTaskModule":
        if record.get("task") != "ner":
            raise ConfigError(f"not a ner task config: {record.get('task')!r}")
        config = NerTaskConfig(record["layer"], record["max_tokens"], record["stride"])
        return cls(config, list(record.get("tag_vocabulary", [])))

    @property
    def target_layers(self) -> List[str]:
        return [self.config.layer]
