"""Binary relation classification with entity marker pseudo-tokens.

Every ordered pair of gold entities within ``max_pair_distance`` tokens is a
candidate.  Each candidate becomes one token sequence: a context window
centered on the two arguments, with ``<H>``/``</H>`` and ``<T>``/``</T>``
markers (typed as ``<H:PER>`` etc. when ``typed_markers``) wrapped around the
argument tokens.  Pairs without a gold relation get ``negative_label`` as
their training target.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from pie_ie.document import BINARY_RELATION, LABELED_SPAN, BinaryRelation, Document
from pie_ie.errors import AlignmentError, ConfigError, MultiLabelError, UnknownLabelError
from pie_ie.taskmodules.base import Skipped
from pie_ie.tokenization import char_span_to_token_span, covering_token_span, tokenize

Pair = Tuple[int, int]


@dataclass
class ReTaskConfig:
    entity_layer: str = "entities"
    relation_layer: str = "relations"
    negative_label: str = "no_relation"
    max_tokens: int = 128
    max_pair_distance: Optional[int] = 30  # None = unlimited
    typed_markers: bool = True
    # fraction of negative candidates kept for training; 1.0 keeps all
    negative_sample_rate: float = 1.0

    def __post_init__(self):
        if self.max_tokens < 8:
            raise ConfigError("max_tokens must be at least 8")
        if self.max_pair_distance is not None and self.max_pair_distance < 0:
            raise ConfigError("max_pair_distance must be non-negative")
        if not 0.0 <= self.negative_sample_rate <= 1.0:
            raise ConfigError("negative_sample_rate must lie in [0, 1]")


@dataclass(frozen=True)
class ReEncoding:
    document_id: str
    head_id: int
    tail_id: int
    marked_tokens: Tuple[str, ...]
    context: Tuple[int, int]  # token range of the document shown to the model
    target: Optional[str] = None


def is_marker(token: str) -> bool:
    # real tokens are never multi-character punctuation runs
    return len(token) > 2 and token[0] == "<" and token[-1] == ">"


def token_distance(a: Tuple[int, int], b: Tuple[int, int]) -> int:
    """Number of tokens strictly between two token ranges (0 if they touch or overlap)."""
    return max(0, max(a[0], b[0]) - min(a[1], b[1]))


@dataclass
class ReTaskModule:
    config: ReTaskConfig = field(default_factory=ReTaskConfig)
    label_vocabulary: List[str] = field(default_factory=list)

    def markers(self, role: str, label: str) -> Tuple[str, str]:
        if self.config.typed_markers:
            return f"<{role}:{label}>", f"</{role}:{label}>"
        return f"<{role}>", f"</{role}>"

    def _entities(self, doc: Document):
        layer = doc[self.config.entity_layer]
        if layer.spec.kind != LABELED_SPAN:
            raise ConfigError(f"layer {self.config.entity_layer!r} is not a labeled_span layer")
        entries = list(zip(layer.gold_ids, layer.gold))
        entries.sort(key=lambda e: (e[1].start, e[1].end, e[0]))
        return entries

    # -- candidates

    def generate_candidates(self, doc: Document, with_gold: bool = False) -> Tuple[List[Pair], List[Skipped]]:
        tokens = tokenize(doc.text)
        entities = self._entities(doc)
        ranges = {ann_id: covering_token_span(tokens, span.start, span.end) for ann_id, span in entities}
        cap = self.config.max_pair_distance
        pairs, skipped, dropped = [], [], set()
        for head_id, head in entities:
            for tail_id, tail in entities:
                if head_id == tail_id:
                    continue
                dist = token_distance(ranges[head_id], ranges[tail_id])
                if cap is not None and dist > cap:
                    dropped.add((head_id, tail_id))
                    skipped.append(
                        Skipped(doc.id, "distance_exceeds_cap", None, f"pair ({head_id}, {tail_id}) is {dist} tokens apart")
                    )
                else:
                    pairs.append((head_id, tail_id))
        if with_gold:
            for rel in doc[self.config.relation_layer].gold:
                if (doc.id_of(rel.head), doc.id_of(rel.tail)) in dropped:
                    skipped.append(Skipped(doc.id, "gold_pair_exceeds_cap", rel))
        return pairs, skipped

    # -- encoding

    def encode_inputs(self, doc: Document, pairs: Sequence[Pair]) -> Tuple[List[ReEncoding], List[Skipped]]:
        tokens = tokenize(doc.text)
        n = len(tokens)
        budget_total = self.config.max_tokens
        encodings, skipped = [], []
        for head_id, tail_id in pairs:
            head, tail = doc.get(head_id), doc.get(tail_id)
            try:
                h = char_span_to_token_span(tokens, head.start, head.end)
                t = char_span_to_token_span(tokens, tail.start, tail.end)
            except AlignmentError as exc:
                skipped.append(Skipped(doc.id, "alignment_error", None, f"pair ({head_id}, {tail_id}): {exc}"))
                continue
            if h[0] < t[1] and t[0] < h[1]:
                skipped.append(Skipped(doc.id, "overlapping_arguments", None, f"pair ({head_id}, {tail_id})"))
                continue
            lo, hi = min(h[0], t[0]), max(h[1], t[1])
            if hi - lo > budget_total:
                skipped.append(
                    Skipped(doc.id, "distance_exceeds_budget", None, f"pair ({head_id}, {tail_id}) spans {hi - lo} tokens")
                )
                continue
            # symmetric extension, odd remainder to the left; budget a side cannot
            # use (document edge) goes to the other side
            spare = budget_total - (hi - lo)
            start, end = lo - (spare + 1) // 2, hi + spare // 2
            if start < 0:
                end, start = end - start, 0
            if end > n:
                start, end = max(0, start - (end - n)), n

            h_open, h_close = self.markers("H", head.label)
            t_open, t_close = self.markers("T", tail.label)
            marked = []
            for k in range(start, end):
                if k == h[0]:
                    marked.append(h_open)
                if k == t[0]:
                    marked.append(t_open)
                marked.append(tokens[k].text)
                if k == h[1] - 1:
                    marked.append(h_close)
                if k == t[1] - 1:
                    marked.append(t_close)
            encodings.append(ReEncoding(doc.id, head_id, tail_id, tuple(marked), (start, end)))
        return encodings, skipped

    def encode_targets(self, encoding: ReEncoding, doc: Document) -> ReEncoding:
        labels = [
            rel.label
            for rel in doc[self.config.relation_layer].gold
            if doc.id_of(rel.head) == encoding.head_id and doc.id_of(rel.tail) == encoding.tail_id
        ]
        if len(labels) > 1:
            raise MultiLabelError(
                f"document {doc.id!r}: pair ({encoding.head_id}, {encoding.tail_id}) has labels {sorted(labels)}"
            )
        if labels and labels[0] == self.config.negative_label:
            raise ConfigError(f"gold relation label equals the negative label {self.config.negative_label!r}")
        return replace(encoding, target=labels[0] if labels else self.config.negative_label)

    def encode(self, doc: Document, with_targets: bool) -> Tuple[List[ReEncoding], List[Skipped]]:
        pairs, skipped = self.generate_candidates(doc, with_gold=with_targets)
        encodings, more = self.encode_inputs(doc, pairs)
        skipped += more
        if with_targets:
            encodings = [self.encode_targets(enc, doc) for enc in encodings]
            covered = {(e.head_id, e.tail_id) for e in encodings}
            for rel in doc[self.config.relation_layer].gold:
                pair = (doc.id_of(rel.head), doc.id_of(rel.tail))
                if pair not in covered and not any(s.annotation is rel for s in skipped):
                    skipped.append(Skipped(doc.id, "gold_pair_not_encoded", rel))
        return encodings, skipped

    # -- decoding

    def decode(self, doc: Document, encodings: Sequence[ReEncoding], predictions: Sequence[Tuple[str, Optional[float]]]) -> Document:
        if len(encodings) != len(predictions):
            raise ValueError("need exactly one prediction per encoding")
        layer = doc[self.config.relation_layer]
        if layer.spec.kind != BINARY_RELATION:
            raise ConfigError(f"layer {self.config.relation_layer!r} is not a binary_relation layer")
        known = set(self.label_vocabulary)
        out = doc.copy()
        for enc, (label, score) in zip(encodings, predictions):
            if enc.document_id != doc.id:
                raise ValueError(f"encoding of {enc.document_id!r} passed for document {doc.id!r}")
            if known and label not in known:
                raise UnknownLabelError(f"label {label!r} is not in the trained vocabulary")
            if label == self.config.negative_label:
                continue
            rel = BinaryRelation(out.get(enc.head_id), out.get(enc.tail_id), label, score)
            out.add(self.config.relation_layer, rel, prediction=True)
        return out.seal()

    # -- persistence

    def config_record(self) -> Dict:
        return {
            "task": "re",
            "entity_layer": self.config.entity_layer,
            "relation_layer": self.config.relation_layer,
            "negative_label": self.config.negative_label,
            "max_tokens": self.config.max_tokens,
            "max_pair_distance": self.config.max_pair_distance,
            "typed_markers": self.config.typed_markers,
            "label_vocabulary": list(self.label_vocabulary),
        }

    @classmethod
    def from_config_record(cls, record: Dict) -> "ReTaskModule":
        if record.get("task") != "re":
            raise ConfigError(f"not a re task config: {record.get('task')!r}")
        config = ReTaskConfig(
            entity_layer=record["entity_layer"],
            relation_layer=record["relation_layer"],
            negative_label=record["negative_label"],
            max_tokens=record["max_tokens"],
            max_pair_distance=record["max_pair_distance"],
            typed_markers=record["typed_markers"],
        )
        return cls(config, list(record.get("label_vocabulary", [])))

    @property
    def target_layers(self) -> List[str]:
        return [self.config.relation_layer]
