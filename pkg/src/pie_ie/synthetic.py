"""Seeded generators for test and demo corpora.

* :func:`random_document`: arbitrary documents under the entities/relations
  schema (random spans, relations over gold and predicted spans, scores,
  metadata), for serialization and metric checks.
* :func:`ner_corpus` / :func:`re_corpus`: template sentences over closed
  lexicons, where entity labels and relation labels are fully determined by
  the lexicon and the sentence pattern.
"""

from __future__ import annotations

import random
from typing import List, Optional, Sequence, Tuple

from pie_ie.document import ENTITY_RELATION_SCHEMA, BinaryRelation, Document, LabeledSpan

PERSONS = [
    "Alice", "Bob", "Carol Smith", "David", "Eve Johnson", "Frank", "Grace Lee", "Heidi", "Ivan Petrov",
    "Judy", "Mallory", "Niaj Kumar", "Olivia", "Peggy Brown", "Rupert", "Sybil", "Trent Walker", "Victor",
    "Walter White", "Zoe",
]
COMPANIES = [
    "Acme", "Globex Corporation", "Initech", "Umbrella Corp", "Hooli", "Stark Industries", "Wayne Enterprises",
    "Cyberdyne", "Soylent", "Vandelay Industries", "Massive Dynamic", "Tyrell", "Wonka", "Gringotts",
]
CITIES = [
    "Paris", "Berlin", "New York", "Tokyo", "Lagos", "Sao Paulo", "Cairo", "Mumbai", "Sydney", "Toronto",
    "Los Angeles", "Madrid", "Oslo", "Lima", "Hanoi", "Cape Town",
]
LEXICONS = {"PER": PERSONS, "ORG": COMPANIES, "LOC": CITIES}

NER_TEMPLATES = [
    "{PER} visited {LOC} last week .",
    "{PER} joined {ORG} in {LOC} .",
    "Shares of {ORG} rose after the meeting in {LOC} .",
    "Yesterday {PER} met {PER} .",
    "The office of {ORG} is located in {LOC} .",
    "According to {PER} , {ORG} will expand .",
    "It rained all day .",
    "{LOC} hosted a conference on trade .",
]

# (template, relations as (head slot, tail slot, label)); slots are indices of
# the placeholders in order of appearance
RE_TEMPLATES: List[Tuple[str, List[Tuple[int, int, str]]]] = [
    ("{PER} works for {ORG} .", [(0, 1, "works_for")]),
    ("{PER} was born in {LOC} .", [(0, 1, "born_in")]),
    ("{PER} works for {ORG} in {LOC} .", [(0, 1, "works_for")]),
    ("{PER} visited {LOC} with {PER} .", []),
    ("{PER} met {PER} at {ORG} .", []),
    ("{ORG} opened an office in {LOC} .", []),
    ("{PER} , who was born in {LOC} , likes {ORG} .", [(0, 1, "born_in")]),
]


def _fill(rng: random.Random, template: str):
    """Render one template; returns text and [(start, end, label)] slot spans."""
    text, spans = "", []
    rest = template
    while "{" in rest:
        pre, _, tail = rest.partition("{")
        label, _, rest = tail.partition("}")
        text += pre
        value = rng.choice(LEXICONS[label])
        spans.append((len(text), len(text) + len(value), label))
        text += value
    return text + rest, spans


def ner_corpus(n_docs: int, seed: int = 0, sentences: Tuple[int, int] = (1, 4)) -> List[Document]:
    rng = random.Random(seed)
    docs = []
    for k in range(n_docs):
        parts, spans, offset = [], [], 0
        for _ in range(rng.randint(*sentences)):
            text, slots = _fill(rng, rng.choice(NER_TEMPLATES))
            spans += [(s + offset, e + offset, label) for s, e, label in slots]
            parts.append(text)
            offset += len(text) + 1
        doc = Document(f"ner-{seed}-{k:04d}", " ".join(parts), ENTITY_RELATION_SCHEMA)
        seen = set()
        for s, e, label in spans:
            if (s, e, label) not in seen:
                seen.add((s, e, label))
                doc.add("entities", LabeledSpan(s, e, label))
        docs.append(doc.seal())
    return docs


def re_corpus(n_docs: int, seed: int = 0, sentences: Tuple[int, int] = (1, 3)) -> List[Document]:
    rng = random.Random(seed)
    docs = []
    for k in range(n_docs):
        parts, spans, relations, offset = [], [], [], 0
        for _ in range(rng.randint(*sentences)):
            template, rels = rng.choice(RE_TEMPLATES)
            text, slots = _fill(rng, template)
            base = len(spans)
            spans += [(s + offset, e + offset, label) for s, e, label in slots]
            relations += [(base + h, base + t, label) for h, t, label in rels]
            parts.append(text)
            offset += len(text) + 1
        doc = Document(f"re-{seed}-{k:04d}", " ".join(parts), ENTITY_RELATION_SCHEMA)
        objects = [LabeledSpan(s, e, label) for s, e, label in spans]
        for span in objects:
            doc.add("entities", span)
        for h, t, label in relations:
            doc.add("relations", BinaryRelation(objects[h], objects[t], label))
        docs.append(doc.seal())
    return docs


# ---------------------------------------------------------------------------
# arbitrary documents

_ALPHABET = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,'-éüß漢字"
_LABELS = ["PER", "ORG", "LOC", "MISC"]
_RELATION_LABELS = ["works_for", "born_in", "located_in"]


def random_text(rng: random.Random, max_words: int = 30) -> str:
    words = ["".join(rng.choice(_ALPHABET) for _ in range(rng.randint(1, 8))) for _ in range(rng.randint(0, max_words))]
    seps = [rng.choice([" ", " ", " ", "  ", "\n"]) for _ in words]
    return "".join(w + s for w, s in zip(words, seps)).rstrip()


def _random_meta(rng: random.Random):
    return {f"k{rng.randint(0, 9)}": rng.choice(["", "x", "ü\"q", "a b", "\\n"]) for _ in range(rng.randint(0, 2))}


def _random_score(rng: random.Random) -> Optional[float]:
    return None if rng.random() < 0.4 else rng.choice([rng.random(), rng.uniform(-50, 50), 1.0, 0.0])


def random_document(rng: random.Random, doc_id: str, with_scores: bool = True, predictions: bool = True,
                    max_spans: int = 12, max_relations: int = 10) -> Document:
    text = random_text(rng)
    doc = Document(doc_id, text, ENTITY_RELATION_SCHEMA, _random_meta(rng) if with_scores else {})
    gold_spans: List[LabeledSpan] = []
    pred_spans: List[LabeledSpan] = []
    n = len(text)
    if n > 0:
        for prediction, pool in ((False, gold_spans), (True, pred_spans)):
            if prediction and not predictions:
                continue
            for _ in range(rng.randint(0, max_spans)):
                start = rng.randrange(n)
                end = rng.randint(start + 1, min(n, start + 15))
                span = LabeledSpan(start, end, rng.choice(_LABELS),
                                   _random_score(rng) if with_scores else None,
                                   _random_meta(rng) if with_scores else {})
                if span not in set(pool):
                    doc.add("entities", span, prediction=prediction)
                    pool.append(span)
    for prediction in (False, True):
        if prediction and not predictions:
            continue
        candidates = gold_spans + (pred_spans if prediction else [])
        if len(candidates) < 2:
            continue
        seen = set()
        for _ in range(rng.randint(0, max_relations)):
            head, tail = rng.sample(candidates, 2)
            rel = BinaryRelation(head, tail, rng.choice(_RELATION_LABELS),
                                 _random_score(rng) if with_scores else None,
                                 _random_meta(rng) if with_scores else {})
            if rel not in seen:
                seen.add(rel)
                doc.add("relations", rel, prediction=prediction)
    return doc.seal()


def random_corpus(n_docs: int, seed: int = 0, **kwargs) -> List[Document]:
    rng = random.Random(seed)
    return [random_document(rng, f"doc-{k:05d}", **kwargs) for k in range(n_docs)]


def split(docs: Sequence[Document], train_fraction: float = 0.8):
    cut = int(len(docs) * train_fraction)
    return list(docs[:cut]), list(docs[cut:])
