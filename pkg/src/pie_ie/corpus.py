"""Corpus readers and writers: CoNLL2003 columns, BRAT standoff, JSONL.

Readers never drop input silently.  Anything they cannot turn into an
annotation (or document) becomes a :class:`SkipRecord` in the returned
:class:`IoReport`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, TextIO, Tuple

from pie_ie.document import (
    ENTITY_RELATION_SCHEMA,
    BinaryRelation,
    Document,
    DocumentSchema,
    LabeledSpan,
    deserialize_document,
    deserialize_schema,
    serialize_document,
    serialize_schema,
)
from pie_ie.errors import AnnotationError, ParseError, TagVocabularyError
from pie_ie.taskmodules.ner import bio_tags_to_spans, parse_tag


@dataclass(frozen=True)
class SkipRecord:
    location: str  # "<file>:<line>" or "<file>:<annotation id>"
    reason: str


@dataclass
class IoReport:
    documents_read: int = 0
    annotations_read: int = 0
    skipped: List[SkipRecord] = field(default_factory=list)

    def skip(self, location: str, reason: str):
        self.skipped.append(SkipRecord(location, reason))

    def __add__(self, other: "IoReport") -> "IoReport":
        return IoReport(
            self.documents_read + other.documents_read,
            self.annotations_read + other.annotations_read,
            self.skipped + other.skipped,
        )

    def render(self) -> str:
        lines = [f"documents read: {self.documents_read}", f"annotations read: {self.annotations_read}",
                 f"skipped: {len(self.skipped)}"]
        lines += [f"  {s.location}: {s.reason}" for s in self.skipped]
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# CoNLL2003


def read_conll2003(
    source: TextIO, name: str = "conll2003", schema: DocumentSchema = ENTITY_RELATION_SCHEMA
) -> Tuple[List[Document], IoReport]:
    """Read ``TOKEN POS CHUNK NER`` lines into documents.

    Tokens are joined with single spaces.  Sentence ends (exclusive token
    indices) go into the ``sentence_ends`` metadata key.
    """
    report = IoReport()
    docs: List[Document] = []
    segments: List[Tuple[int, List[List[Tuple[str, str, int]]]]] = []
    current: Optional[List[List[Tuple[str, str, int]]]] = None
    start_line = 1

    def flush():
        if current is not None:
            segments.append((start_line, [s for s in current if s]))

    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        cols = line.split()
        if cols and cols[0] == "-DOCSTART-":
            flush()
            current, start_line = [[]], lineno
            continue
        if current is None:
            current, start_line = [[]], lineno
        if not cols:
            current.append([])
            continue
        if len(cols) != 4:
            report.skip(f"{name}:{lineno}", f"expected 4 columns, found {len(cols)}")
            continue
        current[-1].append((cols[0], cols[3], lineno))
    flush()

    for index, (lineno, sentences) in enumerate(segments):
        if not sentences:
            report.skip(f"{name}:{lineno}", "document without tokens")
            continue
        doc = _conll_document(f"{name}-{len(docs)}", sentences, name, schema, report)
        docs.append(doc)
        report.documents_read += 1
    return docs, report


def _conll_document(doc_id, sentences, name, schema, report) -> Document:
    pieces, ends, spans = [], [], []
    offset = 0
    token_index = 0
    for sentence in sentences:
        starts = []
        for token, _, _ in sentence:
            if pieces:
                offset += 1
            starts.append(offset)
            pieces.append(token)
            offset += len(token)
        tags = []
        for token, tag, lineno in sentence:
            try:
                parse_tag(tag)
                tags.append(tag)
            except TagVocabularyError:
                report.skip(f"{name}:{lineno}", f"malformed NER tag {tag!r} read as O")
                tags.append("O")
        for i, j, label in bio_tags_to_spans(tags):
            spans.append(LabeledSpan(starts[i], starts[j - 1] + len(sentence[j - 1][0]), label))
        token_index += len(sentence)
        ends.append(str(token_index))
    doc = Document(doc_id, " ".join(pieces), schema, {"sentence_ends": " ".join(ends)})
    for span in spans:
        doc.add("entities", span)
        report.annotations_read += 1
    return doc.seal()


# ---------------------------------------------------------------------------
# BRAT standoff

_SKIPPED_PREFIXES = {"E": "event", "A": "attribute", "M": "attribute", "N": "normalization", "#": "note"}


def read_brat(
    txt: str, ann: str, doc_id: str, schema: DocumentSchema = ENTITY_RELATION_SCHEMA
) -> Tuple[Document, IoReport]:
    """Parse one ``.txt``/``.ann`` pair.  ``T`` lines become entities, ``R`` lines relations."""
    report = IoReport()
    doc = Document(doc_id, txt, schema)
    spans = {}
    relation_lines = []
    for lineno, line in enumerate(ann.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        where = f"{doc_id}.ann:{lineno}"
        prefix = line[0]
        if prefix in _SKIPPED_PREFIXES:
            report.skip(where, f"{_SKIPPED_PREFIXES[prefix]} lines are not supported")
        elif prefix == "T":
            span = _parse_text_bound(line, txt, where, report)
            if span is not None:
                brat_id = line.split("\t", 1)[0]
                if brat_id in spans:
                    report.skip(where, f"duplicate id {brat_id}")
                    continue
                try:
                    doc.add("entities", span)
                except AnnotationError as exc:
                    report.skip(where, str(exc))
                    continue
                spans[brat_id] = span
                report.annotations_read += 1
        elif prefix == "R":
            relation_lines.append((where, line))
        else:
            report.skip(where, "malformed line: unknown annotation type")

    # relations may reference text-bound annotations defined further down
    for where, line in relation_lines:
        parts = line.split("\t")
        fields = parts[1].split() if len(parts) >= 2 else []
        if len(fields) != 3 or not fields[1].startswith("Arg1:") or not fields[2].startswith("Arg2:"):
            report.skip(where, "malformed relation line")
            continue
        head, tail = spans.get(fields[1][5:]), spans.get(fields[2][5:])
        if head is None or tail is None:
            report.skip(where, "relation argument not available")
            continue
        try:
            doc.add("relations", BinaryRelation(head, tail, fields[0]))
        except AnnotationError as exc:
            report.skip(where, str(exc))
            continue
        report.annotations_read += 1
    report.documents_read = 1
    return doc.seal(), report


def _parse_text_bound(line, txt, where, report) -> Optional[LabeledSpan]:
    parts = line.split("\t")
    if len(parts) < 2:
        report.skip(where, "malformed text-bound line")
        return None
    type_and_offsets = parts[1]
    if ";" in type_and_offsets:
        report.skip(where, "discontinuous span")
        return None
    fields = type_and_offsets.split(" ")
    if len(fields) != 3:
        report.skip(where, "malformed text-bound line")
        return None
    label, start, end = fields
    try:
        start, end = int(start), int(end)
    except ValueError:
        report.skip(where, "malformed offsets")
        return None
    if not 0 <= start < end <= len(txt):
        report.skip(where, f"offsets ({start}, {end}) out of bounds")
        return None
    if len(parts) >= 3:
        surface = "\t".join(parts[2:])
        actual = txt[start:end]
        if surface != actual and surface != _flatten(actual):
            report.skip(where, f"offset mismatch: {surface!r} != {actual!r}")
            return None
    return LabeledSpan(start, end, label)


def _flatten(text: str) -> str:
    return text.replace("\r", " ").replace("\n", " ").replace("\t", " ")


def write_brat(doc: Document, which: str = "gold", entity_layer="entities", relation_layer="relations") -> Tuple[str, str]:
    """Render one document as BRAT ``(txt, ann)``.

    Spans referenced by selected relations are written even when they are not
    in the selected set themselves (so predicted relations over gold
    entities stay readable).
    """
    if which not in ("gold", "predictions"):
        raise ValueError("which must be 'gold' or 'predictions'")
    spans = list(getattr(doc[entity_layer], which))
    relations = list(getattr(doc[relation_layer], which))
    selected = {id(s) for s in spans}
    for rel in relations:
        for arg in (rel.head, rel.tail):
            if id(arg) not in selected:
                selected.add(id(arg))
                spans.append(arg)
    spans.sort(key=doc.id_of)

    lines, brat_ids = [], {}
    for n, span in enumerate(spans, start=1):
        brat_ids[id(span)] = f"T{n}"
        lines.append(f"T{n}\t{span.label} {span.start} {span.end}\t{_flatten(doc.text_of(span))}")
    for n, rel in enumerate(relations, start=1):
        lines.append(f"R{n}\t{rel.label} Arg1:{brat_ids[id(rel.head)]} Arg2:{brat_ids[id(rel.tail)]}")
    return doc.text, "".join(line + "\n" for line in lines)


def read_brat_dir(path, schema: DocumentSchema = ENTITY_RELATION_SCHEMA) -> Tuple[List[Document], IoReport]:
    """Read every ``<stem>.txt`` with its ``<stem>.ann`` (missing ``.ann`` = no annotations)."""
    path = Path(path)
    report = IoReport()
    docs = []
    for txt_path in sorted(path.glob("*.txt")):
        ann_path = txt_path.with_suffix(".ann")
        ann = ann_path.read_text(encoding="utf-8") if ann_path.exists() else ""
        txt = txt_path.read_text(encoding="utf-8")
        doc, part = read_brat(txt, ann, txt_path.stem, schema)
        docs.append(doc)
        report = report + part
    for ann_path in sorted(path.glob("*.ann")):
        if not ann_path.with_suffix(".txt").exists():
            report.skip(str(ann_path.name), "annotation file without text file")
    return docs, report


def write_brat_dir(docs: Iterable[Document], path, which: str = "gold") -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for doc in docs:
        txt, ann = write_brat(doc, which)
        stem = doc.id.replace(os.sep, "_")
        (path / f"{stem}.txt").write_text(txt, encoding="utf-8")
        (path / f"{stem}.ann").write_text(ann, encoding="utf-8")


# ---------------------------------------------------------------------------
# JSONL


def write_jsonl(docs: Iterable[Document], sink: TextIO, schema: Optional[DocumentSchema] = None) -> None:
    docs = list(docs)
    if schema is None:
        schema = docs[0].schema if docs else ENTITY_RELATION_SCHEMA
    sink.write(serialize_schema(schema) + "\n")
    for doc in docs:
        if doc.schema != schema:
            raise ValueError(f"document {doc.id!r} does not use schema {schema.name!r}")
        sink.write(serialize_document(doc) + "\n")


def read_jsonl_corpus(source: TextIO) -> Tuple[DocumentSchema, List[Document]]:
    lines = [line.rstrip("\n") for line in source]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ParseError("missing schema record")
    schema = deserialize_schema(lines[0])
    docs = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            docs.append(deserialize_document(line, schema))
        except ParseError as exc:
            raise type(exc)(f"line {lineno}: {exc}") from exc
    return schema, docs


def read_jsonl(source: TextIO) -> List[Document]:
    return read_jsonl_corpus(source)[1]
