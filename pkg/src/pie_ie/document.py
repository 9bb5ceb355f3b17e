"""Typed documents with interdependent annotation layers.

A :class:`DocumentSchema` declares the layers of a document type and what
each layer references (the ``text`` data field or another layer).  A
:class:`Document` holds one text, one :class:`AnnotationLayer` per schema
layer, and free-form string metadata.  Every layer keeps gold annotations and
model predictions side by side.

Annotations are frozen dataclasses.  ``score`` and ``metadata`` are excluded
from equality and hashing, so structurally equal annotations from different
documents compare equal and can be matched with plain set operations.
Relations hold their argument spans by value, which makes relation equality
recursive without any document context.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import ClassVar, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from pie_ie.errors import (
    CycleError,
    DanglingReferenceError,
    DuplicateAnnotationError,
    DuplicateLayerError,
    ForwardReferenceError,
    KindMismatchError,
    KindTargetMismatchError,
    OffsetOutOfBoundsError,
    ParseError,
    SchemaError,
    SchemaMismatchError,
    SealedDocumentError,
    UnknownLayerError,
    UnknownTargetError,
)

TEXT_FIELD = "text"

LABELED_SPAN = "labeled_span"
BINARY_RELATION = "binary_relation"
DOCUMENT_LABEL = "document_label"
ANNOTATION_KINDS = (LABELED_SPAN, BINARY_RELATION, DOCUMENT_LABEL)


# ---------------------------------------------------------------------------
# schema


@dataclass(frozen=True)
class LayerSpec:
    name: str
    kind: str
    targets: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))


@dataclass(frozen=True)
class DocumentSchema:
    name: str
    layers: Tuple[LayerSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def layer_names(self) -> List[str]:
        return [spec.name for spec in self.layers]

    def layer(self, name: str) -> LayerSpec:
        for spec in self.layers:
            if spec.name == name:
                return spec
        raise UnknownLayerError(f"schema {self.name!r} has no layer {name!r}")

    def to_record(self) -> dict:
        return {
            "kind": "schema",
            "name": self.name,
            "layers": [
                {"name": spec.name, "kind": spec.kind, "targets": list(spec.targets)}
                for spec in self.layers
            ],
        }

    @classmethod
    def from_record(cls, record) -> "DocumentSchema":
        if not isinstance(record, dict) or record.get("kind") != "schema":
            raise ParseError("expected a schema record")
        try:
            name = record["name"]
            layers = [
                LayerSpec(entry["name"], entry["kind"], tuple(entry["targets"]))
                for entry in record["layers"]
            ]
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed schema record: {exc}") from exc
        data_fields = record.get("data_fields", [TEXT_FIELD])
        if list(data_fields) != [TEXT_FIELD]:
            raise SchemaMismatchError(f"unsupported data fields {data_fields!r}")
        schema = cls(name, tuple(layers))
        validate_schema(schema)
        return schema


ENTITY_RELATION_SCHEMA = DocumentSchema(
    "entities_relations",
    (
        LayerSpec("entities", LABELED_SPAN, (TEXT_FIELD,)),
        LayerSpec("relations", BINARY_RELATION, ("entities",)),
    ),
)


def _find_cycle(schema: DocumentSchema) -> Optional[List[str]]:
    edges = {spec.name: [t for t in spec.targets if t != TEXT_FIELD] for spec in schema.layers}
    state: Dict[str, int] = {}  # 1 = on stack, 2 = done
    stack: List[str] = []

    def visit(node):
        state[node] = 1
        stack.append(node)
        for target in edges.get(node, ()):
            if state.get(target) == 1:
                return stack[stack.index(target):]
            if target not in state:
                found = visit(target)
                if found:
                    return found
        stack.pop()
        state[node] = 2
        return None

    for spec in schema.layers:
        if spec.name not in state:
            found = visit(spec.name)
            if found:
                return list(found)
    return None


def validate_schema(schema: DocumentSchema) -> None:
    """Raise a :class:`SchemaError` subclass unless ``schema`` is well formed.

    Checks run in a fixed order: names, duplicates, unknown targets, cycles,
    and finally the kind/target rules.
    """
    seen = set()
    for spec in schema.layers:
        if not isinstance(spec.name, str) or not spec.name or spec.name == TEXT_FIELD:
            raise SchemaError(spec.name, "invalid_name", f"invalid layer name {spec.name!r}")
        if spec.name in seen:
            raise DuplicateLayerError(spec.name)
        seen.add(spec.name)
    for spec in schema.layers:
        for target in spec.targets:
            if target != TEXT_FIELD and target not in seen:
                raise UnknownTargetError(spec.name, target)
    cycle = _find_cycle(schema)
    if cycle:
        raise CycleError(cycle)
    kinds = {spec.name: spec.kind for spec in schema.layers}
    for spec in schema.layers:
        if spec.kind not in ANNOTATION_KINDS:
            raise KindTargetMismatchError(spec.name, "unknown_kind", f"layer {spec.name!r} has unknown kind {spec.kind!r}")
        if spec.kind in (LABELED_SPAN, DOCUMENT_LABEL):
            if spec.targets != (TEXT_FIELD,):
                raise KindTargetMismatchError(
                    spec.name, "kind_target", f"{spec.kind} layer {spec.name!r} must target exactly ({TEXT_FIELD!r},)"
                )
        elif len(spec.targets) != 1 or kinds.get(spec.targets[0]) != LABELED_SPAN:
            raise KindTargetMismatchError(
                spec.name, "kind_target", f"binary_relation layer {spec.name!r} must target exactly one labeled_span layer"
            )


def topological_layer_order(schema: DocumentSchema) -> List[str]:
    """Layer names such that every layer comes after the layers it targets.

    Among layers whose targets are all placed, the earliest declared wins.
    """
    placed: List[str] = []
    done = set()
    remaining = list(schema.layers)
    while remaining:
        for i, spec in enumerate(remaining):
            if all(t == TEXT_FIELD or t in done for t in spec.targets):
                placed.append(spec.name)
                done.add(spec.name)
                del remaining[i]
                break
        else:
            raise CycleError([spec.name for spec in remaining])
    return placed


# ---------------------------------------------------------------------------
# annotations


def _freeze_common(ann):
    if ann.score is not None:
        object.__setattr__(ann, "score", float(ann.score))
    object.__setattr__(ann, "metadata", dict(ann.metadata))


@dataclass(frozen=True)
class LabeledSpan:
    start: int
    end: int
    label: str
    score: Optional[float] = field(default=None, compare=False)
    metadata: Mapping[str, str] = field(default_factory=dict, compare=False)

    kind: ClassVar[str] = LABELED_SPAN

    def __post_init__(self):
        _freeze_common(self)


@dataclass(frozen=True)
class BinaryRelation:
    head: LabeledSpan
    tail: LabeledSpan
    label: str
    score: Optional[float] = field(default=None, compare=False)
    metadata: Mapping[str, str] = field(default_factory=dict, compare=False)

    kind: ClassVar[str] = BINARY_RELATION

    def __post_init__(self):
        _freeze_common(self)


@dataclass(frozen=True)
class DocumentLabel:
    label: str
    score: Optional[float] = field(default=None, compare=False)
    metadata: Mapping[str, str] = field(default_factory=dict, compare=False)

    kind: ClassVar[str] = DOCUMENT_LABEL

    def __post_init__(self):
        _freeze_common(self)


Annotation = Union[LabeledSpan, BinaryRelation, DocumentLabel]


def annotations_equal(a: Annotation, b: Annotation) -> bool:
    return a == b


# ---------------------------------------------------------------------------
# documents


def _check_string_map(value, where):
    if not all(isinstance(k, str) and isinstance(v, str) for k, v in value.items()):
        raise TypeError(f"{where}: metadata must map strings to strings")
    return value


class AnnotationLayer:
    """Gold and predicted annotations of one layer, each in insertion order."""

    def __init__(self, spec: LayerSpec):
        self.spec = spec
        self._gold: Dict[int, Annotation] = {}
        self._predictions: Dict[int, Annotation] = {}
        self._gold_values = set()
        self._prediction_values = set()

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def gold(self) -> Tuple[Annotation, ...]:
        return tuple(self._gold.values())

    @property
    def predictions(self) -> Tuple[Annotation, ...]:
        return tuple(self._predictions.values())

    @property
    def gold_ids(self) -> Tuple[int, ...]:
        return tuple(self._gold)

    @property
    def prediction_ids(self) -> Tuple[int, ...]:
        return tuple(self._predictions)

    def __iter__(self) -> Iterator[Annotation]:
        return iter(self._gold.values())

    def __len__(self) -> int:
        return len(self._gold)

    def __repr__(self):
        return f"AnnotationLayer({self.name!r}, gold={len(self._gold)}, predictions={len(self._predictions)})"


class Document:
    """One text plus the annotation layers declared by ``schema``.

    A document is built by :meth:`add` calls and frozen with :meth:`seal`.
    Operations that change a sealed document (decoding, clearing predictions)
    work on a :meth:`copy` and return a new sealed document.
    """

    def __init__(self, id: str, text: str, schema: DocumentSchema = ENTITY_RELATION_SCHEMA, metadata=None):
        validate_schema(schema)
        self.id = id
        self.text = text
        self.schema = schema
        self.metadata: Dict[str, str] = _check_string_map(dict(metadata or {}), f"document {id!r}")
        self._layers = {spec.name: AnnotationLayer(spec) for spec in schema.layers}
        self._annotations: Dict[int, Annotation] = {}
        self._location: Dict[int, Tuple[str, bool]] = {}
        self._ids_by_object: Dict[int, int] = {}
        self._next_id = 0
        self._sealed = False

    # -- access

    def __getitem__(self, layer: str) -> AnnotationLayer:
        try:
            return self._layers[layer]
        except KeyError:
            raise UnknownLayerError(f"document {self.id!r} has no layer {layer!r}") from None

    def __contains__(self, layer) -> bool:
        return layer in self._layers

    @property
    def layers(self) -> Dict[str, AnnotationLayer]:
        return dict(self._layers)

    @property
    def sealed(self) -> bool:
        return self._sealed

    def get(self, ann_id: int) -> Annotation:
        return self._annotations[ann_id]

    def id_of(self, ann: Annotation) -> int:
        """The id under which this exact annotation object was added."""
        try:
            return self._ids_by_object[id(ann)]
        except KeyError:
            raise DanglingReferenceError(f"annotation {ann!r} is not part of document {self.id!r}") from None

    def location_of(self, ann_id: int) -> Tuple[str, bool]:
        """``(layer name, is_prediction)`` for an annotation id."""
        return self._location[ann_id]

    def text_of(self, span: LabeledSpan) -> str:
        return self.text[span.start:span.end]

    # -- building

    def add(self, layer: str, ann: Annotation, prediction: bool = False) -> int:
        return self._add(layer, ann, prediction)

    def _add(self, layer: str, ann: Annotation, prediction: bool, ann_id: Optional[int] = None) -> int:
        if self._sealed:
            raise SealedDocumentError(f"document {self.id!r} is sealed")
        target_layer = self[layer]
        spec = target_layer.spec
        if getattr(ann, "kind", None) != spec.kind:
            raise KindMismatchError(f"layer {layer!r} holds {spec.kind}, got {type(ann).__name__}")
        if id(ann) in self._ids_by_object:
            raise DuplicateAnnotationError(f"annotation object {ann!r} is already attached to this document")
        if not isinstance(ann.label, str):
            raise KindMismatchError(f"label must be a string, got {ann.label!r}")
        _check_string_map(ann.metadata, f"annotation {ann!r}")
        if spec.kind == LABELED_SPAN:
            if (
                isinstance(ann.start, bool)
                or isinstance(ann.end, bool)
                or not isinstance(ann.start, int)
                or not isinstance(ann.end, int)
                or not 0 <= ann.start < ann.end <= len(self.text)
            ):
                raise OffsetOutOfBoundsError(
                    f"span ({ann.start!r}, {ann.end!r}) invalid for text of length {len(self.text)}"
                )
        elif spec.kind == BINARY_RELATION:
            head_id = self._resolve_argument(ann.head, spec, prediction)
            tail_id = self._resolve_argument(ann.tail, spec, prediction)
            if head_id == tail_id:
                raise DanglingReferenceError("relation head and tail are the same annotation")
        values = target_layer._prediction_values if prediction else target_layer._gold_values
        if ann in values:
            which = "predictions" if prediction else "gold"
            raise DuplicateAnnotationError(f"{ann!r} already present in {layer}.{which}")
        if ann_id is None:
            ann_id = self._next_id
        elif ann_id in self._annotations:
            raise ParseError(f"duplicate annotation id {ann_id}")
        self._next_id = max(self._next_id, ann_id + 1)
        values.add(ann)
        (target_layer._predictions if prediction else target_layer._gold)[ann_id] = ann
        self._annotations[ann_id] = ann
        self._location[ann_id] = (layer, prediction)
        self._ids_by_object[id(ann)] = ann_id
        return ann_id

    def _resolve_argument(self, arg, spec: LayerSpec, prediction: bool) -> int:
        ann_id = self._ids_by_object.get(id(arg))
        if ann_id is None:
            raise DanglingReferenceError(f"relation argument {arg!r} is not an annotation of this document")
        arg_layer, arg_is_prediction = self._location[ann_id]
        if arg_layer != spec.targets[0]:
            raise DanglingReferenceError(
                f"relation argument {arg!r} lives in layer {arg_layer!r}, expected {spec.targets[0]!r}"
            )
        if arg_is_prediction and not prediction:
            raise DanglingReferenceError("gold relations may only reference gold annotations")
        return ann_id

    def seal(self) -> "Document":
        self._sealed = True
        return self

    def copy(self, exclude_ids: Iterable[int] = (), renumber: bool = False) -> "Document":
        """Unsealed copy sharing the (immutable) annotation objects.

        Annotations in ``exclude_ids`` are dropped, together with every
        annotation that references a dropped one.  With ``renumber`` the
        surviving annotations get fresh dense ids in layer order.
        """
        excluded = set(exclude_ids)
        new = Document(self.id, self.text, self.schema, self.metadata)
        for name in topological_layer_order(self.schema):
            layer = self._layers[name]
            for prediction, entries in ((False, layer._gold), (True, layer._predictions)):
                for ann_id, ann in entries.items():
                    if ann_id in excluded:
                        continue
                    if ann.kind == BINARY_RELATION and (
                        self.id_of(ann.head) in excluded or self.id_of(ann.tail) in excluded
                    ):
                        excluded.add(ann_id)
                        continue
                    new._add(name, ann, prediction, ann_id=None if renumber else ann_id)
        return new

    def __repr__(self):
        return f"Document({self.id!r}, layers={list(self._layers.values())!r})"


def clear_predictions(doc: Document, layers: Optional[Sequence[str]] = None) -> Document:
    names = list(doc.schema.layer_names if layers is None else layers)
    to_drop = []
    for name in names:
        to_drop.extend(doc[name].prediction_ids)
    return doc.copy(exclude_ids=to_drop).seal()


# ---------------------------------------------------------------------------
# serialization


def _dumps(record) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def _sorted_meta(meta: Mapping[str, str]) -> dict:
    return {key: meta[key] for key in sorted(meta)}


def _annotation_record(doc: Document, ann_id: int, ann: Annotation) -> dict:
    record: dict = {"_id": ann_id}
    if ann.kind == LABELED_SPAN:
        record["start"] = ann.start
        record["end"] = ann.end
    elif ann.kind == BINARY_RELATION:
        record["head"] = doc.id_of(ann.head)
        record["tail"] = doc.id_of(ann.tail)
    record["label"] = ann.label
    record["score"] = ann.score
    record["metadata"] = _sorted_meta(ann.metadata)
    return record


def document_to_record(doc: Document) -> dict:
    annotations = {}
    for name in topological_layer_order(doc.schema):
        layer = doc[name]
        annotations[name] = {
            "gold": [_annotation_record(doc, i, a) for i, a in layer._gold.items()],
            "predictions": [_annotation_record(doc, i, a) for i, a in layer._predictions.items()],
        }
    return {
        "kind": "document",
        "id": doc.id,
        "data": {TEXT_FIELD: doc.text},
        "annotations": annotations,
        "metadata": _sorted_meta(doc.metadata),
    }


def serialize_document(doc: Document) -> str:
    """One canonical JSON line (no trailing newline)."""
    return _dumps(document_to_record(doc))


def serialize_schema(schema: DocumentSchema) -> str:
    return _dumps(schema.to_record())


def deserialize_schema(line: str) -> DocumentSchema:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed schema line: {exc}") from exc
    return DocumentSchema.from_record(record)


def _string_map(value, where) -> Dict[str, str]:
    if not isinstance(value, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in value.items()
    ):
        raise ParseError(f"{where}: metadata must map strings to strings")
    return value


def _int(value, where) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{where}: expected an integer, got {value!r}")
    return value


def deserialize_document(line: str, schema: DocumentSchema) -> Document:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed document line: {exc}") from exc
    return document_from_record(record, schema)


def document_from_record(record, schema: DocumentSchema) -> Document:
    if not isinstance(record, dict) or record.get("kind") != "document":
        raise ParseError("expected a document record")
    try:
        doc_id = record["id"]
        data = record["data"]
        annotations = record.get("annotations", {})
        metadata = _string_map(record.get("metadata", {}), "document")
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed document record: {exc}") from exc
    if not isinstance(doc_id, str):
        raise ParseError("document id must be a string")
    if not isinstance(data, dict) or set(data) != {TEXT_FIELD} or not isinstance(data[TEXT_FIELD], str):
        raise SchemaMismatchError(f"document {doc_id!r}: data must hold exactly one string field {TEXT_FIELD!r}")
    if not isinstance(annotations, dict):
        raise ParseError(f"document {doc_id!r}: annotations must be an object")

    doc = Document(doc_id, data[TEXT_FIELD], schema, metadata)
    known = set(schema.layer_names)
    declared_ids = set()
    for layer_name, sets in annotations.items():
        if layer_name not in known:
            raise SchemaMismatchError(f"document {doc_id!r}: unknown layer {layer_name!r}")
        if not isinstance(sets, dict) or not set(sets) <= {"gold", "predictions"}:
            raise ParseError(f"document {doc_id!r}: layer {layer_name!r} must hold gold/predictions lists")
        for entries in sets.values():
            if not isinstance(entries, list):
                raise ParseError(f"document {doc_id!r}: layer {layer_name!r} entries must be lists")
            for entry in entries:
                if isinstance(entry, dict) and "_id" in entry:
                    declared_ids.add(entry["_id"])

    for layer_name, sets in annotations.items():
        spec = schema.layer(layer_name)
        for prediction, key in ((False, "gold"), (True, "predictions")):
            for entry in sets.get(key, []):
                where = f"document {doc_id!r} {layer_name}.{key}"
                if not isinstance(entry, dict):
                    raise ParseError(f"{where}: annotation must be an object")
                try:
                    ann_id = _int(entry["_id"], where)
                    label = entry["label"]
                    score = entry.get("score")
                    meta = _string_map(entry.get("metadata", {}), where)
                    if not isinstance(label, str):
                        raise ParseError(f"{where}: label must be a string")
                    if score is not None and (isinstance(score, bool) or not isinstance(score, (int, float))):
                        raise ParseError(f"{where}: score must be a number or null")
                    if ann_id < 0:
                        raise ParseError(f"{where}: negative annotation id")
                    if spec.kind == LABELED_SPAN:
                        ann = LabeledSpan(
                            _int(entry["start"], where), _int(entry["end"], where), label, score, meta
                        )
                    elif spec.kind == BINARY_RELATION:
                        args = []
                        for role in ("head", "tail"):
                            ref = _int(entry[role], where)
                            if ref not in doc._annotations:
                                if ref in declared_ids:
                                    raise ForwardReferenceError(f"{where}: {role} id {ref} used before its definition")
                                raise DanglingReferenceError(f"{where}: {role} id {ref} is never defined")
                            args.append(doc.get(ref))
                        ann = BinaryRelation(args[0], args[1], label, score, meta)
                    else:
                        ann = DocumentLabel(label, score, meta)
                except KeyError as exc:
                    raise ParseError(f"{where}: missing key {exc}") from exc
                doc._add(layer_name, ann, prediction, ann_id=ann_id)
    return doc.seal()
