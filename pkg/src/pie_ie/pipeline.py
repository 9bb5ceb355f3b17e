"""Glue between task modules and models: training, prediction, model directories.

A model directory holds ``config.json`` (the task module record, including
its vocabulary), ``model.txt`` (the linear model) and ``meta.json``
(provenance).  :func:`load_model_dir` rebuilds both the task module and the
model from it in one call.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import tempfile
from pathlib import Path
from typing import List, Sequence, Tuple, Union

from pie_ie import __version__
from pie_ie.corpus import read_brat_dir, read_conll2003, read_jsonl_corpus
from pie_ie.document import ENTITY_RELATION_SCHEMA, Document, clear_predictions, serialize_document
from pie_ie.errors import ConfigError, MultiLabelError, OverlapError, ParseError, VersionMismatchError
from pie_ie.models import (
    LinearModel,
    TrainConfig,
    dumps_model,
    loads_model,
    predict_label,
    predict_tags,
    train_classifier,
    train_tagger,
)
from pie_ie.taskmodules import NerTaskModule, ReTaskModule, Skipped

MODEL_DIR_FORMAT = "pie-model-dir v1"
TaskModule = Union[NerTaskModule, ReTaskModule]
TASK_MODULES = {"ner": NerTaskModule, "re": ReTaskModule}
INPUT_FORMATS = ("jsonl", "conll2003", "brat")


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_documents(path, fmt: str = "jsonl"):
    """``(schema, documents, report_or_None)`` for a corpus on disk."""
    if fmt == "jsonl":
        with open(path, encoding="utf-8") as fh:
            schema, docs = read_jsonl_corpus(fh)
        return schema, docs, None
    if fmt == "conll2003":
        with open(path, encoding="utf-8") as fh:
            docs, report = read_conll2003(fh, name=Path(path).name)
    elif fmt == "brat":
        if not Path(path).is_dir():
            raise FileNotFoundError(f"brat input {path} is not a directory")
        docs, report = read_brat_dir(path)
    else:
        raise ConfigError(f"unknown input format {fmt!r}")
    return docs[0].schema if docs else ENTITY_RELATION_SCHEMA, docs, report


def corpus_fingerprint(docs: Sequence[Document]) -> str:
    digest = hashlib.sha256()
    for doc in docs:
        digest.update(serialize_document(doc).encode("utf-8"))
        digest.update(b"\n")
    return "sha256:" + digest.hexdigest()


# ---------------------------------------------------------------------------
# training / prediction


def encode_training_data(taskmodule: TaskModule, docs: Sequence[Document], seed: int = 0):
    encodings, skipped = [], []
    rng = random.Random(seed)
    for doc in docs:
        try:
            encs, skips = taskmodule.encode(doc, with_targets=True)
        except OverlapError as exc:
            skipped.append(Skipped(doc.id, "overlapping_gold_spans", None, str(exc)))
            continue
        except MultiLabelError as exc:
            skipped.append(Skipped(doc.id, "multi_label_pair", None, str(exc)))
            continue
        if isinstance(taskmodule, ReTaskModule) and taskmodule.config.negative_sample_rate < 1.0:
            negative = taskmodule.config.negative_label
            encs = [e for e in encs if e.target != negative or rng.random() < taskmodule.config.negative_sample_rate]
        encodings.extend(encs)
        skipped.extend(skips)
    return encodings, skipped


def train(taskmodule: TaskModule, docs: Sequence[Document], config: TrainConfig) -> Tuple[LinearModel, List[Skipped]]:
    """Fit the model matching ``taskmodule`` and record the vocabulary on it."""
    encodings, skipped = encode_training_data(taskmodule, docs, config.seed)
    if isinstance(taskmodule, NerTaskModule):
        model = train_tagger(encodings, config)
        taskmodule.tag_vocabulary = list(model.labels)
    else:
        model = train_classifier(encodings, config)
        taskmodule.label_vocabulary = list(model.labels)
    return model, skipped


def predict_document(taskmodule: TaskModule, model: LinearModel, doc: Document) -> Document:
    # inference: input encoding only, never target encoding
    doc = clear_predictions(doc, taskmodule.target_layers)
    if isinstance(taskmodule, NerTaskModule):
        encodings, _ = taskmodule.encode_inputs(doc)
        return taskmodule.decode(doc, encodings, [predict_tags(model, enc) for enc in encodings])
    pairs, _ = taskmodule.generate_candidates(doc)
    encodings, _ = taskmodule.encode_inputs(doc, pairs)
    return taskmodule.decode(doc, encodings, [predict_label(model, enc) for enc in encodings])


def predict(taskmodule: TaskModule, model: LinearModel, docs: Sequence[Document]) -> List[Document]:
    return [predict_document(taskmodule, model, doc) for doc in docs]


def strip_gold(doc: Document, layers: Sequence[str]) -> Document:
    """Drop gold annotations of ``layers`` (cascading) and renumber ids densely."""
    drop = [ann_id for name in layers for ann_id in doc[name].gold_ids]
    return doc.copy(exclude_ids=drop, renumber=True).seal()


# ---------------------------------------------------------------------------
# model directories


def _dump_json(record) -> str:
    return json.dumps(record, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def save_model_dir(path, taskmodule: TaskModule, model: LinearModel, config: TrainConfig, fingerprint: str = "") -> None:
    path = Path(path)
    meta = {
        "format": MODEL_DIR_FORMAT,
        "framework_version": __version__,
        "train_config": {"epochs": config.epochs, "seed": config.seed, "shuffle": config.shuffle},
        "corpus_fingerprint": fingerprint,
        "feature_count": model.feature_count,
    }
    atomic_write_text(path / "model.txt", dumps_model(model))
    atomic_write_text(path / "config.json", _dump_json(taskmodule.config_record()))
    atomic_write_text(path / "meta.json", _dump_json(meta))


def load_model_dir(path) -> Tuple[TaskModule, LinearModel]:
    path = Path(path)
    try:
        meta = json.loads((path / "meta.json").read_text(encoding="utf-8"))
        record = json.loads((path / "config.json").read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"corrupt model directory {path}: {exc}") from exc
    if meta.get("format") != MODEL_DIR_FORMAT:
        raise VersionMismatchError(f"model directory format {meta.get('format')!r}, expected {MODEL_DIR_FORMAT!r}")
    try:
        cls = TASK_MODULES[record["task"]]
    except KeyError:
        raise ConfigError(f"unknown task kind {record.get('task')!r}") from None
    taskmodule = cls.from_config_record(record)
    model = loads_model((path / "model.txt").read_text(encoding="utf-8"))
    model.training_meta = dict(meta.get("train_config", {}))
    return taskmodule, model
