"""``pie`` command line: convert, stats, train, predict, evaluate.

Exit codes: 0 success, 2 hard input/format/config error, 3 empty training set.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

from pie_ie import __version__
from pie_ie.corpus import write_brat, write_jsonl
from pie_ie.errors import EmptyTrainingSetError, PieError
from pie_ie.metrics import dataset_stats, describe, layer_f1, prediction_errors
from pie_ie.models import TrainConfig
from pie_ie.pipeline import (
    INPUT_FORMATS,
    atomic_write_text,
    corpus_fingerprint,
    load_documents,
    load_model_dir,
    predict,
    save_model_dir,
    strip_gold,
    train,
)
from pie_ie.taskmodules import NerTaskConfig, NerTaskModule, ReTaskConfig, ReTaskModule
from pie_ie.taskmodules.base import summarize_skipped

EXIT_OK = 0
EXIT_ERROR = 2
EXIT_EMPTY_TRAINING_SET = 3


def _err(*parts):
    print(*parts, file=sys.stderr)


def _jsonl_text(docs, schema) -> str:
    buf = io.StringIO()
    write_jsonl(docs, buf, schema)
    return buf.getvalue()


def _default_seed() -> int:
    raw = os.environ.get("PIE_SEED")
    if raw is None:
        return 42
    try:
        return int(raw)
    except ValueError:
        raise PieError(f"PIE_SEED must be an integer, got {raw!r}") from None


def _distance(value: str) -> Optional[int]:
    if value.lower() in ("none", "unlimited"):
        return None
    return int(value)


def _write_brat_output(docs, output: Path, which: str):
    output.mkdir(parents=True, exist_ok=True)
    for doc in docs:
        txt, ann = write_brat(doc, which)
        stem = doc.id.replace(os.sep, "_")
        atomic_write_text(output / f"{stem}.txt", txt)
        atomic_write_text(output / f"{stem}.ann", ann)


# ---------------------------------------------------------------------------
# commands


def cmd_convert(args) -> int:
    schema, docs, report = load_documents(args.input, args.input_format)
    if report is not None:
        _err(report.render())
    if args.output_format == "jsonl":
        atomic_write_text(args.output, _jsonl_text(docs, schema))
    else:
        _write_brat_output(docs, Path(args.output), args.which)
    return EXIT_OK


def cmd_stats(args) -> int:
    _, docs, report = load_documents(args.input, args.input_format)
    if report is not None:
        _err(report.render())
    stats = dataset_stats(docs, args.layer or None)
    print(stats.to_json() if args.json else stats.render())
    return EXIT_OK


def _build_taskmodule(args):
    if args.task == "ner":
        config = NerTaskConfig(layer=args.layer, max_tokens=args.max_tokens or 128, stride=args.stride)
        return NerTaskModule(config)
    config = ReTaskConfig(
        entity_layer=args.entity_layer,
        relation_layer=args.relation_layer,
        negative_label=args.negative_label,
        max_tokens=args.max_tokens or 128,
        max_pair_distance=args.max_pair_distance,
        typed_markers=not args.untyped_markers,
        negative_sample_rate=args.negative_sample_rate,
    )
    return ReTaskModule(config)


def _eval_layer(taskmodule) -> str:
    return taskmodule.config.layer if isinstance(taskmodule, NerTaskModule) else taskmodule.config.relation_layer


def cmd_train(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    config = TrainConfig(epochs=args.epochs, seed=seed, shuffle=not args.no_shuffle)
    taskmodule = _build_taskmodule(args)
    _, docs, report = load_documents(args.train, args.input_format)
    if report is not None and report.skipped:
        _err(report.render())
    dev_docs = load_documents(args.dev, args.input_format)[1] if args.dev else None

    model, skipped = train(taskmodule, docs, config)
    save_model_dir(args.model_dir, taskmodule, model, config, corpus_fingerprint(docs))
    counts = summarize_skipped(skipped)
    _err(f"trained {args.task} model: {len(model.labels)} labels, {model.feature_count} features")
    _err("skipped annotations: " + (", ".join(f"{r}={n}" for r, n in sorted(counts.items())) or "none"))

    if dev_docs is not None:
        predicted = predict(taskmodule, model, dev_docs)
        f1 = layer_f1(predicted, _eval_layer(taskmodule))
        print(f1.to_json() if args.json else f1.render())
    return EXIT_OK


def cmd_predict(args) -> int:
    taskmodule, model = load_model_dir(args.model_dir)
    schema, docs, _ = load_documents(args.input, args.input_format)
    predicted = predict(taskmodule, model, docs)
    if args.predictions_only:
        predicted = [strip_gold(doc, taskmodule.target_layers) for doc in predicted]
    atomic_write_text(args.output, _jsonl_text(predicted, schema))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    _, docs, _ = load_documents(args.input, args.input_format)
    report = layer_f1(docs, args.layer, args.match)
    if args.json:
        out = report.to_dict()
        if args.errors:
            out["errors"] = _error_records(docs, args.layer)
        print(json.dumps(out, sort_keys=True))
        return EXIT_OK
    print(report.render())
    if args.errors:
        for doc in docs:
            fps, fns = prediction_errors(doc, args.layer)
            if not fps and not fns:
                continue
            print(f"\n== {doc.id}")
            for ann in fps:
                print(f"  FP {describe(doc, ann)}")
            for ann in fns:
                print(f"  FN {describe(doc, ann)}")
    return EXIT_OK


def _error_records(docs, layer):
    records = []
    for doc in docs:
        fps, fns = prediction_errors(doc, layer)
        records += [{"document": doc.id, "type": "FP", "annotation": describe(doc, a)} for a in fps]
        records += [{"document": doc.id, "type": "FN", "annotation": describe(doc, a)} for a in fns]
    return records


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pie", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"pie {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def input_format(p):
        p.add_argument("--input-format", choices=INPUT_FORMATS, default="jsonl")

    p = sub.add_parser("convert", help="convert between corpus formats")
    p.add_argument("--input-format", "--from", dest="input_format", choices=INPUT_FORMATS, required=True)
    p.add_argument("--output-format", "--to", dest="output_format", choices=("jsonl", "brat"), required=True)
    p.add_argument("--which", choices=("gold", "predictions"), default="gold", help="annotation set for brat output")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("stats", help="label and length statistics")
    p.add_argument("input")
    p.add_argument("--layer", action="append", help="layer to count (repeatable; default all)")
    p.add_argument("--json", action="store_true")
    input_format(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train a task model")
    p.add_argument("--task", choices=("ner", "re"), required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--dev")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=None, help="defaults to $PIE_SEED, then 42")
    p.add_argument("--no-shuffle", action="store_true")
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--json", action="store_true")
    input_format(p)
    ner = p.add_argument_group("ner")
    ner.add_argument("--layer", default="entities")
    ner.add_argument("--stride", type=int)
    re_ = p.add_argument_group("re")
    re_.add_argument("--entity-layer", default="entities")
    re_.add_argument("--relation-layer", default="relations")
    re_.add_argument("--negative-label", default="no_relation")
    re_.add_argument("--max-pair-distance", type=_distance, default=30, help="integer or 'none'")
    re_.add_argument("--untyped-markers", action="store_true")
    re_.add_argument("--negative-sample-rate", type=float, default=1.0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict with a trained model directory")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--predictions-only", action="store_true",
                   help="drop gold annotations of the predicted layers from the output")
    p.add_argument("input")
    p.add_argument("output")
    input_format(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("input")
    p.add_argument("--layer", required=True)
    p.add_argument("--match", choices=("labeled", "unlabeled"), default="labeled")
    p.add_argument("--errors", action="store_true", help="list false positives and negatives")
    p.add_argument("--json", action="store_true")
    input_format(p)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EmptyTrainingSetError as exc:
        _err(f"error: {exc}")
        return EXIT_EMPTY_TRAINING_SET
    except (PieError, OSError, ValueError, KeyError) as exc:
        _err(f"error: {type(exc).__name__}: {exc}")
        return EXIT_ERROR


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
