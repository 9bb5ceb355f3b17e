"""Train, predict and evaluate one task end to end through the ``pie`` CLI.

    python scripts/run_pipeline.py --task re --data data --work runs/re
"""

import argparse
import sys
import time
from pathlib import Path

from pie_ie.cli import main as pie

LAYERS = {"ner": "entities", "re": "relations"}


def step(*argv):
    code = pie([str(a) for a in argv])
    if code:
        sys.exit(code)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--task", choices=sorted(LAYERS), required=True)
    parser.add_argument("--data", default="data")
    parser.add_argument("--work", default=None)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--errors", action="store_true", help="list false positives and negatives")
    args = parser.parse_args()

    data = Path(args.data)
    work = Path(args.work or f"runs/{args.task}")
    model_dir, predictions = work / "model", work / "dev_predictions.jsonl"

    t0 = time.perf_counter()
    step("train", "--task", args.task, "--train", data / f"{args.task}_train.jsonl", "--model-dir", model_dir,
         "--seed", args.seed, "--epochs", args.epochs)
    t1 = time.perf_counter()
    step("predict", "--model-dir", model_dir, data / f"{args.task}_dev.jsonl", predictions)
    t2 = time.perf_counter()
    step("evaluate", predictions, "--layer", LAYERS[args.task], *(["--errors"] if args.errors else []))
    t3 = time.perf_counter()
    print(f"\ntrain {t1 - t0:.2f}s  predict {t2 - t1:.2f}s  evaluate {t3 - t2:.2f}s  total {t3 - t0:.2f}s")


if __name__ == "__main__":
    main()
