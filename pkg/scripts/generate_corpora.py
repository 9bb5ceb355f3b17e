"""Write the synthetic NER and RE corpora used by the end-to-end runs.

    python scripts/generate_corpora.py --out data --docs 500 --seed 7
"""

import argparse
from pathlib import Path

from pie_ie.corpus import write_jsonl
from pie_ie.synthetic import ner_corpus, re_corpus, split


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data")
    parser.add_argument("--docs", type=int, default=500)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--train-fraction", type=float, default=0.8)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for task, make in (("ner", ner_corpus), ("re", re_corpus)):
        train, dev = split(make(args.docs, seed=args.seed), args.train_fraction)
        for name, docs in (("train", train), ("dev", dev)):
            path = out / f"{task}_{name}.jsonl"
            with open(path, "w", encoding="utf-8") as fh:
                write_jsonl(docs, fh)
            print(f"{path}: {len(docs)} documents")


if __name__ == "__main__":
    main()
