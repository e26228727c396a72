#!/usr/bin/env python3
# Copyright 2026 The SpanNet Authors
# SPDX-License-Identifier: Apache-2.0
"""Convert the drug-gene-mutation graph-format release into spannet JSONL.

Input records (one JSON array per file, or JSON lines):

  {"article": ..., "relationLabel": "response",
   "entities": [{"type": "drug", "mention": ..., "indices": [12]}, ...],
   "sentences": [{"nodes": [{"index": 0, "label": "EGFR", ...}, ...]}, ...]}

Tokens are the node labels of all sentences in order. Entity indices address
that concatenated token list. Entities are ordered by --roles to give e_1..e_n.
"""

import argparse
import json
import sys

LABELS = {
    "resistance": "resistance",
    "resistance or non-response": "resistance or non-response",
    "response": "response",
    "sensitivity": "sensitivity",
    "none": "none",
}


def read_records(path):
    with open(path, encoding="utf-8") as f:
        text = f.read()
    stripped = text.lstrip()
    if stripped.startswith("["):
        return json.loads(stripped)
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def tokens_of(record):
    nodes = []
    for sentence in record["sentences"]:
        nodes.extend(sorted(sentence["nodes"], key=lambda n: n["index"]))
    return [n["label"] for n in nodes]


def convert(record, roles, binary, where):
    tokens = tokens_of(record)
    by_type = {}
    for e in record["entities"]:
        by_type.setdefault(e["type"].lower(), e)
    entities = []
    for role, kind in enumerate(roles, start=1):
        if kind not in by_type:
            raise ValueError(f"{where}: no '{kind}' entity")
        idx = sorted(by_type[kind]["indices"])
        if not idx or idx[0] < 0 or idx[-1] >= len(tokens):
            raise ValueError(f"{where}: '{kind}' indices out of range")
        # Discontiguous mentions keep their covering span.
        entities.append({"start": idx[0], "end": idx[-1] + 1, "role": role})
    raw = record["relationLabel"].strip().lower()
    if raw not in LABELS:
        raise ValueError(f"{where}: unknown label '{record['relationLabel']}'")
    label = LABELS[raw]
    if binary:
        label = "none" if label == "none" else "positive"
    return {
        "id": where,
        "tokens": tokens,
        "entities": entities,
        "label": label,
        "sentence_count": len(record["sentences"]),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("inputs", nargs="+", help="graph-format files")
    ap.add_argument("--roles", default="drug,gene,variant",
                    help="entity types in role order (drug,variant for the binary task)")
    ap.add_argument("--binary-labels", action="store_true",
                    help="collapse the four relation labels to positive/none")
    ap.add_argument("--out", help="output JSONL (stdout when omitted)")
    args = ap.parse_args(argv)

    roles = [r.strip().lower() for r in args.roles.split(",") if r.strip()]
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    count = 0
    try:
        for path in args.inputs:
            for i, record in enumerate(read_records(path)):
                where = f"{path}#{i}"
                out.write(json.dumps(convert(record, roles, args.binary_labels, where)) + "\n")
                count += 1
    finally:
        if args.out:
            out.close()
    print(f"wrote {count} instances", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
