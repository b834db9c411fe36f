#!/usr/bin/env python3
"""Write a small separable clickbait corpus with aligned EMB1/FTB1 tables.

Clickbait posts use bait vocabulary, describe their target loosely and carry
images from a shifted feature distribution; the rest read like news copy whose
post and description vectors agree.  Output is byte-identical per seed.
"""

import argparse
import json
import struct
from pathlib import Path

import numpy as np

BAIT = ["you", "won't", "believe", "what", "happened", "next", "this", "shocking",
        "secret", "amazing", "trick", "reasons", "why", "#omg", "insane", "wait"]
NEWS = ["council", "approves", "budget", "report", "quarterly", "minister", "announces",
        "election", "court", "rules", "trade", "talks", "agency", "inflation", "rates", "vote"]
TOPICS = ["cats", "market", "football", "storm", "museum", "airline", "festival", "bridge"]
# Never written to the word table, so they go through the character model.
RARE = ["zorbly", "kwimp", "flurg", "@snarf", "blixt"]

WORD_DIM = 300
DOC_DIM = 300
IMAGE_DIM = 4096
# Magnitudes comparable to pretrained paragraph vectors and FC7 activations.
DOC_SCALE = 0.15
IMAGE_SCALE = 0.25


def write_table(path, magic, dim, entries):
    with open(path, "wb") as f:
        f.write(magic)
        f.write(struct.pack("<II", dim, len(entries)))
        for token, vec in entries:
            raw = token.encode("utf-8")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(np.asarray(vec, dtype="<f4").tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--fraction", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=20170801)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    args.out.mkdir(parents=True, exist_ok=True)

    bait_dir = rng.normal(0.0, 1.0, WORD_DIM)
    bait_dir /= np.linalg.norm(bait_dir)
    words = []
    for w in BAIT:
        words.append((w, rng.normal(0.0, 0.1, WORD_DIM) + 0.8 * bait_dir))
    for w in NEWS:
        words.append((w, rng.normal(0.0, 0.1, WORD_DIM) - 0.8 * bait_dir))
    for w in TOPICS:
        words.append((w, rng.normal(0.0, 0.1, WORD_DIM)))

    n_bait = int(round(args.n * args.fraction))
    labels = np.array([1] * n_bait + [0] * (args.n - n_bait))
    rng.shuffle(labels)

    image_shift = np.zeros(IMAGE_DIM)
    image_shift[rng.choice(IMAGE_DIM, 256, replace=False)] = 1.5 * IMAGE_SCALE

    records, docs, images = [], [], []
    for i, label in enumerate(labels):
        rid = f"8{i:05d}"
        vocab = BAIT if label else NEWS
        length = int(rng.integers(3, 9))
        title = [vocab[j] for j in rng.choice(len(vocab), length - 1, replace=False)]
        title.insert(int(rng.integers(0, length)), TOPICS[int(rng.integers(len(TOPICS)))])
        if i % 5 == 0:
            title.append(RARE[i % len(RARE)])
        text = " ".join(title).capitalize() + ("!" if label else ".")

        post_vec = rng.normal(0.0, DOC_SCALE, DOC_DIM)
        if label:
            desc_vec = rng.normal(0.0, DOC_SCALE, DOC_DIM)
        else:
            desc_vec = post_vec + rng.normal(0.0, 0.1 * DOC_SCALE, DOC_DIM)
        docs.append((f"{rid}#post", post_vec))
        docs.append((f"{rid}#desc", desc_vec))

        rec = {
            "id": rid,
            "postText": [text],
            "targetTitle": " ".join(TOPICS[int(rng.integers(len(TOPICS)))] for _ in range(3)),
            "targetDescription": "Synthetic description for post " + rid + ".",
            "targetKeywords": "synthetic,fixture",
        }
        if i % 8 != 3:
            image_id = f"media/photo_{rid}.jpg"
            rec["postMedia"] = [image_id]
            # A few referenced images are absent from the bank.
            if i % 16 != 7:
                feat = np.maximum(rng.normal(0.0, IMAGE_SCALE, IMAGE_DIM), 0.0)
                if label:
                    feat += image_shift
                images.append((image_id, feat))
        rec["truthMean"] = float(round(0.6 + 0.4 * rng.random(), 4)) if label else float(round(0.4 * rng.random(), 4))
        rec["truthClass"] = "clickbait" if label else "no-clickbait"
        records.append(rec)

    with open(args.out / "corpus.jsonl", "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    write_table(args.out / "words.emb", b"EMB1", WORD_DIM, words)
    write_table(args.out / "docs.emb", b"EMB1", DOC_DIM, docs)
    write_table(args.out / "images.ftb", b"FTB1", IMAGE_DIM, images)


if __name__ == "__main__":
    main()
