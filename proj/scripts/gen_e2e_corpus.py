#!/usr/bin/env python3
"""Regenerates tests/fixtures/e2e_corpus.jsonl: 220 synthetic Kazakh-flavored
documents (seeded), including a handful of duplicates and junk documents so
the cleaning stages all see work during the end-to-end CLI run."""

import json
import random
import sys

WORDS = [
    "бала", "балалар", "тас", "тастар", "дала", "далада", "қол", "қолда",
    "тіл", "тілі", "тілде", "сөз", "сөздер", "ел", "елде", "жер", "жерде",
    "су", "суда", "от", "отта", "қала", "қалада", "кітап", "кітаптар",
    "мектеп", "мектепте", "білім", "ғылым", "өнер", "әлем", "күн", "түн",
    "жыл", "жылдар", "адам", "адамдар", "жүрек", "қазына", "тарих",
]


def sentence(rng, n):
    return " ".join(rng.choice(WORDS) for _ in range(n)).capitalize() + "."


def main(path):
    rng = random.Random(20250809)
    docs = []
    for i in range(200):
        text = " ".join(sentence(rng, rng.randint(6, 14)) for _ in range(rng.randint(2, 5)))
        docs.append({"id": "e2e-%03d" % i, "source": "synthetic", "text": text})
    # exact duplicates
    for k in range(10):
        docs.append({"id": "dup-%02d" % k, "source": "mirror", "text": docs[k]["text"]})
    # junk that individual stages reject
    docs.append({"id": "junk-short", "source": "web", "text": "Аз."})
    docs.append({"id": "junk-latin", "source": "web",
                 "text": "Only latin text that is certainly long enough to pass length."})
    docs.append({"id": "junk-urls", "source": "web",
                 "text": sentence(rng, 10) + " http://a.kz http://b.kz http://c.kz"
                         " http://d.kz http://e.kz http://f.kz http://g.kz"})
    with open(path, "w", encoding="utf-8") as f:
        for d in docs:
            f.write(json.dumps(d, ensure_ascii=False) + "\n")
    print("wrote %d documents" % len(docs))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/e2e_corpus.jsonl")
