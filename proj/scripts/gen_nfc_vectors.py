#!/usr/bin/env python3
"""Regenerates tests/fixtures/nfc_vectors.jsonl.

Each line is {"input": s, "nfc": NFC(s)} with the expected value computed by
Python's unicodedata, so the C++ normalizer is checked against an unrelated
implementation.
"""

import json
import random
import sys
import unicodedata

INTERESTING = [
    # Cyrillic incl. decomposable Ё/Й and Kazakh letters
    list(range(0x0400, 0x0460)) + [0x04D8, 0x04D9, 0x0492, 0x049A, 0x04A2,
                                   0x04E8, 0x04B0, 0x04AE, 0x04BA, 0x0406, 0x0456],
    # Latin + precomposed Latin-1 / Extended-A
    list(range(0x0041, 0x007B)) + list(range(0x00C0, 0x0180)),
    # Combining marks
    list(range(0x0300, 0x0340)) + [0x0344, 0x0345, 0x05B4, 0x3099, 0x309A],
    # Hangul jamo and syllables
    list(range(0x1100, 0x1113)) + list(range(0x1161, 0x1176))
    + list(range(0x11A8, 0x11C3)) + list(range(0xAC00, 0xAC30)),
    # Exclusions / singletons / compat-adjacent oddities
    [0x0958, 0x0959, 0x212B, 0x2126, 0x1E0A, 0x1E0B, 0x0F43, 0x0F4D, 0x2000, 0x0387],
    # Greek with marks
    list(range(0x0391, 0x03CA)) + list(range(0x1F00, 0x1F20)),
    # ASCII filler
    list(range(0x20, 0x7F)),
]


def random_string(rng):
    n = rng.randint(1, 24)
    out = []
    for _ in range(n):
        pool = rng.choice(INTERESTING)
        out.append(chr(rng.choice(pool)))
    return "".join(out)


def main(path):
    rng = random.Random(20250809)
    cases = [
        "ё",          # е + combining diaeresis -> ё
        "Ё",          # Е + diaeresis -> Ё
        "Й",          # И + breve -> Й
        "ё",                # already NFC
        "Å",                # Å (angstrom sign, singleton)
        "Å",               # A + ring -> Å
        "q̣̇",         # ccc reordering: dot-below sorts before dot-above
        "q̣̇",
        "각",    # Hangul L+V+T -> 각
        "가",          # L+V -> 가
        "각",          # LV + T -> 각
        "क़",                # composition exclusion stays decomposed
        "क़",
        "གྷ",                # non-starter oddity
        "ᾴ",
        "Қазақ тілі",
        "",
        "plain ascii text 123",
    ]
    for _ in range(1000):
        cases.append(random_string(rng))

    with open(path, "w", encoding="utf-8") as f:
        for s in cases:
            f.write(json.dumps({"input": s, "nfc": unicodedata.normalize("NFC", s)},
                               ensure_ascii=True) + "\n")
    print("wrote %d vectors" % len(cases))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/nfc_vectors.jsonl")
