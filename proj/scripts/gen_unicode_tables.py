#!/usr/bin/env python3
"""Regenerates src/text/unicode_tables.inc from the Python unicodedata module.

Emits code point range tables (letters, numbers, space separators), canonical
combining classes, fully expanded canonical decompositions, and primary
composition pairs. Hangul syllables are handled algorithmically in C++ and are
excluded here.
"""

import sys
import unicodedata

MAX_CP = 0x110000
HANGUL_S_BASE = 0xAC00
HANGUL_S_COUNT = 11172


def is_hangul_syllable(cp):
    return HANGUL_S_BASE <= cp < HANGUL_S_BASE + HANGUL_S_COUNT


def ranges_for(pred):
    out = []
    start = None
    for cp in range(MAX_CP):
        if 0xD800 <= cp <= 0xDFFF:
            ok = False
        else:
            ok = pred(cp)
        if ok and start is None:
            start = cp
        elif not ok and start is not None:
            out.append((start, cp - 1))
            start = None
    if start is not None:
        out.append((start, MAX_CP - 1))
    return out


def category(cp):
    return unicodedata.category(chr(cp))


def one_level_canonical_decomp(cp):
    d = unicodedata.decomposition(chr(cp))
    if not d or d.startswith("<"):
        return None
    return [int(x, 16) for x in d.split()]


def full_canonical_decomp(cp, memo):
    if cp in memo:
        return memo[cp]
    d = one_level_canonical_decomp(cp)
    if d is None:
        memo[cp] = [cp]
        return memo[cp]
    out = []
    for c in d:
        out.extend(full_canonical_decomp(c, memo))
    memo[cp] = out
    return out


def main(path):
    letter = ranges_for(lambda cp: category(cp).startswith("L"))
    number = ranges_for(lambda cp: category(cp).startswith("N"))
    space_sep = ranges_for(lambda cp: category(cp) == "Zs")

    ccc = []
    start = None
    prev = 0
    for cp in range(MAX_CP):
        c = unicodedata.combining(chr(cp))
        if start is not None and c != prev:
            ccc.append((start, cp - 1, prev))
            start = None
        if c != 0 and start is None:
            start = cp
            prev = c
    if start is not None:
        ccc.append((start, MAX_CP - 1, prev))

    memo = {}
    decomp_entries = []
    decomp_data = []
    for cp in range(MAX_CP):
        if 0xD800 <= cp <= 0xDFFF or is_hangul_syllable(cp):
            continue
        if one_level_canonical_decomp(cp) is None:
            continue
        full = full_canonical_decomp(cp, memo)
        decomp_entries.append((cp, len(decomp_data), len(full)))
        decomp_data.extend(full)

    # Primary composites: two-element canonical decomposition that survives an
    # NFD -> NFC round trip (this excludes composition exclusions and blocked
    # non-starter decompositions).
    comp_pairs = []
    for cp in range(MAX_CP):
        if 0xD800 <= cp <= 0xDFFF or is_hangul_syllable(cp):
            continue
        d = one_level_canonical_decomp(cp)
        if d is None or len(d) != 2:
            continue
        ch = chr(cp)
        if unicodedata.normalize("NFC", unicodedata.normalize("NFD", ch)) == ch:
            comp_pairs.append((d[0], d[1], cp))
    comp_pairs.sort()

    second_set = sorted({b for _, b, _ in comp_pairs})

    with open(path, "w") as f:
        w = f.write
        w("// Generated by scripts/gen_unicode_tables.py (Unicode %s). Do not edit.\n\n"
          % unicodedata.unidata_version)

        def dump_ranges(name, rs):
            w("inline constexpr uint32_t %s[][2] = {\n" % name)
            for a, b in rs:
                w("    {0x%X, 0x%X},\n" % (a, b))
            w("};\n")
            w("inline constexpr size_t %s_count = %d;\n\n" % (name, len(rs)))

        dump_ranges("kLetterRanges", letter)
        dump_ranges("kNumberRanges", number)
        dump_ranges("kSpaceSepRanges", space_sep)

        w("struct CccEntry { uint32_t lo; uint32_t hi; uint8_t ccc; };\n")
        w("inline constexpr CccEntry kCccEntries[] = {\n")
        for a, b, c in ccc:
            w("    {0x%X, 0x%X, %d},\n" % (a, b, c))
        w("};\n")
        w("inline constexpr size_t kCccEntries_count = %d;\n\n" % len(ccc))

        w("struct DecompEntry { uint32_t cp; uint32_t offset; uint8_t len; };\n")
        w("inline constexpr DecompEntry kDecompEntries[] = {\n")
        for cp, off, n in decomp_entries:
            w("    {0x%X, %d, %d},\n" % (cp, off, n))
        w("};\n")
        w("inline constexpr size_t kDecompEntries_count = %d;\n\n" % len(decomp_entries))

        w("inline constexpr uint32_t kDecompData[] = {\n")
        for i in range(0, len(decomp_data), 8):
            w("    " + ", ".join("0x%X" % c for c in decomp_data[i:i + 8]) + ",\n")
        w("};\n\n")

        w("struct CompEntry { uint32_t first; uint32_t second; uint32_t composed; };\n")
        w("inline constexpr CompEntry kCompEntries[] = {\n")
        for a, b, c in comp_pairs:
            w("    {0x%X, 0x%X, 0x%X},\n" % (a, b, c))
        w("};\n")
        w("inline constexpr size_t kCompEntries_count = %d;\n\n" % len(comp_pairs))

        w("inline constexpr uint32_t kCompSecond[] = {\n")
        for i in range(0, len(second_set), 8):
            w("    " + ", ".join("0x%X" % c for c in second_set[i:i + 8]) + ",\n")
        w("};\n")
        w("inline constexpr size_t kCompSecond_count = %d;\n" % len(second_set))

    print("letters=%d numbers=%d zs=%d ccc=%d decomp=%d(data %d) comp=%d second=%d"
          % (len(letter), len(number), len(space_sep), len(ccc),
             len(decomp_entries), len(decomp_data), len(comp_pairs), len(second_set)))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/text/unicode_tables.inc")
