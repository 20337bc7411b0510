#!/usr/bin/env python3
"""Regenerate the two toy tokenizer profiles used by the fixtures.

toy-bpe: byte-pair merges learned on identifiers of the mini corpus.
toy-wp:  WordPiece vocabulary built to share exactly SHARED normalized
         surfaces with toy-bpe; both vocabularies hold SIZE normalized surfaces.

Deterministic: rerunning on the same corpus rewrites identical files.
"""

import argparse
import collections
import itertools
import json
import pathlib
import re

SIZE = 1000
SHARED = 400
MERGES = 300
SPACE = "Ġ"  # Ġ

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def identifiers(corpus):
    counts = collections.Counter()
    for path in sorted(pathlib.Path(corpus).rglob("*.py")):
        counts.update(IDENT.findall(path.read_text(encoding="utf-8")))
    return counts


def learn_merges(counts, n):
    words = {w: list(w) for w in counts}
    merges = []
    for _ in range(n):
        pairs = collections.Counter()
        for w, syms in words.items():
            for a, b in zip(syms, syms[1:]):
                pairs[(a, b)] += counts[w]
        if not pairs:
            break
        best = min(pairs, key=lambda p: (-pairs[p], p))
        merges.append(best)
        for w, syms in words.items():
            out, i = [], 0
            while i < len(syms):
                if i + 1 < len(syms) and (syms[i], syms[i + 1]) == best:
                    out.append(syms[i] + syms[i + 1])
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            words[w] = out
    return merges


def pseudo_words(onsets, taken):
    vowels = "aeiou"
    for c1, v1, c2, v2 in itertools.product(onsets, vowels, onsets, vowels):
        w = c1 + v1 + c2 + v2
        if w not in taken:
            taken.add(w)
            yield w


def normalize(tok):
    if tok.startswith(SPACE):
        return " " + tok[len(SPACE):]
    if tok.startswith("##") and len(tok) > 2:
        return tok[2:]
    return tok


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--corpus", default="tests/fixtures/mini_corpus")
    ap.add_argument("--out", default="tests/fixtures/profiles")
    args = ap.parse_args()

    counts = identifiers(args.corpus)
    printable = [chr(c) for c in range(0x21, 0x7F)]
    word_chars = [c for c in printable if c.isalnum() or c == "_"]

    merges = learn_merges(counts, MERGES)
    merged = []
    for a, b in merges:
        if a + b not in merged and a + b not in printable:
            merged.append(a + b)

    taken = set(counts) | set(merged) | set(printable)
    shared_pseudo = pseudo_words("bdfgkm", taken)
    bpe_pseudo = pseudo_words("nprst", taken)
    wp_pseudo = pseudo_words("cqxhjlwyvz", taken)

    shared = set(printable) | set(merged[::2])
    while len(shared) < SHARED:
        shared.add(next(shared_pseudo))

    bpe = set(printable) | {SPACE, "\n", "\t"} | set(merged) | (shared - set(printable))
    while len({normalize(t) for t in bpe}) < SIZE:
        bpe.add(SPACE + next(bpe_pseudo))

    bpe_norm = {normalize(t) for t in bpe}
    wp = set(printable) | {"##" + c for c in word_chars} | (shared - set(printable))
    for w, c in sorted(counts.items()):
        if c >= 2 and w not in bpe_norm:
            wp.add(w)
    while len({normalize(t) for t in wp}) < SIZE:
        wp.add("##" + next(wp_pseudo))

    wp_norm = {normalize(t) for t in wp}
    assert len(bpe_norm) == SIZE and len(wp_norm) == SIZE, (len(bpe_norm), len(wp_norm))
    assert len(bpe_norm & wp_norm) == SHARED, len(bpe_norm & wp_norm)

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    profiles = {
        "toy-bpe.json": {
            "model_id": "toy-bpe",
            "mask_surface": "<mask>",
            "vocabulary": sorted(bpe),
            "tokenizer": {"type": "bpe", "space_marker": SPACE, "merges": [f"{a} {b}" for a, b in merges]},
        },
        "toy-wp.json": {
            "model_id": "toy-wp",
            "mask_surface": "[MASK]",
            "vocabulary": sorted(wp),
            "tokenizer": {"type": "wordpiece", "continuation_prefix": "##"},
        },
    }
    for name, doc in profiles.items():
        with open(out / name, "w", encoding="utf-8") as f:
            json.dump(doc, f, ensure_ascii=False, indent=1)
            f.write("\n")


if __name__ == "__main__":
    main()
