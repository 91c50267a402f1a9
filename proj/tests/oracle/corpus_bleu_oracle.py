#!/usr/bin/env python3
"""Independent corpus-BLEU reference for the frozen zh fixture.

Recomputes the metric from its definition in exact rational arithmetic
(fractions.Fraction) and prints the scores the acceptance suite pins.
Run from the repository root:

    python3 tests/oracle/corpus_bleu_oracle.py [--regen]

--regen rewrites tests/data/bleu_zh_50.jsonl from the fixed generator seed
before scoring; without it the script only scores the existing file.
"""

import json
import math
import random
import sys
from collections import Counter
from fractions import Fraction
from pathlib import Path

FIXTURE = Path(__file__).resolve().parents[1] / "data" / "bleu_zh_50.jsonl"


def is_cjk(cp: int) -> bool:
    return (
        0x4E00 <= cp <= 0x9FFF
        or 0x3400 <= cp <= 0x4DBF
        or 0xF900 <= cp <= 0xFAFF
        or 0x20000 <= cp <= 0x2FA1F
        or cp == 0x3007
    )


def is_split_punct(cp: int) -> bool:
    if cp < 0x80:
        c = chr(cp)
        return cp > 0x20 and not c.isdigit() and not ("a" <= c <= "z") and not ("A" <= c <= "Z")
    return (
        0x2000 <= cp <= 0x206F
        or 0x3000 <= cp <= 0x303F
        or 0xFF00 <= cp <= 0xFF65
        or cp in (0x00B7, 0x2026, 0x00AB, 0x00BB)
    )


def tokenize_char_zh(text: str) -> list[str]:
    tokens = []
    pending = []
    for ch in text:
        cp = ord(ch)
        if cp in (0x20, 0x09, 0x0A, 0x0D, 0x3000):
            if pending:
                tokens.append("".join(pending))
                pending = []
            continue
        if is_cjk(cp) or is_split_punct(cp):
            if pending:
                tokens.append("".join(pending))
                pending = []
            tokens.append(ch)
            continue
        pending.append(ch)
    if pending:
        tokens.append("".join(pending))
    return tokens


def ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(pairs, smoothing="none", add_k=Fraction(1), max_n=4) -> float:
    correct = [0] * max_n
    total = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for hyp, ref in pairs:
        ht = tokenize_char_zh(hyp)
        rt = tokenize_char_zh(ref)
        hyp_len += len(ht)
        ref_len += len(rt)
        for n in range(1, max_n + 1):
            hm = ngrams(ht, n)
            if not hm:
                continue
            rm = ngrams(rt, n)
            for gram, count in hm.items():
                total[n - 1] += count
                correct[n - 1] += min(count, rm.get(gram, 0))
    if hyp_len == 0:
        return 0.0

    log_sum = 0.0
    smooth = 1
    for n in range(1, max_n + 1):
        t, c = total[n - 1], correct[n - 1]
        if smoothing == "add_k" and n > 1:
            p = (Fraction(c) + add_k) / (Fraction(t) + add_k)
        elif t == 0:
            p = Fraction(0)
        elif c == 0:
            if smoothing == "exp":
                smooth *= 2
                p = Fraction(1, smooth * t)
            else:
                p = Fraction(0)
        else:
            p = Fraction(c, t)
        if p <= 0:
            return 0.0
        log_sum += math.log(p)
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_sum / max_n)


HAN = (
    "的一是不了在人有我他这个们中来上大为和国地到以说时要就出会可也你对生能而子那得于着下自之年过发后作里"
    "用道行所然家种事成方多经么去法学如都同现当没动面起看定天分还进好小部其些主样理心她本前开但因只从想实"
    "日军者意无力它与长把机十民第公此已工使情明性知全三又关点正业外将两高间由问很最重并物手应战向头文体政"
    "美相见被利什二等产或新己制身果加西斯月话合回特代内信表化老给世位次度门任常先海通教儿原东声提立及比员"
)
LATIN = ["BLEU", "RAG", "Wikipedia", "LLM", "2024", "GPT", "MT", "BM25"]
PUNCT = "。，、！？；："


def synth_sentence(rng: random.Random) -> str:
    out = []
    for _ in range(rng.randint(8, 30)):
        r = rng.random()
        if r < 0.85:
            out.append(rng.choice(HAN))
        elif r < 0.92:
            out.append(rng.choice(LATIN))
        else:
            out.append(rng.choice(PUNCT))
    return "".join(out) + "。"


def mutate(rng: random.Random, ref: str) -> str:
    """A plausible hypothesis: the reference with edits sprinkled in."""
    chars = list(ref)
    edits = rng.randint(0, max(1, len(chars) // 3))
    for _ in range(edits):
        kind = rng.random()
        at = rng.randrange(len(chars))
        if kind < 0.4:
            chars[at] = rng.choice(HAN)
        elif kind < 0.7 and len(chars) > 4:
            del chars[at]
        else:
            chars.insert(at, rng.choice(HAN))
    return "".join(chars)


def regen() -> None:
    rng = random.Random(20240520)
    FIXTURE.parent.mkdir(parents=True, exist_ok=True)
    with FIXTURE.open("w", encoding="utf-8") as out:
        for i in range(50):
            ref = synth_sentence(rng)
            if i % 10 == 9:
                hyp = ref  # a few perfect rows keep 1.0 precisions in play
            else:
                hyp = mutate(rng, ref)
            out.write(json.dumps({"hyp": hyp, "ref": ref}, ensure_ascii=False) + "\n")


def main() -> None:
    if "--regen" in sys.argv:
        regen()
    pairs = []
    with FIXTURE.open(encoding="utf-8") as f:
        for line in f:
            row = json.loads(line)
            pairs.append((row["hyp"], row["ref"]))
    assert len(pairs) == 50, f"fixture holds {len(pairs)} pairs, expected 50"
    for name in ("none", "exp", "add_k"):
        print(f"{name:6s} {corpus_bleu(pairs, smoothing=name):.10f}")


if __name__ == "__main__":
    main()
