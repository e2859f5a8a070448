"""Independent reimplementation of the corpus quality rules.

Used by gen_corpus_fixture.py to compute the golden verdicts for the
200-document fixture. Every rule and every threshold is written out
here by hand, brute-force style, so agreement with the library is a
real check and not an import of the same code. Two components are
shared on purpose because they are pinned by their own reference
tests: the byte-level BPE tokenizer (exercised against an external
encoder in test_bpe.py) supplies distinct-token counts and packed ids,
and the text normalizer (test_textnorm.py) supplies the cleaned text
both sides filter.

Rule order, first failure wins:
length, mean_word_length, symbol_ratio, bullet_fraction,
ellipsis_fraction, alpha_fraction, stopwords, dup_lines,
dup_paragraphs, top_ngram, unique_tokens.
"""

import re

MIN_WORDS = 50
MAX_WORDS = 100_000
MEAN_LEN_MIN = 3.0
MEAN_LEN_MAX = 10.0
SYMBOL_RATIO_MAX = 0.1
BULLET_FRAC_MAX = 0.1
ELLIPSIS_FRAC_MAX = 0.3
ALPHA_FRAC_MIN = 0.8
STOPWORDS = {"e", "de", "que", "o", "a", "em", "com", "para", "um", "uma"}
MIN_STOPWORD_HITS = 2
DUP_LINE_MAX = 0.2
DUP_PARA_MAX = 0.3
TOP_NGRAM_MAX = {2: 0.20, 3: 0.18, 4: 0.16}
MIN_UNIQUE_TOKENS = 200
BULLETS = set("•‣▪‧·*-")


def _strip_edges(word):
    chars = list(word)
    while chars and not (chars[0].isalnum() or chars[0] == "_"):
        chars.pop(0)
    while chars and not (chars[-1].isalnum() or chars[-1] == "_"):
        chars.pop()
    return "".join(chars)


def _dup_fraction(blocks):
    total = 0
    counts = {}
    for b in blocks:
        total += len(b)
        counts[b] = counts.get(b, 0) + 1
    if total == 0:
        return 0.0
    dup = 0
    for b, n in counts.items():
        if n > 1:
            dup += len(b) * n
    return min(1.0, dup / total)


def _top_ngram_fraction(words, n, text_len):
    if len(words) < n or text_len == 0:
        return 0.0
    counts = {}
    for i in range(len(words) - n + 1):
        gram = tuple(words[i:i + n])
        counts[gram] = counts.get(gram, 0) + 1
    best_count = best_mass = 0
    for gram, count in counts.items():
        mass = len(" ".join(gram))
        # ties on frequency resolve toward the larger character mass
        if (count, mass) > (best_count, best_mass):
            best_count, best_mass = count, mass
    return min(1.0, best_count * best_mass / text_len)


def reject_reason(text, tokenizer):
    """First failing rule's reason string, or None to keep."""
    words = text.split()
    n = len(words)
    if n < MIN_WORDS or n > MAX_WORDS:
        return "length"

    mean_len = sum(len(w) for w in words) / n
    if mean_len < MEAN_LEN_MIN or mean_len > MEAN_LEN_MAX:
        return "mean_word_length"

    if text.count("#") / n > SYMBOL_RATIO_MAX:
        return "symbol_ratio"
    if (text.count("…") + text.count("...")) / n > SYMBOL_RATIO_MAX:
        return "symbol_ratio"

    lines = text.splitlines()
    if lines:
        bullets = 0
        for line in lines:
            stripped = line.lstrip()
            if stripped and stripped[0] in BULLETS:
                bullets += 1
        if bullets / len(lines) > BULLET_FRAC_MAX:
            return "bullet_fraction"
        dots = 0
        for line in lines:
            tail = line.rstrip()
            if tail.endswith("…") or tail.endswith("..."):
                dots += 1
        if dots / len(lines) > ELLIPSIS_FRAC_MAX:
            return "ellipsis_fraction"

    alpha = sum(1 for w in words if any(c.isalpha() for c in w))
    if alpha / n < ALPHA_FRAC_MIN:
        return "alpha_fraction"

    hits = set()
    for w in words:
        core = _strip_edges(w).casefold()
        if core in STOPWORDS:
            hits.add(core)
    if len(hits) < MIN_STOPWORD_HITS:
        return "stopwords"

    if _dup_fraction(lines) > DUP_LINE_MAX:
        return "dup_lines"
    paragraphs = re.split(r"\n\s*\n", text)
    if _dup_fraction(paragraphs) > DUP_PARA_MAX:
        return "dup_paragraphs"

    for size in sorted(TOP_NGRAM_MAX):
        if _top_ngram_fraction(words, size, len(text)) > TOP_NGRAM_MAX[size]:
            return "top_ngram"

    if tokenizer.count_unique(text) < MIN_UNIQUE_TOKENS:
        return "unique_tokens"

    return None
