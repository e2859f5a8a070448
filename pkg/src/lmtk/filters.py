"""Document quality filters for Portuguese web text.

The rule set follows the web-scale English cleaning recipes (word-count
bounds, symbol ratios, bullet/ellipsis line fractions, repetition caps)
with the language-dependent pieces swapped for Portuguese: the stopword
list used for the "real text" check and a minimum count of distinct BPE
tokens per document.

Rules run in a fixed order and a document is rejected by the first rule it
fails, so rejection counts are stable across runs and implementations.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

# Function words frequent enough that any real Portuguese document of
# filterable length contains several distinct ones.
PORTUGUESE_STOPWORDS = ("e", "de", "que", "o", "a", "em", "com", "para", "um", "uma")

_BULLET_CHARS = "•‣▪‧·*-"
_WORD_EDGE = re.compile(r"^\W+|\W+$", re.UNICODE)
_PARA_SPLIT = re.compile(r"\n\s*\n")


class RejectReason(str, Enum):
    LENGTH = "length"
    MEAN_WORD_LENGTH = "mean_word_length"
    SYMBOL_RATIO = "symbol_ratio"
    BULLET_FRACTION = "bullet_fraction"
    ELLIPSIS_FRACTION = "ellipsis_fraction"
    ALPHA_FRACTION = "alpha_fraction"
    STOPWORDS = "stopwords"
    DUP_LINES = "dup_lines"
    DUP_PARAGRAPHS = "dup_paragraphs"
    TOP_NGRAM = "top_ngram"
    UNIQUE_TOKENS = "unique_tokens"


@dataclass(frozen=True)
class Verdict:
    """Outcome of filtering one document."""

    kept: bool
    reason: Optional[RejectReason] = None

    def __post_init__(self):
        if self.kept and self.reason is not None:
            raise ValueError("kept verdicts carry no reason")
        if not self.kept and self.reason is None:
            raise ValueError("rejected verdicts must carry a reason")


KEEP = Verdict(True)


@dataclass(frozen=True)
class FilterConfig:
    """Thresholds for every rule, in evaluation order.

    Defaults are the web-scale cleaning values with the Portuguese
    adaptations (stopword list, 200 distinct BPE tokens).
    """

    min_words: int = 50
    max_words: int = 100_000
    mean_word_length_min: float = 3.0
    mean_word_length_max: float = 10.0
    symbol_word_ratio_max: float = 0.1
    bullet_line_frac_max: float = 0.1
    ellipsis_line_frac_max: float = 0.3
    alpha_word_frac_min: float = 0.8
    stopwords: Sequence[str] = PORTUGUESE_STOPWORDS
    min_stopword_hits: int = 2
    dup_line_frac_max: float = 0.2
    dup_paragraph_frac_max: float = 0.3
    top_ngram_char_frac_max: Mapping[int, float] = field(
        default_factory=lambda: {2: 0.20, 3: 0.18, 4: 0.16}
    )
    min_unique_tokens: int = 200
    unique_token_mode: str = "bpe"  # or "whitespace"

    def validate(self) -> None:
        if self.min_words < 0 or self.max_words < self.min_words:
            raise ValueError("need 0 <= min_words <= max_words")
        if not 0 < self.mean_word_length_min <= self.mean_word_length_max:
            raise ValueError("bad mean word length bounds")
        for name in ("symbol_word_ratio_max",):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("bullet_line_frac_max", "ellipsis_line_frac_max",
                     "alpha_word_frac_min", "dup_line_frac_max",
                     "dup_paragraph_frac_max"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not self.stopwords:
            raise ValueError("stopword list must not be empty")
        if self.min_stopword_hits < 0:
            raise ValueError("min_stopword_hits must be >= 0")
        for n, v in self.top_ngram_char_frac_max.items():
            if n < 2 or not 0.0 <= v <= 1.0:
                raise ValueError(f"bad top-{n}-gram threshold {v}")
        if self.min_unique_tokens < 0:
            raise ValueError("min_unique_tokens must be >= 0")
        if self.unique_token_mode not in ("bpe", "whitespace"):
            raise ValueError(f"unknown unique_token_mode {self.unique_token_mode!r}")


@dataclass(frozen=True)
class RepetitionStats:
    """Duplicate-content fractions, each in [0, 1]."""

    dup_line_char_frac: float
    dup_paragraph_char_frac: float
    top_ngram_char_frac: Mapping[int, float]


def _dup_char_frac(blocks: Sequence[str]) -> float:
    total = sum(len(b) for b in blocks)
    if total == 0:
        return 0.0
    counts = Counter(blocks)
    # chars belonging to any block whose content occurs more than once
    dup = sum(len(b) * n for b, n in counts.items() if n > 1)
    return min(1.0, dup / total)


def _top_ngram_frac(words: Sequence[str], n: int, total_chars: int) -> float:
    if len(words) < n or total_chars == 0:
        return 0.0
    grams = Counter(tuple(words[i:i + n]) for i in range(len(words) - n + 1))
    # most frequent gram; among equally frequent ones, the longest
    gram, count = max(grams.items(), key=lambda kv: (kv[1], len(" ".join(kv[0]))))
    covered = count * len(" ".join(gram))
    return min(1.0, covered / total_chars)


def repetition_stats(text: str, ns: Sequence[int] = (2, 3, 4)) -> RepetitionStats:
    """Measure duplicate lines/paragraphs and top n-gram coverage.

    Line and paragraph fractions count the characters of every occurrence
    of duplicated content over the characters of all lines (paragraphs).
    The n-gram fraction is the character mass (count times joined length)
    of the single most frequent word n-gram over total text length, capped
    at 1; frequency ties go to the gram with the larger character mass.
    """
    lines = text.splitlines()
    paragraphs = [p for p in _PARA_SPLIT.split(text)]
    words = text.split()
    return RepetitionStats(
        dup_line_char_frac=_dup_char_frac(lines),
        dup_paragraph_char_frac=_dup_char_frac(paragraphs),
        top_ngram_char_frac={n: _top_ngram_frac(words, n, len(text)) for n in ns},
    )


def unique_token_count(text: str, tokenizer=None) -> int:
    """Distinct tokens in ``text``: BPE ids if a tokenizer is given,
    otherwise distinct whitespace words."""
    if tokenizer is not None:
        return tokenizer.count_unique(text)
    return len(set(text.split()))


def _strip_word(w: str) -> str:
    return _WORD_EDGE.sub("", w)


def apply_quality_filters(text: str, cfg: FilterConfig, tokenizer=None) -> Verdict:
    """Run all rules in order; reject with the first failing rule.

    Order: length, mean word length, symbol ratio, bullet lines, ellipsis
    lines, alphabetic-word fraction, stopword hits, duplicate lines,
    duplicate paragraphs, top n-gram coverage, distinct token count.
    ``tokenizer`` is required only when ``cfg.unique_token_mode == "bpe"``
    and ``cfg.min_unique_tokens > 0``.
    """
    words = text.split()
    n_words = len(words)
    if not cfg.min_words <= n_words <= cfg.max_words:
        return Verdict(False, RejectReason.LENGTH)

    # n_words can only be 0 here when min_words is 0; a zero mean then
    # fails the (strictly positive) lower bound below.
    mean_len = sum(len(w) for w in words) / n_words if n_words else 0.0
    if not cfg.mean_word_length_min <= mean_len <= cfg.mean_word_length_max:
        return Verdict(False, RejectReason.MEAN_WORD_LENGTH)

    hash_ratio = text.count("#") / n_words
    ellipsis_ratio = (text.count("…") + text.count("...")) / n_words
    if hash_ratio > cfg.symbol_word_ratio_max or ellipsis_ratio > cfg.symbol_word_ratio_max:
        return Verdict(False, RejectReason.SYMBOL_RATIO)

    lines = text.splitlines()
    if lines:
        bullets = sum(1 for l in lines if (s := l.lstrip()) and s[0] in _BULLET_CHARS)
        if bullets / len(lines) > cfg.bullet_line_frac_max:
            return Verdict(False, RejectReason.BULLET_FRACTION)
        ellipsis_lines = sum(
            1 for l in lines if l.rstrip().endswith(("…", "..."))
        )
        if ellipsis_lines / len(lines) > cfg.ellipsis_line_frac_max:
            return Verdict(False, RejectReason.ELLIPSIS_FRACTION)

    alpha_words = sum(1 for w in words if any(c.isalpha() for c in w))
    if alpha_words / n_words < cfg.alpha_word_frac_min:
        return Verdict(False, RejectReason.ALPHA_FRACTION)

    stopset = {s.casefold() for s in cfg.stopwords}
    hits = {sw for w in words if (sw := _strip_word(w).casefold()) in stopset}
    if len(hits) < cfg.min_stopword_hits:
        return Verdict(False, RejectReason.STOPWORDS)

    stats = repetition_stats(text, ns=tuple(sorted(cfg.top_ngram_char_frac_max)))
    if stats.dup_line_char_frac > cfg.dup_line_frac_max:
        return Verdict(False, RejectReason.DUP_LINES)
    if stats.dup_paragraph_char_frac > cfg.dup_paragraph_frac_max:
        return Verdict(False, RejectReason.DUP_PARAGRAPHS)
    for n in sorted(cfg.top_ngram_char_frac_max):
        if stats.top_ngram_char_frac[n] > cfg.top_ngram_char_frac_max[n]:
            return Verdict(False, RejectReason.TOP_NGRAM)

    if cfg.min_unique_tokens > 0:
        tok = tokenizer if cfg.unique_token_mode == "bpe" else None
        if cfg.unique_token_mode == "bpe" and tokenizer is None:
            raise ValueError("BPE unique-token rule needs a tokenizer")
        if unique_token_count(text, tok) < cfg.min_unique_tokens:
            return Verdict(False, RejectReason.UNIQUE_TOKENS)

    return KEEP
