"""Byte-level BPE tokenizer compatible with the published GPT-2 vocabulary.

Implements the original algorithm: text is split into pretokens by a fixed
regex, each pretoken is mapped byte-by-byte into a printable unicode
alphabet, and ranked merges are applied until no adjacent pair has a rank.
Every byte has a vocabulary entry, so encoding is total over valid UTF-8
and ``decode(encode(s)) == s`` holds for any string.

The vocabulary that ships with the package (``data/gpt2``) is the original
50,257-entry release; ``load_reference_tokenizer`` loads it.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Iterable

import regex

# Original pretokenizer: contractions, letter runs, digit runs, other-symbol
# runs (each optionally absorbing one leading space), then whitespace.
_PRETOKEN = regex.compile(
    r"""'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+"""
)


class TokenizerLoadError(ValueError):
    """Vocabulary or merges file failed validation."""


class UnknownTokenIdError(KeyError):
    """decode() was given an id outside the vocabulary."""


def byte_to_unicode() -> dict[int, str]:
    """Bijection from byte values to printable unicode chars.

    Printable bytes map to themselves; the rest are shifted into a private
    range starting at U+0100 so that vocab files stay readable.
    """
    keep = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("¡"), ord("¬") + 1))
        + list(range(ord("®"), ord("ÿ") + 1))
    )
    table = {b: chr(b) for b in keep}
    shift = 0
    for b in range(256):
        if b not in table:
            table[b] = chr(256 + shift)
            shift += 1
    return table


_BYTE_TO_UNI = byte_to_unicode()
_UNI_TO_BYTE = {c: b for b, c in _BYTE_TO_UNI.items()}


class Tokenizer:
    """Immutable byte-level BPE tokenizer.

    Construct via :func:`load_tokenizer` or :func:`load_reference_tokenizer`.
    Instances are safe to share across threads: the only mutable piece is a
    grow-only pretoken cache whose entries are independent.
    """

    def __init__(self, token_to_id: dict[str, int], merge_ranks: dict[tuple[str, str], int]):
        self.token_to_id = token_to_id
        self.id_to_token = {i: t for t, i in token_to_id.items()}
        self.merge_ranks = merge_ranks
        self._cache: dict[str, tuple[int, ...]] = {}

    @property
    def vocab_size(self) -> int:
        return len(self.token_to_id)

    def token_id(self, token: str) -> int:
        """Id of a literal vocabulary entry (e.g. the end-of-text marker)."""
        try:
            return self.token_to_id[token]
        except KeyError:
            raise KeyError(f"token {token!r} is not in the vocabulary") from None

    @property
    def eos_id(self) -> int:
        return self.token_id("<|endoftext|>")

    def _merge_word(self, word: tuple[str, ...]) -> tuple[str, ...]:
        ranks = self.merge_ranks
        while len(word) > 1:
            best = None
            best_rank = None
            for pair in zip(word, word[1:]):
                r = ranks.get(pair)
                if r is not None and (best_rank is None or r < best_rank):
                    best, best_rank = pair, r
            if best is None:
                break
            first, second = best
            merged = []
            i = 0
            while i < len(word):
                if i < len(word) - 1 and word[i] == first and word[i + 1] == second:
                    merged.append(first + second)
                    i += 2
                else:
                    merged.append(word[i])
                    i += 1
            word = tuple(merged)
        return word

    def _encode_pretoken(self, pretoken: str) -> tuple[int, ...]:
        cached = self._cache.get(pretoken)
        if cached is not None:
            return cached
        mapped = tuple(_BYTE_TO_UNI[b] for b in pretoken.encode("utf-8"))
        ids = tuple(self.token_to_id[piece] for piece in self._merge_word(mapped))
        self._cache[pretoken] = ids
        return ids

    def encode(self, text: str) -> list[int]:
        """Token ids for ``text``. Total over valid UTF-8 input."""
        out: list[int] = []
        for match in _PRETOKEN.finditer(text):
            out.extend(self._encode_pretoken(match.group()))
        return out

    def decode(self, ids: Iterable[int]) -> str:
        """Inverse of encode. Raises UnknownTokenIdError on out-of-vocab ids."""
        parts = []
        for i in ids:
            try:
                parts.append(self.id_to_token[i])
            except KeyError:
                raise UnknownTokenIdError(
                    f"id {i} is not in the vocabulary (size {self.vocab_size})"
                ) from None
        data = bytes(_UNI_TO_BYTE[c] for c in "".join(parts))
        return data.decode("utf-8", errors="replace")

    def count_tokens(self, text: str) -> int:
        return len(self.encode(text))

    def count_unique(self, text: str) -> int:
        return len(set(self.encode(text)))


def _validate(token_to_id: dict[str, int], merge_ranks: dict[tuple[str, str], int],
              vocab_file: str, merges_file: str) -> None:
    size = len(token_to_id)
    ids = set(token_to_id.values())
    if len(ids) != size:
        raise TokenizerLoadError(f"{vocab_file}: duplicate ids in vocabulary")
    if ids != set(range(size)):
        missing = sorted(set(range(size)) - ids)[:5]
        raise TokenizerLoadError(
            f"{vocab_file}: ids are not dense in [0, {size}), first missing: {missing}"
        )
    for b, c in _BYTE_TO_UNI.items():
        if c not in token_to_id:
            raise TokenizerLoadError(
                f"{vocab_file}: byte symbol {c!r} (byte {b}) missing; "
                "byte fallback requires all 256 byte entries"
            )
    for (a, b), rank in merge_ranks.items():
        if a not in token_to_id or b not in token_to_id:
            raise TokenizerLoadError(
                f"{merges_file}, merge {rank + 1}: pair ({a!r}, {b!r}) references "
                "a token missing from the vocabulary"
            )
        if a + b not in token_to_id:
            raise TokenizerLoadError(
                f"{merges_file}, merge {rank + 1}: merged token {(a + b)!r} "
                "missing from the vocabulary"
            )


def _parse_merges(lines: Iterable[str], merges_file: str) -> dict[tuple[str, str], int]:
    ranks: dict[tuple[str, str], int] = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if lineno == 1 and line.startswith("#"):
            continue  # optional "#version: ..." header
        if not line.strip():
            continue
        parts = line.split(" ")
        if len(parts) != 2 or not all(parts):
            raise TokenizerLoadError(
                f"{merges_file}:{lineno}: expected 'left right', got {line!r}"
            )
        pair = (parts[0], parts[1])
        if pair in ranks:
            raise TokenizerLoadError(
                f"{merges_file}:{lineno}: duplicate merge pair {pair!r}"
            )
        ranks[pair] = len(ranks)
    return ranks


def load_tokenizer(vocab_file: str, merges_file: str) -> Tokenizer:
    """Load a tokenizer from a token->id JSON map and a ranked merges file.

    The merges file holds one space-separated pair per line, highest
    priority first; a leading ``#...`` header line is skipped. Both files
    are validated: ids must be dense and unique, all 256 byte symbols must
    be present, and every merge must reference and produce known tokens.
    """
    try:
        with open(vocab_file, encoding="utf-8") as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise TokenizerLoadError(f"{vocab_file}: {e}") from e
    if not isinstance(raw, dict) or not all(
        isinstance(k, str) and isinstance(v, int) for k, v in raw.items()
    ):
        raise TokenizerLoadError(f"{vocab_file}: expected a JSON object of token -> int id")
    try:
        with open(merges_file, encoding="utf-8") as f:
            ranks = _parse_merges(f, merges_file)
    except OSError as e:
        raise TokenizerLoadError(f"{merges_file}: {e}") from e
    _validate(raw, ranks, vocab_file, merges_file)
    return Tokenizer(raw, ranks)


def load_reference_tokenizer() -> Tokenizer:
    """The GPT-2 vocabulary bundled with the package (50,257 entries)."""
    root = resources.files("lmtk").joinpath("data/gpt2")
    with resources.as_file(root.joinpath("vocab.json")) as vocab_path, \
            resources.as_file(root.joinpath("merges.txt")) as merges_path:
        return load_tokenizer(str(vocab_path), str(merges_path))
