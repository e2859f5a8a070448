"""Tokenizer tests against a published reference implementation.

tests/fixtures/gpt2_reference.json holds 50 strings with ids produced by
an independent encoder (see tests/oracles/bpe_gen_reference.js). Every id
sequence must match exactly.
"""

import json

import pytest
from hypothesis import given, strategies as st

from lmtk.bpe import (
    Tokenizer,
    TokenizerLoadError,
    UnknownTokenIdError,
    byte_to_unicode,
    load_tokenizer,
)


def test_reference_vocabulary_shape(tokenizer):
    assert tokenizer.vocab_size == 50257
    assert tokenizer.eos_id == 50256
    assert tokenizer.token_id("<|endoftext|>") == 50256


def test_fixture_ids_exact(tokenizer, bpe_reference_cases):
    assert len(bpe_reference_cases) == 50
    mismatches = [
        case["text"]
        for case in bpe_reference_cases
        if tokenizer.encode(case["text"]) != case["ids"]
    ]
    assert mismatches == []


def test_fixture_round_trip(tokenizer, bpe_reference_cases):
    for case in bpe_reference_cases:
        assert tokenizer.decode(case["ids"]) == case["text"]


def test_empty_string(tokenizer):
    assert tokenizer.encode("") == []
    assert tokenizer.decode([]) == ""


@given(st.text(max_size=200))
def test_round_trip_any_text(text):
    # session fixture is not available inside @given; module-level singleton
    tok = _shared()
    assert tok.decode(tok.encode(text)) == text


_SINGLETON = []


def _shared():
    if not _SINGLETON:
        from lmtk.bpe import load_reference_tokenizer

        _SINGLETON.append(load_reference_tokenizer())
    return _SINGLETON[0]


def test_byte_alphabet_bijection():
    table = byte_to_unicode()
    assert len(table) == 256
    assert len(set(table.values())) == 256
    # printable ASCII maps to itself, the rest is shifted past U+00FF
    assert table[ord("A")] == "A"
    assert all(ord(c) > 0xFF for b, c in table.items() if b in (0, 9, 10, 13, 32, 127))


def test_count_helpers(tokenizer):
    text = "um dois um dois um"
    ids = tokenizer.encode(text)
    assert tokenizer.count_tokens(text) == len(ids)
    assert tokenizer.count_unique(text) == len(set(ids))
    assert tokenizer.count_unique(text) < tokenizer.count_tokens(text)


def test_decode_unknown_id(tokenizer):
    with pytest.raises(UnknownTokenIdError, match="50257"):
        tokenizer.decode([0, 50257])


def test_token_id_unknown(tokenizer):
    with pytest.raises(KeyError, match="no-such-token"):
        tokenizer.token_id("no-such-token")


# ---------------------------------------------------------------------------
# loader validation, on small synthetic files


def _byte_vocab():
    table = byte_to_unicode()
    return {table[b]: b for b in range(256)}


def _write(tmp_path, vocab, merge_lines):
    vocab_file = tmp_path / "vocab.json"
    merges_file = tmp_path / "merges.txt"
    vocab_file.write_text(json.dumps(vocab, ensure_ascii=False), encoding="utf-8")
    merges_file.write_text("".join(line + "\n" for line in merge_lines), encoding="utf-8")
    return str(vocab_file), str(merges_file)


def test_byte_only_vocabulary(tmp_path):
    tok = load_tokenizer(*_write(tmp_path, _byte_vocab(), []))
    assert tok.vocab_size == 256
    # with no merges every pretoken encodes byte by byte
    assert tok.encode("hi") == [ord("h"), ord("i")]
    assert len(tok.encode("é")) == 2
    assert tok.decode(tok.encode("olá, mundo")) == "olá, mundo"


def test_merge_rank_priority(tmp_path):
    vocab = _byte_vocab()
    for extra in ("ab", "bc", "abc"):
        vocab[extra] = len(vocab)
    # rank 0 wins over rank 1 when both pairs are present in "abc"
    tok = load_tokenizer(*_write(tmp_path, vocab, ["a b", "b c", "ab c"]))
    assert [tok.id_to_token[i] for i in tok.encode("abc")] == ["abc"]
    tok2 = load_tokenizer(*_write(tmp_path, vocab, ["b c", "a b"]))
    assert [tok2.id_to_token[i] for i in tok2.encode("abc")] == ["a", "bc"]


def test_header_line_skipped(tmp_path):
    vocab = _byte_vocab()
    vocab["ab"] = len(vocab)
    tok = load_tokenizer(*_write(tmp_path, vocab, ["#version: 0.2", "a b"]))
    assert tok.encode("ab") == [vocab["ab"]]


def test_sparse_ids_rejected(tmp_path):
    vocab = _byte_vocab()
    vocab["ab"] = 999  # gap: ids must be dense in [0, size)
    with pytest.raises(TokenizerLoadError, match="dense"):
        load_tokenizer(*_write(tmp_path, vocab, []))


def test_missing_byte_symbol_rejected(tmp_path):
    vocab = _byte_vocab()
    removed = byte_to_unicode()[0]
    del vocab[removed]
    vocab["x" * 3] = 255  # keep ids dense after the removal
    with pytest.raises(TokenizerLoadError, match="byte"):
        load_tokenizer(*_write(tmp_path, vocab, []))


def test_merge_with_unknown_token_rejected(tmp_path):
    with pytest.raises(TokenizerLoadError, match="missing from the vocabulary"):
        load_tokenizer(*_write(tmp_path, _byte_vocab(), ["a zz"]))


def test_merge_product_missing_rejected(tmp_path):
    # both halves exist but the concatenation does not
    with pytest.raises(TokenizerLoadError, match="merged token"):
        load_tokenizer(*_write(tmp_path, _byte_vocab(), ["a b"]))


def test_duplicate_merge_pair_names_line(tmp_path):
    vocab = _byte_vocab()
    vocab["ab"] = len(vocab)
    with pytest.raises(TokenizerLoadError, match=r"merges\.txt:2"):
        load_tokenizer(*_write(tmp_path, vocab, ["a b", "a b"]))


def test_malformed_merge_line_names_line(tmp_path):
    with pytest.raises(TokenizerLoadError, match=r"merges\.txt:1"):
        load_tokenizer(*_write(tmp_path, _byte_vocab(), ["a b c"]))


def test_non_object_vocab_rejected(tmp_path):
    vocab_file = tmp_path / "vocab.json"
    vocab_file.write_text("[1, 2, 3]", encoding="utf-8")
    merges_file = tmp_path / "merges.txt"
    merges_file.write_text("", encoding="utf-8")
    with pytest.raises(TokenizerLoadError, match="JSON object"):
        load_tokenizer(str(vocab_file), str(merges_file))


def test_direct_construction_is_cached(tmp_path):
    tok = load_tokenizer(*_write(tmp_path, _byte_vocab(), []))
    first = tok.encode("repeat repeat repeat")
    assert tok.encode("repeat repeat repeat") == first
    assert isinstance(tok, Tokenizer)
