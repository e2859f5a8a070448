"""
A tour of the byte-level BPE tokenizer
======================================

Every Unicode string is first serialized to UTF-8 bytes, each byte is
mapped to a printable stand-in character, and learned merges then fuse
frequent pairs. Nothing is ever out of vocabulary, so decode(encode(s))
returns s exactly for any valid string.

Run from the repository root:

    python3 demos/tokenizer_tour.py
"""

from lmtk.bpe import byte_to_unicode, load_reference_tokenizer

tok = load_reference_tokenizer()
print(f"vocabulary size: {tok.vocab_size}")
print(f"end-of-text id:  {tok.eos_id}")
print()

# the byte table maps all 256 byte values onto printable characters;
# the 188 already-printable ones keep their identity
table = byte_to_unicode()
print("byte stand-ins:  65 ->", repr(table[65]), "  32 ->", repr(table[32]),
      " 231 ->", repr(table[231]))
print()

# accented Portuguese costs more tokens than plain ASCII because the
# merges were learned on mostly-English text
for text in ("the quick brown fox", "a raposa marrom saltou", "coração", "heart"):
    ids = tok.encode(text)
    pieces = [tok.decode([i]) for i in ids]
    print(f"{text!r:28} -> {len(ids):2} tokens {pieces}")
print()

# leading spaces attach to the following word, one reason prompt
# assembly must count tokens on the assembled string, not per part
print("encode('casa')  =", tok.encode("casa"))
print("encode(' casa') =", tok.encode(" casa"))
print()

# round-trip holds even for emoji, combining marks, and raw control bytes
tricky = "međunarodna ́ organizácia 🚀🇧🇷 \x00\x07 fim"
assert tok.decode(tok.encode(tricky)) == tricky
print("round-trip ok on:", repr(tricky))
print()

# count_tokens is the budget primitive used by the prompt builder
sentence = "Quantos tokens custa esta frase inteira em português?"
print(f"count_tokens({sentence!r}) = {tok.count_tokens(sentence)}")
