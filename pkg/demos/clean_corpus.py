"""
Cleaning a raw Portuguese corpus, end to end
============================================

Feeds a handful of deliberately flawed documents through the filter
pipeline, shows which rule rejected each one, then packs the survivors
into the binary token stream a trainer would consume.

Run from the repository root:

    python3 demos/clean_corpus.py
"""

import io
import struct

from lmtk.bpe import load_reference_tokenizer
from lmtk.corpus import FilterConfig, RawDocument, pack_documents, run_filter_pipeline
from lmtk.textnorm import normalize_text

tokenizer = load_reference_tokenizer()

# A real crawl mixes good prose with boilerplate, listicles, and mojibake.
# Each document below trips exactly one of the quality rules (or none).
good = (
    "A biblioteca municipal reabriu depois de quatro meses de obras. "
    "O telhado foi refeito, as estantes ganharam iluminação nova e a sala "
    "de leitura agora tem espaço para oitenta pessoas sentadas. Segundo a "
    "diretora, o acervo cresceu com doações de moradores do bairro e de "
    "duas editoras da cidade. As visitas escolares recomeçam na próxima "
    "semana, com horários reservados para turmas da rede pública. Quem "
    "quiser um cartão de empréstimo pode fazer o cadastro no balcão de "
    "entrada com um documento e um comprovante de residência."
)
too_short = "Obras concluídas. Biblioteca aberta."
shouting_tags = "### " * 30 + "confira já o catálogo completo em nosso site " * 3
bullets = "\n".join("- item de menu número " + str(i) for i in range(12))
repeated = ("O horário de funcionamento é das 9h às 18h.\n" * 6
            + "Aos sábados a biblioteca fecha ao meio-dia.")
mojibake = good.replace("ç", "Ã§").replace("é", "Ã©")  # double-encoded UTF-8

docs = [
    RawDocument("bib-001", good),
    RawDocument("bib-002", too_short),
    RawDocument("bib-003", shouting_tags),
    RawDocument("bib-004", bullets),
    RawDocument("bib-005", repeated),
    RawDocument("bib-006", mojibake),
]

# normalization undoes the mojibake before any rule looks at the text
print("normalize_text repairs bib-006:")
print(" ", repr(normalize_text(mojibake)[:60]))
print()

# the pipeline yields one verdict per document, in input order
# demo docs are paragraph-sized, so relax the two size floors meant
# for page-scale documents
cfg = FilterConfig(min_words=30, min_unique_tokens=40)
print(f"{'doc':8} {'verdict':8} reason")
for doc, verdict, _ in run_filter_pipeline(docs, cfg, tokenizer):
    reason = "-" if verdict.kept else verdict.reason.value
    print(f"{doc.doc_id:8} {'kept' if verdict.kept else 'reject':8} {reason}")
print()

# pack_documents appends encode(text) + end-of-text for every kept doc,
# little-endian uint32, and logs each rejection as "id<TAB>reason"
buf, log = io.BytesIO(), io.StringIO()
stats = pack_documents(docs, cfg, tokenizer, buf, reject_log=log)
print("stats:", stats.as_dict())
print("reject log:")
for line in log.getvalue().splitlines():
    print("  " + line)

# the stream really is just token ids; decode the first few to prove it
ids = struct.unpack(f"<{stats.tokens_emitted}I", buf.getvalue())
print()
print("first 12 ids:", list(ids[:12]))
print("decoded back:", repr(tokenizer.decode(list(ids[:12]))))
