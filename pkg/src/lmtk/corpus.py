"""Corpus pipeline: read, normalize, filter, and pack documents.

Packing writes token ids as little-endian uint32 with one end-of-text id
after every document, so a packed file holds
``sum(len(encode(doc))) + docs_kept`` tokens. Per-document work
(normalize, filter, encode) is pure, so it can run on a thread pool; the
writer consumes results in submission order, which makes the output
byte-identical for any worker count.
"""

from __future__ import annotations

import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional

from .bpe import Tokenizer
from .filters import FilterConfig, RejectReason, Verdict, apply_quality_filters
from .textnorm import normalize_text


class CorpusError(ValueError):
    """Malformed corpus input."""


class PackWriteError(OSError):
    """Packed output could not be written; partial file may remain."""


@dataclass(frozen=True)
class RawDocument:
    doc_id: str
    text: str
    source: Optional[str] = None


@dataclass
class CorpusStats:
    """Ledger for one pipeline run: every input doc is kept or rejected."""

    docs_in: int = 0
    docs_kept: int = 0
    rejections: dict[str, int] = field(default_factory=dict)
    tokens_emitted: int = 0

    def record(self, verdict: Verdict) -> None:
        if verdict.kept:
            self.docs_kept += 1
        else:
            key = verdict.reason.value
            self.rejections[key] = self.rejections.get(key, 0) + 1

    @property
    def docs_rejected(self) -> int:
        return sum(self.rejections.values())

    def check_ledger(self) -> None:
        if self.docs_in != self.docs_kept + self.docs_rejected:
            raise AssertionError(
                f"ledger imbalance: {self.docs_in} in != "
                f"{self.docs_kept} kept + {self.docs_rejected} rejected"
            )

    def as_dict(self) -> dict:
        return {
            "docs_in": self.docs_in,
            "docs_kept": self.docs_kept,
            "docs_rejected": self.docs_rejected,
            "rejections": dict(sorted(self.rejections.items())),
            "tokens_emitted": self.tokens_emitted,
        }


def read_documents_jsonl(path: str | Path) -> Iterator[RawDocument]:
    """Yield documents from JSONL with ``id`` and ``text`` fields.

    Invalid bytes are replaced at read time; a line that is not a JSON
    object with the two required fields raises CorpusError naming the line.
    """
    path = Path(path)
    with open(path, encoding="utf-8", errors="replace") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {e}") from e
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise CorpusError(f"{path}:{lineno}: expected object with 'id' and 'text'")
            yield RawDocument(str(obj["id"]), str(obj["text"]), obj.get("source"))


def read_documents_dir(path: str | Path, pattern: str = "*.txt") -> Iterator[RawDocument]:
    """Yield one document per matching file, sorted by name for determinism."""
    root = Path(path)
    for p in sorted(root.glob(pattern)):
        yield RawDocument(p.stem, p.read_bytes().decode("utf-8", errors="replace"), str(p))


def _process_one(doc: RawDocument, cfg: FilterConfig, tokenizer: Optional[Tokenizer],
                 normalize: bool, encode_kept: bool):
    text = normalize_text(doc.text) if normalize else doc.text
    verdict = apply_quality_filters(text, cfg, tokenizer)
    ids = None
    if verdict.kept and encode_kept:
        ids = tokenizer.encode(text)
    return doc, verdict, ids


def run_filter_pipeline(
    docs: Iterable[RawDocument],
    cfg: FilterConfig,
    tokenizer: Optional[Tokenizer] = None,
    normalize: bool = True,
    workers: int = 1,
    encode_kept: bool = False,
) -> Iterator[tuple[RawDocument, Verdict, Optional[list[int]]]]:
    """Normalize and filter documents, preserving input order.

    With ``workers > 1`` documents are processed on a thread pool but
    yielded in submission order, so downstream consumers see the same
    sequence regardless of parallelism.
    """
    cfg.validate()
    if workers <= 1:
        for doc in docs:
            yield _process_one(doc, cfg, tokenizer, normalize, encode_kept)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(
            lambda d: _process_one(d, cfg, tokenizer, normalize, encode_kept), docs
        )


def pack_documents(
    docs: Iterable[RawDocument],
    cfg: FilterConfig,
    tokenizer: Tokenizer,
    out: IO[bytes],
    eos_id: Optional[int] = None,
    reject_log: Optional[IO[str]] = None,
    normalize: bool = True,
    workers: int = 1,
) -> CorpusStats:
    """Filter ``docs`` and append surviving token ids to ``out``.

    Each kept document contributes ``encode(text)`` followed by one
    ``eos_id`` (default: the tokenizer's end-of-text id), all as
    little-endian uint32. Rejected docs are logged as ``id<TAB>reason``
    lines when ``reject_log`` is given. Returns a balanced CorpusStats.
    """
    if eos_id is None:
        eos_id = tokenizer.eos_id
    if not 0 <= eos_id < tokenizer.vocab_size:
        raise ValueError(f"eos_id {eos_id} outside vocabulary of size {tokenizer.vocab_size}")
    stats = CorpusStats()
    for doc, verdict, ids in run_filter_pipeline(
        docs, cfg, tokenizer, normalize=normalize, workers=workers, encode_kept=True
    ):
        stats.docs_in += 1
        stats.record(verdict)
        if verdict.kept:
            payload = ids + [eos_id]
            try:
                out.write(struct.pack(f"<{len(payload)}I", *payload))
            except OSError as e:
                raise PackWriteError(f"write failed after {stats.tokens_emitted} tokens: {e}") from e
            stats.tokens_emitted += len(payload)
        elif reject_log is not None:
            reject_log.write(f"{doc.doc_id}\t{verdict.reason.value}\n")
    stats.check_ledger()
    return stats


def filter_only(
    docs: Iterable[RawDocument],
    cfg: FilterConfig,
    tokenizer: Optional[Tokenizer] = None,
    reject_log: Optional[IO[str]] = None,
    normalize: bool = True,
    workers: int = 1,
) -> CorpusStats:
    """Run the filters without packing; counts only."""
    stats = CorpusStats()
    for doc, verdict, _ in run_filter_pipeline(
        docs, cfg, tokenizer, normalize=normalize, workers=workers
    ):
        stats.docs_in += 1
        stats.record(verdict)
        if not verdict.kept and reject_log is not None:
            reject_log.write(f"{doc.doc_id}\t{verdict.reason.value}\n")
    stats.check_ledger()
    return stats


def read_packed(path: str | Path) -> list[int]:
    """Read a packed token file back into a list of ids."""
    data = Path(path).read_bytes()
    if len(data) % 4:
        raise CorpusError(f"{path}: length {len(data)} is not a multiple of 4")
    return list(struct.unpack(f"<{len(data) // 4}I", data))
