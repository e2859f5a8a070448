"""Ingest-time text cleanup: mojibake repair, markup removal, NFC.

Web-crawled Portuguese text arrives with three recurring defects: UTF-8
bytes that were decoded as cp1252/latin-1 somewhere upstream ("Ã¡" instead
of "á"), remnant HTML tags and entities, and stray control characters.
``normalize_text`` applies the repairs repeatedly until the text stops
changing, so doubly-encoded input and entity-escaped markup both come out
clean.
"""

from __future__ import annotations

import html
import re
import unicodedata

_TAG = re.compile(r"<!--.*?-->|</?[a-zA-Z][^>]*>", re.DOTALL)

# Characters whose UTF-8 bytes produce recognizable artifacts when decoded
# as cp1252 (or latin-1 for the five bytes cp1252 leaves undefined).
_REPAIR_TARGETS = (
    "ÀÁÂÃÄÅÆÇÈÉÊËÌÍÎÏÐÑÒÓÔÕÖØÙÚÛÜÝÞß"
    "àáâãäåæçèéêëìíîïðñòóôõöøùúûüýþÿ"
    "ŒœŠšŽžŸƒ"
    "–—‘’‚“”„•…"
    "€™ ¡¢£§©«®°±²³µ·¹º»ª¼½¾¿÷×¬"
)


def _cp1252_char(byte: int) -> str:
    try:
        return bytes([byte]).decode("cp1252")
    except UnicodeDecodeError:
        return chr(byte)


def _artifact_table() -> list[tuple[str, str]]:
    table: dict[str, str] = {}
    for ch in _REPAIR_TARGETS:
        raw = ch.encode("utf-8")
        for decoder in ("cp1252", "latin-1"):
            if decoder == "cp1252":
                artifact = "".join(_cp1252_char(b) for b in raw)
            else:
                artifact = raw.decode("latin-1")
            if len(artifact) > 1 and artifact not in table:
                table[artifact] = ch
    # UTF-8 BOM decoded as cp1252; drop it entirely.
    table["ï»¿"] = ""
    return sorted(table.items(), key=lambda kv: len(kv[0]), reverse=True)


_ARTIFACTS = _artifact_table()
_ARTIFACT_RE = re.compile("|".join(re.escape(a) for a, _ in _ARTIFACTS))
_ARTIFACT_MAP = dict(_ARTIFACTS)

_CONTROL_RE = re.compile(r"[\x00-\x08\x0b-\x1f\x7f-\x9f]")


def repair_mojibake(text: str) -> str:
    """Replace cp1252/latin-1 decoding artifacts with the intended chars.

    Table-driven and longest-match-first, so it only touches sequences
    that are unambiguous products of a bad decode. Doubly-mangled text
    needs one call per encoding layer; ``normalize_text`` iterates.
    """
    return _ARTIFACT_RE.sub(lambda m: _ARTIFACT_MAP[m.group()], text)


def strip_markup(text: str) -> str:
    """Remove HTML comments and tags, then decode entities."""
    return html.unescape(_TAG.sub("", text))


def strip_controls(text: str) -> str:
    """Drop C0/C1 control characters except newline and tab."""
    return _CONTROL_RE.sub("", text)


def normalize_text(text: str, max_rounds: int = 10) -> str:
    """Full cleanup pass, iterated to a fixed point.

    Each round strips markup, decodes entities, repairs mojibake, drops
    control characters, and applies NFC. Rounds repeat until the text is
    stable (idempotence: normalizing a normalized string is a no-op), with
    a round cap as a safety valve for pathological input.
    """
    for _ in range(max_rounds):
        new = strip_markup(text)
        new = repair_mojibake(new)
        new = strip_controls(new)
        new = unicodedata.normalize("NFC", new)
        if new == text:
            break
        text = new
    return text
