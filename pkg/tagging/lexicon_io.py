"""Lexicon file persistence.

Format (UTF-8, tab-separated, one entry per line, entries sorted by name):

    #tag-lexicon<TAB>version=1<TAB>source_vocab_size=9600<TAB>removed_top=person,man
    dog<TAB>6
    hot dog<TAB>3
"""

from __future__ import annotations

import logging
import os

import config
from models.lexicon import LexiconEntry, TagLexicon
from tagging.text import normalize_name

logger = logging.getLogger(__name__)

HEADER_TAG = "#tag-lexicon"


class LexiconFormatError(ValueError):
    def __init__(self, message: str, line_num: int):
        super().__init__(f"line {line_num}: {message}")
        self.line_num = line_num


class LexiconVersionError(ValueError):
    pass


def serialize_lexicon(lexicon: TagLexicon) -> str:
    header = "\t".join([
        HEADER_TAG,
        f"version={config.LEXICON_FORMAT_VERSION}",
        f"source_vocab_size={lexicon.source_vocab_size}",
        f"removed_top={','.join(lexicon.removed_top)}",
    ])
    lines = [header] + [f"{e.name}\t{e.frequency}" for e in lexicon.entries]
    return "\n".join(lines) + "\n"


def save_lexicon(lexicon: TagLexicon, path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(serialize_lexicon(lexicon))
    logger.info(f"Saved lexicon with {len(lexicon)} classes to {path}")


def load_lexicon(path: str) -> TagLexicon:
    with open(path, "r", encoding="utf-8") as f:
        return parse_lexicon(f.read())


def parse_lexicon(text: str) -> TagLexicon:
    lines = text.splitlines()
    if not lines:
        raise LexiconFormatError("empty lexicon file", 1)

    meta = _parse_header(lines[0])
    removed = tuple(n for n in meta.get("removed_top", "").split(",") if n)

    entries: list[LexiconEntry] = []
    seen: set[str] = set()
    for line_num, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise LexiconFormatError(f"expected name<TAB>frequency, got {line!r}", line_num)
        name, raw_freq = parts
        if normalize_name(name) != name:
            raise LexiconFormatError(f"tag name {name!r} is not normalized", line_num)
        if name in seen:
            raise LexiconFormatError(f"duplicate tag {name!r}", line_num)
        if entries and name < entries[-1].name:
            raise LexiconFormatError(f"tag {name!r} is out of name order", line_num)
        try:
            frequency = int(raw_freq)
        except ValueError:
            raise LexiconFormatError(f"frequency {raw_freq!r} is not an integer", line_num) from None
        if frequency < 0:
            raise LexiconFormatError(f"negative frequency {frequency}", line_num)
        if name in removed:
            raise LexiconFormatError(f"tag {name!r} is listed in removed_top", line_num)
        seen.add(name)
        entries.append(LexiconEntry(name=name, frequency=frequency, class_index=len(entries)))

    return TagLexicon(
        entries=tuple(entries),
        removed_top=removed,
        source_vocab_size=meta.get("source_vocab_size", 0),
    )


def _parse_header(line: str) -> dict:
    parts = line.split("\t")
    if parts[0] != HEADER_TAG:
        raise LexiconFormatError(f"missing {HEADER_TAG} header", 1)

    meta: dict = {}
    for part in parts[1:]:
        key, sep, value = part.partition("=")
        if not sep:
            raise LexiconFormatError(f"malformed header field {part!r}", 1)
        meta[key] = value

    try:
        version = int(meta.get("version", ""))
    except ValueError:
        raise LexiconFormatError("header has no integer version", 1) from None
    if version != config.LEXICON_FORMAT_VERSION:
        raise LexiconVersionError(
            f"Lexicon format version {version} is not supported "
            f"(expected {config.LEXICON_FORMAT_VERSION})"
        )

    try:
        meta["source_vocab_size"] = int(meta.get("source_vocab_size", 0))
    except ValueError:
        raise LexiconFormatError("source_vocab_size is not an integer", 1) from None
    return meta
