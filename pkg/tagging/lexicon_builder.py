"""Build the tag lexicon from a caption corpus and compute class re-weighting."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

import config
from models.lexicon import BaseVocabEntry, ClassWeights, TagLexicon
from tagging.tagger import TagMatcher
from tagging.text import normalize_name

logger = logging.getLogger(__name__)


def build_lexicon(captions: Sequence[str],
                  base_vocab: Sequence[str | BaseVocabEntry],
                  min_count: int = config.DEFAULT_MIN_COUNT,
                  remove_top_t: int = config.DEFAULT_REMOVE_TOP,
                  strictly_greater: bool = False,
                  strict_compounds: bool = False) -> TagLexicon:
    """Select base-vocabulary tags that are frequent enough in the captions.

    Frequencies are caption counts under the tagger's matching rules. A tag is
    kept when its frequency is >= min_count (> min_count with
    `strictly_greater`). The `remove_top_t` most frequent survivors are then
    dropped (ties broken alphabetically) and listed in `removed_top`.
    """
    if not base_vocab:
        raise ValueError("Base vocabulary is empty")
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    if remove_top_t < 0:
        raise ValueError(f"remove_top_t must be >= 0, got {remove_top_t}")

    names = _normalize_base_vocab(base_vocab)

    matcher = TagMatcher(names, strict_compounds=strict_compounds)
    counts = np.zeros(len(names), dtype=np.int64)
    for caption in captions:
        counts += matcher.match(caption)

    if strictly_greater:
        survivors = {name: int(c) for name, c in zip(names, counts) if c > min_count}
    else:
        survivors = {name: int(c) for name, c in zip(names, counts) if c >= min_count}

    ranked = sorted(survivors.items(), key=lambda item: (-item[1], item[0]))
    removed = tuple(name for name, _ in ranked[:remove_top_t])
    for name in removed:
        survivors.pop(name)

    if not survivors:
        raise ValueError("lexicon empty after filtering")

    lexicon = TagLexicon.from_frequencies(
        survivors, removed_top=removed, source_vocab_size=len(base_vocab)
    )
    logger.info(
        f"Built lexicon: {len(lexicon)} of {len(base_vocab)} base tags kept, "
        f"{len(removed)} top-frequency tags removed"
    )
    return lexicon


def _normalize_base_vocab(base_vocab: Sequence[str | BaseVocabEntry]) -> list[str]:
    """Normalize names, reject duplicates and drop compounds that have a hypernym."""
    seen: set[str] = set()
    names = []
    for item in base_vocab:
        entry = item if isinstance(item, BaseVocabEntry) else BaseVocabEntry(item)
        name = normalize_name(entry.name)
        if not name:
            continue
        if name in seen:
            raise ValueError(f"Duplicate tag in base vocabulary after normalization: {name!r}")
        seen.add(name)
        if entry.has_hypernym and " " in name:
            continue
        names.append(name)
    return names


def class_weights(lexicon: TagLexicon) -> ClassWeights:
    """Per-class weights w_i = k / sqrt(f_i), with k chosen so mean(w) = 1."""
    freqs = lexicon.frequencies.astype(np.float64)
    for entry in lexicon.entries:
        if entry.frequency <= 0:
            raise ValueError(f"Class {entry.name!r} has zero frequency")
    if np.all(freqs == freqs[0]):
        return ClassWeights(np.ones(len(freqs), dtype=np.float64))
    raw = 1.0 / np.sqrt(freqs)
    return ClassWeights(raw / raw.mean())


def read_base_vocab(path: str) -> list[BaseVocabEntry]:
    """Read a base vocabulary: one tag per line, optionally `name<TAB>1` to mark a hypernym."""
    entries = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            name, _, flag = line.partition("\t")
            entries.append(BaseVocabEntry(name=name.strip(), has_hypernym=flag.strip() in ("1", "true")))
    return entries
