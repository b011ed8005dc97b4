"""Extract tag vectors from captions by matching against the tag lexicon.

Single-word tags match when the tag equals a lemma of the caption. Compound
tags ("hot dog") match as a contiguous run of lemmas (or raw tokens in strict
mode). Token positions covered by a matched compound no longer count toward
single-word tags, so "a hot dog" yields "hot dog" but not "dog", while a
separate "dog" elsewhere in the caption still matches.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np

from models.lexicon import TagLexicon
from models.tags import TagVector
from tagging.text import normalize_text


class TagMatcher:
    """Precomputed lookup tables for one list of tag names."""

    def __init__(self, names: Sequence[str], strict_compounds: bool = False):
        self.names = tuple(names)
        self.strict_compounds = strict_compounds
        self.single: dict[str, list[int]] = {}
        self.compounds: dict[str, list[tuple[tuple[str, ...], int]]] = {}

        for index, name in enumerate(self.names):
            norm = normalize_text(name)
            if not norm.tokens:
                continue
            if len(norm.tokens) == 1:
                self.single.setdefault(norm.lemmas[0], []).append(index)
            else:
                seq = norm.tokens if strict_compounds else norm.lemmas
                self.compounds.setdefault(seq[0], []).append((tuple(seq), index))

    def match(self, text: str) -> np.ndarray:
        bits = np.zeros(len(self.names), dtype=np.uint8)
        norm = normalize_text(text)
        if not norm.tokens:
            return bits

        seq = norm.tokens if self.strict_compounds else norm.lemmas
        covered: set[int] = set()
        for start, word in enumerate(seq):
            for compound, index in self.compounds.get(word, ()):
                end = start + len(compound)
                if tuple(seq[start:end]) == compound:
                    bits[index] = 1
                    covered.update(range(start, end))

        for position, lemma in enumerate(norm.lemmas):
            if position in covered:
                continue
            for index in self.single.get(lemma, ()):
                bits[index] = 1

        return bits


@lru_cache(maxsize=8)
def _matcher_for(names: tuple[str, ...], strict_compounds: bool) -> TagMatcher:
    return TagMatcher(names, strict_compounds=strict_compounds)


def extract_tags(text: str, lexicon: TagLexicon, strict_compounds: bool = False) -> TagVector:
    """Return the binary tag vector for one caption."""
    matcher = _matcher_for(tuple(lexicon.names), strict_compounds)
    return TagVector(matcher.match(text))


def batch_extract(captions: Sequence[str], lexicon: TagLexicon,
                  strict_compounds: bool = False) -> list[TagVector]:
    """Extract tags for every caption, preserving order."""
    matcher = _matcher_for(tuple(lexicon.names), strict_compounds)
    return [TagVector(matcher.match(caption)) for caption in captions]


def tag_matrix(captions: Sequence[str], lexicon: TagLexicon,
               strict_compounds: bool = False) -> np.ndarray:
    """N x C uint8 matrix of extracted tags."""
    vectors = batch_extract(captions, lexicon, strict_compounds)
    if not vectors:
        return np.zeros((0, len(lexicon)), dtype=np.uint8)
    return np.stack([v.bits for v in vectors])
