"""Caption tokenization and noun lemmatization.

Tokenizer rules:
- text is lowercased and curly apostrophes are straightened
- hyphens and all other punctuation separate tokens and are dropped
- a trailing possessive ('s or ') is removed from its token

Lemmatization only folds noun plurals: an irregular-plural table and a list of
words that end in "s" but are not plurals ship in data/irregular_plurals.json;
everything else goes through suffix rules. Verbs and adjectives keep their
surface form.
"""

from __future__ import annotations

import json
import re
from functools import lru_cache

import config
from models.tags import NormalizedText

_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")


@lru_cache(maxsize=1)
def _plural_tables() -> tuple[dict[str, str], frozenset[str]]:
    with open(config.IRREGULAR_PLURALS_PATH, "r", encoding="utf-8") as f:
        data = json.load(f)
    return dict(data["irregular"]), frozenset(data["invariant"])


def tokenize(text: str) -> list[str]:
    """Split text into lowercase word tokens (punctuation removed)."""
    text = text.lower().replace("’", "'").replace("-", " ")
    tokens = []
    for token in _TOKEN_RE.findall(text):
        if token.endswith("'s"):
            token = token[:-2]
        if token:
            tokens.append(token)
    return tokens


def noun_lemma(token: str) -> str:
    """Fold a plural noun to its singular form."""
    irregular, invariant = _plural_tables()
    if token in irregular:
        return irregular[token]
    if token in invariant or len(token) <= 3 or not token.endswith("s"):
        return token
    if token.endswith("ies") and len(token) > 4:
        return token[:-3] + "y"
    if token.endswith(("sses", "shes", "ches", "xes", "zzes")):
        return token[:-2]
    if token.endswith(("ss", "us", "is")):
        return token
    return token[:-1]


def normalize_text(text: str) -> NormalizedText:
    tokens = tokenize(text)
    return NormalizedText(tokens=tuple(tokens), lemmas=tuple(noun_lemma(t) for t in tokens))


def normalize_name(name: str) -> str:
    """Canonical tag name: lowercase tokens joined by single spaces."""
    return " ".join(tokenize(name))
