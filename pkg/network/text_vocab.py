"""Word-level vocabulary for the text encoder.

Ids 0-2 are reserved for [PAD], [UNK] and [CLS]. `text_max_len` counts content
tokens; every encoded sequence gets a leading [CLS] on top of that.
"""

from __future__ import annotations

import logging
from typing import Iterable, Sequence

import torch

import config
from tagging.text import tokenize

logger = logging.getLogger(__name__)

PAD_ID = 0
UNK_ID = 1
CLS_ID = 2


class TextVocab:
    def __init__(self, tokens: Sequence[str]):
        if tuple(tokens[:len(config.SPECIAL_TOKENS)]) != config.SPECIAL_TOKENS:
            raise ValueError(f"Vocabulary must start with {config.SPECIAL_TOKENS}")
        self.tokens = list(tokens)
        self.token_to_id = {token: i for i, token in enumerate(self.tokens)}
        if len(self.token_to_id) != len(self.tokens):
            raise ValueError("Vocabulary tokens must be unique")

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def build(cls, texts: Iterable[str]) -> TextVocab:
        """Vocabulary of every word in `texts`, sorted for reproducible ids."""
        words: set[str] = set()
        for text in texts:
            words.update(tokenize(text))
        words.difference_update(config.SPECIAL_TOKENS)
        return cls(list(config.SPECIAL_TOKENS) + sorted(words))

    def encode(self, text: str, max_len: int = config.TEXT_MAX_LEN) -> list[int]:
        """Content token ids (no [CLS]), truncated to max_len."""
        ids = [self.token_to_id.get(t, UNK_ID) for t in tokenize(text)]
        if len(ids) > max_len:
            logger.warning(f"Truncated text from {len(ids)} to {max_len} tokens")
            ids = ids[:max_len]
        return ids

    def encode_pair(self, caption: str, tag2text: str, max_len: int = config.TEXT_MAX_LEN) -> list[int]:
        """Ids of caption followed by tag2text, dropping tag tokens before caption tokens."""
        caption_ids = self.encode(caption, max_len)
        tag_ids = [self.token_to_id.get(t, UNK_ID) for t in tokenize(tag2text)]
        room = max_len - len(caption_ids)
        if len(tag_ids) > room:
            logger.debug(f"Dropped {len(tag_ids) - room} Tag2Text tokens to fit {max_len}")
        return caption_ids + tag_ids[:room]


def text_batch(id_lists: Sequence[Sequence[int]], max_len: int = config.TEXT_MAX_LEN,
               pad_to: int | None = None) -> tuple[torch.Tensor, torch.Tensor]:
    """Prepend [CLS], pad and build the padding mask (True = padding).

    Sequences are padded to `pad_to` (default max_len) content tokens.
    """
    length = (pad_to or max_len) + 1
    ids = torch.full((len(id_lists), length), PAD_ID, dtype=torch.long)
    for row, seq in enumerate(id_lists):
        seq = list(seq)[:max_len]
        if len(seq) >= length:
            raise ValueError(f"Sequence of {len(seq)} tokens does not fit pad length {length - 1}")
        ids[row, 0] = CLS_ID
        if seq:
            ids[row, 1:len(seq) + 1] = torch.tensor(seq, dtype=torch.long)
    mask = ids == PAD_ID
    return ids, mask
