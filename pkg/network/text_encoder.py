"""Transformer text encoder producing the global text embedding w_cls."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import torch
import torch.nn as nn

from models.train_config import EncoderConfig
from network.layers import Transformer
from network.text_vocab import text_batch

logger = logging.getLogger(__name__)


@dataclass
class TextEmbedding:
    global_embedding: torch.Tensor  # w_cls


class TextEncoder(nn.Module):
    def __init__(self, cfg: EncoderConfig, vocab_size: int, dropout: float = 0.0):
        super().__init__()
        self.cfg = cfg
        self.vocab_size = vocab_size
        self.token_embedding = nn.Embedding(vocab_size, cfg.width)
        self.pos_embedding = nn.Parameter(torch.randn(1, cfg.text_max_len + 1, cfg.width) * 0.02)
        self.transformer = Transformer(
            cfg.width, cfg.depth, cfg.heads, mlp_dim=cfg.width * cfg.mlp_ratio, dropout=dropout
        )

    def forward(self, ids: torch.Tensor, padding_mask: torch.Tensor) -> torch.Tensor:
        """ids: (batch, L) starting with [CLS]; padding_mask True on padding. Returns (batch, width)."""
        if ids.shape[1] > self.cfg.text_max_len + 1:
            raise ValueError(f"Sequence length {ids.shape[1]} exceeds {self.cfg.text_max_len + 1}")
        if ids.numel() and (ids.min() < 0 or ids.max() >= self.vocab_size):
            raise ValueError(f"Token id out of vocabulary range [0, {self.vocab_size})")

        x = self.token_embedding(ids) + self.pos_embedding[:, :ids.shape[1]]
        x = self.transformer(x, key_padding_mask=padding_mask)
        return x[:, 0]


@torch.no_grad()
def encode_text(token_ids: Sequence[int], encoder: TextEncoder) -> TextEmbedding:
    """Encode one sequence of content token ids with frozen parameters."""
    token_ids = list(token_ids)
    for token_id in token_ids:
        if not 0 <= token_id < encoder.vocab_size:
            raise ValueError(f"Token id {token_id} is outside the vocabulary of {encoder.vocab_size}")

    max_len = encoder.cfg.text_max_len
    if len(token_ids) > max_len:
        logger.warning(f"Truncated text from {len(token_ids)} to {max_len} tokens")
        token_ids = token_ids[:max_len]

    ids, mask = text_batch([token_ids], max_len)
    was_training = encoder.training
    encoder.eval()
    out = encoder(ids, mask)
    encoder.train(was_training)

    if not torch.isfinite(out).all():
        raise FloatingPointError("Text encoder produced a non-finite embedding")
    return TextEmbedding(global_embedding=out[0])
