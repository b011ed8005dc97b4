"""Transformer building blocks shared by the encoders and the recognition head."""

from __future__ import annotations

import torch
import torch.nn as nn
from einops import rearrange


class MLP(nn.Module):
    def __init__(self, dim: int, hidden_dim: int, dropout: float = 0.0):
        super().__init__()
        self.layer_norm = nn.LayerNorm(dim)
        self.fc1 = nn.Linear(dim, hidden_dim)
        self.gelu = nn.GELU()
        self.fc2 = nn.Linear(hidden_dim, dim)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.layer_norm(x)
        x = self.fc1(x)
        x = self.gelu(x)
        x = self.dropout(x)
        x = self.fc2(x)
        return self.dropout(x)


class Attention(nn.Module):
    """Multi-head attention. Self-attention when `context` is None, else cross-attention.

    `key_padding_mask` is (batch, keys) with True marking keys to ignore.
    """

    def __init__(self, dim: int, heads: int, context_dim: int | None = None, dropout: float = 0.0):
        super().__init__()
        if dim % heads:
            raise ValueError(f"dim {dim} is not divisible by heads {heads}")
        self.heads = heads
        self.scale = (dim // heads) ** -0.5
        context_dim = context_dim or dim

        self.norm = nn.LayerNorm(dim)
        self.to_q = nn.Linear(dim, dim)
        self.to_kv = nn.Linear(context_dim, dim * 2)
        self.to_out = nn.Linear(dim, dim)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor, context: torch.Tensor | None = None,
                key_padding_mask: torch.Tensor | None = None) -> torch.Tensor:
        x = self.norm(x)
        context = x if context is None else context

        q = rearrange(self.to_q(x), "b n (h d) -> b h n d", h=self.heads)
        k, v = map(
            lambda t: rearrange(t, "b n (h d) -> b h n d", h=self.heads),
            self.to_kv(context).chunk(2, dim=-1),
        )

        dots = torch.matmul(q, k.transpose(-1, -2)) * self.scale
        if key_padding_mask is not None:
            dots = dots.masked_fill(key_padding_mask[:, None, None, :], float("-inf"))

        attn = self.dropout(dots.softmax(dim=-1))
        out = rearrange(torch.matmul(attn, v), "b h n d -> b n (h d)")
        return self.to_out(out)


class TransformerBlock(nn.Module):
    def __init__(self, dim: int, heads: int, mlp_dim: int, dropout: float = 0.0):
        super().__init__()
        self.attn = Attention(dim, heads=heads, dropout=dropout)
        self.mlp = MLP(dim, hidden_dim=mlp_dim, dropout=dropout)

    def forward(self, x: torch.Tensor, key_padding_mask: torch.Tensor | None = None) -> torch.Tensor:
        x = self.attn(x, key_padding_mask=key_padding_mask) + x
        return self.mlp(x) + x


class Transformer(nn.Module):
    def __init__(self, dim: int, depth: int, heads: int, mlp_dim: int, dropout: float = 0.0):
        super().__init__()
        self.layers = nn.ModuleList(
            [TransformerBlock(dim, heads=heads, mlp_dim=mlp_dim, dropout=dropout) for _ in range(depth)]
        )
        self.norm = nn.LayerNorm(dim)

    def forward(self, x: torch.Tensor, key_padding_mask: torch.Tensor | None = None) -> torch.Tensor:
        for block in self.layers:
            x = block(x, key_padding_mask=key_padding_mask)
        return self.norm(x)
