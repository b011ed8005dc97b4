"""Multi-label recognition heads.

`GroupDecoderHead` follows the ML-Decoder design: K fixed random group queries
cross-attend to the spatial tokens (queries as Q, spatial tokens as keys and
values), pass through a feed-forward layer, and a per-group linear map turns
each query output into g class logits. Logits past C are dropped. There is no
positional encoding, so the head is invariant to the order of spatial tokens.

`ClsHead` is the single-label style baseline: one linear layer on v_cls.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn

import config
from models.train_config import RecognitionHeadConfig
from network.layers import MLP, Attention


def init_tag_logits(weight: nn.Parameter, bias: nn.Parameter) -> None:
    """Small weights and a bias at the tag prior, so every tag starts at p ~= HEAD_PRIOR_PROB."""
    nn.init.trunc_normal_(weight, mean=0.0, std=config.HEAD_INIT_STD)
    prior = config.HEAD_PRIOR_PROB
    nn.init.constant_(bias, math.log(prior / (1.0 - prior)))


class GroupDecoderHead(nn.Module):
    def __init__(self, width: int, num_classes: int, cfg: RecognitionHeadConfig):
        super().__init__()
        self.num_classes = num_classes
        self.num_queries = cfg.resolved_queries(num_classes)
        self.group_factor = cfg.group_factor
        d = cfg.decoder_dim

        self.embed_spatial = nn.Sequential(nn.Linear(width, d), nn.ReLU())
        generator = torch.Generator().manual_seed(cfg.query_seed)
        self.register_buffer("queries", torch.randn(self.num_queries, d, generator=generator))
        self.cross_attn = Attention(d, heads=cfg.decoder_heads)
        self.ffn = MLP(d, hidden_dim=cfg.decoder_ff)
        self.norm = nn.LayerNorm(d)
        self.group_weight = nn.Parameter(torch.empty(self.num_queries, d, self.group_factor))
        self.group_bias = nn.Parameter(torch.zeros(self.num_queries * self.group_factor))
        init_tag_logits(self.group_weight, self.group_bias)

    def forward(self, global_embedding: torch.Tensor | None, spatial: torch.Tensor) -> torch.Tensor:
        """spatial: (batch, S, width) -> logits (batch, C)."""
        if spatial.ndim != 3 or spatial.shape[1] < 1:
            raise ValueError(f"Expected spatial embeddings (batch, S>=1, width), got {tuple(spatial.shape)}")
        if not torch.isfinite(spatial).all():
            raise ValueError("Spatial embeddings contain non-finite values")

        memory = self.embed_spatial(spatial)
        q = self.queries.to(memory.dtype).expand(spatial.shape[0], -1, -1)
        h = q + self.cross_attn(q, context=memory)
        h = self.norm(h + self.ffn(h))
        logits = torch.einsum("bkd,kdg->bkg", h, self.group_weight).flatten(1) + self.group_bias
        return logits[:, :self.num_classes]


class ClsHead(nn.Module):
    def __init__(self, width: int, num_classes: int):
        super().__init__()
        self.num_classes = num_classes
        self.fc = nn.Linear(width, num_classes)
        init_tag_logits(self.fc.weight, self.fc.bias)

    def forward(self, global_embedding: torch.Tensor, spatial: torch.Tensor | None = None) -> torch.Tensor:
        if not torch.isfinite(global_embedding).all():
            raise ValueError("Global embedding contains non-finite values")
        return self.fc(global_embedding)


def build_head(width: int, num_classes: int, cfg: RecognitionHeadConfig) -> nn.Module:
    if cfg.kind == "cls":
        return ClsHead(width, num_classes)
    return GroupDecoderHead(width, num_classes, cfg)


def recognition_head(spatial: torch.Tensor, head: GroupDecoderHead) -> torch.Tensor:
    """Tag logits for one (S, width) matrix or a (batch, S, width) batch."""
    if spatial.ndim == 2:
        return head(None, spatial[None])[0]
    return head(None, spatial)
