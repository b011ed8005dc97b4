"""Analytic FLOP counts for the image encoder and the recognition head.

Only matrix products are counted (linear maps and attention products);
norms, softmax, activations and residual adds are ignored. Counts are in
multiply-accumulates scaled by `flops_per_mac`.
"""

from __future__ import annotations

from dataclasses import dataclass

import config
from models.train_config import EncoderConfig, RecognitionHeadConfig


@dataclass(frozen=True)
class FlopEstimate:
    encoder_gflops: float
    head_gflops: float
    overhead_percent: float  # head relative to encoder


def macs_matmul(m: int, n: int, p: int) -> int:
    return m * n * p


def macs_attention(q_len: int, kv_len: int, dim: int, context_dim: int | None = None) -> int:
    context_dim = context_dim or dim
    macs = 0
    macs += macs_matmul(q_len, dim, dim)  # Q
    macs += 2 * macs_matmul(kv_len, context_dim, dim)  # K, V
    macs += macs_matmul(q_len, dim, kv_len)  # QK^T
    macs += macs_matmul(q_len, kv_len, dim)  # AV
    macs += macs_matmul(q_len, dim, dim)  # out
    return macs


def macs_mlp(seq_len: int, dim: int, hidden_dim: int) -> int:
    return 2 * macs_matmul(seq_len, dim, hidden_dim)


def encoder_macs(cfg: EncoderConfig) -> int:
    seq_len = cfg.num_patches + 1
    patch_dim = 3 * cfg.patch_size ** 2
    macs = macs_matmul(cfg.num_patches, patch_dim, cfg.width)
    block = macs_attention(seq_len, seq_len, cfg.width) + macs_mlp(seq_len, cfg.width, cfg.mlp_ratio * cfg.width)
    return macs + cfg.depth * block


def head_macs(enc: EncoderConfig, head: RecognitionHeadConfig, num_classes: int) -> int:
    if head.kind == "cls":
        return macs_matmul(1, enc.width, num_classes)

    k = head.resolved_queries(num_classes)
    d = head.decoder_dim
    s = enc.num_patches
    macs = macs_matmul(s, enc.width, d)  # spatial embedding
    macs += macs_attention(k, s, d)
    macs += macs_mlp(k, d, head.decoder_ff)
    macs += macs_matmul(k, d, head.group_factor)  # group fully connected pooling
    return macs


def flop_estimate(encoder_config: EncoderConfig, head_config: RecognitionHeadConfig,
                  num_classes: int = config.VITB16_NUM_CLASSES,
                  flops_per_mac: int = config.FLOPS_PER_MAC) -> FlopEstimate:
    """(encoder GFLOPs, head GFLOPs, head overhead in percent of the encoder)."""
    encoder = encoder_macs(encoder_config) * flops_per_mac / 1e9
    head = head_macs(encoder_config, head_config, num_classes) * flops_per_mac / 1e9
    return FlopEstimate(encoder_gflops=encoder, head_gflops=head, overhead_percent=100.0 * head / encoder)
