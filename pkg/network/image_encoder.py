"""Vision transformer image encoder producing global and spatial embeddings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
from einops.layers.torch import Rearrange

from models.train_config import EncoderConfig
from network.layers import Transformer


@dataclass
class EncoderOutput:
    global_embedding: torch.Tensor  # v_cls, (width,) or (batch, width)
    spatial: torch.Tensor  # v_1..v_S, (S, width) or (batch, S, width)


class ImageEncoder(nn.Module):
    def __init__(self, cfg: EncoderConfig, dropout: float = 0.0):
        super().__init__()
        self.cfg = cfg
        patch_dim = 3 * cfg.patch_size * cfg.patch_size

        self.to_patch_embedding = nn.Sequential(
            Rearrange("b c (h p1) (w p2) -> b (h w) (p1 p2 c)", p1=cfg.patch_size, p2=cfg.patch_size),
            nn.Linear(patch_dim, cfg.width),
        )
        self.cls_token = nn.Parameter(torch.randn(1, 1, cfg.width) * 0.02)
        self.pos_embedding = nn.Parameter(torch.randn(1, cfg.num_patches + 1, cfg.width) * 0.02)
        self.transformer = Transformer(
            cfg.width, cfg.depth, cfg.heads, mlp_dim=cfg.width * cfg.mlp_ratio, dropout=dropout
        )

    def forward(self, images: torch.Tensor) -> EncoderOutput:
        """images: (batch, 3, H, W) in [0, 1]."""
        expected = (3, self.cfg.image_size, self.cfg.image_size)
        if images.ndim != 4 or tuple(images.shape[1:]) != expected:
            raise ValueError(f"Expected images of shape (batch, *{expected}), got {tuple(images.shape)}")

        x = self.to_patch_embedding(images)
        cls = self.cls_token.expand(x.shape[0], -1, -1)
        x = torch.cat([cls, x], dim=1) + self.pos_embedding
        x = self.transformer(x)
        return EncoderOutput(global_embedding=x[:, 0], spatial=x[:, 1:])


def images_to_tensor(images: Sequence[np.ndarray], dtype=torch.float32) -> torch.Tensor:
    """Stack H x W x 3 arrays into a (batch, 3, H, W) tensor."""
    batch = np.stack([np.asarray(img, dtype=np.float32) for img in images])
    return torch.from_numpy(batch).permute(0, 3, 1, 2).contiguous().to(dtype)


@torch.no_grad()
def encode_image(image: np.ndarray, encoder: ImageEncoder) -> EncoderOutput:
    """Encode one H x W x 3 image with frozen parameters."""
    size = encoder.cfg.image_size
    image = np.asarray(image)
    if image.shape != (size, size, 3):
        raise ValueError(f"Expected image of shape {(size, size, 3)}, got {image.shape}")

    was_training = encoder.training
    encoder.eval()
    dtype = next(encoder.parameters()).dtype
    out = encoder(images_to_tensor([image], dtype=dtype))
    encoder.train(was_training)

    if not (torch.isfinite(out.global_embedding).all() and torch.isfinite(out.spatial).all()):
        raise FloatingPointError("Image encoder produced non-finite embeddings")
    return EncoderOutput(global_embedding=out.global_embedding[0], spatial=out.spatial[0])
