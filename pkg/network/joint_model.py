"""Dual-encoder model with recognition head, projectors and learnable temperature."""

from __future__ import annotations

import math

import torch
import torch.nn as nn

from models.train_config import TrainConfig
from network.image_encoder import EncoderOutput, ImageEncoder
from network.projector import Projector, project_and_normalize
from network.recognition_head import build_head
from network.text_encoder import TextEncoder


class TagAlignModel(nn.Module):
    def __init__(self, cfg: TrainConfig, num_classes: int, vocab_size: int):
        super().__init__()
        enc = cfg.encoder
        self.num_classes = num_classes
        self.image_encoder = ImageEncoder(enc)
        self.text_encoder = TextEncoder(enc, vocab_size)
        self.head = build_head(enc.width, num_classes, cfg.head)
        self.image_proj = Projector(enc.width, enc.proj_dim)
        self.text_proj = Projector(enc.width, enc.proj_dim)

        hyper = cfg.hyper
        self.log_temp_bounds = (math.log(hyper.temperature_min), math.log(hyper.temperature_max))
        self.log_temperature = nn.Parameter(torch.tensor(math.log(hyper.temperature_init)))

    @property
    def temperature(self) -> torch.Tensor:
        return self.log_temperature.clamp(*self.log_temp_bounds).exp()

    def encode_images(self, images: torch.Tensor) -> EncoderOutput:
        return self.image_encoder(images)

    def tag_logits(self, encoded: EncoderOutput) -> torch.Tensor:
        return self.head(encoded.global_embedding, encoded.spatial)

    def image_embeddings(self, encoded: EncoderOutput) -> torch.Tensor:
        return project_and_normalize(encoded.global_embedding, self.image_proj)

    def text_embeddings(self, ids: torch.Tensor, padding_mask: torch.Tensor) -> torch.Tensor:
        return project_and_normalize(self.text_encoder(ids, padding_mask), self.text_proj)
