"""Batched frozen-model inference over records and texts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from models.record import ImageTextRecord
from network.image_encoder import images_to_tensor
from network.joint_model import TagAlignModel
from network.text_vocab import TextVocab, text_batch

EVAL_BATCH_SIZE = 64


@dataclass
class ImageInference:
    embeddings: torch.Tensor  # (N, proj_dim), unit rows
    probs: np.ndarray  # (N, C) tag probabilities


def _batches(n: int, size: int):
    for start in range(0, n, size):
        yield slice(start, min(n, start + size))


@torch.no_grad()
def infer_images(model: TagAlignModel, records: Sequence[ImageTextRecord],
                 batch_size: int = EVAL_BATCH_SIZE) -> ImageInference:
    was_training = model.training
    model.eval()
    dtype = next(model.parameters()).dtype
    embeddings, probs = [], []
    for batch in _batches(len(records), batch_size):
        images = images_to_tensor([r.load_image() for r in records[batch]], dtype=dtype)
        encoded = model.encode_images(images)
        embeddings.append(model.image_embeddings(encoded))
        probs.append(torch.sigmoid(model.tag_logits(encoded)).double().numpy())
    model.train(was_training)
    if not embeddings:
        raise ValueError("No records to run inference on")
    return ImageInference(embeddings=torch.cat(embeddings), probs=np.concatenate(probs))


@torch.no_grad()
def infer_texts(model: TagAlignModel, vocab: TextVocab, texts: Sequence[str],
                batch_size: int = EVAL_BATCH_SIZE) -> torch.Tensor:
    """Unit text embeddings, one row per text."""
    max_len = model.text_encoder.cfg.text_max_len
    was_training = model.training
    model.eval()
    out = []
    for batch in _batches(len(texts), batch_size):
        ids, mask = text_batch([vocab.encode(t, max_len) for t in texts[batch]], max_len)
        out.append(model.text_embeddings(ids, mask))
    model.train(was_training)
    if not out:
        raise ValueError("No texts to encode")
    return torch.cat(out)


def retrieval_top1(image_embeddings: torch.Tensor, text_embeddings: torch.Tensor) -> tuple[float, float]:
    """(image->text, text->image) top-1 accuracy where pair i is the positive of row i."""
    sims = image_embeddings @ text_embeddings.T
    target = torch.arange(sims.shape[0])
    i2t = (sims.argmax(dim=1) == target).double().mean().item()
    t2i = (sims.argmax(dim=0) == target).double().mean().item()
    return i2t, t2i
