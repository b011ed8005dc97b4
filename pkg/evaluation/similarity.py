"""Distribution of image-text cosine similarities."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch

import config
from evaluation.inference import infer_images, infer_texts

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimilarityHistogram:
    bin_edges: np.ndarray  # bins + 1 edges over [-1, 1]
    counts: np.ndarray  # matched pairs per bin
    matched_median: float
    mismatched_median: float | None  # None with a single pair

    @property
    def bin_left(self) -> np.ndarray:
        return self.bin_edges[:-1]


def _numpy(x) -> np.ndarray:
    if isinstance(x, torch.Tensor):
        x = x.detach().cpu().double().numpy()
    return np.asarray(x, dtype=np.float64)


def similarity_histogram(image_embeddings, text_embeddings, bins: int = config.HISTOGRAM_BINS) -> SimilarityHistogram:
    """Histogram of matched (row i, row i) cosine similarities plus matched/mismatched medians."""
    z_img, z_txt = _numpy(image_embeddings), _numpy(text_embeddings)
    if z_img.shape != z_txt.shape or z_img.ndim != 2:
        raise ValueError(f"Embeddings must be matching N x D arrays, got {z_img.shape} and {z_txt.shape}")

    sims = np.clip(z_img @ z_txt.T, -1.0, 1.0)
    matched = np.diag(sims)
    off_diagonal = sims[~np.eye(len(sims), dtype=bool)]
    counts, edges = np.histogram(matched, bins=bins, range=(-1.0, 1.0))

    mismatched_median = float(np.median(off_diagonal)) if off_diagonal.size else None
    logger.debug(f"Similarity medians: matched {np.median(matched):.4f}, mismatched {mismatched_median}")
    return SimilarityHistogram(
        bin_edges=edges,
        counts=counts,
        matched_median=float(np.median(matched)),
        mismatched_median=mismatched_median,
    )


def similarity_distribution(records, model, vocab, bins: int = config.HISTOGRAM_BINS) -> SimilarityHistogram:
    """Embed every (image, caption) record with `model` and histogram the pair similarities."""
    z_img = infer_images(model, records).embeddings
    z_txt = infer_texts(model, vocab, [r.caption for r in records])
    return similarity_histogram(z_img, z_txt, bins)
