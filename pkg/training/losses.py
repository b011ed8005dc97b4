"""Training objectives: re-weighted multi-label loss (BCE / SPLC) and the KL image-text contrastive loss.

Sign convention: `bce_terms` and `splc_correct` return the signed log terms
(log p, log(1-p)); the minus sign is applied once when the terms are summed in
`mlr_loss`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

import config
from models.lexicon import ClassWeights
from models.train_config import Hyperparams

logger = logging.getLogger(__name__)

UNIT_NORM_TOL = 1e-3


@dataclass
class MLRLossReport:
    loss: torch.Tensor
    corrected_targets: torch.Tensor  # (batch, C), superset of the input targets
    pseudo_mask: torch.Tensor  # (batch,) True when SPLC added a positive for the sample
    pseudo_count: int


@dataclass
class SimilarityMatrix:
    s_i2t: torch.Tensor  # (M, N) dot products
    s_t2i: torch.Tensor  # (N, M) transpose of s_i2t
    p_i2t: torch.Tensor
    p_t2i: torch.Tensor
    y_i2t: torch.Tensor  # target row distributions
    y_t2i: torch.Tensor
    log_p_i2t: torch.Tensor
    log_p_t2i: torch.Tensor


def sigmoid_probs(logits: torch.Tensor) -> torch.Tensor:
    return torch.sigmoid(logits)


def bce_terms(p: torch.Tensor, y: torch.Tensor, eps: float = config.LOG_EPS) -> torch.Tensor:
    """log(p) where y = 1 and log(1 - p) where y = 0."""
    pos = torch.log(p.clamp(min=eps))
    neg = torch.log((1.0 - p).clamp(min=eps))
    return y * pos + (1.0 - y) * neg


def splc_correct(p: torch.Tensor, y: torch.Tensor, tau: float, epoch: int, changing_epoch: int,
                 eps: float = config.LOG_EPS) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Self-paced loss correction.

    From `changing_epoch` on, a negative with p > tau takes the positive term
    log(p) and its target bit becomes 1. p == tau stays negative.
    Returns (terms, corrected_targets, pseudo_mask).
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    y = y.to(p.dtype)
    if epoch < changing_epoch:
        return bce_terms(p, y, eps), y.clone(), torch.zeros(y.shape[:-1], dtype=torch.bool)

    flip = (y == 0) & (p.detach() > tau)
    corrected = torch.where(flip, torch.ones_like(y), y)
    return bce_terms(p, corrected, eps), corrected, flip.any(dim=-1)


def mlr_loss(logits: torch.Tensor, targets: torch.Tensor, weights: ClassWeights | np.ndarray | torch.Tensor,
             hyper: Hyperparams, epoch: int) -> MLRLossReport:
    """L_mlr = -sum_i w_i (y_i L+ + (1 - y_i) L-), reduced over the batch by `hyper.reduction`."""
    w = weights.weights if isinstance(weights, ClassWeights) else weights
    w = torch.as_tensor(w, dtype=logits.dtype, device=logits.device)
    if logits.shape[-1] != w.shape[0]:
        raise ValueError(f"Logits have {logits.shape[-1]} classes but weights have {w.shape[0]}")
    if logits.shape != targets.shape:
        raise ValueError(f"Logits shape {tuple(logits.shape)} does not match targets {tuple(targets.shape)}")

    targets = targets.to(logits.dtype)
    p = sigmoid_probs(logits)
    terms, corrected, pseudo_mask = splc_correct(p, targets, hyper.tau, epoch, hyper.changing_epoch)
    per_sample = -(w * terms).sum(dim=-1)
    loss = per_sample.sum() if hyper.reduction == "sum" else per_sample.mean()

    pseudo_count = int((corrected - targets).sum().item())
    return MLRLossReport(loss=loss, corrected_targets=corrected.detach(), pseudo_mask=pseudo_mask,
                         pseudo_count=pseudo_count)


def itc_similarities(z_img: torch.Tensor, z_txt: torch.Tensor, temperature,
                     targets: torch.Tensor | None = None) -> SimilarityMatrix:
    """Temperature-scaled image/text similarities with row-softmax probabilities.

    `targets` is an (M, N) non-negative matrix; it defaults to the identity
    (each image's positive is its own text). Rows of both target directions are
    normalized into distributions.
    """
    temperature = torch.as_tensor(temperature, dtype=z_img.dtype)
    if temperature.item() <= 0:
        raise ValueError(f"Temperature must be positive, got {temperature.item()}")
    for name, z in (("image", z_img), ("text", z_txt)):
        if (z.norm(dim=-1) - 1.0).abs().max() > UNIT_NORM_TOL:
            raise ValueError(f"{name} embeddings must have unit-norm rows")

    if targets is None:
        if z_img.shape[0] != z_txt.shape[0]:
            raise ValueError("Default identity targets need as many texts as images")
        targets = torch.eye(z_img.shape[0], dtype=z_img.dtype)
    targets = targets.to(z_img.dtype)
    if (targets.sum(dim=1) <= 0).any() or (targets.sum(dim=0) <= 0).any():
        raise ValueError("Every image and every text needs at least one positive target")

    s_i2t = z_img @ z_txt.T
    s_t2i = s_i2t.T
    log_p_i2t = F.log_softmax(s_i2t / temperature, dim=1)
    log_p_t2i = F.log_softmax(s_t2i / temperature, dim=1)
    return SimilarityMatrix(
        s_i2t=s_i2t,
        s_t2i=s_t2i,
        p_i2t=log_p_i2t.exp(),
        p_t2i=log_p_t2i.exp(),
        y_i2t=targets / targets.sum(dim=1, keepdim=True),
        y_t2i=targets.T / targets.T.sum(dim=1, keepdim=True),
        log_p_i2t=log_p_i2t,
        log_p_t2i=log_p_t2i,
    )


def _kl_rows(y: torch.Tensor, log_p: torch.Tensor, eps: float) -> torch.Tensor:
    """Mean over rows of KL(y || p)."""
    log_p = log_p.clamp(min=math.log(eps))
    return (torch.xlogy(y, y) - y * log_p).sum(dim=1).mean()


def itc_loss(sim: SimilarityMatrix, eps: float = config.LOG_EPS) -> torch.Tensor:
    """L_itc = (KL(y_i2t || p_i2t) + KL(y_t2i || p_t2i)) / 2."""
    return 0.5 * (_kl_rows(sim.y_i2t, sim.log_p_i2t, eps) + _kl_rows(sim.y_t2i, sim.log_p_t2i, eps))


def total_loss(mlr, itc, mlr_weight: float = 1.0):
    """L = L_mlr + L_itc. `mlr_weight` != 1 is a diagnostic knob only."""
    return mlr_weight * mlr + itc
