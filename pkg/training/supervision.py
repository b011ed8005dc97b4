"""Tag2Text composition, caption concatenation and ITC target construction."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import torch

from models.lexicon import TagLexicon
from models.tags import TagVector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TagTextPair:
    original_text: str  # T
    tag2text: str  # T_tag, possibly empty
    combined: str  # T' = T + " " + T_tag


def _bits(vector) -> np.ndarray:
    if isinstance(vector, TagVector):
        return vector.bits
    if isinstance(vector, torch.Tensor):
        vector = vector.detach().cpu().numpy()
    return np.asarray(vector).round().astype(np.uint8)


def compose_tag2text(original, corrected, lexicon: TagLexicon, retain_original: bool = True,
                     removed_top: Iterable[str] = ()) -> str:
    """Space-joined tag names once SPLC has added pseudo positives, else "".

    Names come out in lexicon order. Names in `removed_top` are never emitted.
    """
    original_bits = _bits(original)
    corrected_bits = _bits(corrected)
    if np.any(original_bits > corrected_bits):
        raise ValueError("Corrected tags must be a superset of the original tags")

    pseudo = (corrected_bits == 1) & (original_bits == 0)
    if not pseudo.any():
        return ""

    chosen = pseudo | (original_bits == 1) if retain_original else pseudo
    skip = set(removed_top)
    names = [lexicon.entries[i].name for i in np.flatnonzero(chosen)]
    return " ".join(name for name in names if name not in skip)


def concat_text(original_text: str, tag2text: str) -> TagTextPair:
    combined = f"{original_text} {tag2text}" if tag2text else original_text
    return TagTextPair(original_text=original_text, tag2text=tag2text, combined=combined)


def build_itc_targets(batch_size: int, pseudo_mask, extra_columns: bool = False) -> torch.Tensor:
    """Row-normalized ITC targets.

    Default: the M x M identity, one combined text per image. With
    `extra_columns`, each sample whose mask is set also owns an extra column
    (its Tag2Text as a separate text) appended after the M caption columns.
    """
    mask = np.asarray(
        pseudo_mask.detach().cpu().numpy() if isinstance(pseudo_mask, torch.Tensor) else pseudo_mask,
        dtype=bool,
    )
    if mask.shape != (batch_size,):
        raise ValueError(f"pseudo_mask has shape {mask.shape}, expected ({batch_size},)")
    logger.debug(f"ITC targets: {int(mask.sum())} of {batch_size} samples carry Tag2Text")

    if not extra_columns:
        return torch.eye(batch_size)

    owners = np.flatnonzero(mask)
    targets = torch.zeros(batch_size, batch_size + len(owners))
    targets[:, :batch_size] = torch.eye(batch_size)
    for column, owner in enumerate(owners, batch_size):
        targets[owner, column] = 1.0
    return targets / targets.sum(dim=1, keepdim=True)
