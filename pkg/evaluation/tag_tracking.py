"""Precision and recall of pseudo tags identified online."""

from __future__ import annotations

import numpy as np


def _as_bool(x) -> np.ndarray:
    if hasattr(x, "detach"):
        x = x.detach().cpu().numpy()
    return np.asarray(x) > 0.5


def tag_pr_online(corrected_targets, extracted_targets, full_ground_truth) -> tuple[float | None, float]:
    """(precision, recall) of the bits added on top of the extracted tags.

    Precision is None when no pseudo tags were added; recall is 0 when nothing
    was recovered or nothing was missing.
    """
    corrected = _as_bool(corrected_targets)
    extracted = _as_bool(extracted_targets)
    full = _as_bool(full_ground_truth)
    if not corrected.shape == extracted.shape == full.shape:
        raise ValueError("Corrected, extracted and ground-truth targets must have the same shape")

    pseudo = corrected & ~extracted
    missing = full & ~extracted
    hits = int((pseudo & missing).sum())
    n_pseudo, n_missing = int(pseudo.sum()), int(missing.sum())

    precision = hits / n_pseudo if n_pseudo else None
    recall = hits / n_missing if n_missing else 0.0
    return precision, recall
