"""Checkpoint archives: parameters, optimizer state, config and RNG state."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import torch

from models.train_config import TrainConfig

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1

# Config keys that change parameter shapes or the meaning of the class axis
_STRUCTURAL_SECTIONS = ("encoder", "head")


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    config: TrainConfig
    state_dict: dict
    step: int
    vocab: list[str]
    class_names: list[str]
    optimizer: dict | None = None
    pseudo_bank: dict[str, list[int]] = field(default_factory=dict)
    torch_rng_state: torch.Tensor | None = None
    # corrected targets and record rows seen so far in the epoch the step falls in
    epoch_tally: dict | None = None


def save_checkpoint(path: str, model: torch.nn.Module, cfg: TrainConfig, step: int,
                    vocab: list[str], class_names: list[str], optimizer=None,
                    pseudo_bank: dict[str, list[int]] | None = None, epoch_tally: dict | None = None):
    """Write a checkpoint archive at `path`; `step` is the number of completed optimizer steps."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    archive = {
        "version": CHECKPOINT_VERSION,
        "config": cfg.to_dict(),
        "state_dict": {k: v.detach().clone() for k, v in model.state_dict().items()},
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
        "step": int(step),
        "vocab": list(vocab),
        "class_names": list(class_names),
        "pseudo_bank": dict(pseudo_bank or {}),
        "torch_rng_state": torch.get_rng_state(),
        "epoch_tally": epoch_tally,
    }
    torch.save(archive, path)
    logger.info(f"Saved checkpoint at step {step} to {path}")


def load_checkpoint(path: str, expected_classes: int | None = None,
                    expected_config: TrainConfig | None = None) -> Checkpoint:
    """Read a checkpoint, checking format version and, when given, class count and model geometry."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    archive = torch.load(path, map_location="cpu", weights_only=False)

    version = archive.get("version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})")

    class_names = archive["class_names"]
    if expected_classes is not None and len(class_names) != expected_classes:
        raise CheckpointError(
            f"Checkpoint has {len(class_names)} classes but the lexicon has {expected_classes}"
        )

    cfg = TrainConfig.from_dict(archive["config"])
    if expected_config is not None:
        saved, wanted = cfg.to_dict(), expected_config.to_dict()
        for section in _STRUCTURAL_SECTIONS:
            if saved[section] != wanted[section]:
                raise CheckpointError(
                    f"Checkpoint {section} config {saved[section]} does not match {wanted[section]}"
                )

    logger.info(f"Loaded checkpoint at step {archive['step']} from {path}")
    return Checkpoint(
        config=cfg,
        state_dict=archive["state_dict"],
        step=archive["step"],
        vocab=archive["vocab"],
        class_names=class_names,
        optimizer=archive.get("optimizer"),
        pseudo_bank=archive.get("pseudo_bank") or {},
        torch_rng_state=archive.get("torch_rng_state"),
        epoch_tally=archive.get("epoch_tally"),
    )
