"""Learning-rate schedule: linear warmup then cosine decay to min_lr."""

import math


def lr_at(step: int, total_steps: int, max_lr: float, min_lr: float = 0.0, warmup_steps: int = 0) -> float:
    """Learning rate for 0-based `step` of a run with `total_steps` optimizer steps."""
    if total_steps < 1:
        raise ValueError(f"total_steps must be >= 1, got {total_steps}")
    if warmup_steps and step < warmup_steps:
        return max_lr * (step + 1) / warmup_steps

    decay_steps = max(1, total_steps - warmup_steps)
    progress = min(1.0, (step - warmup_steps) / decay_steps)
    return min_lr + 0.5 * (max_lr - min_lr) * (1.0 + math.cos(math.pi * progress))


def set_lr(optimizer, lr: float):
    for group in optimizer.param_groups:
        group["lr"] = lr
