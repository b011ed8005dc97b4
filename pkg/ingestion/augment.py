"""Image augmentation hooks.

Only geometric transforms are applied: colour carries tag information, so
colour jitter is never used. New hooks can be registered by name and selected
with the `augment_mode` config key.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

import config

AugmentFn = Callable[[np.ndarray, int], np.ndarray]


def hflip(image: np.ndarray) -> np.ndarray:
    return image[:, ::-1].copy()


def random_crop(image: np.ndarray, rng: np.random.Generator, pad: int = config.CROP_PAD) -> np.ndarray:
    """Reflect-pad by `pad` pixels and crop back to the original size at a random offset."""
    h, w = image.shape[:2]
    padded = np.pad(image, ((pad, pad), (pad, pad), (0, 0)), mode="reflect")
    top, left = rng.integers(0, 2 * pad + 1, size=2)
    return padded[top:top + h, left:left + w].copy()


def _identity(image: np.ndarray, seed: int) -> np.ndarray:
    return image


def _flip_crop(image: np.ndarray, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if rng.random() < 0.5:
        image = hflip(image)
    return random_crop(image, rng)


_HOOKS: dict[str, AugmentFn] = {
    "identity": _identity,
    "flip_crop": _flip_crop,
}


def register_augmentation(name: str, fn: AugmentFn, label: str = ""):
    """Make `fn` selectable as augment_mode=`name`."""
    _HOOKS[name] = fn
    config.AUGMENTATIONS[name] = {"label": label or name}


def augment(image: np.ndarray, seed: int, mode: str = config.DEFAULT_AUGMENTATION) -> np.ndarray:
    """Apply the named augmentation deterministically for `seed`; shape and [0, 1] range are preserved."""
    fn = _HOOKS.get(mode)
    if fn is None:
        raise ValueError(f"Unknown augmentation: {mode}")
    out = fn(image, seed)
    if out is image:
        return image
    if out.shape != image.shape:
        raise ValueError(f"Augmentation {mode} changed shape {image.shape} -> {out.shape}")
    return np.clip(out, 0.0, 1.0)


def augment_seed(seed: int, epoch: int, index: int) -> int:
    """Per-sample augmentation seed derived from the run seed, epoch and record position."""
    return int(np.random.SeedSequence([seed, epoch, index]).generate_state(1)[0])
