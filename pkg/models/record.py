"""Image-text pair data model."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image


@dataclass
class ImageTextRecord:
    id: str
    caption: str = ""
    image: np.ndarray | None = field(default=None, repr=False)  # H x W x 3 in [0, 1]
    image_path: str | None = None
    image_size: int | None = None  # resize target applied on lazy load
    full_tags: list[str] | None = None  # complete ground truth, synthetic data only
    label: str | None = None  # primary concept, used for zero-shot sets

    def load_image(self) -> np.ndarray:
        """Return the image as float32 H x W x 3, reading it from disk on first use."""
        if self.image is not None:
            return self.image
        if not self.image_path:
            raise ValueError(f"Record {self.id} has neither pixels nor an image path")
        if not os.path.exists(self.image_path):
            raise FileNotFoundError(f"Image for record {self.id} not found: {self.image_path}")
        with Image.open(self.image_path) as img:
            img = img.convert("RGB")
            if self.image_size and img.size != (self.image_size, self.image_size):
                img = img.resize((self.image_size, self.image_size), Image.BILINEAR)
            self.image = np.asarray(img, dtype=np.float32) / 255.0
        return self.image
