"""Tag vectors and normalized caption text."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class TagSource(str, Enum):
    EXTRACTED = "extracted"
    CORRECTED = "corrected"


@dataclass(frozen=True)
class NormalizedText:
    tokens: tuple[str, ...]
    lemmas: tuple[str, ...]  # index-aligned with tokens

    @property
    def joined(self) -> str:
        return " ".join(self.tokens)


@dataclass
class TagVector:
    """Binary label vector y over the C lexicon classes."""

    bits: np.ndarray = field(repr=False)
    source: TagSource = TagSource.EXTRACTED

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.bits.ndim != 1:
            raise ValueError(f"TagVector must be 1-D, got shape {self.bits.shape}")
        if np.any(self.bits > 1):
            raise ValueError("TagVector entries must be 0 or 1")

    def __len__(self) -> int:
        return len(self.bits)

    def __eq__(self, other):
        if not isinstance(other, TagVector):
            return False
        return np.array_equal(self.bits, other.bits)

    @property
    def indices(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.bits)]

    def names(self, class_names: list[str]) -> list[str]:
        return [class_names[i] for i in self.indices]

    def with_pseudo(self, corrected) -> TagVector:
        """Union with loss-corrected targets, marked as CORRECTED."""
        corrected = np.asarray(corrected, dtype=np.float64).round().astype(np.uint8)
        if corrected.shape != self.bits.shape:
            raise ValueError(f"Corrected targets have shape {corrected.shape}, expected {self.bits.shape}")
        return TagVector(self.bits | corrected, TagSource.CORRECTED)

    @classmethod
    def zeros(cls, num_classes: int) -> TagVector:
        return cls(np.zeros(num_classes, dtype=np.uint8))

    @classmethod
    def from_names(cls, names, class_names: list[str], ignore_unknown: bool = False) -> TagVector:
        """Vector with the named classes set; names outside `class_names` raise unless `ignore_unknown`."""
        lookup = {name: i for i, name in enumerate(class_names)}
        bits = np.zeros(len(class_names), dtype=np.uint8)
        for name in names:
            if name not in lookup:
                if ignore_unknown:
                    continue
                raise ValueError(f"Unknown tag name: {name!r}")
            bits[lookup[name]] = 1
        return cls(bits)
