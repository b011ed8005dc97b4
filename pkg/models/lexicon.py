"""Tag vocabulary data model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class BaseVocabEntry:
    name: str
    # Compound tags that have a hypernym in the base vocabulary are not used
    has_hypernym: bool = False


@dataclass(frozen=True)
class LexiconEntry:
    name: str  # lowercase, single-spaced
    frequency: int  # number of training captions the tag matched
    class_index: int

    @property
    def is_compound(self) -> bool:
        return " " in self.name


@dataclass(frozen=True)
class TagLexicon:
    """The C-class tag list, ordered by name so class indices are reproducible."""

    entries: tuple[LexiconEntry, ...]
    removed_top: tuple[str, ...] = ()
    source_vocab_size: int = 0

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("Lexicon entry names must be unique")
        if names != sorted(names):
            raise ValueError("Lexicon entries must be sorted by name")
        if [e.class_index for e in self.entries] != list(range(len(self.entries))):
            raise ValueError("Lexicon class indices must be contiguous from 0")
        clash = set(names) & set(self.removed_top)
        if clash:
            raise ValueError(f"Removed tags still present in lexicon: {sorted(clash)}")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([e.frequency for e in self.entries], dtype=np.int64)

    def index_of(self, name: str) -> int | None:
        for entry in self.entries:
            if entry.name == name:
                return entry.class_index
        return None

    @classmethod
    def from_frequencies(cls, frequencies: dict[str, int],
                         removed_top: tuple[str, ...] = (),
                         source_vocab_size: int = 0) -> TagLexicon:
        """Build a lexicon from {name: frequency}, assigning indices in name order."""
        entries = tuple(
            LexiconEntry(name=name, frequency=int(freq), class_index=i)
            for i, (name, freq) in enumerate(sorted(frequencies.items()))
        )
        return cls(entries=entries, removed_top=tuple(removed_top), source_vocab_size=source_vocab_size)


@dataclass(frozen=True)
class ClassWeights:
    # One positive weight per class, w_i proportional to 1/sqrt(frequency_i), mean 1
    weights: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.weights)
