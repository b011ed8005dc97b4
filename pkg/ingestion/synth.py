"""Synthetic image-caption fixtures with planted missing tags.

Every lexicon class gets a unique (shape, colour) glyph. An image shows 2-4
classes, one per quadrant; its caption names only part of them, so the
complete ground truth (`full_tags`) is known while the caption-derived tags
are incomplete. Captions are checked against the tagger so the tags
extracted from a caption are exactly the classes it names.
"""

from __future__ import annotations

import colorsys
import logging
import math

import numpy as np

import config
from models.lexicon import TagLexicon
from models.record import ImageTextRecord
from tagging.lexicon_builder import read_base_vocab
from tagging.tagger import TagMatcher, tag_matrix
from tagging.text import normalize_name

logger = logging.getLogger(__name__)

SHAPES = ("square", "circle", "triangle", "cross", "ring", "diamond")
ARTICLES = ("a", "the")
MAX_ATTEMPTS = 50


def concept_style(index: int, num_classes: int) -> tuple[str, tuple[float, float, float]]:
    """Shape and RGB colour of the glyph drawn for class `index`."""
    shape = SHAPES[index % len(SHAPES)]
    n_hues = max(1, math.ceil(num_classes / len(SHAPES)))
    hue = (index // len(SHAPES)) / n_hues
    return shape, colorsys.hsv_to_rgb(hue, 0.85, 1.0)


def glyph_mask(shape: str, size: int) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    c = (size - 1) / 2.0
    dy, dx = yy - c, xx - c
    r = size / 2.0
    if shape == "square":
        return np.ones((size, size), dtype=bool)
    if shape == "circle":
        return dy ** 2 + dx ** 2 <= r ** 2
    if shape == "ring":
        d2 = dy ** 2 + dx ** 2
        return (d2 <= r ** 2) & (d2 >= (0.55 * r) ** 2)
    if shape == "triangle":
        return np.abs(dx) <= (yy + 1) / 2.0
    if shape == "cross":
        band = max(1, size // 6)
        return (np.abs(dy) <= band) | (np.abs(dx) <= band)
    if shape == "diamond":
        return np.abs(dy) + np.abs(dx) <= r
    raise ValueError(f"Unknown glyph shape: {shape}")


def render_concepts(concepts, num_classes: int, image_size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw up to four class glyphs, one per image quadrant, on a dark noisy canvas."""
    image = rng.uniform(0.0, 0.08, size=(image_size, image_size, 3)).astype(np.float32)
    cell = image_size // 2
    glyph = max(3, (cell * 3) // 4)
    quadrants = rng.permutation(4)[:len(concepts)]

    for concept, quadrant in zip(concepts, quadrants):
        shape, colour = concept_style(int(concept), num_classes)
        mask = glyph_mask(shape, glyph)
        top = (quadrant // 2) * cell + int(rng.integers(0, cell - glyph + 1))
        left = (quadrant % 2) * cell + int(rng.integers(0, cell - glyph + 1))
        region = image[top:top + glyph, left:left + glyph]
        region[mask] = np.asarray(colour, dtype=np.float32)
    return image


def _compose_caption(names: list[str], connectors: list[str], rng: np.random.Generator) -> str:
    words = []
    for i, name in enumerate(names):
        if i:
            words.append(str(rng.choice(connectors)))
        words.append(str(rng.choice(ARTICLES)))
        words.append(name)
    return " ".join(words)


def synth_fixture(seed: int, n_pairs: int, lexicon: TagLexicon, missing_rate: float,
                  image_size: int = 64,
                  min_concepts: int = config.SYNTH_MIN_CONCEPTS,
                  max_concepts: int = config.SYNTH_MAX_CONCEPTS) -> list[ImageTextRecord]:
    """Generate `n_pairs` records; each caption names round((1 - missing_rate) * k) of its k classes (at least one)."""
    num_classes = len(lexicon)
    if num_classes < 4:
        raise ValueError(f"Synthetic fixtures need a lexicon of at least 4 classes, got {num_classes}")
    if not 0.0 <= missing_rate < 1.0:
        raise ValueError(f"missing_rate must lie in [0, 1), got {missing_rate}")
    if not 1 <= min_concepts <= max_concepts <= 4:
        raise ValueError("Concept counts must satisfy 1 <= min_concepts <= max_concepts <= 4")

    names = lexicon.names
    matcher = TagMatcher(names)
    words = ARTICLES + tuple(config.SYNTH_FILLERS)
    if any(matcher.match(w).any() for w in words):
        raise ValueError("Lexicon contains a caption filler word; cannot build unambiguous captions")
    connectors = [w for w in config.SYNTH_FILLERS if w not in ARTICLES]

    rng = np.random.default_rng(seed)
    records = []
    seen_captions: set[str] = set()

    for i in range(n_pairs):
        caption, chosen = None, None
        for _ in range(MAX_ATTEMPTS):
            k = int(rng.integers(min_concepts, max_concepts + 1))
            concepts = [int(c) for c in rng.choice(num_classes, size=k, replace=False)]
            n_named = max(1, int(round(k * (1.0 - missing_rate))))
            named = [concepts[j] for j in rng.permutation(k)[:n_named]]
            candidate = _compose_caption([names[c] for c in named], connectors, rng)

            expected = np.zeros(num_classes, dtype=np.uint8)
            expected[named] = 1
            if not np.array_equal(matcher.match(candidate), expected):
                continue
            caption, chosen = candidate, concepts
            if candidate not in seen_captions:
                break
        if caption is None:
            raise RuntimeError(f"Could not compose a caption for record {i} whose tags match its concepts")
        seen_captions.add(caption)

        concepts = chosen
        image = render_concepts(concepts, num_classes, image_size, rng)
        records.append(ImageTextRecord(
            id=f"synth-{seed}-{i:05d}",
            caption=caption,
            image=image,
            image_size=image_size,
            full_tags=sorted(names[c] for c in concepts),
            label=names[concepts[0]],
        ))

    logger.info(f"Generated {len(records)} synthetic pairs (seed={seed}, missing_rate={missing_rate})")
    return records


def default_synth_lexicon(path: str = config.SYNTH_VOCAB_PATH) -> TagLexicon:
    """Lexicon over the bundled synthetic tag list, every frequency 1."""
    names = {normalize_name(e.name) for e in read_base_vocab(path)}
    return TagLexicon.from_frequencies({name: 1 for name in names})


def recount_lexicon(lexicon: TagLexicon, records: list[ImageTextRecord]) -> TagLexicon:
    """Same classes with frequencies recounted from the record captions (floored at 1)."""
    counts = tag_matrix([r.caption for r in records], lexicon).sum(axis=0)
    return TagLexicon.from_frequencies(
        {name: max(1, int(c)) for name, c in zip(lexicon.names, counts)},
        removed_top=lexicon.removed_top,
        source_vocab_size=lexicon.source_vocab_size,
    )
