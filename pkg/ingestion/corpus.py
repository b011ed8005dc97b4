"""Corpus loader - image-caption records in a line-delimited JSON file.

Format (`records.jsonl`), one object per line:

    {"id": "img-001", "image": "images/img-001.png", "caption": "a dog on grass"}

`image` is resolved relative to the records file. `caption`, `full_tags` and
`label` are optional. Blank lines are skipped.
"""

from __future__ import annotations

import json
import logging
import os

import numpy as np
from PIL import Image

from models.record import ImageTextRecord

logger = logging.getLogger(__name__)

RECORDS_FILENAME = "records.jsonl"
IMAGES_DIRNAME = "images"


class CorpusFormatError(ValueError):
    def __init__(self, message: str, line_num: int | None = None):
        self.line_num = line_num
        prefix = f"line {line_num}: " if line_num is not None else ""
        super().__init__(prefix + message)


def _resolve(path: str) -> str:
    if os.path.isdir(path):
        return os.path.join(path, RECORDS_FILENAME)
    return path


def load_corpus(path: str, image_size: int | None = None, check_images: bool = True) -> list[ImageTextRecord]:
    """Load records in file order. Pixels are read lazily and resized to `image_size`.

    Args:
        path: records file, or a directory containing records.jsonl
        image_size: square resize target applied when pixels are loaded
        check_images: fail up front when an image file does not exist
    """
    path = _resolve(path)
    base_dir = os.path.dirname(os.path.abspath(path))
    records = []
    seen_ids = set()

    with open(path, "r", encoding="utf-8") as f:
        for line_num, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusFormatError(f"malformed JSON ({e.msg})", line_num) from None
            if not isinstance(data, dict):
                raise CorpusFormatError("expected a JSON object", line_num)

            record_id = data.get("id")
            image = data.get("image")
            if not isinstance(record_id, str) or not record_id:
                raise CorpusFormatError("missing or non-string 'id'", line_num)
            if not isinstance(image, str) or not image:
                raise CorpusFormatError(f"record {record_id} has no 'image' path", line_num)
            if record_id in seen_ids:
                raise CorpusFormatError(f"duplicate record id {record_id}", line_num)
            caption = data.get("caption") or ""
            if not isinstance(caption, str):
                raise CorpusFormatError(f"record {record_id}: 'caption' must be a string", line_num)
            full_tags = data.get("full_tags")
            if full_tags is not None and not (
                isinstance(full_tags, list) and all(isinstance(t, str) for t in full_tags)
            ):
                raise CorpusFormatError(f"record {record_id}: 'full_tags' must be a list of names", line_num)

            image_path = image if os.path.isabs(image) else os.path.join(base_dir, image)
            if check_images and not os.path.exists(image_path):
                raise FileNotFoundError(f"Image for record {record_id} not found: {image_path}")

            seen_ids.add(record_id)
            records.append(ImageTextRecord(
                id=record_id,
                caption=caption,
                image_path=image_path,
                image_size=image_size,
                full_tags=full_tags,
                label=data.get("label"),
            ))

    logger.info(f"Loaded {len(records)} records from {path}")
    return records


def save_corpus(records: list[ImageTextRecord], out_dir: str) -> str:
    """Write images as PNG under out_dir/images and the records file; returns its path."""
    image_dir = os.path.join(out_dir, IMAGES_DIRNAME)
    os.makedirs(image_dir, exist_ok=True)
    path = os.path.join(out_dir, RECORDS_FILENAME)

    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            pixels = np.clip(record.load_image() * 255.0 + 0.5, 0, 255).astype(np.uint8)
            rel = os.path.join(IMAGES_DIRNAME, f"{record.id}.png")
            Image.fromarray(pixels).save(os.path.join(out_dir, rel))

            row = {"id": record.id, "image": rel, "caption": record.caption}
            if record.full_tags is not None:
                row["full_tags"] = list(record.full_tags)
            if record.label is not None:
                row["label"] = record.label
            f.write(json.dumps(row) + "\n")

    logger.info(f"Wrote {len(records)} records to {path}")
    return path


def read_caption_rows(path: str) -> list[tuple[str, str]]:
    """(id, caption) pairs from a records file, or from a text file with one caption per line (ids are line numbers)."""
    resolved = _resolve(path)
    if resolved.endswith(".jsonl"):
        return [(r.id, r.caption) for r in load_corpus(resolved, check_images=False)]
    with open(resolved, "r", encoding="utf-8") as f:
        return [(str(i), line.rstrip("\n")) for i, line in enumerate(f, 1)]


def read_captions(path: str) -> list[str]:
    return [caption for _, caption in read_caption_rows(path)]
