"""Run manifest written by every CLI subcommand."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field

import config as project_config

MANIFEST_NAME = "manifest.json"


def file_digest(path: str) -> str:
    """sha256 of a file, or of records.jsonl when `path` is a corpus directory."""
    if os.path.isdir(path):
        path = os.path.join(path, "records.jsonl")
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    seed: int | None = None
    config: dict | None = None
    overrides: list[str] = field(default_factory=list)
    code_version: str = project_config.VERSION
    inputs: dict[str, str] = field(default_factory=dict)  # path -> sha256
    outputs: list[str] = field(default_factory=list)

    def add_input(self, path: str | None):
        if path:
            self.inputs[path] = file_digest(path)

    def write(self, out_dir: str) -> str:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, MANIFEST_NAME)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(asdict(self), f, indent=2, sort_keys=True)
        return path
