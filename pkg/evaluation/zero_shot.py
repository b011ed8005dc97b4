"""Prompt-ensembled zero-shot classification and seen/unseen analysis.

A class embedding is the re-normalized mean of the unit text embeddings of
the class name rendered through every template. An image is assigned the
class with the highest cosine similarity.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import torch

import config
from evaluation.inference import infer_texts
from models.lexicon import TagLexicon
from network.joint_model import TagAlignModel
from network.text_vocab import TextVocab
from tagging.text import normalize_name

logger = logging.getLogger(__name__)

TextEncodeFn = Callable[[list[str]], torch.Tensor]


class PromptTemplateError(ValueError):
    pass


@dataclass(frozen=True)
class PromptSet:
    templates: tuple[str, ...]

    def __post_init__(self):
        if not self.templates:
            raise PromptTemplateError("Prompt set is empty")
        for template in self.templates:
            count = template.count(config.LABEL_PLACEHOLDER)
            if count != 1:
                raise PromptTemplateError(
                    f"Template {template!r} must contain {config.LABEL_PLACEHOLDER} exactly once, found {count}"
                )

    def __len__(self) -> int:
        return len(self.templates)

    def render(self, label: str) -> list[str]:
        return [t.replace(config.LABEL_PLACEHOLDER, label) for t in self.templates]

    @classmethod
    def single(cls) -> PromptSet:
        return cls((config.SINGLE_TEMPLATE,))


def load_prompt_set(path: str = config.PROMPT_TEMPLATES_PATH, single_template: bool = False) -> PromptSet:
    """Templates from a text file (one per line, # comments); single_template ignores the file."""
    if single_template:
        return PromptSet.single()
    with open(path, "r", encoding="utf-8") as f:
        templates = [line.strip() for line in f if line.strip() and not line.lstrip().startswith("#")]
    return PromptSet(tuple(templates))


@dataclass
class ZeroShotResult:
    top1: float
    top5: float
    per_class_accuracy: np.ndarray  # NaN for classes without test images
    seen_mask: np.ndarray  # True where the class name is in the tag lexicon
    class_names: list[str]

    def seen_unseen_accuracy(self) -> tuple[float | None, float | None]:
        """Mean per-class top-1 over seen and over unseen classes (None when a side is empty)."""
        out = []
        for side in (self.seen_mask, ~self.seen_mask):
            values = self.per_class_accuracy[side]
            values = values[~np.isnan(values)]
            out.append(float(values.mean()) if values.size else None)
        return out[0], out[1]


@dataclass(frozen=True)
class ImprovedClasses:
    names: list[str]
    unseen_share: float | None  # fraction of improved classes that are unseen


def model_text_encoder(model: TagAlignModel, vocab: TextVocab) -> TextEncodeFn:
    """Adapter turning a trained model into a texts -> unit embeddings function."""
    return lambda texts: infer_texts(model, vocab, texts)


def seen_mask_for(class_names: Sequence[str], lexicon: TagLexicon) -> np.ndarray:
    known = set(lexicon.names)
    return np.array([normalize_name(name) in known for name in class_names], dtype=bool)


@torch.no_grad()
def class_embeddings(class_names: Sequence[str], prompts: PromptSet, encode_texts: TextEncodeFn) -> torch.Tensor:
    rows = []
    for name in class_names:
        z = encode_texts(prompts.render(name))
        mean = z.mean(dim=0)
        rows.append(mean / mean.norm())
    return torch.stack(rows)


def zero_shot_classify(image_embeddings: torch.Tensor, labels: Sequence[int], class_names: Sequence[str],
                       prompts: PromptSet, encode_texts: TextEncodeFn, lexicon: TagLexicon) -> ZeroShotResult:
    """Top-1/top-5 zero-shot accuracy of unit image embeddings against prompt-ensembled classes.

    `labels[i]` is the index into `class_names` of image i's true class.
    """
    class_names = list(class_names)
    if not class_names:
        raise ValueError("class_names must not be empty")
    labels = torch.as_tensor(np.asarray(labels, dtype=np.int64))
    if labels.shape[0] != image_embeddings.shape[0]:
        raise ValueError(f"{image_embeddings.shape[0]} images but {labels.shape[0]} labels")
    if labels.numel() and (labels.min() < 0 or labels.max() >= len(class_names)):
        raise ValueError("Label index outside the class list")

    classes = class_embeddings(class_names, prompts, encode_texts).to(image_embeddings.dtype)
    sims = image_embeddings @ classes.T
    k = min(5, len(class_names))
    topk = sims.topk(k, dim=1).indices
    hit1 = topk[:, 0] == labels
    hit5 = (topk == labels[:, None]).any(dim=1)

    per_class = np.full(len(class_names), np.nan)
    for c in range(len(class_names)):
        rows = labels == c
        if rows.any():
            per_class[c] = hit1[rows].double().mean().item()

    logger.info(f"Zero-shot over {len(class_names)} classes with {len(prompts)} templates")
    return ZeroShotResult(
        top1=hit1.double().mean().item(),
        top5=hit5.double().mean().item(),
        per_class_accuracy=per_class,
        seen_mask=seen_mask_for(class_names, lexicon),
        class_names=class_names,
    )


def improved_class_breakdown(baseline: ZeroShotResult, candidate: ZeroShotResult) -> ImprovedClasses:
    """Classes whose top-1 accuracy the candidate raises over the baseline, and the unseen share among them."""
    if baseline.class_names != candidate.class_names:
        raise ValueError("Zero-shot results cover different class lists")
    gain = np.nan_to_num(candidate.per_class_accuracy) - np.nan_to_num(baseline.per_class_accuracy)
    improved = np.flatnonzero(gain > 0)
    share = float((~candidate.seen_mask[improved]).mean()) if improved.size else None
    return ImprovedClasses(names=[candidate.class_names[i] for i in improved], unseen_share=share)
