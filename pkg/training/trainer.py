"""Joint training loop: tag recognition with missing-tag correction plus image-text contrast.

Each step encodes the batch images, scores the tags, applies SPLC (from the
changing epoch on), turns the corrected tags into Tag2Text, encodes the
caption with its Tag2Text appended and takes one AdamW step on
L = mlr_weight * L_mlr + L_itc. The text encoded at a step already carries
that step's pseudo tags.

Data order is `default_rng([seed, epoch]).permutation(N)` and augmentation
seeds come from (seed, epoch, record position), so a run resumed from a
checkpoint replays the remaining steps exactly.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch
from tqdm import tqdm

import config
from evaluation.tag_tracking import tag_pr_online
from ingestion.augment import augment, augment_seed
from models.lexicon import TagLexicon
from models.record import ImageTextRecord
from models.step import EpochTagRecord, StepRecord
from models.tags import TagVector
from models.train_config import TrainConfig
from network.image_encoder import images_to_tensor
from network.joint_model import TagAlignModel
from network.text_vocab import TextVocab, text_batch
from output.tables import (METRICS_LOG, TAG_PR_LOG, read_metrics_log, read_tag_pr, write_metrics_log,
                           write_tag_pr)
from tagging.lexicon_builder import class_weights
from tagging.tagger import tag_matrix
from training.checkpoint import load_checkpoint, save_checkpoint
from training.losses import itc_loss, itc_similarities, mlr_loss, total_loss
from training.schedule import lr_at, set_lr
from training.supervision import build_itc_targets, compose_tag2text, concat_text

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.pt"
CHECKPOINT_DIR = "checkpoints"


@dataclass
class TrainResult:
    model: TagAlignModel
    vocab: TextVocab
    steps: list[StepRecord]
    epoch_tags: list[EpochTagRecord] = field(default_factory=list)
    final_step: int = 0
    pseudo_bank: dict[str, list[int]] = field(default_factory=dict)


def steps_per_epoch(num_records: int, batch_size: int) -> int:
    return math.ceil(num_records / batch_size)


def epoch_order(seed: int, epoch: int, num_records: int) -> np.ndarray:
    return np.random.default_rng([seed, epoch]).permutation(num_records)


def build_text_vocab(records: Sequence[ImageTextRecord], lexicon: TagLexicon) -> TextVocab:
    """Caption words plus every tag word, so Tag2Text never maps to [UNK]."""
    return TextVocab.build([r.caption for r in records] + lexicon.names)


def build_model(cfg: TrainConfig, num_classes: int, vocab: TextVocab) -> TagAlignModel:
    vocab_size = cfg.encoder.text_vocab or len(vocab)
    if vocab_size < len(vocab):
        raise ValueError(f"encoder.text_vocab={vocab_size} is smaller than the corpus vocabulary ({len(vocab)})")
    torch.manual_seed(cfg.seed)
    return TagAlignModel(cfg, num_classes, vocab_size)


def build_optimizer(model: TagAlignModel, cfg: TrainConfig) -> torch.optim.AdamW:
    return torch.optim.AdamW(
        model.parameters(),
        lr=cfg.max_lr,
        betas=config.ADAM_BETAS,
        eps=config.ADAM_EPS,
        weight_decay=cfg.weight_decay,
    )


def _dump_nonfinite(out_dir: str | None, step: int, epoch: int, ids: list[str], values: dict) -> str | None:
    if not out_dir:
        return None
    path = os.path.join(out_dir, f"nonfinite_step{step}.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"step": step, "epoch": epoch, "record_ids": ids,
                   **{k: repr(v) for k, v in values.items()}}, f, indent=2)
    return path


def _epoch_tally(epoch: int, corrected: list[np.ndarray], rows: list[np.ndarray]) -> dict | None:
    if not rows:
        return None
    return {"epoch": epoch, "corrected": np.concatenate(corrected), "rows": np.concatenate(rows)}


def _batch_texts(captions: list[str], tag2texts: list[str], vocab: TextVocab, cfg: TrainConfig):
    """Token batch and ITC targets for one training batch."""
    max_len = cfg.encoder.text_max_len
    owners = np.array([bool(t) for t in tag2texts])
    if cfg.alt_target_mode:
        id_lists = [vocab.encode(c, max_len) for c in captions]
        id_lists += [vocab.encode(t, max_len) for t, own in zip(tag2texts, owners) if own]
        targets = build_itc_targets(len(captions), owners, extra_columns=True)
    else:
        pairs = [concat_text(c, t) for c, t in zip(captions, tag2texts)]
        id_lists = [vocab.encode_pair(p.original_text, p.tag2text, max_len) for p in pairs]
        targets = build_itc_targets(len(captions), owners)
    ids, mask = text_batch(id_lists, max_len)
    return ids, mask, targets


def train(records: Sequence[ImageTextRecord], lexicon: TagLexicon, cfg: TrainConfig,
          out_dir: str | None = None, resume_from: str | None = None,
          max_steps: int | None = None, progress: bool = True) -> TrainResult:
    """Train from scratch (or resume) and return the model with its StepRecord stream.

    Args:
        records: training pairs; order is the record position used for seeding
        lexicon: the C-class tag list the recognition head predicts
        cfg: training configuration
        out_dir: where metrics.tsv, tag_pr.tsv and checkpoints go (nothing is written when None)
        resume_from: checkpoint to continue from; the schedule and data order pick up at its step
        max_steps: stop after this many total optimizer steps (the schedule still spans all epochs)
        progress: show a tqdm progress bar
    """
    records = list(records)
    if not records:
        raise ValueError("Training set is empty")
    num_classes = len(lexicon)
    if num_classes < 1:
        raise ValueError("Lexicon has no classes")

    captions = [r.caption for r in records]
    extracted = tag_matrix(captions, lexicon, cfg.strict_compounds).astype(np.float32)
    weights = class_weights(lexicon)
    full_truth = None
    if all(r.full_tags is not None for r in records):
        full_truth = np.stack([TagVector.from_names(r.full_tags, lexicon.names, ignore_unknown=True).bits
                               for r in records])
    removed_top = lexicon.removed_top if cfg.exclude_removed_top else ()

    spe = steps_per_epoch(len(records), cfg.batch_size)
    start_step = 0
    pseudo_bank: dict[str, list[int]] = {}
    epoch_corrected: list[np.ndarray] = []
    epoch_rows: list[np.ndarray] = []
    if resume_from:
        ckpt = load_checkpoint(resume_from, expected_classes=num_classes, expected_config=cfg)
        if ckpt.class_names != lexicon.names:
            raise ValueError("Checkpoint class names differ from the lexicon")
        vocab = TextVocab(ckpt.vocab)
        model = build_model(cfg, num_classes, vocab)
        model.load_state_dict(ckpt.state_dict)
        optimizer = build_optimizer(model, cfg)
        if ckpt.optimizer:
            optimizer.load_state_dict(ckpt.optimizer)
        if ckpt.torch_rng_state is not None:
            torch.set_rng_state(ckpt.torch_rng_state)
        start_step = ckpt.step
        pseudo_bank = {k: list(v) for k, v in ckpt.pseudo_bank.items()}
        tally = ckpt.epoch_tally
        if tally is not None and tally["epoch"] == start_step // spe and start_step % spe:
            epoch_corrected, epoch_rows = [np.asarray(tally["corrected"])], [np.asarray(tally["rows"])]
        logger.info(f"Resuming from step {start_step}")
    else:
        vocab = build_text_vocab(records, lexicon)
        model = build_model(cfg, num_classes, vocab)
        optimizer = build_optimizer(model, cfg)

    total_steps = cfg.epochs * spe
    last_step = min(total_steps, max_steps) if max_steps is not None else total_steps

    prior_steps: list[StepRecord] = []
    prior_tags: list[EpochTagRecord] = []
    first_epoch = start_step // spe
    metrics_path = os.path.join(out_dir, METRICS_LOG) if out_dir else None
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        if start_step and os.path.exists(metrics_path):
            prior_steps = [s for s in read_metrics_log(metrics_path) if s.step <= start_step]
        tag_pr_path = os.path.join(out_dir, TAG_PR_LOG)
        if start_step and os.path.exists(tag_pr_path):
            prior_tags = [t for t in read_tag_pr(tag_pr_path) if t.epoch < first_epoch]

    steps: list[StepRecord] = []
    epoch_tags: list[EpochTagRecord] = []
    model.train()
    bar = tqdm(total=last_step, initial=min(start_step, last_step), desc="Training", disable=not progress)

    step = start_step
    tally_epoch = first_epoch
    for epoch in range(first_epoch, cfg.epochs):
        if step >= last_step:
            break
        order = epoch_order(cfg.seed, epoch, len(records))
        if epoch != first_epoch:
            epoch_corrected, epoch_rows = [], []
        tally_epoch = epoch

        for b in range(step - epoch * spe, spe):
            if step >= last_step:
                break
            idx = order[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            batch = [records[i] for i in idx]
            ids = [r.id for r in batch]

            images = [augment(r.load_image(), augment_seed(cfg.seed, epoch, int(i)), cfg.augment_mode)
                      for r, i in zip(batch, idx)]
            dtype = next(model.parameters()).dtype
            encoded = model.encode_images(images_to_tensor(images, dtype=dtype))
            logits = model.tag_logits(encoded)

            original = torch.from_numpy(extracted[idx]).to(dtype)
            targets = original.clone()
            if cfg.hyper.persist_pseudo:
                for row, rid in enumerate(ids):
                    targets[row, pseudo_bank.get(rid, [])] = 1.0

            report = mlr_loss(logits, targets, weights, cfg.hyper, epoch)
            corrected = report.corrected_targets

            if cfg.use_tag2text:
                tag2texts = []
                for row in range(len(batch)):
                    tags = TagVector(extracted[idx[row]])
                    tag2texts.append(compose_tag2text(tags, tags.with_pseudo(corrected[row].numpy()), lexicon,
                                                      cfg.retain_original, removed_top))
            else:
                tag2texts = [""] * len(batch)

            text_ids, text_mask, itc_targets = _batch_texts([r.caption for r in batch], tag2texts, vocab, cfg)
            sim = itc_similarities(
                model.image_embeddings(encoded),
                model.text_embeddings(text_ids, text_mask),
                model.temperature,
                itc_targets.to(dtype),
            )
            l_itc = itc_loss(sim)
            l_total = total_loss(report.loss, l_itc, cfg.mlr_weight)

            if not torch.isfinite(l_total):
                if metrics_path:
                    write_metrics_log(prior_steps + steps, metrics_path)
                dump = _dump_nonfinite(out_dir, step + 1, epoch, ids, {
                    "l_mlr": report.loss.item(), "l_itc": l_itc.item(), "l_total": l_total.item(),
                })
                raise FloatingPointError(
                    f"Non-finite loss at step {step + 1} (epoch {epoch}) for records {ids}"
                    + (f"; diagnostics in {dump}" if dump else "")
                )

            lr = lr_at(step, total_steps, cfg.max_lr, cfg.min_lr, cfg.warmup_steps)
            set_lr(optimizer, lr)
            optimizer.zero_grad()
            l_total.backward()
            optimizer.step()
            step += 1

            if cfg.hyper.persist_pseudo:
                for row, rid in enumerate(ids):
                    bits = np.flatnonzero(corrected[row].numpy() > 0.5)
                    added = [int(c) for c in bits if extracted[idx[row], c] == 0]
                    if added:
                        pseudo_bank[rid] = added

            record = StepRecord(
                step=step,
                l_mlr=report.loss.item(),
                l_itc=l_itc.item(),
                l_total=l_total.item(),
                pseudo_count=report.pseudo_count,
                learning_rate=lr,
            )
            steps.append(record)
            epoch_corrected.append(corrected.numpy())
            epoch_rows.append(idx)
            bar.update(1)
            bar.set_postfix(loss=f"{record.l_total:.4f}", pseudo=record.pseudo_count)
            logger.debug(f"step {step}: {record}")

            if out_dir and cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
                save_checkpoint(
                    os.path.join(out_dir, CHECKPOINT_DIR, f"step-{step:06d}.pt"),
                    model, cfg, step, vocab.tokens, lexicon.names, optimizer, pseudo_bank,
                    _epoch_tally(epoch, epoch_corrected, epoch_rows),
                )

        if full_truth is not None and epoch_rows:
            rows = np.concatenate(epoch_rows)
            corrected_all = np.concatenate(epoch_corrected)
            precision, recall = tag_pr_online(corrected_all, extracted[rows], full_truth[rows])
            pseudo = int(((corrected_all > 0.5) & (extracted[rows] < 0.5)).sum())
            epoch_tags.append(EpochTagRecord(epoch=epoch, precision=precision, recall=recall, pseudo_count=pseudo))
            logger.info(f"Epoch {epoch}: pseudo tags {pseudo}, precision {precision}, recall {recall:.3f}")

    bar.close()

    if out_dir:
        write_metrics_log(prior_steps + steps, metrics_path)
        if prior_tags or epoch_tags:
            write_tag_pr(prior_tags + epoch_tags, os.path.join(out_dir, TAG_PR_LOG))
        save_checkpoint(os.path.join(out_dir, CHECKPOINT_NAME), model, cfg, step, vocab.tokens, lexicon.names,
                        optimizer, pseudo_bank, _epoch_tally(tally_epoch, epoch_corrected, epoch_rows))

    return TrainResult(model=model, vocab=vocab, steps=steps, epoch_tags=epoch_tags,
                       final_step=step, pseudo_bank=pseudo_bank)


def load_trained_model(path: str, lexicon: TagLexicon | None = None) -> tuple[TagAlignModel, TextVocab, TrainConfig]:
    """Rebuild a model from a checkpoint for evaluation."""
    ckpt = load_checkpoint(path, expected_classes=len(lexicon) if lexicon is not None else None)
    if lexicon is not None and ckpt.class_names != lexicon.names:
        raise ValueError("Checkpoint class names differ from the lexicon")
    vocab = TextVocab(ckpt.vocab)
    model = TagAlignModel(ckpt.config, len(ckpt.class_names), ckpt.config.encoder.text_vocab or len(vocab))
    model.load_state_dict(ckpt.state_dict)
    model.eval()
    return model, vocab, ckpt.config
