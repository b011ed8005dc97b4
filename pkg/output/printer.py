"""Pretty-print training and evaluation results."""

from __future__ import annotations

from typing import Sequence

from tabulate import tabulate

from evaluation.flops import FlopEstimate
from evaluation.metrics import MultiLabelMetrics
from evaluation.similarity import SimilarityHistogram
from evaluation.zero_shot import ZeroShotResult
from models.lexicon import TagLexicon
from models.step import EpochTagRecord, StepRecord


def _banner(title: str):
    print("\n" + "=" * 60)
    print(f"           {title}")
    print("=" * 60)


def print_lexicon_summary(lexicon: TagLexicon, top: int = 10):
    """Print lexicon size and its most frequent tags."""
    _banner("TAG LEXICON")
    print(f"  Classes: {len(lexicon)}")
    if lexicon.removed_top:
        print(f"  Removed top-frequency tags: {', '.join(lexicon.removed_top)}")

    ranked = sorted(lexicon.entries, key=lambda e: (-e.frequency, e.name))[:top]
    rows = [[e.class_index, e.name, e.frequency] for e in ranked]
    print()
    print(tabulate(rows, headers=["Index", "Tag", "Captions"], tablefmt="simple"))


def print_training_summary(steps: Sequence[StepRecord], epoch_tags: Sequence[EpochTagRecord] = (),
                           every: int = 0):
    """Print first/last steps (or every `every`-th step) and per-epoch tag precision/recall."""
    if not steps:
        print("No training steps recorded.")
        return
    _banner("TRAINING")
    if every:
        shown = [s for s in steps if s.step % every == 0 or s is steps[-1]]
    else:
        shown = [steps[0], steps[-1]] if len(steps) > 1 else list(steps)
    rows = [[s.step, f"{s.l_mlr:.4f}", f"{s.l_itc:.4f}", f"{s.l_total:.4f}", s.pseudo_count,
             f"{s.learning_rate:.2e}"] for s in shown]
    print(tabulate(rows, headers=["Step", "L_mlr", "L_itc", "L_total", "Pseudo", "LR"], tablefmt="simple"))

    if epoch_tags:
        print("\n=== ONLINE TAG PRECISION / RECALL ===\n")
        rows = [[r.epoch, "-" if r.precision is None else f"{r.precision:.1%}", f"{r.recall:.1%}",
                 r.pseudo_count] for r in epoch_tags]
        print(tabulate(rows, headers=["Epoch", "Precision", "Recall", "Pseudo tags"], tablefmt="simple"))


def print_multilabel_metrics(metrics: MultiLabelMetrics):
    _banner("MULTI-LABEL RECOGNITION")
    rows = [[name, f"{value:.2f}"] for name, value in metrics.as_percentages().items()]
    print(tabulate(rows, headers=["Metric", "%"], tablefmt="simple"))
    print(f"\n  Classes evaluated: {metrics.num_classes_evaluated}")


def print_zero_shot(result: ZeroShotResult):
    _banner("ZERO-SHOT CLASSIFICATION")
    print(f"  Top-1: {result.top1:.2%}")
    print(f"  Top-5: {result.top5:.2%}")
    seen, unseen = result.seen_unseen_accuracy()
    rows = [
        ["Seen", int(result.seen_mask.sum()), "-" if seen is None else f"{seen:.2%}"],
        ["Unseen", int((~result.seen_mask).sum()), "-" if unseen is None else f"{unseen:.2%}"],
    ]
    print()
    print(tabulate(rows, headers=["Split", "Classes", "Mean top-1"], tablefmt="simple"))


def print_flops(estimate: FlopEstimate):
    print(f"{estimate.encoder_gflops:.2f}\t{estimate.head_gflops:.2f}\t{estimate.overhead_percent:.2f}")


def print_histogram(hist: SimilarityHistogram):
    for left, count in zip(hist.bin_left, hist.counts):
        print(f"{left:.4f}\t{int(count)}")
    mismatched = "-" if hist.mismatched_median is None else f"{hist.mismatched_median:.4f}"
    print(f"# median matched {hist.matched_median:.4f}, mismatched {mismatched}")
