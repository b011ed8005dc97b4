"""Tab-separated result files."""

from __future__ import annotations

import logging
import os
from typing import Sequence

import numpy as np
import pandas as pd

from evaluation.flops import FlopEstimate
from evaluation.metrics import MultiLabelMetrics
from evaluation.similarity import SimilarityHistogram
from evaluation.zero_shot import ZeroShotResult
from models.step import EpochTagRecord, StepRecord

logger = logging.getLogger(__name__)

METRICS_LOG = "metrics.tsv"
TAG_PR_LOG = "tag_pr.tsv"


def _write(df: pd.DataFrame, path: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    df.to_csv(path, sep="\t", index=False, na_rep="NA")
    logger.info(f"Wrote {len(df)} rows to {path}")


def steps_frame(steps: Sequence[StepRecord]) -> pd.DataFrame:
    return pd.DataFrame([s.values() for s in steps], columns=StepRecord.header())


def write_metrics_log(steps: Sequence[StepRecord], path: str):
    """One line per optimizer step with a header row."""
    _write(steps_frame(steps), path)


def read_metrics_log(path: str) -> list[StepRecord]:
    df = pd.read_csv(path, sep="\t", float_precision="round_trip")
    missing = set(StepRecord.header()) - set(df.columns)
    if missing:
        raise ValueError(f"Metrics log {path} lacks columns {sorted(missing)}")
    return [
        StepRecord(
            step=int(row.step),
            l_mlr=float(row.l_mlr),
            l_itc=float(row.l_itc),
            l_total=float(row.l_total),
            pseudo_count=int(row.pseudo_count),
            learning_rate=float(row.learning_rate),
        )
        for row in df.itertuples(index=False)
    ]


def write_tag_pr(records: Sequence[EpochTagRecord], path: str):
    df = pd.DataFrame(
        [(r.epoch, r.precision, r.recall, r.pseudo_count) for r in records],
        columns=["epoch", "precision", "recall", "pseudo_count"],
    )
    _write(df, path)


def read_tag_pr(path: str) -> list[EpochTagRecord]:
    """Epoch rows of a tag_pr.tsv; NA precision comes back as None."""
    df = pd.read_csv(path, sep="\t", float_precision="round_trip")
    return [
        EpochTagRecord(
            epoch=int(row.epoch),
            precision=None if pd.isna(row.precision) else float(row.precision),
            recall=float(row.recall),
            pseudo_count=int(row.pseudo_count),
        )
        for row in df.itertuples(index=False)
    ]


def metrics_frame(metrics: MultiLabelMetrics) -> pd.DataFrame:
    values = metrics.as_percentages()
    return pd.DataFrame({"metric": list(values), "percent": list(values.values())})


def write_multilabel_metrics(metrics: MultiLabelMetrics, path: str):
    _write(metrics_frame(metrics), path)


def zero_shot_frame(result: ZeroShotResult) -> pd.DataFrame:
    return pd.DataFrame({
        "class": result.class_names,
        "seen": result.seen_mask,
        "top1": result.per_class_accuracy,
    })


def write_zero_shot(result: ZeroShotResult, path: str):
    """Per-class accuracy table; overall top-1/top-5 are printed, not stored here."""
    _write(zero_shot_frame(result), path)


def flops_frame(estimate: FlopEstimate) -> pd.DataFrame:
    return pd.DataFrame([{
        "encoder_gflops": estimate.encoder_gflops,
        "head_gflops": estimate.head_gflops,
        "overhead_percent": estimate.overhead_percent,
    }])


def write_histogram(hist: SimilarityHistogram, path: str):
    df = pd.DataFrame({"bin_left": np.round(hist.bin_left, 4), "count": hist.counts.astype(int)})
    _write(df, path)
