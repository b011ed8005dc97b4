"""Per-step and per-epoch training records."""

from dataclasses import astuple, dataclass, fields


@dataclass(frozen=True)
class StepRecord:
    step: int
    l_mlr: float
    l_itc: float
    l_total: float
    pseudo_count: int
    learning_rate: float

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> tuple:
        return astuple(self)


@dataclass(frozen=True)
class EpochTagRecord:
    """Precision/recall of tags identified online during one epoch."""

    epoch: int
    precision: float | None  # None when no pseudo tags were produced
    recall: float | None
    pseudo_count: int
