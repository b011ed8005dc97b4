"""Training configuration and its flat key=value file format.

A config file holds one `key=value` per line. Nested sections use dotted keys:

    epochs=4
    batch_size=32
    encoder.width=128
    head.group_factor=16
    hyper.tau=0.6

Lines starting with `#` are comments. Overrides passed on the command line use
the same syntax and are applied in order, so the last writer wins.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import config

SECTIONS = ("encoder", "head", "hyper")


@dataclass
class EncoderConfig:
    image_size: int = 64
    patch_size: int = 8
    width: int = 128
    depth: int = 2
    heads: int = 4
    text_vocab: int = 0  # 0 = size of the vocabulary built from the corpus
    text_max_len: int = config.TEXT_MAX_LEN
    proj_dim: int = 64
    mlp_ratio: int = config.MLP_RATIO

    def __post_init__(self):
        if self.image_size % self.patch_size:
            raise ValueError(
                f"image_size {self.image_size} is not divisible by patch_size {self.patch_size}"
            )
        if self.width % self.heads:
            raise ValueError(f"width {self.width} is not divisible by heads {self.heads}")
        if self.depth < 1 or self.text_max_len < 1 or self.proj_dim < 1:
            raise ValueError("depth, text_max_len and proj_dim must be positive")

    @property
    def num_patches(self) -> int:
        return (self.image_size // self.patch_size) ** 2


@dataclass
class RecognitionHeadConfig:
    kind: str = "ml_decoder"  # "ml_decoder" or "cls"
    num_queries: int = 0  # 0 = ceil(C / group_factor)
    group_factor: int = config.DEFAULT_GROUP_FACTOR
    decoder_dim: int = 128
    decoder_heads: int = 4
    decoder_ff: int = 256
    query_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("ml_decoder", "cls"):
            raise ValueError(f"Unknown recognition head kind: {self.kind}")
        if self.group_factor < 1:
            raise ValueError("group_factor must be >= 1")
        if self.num_queries < 0:
            raise ValueError("num_queries must be >= 0")
        if self.decoder_dim % self.decoder_heads:
            raise ValueError(
                f"decoder_dim {self.decoder_dim} is not divisible by decoder_heads {self.decoder_heads}"
            )

    def resolved_queries(self, num_classes: int) -> int:
        """Number of group queries K for C classes, checking K * g >= C."""
        k = self.num_queries or math.ceil(num_classes / self.group_factor)
        if k < 1:
            raise ValueError("Recognition head needs at least one query")
        if k * self.group_factor < num_classes:
            raise ValueError(
                f"{k} queries x group factor {self.group_factor} cannot cover {num_classes} classes"
            )
        return k


@dataclass
class Hyperparams:
    tau: float = config.DEFAULT_TAU
    changing_epoch: int = config.DEFAULT_CHANGING_EPOCH
    temperature_init: float = config.TEMPERATURE_INIT
    temperature_min: float = config.TEMPERATURE_BOUNDS[0]
    temperature_max: float = config.TEMPERATURE_BOUNDS[1]
    reduction: str = "mean"  # batch reduction of the MLR loss: "mean" or "sum"
    persist_pseudo: bool = False

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if self.changing_epoch < 0:
            raise ValueError("changing_epoch must be >= 0")
        if not 0.0 < self.temperature_min <= self.temperature_init <= self.temperature_max:
            raise ValueError("temperature_init must lie within the temperature bounds")
        if self.reduction not in ("mean", "sum"):
            raise ValueError(f"Unknown reduction: {self.reduction}")


@dataclass
class TrainConfig:
    epochs: int = 4
    batch_size: int = 32
    max_lr: float = 1e-3
    min_lr: float = 0.0
    warmup_steps: int = 10
    weight_decay: float = config.VITB16_WEIGHT_DECAY
    seed: int = config.DEFAULT_SEED
    retain_original: bool = True
    alt_target_mode: bool = False
    use_tag2text: bool = True
    exclude_removed_top: bool = True
    mlr_weight: float = 1.0
    augment_mode: str = config.DEFAULT_AUGMENTATION
    strict_compounds: bool = False
    checkpoint_every: int = 0  # steps; 0 = only at the end
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    head: RecognitionHeadConfig = field(default_factory=RecognitionHeadConfig)
    hyper: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.augment_mode not in config.AUGMENTATIONS:
            raise ValueError(f"Unknown augment_mode: {self.augment_mode}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> TrainConfig:
        data = dict(data)
        encoder = EncoderConfig(**data.pop("encoder", {}))
        head = RecognitionHeadConfig(**data.pop("head", {}))
        hyper = Hyperparams(**data.pop("hyper", {}))
        return cls(encoder=encoder, head=head, hyper=hyper, **data)


_SECTION_TYPES = {"encoder": EncoderConfig, "head": RecognitionHeadConfig, "hyper": Hyperparams}


def _coerce(key: str, raw: str, type_name: str):
    """Convert a raw string to the annotated field type."""
    raw = raw.strip()
    try:
        if type_name == "bool":
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if type_name == "int":
            return int(raw)
        if type_name == "float":
            return float(raw)
    except ValueError:
        raise ValueError(f"Config key {key!r}: cannot read {raw!r} as {type_name}") from None
    return raw


def parse_config_lines(lines, base: TrainConfig | None = None) -> TrainConfig:
    """Apply key=value lines on top of `base` (defaults when omitted)."""
    data = (base or TrainConfig()).to_dict()
    top_types = {f.name: f.type for f in fields(TrainConfig)}

    for line_num, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"Config line {line_num}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))

        if "." in key:
            section, name = key.split(".", 1)
            if section not in _SECTION_TYPES:
                raise ValueError(f"Unknown config section: {section!r}")
            types = {f.name: f.type for f in fields(_SECTION_TYPES[section])}
            if name not in types:
                raise ValueError(f"Unknown config key: {key!r}")
            data[section][name] = _coerce(key, raw, types[name])
        else:
            if key not in top_types or key in SECTIONS:
                raise ValueError(f"Unknown config key: {key!r}")
            data[key] = _coerce(key, raw, top_types[key])

    return TrainConfig.from_dict(data)


def load_train_config(path: str | None, overrides: list[str] | None = None) -> TrainConfig:
    """Load a config file (or defaults when path is None) and apply overrides."""
    cfg = TrainConfig()
    if path:
        with open(path, "r", encoding="utf-8") as f:
            cfg = parse_config_lines(f.read().splitlines(), cfg)
    if overrides:
        cfg = parse_config_lines(overrides, cfg)
    return cfg


def dump_config_lines(cfg: TrainConfig) -> list[str]:
    """Render a config back to flat key=value lines."""
    lines = []
    for key, value in cfg.to_dict().items():
        if isinstance(value, dict):
            for name, inner in value.items():
                lines.append(f"{key}.{name}={_render(inner)}")
        else:
            lines.append(f"{key}={_render(value)}")
    return lines


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)
