"""Central configuration for tag-supervised image-text pre-training."""

import os

VERSION = "0.4.0"

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
CONFIGS_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "configs")
IRREGULAR_PLURALS_PATH = os.path.join(DATA_DIR, "irregular_plurals.json")
PROMPT_TEMPLATES_PATH = os.path.join(DATA_DIR, "prompt_templates.txt")
SYNTH_VOCAB_PATH = os.path.join(DATA_DIR, "synth_vocab.txt")

DEFAULT_SEED = 0

# Lexicon construction
# "more than 5 samples" -> frequency >= 6 under the inclusive reading
DEFAULT_MIN_COUNT = 6
DEFAULT_REMOVE_TOP = 0  # value used for the published runs is not stated
LEXICON_FORMAT_VERSION = 1

# Missing-tag correction (SPLC)
DEFAULT_TAU = 0.6
DEFAULT_CHANGING_EPOCH = 1

# Contrastive temperature, learned in log-space
TEMPERATURE_INIT = 0.07
TEMPERATURE_BOUNDS = (1e-3, 10.0)

# Clamp applied to probabilities inside every log
LOG_EPS = 1e-8

# Text side
TEXT_MAX_LEN = 40
PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
CLS_TOKEN = "[CLS]"
SPECIAL_TOKENS = (PAD_TOKEN, UNK_TOKEN, CLS_TOKEN)

# Recognition head
DEFAULT_GROUP_FACTOR = 16
# Tag logits start at p = HEAD_PRIOR_PROB with weights ~ N(0, HEAD_INIT_STD)
HEAD_PRIOR_PROB = 0.05
HEAD_INIT_STD = 0.02

# Optimizer (AdamW moments/epsilon)
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8

# Evaluation
DEFAULT_THRESHOLD = 0.5
HISTOGRAM_BINS = 50
SINGLE_TEMPLATE = "a photo of a {label}"
LABEL_PLACEHOLDER = "{label}"

# 1 counts a multiply-accumulate as one FLOP (the convention behind the usual
# ~22 GFLOPs ViT-B/16 figure); 2 counts multiply and add separately.
FLOPS_PER_MAC = 1
MLP_RATIO = 4

# ViT-B/16 reference geometry (256px, 1000 tags)
VITB16_ENCODER = {
    "image_size": 256,
    "patch_size": 16,
    "width": 768,
    "depth": 12,
    "heads": 12,
    "text_max_len": 40,
    "proj_dim": 256,
}
VITB16_HEAD = {
    "num_queries": 100,
    "group_factor": 10,
    "decoder_dim": 768,
    "decoder_heads": 8,
    "decoder_ff": 2048,
}
VITB16_NUM_CLASSES = 1_000
VITB16_WEIGHT_DECAY = 0.02

# Augmentation hooks. Keys are the values accepted by `augment_mode`.
AUGMENTATIONS = {
    "identity": {
        "label": "No augmentation",
    },
    "flip_crop": {
        "label": "Horizontal flip + padded random crop",
    },
}
DEFAULT_AUGMENTATION = "flip_crop"
CROP_PAD = 4

# Synthetic fixtures
SYNTH_MIN_CONCEPTS = 2
SYNTH_MAX_CONCEPTS = 4
SYNTH_FILLERS = ("a", "an", "the", "with", "and", "near", "beside", "plus")
