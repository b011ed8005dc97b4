import os
import sys

import numpy as np
import pytest
import torch

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from ingestion.synth import default_synth_lexicon, recount_lexicon, synth_fixture  # noqa: E402
from models.lexicon import TagLexicon  # noqa: E402
from models.train_config import (EncoderConfig, Hyperparams, RecognitionHeadConfig,  # noqa: E402
                                 TrainConfig)

TINY_OVERRIDES = [
    "epochs=2",
    "batch_size=8",
    "warmup_steps=2",
    "augment_mode=identity",
    "encoder.image_size=16",
    "encoder.patch_size=8",
    "encoder.width=32",
    "encoder.depth=1",
    "encoder.heads=2",
    "encoder.text_max_len=16",
    "encoder.proj_dim=16",
    "head.group_factor=4",
    "head.decoder_dim=32",
    "head.decoder_heads=2",
    "head.decoder_ff=64",
]


def tiny_config(**overrides) -> TrainConfig:
    hyper = overrides.pop("hyper", Hyperparams())
    head = overrides.pop("head", RecognitionHeadConfig(group_factor=4, decoder_dim=32, decoder_heads=2,
                                                       decoder_ff=64))
    encoder = overrides.pop("encoder", EncoderConfig(image_size=16, patch_size=8, width=32, depth=1, heads=2,
                                                     text_max_len=16, proj_dim=16))
    params = dict(epochs=2, batch_size=8, warmup_steps=2, augment_mode="identity")
    params.update(overrides)
    return TrainConfig(encoder=encoder, head=head, hyper=hyper, **params)


@pytest.fixture
def tiny_cfg() -> TrainConfig:
    return tiny_config()


@pytest.fixture
def synth_lexicon() -> TagLexicon:
    return default_synth_lexicon()


@pytest.fixture
def tiny_records(synth_lexicon):
    return synth_fixture(seed=3, n_pairs=16, lexicon=synth_lexicon, missing_rate=0.5, image_size=16)


@pytest.fixture
def tiny_lexicon(synth_lexicon, tiny_records) -> TagLexicon:
    return recount_lexicon(synth_lexicon, tiny_records)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _seed_torch():
    torch.manual_seed(0)
