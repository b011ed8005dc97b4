import logging

import numpy as np
import pytest
import torch

from models.train_config import EncoderConfig, Hyperparams, RecognitionHeadConfig, TrainConfig
from network.image_encoder import ImageEncoder, encode_image, images_to_tensor
from network.joint_model import TagAlignModel
from network.projector import Projector, project_and_normalize
from network.recognition_head import ClsHead, GroupDecoderHead, build_head, recognition_head
from network.text_encoder import TextEncoder, encode_text
from network.text_vocab import CLS_ID, PAD_ID, TextVocab, text_batch
from training.losses import itc_loss, itc_similarities, mlr_loss, total_loss

ENC = EncoderConfig(image_size=16, patch_size=8, width=32, depth=2, heads=2, text_max_len=16, proj_dim=16)
HEAD = RecognitionHeadConfig(group_factor=4, decoder_dim=32, decoder_heads=2, decoder_ff=64)


def test_spatial_rows_follow_patch_grid():
    cfg = EncoderConfig(image_size=64, patch_size=8, width=32, depth=1, heads=2)
    encoder = ImageEncoder(cfg)
    out = encode_image(np.random.default_rng(0).random((64, 64, 3)), encoder)
    assert out.spatial.shape == (64, 32)
    assert out.global_embedding.shape == (32,)


def test_encode_image_is_deterministic():
    encoder = ImageEncoder(ENC)
    image = np.random.default_rng(1).random((16, 16, 3))
    a, b = encode_image(image, encoder), encode_image(image.copy(), encoder)
    assert torch.equal(a.global_embedding, b.global_embedding)
    assert torch.equal(a.spatial, b.spatial)


def test_zero_and_one_images_differ():
    encoder = ImageEncoder(ENC)
    zeros = encode_image(np.zeros((16, 16, 3)), encoder)
    ones = encode_image(np.ones((16, 16, 3)), encoder)
    assert not torch.allclose(zeros.global_embedding, ones.global_embedding)


def test_image_shape_mismatch_names_shapes():
    encoder = ImageEncoder(ENC)
    with pytest.raises(ValueError, match=r"\(16, 16, 3\)"):
        encode_image(np.zeros((32, 32, 3)), encoder)


def test_images_to_tensor_layout():
    images = [np.full((4, 4, 3), i, dtype=np.float32) for i in range(2)]
    batch = images_to_tensor(images)
    assert batch.shape == (2, 3, 4, 4)
    assert batch[1].min().item() == 1.0


def test_padding_length_does_not_change_text_embedding():
    encoder = TextEncoder(ENC, vocab_size=20).eval()
    tokens = [5, 9, 11]
    with torch.no_grad():
        short_ids, short_mask = text_batch([tokens], ENC.text_max_len, pad_to=3)
        long_ids, long_mask = text_batch([tokens], ENC.text_max_len)
        short = encoder(short_ids, short_mask)
        long = encoder(long_ids, long_mask)
    assert long_ids.shape[1] > short_ids.shape[1]
    assert torch.allclose(short, long, atol=1e-6)


def test_empty_text_embeds_start_token():
    encoder = TextEncoder(ENC, vocab_size=20)
    emb = encode_text([], encoder).global_embedding
    assert emb.shape == (32,)
    assert torch.isfinite(emb).all()


def test_long_text_is_truncated_and_logged(caplog):
    encoder = TextEncoder(ENC, vocab_size=20)
    with caplog.at_level(logging.WARNING, logger="network.text_encoder"):
        long = encode_text([5] * 50, encoder).global_embedding
    assert "Truncated" in caplog.text
    assert torch.equal(long, encode_text([5] * ENC.text_max_len, encoder).global_embedding)


def test_out_of_vocab_id_rejected():
    encoder = TextEncoder(ENC, vocab_size=20)
    with pytest.raises(ValueError):
        encode_text([3, 20], encoder)


def test_text_batch_layout():
    ids, mask = text_batch([[7, 8], []], max_len=4)
    assert ids.tolist() == [[CLS_ID, 7, 8, PAD_ID, PAD_ID], [CLS_ID, PAD_ID, PAD_ID, PAD_ID, PAD_ID]]
    assert mask.tolist() == [[False, False, False, True, True], [False, True, True, True, True]]


def test_vocab_encode_pair_truncates_tags_first():
    vocab = TextVocab.build(["a b c d", "x y"])
    ids = vocab.encode_pair("a b c", "x y", max_len=4)
    assert ids == [vocab.token_to_id[t] for t in ("a", "b", "c", "x")]
    assert vocab.encode("unknown") == [1]


def test_head_output_length_is_num_classes():
    head = GroupDecoderHead(32, num_classes=10, cfg=HEAD)
    assert head.num_queries == 3
    for s in (1, 4, 64):
        assert recognition_head(torch.randn(s, 32), head).shape == (10,)
    assert recognition_head(torch.randn(5, s, 32), head).shape == (5, 10)


def test_head_is_permutation_invariant():
    head = GroupDecoderHead(32, num_classes=10, cfg=HEAD).eval()
    spatial = torch.randn(16, 32)
    perm = torch.randperm(16)
    with torch.no_grad():
        assert torch.allclose(recognition_head(spatial, head), recognition_head(spatial[perm], head), atol=1e-5)


def test_head_zero_input_is_repeatable():
    head = GroupDecoderHead(32, num_classes=10, cfg=HEAD).eval()
    with torch.no_grad():
        a = recognition_head(torch.zeros(4, 32), head)
        b = recognition_head(torch.zeros(4, 32), head)
    assert torch.equal(a, b)


def test_head_rejects_non_finite():
    head = GroupDecoderHead(32, num_classes=10, cfg=HEAD)
    spatial = torch.randn(4, 32)
    spatial[0, 0] = float("nan")
    with pytest.raises(ValueError):
        recognition_head(spatial, head)


def test_head_queries_must_cover_classes():
    with pytest.raises(ValueError):
        GroupDecoderHead(32, num_classes=10, cfg=RecognitionHeadConfig(num_queries=2, group_factor=4,
                                                                      decoder_dim=32, decoder_heads=2))


def test_cls_head():
    head = build_head(32, 7, RecognitionHeadConfig(kind="cls"))
    assert isinstance(head, ClsHead)
    assert head(torch.randn(3, 32)).shape == (3, 7)


@pytest.mark.parametrize("kind", ["ml_decoder", "cls"])
def test_untrained_head_starts_at_tag_prior(kind):
    head = build_head(32, 10, RecognitionHeadConfig(kind=kind, group_factor=4, decoder_dim=32, decoder_heads=2,
                                                    decoder_ff=64)).eval()
    with torch.no_grad():
        probs = torch.sigmoid(head(torch.randn(8, 32), torch.randn(8, 16, 32)))
    assert probs.shape == (8, 10)
    assert probs.min() > 0.02 and probs.max() < 0.15
    assert probs.max() < Hyperparams().tau


def test_projection_is_unit_norm():
    projector = Projector(32, 16)
    z = project_and_normalize(torch.randn(8, 32) * 50, projector)
    assert torch.allclose(z.norm(dim=-1), torch.ones(8), atol=1e-6)


def test_projection_is_scale_invariant_without_bias():
    projector = Projector(32, 16, bias=False)
    v = torch.randn(32)
    assert torch.allclose(project_and_normalize(v, projector), project_and_normalize(3 * v, projector), atol=1e-6)


def test_degenerate_embedding():
    projector = Projector(32, 16, bias=False)
    with pytest.raises(ValueError, match="degenerate embedding"):
        project_and_normalize(torch.zeros(32), projector)


def test_shapes_over_random_configs(rng):
    for _ in range(5):
        patch = int(rng.choice([4, 8]))
        grid = int(rng.integers(1, 4))
        heads = int(rng.choice([1, 2, 4]))
        enc = EncoderConfig(image_size=patch * grid, patch_size=patch, width=8 * heads, depth=1, heads=heads,
                            text_max_len=int(rng.integers(1, 12)), proj_dim=int(rng.integers(2, 10)))
        num_classes = int(rng.integers(1, 30))
        head = RecognitionHeadConfig(group_factor=int(rng.integers(1, 8)), decoder_dim=16, decoder_heads=2,
                                     decoder_ff=32)
        model = TagAlignModel(TrainConfig(encoder=enc, head=head), num_classes, vocab_size=12).eval()

        with torch.no_grad():
            encoded = model.encode_images(torch.rand(3, 3, enc.image_size, enc.image_size))
            assert encoded.spatial.shape == (3, grid * grid, enc.width)
            assert model.tag_logits(encoded).shape == (3, num_classes)
            assert model.image_embeddings(encoded).shape == (3, enc.proj_dim)
            ids, mask = text_batch([[3] * enc.text_max_len, [4]], enc.text_max_len)
            assert model.text_embeddings(ids, mask).shape == (2, enc.proj_dim)


def test_every_parameter_receives_gradient():
    num_classes = 10
    model = TagAlignModel(TrainConfig(encoder=ENC, head=HEAD), num_classes, vocab_size=20)
    images = torch.rand(4, 3, 16, 16)
    ids, mask = text_batch([[3, 4, 5], [6, 7], [8, 9, 10, 11], [12]], ENC.text_max_len)
    targets = (torch.rand(4, num_classes) > 0.7).float()

    encoded = model.encode_images(images)
    report = mlr_loss(model.tag_logits(encoded), targets, np.ones(num_classes), Hyperparams(), epoch=0)
    sim = itc_similarities(model.image_embeddings(encoded), model.text_embeddings(ids, mask), model.temperature)
    total_loss(report.loss, itc_loss(sim)).backward()

    for name, param in model.named_parameters():
        assert param.grad is not None, name
        assert param.grad.abs().sum() > 0, name


def test_temperature_is_clamped():
    model = TagAlignModel(TrainConfig(encoder=ENC, head=HEAD), 4, vocab_size=20)
    with torch.no_grad():
        model.log_temperature.fill_(100.0)
    assert model.temperature.item() == pytest.approx(10.0)
