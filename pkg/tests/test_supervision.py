import numpy as np
import pytest
import torch

from models.lexicon import TagLexicon
from models.tags import TagSource, TagVector
from network.text_vocab import TextVocab
from training.supervision import build_itc_targets, compose_tag2text, concat_text

LEXICON = TagLexicon.from_frequencies({"building": 4, "car": 9, "giraffe": 2, "person": 30, "tree": 5})


def vec(*names):
    return TagVector.from_names(names, LEXICON.names)


def test_no_pseudo_tags_gives_empty_string():
    original = vec("giraffe", "tree")
    assert compose_tag2text(original, original, LEXICON) == ""
    assert compose_tag2text(TagVector.zeros(5), TagVector.zeros(5), LEXICON) == ""


def test_retain_original_joins_in_lexicon_order():
    original = vec("giraffe")
    corrected = vec("giraffe", "car", "building")
    assert compose_tag2text(original, corrected, LEXICON) == "building car giraffe"
    assert compose_tag2text(original, corrected, LEXICON, retain_original=False) == "building car"


def test_removed_top_names_are_never_emitted():
    original = vec("giraffe")
    corrected = vec("giraffe", "person", "car")
    assert compose_tag2text(original, corrected, LEXICON, removed_top={"person"}) == "car giraffe"


def test_accepts_tensor_rows():
    original = torch.tensor([0.0, 0.0, 1.0, 0.0, 0.0])
    corrected = torch.tensor([1.0, 0.0, 1.0, 0.0, 1.0])
    assert compose_tag2text(original, corrected, LEXICON) == "building giraffe tree"


def test_corrected_must_be_superset():
    with pytest.raises(ValueError):
        compose_tag2text(vec("car"), vec("tree"), LEXICON)


def test_with_pseudo_marks_corrected_vectors():
    extracted = vec("giraffe")
    assert extracted.source is TagSource.EXTRACTED
    corrected = extracted.with_pseudo(np.array([1.0, 0.0, 0.0, 0.0, 1.0], dtype=np.float32))
    assert corrected.source is TagSource.CORRECTED
    assert corrected.names(LEXICON.names) == ["building", "giraffe", "tree"]
    assert compose_tag2text(extracted, corrected, LEXICON, retain_original=False) == "building tree"
    with pytest.raises(ValueError):
        extracted.with_pseudo(np.ones(3))


def test_from_names_can_skip_names_outside_the_lexicon():
    with pytest.raises(ValueError, match="unicorn"):
        TagVector.from_names(["car", "unicorn"], LEXICON.names)
    assert TagVector.from_names(["car", "unicorn"], LEXICON.names, ignore_unknown=True) == vec("car")


def test_composition_is_deterministic():
    original, corrected = vec("tree"), vec("tree", "car", "building")
    assert len({compose_tag2text(original, corrected, LEXICON) for _ in range(5)}) == 1


def test_concat_text():
    assert concat_text("a giraffe", "").combined == "a giraffe"
    pair = concat_text("a giraffe", "car building")
    assert pair.combined == "a giraffe car building"
    assert pair.original_text == "a giraffe"
    assert pair.tag2text == "car building"


def test_truncation_drops_tag_tokens_first():
    caption_words = [f"w{i}" for i in range(39)]
    tags = ["car", "building", "giraffe", "person", "tree"]
    vocab = TextVocab.build([" ".join(caption_words), " ".join(tags)])
    ids = vocab.encode_pair(" ".join(caption_words), " ".join(tags), max_len=40)
    assert len(ids) == 40
    assert ids[:39] == vocab.encode(" ".join(caption_words), 40)
    assert ids[39] == vocab.token_to_id["car"]


def test_long_caption_keeps_no_tags():
    caption = " ".join(["word"] * 45)
    vocab = TextVocab.build([caption, "car"])
    assert vocab.encode_pair(caption, "car", max_len=40) == [vocab.token_to_id["word"]] * 40


@pytest.mark.parametrize("mask", [[0, 0, 0], [1, 0, 1]])
def test_default_targets_are_identity(mask):
    targets = build_itc_targets(3, np.array(mask, dtype=bool))
    assert torch.equal(targets, torch.eye(3))
    assert torch.allclose(targets.sum(dim=1), torch.ones(3))


def test_extra_column_targets():
    targets = build_itc_targets(3, torch.tensor([True, False, True]), extra_columns=True)
    assert targets.shape == (3, 5)
    assert targets[0].tolist() == [0.5, 0.0, 0.0, 0.5, 0.0]
    assert targets[1].tolist() == [0.0, 1.0, 0.0, 0.0, 0.0]
    assert targets[2].tolist() == [0.0, 0.0, 0.5, 0.0, 0.5]
    assert torch.allclose(targets.sum(dim=1), torch.ones(3))


def test_targets_follow_batch_permutation():
    mask = np.array([True, False, True, False])
    perm = np.array([2, 0, 3, 1])
    targets = build_itc_targets(4, mask)
    permuted = build_itc_targets(4, mask[perm])
    assert torch.equal(permuted, targets[perm][:, perm])


def test_mask_length_checked():
    with pytest.raises(ValueError):
        build_itc_targets(3, [True, False])
