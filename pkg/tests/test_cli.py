import json

import pandas as pd
import pytest

from cli import main
from models.train_config import TrainConfig, dump_config_lines, load_train_config, parse_config_lines
from tagging.lexicon_io import load_lexicon

from conftest import TINY_OVERRIDES


def tiny_flags():
    flags = []
    for override in TINY_OVERRIDES:
        flags += ["--set", override]
    return flags


def test_estimate_flops_prints_three_numbers(capsys):
    assert main(["estimate-flops", "--config", "vitb16.cfg"]) == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    assert line.split("\t") == ["23.20", "0.93", "3.99"]


def test_estimate_flops_writes_table(tmp_path):
    assert main(["estimate-flops", "--config", "vitb16.cfg", "--flops-per-mac", "2",
                 "--out", str(tmp_path)]) == 0
    df = pd.read_csv(tmp_path / "flops.tsv", sep="\t")
    assert df.loc[0, "encoder_gflops"] == pytest.approx(46.393, abs=1e-3)
    assert (tmp_path / "manifest.json").exists()


def test_missing_required_flag_exits_2(tmp_path):
    assert main(["extract-tags", "--captions", "c.txt", "--out", str(tmp_path)]) == 2


def test_no_command_exits_2():
    assert main([]) == 2


def test_bad_override_exits_1(tmp_path, capsys):
    assert main(["estimate-flops", "--set", "encoder.colour=3"]) == 1
    assert "ERROR" in capsys.readouterr().err


def test_missing_config_exits_1():
    assert main(["estimate-flops", "--config", "no-such.cfg"]) == 1


def test_build_lexicon_and_extract_tags(tmp_path):
    captions = tmp_path / "captions.txt"
    captions.write_text("a hot dog on a plate\n" * 3 + "two dogs\n" * 2 + "a cat\n")
    vocab = tmp_path / "vocab.txt"
    vocab.write_text("dog\nhot dog\nplate\ncat\nunicorn\n")

    assert main(["build-lexicon", "--captions", str(captions), "--vocab", str(vocab),
                 "--min-count", "2", "--out", str(tmp_path)]) == 0
    lexicon = load_lexicon(str(tmp_path / "lexicon.tsv"))
    assert lexicon.names == ["dog", "hot dog", "plate"]

    out = tmp_path / "tags"
    assert main(["extract-tags", "--lexicon", str(tmp_path / "lexicon.tsv"), "--captions", str(captions),
                 "--out", str(out)]) == 0
    lines = (out / "tags.tsv").read_text().splitlines()
    assert lines[0] == "1\thot dog,plate"
    assert lines[3] == "4\tdog"
    assert len(lines) == 6


def test_base_vocab_alias(tmp_path):
    captions = tmp_path / "captions.txt"
    captions.write_text("a dog\n" * 2)
    vocab = tmp_path / "vocab.txt"
    vocab.write_text("dog\n")
    assert main(["build-lexicon", "--captions", str(captions), "--base-vocab", str(vocab),
                 "--min-count", "1", "--out", str(tmp_path)]) == 0
    assert load_lexicon(str(tmp_path / "lexicon.tsv")).names == ["dog"]


def test_train_twice_gives_identical_logs(tmp_path):
    for name in ("a", "b"):
        assert main(["train", "--seed", "7", "--synth-n", "16", "--quiet", "--out", str(tmp_path / name)]
                    + tiny_flags()) == 0
    first = (tmp_path / "a" / "metrics.tsv").read_bytes()
    assert first == (tmp_path / "b" / "metrics.tsv").read_bytes()
    assert len(first.decode().splitlines()) == 5

    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["command"] == "train"
    assert manifest["seed"] == 7
    saved = load_train_config(str(tmp_path / "a" / "config.cfg"))
    assert saved.seed == 7 and saved.encoder.width == 32


def test_pipeline_on_synthetic_corpus(tmp_path):
    data, run, ev = tmp_path / "data", tmp_path / "run", tmp_path / "eval"
    assert main(["synth", "--seed", "1", "--n", "16", "--missing-rate", "0.5", "--image-size", "16",
                 "--out", str(data)]) == 0
    assert (data / "records.jsonl").exists() and (data / "lexicon.tsv").exists()

    assert main(["train", "--data", str(data), "--lexicon", str(data / "lexicon.tsv"), "--quiet",
                 "--out", str(run)] + tiny_flags()) == 0
    checkpoint = str(run / "checkpoint.pt")
    assert (run / "tag_pr.tsv").exists()

    assert main(["eval-mlr", "--checkpoint", checkpoint, "--data", str(data), "--out", str(ev)]) == 0
    metrics = pd.read_csv(ev / "mlr_metrics.tsv", sep="\t")
    assert list(metrics["metric"]) == ["mAP", "CP", "CR", "CF1", "OP", "OR", "OF1"]

    assert main(["eval-zeroshot", "--checkpoint", checkpoint, "--data", str(data), "--single-template",
                 "--baseline", checkpoint, "--out", str(ev)]) == 0
    table = pd.read_csv(ev / "zero_shot.tsv", sep="\t")
    assert table["seen"].all()

    assert main(["plot-sim", "--checkpoint", checkpoint, "--data", str(data), "--out", str(ev)]) == 0
    hist = pd.read_csv(ev / "similarity.tsv", sep="\t")
    assert len(hist) == 50
    assert hist["count"].sum() == 16


def test_random_model_similarity(tmp_path):
    data, run = tmp_path / "data", tmp_path / "run"
    assert main(["synth", "--n", "8", "--image-size", "16", "--out", str(data)]) == 0
    assert main(["train", "--data", str(data), "--lexicon", str(data / "lexicon.tsv"), "--max-steps", "0",
                 "--quiet", "--out", str(run)] + tiny_flags()) == 0
    assert main(["plot-sim", "--checkpoint", str(run / "checkpoint.pt"), "--data", str(data), "--bins", "10",
                 "--out", str(run)]) == 0
    assert len((run / "similarity.tsv").read_text().splitlines()) == 11


# --- config files ---

def test_config_round_trip():
    cfg = parse_config_lines(["# comment", "", "epochs=3", "encoder.width=96", "hyper.persist_pseudo=yes",
                              "head.kind=cls"])
    assert cfg.epochs == 3 and cfg.encoder.width == 96 and cfg.hyper.persist_pseudo and cfg.head.kind == "cls"
    assert parse_config_lines(dump_config_lines(cfg)) == cfg


def test_later_overrides_win():
    cfg = parse_config_lines(["epochs=3", "epochs=5"])
    assert cfg.epochs == 5
    assert parse_config_lines(["batch_size=4"], base=cfg).epochs == 5


@pytest.mark.parametrize("line", ["epochs", "nope=1", "encoder=3", "colour.width=3", "epochs=three",
                                  "hyper.tau=1.5", "encoder.patch_size=7", "retain_original=maybe"])
def test_invalid_config_lines(line):
    with pytest.raises(ValueError):
        parse_config_lines([line])


def test_defaults_are_valid():
    assert TrainConfig().head.group_factor == 16
