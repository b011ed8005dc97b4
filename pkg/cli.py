"""Tag-supervised image-text pre-training - CLI entry point.

Usage:
    python cli.py build-lexicon --captions records.jsonl --vocab vocab.txt --out DIR [--min-count 6] [--remove-top 0]
    python cli.py extract-tags --lexicon lexicon.tsv --captions records.jsonl --out DIR
    python cli.py synth --seed 0 --n 64 --missing-rate 0.5 --out DIR [--lexicon lexicon.tsv]
    python cli.py train --config toy.cfg --seed 7 --out DIR [--data DIR --lexicon lexicon.tsv] [--set key=value ...]
    python cli.py eval-mlr --checkpoint DIR/checkpoint.pt --data DIR --out DIR
    python cli.py eval-zeroshot --checkpoint DIR/checkpoint.pt --data DIR --out DIR [--single-template]
    python cli.py estimate-flops --config vitb16.cfg
    python cli.py plot-sim --checkpoint DIR/checkpoint.pt --data DIR --out DIR
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pandas as pd

import config
from models.lexicon import TagLexicon
from models.manifest import MANIFEST_NAME, RunManifest
from models.tags import TagVector
from models.train_config import dump_config_lines, load_train_config

logger = logging.getLogger("cli")


def _resolve_config(path: str | None) -> str | None:
    """Accept a config path or a bare file name from the bundled configs/ directory."""
    if not path or os.path.exists(path):
        return path
    bundled = os.path.join(config.CONFIGS_DIR, path)
    if os.path.exists(bundled):
        return bundled
    raise FileNotFoundError(f"Config file not found: {path}")


def _load_cfg(args, extra_overrides: list[str] | None = None):
    overrides = list(args.set or []) + list(extra_overrides or [])
    path = _resolve_config(args.config)
    return load_train_config(path, overrides), path, overrides


def _out(args, name: str) -> str:
    return os.path.join(args.out, name)


def _lexicon_or_default(path: str | None, class_names: list[str] | None = None) -> TagLexicon:
    from tagging.lexicon_io import load_lexicon

    if path:
        return load_lexicon(path)
    if class_names is not None:
        return TagLexicon.from_frequencies({name: 1 for name in class_names})
    raise ValueError("--lexicon is required")


# --- Commands ---

def cmd_build_lexicon(args):
    """Build the tag lexicon from a caption corpus."""
    from ingestion.corpus import read_captions
    from output.printer import print_lexicon_summary
    from tagging.lexicon_builder import build_lexicon, read_base_vocab
    from tagging.lexicon_io import save_lexicon

    lexicon_path = _out(args, "lexicon.tsv")
    manifest = RunManifest(command="build-lexicon", outputs=[lexicon_path, _out(args, MANIFEST_NAME)],
                           config={"min_count": args.min_count, "remove_top": args.remove_top,
                                   "strictly_greater": args.strictly_greater,
                                   "strict_compounds": args.strict_compounds})
    manifest.add_input(args.captions)
    manifest.add_input(args.base_vocab)
    manifest.write(args.out)

    captions = read_captions(args.captions)
    lexicon = build_lexicon(
        captions,
        read_base_vocab(args.base_vocab),
        min_count=args.min_count,
        remove_top_t=args.remove_top,
        strictly_greater=args.strictly_greater,
        strict_compounds=args.strict_compounds,
    )
    save_lexicon(lexicon, lexicon_path)
    print_lexicon_summary(lexicon)
    print(f"\nLexicon written to {lexicon_path}")


def cmd_extract_tags(args):
    """Extract tags from every caption."""
    from ingestion.corpus import read_caption_rows
    from tagging.lexicon_io import load_lexicon
    from tagging.tagger import batch_extract

    tags_path = _out(args, "tags.tsv")
    manifest = RunManifest(command="extract-tags", outputs=[tags_path, _out(args, MANIFEST_NAME)],
                           config={"strict_compounds": args.strict_compounds})
    manifest.add_input(args.lexicon)
    manifest.add_input(args.captions)
    manifest.write(args.out)

    lexicon = load_lexicon(args.lexicon)
    rows = read_caption_rows(args.captions)
    captions = [caption for _, caption in rows]
    vectors = batch_extract(captions, lexicon, args.strict_compounds)
    df = pd.DataFrame({
        "id": [rid for rid, _ in rows],
        "tags": [",".join(v.names(lexicon.names)) for v in vectors],
    })
    # caption-id TAB comma-separated tag names, no header
    df.to_csv(tags_path, sep="\t", index=False, header=False)
    tagged = sum(1 for v in vectors if v.indices)
    print(f"Tagged {tagged} of {len(captions)} captions; written to {tags_path}")


def cmd_synth(args):
    """Generate a synthetic fixture with planted missing tags."""
    from ingestion.corpus import save_corpus
    from ingestion.synth import default_synth_lexicon, recount_lexicon, synth_fixture
    from tagging.lexicon_io import load_lexicon, save_lexicon

    lexicon_path = _out(args, "lexicon.tsv")
    manifest = RunManifest(
        command="synth",
        seed=args.seed,
        config={"n": args.n, "missing_rate": args.missing_rate, "image_size": args.image_size,
                "min_concepts": args.min_concepts, "max_concepts": args.max_concepts},
        outputs=[_out(args, "records.jsonl"), _out(args, "images"), lexicon_path, _out(args, MANIFEST_NAME)],
    )
    manifest.add_input(args.lexicon)
    manifest.write(args.out)

    lexicon = load_lexicon(args.lexicon) if args.lexicon else default_synth_lexicon()
    records = synth_fixture(args.seed, args.n, lexicon, args.missing_rate, image_size=args.image_size,
                            min_concepts=args.min_concepts, max_concepts=args.max_concepts)
    save_corpus(records, args.out)
    save_lexicon(recount_lexicon(lexicon, records), lexicon_path)
    print(f"Wrote {len(records)} synthetic pairs over {len(lexicon)} tags to {args.out}")


def cmd_train(args):
    """Train the joint model."""
    from ingestion.corpus import load_corpus
    from ingestion.synth import default_synth_lexicon, recount_lexicon, synth_fixture
    from output.printer import print_training_summary
    from output.tables import METRICS_LOG, TAG_PR_LOG
    from training.trainer import CHECKPOINT_NAME, train

    seed_override = [f"seed={args.seed}"] if args.seed is not None else []
    cfg, cfg_path, overrides = _load_cfg(args, seed_override)

    if args.data:
        lexicon = _lexicon_or_default(args.lexicon)
        records = load_corpus(args.data, image_size=cfg.encoder.image_size)
    else:
        base = _lexicon_or_default(args.lexicon) if args.lexicon else default_synth_lexicon()
        records = synth_fixture(cfg.seed, args.synth_n, base, args.missing_rate,
                                image_size=cfg.encoder.image_size)
        lexicon = recount_lexicon(base, records)

    outputs = [_out(args, METRICS_LOG), _out(args, CHECKPOINT_NAME), _out(args, MANIFEST_NAME)]
    if all(r.full_tags is not None for r in records):
        outputs.insert(1, _out(args, TAG_PR_LOG))
    manifest = RunManifest(command="train", seed=cfg.seed, config=cfg.to_dict(), overrides=overrides,
                           outputs=outputs)
    for path in (cfg_path, args.data, args.lexicon, args.resume):
        manifest.add_input(path)
    manifest.write(args.out)
    with open(_out(args, "config.cfg"), "w", encoding="utf-8") as f:
        f.write("\n".join(dump_config_lines(cfg)) + "\n")
    manifest.outputs.append(_out(args, "config.cfg"))

    result = train(records, lexicon, cfg, out_dir=args.out, resume_from=args.resume,
                   max_steps=args.max_steps, progress=not args.quiet)

    checkpoints_dir = _out(args, "checkpoints")
    if os.path.isdir(checkpoints_dir):
        manifest.outputs += sorted(os.path.join(checkpoints_dir, f) for f in os.listdir(checkpoints_dir))
    manifest.write(args.out)
    print_training_summary(result.steps, result.epoch_tags)


def cmd_eval_mlr(args):
    """Multi-label recognition metrics of a trained model."""
    from evaluation.inference import infer_images
    from evaluation.metrics import multilabel_metrics
    from ingestion.corpus import load_corpus
    from output.printer import print_multilabel_metrics
    from output.tables import write_multilabel_metrics
    from tagging.tagger import tag_matrix
    from training.checkpoint import load_checkpoint
    from training.trainer import load_trained_model

    metrics_path = _out(args, "mlr_metrics.tsv")
    manifest = RunManifest(command="eval-mlr", config={"threshold": args.threshold},
                           outputs=[metrics_path, _out(args, MANIFEST_NAME)])
    for path in (args.checkpoint, args.data, args.lexicon):
        manifest.add_input(path)
    manifest.write(args.out)

    class_names = load_checkpoint(args.checkpoint).class_names
    lexicon = _lexicon_or_default(args.lexicon, class_names)
    model, _, cfg = load_trained_model(args.checkpoint, lexicon)
    records = load_corpus(args.data, image_size=cfg.encoder.image_size)

    if all(r.full_tags is not None for r in records):
        truth = np.stack([TagVector.from_names(r.full_tags, lexicon.names, ignore_unknown=True).bits
                          for r in records])
    else:
        truth = tag_matrix([r.caption for r in records], lexicon, cfg.strict_compounds)
    probs = infer_images(model, records).probs
    metrics = multilabel_metrics(probs, truth, args.threshold)
    write_multilabel_metrics(metrics, metrics_path)
    print_multilabel_metrics(metrics)


def _read_class_names(path: str | None, records) -> list[str]:
    if path:
        with open(path, "r", encoding="utf-8") as f:
            return [line.strip() for line in f if line.strip() and not line.startswith("#")]
    labels = [r.label for r in records]
    if any(label is None for label in labels):
        raise ValueError("Records need a 'label' for zero-shot evaluation")
    return sorted(set(labels))


def cmd_eval_zeroshot(args):
    """Prompt-ensembled zero-shot classification."""
    from evaluation.inference import infer_images
    from evaluation.zero_shot import (improved_class_breakdown, load_prompt_set, model_text_encoder,
                                      zero_shot_classify)
    from ingestion.corpus import load_corpus
    from output.printer import print_zero_shot
    from output.tables import write_zero_shot
    from training.checkpoint import load_checkpoint
    from training.trainer import load_trained_model

    result_path = _out(args, "zero_shot.tsv")
    manifest = RunManifest(command="eval-zeroshot",
                           config={"templates": args.templates, "single_template": args.single_template},
                           outputs=[result_path, _out(args, MANIFEST_NAME)])
    for path in (args.checkpoint, args.baseline, args.data, args.lexicon, args.classes, args.templates):
        manifest.add_input(path)
    manifest.write(args.out)

    lexicon = _lexicon_or_default(args.lexicon, load_checkpoint(args.checkpoint).class_names)
    prompts = load_prompt_set(args.templates, single_template=args.single_template)

    def run(checkpoint: str):
        model, vocab, cfg = load_trained_model(checkpoint)
        records = load_corpus(args.data, image_size=cfg.encoder.image_size)
        class_names = _read_class_names(args.classes, records)
        index = {name: i for i, name in enumerate(class_names)}
        unknown = sorted({r.label for r in records} - set(index))
        if unknown:
            raise ValueError(f"Record labels missing from the class list: {unknown}")
        labels = [index[r.label] for r in records]
        z_img = infer_images(model, records).embeddings
        return zero_shot_classify(z_img, labels, class_names, prompts, model_text_encoder(model, vocab), lexicon)

    result = run(args.checkpoint)
    write_zero_shot(result, result_path)
    print_zero_shot(result)

    if args.baseline:
        improved = improved_class_breakdown(run(args.baseline), result)
        share = "-" if improved.unseen_share is None else f"{improved.unseen_share:.1%}"
        print(f"\n  Improved over baseline: {len(improved.names)} classes ({share} unseen)")


def cmd_estimate_flops(args):
    """Analytic FLOPs of the image encoder and recognition head."""
    from evaluation.flops import flop_estimate
    from output.printer import print_flops
    from output.tables import flops_frame

    cfg, cfg_path, overrides = _load_cfg(args)
    estimate = flop_estimate(cfg.encoder, cfg.head, args.num_classes, args.flops_per_mac)
    if args.out:
        flops_path = _out(args, "flops.tsv")
        manifest = RunManifest(command="estimate-flops", config=cfg.to_dict(), overrides=overrides,
                               outputs=[flops_path, _out(args, MANIFEST_NAME)])
        manifest.add_input(cfg_path)
        manifest.write(args.out)
        flops_frame(estimate).to_csv(flops_path, sep="\t", index=False)
    print_flops(estimate)


def cmd_plot_sim(args):
    """Histogram of matched image-text similarities."""
    from evaluation.similarity import similarity_distribution
    from ingestion.corpus import load_corpus
    from output.printer import print_histogram
    from output.tables import write_histogram
    from training.trainer import load_trained_model

    hist_path = _out(args, "similarity.tsv")
    manifest = RunManifest(command="plot-sim", config={"bins": args.bins},
                           outputs=[hist_path, _out(args, MANIFEST_NAME)])
    manifest.add_input(args.checkpoint)
    manifest.add_input(args.data)
    manifest.write(args.out)

    model, vocab, cfg = load_trained_model(args.checkpoint)
    records = load_corpus(args.data, image_size=cfg.encoder.image_size)
    hist = similarity_distribution(records, model, vocab, bins=args.bins)
    write_histogram(hist, hist_path)
    print_histogram(hist)


# --- Main ---

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Tag-supervised image-text pre-training",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Workflow:
  1. python cli.py synth --seed 0 --n 256 --missing-rate 0.5 --out runs/data
  2. python cli.py train --config toy.cfg --data runs/data --lexicon runs/data/lexicon.tsv --out runs/toy
  3. python cli.py eval-mlr --checkpoint runs/toy/checkpoint.pt --data runs/data --out runs/eval
  4. python cli.py eval-zeroshot --checkpoint runs/toy/checkpoint.pt --data runs/data --out runs/eval
        """
    )
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    def config_flags(p):
        p.add_argument("--config", help="key=value config file (path or name under configs/)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="Config override, repeatable")

    # build-lexicon
    p_lex = subparsers.add_parser("build-lexicon", help="Build the tag lexicon from captions")
    p_lex.add_argument("--captions", required=True, help="records.jsonl or a text file of captions")
    p_lex.add_argument("--vocab", "--base-vocab", dest="base_vocab", required=True,
                       help="One tag per line, optional TAB 1 hypernym flag")
    p_lex.add_argument("--min-count", type=int, default=config.DEFAULT_MIN_COUNT)
    p_lex.add_argument("--remove-top", type=int, default=config.DEFAULT_REMOVE_TOP)
    p_lex.add_argument("--strictly-greater", action="store_true", help="Keep tags with frequency > min-count")
    p_lex.add_argument("--strict-compounds", action="store_true", help="Match compounds on surface forms")
    p_lex.add_argument("--out", required=True)

    # extract-tags
    p_tags = subparsers.add_parser("extract-tags", help="Extract caption tags")
    p_tags.add_argument("--lexicon", required=True)
    p_tags.add_argument("--captions", required=True)
    p_tags.add_argument("--strict-compounds", action="store_true")
    p_tags.add_argument("--out", required=True)

    # synth
    p_synth = subparsers.add_parser("synth", help="Generate a synthetic fixture")
    p_synth.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    p_synth.add_argument("--n", type=int, default=64)
    p_synth.add_argument("--missing-rate", type=float, default=0.0)
    p_synth.add_argument("--lexicon", help="Tag lexicon (default: bundled synthetic tag list)")
    p_synth.add_argument("--image-size", type=int, default=64)
    p_synth.add_argument("--min-concepts", type=int, default=config.SYNTH_MIN_CONCEPTS)
    p_synth.add_argument("--max-concepts", type=int, default=config.SYNTH_MAX_CONCEPTS)
    p_synth.add_argument("--out", required=True)

    # train
    p_train = subparsers.add_parser("train", help="Train the joint model")
    config_flags(p_train)
    p_train.add_argument("--seed", type=int, help="Overrides the config seed")
    p_train.add_argument("--data", help="Corpus directory or records.jsonl (default: synthetic fixture)")
    p_train.add_argument("--lexicon")
    p_train.add_argument("--synth-n", type=int, default=32, help="Fixture size when --data is omitted")
    p_train.add_argument("--missing-rate", type=float, default=0.5, help="Fixture missing rate when --data is omitted")
    p_train.add_argument("--resume", help="Checkpoint to resume from")
    p_train.add_argument("--max-steps", type=int)
    p_train.add_argument("--quiet", action="store_true", help="No progress bar")
    p_train.add_argument("--out", required=True)

    # eval-mlr
    p_mlr = subparsers.add_parser("eval-mlr", help="Multi-label recognition metrics")
    p_mlr.add_argument("--checkpoint", required=True)
    p_mlr.add_argument("--data", required=True)
    p_mlr.add_argument("--lexicon")
    p_mlr.add_argument("--threshold", type=float, default=config.DEFAULT_THRESHOLD)
    p_mlr.add_argument("--out", required=True)

    # eval-zeroshot
    p_zs = subparsers.add_parser("eval-zeroshot", help="Zero-shot classification")
    p_zs.add_argument("--checkpoint", required=True)
    p_zs.add_argument("--data", required=True)
    p_zs.add_argument("--lexicon")
    p_zs.add_argument("--classes", help="Class names, one per line (default: record labels)")
    p_zs.add_argument("--templates", default=config.PROMPT_TEMPLATES_PATH)
    p_zs.add_argument("--single-template", action="store_true", help=f'Use only "{config.SINGLE_TEMPLATE}"')
    p_zs.add_argument("--baseline", help="Second checkpoint to compare per-class accuracy against")
    p_zs.add_argument("--out", required=True)

    # estimate-flops
    p_flops = subparsers.add_parser("estimate-flops", help="Analytic encoder and head FLOPs")
    config_flags(p_flops)
    p_flops.add_argument("--num-classes", type=int, default=config.VITB16_NUM_CLASSES)
    p_flops.add_argument("--flops-per-mac", type=int, choices=[1, 2], default=config.FLOPS_PER_MAC)
    p_flops.add_argument("--out")

    # plot-sim
    p_sim = subparsers.add_parser("plot-sim", help="Image-text similarity histogram")
    p_sim.add_argument("--checkpoint", required=True)
    p_sim.add_argument("--data", required=True)
    p_sim.add_argument("--bins", type=int, default=config.HISTOGRAM_BINS)
    p_sim.add_argument("--out", required=True)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if not args.command:
        parser.print_help()
        return 2

    commands = {
        "build-lexicon": cmd_build_lexicon,
        "extract-tags": cmd_extract_tags,
        "synth": cmd_synth,
        "train": cmd_train,
        "eval-mlr": cmd_eval_mlr,
        "eval-zeroshot": cmd_eval_zeroshot,
        "estimate-flops": cmd_estimate_flops,
        "plot-sim": cmd_plot_sim,
    }

    try:
        commands[args.command](args)
    except (ValueError, FileNotFoundError, FloatingPointError, RuntimeError) as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
