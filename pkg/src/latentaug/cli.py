"""Command line entry points.

Subcommands: train-encdec, train-gan, generate, stats, eval, gradcheck,
sweep. Common flags --config/--seed/--data/--out/--max-pairs resolve in
order: built-in defaults, then the config file, then explicit flags.

Exit codes: 0 success, 1 usage or configuration problem (bad flags, missing
files, invalid values), 2 runtime failure (divergence, internal errors).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import reporting
from .config import RunConfig, _parse_value, apply_overrides, load_config, serialize_config
from .errors import (CheckpointError, ConfigError, ShapeError,
                     TrainingDiverged, VocabularyError)
from .rng import RngStream
from .textdata import (Vocabulary, corpus_stats, encode_and_pad,
                       fit_vocabulary, load_corpus, split_corpus)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

# flags that map straight onto RunConfig fields
_CONFIG_FLAGS = ("seed", "data", "out", "max_pairs", "epochs", "batch_size",
                 "gan_epochs", "gan_batch_size")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this surface reserves 2 for
    runtime failures, so remap to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int, help="top-level random seed")
    p.add_argument("--data", help="tab-separated parallel corpus file")
    p.add_argument("--out", help="output directory for artifacts")
    p.add_argument("--max-pairs", type=int, dest="max_pairs",
                   help="cap on corpus pairs read from the data file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="latentaug",
                     description="Sequence-to-sequence translation with "
                                 "adversarial latent-space data augmentation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-encdec", help="train the translator on a parallel corpus")
    _add_common(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--dry-run", action="store_true",
                   help="print the resolved config and exit")
    p.set_defaults(func=cmd_train_encdec)

    p = sub.add_parser("train-gan", help="train the latent-space imitator "
                                         "against a frozen translator")
    _add_common(p)
    p.add_argument("--encdec", help="translator checkpoint "
                                    "(default: <out>/encdec-final.ckpt)")
    p.add_argument("--gan-epochs", type=int, dest="gan_epochs")
    p.add_argument("--gan-batch-size", type=int, dest="gan_batch_size")
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_train_gan)

    p = sub.add_parser("generate", help="decode generator samples into a "
                                        "labeled synthetic corpus")
    _add_common(p)
    p.add_argument("--encdec", help="translator checkpoint")
    p.add_argument("--gan", help="adversarial checkpoint (default: <out>/gan.ckpt)")
    p.add_argument("-n", "--count", type=int, default=1000,
                   help="number of sentences to generate")
    p.add_argument("--keep", help="comma-separated labels for the filtered "
                                  "corpus file (default: good)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("stats", help="print corpus statistics per language and split")
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("eval", help="score a trained translator on the test split")
    _add_common(p)
    p.add_argument("--encdec", help="translator checkpoint")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of every layer type")
    _add_common(p)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--cases", help="comma-separated subset of case names")
    p.add_argument("--corrupt", help=argparse.SUPPRESS)  # harness sensitivity hook
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("sweep", help="grid-search hyperparameters at reduced scale")
    _add_common(p)
    p.add_argument("--param", action="append", default=[], metavar="NAME=V1,V2",
                   help="config field and comma-separated candidate values; repeatable")
    p.add_argument("--budget", type=int, default=16)
    p.add_argument("--subsample", type=int)
    p.add_argument("--epochs", type=int, help="reduced epoch count for every run")
    p.add_argument("--target", choices=("encdec", "gan"), default="encdec")
    p.set_defaults(func=cmd_sweep)

    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = load_config(args.config, cfg)
    overrides = {}
    for name in _CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    cfg = apply_overrides(cfg, overrides)
    cfg.validate()
    return cfg


def _require_data(cfg: RunConfig) -> str:
    if not cfg.data:
        raise ConfigError("a corpus is required; pass --data or set data in the config")
    return cfg.data


def _load_splits(cfg: RunConfig):
    pairs = load_corpus(_require_data(cfg), cfg.max_pairs)
    return split_corpus(pairs)


def _checkpoint_path(explicit, cfg: RunConfig, default_name: str) -> Path:
    if explicit:
        return Path(explicit)
    return Path(cfg.out) / default_name


def _load_vocabs(ckpt_path: Path, meta: dict) -> tuple[Vocabulary, Vocabulary]:
    files = meta.get("vocab_files", {})
    base = ckpt_path.parent
    try:
        return (Vocabulary.load(base / files["src"]),
                Vocabulary.load(base / files["tgt"]))
    except (KeyError, OSError) as exc:
        raise CheckpointError(
            f"cannot load vocabularies referenced by {ckpt_path}: {exc}") from exc


def _drop_overlong(sentences: list[str], limit: int, what: str) -> list[str]:
    kept = [s for s in sentences if len(s.split()) <= limit]
    if len(kept) < len(sentences):
        log.warning("excluded %d %s sentence(s) longer than the checkpoint "
                    "pad width %d", len(sentences) - len(kept), what, limit)
    return kept


def cmd_train_encdec(args) -> int:
    from .seq2seq import train_seq2seq

    cfg = resolve_config(args)
    if args.dry_run:
        print(serialize_config(cfg), end="")
        return EXIT_OK
    train, val, _ = _load_splits(cfg)
    out = Path(cfg.out)
    params, report = train_seq2seq(cfg, train, val, RngStream(cfg.seed), out_dir=out)
    reporting.write_training_csv(out / "metrics-encdec.csv", report.history)
    reporting.render_training_figure(out / "metrics-encdec.png", report.history)
    final = report.history[-1]
    print(f"epochs: {len(report.history)}")
    print(f"final train loss {final.train_loss:.4f} acc {final.train_acc:.4f}")
    print(f"final val loss {final.val_loss:.4f} acc {final.val_acc:.4f}")
    print(f"best val acc {report.best_val_acc:.4f} at epoch {report.best_epoch}")
    print(f"artifacts in {out}")
    return EXIT_OK


def cmd_train_gan(args) -> int:
    from .gan import DiscriminatorParams, GeneratorParams, train_gan
    from .seq2seq import load_translator

    cfg = resolve_config(args)
    if args.dry_run:
        print(serialize_config(cfg), end="")
        return EXIT_OK
    ckpt = _checkpoint_path(args.encdec, cfg, "encdec-final.ckpt")
    translator, meta = load_translator(ckpt)
    vocab_src, _ = _load_vocabs(ckpt, meta)
    train, _, _ = _load_splits(cfg)
    sentences = _drop_overlong([s for s, _ in train], meta["t_src"], "training")
    ids = encode_and_pad(sentences, vocab_src, meta["t_src"], mode="eval")

    rng = RngStream(cfg.seed)
    gen = GeneratorParams.create(cfg.noise_width, translator.latent_width,
                                 rng.split("init-generator"),
                                 cfg.generator_tanh_output)
    disc = DiscriminatorParams.create(translator.latent_width,
                                      cfg.discriminator_units,
                                      rng.split("init-discriminator"))
    out = Path(cfg.out)
    gen, disc, report = train_gan(gen, disc, translator, ids, cfg,
                                  rng.split("train-gan"), out_dir=out)
    reporting.write_gan_csv(out / "metrics-gan.csv", report.history)
    reporting.render_gan_figure(out / "metrics-gan.png", report.history)
    final = report.history[-1]
    print(f"epochs: {len(report.history)}")
    print(f"final generator loss {final.gen_loss:.4f}")
    print(f"final discriminator loss {final.disc_loss:.4f}")
    print(f"moment gap (mean, std): initial ({report.moment_gap_initial[0]:.4f}, "
          f"{report.moment_gap_initial[1]:.4f}) final ({report.moment_gap_final[0]:.4f}, "
          f"{report.moment_gap_final[1]:.4f})")
    print(f"frozen translator checksum unchanged: {report.encoder_checksum[:16]}")
    print(f"artifacts in {out}")
    return EXIT_OK


def cmd_generate(args) -> int:
    from .augment import (QualityScorer, filter_corpus, generate_corpus,
                          quality_metrics, save_corpus_text)
    from .gan import load_gan
    from .seq2seq import load_translator

    cfg = resolve_config(args)
    if args.count < 1:
        raise ConfigError(f"sentence count must be >= 1, got {args.count}")
    enc_path = _checkpoint_path(args.encdec, cfg, "encdec-final.ckpt")
    gan_path = _checkpoint_path(args.gan, cfg, "gan.ckpt")
    translator, meta = load_translator(enc_path)
    gen, _, _ = load_gan(gan_path)
    _, vocab_tgt = _load_vocabs(enc_path, meta)

    train, _, _ = _load_splits(cfg)
    scorer = QualityScorer.fit([t for _, t in train], vocab_tgt,
                               tau_unrelated=cfg.tau_unrelated,
                               tau_nonsensical=cfg.tau_nonsensical)
    corpus = generate_corpus(gen, translator, vocab_tgt, meta["t_tgt"],
                             args.count, RngStream(cfg.seed).split("generate"),
                             scorer)
    keep = set((args.keep or "good").split(","))
    kept = filter_corpus(corpus, keep=keep)

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    reporting.atomic_write_text(out / "generated.txt",
                                "".join(s.text + "\n" for s in corpus))
    reporting.atomic_write_text(out / "generated-clean.txt",
                                "".join(s.text + "\n" for s in kept))
    metrics = quality_metrics(corpus)
    reporting.write_quality_report(out / "quality-report.csv", corpus, metrics)
    reporting.render_label_figure(out / "quality-labels.png", corpus)
    counts = {lbl: corpus.labels().count(lbl) for lbl in
              ("good", "repetition", "nonsensical", "unrelated", "empty")}
    print(f"generated {len(corpus)} sentences")
    for lbl, count in counts.items():
        print(f"  {lbl}: {count}")
    print(f"kept {len(kept)} ({','.join(sorted(keep))}) -> generated-clean.txt")
    print(f"artifacts in {out}")
    return EXIT_OK


def _print_split_stats(title: str, pairs, vocab_src, vocab_tgt, mode: str) -> None:
    print(f"{title} ({len(pairs)} pairs)")
    header = f"  {'language':<10}{'sentences':>10}{'avg words':>11}" \
             f"{'max words':>11}{'id mean':>10}{'id std':>10}"
    print(header)
    for label, vocab, sentences in (("source", vocab_src, [s for s, _ in pairs]),
                                    ("target", vocab_tgt, [t for _, t in pairs])):
        st = corpus_stats(sentences, vocab, mode=mode)
        print(f"  {label:<10}{st.sentences:>10}{st.avg_words:>11.2f}"
              f"{st.max_words:>11}{st.id_mean:>10.2f}{st.id_std:>10.2f}")


def cmd_stats(args) -> int:
    cfg = resolve_config(args)
    train, val, test = _load_splits(cfg)
    vocab_src = fit_vocabulary([s for s, _ in train])
    vocab_tgt = fit_vocabulary([t for _, t in train])
    print(f"vocabulary: source {vocab_src.size} words, target {vocab_tgt.size} words")
    _print_split_stats("train split", train, vocab_src, vocab_tgt, "train")
    _print_split_stats("test split", test, vocab_src, vocab_tgt, "eval")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .seq2seq import evaluate, load_translator

    cfg = resolve_config(args)
    ckpt = _checkpoint_path(args.encdec, cfg, "encdec-final.ckpt")
    translator, meta = load_translator(ckpt)
    vocab_src, vocab_tgt = _load_vocabs(ckpt, meta)
    _, _, test = _load_splits(cfg)
    usable = [(s, t) for s, t in test
              if len(s.split()) <= meta["t_src"] and len(t.split()) <= meta["t_tgt"]]
    if len(usable) < len(test):
        log.warning("excluded %d test pair(s) longer than the checkpoint pad widths",
                    len(test) - len(usable))
    if not usable:
        raise ConfigError("no test pair fits the checkpoint pad widths")
    src = encode_and_pad([s for s, _ in usable], vocab_src, meta["t_src"], mode="eval")
    tgt = encode_and_pad([t for _, t in usable], vocab_tgt, meta["t_tgt"], mode="eval")
    loss, acc = evaluate(translator, src, tgt)
    print(f"test pairs: {len(usable)}")
    print(f"test loss {loss:.4f}")
    print(f"test token accuracy {acc:.4f}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    from .gradcheck import check_gradients

    seed = args.seed if args.seed is not None else 0
    cases = args.cases.split(",") if args.cases else None
    results = check_gradients(seed=seed, tolerance=args.tolerance, cases=cases,
                              corrupt=args.corrupt)
    for r in results:
        verdict = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<18} max_rel_err {r.max_rel_err:.3e}  "
              f"worst {r.worst_param:<12} {verdict}")
    failures = [r.name for r in results if not r.passed]
    if failures:
        print(f"gradient check failed for: {', '.join(failures)}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _parse_grid(entries: list[str]) -> dict[str, list]:
    grid: dict[str, list] = {}
    for entry in entries:
        if "=" not in entry:
            raise ConfigError(f"expected NAME=V1,V2 for --param, got {entry!r}")
        name, _, values = entry.partition("=")
        name = name.strip()
        parsed = [_parse_value(name, v) for v in values.split(",") if v.strip()]
        if not parsed:
            raise ConfigError(f"--param {name} has no values")
        grid[name] = parsed
    return grid


def cmd_sweep(args) -> int:
    from .sweep import SweepSpec, run_sweep

    cfg = resolve_config(args)
    spec = SweepSpec(grid=_parse_grid(args.param), budget=args.budget,
                     max_pairs=cfg.max_pairs, epochs=args.epochs,
                     subsample=args.subsample, target=args.target)
    spec.validate()
    pairs = load_corpus(_require_data(cfg), cfg.max_pairs)
    out = Path(cfg.out)
    ranked = run_sweep(spec, cfg, pairs, RngStream(cfg.seed), out)
    metric_name = "val_acc" if args.target == "encdec" else "plateau_loss"
    print(f"{'rank':<6}{'run':<10}{metric_name:<14}{'status':<8}params")
    for rank, r in enumerate(ranked, start=1):
        metric = "-" if r.metric is None else f"{r.metric:.4f}"
        print(f"{rank:<6}{r.run_id:<10}{metric:<14}{r.status:<8}{r.overrides}")
    print(f"results table: {out / 'sweep-results.csv'}")
    return EXIT_OK if any(r.status == "ok" for r in ranked) else EXIT_RUNTIME


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse help/usage paths
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, VocabularyError, CheckpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingDiverged, ShapeError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entry() -> None:
    sys.exit(main())
