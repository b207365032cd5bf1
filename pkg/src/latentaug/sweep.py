"""Grid search driver for reduced-scale hyperparameter studies.

A sweep enumerates the cartesian product of per-parameter candidate lists,
optionally capped by an explicit random subsample, and trains one model per
combination in its own output directory with an independently derived random
stream. Translator sweeps rank by best validation accuracy (descending);
adversarial sweeps rank by the mean combined loss over the final tenth of
epochs (ascending, a plateau-quality proxy). A failed run is recorded and
the sweep moves on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

from .config import RunConfig, apply_overrides
from .errors import ConfigError
from .rng import RngStream
from .textdata import split_corpus

RANK_METRIC = {"encdec": "val_acc", "gan": "plateau_loss"}


@dataclass
class SweepSpec:
    grid: dict[str, list] = field(default_factory=dict)
    budget: int = 16
    max_pairs: int | None = None
    epochs: int | None = None
    subsample: int | None = None
    target: str = "encdec"

    def validate(self) -> None:
        if not self.grid:
            raise ConfigError("sweep grid is empty")
        if self.budget < 1:
            raise ConfigError("sweep budget must be >= 1")
        if self.target not in RANK_METRIC:
            raise ConfigError(f"unknown sweep target {self.target!r}")
        for name, values in self.grid.items():
            if not values:
                raise ConfigError(f"sweep parameter {name!r} has no values")


@dataclass
class SweepResult:
    run_id: str
    overrides: dict
    metric: float | None
    status: str
    error: str = ""


def combinations(spec: SweepSpec, rng: RngStream) -> list[dict]:
    """Grid combos in deterministic order, subsampled only when declared."""
    spec.validate()
    names = list(spec.grid.keys())
    combos = [dict(zip(names, values))
              for values in itertools.product(*(spec.grid[n] for n in names))]
    if len(combos) > spec.budget:
        if spec.subsample is None:
            raise ConfigError(
                f"grid has {len(combos)} combinations, over budget {spec.budget}; "
                "declare a subsample to run a random subset")
        take = min(spec.subsample, spec.budget)
        picks = rng.permutation(len(combos))[:take]
        combos = [combos[i] for i in sorted(picks)]
    return combos


def _run_config(base: RunConfig, spec: SweepSpec, overrides: dict) -> RunConfig:
    merged = dict(overrides)
    if spec.epochs is not None and "epochs" not in merged:
        merged["epochs"] = spec.epochs
        merged.setdefault("gan_epochs", spec.epochs)
    cfg = apply_overrides(base, merged)
    cfg.validate()
    return cfg


def run_sweep(spec: SweepSpec, base: RunConfig, pairs, rng: RngStream,
              out_root) -> list[SweepResult]:
    """Train one model per combination; return results ranked best-first."""
    from .reporting import write_gan_csv, write_training_csv

    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    if spec.max_pairs is not None:
        pairs = pairs[:spec.max_pairs]
    train, val, _ = split_corpus(pairs)

    results = []
    for i, overrides in enumerate(combinations(spec, rng.split("subsample"))):
        run_id = f"run-{i:03d}"
        run_dir = out_root / run_id
        try:
            cfg = _run_config(base, spec, overrides)
            run_rng = rng.split(run_id)
            if spec.target == "encdec":
                from .seq2seq import train_seq2seq
                _, report = train_seq2seq(cfg, train, val, run_rng, out_dir=run_dir)
                write_training_csv(run_dir / "metrics-encdec.csv", report.history)
                metric = report.best_val_acc
            else:
                metric = _gan_run(cfg, train, run_rng, run_dir, write_gan_csv)
            results.append(SweepResult(run_id=run_id, overrides=overrides,
                                       metric=metric, status="ok"))
        except Exception as exc:
            results.append(SweepResult(run_id=run_id, overrides=overrides,
                                       metric=None, status="failed",
                                       error=f"{type(exc).__name__}: {exc}"))

    reverse = spec.target == "encdec"
    ranked = sorted([r for r in results if r.status == "ok"],
                    key=lambda r: r.metric, reverse=reverse)
    ranked += [r for r in results if r.status != "ok"]
    write_results_csv(out_root / "sweep-results.csv", spec, ranked)
    return ranked


def _gan_run(cfg: RunConfig, train_pairs, rng: RngStream, run_dir, write_csv) -> float:
    from .gan import DiscriminatorParams, GeneratorParams, train_gan
    from .seq2seq import Seq2SeqParams
    from .textdata import encode_and_pad, fit_vocabulary, max_sentence_length

    sentences = [s for s, _ in train_pairs]
    vocab = fit_vocabulary(sentences)
    ids = encode_and_pad(sentences, vocab, max_sentence_length(sentences))
    translator = Seq2SeqParams.create(vocab.size, vocab.size, cfg.embedding_dim,
                                      cfg.lstm_units, rng.split("translator"))
    gen = GeneratorParams.create(cfg.noise_width, translator.latent_width,
                                 rng.split("generator"), cfg.generator_tanh_output)
    disc = DiscriminatorParams.create(translator.latent_width,
                                      cfg.discriminator_units, rng.split("discriminator"))
    _, _, report = train_gan(gen, disc, translator, ids, cfg,
                             rng.split("train"), out_dir=run_dir)
    write_csv(Path(run_dir) / "metrics-gan.csv", report.history)
    window = max(1, len(report.history) // 10)
    tail = report.history[-window:]
    return sum((e.gen_loss + e.disc_loss) / 2 for e in tail) / len(tail)


def write_results_csv(path, spec: SweepSpec, ranked: list[SweepResult]) -> None:
    from .reporting import atomic_write_text, rows_to_csv

    names = list(spec.grid.keys())
    header = ["rank", "run_id"] + names + [RANK_METRIC[spec.target], "status", "error"]
    rows = []
    for rank, r in enumerate(ranked, start=1):
        rows.append([rank, r.run_id]
                    + [r.overrides.get(n, "") for n in names]
                    + ["" if r.metric is None else repr(r.metric), r.status, r.error])
    atomic_write_text(path, rows_to_csv(header, rows))
