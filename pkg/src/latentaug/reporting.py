"""Metrics persistence: delimited training logs, quality reports, and small
matplotlib figures rendered next to each CSV.

CSV files are the machine-readable interface; the PNGs are a convenience
rendering of the same numbers. All writes go through a temp file followed by
an atomic rename, so a crash never leaves a partial file behind.
"""

from __future__ import annotations

import csv
import os
import tempfile
from collections import Counter
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .augment import LABELS, GeneratedCorpus, QualityMetrics


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def rows_to_csv(header, rows) -> str:
    import io
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_training_csv(path, history) -> None:
    """epoch,train_loss,train_acc,val_loss,val_acc rows, one per epoch."""
    rows = [(m.epoch, repr(m.train_loss), repr(m.train_acc),
             repr(m.val_loss), repr(m.val_acc)) for m in history]
    atomic_write_text(path, rows_to_csv(
        ["epoch", "train_loss", "train_acc", "val_loss", "val_acc"], rows))


def write_gan_csv(path, history) -> None:
    rows = [(m.epoch, repr(m.gen_loss), repr(m.disc_loss),
             repr(m.disc_acc_real), repr(m.disc_acc_fake)) for m in history]
    atomic_write_text(path, rows_to_csv(
        ["epoch", "gen_loss", "disc_loss", "disc_acc_real", "disc_acc_fake"], rows))


def write_quality_report(path, corpus: GeneratedCorpus, metrics: QualityMetrics) -> None:
    """Per-sentence rows followed by a metric,value summary block."""
    body = rows_to_csv(["index", "sentence", "label"],
                        [(i, s.text, s.quality) for i, s in enumerate(corpus)])
    summary = rows_to_csv(["metric", "value"], [
        ("repetition_rate", repr(metrics.repetition_rate)),
        ("distinct_1", repr(metrics.distinct_1)),
        ("distinct_2", repr(metrics.distinct_2)),
        ("empty_rate", repr(metrics.empty_rate)),
        ("mean_length", repr(metrics.mean_length)),
    ])
    atomic_write_text(path, body + "\n" + summary)


def read_csv_rows(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def render_training_figure(path, history) -> None:
    """Loss and accuracy curves for both splits, saved as one PNG."""
    epochs = [m.epoch for m in history]
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(10, 4))
    ax_loss.plot(epochs, [m.train_loss for m in history], label="train")
    ax_loss.plot(epochs, [m.val_loss for m in history], label="validation")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    ax_loss.legend()
    ax_acc.plot(epochs, [m.train_acc for m in history], label="train")
    ax_acc.plot(epochs, [m.val_acc for m in history], label="validation")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("token accuracy")
    ax_acc.set_ylim(0.0, 1.0)
    ax_acc.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_gan_figure(path, history) -> None:
    epochs = [m.epoch for m in history]
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(10, 4))
    ax_loss.plot(epochs, [m.gen_loss for m in history], label="generator")
    ax_loss.plot(epochs, [m.disc_loss for m in history], label="discriminator")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    ax_loss.legend()
    ax_acc.plot(epochs, [m.disc_acc_real for m in history], label="real batch")
    ax_acc.plot(epochs, [m.disc_acc_fake for m in history], label="fake batch")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("discriminator accuracy")
    ax_acc.set_ylim(0.0, 1.0)
    ax_acc.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_label_figure(path, corpus: GeneratedCorpus) -> None:
    counts = Counter(corpus.labels())
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(list(LABELS), [counts.get(lbl, 0) for lbl in LABELS])
    ax.set_ylabel("sentences")
    ax.set_xlabel("quality label")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
