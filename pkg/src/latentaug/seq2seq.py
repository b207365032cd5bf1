"""Sequence-to-sequence translator: embedding, bidirectional recurrent
encoder, repeat-vector decoder, per-step softmax head.

The encoder runs a forward and a backward LSTM over the embedded source and
concatenates their final hidden states into one latent vector per sentence
(width 2H). The decoder receives that vector repeated once per output step;
it never sees gold target tokens. Class 0 is padding; classes 1..V are
vocabulary words; class V+1 is the eval-time unknown bucket, so both the
embedding table and the softmax head carry V+2 rows for their language.

Loss is categorical cross entropy over ALL positions, padding included (no
masking), plus L2 penalties on the recurrent kernels. Accuracy counts every
position the same way, which inflates scores on short sentences; that is the
convention the reported numbers use, so it is kept and documented.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensor as T
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig
from .errors import CheckpointError, ConfigError, TrainingDiverged
from .layers import DenseWeights, LstmWeights, dense, glorot_init, lstm_sequence
from .rng import RngStream
from .tensor import Tensor
from .textdata import (PaddedBatch, Vocabulary, encode_and_pad, fit_vocabulary,
                       max_sentence_length)

log = logging.getLogger(__name__)


def _ids(batch) -> np.ndarray:
    return batch.ids if isinstance(batch, PaddedBatch) else np.asarray(batch)


@dataclass
class Seq2SeqParams:
    embedding: Tensor        # (src vocab + 2, E)
    encoder_fwd: LstmWeights
    encoder_bwd: LstmWeights
    decoder: LstmWeights     # input 2H, hidden H
    logits: DenseWeights     # (H, tgt vocab + 2)

    @classmethod
    def create(cls, src_vocab_size: int, tgt_vocab_size: int, embedding_dim: int,
               lstm_units: int, rng: RngStream) -> "Seq2SeqParams":
        e, h = embedding_dim, lstm_units
        return cls(
            embedding=T.parameter(glorot_init((src_vocab_size + 2, e), rng.split("embedding"))),
            encoder_fwd=LstmWeights.create(e, h, rng.split("encoder-fwd")),
            encoder_bwd=LstmWeights.create(e, h, rng.split("encoder-bwd")),
            decoder=LstmWeights.create(2 * h, h, rng.split("decoder")),
            logits=DenseWeights.create(h, tgt_vocab_size + 2, rng.split("logits")),
        )

    @property
    def lstm_units(self) -> int:
        return self.encoder_fwd.units

    @property
    def latent_width(self) -> int:
        return 2 * self.lstm_units

    @property
    def target_classes(self) -> int:
        return self.logits.w.shape[1]

    def params(self) -> list[Tensor]:
        out = [self.embedding]
        for w in (self.encoder_fwd, self.encoder_bwd, self.decoder):
            out.extend(w.params())
        out.extend(self.logits.params())
        return out

    def encoder_kernels(self) -> list[Tensor]:
        return self.encoder_fwd.kernels() + self.encoder_bwd.kernels()

    def decoder_kernels(self) -> list[Tensor]:
        return self.decoder.kernels()

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {"embedding": self.embedding.data}
        for prefix, w in (("encoder_fwd", self.encoder_fwd),
                          ("encoder_bwd", self.encoder_bwd),
                          ("decoder", self.decoder)):
            state[f"{prefix}.w_x"] = w.w_x.data
            state[f"{prefix}.w_h"] = w.w_h.data
            state[f"{prefix}.b"] = w.b.data
        state["logits.w"] = self.logits.w.data
        state["logits.b"] = self.logits.b.data
        return state

    def copy_state(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.state_dict().items()}

    @classmethod
    def from_state(cls, state: dict[str, np.ndarray], trainable: bool = False) -> "Seq2SeqParams":
        def wrap(name):
            return Tensor(state[name].copy(), requires_grad=trainable)
        def lstm(prefix):
            return LstmWeights(w_x=wrap(f"{prefix}.w_x"), w_h=wrap(f"{prefix}.w_h"),
                               b=wrap(f"{prefix}.b"))
        try:
            return cls(
                embedding=wrap("embedding"),
                encoder_fwd=lstm("encoder_fwd"),
                encoder_bwd=lstm("encoder_bwd"),
                decoder=lstm("decoder"),
                logits=DenseWeights(w=wrap("logits.w"), b=wrap("logits.b")),
            )
        except KeyError as exc:
            raise CheckpointError(f"state is missing tensor {exc}") from exc


def encode(params: Seq2SeqParams, batch, rng=None, training: bool = False,
           dropout_rate: float = 0.0) -> Tensor:
    """Embed source ids and reduce them to one latent vector per row (B x 2H)."""
    x = T.embedding_lookup(params.embedding, _ids(batch))
    x = T.dropout(x, dropout_rate, rng, training)
    _, h_fwd, _ = lstm_sequence(params.encoder_fwd, x)
    _, h_bwd, _ = lstm_sequence(params.encoder_bwd, x, reverse=True)
    return T.concat([h_fwd, h_bwd], axis=1)


def decode(params: Seq2SeqParams, latent: Tensor, t_tgt: int, rng=None,
           training: bool = False, dropout_rate: float = 0.0,
           dropout_logits: float = 0.0) -> Tensor:
    """Repeat the latent vector t_tgt times and emit per-step distributions."""
    batch = latent.shape[0]
    units = params.lstm_units
    seq = T.repeat_vector(latent, t_tgt)
    seq = T.dropout(seq, dropout_rate, rng, training)
    hidden, _, _ = lstm_sequence(params.decoder, seq)
    out = T.stack(hidden, axis=1)
    out = T.dropout(out, dropout_logits, rng, training)
    flat = T.reshape(out, (batch * t_tgt, units))
    scores = dense(flat, params.logits)
    return T.softmax(T.reshape(scores, (batch, t_tgt, params.target_classes)))


def token_accuracy(pred, target) -> float:
    """Fraction of ALL positions (padding included) where argmax hits the target.

    Ties resolve toward the lowest class id.
    """
    probs = pred.data if isinstance(pred, Tensor) else np.asarray(pred)
    ids = _ids(target)
    return float((probs.argmax(axis=-1) == ids).mean())


def evaluate(params: Seq2SeqParams, src, tgt, chunk: int = 512) -> tuple[float, float]:
    """Inference-mode mean cross entropy and token accuracy over a split."""
    src_ids, tgt_ids = _ids(src), _ids(tgt)
    total_nll = 0.0
    correct = 0
    positions = 0
    for lo in range(0, src_ids.shape[0], chunk):
        hi = min(lo + chunk, src_ids.shape[0])
        probs = decode(params, encode(params, src_ids[lo:hi]), tgt_ids.shape[1])
        n = probs.data.shape[0] * probs.data.shape[1]
        total_nll += T.categorical_cross_entropy(probs, tgt_ids[lo:hi]).item() * n
        correct += int((probs.data.argmax(axis=-1) == tgt_ids[lo:hi]).sum())
        positions += n
    return total_nll / positions, correct / positions


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass
class TrainReport:
    history: list[EpochMetrics] = field(default_factory=list)
    best_epoch: int = 0
    best_val_acc: float = 0.0


@dataclass
class PreparedData:
    vocab_src: Vocabulary
    vocab_tgt: Vocabulary
    t_src: int
    t_tgt: int
    src_train: PaddedBatch
    tgt_train: PaddedBatch
    src_val: PaddedBatch
    tgt_val: PaddedBatch


def prepare_training_data(train_pairs, val_pairs) -> PreparedData:
    """Fit vocabularies and pad widths on the training split, encode both splits.

    Validation pairs longer than the training pad width are excluded (with a
    warning); their words fall back to the unknown id.
    """
    if not train_pairs or not val_pairs:
        raise ConfigError("training and validation splits must both be nonempty")
    src_sents = [s for s, _ in train_pairs]
    tgt_sents = [t for _, t in train_pairs]
    vocab_src, vocab_tgt = fit_vocabulary(src_sents), fit_vocabulary(tgt_sents)
    t_src, t_tgt = max_sentence_length(src_sents), max_sentence_length(tgt_sents)

    usable = [(s, t) for s, t in val_pairs
              if len(s.split()) <= t_src and len(t.split()) <= t_tgt]
    if len(usable) < len(val_pairs):
        log.warning("excluded %d validation pair(s) longer than the training pad width",
                    len(val_pairs) - len(usable))
    if not usable:
        raise ConfigError("no validation pair fits the training pad widths")

    return PreparedData(
        vocab_src=vocab_src, vocab_tgt=vocab_tgt, t_src=t_src, t_tgt=t_tgt,
        src_train=encode_and_pad(src_sents, vocab_src, t_src),
        tgt_train=encode_and_pad(tgt_sents, vocab_tgt, t_tgt),
        src_val=encode_and_pad([s for s, _ in usable], vocab_src, t_src, mode="eval"),
        tgt_val=encode_and_pad([t for _, t in usable], vocab_tgt, t_tgt, mode="eval"),
    )


def train_seq2seq(config: RunConfig, train_pairs, val_pairs, rng: RngStream,
                  out_dir=None, on_epoch=None) -> tuple[Seq2SeqParams, TrainReport]:
    """Minibatch Adam training of the full translator.

    Per epoch: shuffle, train on every minibatch (dropout active), then score
    the validation split in inference mode. Emits final and best-validation
    checkpoints plus both vocabularies when out_dir is given. Training metrics
    are the running minibatch averages of the optimized objective (cross
    entropy plus L2) and of token accuracy, measured with dropout active.
    """
    from .optim import Adam  # local import keeps module load cheap

    config.validate()
    data = prepare_training_data(train_pairs, val_pairs)
    params = Seq2SeqParams.create(data.vocab_src.size, data.vocab_tgt.size,
                                  config.embedding_dim, config.lstm_units,
                                  rng.split("init-encdec"))
    opt = Adam(params.params(), config.learning_rate, config.beta1, config.beta2)
    shuffle = rng.split("shuffle")
    drop = rng.split("dropout")

    src, tgt = data.src_train.ids, data.tgt_train.ids
    n = src.shape[0]
    report = TrainReport()
    best_state = None

    for epoch in range(1, config.epochs + 1):
        order = shuffle.permutation(n)
        loss_sum = 0.0
        correct = 0
        positions = 0
        for start in range(0, n, config.batch_size):
            rows = order[start:start + config.batch_size]
            latent = encode(params, src[rows], drop, training=True,
                            dropout_rate=config.dropout_encoder)
            probs = decode(params, latent, data.t_tgt, drop, training=True,
                           dropout_rate=config.dropout_decoder,
                           dropout_logits=config.dropout_logits)
            ce = T.categorical_cross_entropy(probs, tgt[rows])
            loss = T.add(ce, T.add(
                T.l2_penalty(params.encoder_kernels(), config.l2_encoder),
                T.l2_penalty(params.decoder_kernels(), config.l2_decoder)))
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {start // config.batch_size}")
            loss.backward()
            opt.step()
            batch_positions = len(rows) * data.t_tgt
            loss_sum += value * len(rows)
            correct += int((probs.data.argmax(axis=-1) == tgt[rows]).sum())
            positions += batch_positions

        val_loss, val_acc = evaluate(params, data.src_val, data.tgt_val)
        metrics = EpochMetrics(epoch=epoch, train_loss=loss_sum / n,
                               train_acc=correct / positions,
                               val_loss=val_loss, val_acc=val_acc)
        report.history.append(metrics)
        if on_epoch is not None:
            on_epoch(metrics)
        if best_state is None or val_acc > report.best_val_acc:
            report.best_val_acc = val_acc
            report.best_epoch = epoch
            best_state = params.copy_state()

    if out_dir is not None:
        save_translator(out_dir, params.state_dict(), best_state, data, config, report)
    return params, report


def _meta(data: PreparedData, config: RunConfig, report: TrainReport, which: str) -> dict:
    import dataclasses
    cfg = dataclasses.asdict(config)
    return {
        "kind": "encdec",
        "variant": which,
        "src_vocab_size": data.vocab_src.size,
        "tgt_vocab_size": data.vocab_tgt.size,
        "t_src": data.t_src,
        "t_tgt": data.t_tgt,
        "best_epoch": report.best_epoch,
        "best_val_acc": report.best_val_acc,
        "vocab_files": {"src": "vocab-src.tsv", "tgt": "vocab-tgt.tsv"},
        "config": cfg,
    }


def save_translator(out_dir, final_state, best_state, data: PreparedData,
                    config: RunConfig, report: TrainReport) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data.vocab_src.save(out / "vocab-src.tsv")
    data.vocab_tgt.save(out / "vocab-tgt.tsv")
    save_checkpoint(out / "encdec-final.ckpt", final_state, _meta(data, config, report, "final"))
    save_checkpoint(out / "encdec-best.ckpt", best_state or final_state,
                    _meta(data, config, report, "best"))


def load_translator(path, trainable: bool = False) -> tuple[Seq2SeqParams, dict]:
    """Load a translator checkpoint; meta carries vocab/geometry references."""
    state, meta = load_checkpoint(path)
    if meta.get("kind") != "encdec":
        raise CheckpointError(f"{path} is not a translator checkpoint")
    return Seq2SeqParams.from_state(state, trainable=trainable), meta
