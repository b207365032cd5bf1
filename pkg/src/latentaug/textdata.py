"""Corpus loading, normalisation, vocabulary fitting, and padded encoding.

Conventions used throughout: id 0 is padding, real words get frequency-ranked
ids starting at 1 (ties broken by first appearance), and id size+1 stands in
for out-of-vocabulary words when encoding in eval mode. Training mode refuses
unknown words outright, a typo in the training path should be loud.
"""

from __future__ import annotations

import logging
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ShapeError, VocabularyError

PAD_ID = 0

log = logging.getLogger(__name__)


def clean_sentence(text: str) -> str:
    """Lowercase, strip every Unicode punctuation mark, collapse whitespace.

    Punctuation is removed, not replaced by a space, so contractions fuse:
    "He's" becomes "hes".
    """
    lowered = text.lower()
    no_punct = "".join(ch for ch in lowered if not unicodedata.category(ch).startswith("P"))
    return " ".join(no_punct.split())


def load_corpus(path, max_pairs: int | None = None) -> list[tuple[str, str]]:
    """Read tab-separated sentence pairs, cleaned, in file order.

    Extra tab-separated columns (attribution fields and the like) are
    ignored. Lines without a tab, and pairs that clean down to nothing on
    either side, are skipped; a single warning reports how many.
    """
    path = Path(path)
    pairs = []
    skipped = 0
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            fields = line.rstrip("\r\n").split("\t")
            if len(fields) < 2:
                skipped += 1
                continue
            src, tgt = clean_sentence(fields[0]), clean_sentence(fields[1])
            if src and tgt:
                pairs.append((src, tgt))
            else:
                skipped += 1
            if max_pairs is not None and len(pairs) >= max_pairs:
                break
    if skipped:
        log.warning("%s: skipped %d unusable line(s)", path, skipped)
    return pairs


@dataclass
class Vocabulary:
    id_of: dict[str, int]

    @property
    def size(self) -> int:
        return len(self.id_of)

    @property
    def unk_id(self) -> int:
        return self.size + 1

    def __contains__(self, word: str) -> bool:
        return word in self.id_of

    def encode_word(self, word: str, mode: str = "train") -> int:
        wid = self.id_of.get(word)
        if wid is not None:
            return wid
        if mode == "eval":
            return self.unk_id
        raise VocabularyError(f"word {word!r} is not in the vocabulary")

    def word_of(self, wid: int) -> str:
        word = self._words().get(wid)
        if word is None:
            raise VocabularyError(f"id {wid} has no word (vocabulary size {self.size})")
        return word

    def _words(self) -> dict[int, str]:
        return {i: w for w, i in self.id_of.items()}

    def save(self, path) -> None:
        lines = [f"{i}\t{w}" for w, i in sorted(self.id_of.items(), key=lambda kv: kv[1])]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        id_of: dict[str, int] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line:
                continue
            try:
                wid, word = line.split("\t")
                id_of[word] = int(wid)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: expected id<TAB>word") from exc
        ids = sorted(id_of.values())
        if ids != list(range(1, len(ids) + 1)):
            raise ConfigError(f"{path}: ids must be contiguous starting at 1")
        return cls(id_of=id_of)


def fit_vocabulary(sentences: list[str]) -> Vocabulary:
    """Ids by descending frequency, first-appearance order breaking ties."""
    counts: Counter = Counter()
    first_seen: dict[str, int] = {}
    for sent in sentences:
        for tok in sent.split():
            counts[tok] += 1
            if tok not in first_seen:
                first_seen[tok] = len(first_seen)
    if not counts:
        raise ConfigError("cannot fit a vocabulary on an empty corpus")
    ranked = sorted(counts, key=lambda w: (-counts[w], first_seen[w]))
    return Vocabulary(id_of={w: i for i, w in enumerate(ranked, start=1)})


def max_sentence_length(sentences: list[str]) -> int:
    return max((len(s.split()) for s in sentences), default=0)


@dataclass
class PaddedBatch:
    ids: np.ndarray       # (rows, t_max) int64, right-padded with 0
    lengths: list[int]    # true word counts per row

    @property
    def shape(self) -> tuple:
        return self.ids.shape


def encode_and_pad(sentences: list[str], vocab: Vocabulary, t_max: int,
                   mode: str = "train") -> PaddedBatch:
    """Integer-encode each sentence and zero-pad on the right to `t_max`."""
    if mode not in ("train", "eval"):
        raise ConfigError(f"unknown encode mode {mode!r}")
    ids = np.zeros((len(sentences), t_max), dtype=np.int64)
    lengths = []
    for row, sent in enumerate(sentences):
        toks = sent.split()
        if len(toks) > t_max:
            raise ShapeError(f"sentence of {len(toks)} words exceeds pad length {t_max}")
        lengths.append(len(toks))
        for col, tok in enumerate(toks):
            ids[row, col] = vocab.encode_word(tok, mode)
    return PaddedBatch(ids=ids, lengths=lengths)


def one_hot_targets(batch: PaddedBatch, vocab_size: int) -> np.ndarray:
    """Exact one-hot planes over vocab_size+1 classes; class 0 is padding."""
    ids = batch.ids
    if ids.min() < 0 or ids.max() > vocab_size:
        raise IndexError(f"ids out of range [0, {vocab_size}]")
    planes = np.zeros(ids.shape + (vocab_size + 1,), dtype=np.float32)
    rows = np.arange(ids.size)
    planes.reshape(-1, vocab_size + 1)[rows, ids.reshape(-1)] = 1.0
    return planes


def split_corpus(pairs: list) -> tuple[list, list, list]:
    """Positional 90/5/5 split preserving file order.

    Validation and test each get floor(n/20) pairs from the tail; training
    keeps the head. 20,000 pairs give the 18,000/1,000/1,000 layout.
    """
    n = len(pairs)
    hold = n // 20
    if hold == 0:
        raise ConfigError(f"corpus of {n} pairs is too small to split (need at least 20)")
    train = pairs[: n - 2 * hold]
    val = pairs[n - 2 * hold: n - hold]
    test = pairs[n - hold:]
    return train, val, test


@dataclass
class CorpusStats:
    sentences: int
    avg_words: float
    max_words: int
    id_mean: float
    id_std: float


def corpus_stats(sentences: list[str], vocab: Vocabulary, mode: str = "train") -> CorpusStats:
    """Word-count and token-id summary; padding never enters the statistics.

    id_std is the population standard deviation.
    """
    if not sentences:
        raise ConfigError("cannot compute statistics of an empty corpus")
    counts = [len(s.split()) for s in sentences]
    ids: list[int] = []
    for s in sentences:
        ids.extend(vocab.encode_word(t, mode) for t in s.split())
    arr = np.asarray(ids, dtype=np.float64)
    return CorpusStats(
        sentences=len(sentences),
        avg_words=float(np.mean(counts)),
        max_words=max(counts),
        id_mean=float(arr.mean()) if arr.size else 0.0,
        id_std=float(arr.std()) if arr.size else 0.0,
    )
