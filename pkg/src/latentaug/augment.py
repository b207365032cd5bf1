"""Synthetic corpus generation and quality triage.

Trained generator embeddings are pushed through the frozen decoder
(inference mode, greedy per-step argmax) and detokenized into sentences.
Each sentence gets one of five labels, checked in this order:

  empty        no tokens survive padding strip
  repetition   some token appears 3+ times, or an adjacent pair repeats
  unrelated    mean pairwise co-occurrence score below tau_u
  nonsensical  mean log bigram probability below tau_n
  good         everything else

The co-occurrence and bigram statistics are fitted on the real
target-language training split with add-one smoothing. Thresholds
self-calibrate to the 5th percentile of the in-corpus score distributions
(taken as an actual corpus value, compared strictly), so a sentence made of
in-corpus material is never flagged; both can be overridden in config.

The argmax at generation time excludes the eval-only unknown class, so every
emitted id maps to a real vocabulary word and detokenization cannot fail.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .gan import GeneratorParams, generator_forward, sample_noise
from .rng import RngStream
from .seq2seq import Seq2SeqParams, decode
from .textdata import Vocabulary

LABELS = ("good", "repetition", "nonsensical", "unrelated", "empty")


@dataclass
class GeneratedSentence:
    text: str
    token_ids: list[int]
    quality: str


@dataclass
class GeneratedCorpus:
    sentences: list[GeneratedSentence] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def texts(self) -> list[str]:
        return [s.text for s in self.sentences]

    def labels(self) -> list[str]:
        return [s.quality for s in self.sentences]


@dataclass
class QualityMetrics:
    repetition_rate: float
    distinct_1: float
    distinct_2: float
    empty_rate: float
    mean_length: float


def detokenize(ids, vocab: Vocabulary) -> str:
    """Map ids back to words, dropping padding zeros. Unknown ids error."""
    return " ".join(vocab.word_of(int(i)) for i in ids if int(i) != 0)


class QualityScorer:
    """Scores token-id sentences against training-corpus statistics.

    Relatedness of a pair (a, b) is log(((S(a,b)+1) * S) / ((S(a)+1) * (S(b)+1)))
    where S(x) counts training sentences containing x and S is the number of
    training sentences; a sentence's score is the mean over all unordered
    position pairs. The bigram score is the mean over adjacent pairs of
    log((C(a,b)+1) / (C(a)+V)) with token-occurrence counts C and vocabulary
    size V. Sentences shorter than 2 tokens skip both checks.
    """

    def __init__(self, vocab_size: int, n_sentences: int, doc_freq: dict,
                 pair_doc_freq: dict, unigram: dict, bigram: dict,
                 tau_unrelated: float, tau_nonsensical: float):
        self.vocab_size = vocab_size
        self.n_sentences = n_sentences
        self.doc_freq = doc_freq
        self.pair_doc_freq = pair_doc_freq
        self.unigram = unigram
        self.bigram = bigram
        self.tau_unrelated = tau_unrelated
        self.tau_nonsensical = tau_nonsensical

    @classmethod
    def fit(cls, sentences: list[str], vocab: Vocabulary,
            tau_unrelated: float | None = None,
            tau_nonsensical: float | None = None) -> "QualityScorer":
        if not sentences:
            raise ConfigError("quality scorer needs a nonempty training corpus")
        token_lists = [[vocab.encode_word(w) for w in s.split()] for s in sentences]
        doc_freq: Counter = Counter()
        pair_doc_freq: Counter = Counter()
        unigram: Counter = Counter()
        bigram: Counter = Counter()
        for ids in token_lists:
            unigram.update(ids)
            bigram.update(zip(ids, ids[1:]))
            present = sorted(set(ids))
            doc_freq.update(present)
            for i, a in enumerate(present):
                for b in present[i:]:
                    pair_doc_freq[(a, b)] += 1
        scorer = cls(vocab_size=vocab.size, n_sentences=len(token_lists),
                     doc_freq=dict(doc_freq), pair_doc_freq=dict(pair_doc_freq),
                     unigram=dict(unigram), bigram=dict(bigram),
                     tau_unrelated=-math.inf, tau_nonsensical=-math.inf)
        scorer.tau_unrelated = (tau_unrelated if tau_unrelated is not None
                                else scorer._calibrate(scorer.relatedness, token_lists))
        scorer.tau_nonsensical = (tau_nonsensical if tau_nonsensical is not None
                                  else scorer._calibrate(scorer.bigram_logprob, token_lists))
        return scorer

    def _calibrate(self, score, token_lists) -> float:
        values = [score(ids) for ids in token_lists if len(ids) >= 2]
        if not values:
            return -math.inf
        # threshold sits at the weakest real sentence's score; the strict
        # comparison in classify_quality then never flags corpus material,
        # and generated text is flagged only when it scores worse than
        # everything the scorer was calibrated on
        return float(min(values))

    def _pair_score(self, a: int, b: int) -> float:
        key = (a, b) if a <= b else (b, a)
        joint = self.pair_doc_freq.get(key, 0) + 1
        return math.log(joint * self.n_sentences
                        / ((self.doc_freq.get(a, 0) + 1) * (self.doc_freq.get(b, 0) + 1)))

    def relatedness(self, ids) -> float:
        ids = [int(i) for i in ids]
        pairs = [(ids[i], ids[j]) for i in range(len(ids)) for j in range(i + 1, len(ids))]
        return sum(self._pair_score(a, b) for a, b in pairs) / len(pairs)

    def bigram_logprob(self, ids) -> float:
        ids = [int(i) for i in ids]
        total = 0.0
        for a, b in zip(ids, ids[1:]):
            total += math.log((self.bigram.get((a, b), 0) + 1)
                              / (self.unigram.get(a, 0) + self.vocab_size))
        return total / (len(ids) - 1)

    def classify_quality(self, ids) -> str:
        ids = [int(i) for i in ids]
        if not ids:
            return "empty"
        counts = Counter(ids)
        if max(counts.values()) >= 3 or any(a == b for a, b in zip(ids, ids[1:])):
            return "repetition"
        if len(ids) >= 2:
            if self.relatedness(ids) < self.tau_unrelated:
                return "unrelated"
            if self.bigram_logprob(ids) < self.tau_nonsensical:
                return "nonsensical"
        return "good"


def classify_quality(ids, scorer: QualityScorer) -> str:
    return scorer.classify_quality(ids)


def generate_corpus(gen: GeneratorParams, translator: Seq2SeqParams,
                    vocab_tgt: Vocabulary, t_tgt: int, n: int, rng: RngStream,
                    scorer: QualityScorer, batch_size: int = 512) -> GeneratedCorpus:
    """Decode n generator samples into labeled sentences (greedy argmax)."""
    if n < 1:
        raise ConfigError(f"sentence count must be >= 1, got {n}")
    noise_rng = rng.split("generation-noise")
    out = GeneratedCorpus()
    word_classes = vocab_tgt.size + 1  # classes 0..V; leaves out the unknown bucket
    remaining = n
    while remaining > 0:
        b = min(batch_size, remaining)
        emb = generator_forward(gen, sample_noise(b, gen.noise_width, noise_rng))
        probs = decode(translator, emb, t_tgt)
        ids = probs.data[:, :, :word_classes].argmax(axis=-1)
        for row in ids:
            kept = [int(i) for i in row if i != 0]
            out.sentences.append(GeneratedSentence(
                text=detokenize(kept, vocab_tgt),
                token_ids=kept,
                quality=scorer.classify_quality(kept)))
        remaining -= b
    return out


def quality_metrics(corpus: GeneratedCorpus) -> QualityMetrics:
    """Corpus-wide label rates, distinct n-gram ratios, and mean word length."""
    if len(corpus) == 0:
        raise ConfigError("quality metrics need a nonempty corpus")
    labels = corpus.labels()
    unigrams: list = []
    bigrams: list = []
    for s in corpus:
        unigrams.extend(s.token_ids)
        bigrams.extend(zip(s.token_ids, s.token_ids[1:]))
    return QualityMetrics(
        repetition_rate=labels.count("repetition") / len(labels),
        distinct_1=len(set(unigrams)) / len(unigrams) if unigrams else 0.0,
        distinct_2=len(set(bigrams)) / len(bigrams) if bigrams else 0.0,
        empty_rate=labels.count("empty") / len(labels),
        mean_length=sum(len(s.token_ids) for s in corpus) / len(corpus),
    )


def filter_corpus(corpus: GeneratedCorpus, keep=frozenset({"good"})) -> GeneratedCorpus:
    """Order-preserving subset of sentences whose label is in `keep`."""
    keep = set(keep)
    return GeneratedCorpus([s for s in corpus if s.quality in keep])


def save_corpus_text(path, corpus: GeneratedCorpus) -> None:
    """One sentence per line, UTF-8."""
    Path(path).write_text("".join(s.text + "\n" for s in corpus), encoding="utf-8")
