"""Deterministic synthetic parallel corpora for training-level tests.

Sentences are compositional subject-verb-object triples with an optional
trailing adverb, and the target side is a word-for-word mapping of the
source, so a modest model can memorize the corpus and splits stay aligned.
"""

import random

WORD_MAP = {
    "gato": "cat", "perro": "dog", "nino": "boy", "nina": "girl",
    "pajaro": "bird", "pez": "fish", "oso": "bear", "lobo": "wolf",
    "come": "eats", "bebe": "drinks", "mira": "watches", "busca": "seeks",
    "tiene": "has", "quiere": "wants",
    "agua": "water", "pan": "bread", "leche": "milk", "carne": "meat",
    "fruta": "fruit", "arroz": "rice", "sopa": "soup", "queso": "cheese",
    "hoy": "today", "ahora": "now", "siempre": "always", "nunca": "never",
}

SUBJECTS = ["gato", "perro", "nino", "nina", "pajaro", "pez", "oso", "lobo"]
VERBS = ["come", "bebe", "mira", "busca", "tiene", "quiere"]
OBJECTS = ["agua", "pan", "leche", "carne", "fruta", "arroz", "sopa", "queso"]
ADVERBS = ["hoy", "ahora", "siempre", "nunca"]


def make_parallel_corpus(n, seed=0):
    """n (source, target) sentence pairs, lengths 3 or 4 words."""
    gen = random.Random(seed)
    pairs = []
    for _ in range(n):
        words = [gen.choice(SUBJECTS), gen.choice(VERBS), gen.choice(OBJECTS)]
        if gen.random() < 0.5:
            words.append(gen.choice(ADVERBS))
        src = " ".join(words)
        tgt = " ".join(WORD_MAP[w] for w in words)
        pairs.append((src, tgt))
    return pairs


def write_corpus_file(path, pairs):
    """Tab-separated pair-per-line file in the loader's input format."""
    with open(path, "w", encoding="utf-8") as fh:
        for src, tgt in pairs:
            fh.write(f"{src}\t{tgt}\n")
    return path
