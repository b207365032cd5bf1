"""Latent-space data augmentation for low-resource parallel corpora.

Three stages: fit a recurrent encoder-decoder on sentence pairs, train an
adversarial generator to imitate the frozen encoder's embeddings, then
decode generated embeddings into new sentences and grade their quality.
"""

__version__ = "0.1.0"
