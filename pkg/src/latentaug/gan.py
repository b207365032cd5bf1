"""Adversarial imitation of the frozen encoder's latent space.

The generator is one dense layer with a rectifier; it maps a uniform noise
vector (width N, values in [-1, 1]) to a latent-width embedding. The
discriminator stacks three 1024-unit rectifier layers and a one-unit sigmoid
head whose output is clamped away from exact 0 and 1 so the log loss stays
finite. Each epoch runs one discriminator step (real labeled 1, fake labeled
0) and one generator step (fresh noise, fake labeled 1 through the frozen
discriminator). The translator supplying real embeddings is read-only; a
checksum taken before and after training enforces that.

A rectifier generator can never emit negative coordinates even though real
latent values lie in (-1, 1). That asymmetry is kept as designed; an optional
tanh output mode exists behind a config flag for experimentation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensor as T
from .checkpoint import checksum_tensors, load_checkpoint, save_checkpoint
from .config import RunConfig
from .errors import CheckpointError, ConfigError, ShapeError, TrainingDiverged
from .layers import DenseWeights, dense
from .optim import Adam
from .rng import RngStream
from .seq2seq import Seq2SeqParams, encode
from .tensor import Tensor
from .textdata import PaddedBatch

log = logging.getLogger(__name__)

# the reference betas apply to the translator only; both adversarial models use
# the common Adam defaults
GAN_BETAS = (0.9, 0.999)


@dataclass
class GeneratorParams:
    dense: DenseWeights
    tanh_output: bool = False

    @classmethod
    def create(cls, noise_width: int, latent_width: int, rng: RngStream,
               tanh_output: bool = False) -> "GeneratorParams":
        return cls(dense=DenseWeights.create(noise_width, latent_width, rng),
                   tanh_output=tanh_output)

    @property
    def noise_width(self) -> int:
        return self.dense.w.shape[0]

    @property
    def latent_width(self) -> int:
        return self.dense.w.shape[1]

    def params(self) -> list[Tensor]:
        return self.dense.params()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {"generator.w": self.dense.w.data, "generator.b": self.dense.b.data}


@dataclass
class DiscriminatorParams:
    dense1: DenseWeights
    dense2: DenseWeights
    dense3: DenseWeights
    head: DenseWeights

    @classmethod
    def create(cls, latent_width: int, units: int, rng: RngStream) -> "DiscriminatorParams":
        return cls(dense1=DenseWeights.create(latent_width, units, rng.split("dense1")),
                   dense2=DenseWeights.create(units, units, rng.split("dense2")),
                   dense3=DenseWeights.create(units, units, rng.split("dense3")),
                   head=DenseWeights.create(units, 1, rng.split("head")))

    def params(self) -> list[Tensor]:
        return (self.dense1.params() + self.dense2.params()
                + self.dense3.params() + self.head.params())

    def state_dict(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer in (("dense1", self.dense1), ("dense2", self.dense2),
                            ("dense3", self.dense3), ("head", self.head)):
            out[f"discriminator.{name}.w"] = layer.w.data
            out[f"discriminator.{name}.b"] = layer.b.data
        return out


def sample_noise(b: int, n: int, rng: RngStream) -> Tensor:
    """An i.i.d. uniform [-1, 1] noise batch of shape (b, n)."""
    return Tensor(rng.uniform(-1.0, 1.0, (b, n)))


def generator_forward(g: GeneratorParams, noise: Tensor) -> Tensor:
    out = dense(noise, g.dense)
    return T.tanh(out) if g.tanh_output else T.relu(out)


def discriminator_forward(d: DiscriminatorParams, emb: Tensor) -> Tensor:
    h = T.relu(dense(emb, d.dense1))
    h = T.relu(dense(h, d.dense2))
    h = T.relu(dense(h, d.dense3))
    # keep the log loss finite at saturation
    return T.clamp(T.sigmoid(dense(h, d.head)), 1e-7, 1.0 - 1e-7)


def embedding_moment_gap(real, fake) -> tuple[float, float]:
    """Distance between the per-dimension moments of two embedding batches.

    Returns the L2 distance between the per-dimension mean vectors and the
    L2 distance between the per-dimension (population) standard deviation
    vectors. Identical batches give (0, 0).
    """
    r = real.data if isinstance(real, Tensor) else np.asarray(real)
    f = fake.data if isinstance(fake, Tensor) else np.asarray(fake)
    if r.shape[1] != f.shape[1]:
        raise ShapeError(f"embedding widths differ: {r.shape[1]} vs {f.shape[1]}")
    r = r.astype(np.float64)
    f = f.astype(np.float64)
    mean_gap = float(np.linalg.norm(r.mean(axis=0) - f.mean(axis=0)))
    std_gap = float(np.linalg.norm(r.std(axis=0) - f.std(axis=0)))
    return mean_gap, std_gap


@dataclass
class GanEpoch:
    epoch: int
    gen_loss: float
    disc_loss: float
    disc_acc_real: float
    disc_acc_fake: float


@dataclass
class GanReport:
    history: list[GanEpoch] = field(default_factory=list)
    moment_gap_initial: tuple[float, float] = (0.0, 0.0)
    moment_gap_final: tuple[float, float] = (0.0, 0.0)
    encoder_checksum: str = ""


class _BatchCycler:
    """Yields fixed-size row index batches without replacement, reshuffling
    the order whenever it runs out."""

    def __init__(self, n: int, rng: RngStream):
        self.n = n
        self.rng = rng
        self.order = rng.permutation(n)
        self.pos = 0

    def take(self, count: int) -> np.ndarray:
        out = []
        while count > 0:
            if self.pos == self.n:
                self.order = self.rng.permutation(self.n)
                self.pos = 0
            grab = min(count, self.n - self.pos)
            out.append(self.order[self.pos:self.pos + grab])
            self.pos += grab
            count -= grab
        return np.concatenate(out)


def train_gan(gen: GeneratorParams, disc: DiscriminatorParams,
              translator: Seq2SeqParams, real_ids, config: RunConfig,
              rng: RngStream, out_dir=None, on_epoch=None
              ) -> tuple[GeneratorParams, DiscriminatorParams, GanReport]:
    """Adversarial training against the frozen translator's latent space.

    real_ids is the encoded source-side training split (padded id matrix).
    The translator is inference-only here, so its embeddings are computed
    once up front; identical values to re-encoding each epoch.
    """
    config.validate()
    ids = real_ids.ids if isinstance(real_ids, PaddedBatch) else np.asarray(real_ids)
    n = ids.shape[0]
    if n == 0:
        raise ConfigError("adversarial training needs at least one real sentence")
    if gen.latent_width != translator.latent_width:
        raise ShapeError(f"generator width {gen.latent_width} does not match "
                         f"latent width {translator.latent_width}")

    frozen = checksum_tensors(translator.state_dict())
    real_emb = encode(translator, ids).data

    opt_gen = Adam(gen.params(), config.learning_rate_generator, *GAN_BETAS)
    opt_disc = Adam(disc.params(), config.learning_rate_discriminator, *GAN_BETAS)
    cycler = _BatchCycler(n, rng.split("real-order"))
    noise_rng = rng.split("noise")
    probe = sample_noise(n, gen.noise_width, rng.split("probe"))

    report = GanReport(encoder_checksum=frozen)
    report.moment_gap_initial = embedding_moment_gap(
        real_emb, generator_forward(gen, probe))

    b = config.gan_batch_size
    ones = np.ones((b, 1), dtype=np.float32)
    zeros = np.zeros((b, 1), dtype=np.float32)
    both = np.concatenate([ones, zeros])

    for epoch in range(1, config.gan_epochs + 1):
        # discriminator: real rows labeled 1, a detached fake batch labeled 0
        rows = cycler.take(b)
        real = Tensor(real_emb[rows])
        fake = generator_forward(gen, sample_noise(b, gen.noise_width, noise_rng)).detach()
        p_real = discriminator_forward(disc, real)
        p_fake = discriminator_forward(disc, fake)
        disc_loss = T.binary_cross_entropy(T.concat([p_real, p_fake], axis=0), both)
        d_value = disc_loss.item()
        if not np.isfinite(d_value):
            raise TrainingDiverged(f"non-finite discriminator loss at epoch {epoch}")
        disc_loss.backward()
        opt_disc.step()
        acc_real = float((p_real.data > 0.5).mean())
        acc_fake = float((p_fake.data < 0.5).mean())

        # generator: fresh noise, fakes labeled real through the frozen critic
        fake2 = generator_forward(gen, sample_noise(b, gen.noise_width, noise_rng))
        gen_loss = T.binary_cross_entropy(discriminator_forward(disc, fake2), ones)
        g_value = gen_loss.item()
        if not np.isfinite(g_value):
            raise TrainingDiverged(f"non-finite generator loss at epoch {epoch}")
        gen_loss.backward()
        opt_gen.step()
        # the generator objective also leaked gradients into the critic
        opt_disc.zero_grad()

        record = GanEpoch(epoch=epoch, gen_loss=g_value, disc_loss=d_value,
                          disc_acc_real=acc_real, disc_acc_fake=acc_fake)
        report.history.append(record)
        if on_epoch is not None:
            on_epoch(record)

    report.moment_gap_final = embedding_moment_gap(
        real_emb, generator_forward(gen, probe))

    if checksum_tensors(translator.state_dict()) != frozen:
        raise RuntimeError("frozen translator weights changed during adversarial training")

    if out_dir is not None:
        save_gan(out_dir, gen, disc, config, report)
    return gen, disc, report


def _gan_meta(gen: GeneratorParams, config: RunConfig, report: GanReport) -> dict:
    import dataclasses
    final = report.history[-1] if report.history else None
    return {
        "kind": "gan",
        "noise_width": gen.noise_width,
        "latent_width": gen.latent_width,
        "tanh_output": gen.tanh_output,
        "encoder_checksum": report.encoder_checksum,
        "moment_gap_initial": list(report.moment_gap_initial),
        "moment_gap_final": list(report.moment_gap_final),
        "final_gen_loss": final.gen_loss if final else None,
        "final_disc_loss": final.disc_loss if final else None,
        "config": dataclasses.asdict(config),
    }


def save_gan(out_dir, gen: GeneratorParams, disc: DiscriminatorParams,
             config: RunConfig, report: GanReport) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tensors = {**gen.state_dict(), **disc.state_dict()}
    save_checkpoint(out / "gan.ckpt", tensors, _gan_meta(gen, config, report))


def load_gan(path, trainable: bool = False
             ) -> tuple[GeneratorParams, DiscriminatorParams, dict]:
    state, meta = load_checkpoint(path)
    if meta.get("kind") != "gan":
        raise CheckpointError(f"{path} is not an adversarial checkpoint")

    def wrap(name):
        try:
            return Tensor(state[name].copy(), requires_grad=trainable)
        except KeyError as exc:
            raise CheckpointError(f"state is missing tensor {exc}") from exc

    gen = GeneratorParams(
        dense=DenseWeights(w=wrap("generator.w"), b=wrap("generator.b")),
        tanh_output=bool(meta.get("tanh_output", False)))
    disc = DiscriminatorParams(
        dense1=DenseWeights(w=wrap("discriminator.dense1.w"), b=wrap("discriminator.dense1.b")),
        dense2=DenseWeights(w=wrap("discriminator.dense2.w"), b=wrap("discriminator.dense2.b")),
        dense3=DenseWeights(w=wrap("discriminator.dense3.w"), b=wrap("discriminator.dense3.b")),
        head=DenseWeights(w=wrap("discriminator.head.w"), b=wrap("discriminator.head.b")))
    return gen, disc, meta
