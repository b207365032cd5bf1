"""Noise sampling, generator/discriminator forward passes, adversarial
training loop, freeze contract, moment-gap metric."""

import numpy as np
import pytest

from latentaug import tensor as T
from latentaug.checkpoint import checksum_tensors
from latentaug.config import RunConfig
from latentaug.errors import (CheckpointError, ConfigError, ShapeError,
                              TrainingDiverged)
from latentaug.gan import (DiscriminatorParams, GanEpoch, GeneratorParams,
                           _BatchCycler, discriminator_forward,
                           embedding_moment_gap, generator_forward, load_gan,
                           sample_noise, train_gan)
from latentaug.layers import DenseWeights
from latentaug.rng import RngStream
from latentaug.seq2seq import Seq2SeqParams, encode
from latentaug.tensor import Tensor


def hand_generator(w, b, tanh_output=False):
    return GeneratorParams(
        dense=DenseWeights(w=T.parameter(np.asarray(w, dtype=np.float64)),
                           b=T.parameter(np.asarray(b, dtype=np.float64))),
        tanh_output=tanh_output)


class TestSampleNoise:
    def test_values_bounded(self):
        noise = sample_noise(100, 32, RngStream(1))
        assert np.all(noise.data >= -1.0) and np.all(noise.data <= 1.0)

    def test_uniform_moments(self):
        noise = sample_noise(1000, 1000, RngStream(2))
        assert abs(float(noise.data.mean())) < 0.005
        assert abs(float(noise.data.var()) - 1.0 / 3.0) < 0.01

    def test_same_seed_identical(self):
        a = sample_noise(4, 8, RngStream(7))
        b = sample_noise(4, 8, RngStream(7))
        np.testing.assert_array_equal(a.data, b.data)

    def test_shape(self):
        assert sample_noise(3, 5, RngStream(1)).shape == (3, 5)


class TestGeneratorForward:
    def test_hand_computed_output(self):
        gen = hand_generator([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], [0.5, -0.5, 0.0])
        out = generator_forward(gen, Tensor(np.array([[1.0, 0.5]])))
        np.testing.assert_allclose(out.data, [[3.5, 4.0, 6.0]])

    def test_rectifier_zeroes_negative_rows(self):
        gen = hand_generator([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], [0.5, -0.5, 0.0])
        out = generator_forward(gen, Tensor(np.array([[-1.0, 0.0]])))
        np.testing.assert_allclose(out.data, [[0.0, 0.0, 0.0]])

    def test_zero_weights_give_zero_embeddings(self):
        gen = hand_generator(np.zeros((4, 6)), np.zeros(6))
        out = generator_forward(gen, sample_noise(5, 4, RngStream(3)))
        np.testing.assert_array_equal(out.data, np.zeros((5, 6)))

    def test_outputs_nonnegative(self):
        gen = GeneratorParams.create(16, 12, RngStream(4))
        out = generator_forward(gen, sample_noise(40, 16, RngStream(5)))
        assert np.all(out.data >= 0.0)

    def test_tanh_mode_bounds_both_sides(self):
        gen = hand_generator([[3.0], [0.0]], [0.0], tanh_output=True)
        out = generator_forward(gen, Tensor(np.array([[1.0, 0.0], [-1.0, 0.0]])))
        np.testing.assert_allclose(out.data, [[np.tanh(3.0)], [np.tanh(-3.0)]])

    def test_noise_width_mismatch_raises(self):
        gen = GeneratorParams.create(16, 12, RngStream(4))
        with pytest.raises(ShapeError):
            generator_forward(gen, sample_noise(4, 8, RngStream(5)))


class TestDiscriminatorForward:
    def test_zero_weights_output_half(self):
        disc = DiscriminatorParams.create(6, 8, RngStream(1))
        for layer in (disc.dense1, disc.dense2, disc.dense3, disc.head):
            layer.w.data[:] = 0.0
            layer.b.data[:] = 0.0
        out = discriminator_forward(disc, Tensor(np.ones((3, 6))))
        np.testing.assert_allclose(out.data, 0.5)

    def test_outputs_strictly_inside_unit_interval(self):
        disc = DiscriminatorParams.create(6, 8, RngStream(2))
        out = discriminator_forward(disc, Tensor(np.random.default_rng(0).normal(size=(20, 6))))
        assert np.all(out.data > 0.0) and np.all(out.data < 1.0)
        assert out.shape == (20, 1)

    def test_saturated_head_is_clamped(self):
        disc = DiscriminatorParams.create(2, 4, RngStream(3))
        disc.head.b.data[:] = 1000.0
        out = discriminator_forward(disc, Tensor(np.zeros((2, 2))))
        np.testing.assert_allclose(out.data, 1.0 - 1e-7)

    def test_gradient_matches_finite_differences(self):
        rng = RngStream(9)
        disc = DiscriminatorParams.create(3, 4, rng)
        for p in disc.params():
            p.data = p.data.astype(np.float64)
        emb = np.linspace(-1.0, 1.0, 6).reshape(2, 3)
        labels = np.array([[1.0], [0.0]])

        def loss_value():
            return T.binary_cross_entropy(
                discriminator_forward(disc, Tensor(emb)), labels)

        loss = loss_value()
        loss.backward()
        w = disc.dense2.w
        analytic = w.grad.copy()
        step = 1e-6
        for idx in [(0, 0), (1, 2), (3, 3)]:
            keep = w.data[idx]
            w.data[idx] = keep + step
            up = loss_value().item()
            w.data[idx] = keep - step
            down = loss_value().item()
            w.data[idx] = keep
            numeric = (up - down) / (2 * step)
            assert analytic[idx] == pytest.approx(numeric, rel=1e-3, abs=1e-9)

    def test_untrained_accuracy_on_balanced_probe_near_half(self):
        # a fresh discriminator applies one (possibly biased) threshold to
        # both halves, so balanced accuracy starts near chance
        rng = RngStream(1)
        translator = Seq2SeqParams.create(6, 6, 4, 8, rng.split("t"))
        ids = rng.split("d").integers(0, 7, shape=(100, 4))
        real = encode(translator, ids).data
        gen = GeneratorParams.create(16, 16, rng.split("g"))
        fake = generator_forward(gen, sample_noise(100, 16, rng.split("n"))).data
        disc = DiscriminatorParams.create(16, 12, rng.split("disc"))
        p_real = discriminator_forward(disc, Tensor(real)).data
        p_fake = discriminator_forward(disc, Tensor(fake)).data
        acc = 0.5 * (float((p_real > 0.5).mean()) + float((p_fake < 0.5).mean()))
        assert 0.35 <= acc <= 0.65


class TestMomentGap:
    def test_identical_batches_give_zero(self):
        x = RngStream(1).uniform(-1.0, 1.0, (50, 16))
        assert embedding_moment_gap(x, x.copy()) == (0.0, 0.0)

    def test_unit_shift_gives_sqrt_width(self):
        x = RngStream(2).uniform(-1.0, 1.0, (50, 512)).astype(np.float64)
        mean_gap, std_gap = embedding_moment_gap(x, x + 1.0)
        assert mean_gap == pytest.approx(np.sqrt(512.0), rel=1e-9)
        assert std_gap == pytest.approx(0.0, abs=1e-9)

    def test_scaling_moves_std_not_only_mean(self):
        x = RngStream(3).uniform(-1.0, 1.0, (200, 8)).astype(np.float64)
        centered = x - x.mean(axis=0)
        mean_gap, std_gap = embedding_moment_gap(centered, centered * 3.0)
        assert mean_gap == pytest.approx(0.0, abs=1e-12)
        assert std_gap > 0.0

    def test_accepts_tensors(self):
        x = Tensor(np.ones((4, 3)))
        assert embedding_moment_gap(x, x) == (0.0, 0.0)

    def test_width_mismatch_raises(self):
        with pytest.raises(ShapeError):
            embedding_moment_gap(np.ones((4, 3)), np.ones((4, 5)))


class TestNonSaturatingIdentity:
    def test_generator_loss_is_bce_against_ones(self):
        gen = GeneratorParams.create(6, 4, RngStream(21))
        disc = DiscriminatorParams.create(4, 8, RngStream(22))
        noise = sample_noise(5, 6, RngStream(23))
        probs = discriminator_forward(disc, generator_forward(gen, noise))
        loss = T.binary_cross_entropy(probs, np.ones((5, 1)))
        expected = -float(np.log(probs.data).mean())
        assert loss.item() == pytest.approx(expected, rel=1e-9)


class TestBatchCycler:
    def test_balanced_coverage_over_full_cycles(self):
        cycler = _BatchCycler(6, RngStream(5))
        drawn = np.concatenate([cycler.take(3) for _ in range(4)])
        counts = np.bincount(drawn, minlength=6)
        assert list(counts) == [2] * 6

    def test_batch_larger_than_population(self):
        cycler = _BatchCycler(4, RngStream(6))
        batch = cycler.take(10)
        assert len(batch) == 10
        assert set(batch) == {0, 1, 2, 3}

    def test_within_order_no_duplicates(self):
        cycler = _BatchCycler(10, RngStream(7))
        batch = cycler.take(10)
        assert len(set(batch)) == 10


def mini_setup(seed=31, n=30):
    rng = RngStream(seed)
    translator = Seq2SeqParams.create(6, 6, 4, 8, rng.split("translator"))
    ids = rng.split("data").integers(0, 7, shape=(n, 4))
    cfg = RunConfig(gan_epochs=40, gan_batch_size=10, noise_width=16,
                    discriminator_units=12)
    gen = GeneratorParams.create(16, translator.latent_width, rng.split("gen"))
    disc = DiscriminatorParams.create(translator.latent_width, 12, rng.split("disc"))
    return translator, ids, cfg, gen, disc, rng.split("train")


class TestTrainGan:
    def test_report_shape_and_ranges(self):
        translator, ids, cfg, gen, disc, rng = mini_setup()
        _, _, report = train_gan(gen, disc, translator, ids, cfg, rng)
        assert len(report.history) == cfg.gan_epochs
        for rec in report.history:
            assert rec.gen_loss >= 0.0 and rec.disc_loss >= 0.0
            assert 0.0 <= rec.disc_acc_real <= 1.0
            assert 0.0 <= rec.disc_acc_fake <= 1.0
        assert report.history[0].epoch == 1
        assert report.history[-1].epoch == cfg.gan_epochs

    def test_translator_weights_untouched(self):
        translator, ids, cfg, gen, disc, rng = mini_setup()
        before = {k: v.copy() for k, v in translator.state_dict().items()}
        _, _, report = train_gan(gen, disc, translator, ids, cfg, rng)
        after = translator.state_dict()
        for name in before:
            assert after[name].tobytes() == before[name].tobytes()
        assert report.encoder_checksum == checksum_tensors(after)

    def test_generator_weights_change(self):
        translator, ids, cfg, gen, disc, rng = mini_setup()
        w0 = gen.dense.w.data.copy()
        train_gan(gen, disc, translator, ids, cfg, rng)
        assert not np.array_equal(gen.dense.w.data, w0)

    def test_same_seed_reproduces_history(self):
        t1, ids1, cfg, g1, d1, r1 = mini_setup(seed=42)
        t2, ids2, _, g2, d2, r2 = mini_setup(seed=42)
        _, _, rep1 = train_gan(g1, d1, t1, ids1, cfg, r1)
        _, _, rep2 = train_gan(g2, d2, t2, ids2, cfg, r2)
        assert [e.gen_loss for e in rep1.history] == [e.gen_loss for e in rep2.history]
        assert checksum_tensors(g1.state_dict()) == checksum_tensors(g2.state_dict())
        assert rep1.moment_gap_final == rep2.moment_gap_final

    def test_moment_gaps_recorded(self):
        translator, ids, cfg, gen, disc, rng = mini_setup()
        _, _, report = train_gan(gen, disc, translator, ids, cfg, rng)
        assert report.moment_gap_initial[0] > 0.0
        assert report.moment_gap_final[0] > 0.0
        assert np.isfinite(report.moment_gap_final).all()

    def test_gradients_cleared_after_run(self):
        translator, ids, cfg, gen, disc, rng = mini_setup()
        train_gan(gen, disc, translator, ids, cfg, rng)
        assert all(p.grad is None for p in gen.params() + disc.params())

    def test_epoch_callback_sees_records(self):
        translator, ids, cfg, gen, disc, rng = mini_setup()
        seen = []
        train_gan(gen, disc, translator, ids, cfg, rng, on_epoch=seen.append)
        assert len(seen) == cfg.gan_epochs
        assert all(isinstance(r, GanEpoch) for r in seen)

    def test_mutating_translator_mid_run_raises(self):
        translator, ids, cfg, gen, disc, rng = mini_setup()

        def corrupt(_):
            translator.embedding.data[0, 0] += 1.0

        with pytest.raises(RuntimeError, match="frozen"):
            train_gan(gen, disc, translator, ids, cfg, rng, on_epoch=corrupt)

    def test_nan_weights_abort_with_epoch(self):
        translator, ids, cfg, gen, disc, rng = mini_setup()
        gen.dense.w.data[:] = np.nan
        with pytest.raises(TrainingDiverged, match=r"epoch 1"):
            train_gan(gen, disc, translator, ids, cfg, rng)

    def test_empty_corpus_rejected(self):
        translator, _, cfg, gen, disc, rng = mini_setup()
        with pytest.raises(ConfigError):
            train_gan(gen, disc, translator, np.zeros((0, 4), dtype=np.int64), cfg, rng)

    def test_width_mismatch_rejected(self):
        translator, ids, cfg, _, disc, rng = mini_setup()
        bad_gen = GeneratorParams.create(16, translator.latent_width + 2, RngStream(1))
        with pytest.raises(ShapeError):
            train_gan(bad_gen, disc, translator, ids, cfg, rng)


class TestGanCheckpoint:
    def test_roundtrip(self, tmp_path):
        translator, ids, cfg, gen, disc, rng = mini_setup()
        _, _, report = train_gan(gen, disc, translator, ids, cfg, rng,
                                 out_dir=tmp_path)
        loaded_gen, loaded_disc, meta = load_gan(tmp_path / "gan.ckpt")
        assert checksum_tensors(loaded_gen.state_dict()) == checksum_tensors(gen.state_dict())
        assert checksum_tensors(loaded_disc.state_dict()) == checksum_tensors(disc.state_dict())
        assert meta["kind"] == "gan"
        assert meta["noise_width"] == 16
        assert meta["final_gen_loss"] == report.history[-1].gen_loss
        assert meta["encoder_checksum"] == report.encoder_checksum

    def test_tanh_flag_survives(self, tmp_path):
        from latentaug.gan import save_gan
        from latentaug.gan import GanReport
        gen = GeneratorParams.create(4, 6, RngStream(1), tanh_output=True)
        disc = DiscriminatorParams.create(6, 8, RngStream(2))
        save_gan(tmp_path, gen, disc, RunConfig(), GanReport())
        loaded_gen, _, _ = load_gan(tmp_path / "gan.ckpt")
        assert loaded_gen.tanh_output is True

    def test_wrong_kind_rejected(self, tmp_path):
        from latentaug.checkpoint import save_checkpoint
        save_checkpoint(tmp_path / "x.ckpt", {"a": np.zeros(2)}, {"kind": "encdec"})
        with pytest.raises(CheckpointError):
            load_gan(tmp_path / "x.ckpt")
