"""Dense and LSTM layer behaviour plus the finite-difference harness."""

import numpy as np
import pytest

from latentaug import tensor as T
from latentaug.errors import ShapeError
from latentaug.gradcheck import CASES, check_gradients
from latentaug.layers import (DenseWeights, LstmWeights, dense, glorot_init,
                              lstm_cell, lstm_sequence)
from latentaug.rng import RngStream


@pytest.fixture
def rng():
    return RngStream(42).split("test-init")


class TestGlorotInit:
    def test_matrix_bound_and_spread(self, rng):
        w = glorot_init((100, 50), rng)
        bound = np.sqrt(6.0 / 150.0)
        assert np.abs(w).max() <= bound
        assert np.abs(w).max() > 0.9 * bound  # actually fills the range
        assert abs(w.mean()) < 0.01

    def test_bias_is_zero(self, rng):
        np.testing.assert_array_equal(glorot_init((64,), rng), np.zeros(64))

    def test_mean_near_zero_at_scale(self, rng):
        w = glorot_init((500, 200), rng)  # 1e5 draws
        assert abs(float(w.mean())) < 0.005

    def test_dtype(self, rng):
        assert glorot_init((4, 4), rng).dtype == np.float32
        assert glorot_init((4, 4), rng, dtype=np.float64).dtype == np.float64

    def test_deterministic_per_stream(self):
        a = glorot_init((8, 8), RngStream(9).split("m"))
        b = glorot_init((8, 8), RngStream(9).split("m"))
        np.testing.assert_array_equal(a, b)


class TestDense:
    def test_forward(self, rng):
        w = DenseWeights(w=T.Tensor(np.array([[1.0, 0.0], [0.0, 2.0]])),
                         b=T.Tensor(np.array([0.5, -0.5])))
        out = dense(T.Tensor(np.array([[3.0, 4.0]])), w)
        np.testing.assert_allclose(out.data, [[3.5, 7.5]])

    def test_create_shapes(self, rng):
        w = DenseWeights.create(5, 7, rng)
        assert w.w.shape == (5, 7) and w.b.shape == (7,)
        assert w.w.requires_grad and w.b.requires_grad
        assert len(w.params()) == 2


class TestLstmCell:
    def test_matches_hand_computation(self):
        """Frozen oracle: all-0.5 weights, bias 0.1, fixed state."""
        units = 2
        w = LstmWeights(w_x=T.Tensor(np.full((2, 8), 0.5)),
                        w_h=T.Tensor(np.full((2, 8), 0.5)),
                        b=T.Tensor(np.full(8, 0.1)))
        h, c = lstm_cell(T.Tensor(np.array([[1.0, -1.0]])),
                         T.Tensor(np.array([[0.5, 0.5]])),
                         T.Tensor(np.array([[1.0, 0.0]])), w)
        np.testing.assert_allclose(h.data, [[0.48965688, 0.21531969]], atol=1e-7)
        np.testing.assert_allclose(c.data, [[0.99240575, 0.34674944]], atol=1e-7)

    def test_matches_plain_numpy_reference(self, rng):
        """Gate order input/forget/candidate/output against an independent formula."""
        units, dim, batch = 3, 4, 5
        w = LstmWeights.create(dim, units, rng, dtype=np.float64)
        x = rng.uniform(-1, 1, (batch, dim), dtype=np.float64)
        h0 = rng.uniform(-1, 1, (batch, units), dtype=np.float64)
        c0 = rng.uniform(-1, 1, (batch, units), dtype=np.float64)
        h, c = lstm_cell(T.Tensor(x), T.Tensor(h0), T.Tensor(c0), w)

        z = x @ w.w_x.data + h0 @ w.w_h.data + w.b.data
        sig = lambda a: 1 / (1 + np.exp(-a))
        gi, gf = sig(z[:, :units]), sig(z[:, units:2 * units])
        gg, go = np.tanh(z[:, 2 * units:3 * units]), sig(z[:, 3 * units:])
        c_ref = gf * c0 + gi * gg
        np.testing.assert_allclose(c.data, c_ref, rtol=1e-10)
        np.testing.assert_allclose(h.data, go * np.tanh(c_ref), rtol=1e-10)

    def test_zero_weights_give_zero_hidden(self):
        w = LstmWeights(w_x=T.Tensor(np.zeros((2, 8))), w_h=T.Tensor(np.zeros((2, 8))),
                        b=T.Tensor(np.zeros(8)))
        h, c = lstm_cell(T.Tensor(np.ones((1, 2))), T.Tensor(np.zeros((1, 2))),
                         T.Tensor(np.zeros((1, 2))), w)
        np.testing.assert_allclose(h.data, 0.0)
        np.testing.assert_allclose(c.data, 0.0)

    def test_kernels_excludes_bias(self, rng):
        w = LstmWeights.create(2, 2, rng)
        assert w.b not in w.kernels() and len(w.kernels()) == 2


class TestLstmSequence:
    def test_forward_equals_manual_unroll(self, rng):
        w = LstmWeights.create(3, 2, rng, dtype=np.float64)
        x = rng.uniform(-1, 1, (2, 4, 3), dtype=np.float64)
        hs, hf, cf = lstm_sequence(w, T.Tensor(x))
        h = T.Tensor(np.zeros((2, 2)))
        c = T.Tensor(np.zeros((2, 2)))
        for t in range(4):
            h, c = lstm_cell(T.Tensor(x[:, t, :]), h, c, w)
            np.testing.assert_allclose(hs[t].data, h.data, rtol=1e-12)
        np.testing.assert_allclose(hf.data, h.data, rtol=1e-12)
        np.testing.assert_allclose(cf.data, c.data, rtol=1e-12)

    def test_reverse_final_state_is_position_zero(self, rng):
        """Right-to-left scan: final h equals the forward scan of the flipped sequence."""
        w = LstmWeights.create(3, 2, rng, dtype=np.float64)
        x = rng.uniform(-1, 1, (2, 4, 3), dtype=np.float64)
        _, h_rev, _ = lstm_sequence(w, T.Tensor(x), reverse=True)
        _, h_fwd_flipped, _ = lstm_sequence(w, T.Tensor(x[:, ::-1, :].copy()))
        np.testing.assert_allclose(h_rev.data, h_fwd_flipped.data, rtol=1e-12)

    def test_rejects_2d(self, rng):
        w = LstmWeights.create(3, 2, rng)
        with pytest.raises(ShapeError):
            lstm_sequence(w, T.Tensor(np.ones((2, 3))))


class TestGradCheckHarness:
    def test_every_case_passes_one_seed(self):
        results = check_gradients(seed=17)
        assert {r.name for r in results} == set(CASES)
        bad = [r for r in results if not r.passed]
        assert not bad, f"failed cases: {[(r.name, r.max_rel_err) for r in bad]}"

    def test_corruption_is_detected(self):
        """The harness must flag a deliberately wrong gradient."""
        results = check_gradients(seed=17, corrupt="lstm-cell", cases=["lstm-cell"])
        assert not results[0].passed

    def test_unknown_case_rejected(self):
        with pytest.raises(KeyError):
            check_gradients(seed=0, cases=["nope"])

    def test_case_subset(self):
        results = check_gradients(seed=3, cases=["dense", "softmax-ce"])
        assert [r.name for r in results] == ["dense", "softmax-ce"]
