import numpy as np
import pytest
from hypothesis import given, strategies as st
import hypothesis.extra.numpy as hnp

from airsep import nn
from airsep.nn import (AdamState, DenseNet, ShapeError, adam_step, backward,
                       forward, grad_check, load_params, save_params, softmax)


def identity_net(dim, dtype=np.float64):
    net = DenseNet([dim, dim], ["identity"], dtype=dtype)
    net.layers[0].w[:] = np.eye(dim)
    net.layers[0].b[:] = 0.0
    return net


class TestForward:
    def test_identity_layer(self):
        net = identity_net(2)
        y, _ = forward(net, np.array([1.0, 2.0]))
        np.testing.assert_allclose(y, [1.0, 2.0])

    def test_relu_layer(self):
        net = identity_net(2)
        net.layers[0].activation = "relu"
        y, _ = forward(net, np.array([-1.0, 3.0]))
        np.testing.assert_allclose(y, [0.0, 3.0])

    def test_zero_weights_tanh(self):
        net = DenseNet([3, 4, 2], ["tanh", "tanh"], dtype=np.float64)
        for layer in net.layers:
            layer.w[:] = 0.0
        y, _ = forward(net, np.array([5.0, -2.0, 1.0]))
        np.testing.assert_allclose(y, np.zeros(2))

    def test_dimension_mismatch(self):
        net = identity_net(2)
        with pytest.raises(ShapeError):
            forward(net, np.zeros(3))


class TestBackward:
    def test_linear_layer_grads(self):
        net = DenseNet([2, 1], ["identity"], dtype=np.float64)
        x = np.array([3.0, -1.0])
        _, cache = forward(net, x)
        grads, _ = backward(net, cache, np.array([1.0]))
        np.testing.assert_allclose(grads[0], x[None, :])
        np.testing.assert_allclose(grads[1], [1.0])

    def test_zero_upstream(self):
        net = DenseNet([3, 5, 2], ["relu", "identity"], dtype=np.float64,
                       rng=np.random.default_rng(0))
        _, cache = forward(net, np.ones(3))
        grads, dx = backward(net, cache, np.zeros(2))
        for g in grads:
            np.testing.assert_allclose(g, 0.0)
        np.testing.assert_allclose(dx, 0.0)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        net = DenseNet([4, 6, 5, 3], ["tanh", "relu", "identity"],
                       dtype=np.float64, rng=rng)
        x = rng.normal(size=4)
        target = rng.normal(size=3)

        def loss_fn(y):
            return 0.5 * float(np.sum((y - target) ** 2)), y - target

        assert grad_check(net, loss_fn, x) < 1e-4

    def test_stale_cache_rejected(self):
        net = DenseNet([2, 2], ["identity"], dtype=np.float64)
        other = DenseNet([2, 3, 2], ["relu", "identity"], dtype=np.float64)
        _, cache = forward(net, np.zeros(2))
        with pytest.raises(ShapeError):
            backward(other, cache, np.zeros(2))


class TestSoftmax:
    def test_symmetry(self):
        np.testing.assert_allclose(softmax(np.array([0.0, 0.0])), [0.5, 0.5])

    def test_hand_value(self):
        # e^2 / (e^2 + 1)
        np.testing.assert_allclose(softmax(np.array([2.0, 0.0])),
                                   [0.8808, 0.1192], atol=1e-4)

    def test_large_inputs_no_overflow(self):
        p = softmax(np.array([1000.0, 0.0]))
        assert np.isfinite(p).all()
        np.testing.assert_allclose(p, [1.0, 0.0], atol=1e-12)

    @given(hnp.arrays(np.float64, st.integers(1, 12),
                      elements=st.floats(-50, 50)))
    def test_valid_distribution(self, z):
        p = softmax(z)
        # strictly interior mathematically; closed bounds allow f64 rounding
        assert (p > 0).all() and (p <= 1).all()
        assert abs(p.sum() - 1.0) < 1e-9


class TestAdam:
    def test_zero_grad_no_change(self):
        p = np.array([1.0, -2.0])
        state = AdamState.for_params([p], lr=5e-5)
        adam_step([p], [np.zeros(2)], state)
        np.testing.assert_allclose(p, [1.0, -2.0])

    def test_first_step_magnitude(self):
        # with g = 1 the bias-corrected ratio is 1, so the step is ~ -lr
        p = np.array([0.0])
        state = AdamState.for_params([p], lr=5e-5)
        adam_step([p], [np.array([1.0])], state)
        np.testing.assert_allclose(p, [-5e-5], rtol=1e-6)

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        p1 = rng.normal(size=4)
        p2 = p1.copy()
        g = rng.normal(size=4)
        s1 = AdamState.for_params([p1], lr=1e-3)
        s2 = AdamState.for_params([p2], lr=1e-3)
        adam_step([p1], [g], s1)
        adam_step([p2], [g], s2)
        np.testing.assert_array_equal(p1, p2)

    def test_nan_rejected(self):
        p = np.zeros(2)
        state = AdamState.for_params([p])
        with pytest.raises(FloatingPointError):
            adam_step([p], [np.array([np.nan, 0.0])], state)

    def test_step_counter_increases(self):
        p = np.zeros(1)
        state = AdamState.for_params([p])
        for expected in (1, 2, 3):
            adam_step([p], [np.ones(1)], state)
            assert state.step == expected

    def test_finite_over_many_small_steps(self):
        rng = np.random.default_rng(3)
        p = rng.normal(size=8).astype(np.float32)
        state = AdamState.for_params([p], lr=1e-3)
        for _ in range(20_000):
            adam_step([p], [rng.normal(scale=1e-3, size=8).astype(np.float32)],
                      state)
        assert np.isfinite(p).all()


class TestGradCheck:
    def test_linear_quadratic_exact(self):
        net = DenseNet([3, 2], ["identity"], dtype=np.float64,
                       rng=np.random.default_rng(1))

        def loss_fn(y):
            return 0.5 * float(np.sum(y ** 2)), y

        assert grad_check(net, loss_fn, np.array([1.0, -0.5, 2.0])) < 1e-7

    def test_requires_f64(self):
        net = DenseNet([2, 2], ["identity"], dtype=np.float32)
        with pytest.raises(ValueError):
            grad_check(net, lambda y: (0.0, np.zeros_like(y)), np.zeros(2))


class TestCheckpoint:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(5)
        arrays = [("a", rng.normal(size=(3, 2)).astype(np.float32)),
                  ("b", rng.normal(size=4))]
        save_params(tmp_path / "ckpt", arrays, extra={"note": 1})
        named, manifest = load_params(tmp_path / "ckpt")
        np.testing.assert_array_equal(named["a"].astype(np.float32), arrays[0][1])
        np.testing.assert_array_equal(named["b"], arrays[1][1])
        assert manifest["extra"]["note"] == 1
        assert manifest["parameter_count"] == 10

    def test_missing_file(self, tmp_path):
        with pytest.raises(nn.CheckpointError):
            load_params(tmp_path / "nope")

    def test_corrupt_count(self, tmp_path):
        save_params(tmp_path / "c", [("a", np.zeros(4))])
        with open((tmp_path / "c").with_suffix(".bin"), "ab") as fh:
            fh.write(b"\x00" * 8)
        with pytest.raises(nn.CheckpointError):
            load_params(tmp_path / "c")
