"""Kernel-level checks: affine, batch norm, swish, Adam, the FD checker."""

import numpy as np
import pytest

from ofexi import core


class TestActivation:
    def test_values(self):
        """swish(x) = x * sigmoid(x); frozen spot values.

        swish(0) = 0, swish(10) = 10 / (1 + e^-10) = 9.999546021313.
        """
        assert core.activation(np.array([0.0]))[0] == 0.0
        np.testing.assert_allclose(core.activation(np.array([10.0]))[0],
                                   9.999546021313, rtol=1e-12)
        # global minimum is shallow and the function is bounded below
        x = np.linspace(-50, 50, 20001)
        assert core.activation(x).min() > -0.2785

    def test_grad_matches_fd(self):
        x = np.linspace(-8, 8, 2001)
        h = 1e-6
        numeric = (core.activation(x + h) - core.activation(x - h)) / (2 * h)
        np.testing.assert_allclose(core.activation_grad(x), numeric, atol=1e-8)

    def test_grad_at_zero(self):
        """swish'(0) = sigmoid(0) = 0.5."""
        assert core.activation_grad(np.array([0.0]))[0] == 0.5


class TestAffine:
    def test_forward_hand_case(self):
        W = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        b = np.array([0.5, -0.5, 0.0])
        x = np.array([[1.0, 1.0], [2.0, 0.0]])
        y = core.affine_forward(W, b, x)
        np.testing.assert_allclose(y, [[3.5, 6.5, 11.0], [2.5, 5.5, 10.0]])

    def test_shape_mismatch_raises(self):
        W = np.zeros((3, 2))
        b = np.zeros(3)
        with pytest.raises(core.DimensionError):
            core.affine_forward(W, b, np.zeros((4, 3)))
        with pytest.raises(core.DimensionError):
            core.affine_forward(W, np.zeros(2), np.zeros((4, 2)))

    def test_backward_matches_fd(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            n_in, n_out, batch = rng.integers(1, 6, size=3)
            W = rng.normal(size=(n_out, n_in))
            b = rng.normal(size=n_out)
            x = rng.normal(size=(batch, n_in))
            t = rng.normal(size=(batch, n_out))

            def lag():
                y = core.affine_forward(W, b, x)
                loss = 0.5 * float(((y - t) ** 2).sum())
                dx, dW, db = core.affine_backward(y - t, x, W)
                return loss, [dW, db, dx]

            rep = core.finite_diff_check(lag, [W, b, x])
            assert rep.passed, rep


class TestBatchNorm:
    def test_train_forward_hand_case(self):
        """Biased batch stats: x = [[1,2],[3,4]] -> mean [2,3], var [1,1]."""
        bn = core.make_bn(2)
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        y, cache = core.bn_forward(x, bn, train=True)
        want = 1.0 / np.sqrt(1.0 + 1e-5)
        np.testing.assert_allclose(y, [[-want, -want], [want, want]], rtol=1e-12)
        np.testing.assert_allclose(cache.inv_std, [want, want], rtol=1e-12)

    def test_running_stats_ema(self):
        """One train pass folds batch stats in with keep factor 0.99."""
        bn = core.make_bn(1)
        x = np.array([[0.0], [4.0]])  # mean 2, biased var 4
        core.bn_forward(x, bn, train=True)
        np.testing.assert_allclose(bn.running_mean, [0.99 * 0.0 + 0.01 * 2.0])
        np.testing.assert_allclose(bn.running_var, [0.99 * 1.0 + 0.01 * 4.0])

    def test_update_running_flag(self):
        bn = core.make_bn(1)
        x = np.array([[0.0], [4.0]])
        core.bn_forward(x, bn, train=True, update_running=False)
        np.testing.assert_allclose(bn.running_mean, [0.0])
        np.testing.assert_allclose(bn.running_var, [1.0])

    def test_eval_uses_running_stats(self):
        bn = core.make_bn(1)
        bn.running_mean = np.array([3.0])
        bn.running_var = np.array([4.0])
        y, _ = core.bn_forward(np.array([[5.0]]), bn, train=False)
        np.testing.assert_allclose(y, [[2.0 / np.sqrt(4.0 + 1e-5)]], rtol=1e-12)

    def test_degenerate_batch_raises(self):
        bn = core.make_bn(2)
        with pytest.raises(core.DegenerateBatchError):
            core.bn_forward(np.zeros((1, 2)), bn, train=True)

    def test_train_output_is_normalized(self):
        rng = np.random.default_rng(1)
        bn = core.make_bn(4)
        x = rng.normal(loc=5.0, scale=3.0, size=(64, 4))
        y, _ = core.bn_forward(x, bn, train=True)
        np.testing.assert_allclose(y.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(y.var(axis=0), 1.0, atol=1e-4)

    @pytest.mark.parametrize("train", [True, False])
    def test_backward_matches_fd(self, train):
        rng = np.random.default_rng(2)
        bn = core.make_bn(3)
        bn.scale.value = rng.normal(size=3)
        bn.shift.value = rng.normal(size=3)
        bn.running_mean = rng.normal(size=3)
        bn.running_var = rng.uniform(0.5, 2.0, size=3)
        x = rng.normal(size=(5, 3))
        t = rng.normal(size=(5, 3))

        def lag():
            y, cache = core.bn_forward(x, bn, train=train, update_running=False)
            loss = 0.5 * float(((y - t) ** 2).sum())
            dx, dscale, dshift = core.bn_backward(y - t, cache, bn)
            return loss, [dx, dscale, dshift]

        rep = core.finite_diff_check(
            lag, [x, bn.scale.value, bn.shift.value])
        assert rep.passed, rep


class TestAdam:
    def test_first_step_is_signed_lr(self):
        """With bias correction the first update is lr * g / (|g| + eps)."""
        p = core.Param(np.array([1.0, -2.0, 3.0]))
        p.grad[:] = np.array([0.5, -4.0, 1e-3])
        core.adam_step(p, lr=0.1)
        expect = np.array([1.0, -2.0, 3.0]) - 0.1 * np.array([0.5, -4.0, 1e-3]) / (
            np.abs([0.5, -4.0, 1e-3]) + 1e-8)
        np.testing.assert_allclose(p.value, expect, rtol=1e-12)

    def test_grad_zeroed_after_step(self):
        p = core.Param(np.ones(2))
        p.grad[:] = 1.0
        core.adam_step(p, lr=0.01)
        np.testing.assert_allclose(p.grad, 0.0)
        assert p.step_count == 1

    def test_converges_on_quadratic(self):
        """Adam drives a separable quadratic to its minimum."""
        target = np.array([1.0, -3.0, 0.5])
        p = core.Param(np.zeros(3))
        for _ in range(3000):
            p.grad[:] = p.value - target
            core.adam_step(p, lr=0.01)
        np.testing.assert_allclose(p.value, target, atol=1e-4)

    def test_moment_recursion(self):
        """Two steps with constant gradient match the written-out recursion."""
        p = core.Param(np.array([0.0]))
        g = 2.0
        m = v = 0.0
        val = 0.0
        for k in (1, 2):
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            val -= 0.05 * (m / (1 - 0.9 ** k)) / (np.sqrt(v / (1 - 0.999 ** k)) + 1e-8)
            p.grad[:] = g
            core.adam_step(p, lr=0.05)
        np.testing.assert_allclose(p.value, [val], rtol=1e-12)


class TestFiniteDiffCheck:
    def test_accepts_correct_gradient(self):
        x = np.array([0.3, -1.2])

        def lag():
            return float((x ** 2).sum()), [2.0 * x]

        rep = core.finite_diff_check(lag, [x])
        assert rep.passed
        assert rep.n_coords == 2

    def test_rejects_wrong_gradient(self):
        x = np.array([0.3, -1.2])

        def lag():
            return float((x ** 2).sum()), [2.5 * x]  # deliberately off

        rep = core.finite_diff_check(lag, [x])
        assert not rep.passed
        assert rep.max_rel_error > 0.1

    def test_zero_gradient_noise_tolerated(self):
        """Coordinates whose true gradient is 0 must not trip the check."""
        x = np.array([0.5])

        def lag():
            # loss ignores x entirely
            return 1.234, [np.zeros(1)]

        rep = core.finite_diff_check(lag, [x])
        assert rep.passed
