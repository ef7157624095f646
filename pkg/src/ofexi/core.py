"""Dense numeric kernel: affine layers, batch norm, swish, Adam, gradient checking.

Everything runs in float64 on plain numpy arrays shaped (batch, features).
Backward passes are hand-derived per layer type and validated against central
finite differences in the test suite; there is no autodiff graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    """Raised when array shapes do not line up."""


class DegenerateBatchError(ValueError):
    """Raised when an operation needs a batch of at least two rows."""


def as_f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


# ---------------------------------------------------------------------------
# parameters and Adam


@dataclass
class Param:
    """A trainable array together with its gradient and Adam moments.

    ``grad`` accumulates contributions via ``+=`` and is zeroed by
    ``adam_step``, so a fresh parameter always starts a step with zeros.
    """

    value: np.ndarray
    grad: np.ndarray = field(default=None)
    adam_m: np.ndarray = field(default=None)
    adam_v: np.ndarray = field(default=None)
    step_count: int = 0

    def __post_init__(self):
        self.value = as_f64(self.value)
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        if self.adam_m is None:
            self.adam_m = np.zeros_like(self.value)
        if self.adam_v is None:
            self.adam_v = np.zeros_like(self.value)

    @property
    def size(self) -> int:
        return self.value.size


def uniform_fan_in(rng: np.random.Generator, n_out: int, n_in: int) -> Param:
    """Weight matrix (n_out, n_in) drawn uniform in +-1/sqrt(n_in)."""
    bound = 1.0 / np.sqrt(max(n_in, 1))
    return Param(rng.uniform(-bound, bound, size=(n_out, n_in)))


def adam_step(p: Param, lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> None:
    """One Adam update with bias correction; zeroes the gradient afterwards."""
    p.step_count += 1
    g = p.grad
    p.adam_m = beta1 * p.adam_m + (1.0 - beta1) * g
    p.adam_v = beta2 * p.adam_v + (1.0 - beta2) * g * g
    m_hat = p.adam_m / (1.0 - beta1 ** p.step_count)
    v_hat = p.adam_v / (1.0 - beta2 ** p.step_count)
    p.value -= lr * m_hat / (np.sqrt(v_hat) + eps)
    p.grad[...] = 0.0


# ---------------------------------------------------------------------------
# affine


def affine_forward(W: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """y = x W^T + b for x shaped (batch, n_in), W shaped (n_out, n_in)."""
    if x.ndim != 2 or W.ndim != 2 or x.shape[1] != W.shape[1]:
        raise DimensionError(
            f"affine: x {x.shape} does not match W {W.shape}")
    if b.shape != (W.shape[0],):
        raise DimensionError(f"affine: b {b.shape} does not match W {W.shape}")
    return x @ W.T + b


def affine_backward(dy: np.ndarray, x: np.ndarray, W: np.ndarray):
    """Gradients of y = x W^T + b. Returns (dx, dW, db)."""
    dx = dy @ W
    dW = dy.T @ x
    db = dy.sum(axis=0)
    return dx, dW, db


# ---------------------------------------------------------------------------
# batch norm


@dataclass
class BatchNormState:
    scale: Param
    shift: Param
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.99
    epsilon: float = 1e-5


def make_bn(width: int, momentum: float = 0.99, epsilon: float = 1e-5) -> BatchNormState:
    return BatchNormState(
        scale=Param(np.ones(width)),
        shift=Param(np.zeros(width)),
        running_mean=np.zeros(width),
        running_var=np.ones(width),
        momentum=momentum,
        epsilon=epsilon,
    )


@dataclass
class BnCache:
    train: bool
    x_hat: np.ndarray
    inv_std: np.ndarray
    x_centered: np.ndarray = None


def bn_forward(x: np.ndarray, bn: BatchNormState, train: bool,
               update_running: bool = True):
    """Batch norm over axis 0. Returns (y, BnCache).

    Train mode normalizes with biased batch statistics and, unless disabled,
    folds them into the running estimates with EMA momentum. Eval mode is a
    pure function of the running statistics.
    """
    if x.shape[1] != bn.scale.value.shape[0]:
        raise DimensionError(
            f"bn: x {x.shape} does not match width {bn.scale.value.shape[0]}")
    if train:
        if x.shape[0] < 2:
            raise DegenerateBatchError("bn train mode needs batch size >= 2")
        mu = x.mean(axis=0)
        var = x.var(axis=0)
        inv_std = 1.0 / np.sqrt(var + bn.epsilon)
        xc = x - mu
        x_hat = xc * inv_std
        if update_running:
            m = bn.momentum
            bn.running_mean = m * bn.running_mean + (1.0 - m) * mu
            bn.running_var = m * bn.running_var + (1.0 - m) * var
        cache = BnCache(train=True, x_hat=x_hat, inv_std=inv_std, x_centered=xc)
    else:
        inv_std = 1.0 / np.sqrt(bn.running_var + bn.epsilon)
        x_hat = (x - bn.running_mean) * inv_std
        cache = BnCache(train=False, x_hat=x_hat, inv_std=inv_std)
    y = bn.scale.value * x_hat + bn.shift.value
    return y, cache


def bn_backward(dy: np.ndarray, cache: BnCache, bn: BatchNormState):
    """Gradients of bn_forward. Returns (dx, dscale, dshift).

    Train mode differentiates through the batch statistics; eval mode treats
    the running statistics as constants.
    """
    dscale = (dy * cache.x_hat).sum(axis=0)
    dshift = dy.sum(axis=0)
    dx_hat = dy * bn.scale.value
    if cache.train:
        n = dy.shape[0]
        inv_std = cache.inv_std
        xc = cache.x_centered
        dvar = (dx_hat * xc).sum(axis=0) * (-0.5) * inv_std ** 3
        dmu = -(dx_hat.sum(axis=0)) * inv_std + dvar * (-2.0 / n) * xc.sum(axis=0)
        dx = dx_hat * inv_std + dvar * (2.0 / n) * xc + dmu / n
    else:
        dx = dx_hat * cache.inv_std
    return dx, dscale, dshift


# ---------------------------------------------------------------------------
# activation


def activation(x: np.ndarray) -> np.ndarray:
    """Swish: x * sigmoid(x). Smooth, zero at zero."""
    return x / (1.0 + np.exp(-x))


def activation_grad(x: np.ndarray) -> np.ndarray:
    """Derivative of swish: sigmoid(x) * (1 + x * (1 - sigmoid(x)))."""
    s = 1.0 / (1.0 + np.exp(-x))
    return s * (1.0 + x * (1.0 - s))


# ---------------------------------------------------------------------------
# finite-difference gradient checking


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_param: int
    worst_coord: tuple
    n_coords: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol


def finite_diff_check(loss_and_grads, params: list, h: float = 1e-5,
                      tol: float = 1e-5, floor: float = 1e-3) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    ``loss_and_grads`` is a zero-argument callable returning
    ``(loss, [grad per param])`` and must be deterministic: repeated calls with
    the same parameter values must produce the same loss. ``params`` is a list
    of arrays checked coordinate by coordinate (perturbed in place).

    The error at each coordinate is |a - n| / max(|a|, |n|, floor). The floor
    keeps coordinates whose true gradient is exactly zero (a bias feeding a
    mean-subtracting normalizer, say) from flagging finite-difference
    cancellation noise; any absolute discrepancy above tol * floor still fails.
    """
    _, grads = loss_and_grads()
    worst = (0.0, -1, ())
    n = 0
    for pi, (arr, g) in enumerate(zip(params, grads)):
        if g.shape != arr.shape:
            raise DimensionError(
                f"grad {pi} shape {g.shape} does not match param {arr.shape}")
        it = np.ndindex(arr.shape)
        for idx in it:
            n += 1
            orig = arr[idx]
            arr[idx] = orig + h
            lp, _ = loss_and_grads()
            arr[idx] = orig - h
            lm, _ = loss_and_grads()
            arr[idx] = orig
            numeric = (lp - lm) / (2.0 * h)
            analytic = g[idx]
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)
            if rel > worst[0]:
                worst = (rel, pi, idx)
    return GradCheckReport(max_rel_error=worst[0], worst_param=worst[1],
                           worst_coord=worst[2], n_coords=n, tol=tol)
