"""Densely connected gated feature extractors with a prediction head.

Two stacks of dense blocks: phi_o consumes observations, phi_oa consumes
[z_o; action]. Each block computes

    z_l = [ xi_l * swish(BN(W_l z_{l-1} + b_l)) ; V_l z_{l-1} ]

where xi_l is the block's gate realization (theta itself in eval mode) and
V_l is a learnable diagonal pass-through, so every earlier feature rides
along to the output. A bias-free linear head predicts the next observation
from z_oa; its regression error is the auxiliary training signal.

Block outputs are stacked newest-first: z_l holds layer l's gated units,
then layer l-1's, down to the raw input at the tail. Pruning removes one
unit everywhere it appears: its row in the owning block, the matching
column and diagonal entry in every later block, the predictor column, and
the first-layer columns of any consumer networks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import complexity
from .core import (BatchNormState, DimensionError, Param, activation,
                   activation_grad, affine_backward, affine_forward,
                   bn_backward, bn_forward, make_bn, uniform_fan_in)
from .gates import GateGradients, GateVector, effective_theta, make_gate, \
    remove_units, sample, theta_grad


@dataclass
class DenseBlock:
    W: Param
    b: Param
    V: Param                    # diagonal pass-through, one entry per input
    bn: BatchNormState
    gate: GateVector = None

    @property
    def width(self) -> int:
        return self.W.value.shape[0]

    @property
    def in_dim(self) -> int:
        return self.W.value.shape[1]


@dataclass
class OfeXiNet:
    d_o: int
    d_a: int
    blocks_o: list
    blocks_oa: list
    W_pred: Param


def _make_block(rng: np.random.Generator, width: int, in_dim: int,
                layer_id: str, gated: bool) -> DenseBlock:
    return DenseBlock(
        W=uniform_fan_in(rng, width, in_dim),
        b=Param(np.zeros(width)),
        V=Param(np.ones(in_dim)),
        bn=make_bn(width),
        gate=make_gate(width, layer_id) if gated else None,
    )


def build_ofe(rng: np.random.Generator, d_o: int, d_a: int, units_o,
              units_oa, gated: bool = True) -> OfeXiNet:
    blocks_o, blocks_oa = [], []
    in_dim = d_o
    for l, width in enumerate(units_o):
        blocks_o.append(_make_block(rng, width, in_dim, f"o{l}", gated))
        in_dim += width
    z_o_width = in_dim
    in_dim = z_o_width + d_a
    for l, width in enumerate(units_oa):
        blocks_oa.append(_make_block(rng, width, in_dim, f"oa{l}", gated))
        in_dim += width
    return OfeXiNet(
        d_o=d_o, d_a=d_a, blocks_o=blocks_o, blocks_oa=blocks_oa,
        W_pred=uniform_fan_in(rng, d_o, in_dim),
    )


def z_o_dim(net: OfeXiNet) -> int:
    return net.d_o + sum(b.width for b in net.blocks_o)


def z_oa_dim(net: OfeXiNet) -> int:
    return z_o_dim(net) + net.d_a + sum(b.width for b in net.blocks_oa)


# ---------------------------------------------------------------------------
# forward


@dataclass
class BlockCache:
    z_in: np.ndarray
    bn_out: np.ndarray
    bn_cache: object
    mult: np.ndarray            # gate multiplier used, None when gate-free
    act: np.ndarray


@dataclass
class PhiCache:
    blocks: list = field(default_factory=list)


def _block_forward(block: DenseBlock, z: np.ndarray, mode: str,
                   rng, xi, update_running: bool):
    pre = affine_forward(block.W.value, block.b.value, z)
    bn_out, bn_cache = bn_forward(pre, block.bn, train=(mode == "train"),
                                  update_running=update_running)
    act = activation(bn_out)
    if block.gate is None:
        mult = None
        gated = act
    else:
        if xi is not None:
            mult = np.asarray(xi, dtype=np.float64)
        elif mode == "train":
            mult = sample(block.gate, rng)
        else:
            mult = effective_theta(block.gate)
        gated = act * mult
    z_next = np.concatenate([gated, z * block.V.value], axis=1)
    cache = BlockCache(z_in=z, bn_out=bn_out, bn_cache=bn_cache,
                       mult=mult, act=act)
    return z_next, cache


def _phi_forward(blocks, z0, mode, rng, xi_list, update_running):
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    cache = PhiCache()
    z = z0
    for l, block in enumerate(blocks):
        xi = None if xi_list is None else xi_list[l]
        z, bc = _block_forward(block, z, mode, rng, xi, update_running)
        cache.blocks.append(bc)
    return z, cache


def phi_o_forward(net: OfeXiNet, o: np.ndarray, mode: str = "eval",
                  rng=None, xi=None, update_running: bool = True):
    """Extract z_o from a batch of observations. Returns (z_o, cache)."""
    o = np.asarray(o, dtype=np.float64)
    if o.ndim != 2 or o.shape[1] != net.d_o:
        raise DimensionError(f"phi_o: o {o.shape} does not match d_o={net.d_o}")
    return _phi_forward(net.blocks_o, o, mode, rng, xi, update_running)


def phi_oa_forward(net: OfeXiNet, z_o: np.ndarray, a: np.ndarray,
                   mode: str = "eval", rng=None, xi=None,
                   update_running: bool = True):
    """Extract z_oa from extractor features and actions. Returns (z_oa, cache)."""
    a = np.asarray(a, dtype=np.float64)
    if z_o.shape[1] != z_o_dim(net):
        raise DimensionError(
            f"phi_oa: z_o width {z_o.shape[1]} != {z_o_dim(net)}")
    if a.ndim != 2 or a.shape[1] != net.d_a:
        raise DimensionError(f"phi_oa: a {a.shape} does not match d_a={net.d_a}")
    z0 = np.concatenate([z_o, a], axis=1)
    return _phi_forward(net.blocks_oa, z0, mode, rng, xi, update_running)


def predict_next(net: OfeXiNet, z_oa: np.ndarray) -> np.ndarray:
    """Bias-free linear readout of the next observation."""
    if z_oa.shape[1] != net.W_pred.value.shape[1]:
        raise DimensionError(
            f"predict_next: z_oa width {z_oa.shape[1]} != "
            f"{net.W_pred.value.shape[1]}")
    return z_oa @ net.W_pred.value.T


# ---------------------------------------------------------------------------
# backward


def phi_backward(blocks, cache: PhiCache, dz: np.ndarray,
                 with_params: bool = True):
    """Backpropagate dz through a block stack.

    Returns (d z_input, [d loss / d xi_l per block]). With with_params the
    weight, bias, diagonal and BN gradients accumulate into their Params;
    without it only the input gradient path is evaluated (used when a
    network runs in eval mode inside someone else's update).
    """
    dxi = [None] * len(blocks)
    for l in range(len(blocks) - 1, -1, -1):
        block, bc = blocks[l], cache.blocks[l]
        w = block.width
        dgated, dpass = dz[:, :w], dz[:, w:]
        if bc.mult is None:
            dact = dgated
        else:
            dxi[l] = (dgated * bc.act).sum(axis=0)
            dact = dgated * bc.mult
        dbn_out = dact * activation_grad(bc.bn_out)
        dpre, dscale, dshift = bn_backward(dbn_out, bc.bn_cache, block.bn)
        dz_in, dW, db = affine_backward(dpre, bc.z_in, block.W.value)
        dz = dz_in + dpass * block.V.value
        if with_params:
            block.W.grad += dW
            block.b.grad += db
            block.V.grad += (dpass * bc.z_in).sum(axis=0)
            block.bn.scale.grad += dscale
            block.bn.shift.grad += dshift
    return dz, dxi


# ---------------------------------------------------------------------------
# auxiliary objective


@dataclass
class AuxResult:
    loss: float
    mse: float
    weight_penalty: float
    c_ofe: float
    theta_grads_o: list
    theta_grads_oa: list


def ofe_params(net: OfeXiNet, include_pred: bool = True,
               include_bn: bool = True) -> list:
    ps = []
    for block in net.blocks_o + net.blocks_oa:
        ps.extend([block.W, block.b, block.V])
        if include_bn:
            ps.extend([block.bn.scale, block.bn.shift])
    if include_pred:
        ps.append(net.W_pred)
    return ps


def aux_loss_and_grads(net: OfeXiNet, o, a, o_next, lam: float, nu: float,
                       rho: float, rl_shapes, rng=None, xi_o=None,
                       xi_oa=None, update_running: bool = True) -> AuxResult:
    """Regression loss plus weight decay plus expected-cost regularizer.

    Runs one stochastic forward (gates sampled unless xi_* given, BN in batch
    mode), accumulates weight gradients in place and returns per-layer theta
    gradients assembled from the straight-through estimates and the automatic
    log gamma weights. rl_shapes supplies the first-layer theta masses of the
    consumer networks, which enter both the cost and its coefficients.
    """
    o_next = np.asarray(o_next, dtype=np.float64)
    batch = o_next.shape[0]
    sums_o, sums_oa = complexity.ofe_theta_sums(net)
    shape = complexity.NetShape(
        d_o=net.d_o, d_a=net.d_a, theta_sums_o=sums_o, theta_sums_oa=sums_oa,
        rho=rho, nu_ofe=nu, rl_nets=list(rl_shapes))

    z_o, cache_o = phi_o_forward(net, o, "train", rng, xi_o, update_running)
    z_oa, cache_oa = phi_oa_forward(net, z_o, a, "train", rng, xi_oa,
                                    update_running)
    pred = predict_next(net, z_oa)
    err = pred - o_next
    mse = float((err * err).sum() / batch)

    penalty = 0.0
    for block in net.blocks_o + net.blocks_oa:
        penalty += (block.W.value ** 2).sum() + (block.b.value ** 2).sum() \
            + (block.V.value ** 2).sum()
    penalty = float(0.5 * lam * penalty)
    c_ofe = complexity.c_ofe_total(shape)
    loss = mse + penalty + nu * c_ofe

    dpred = 2.0 * err / batch
    net.W_pred.grad += dpred.T @ z_oa
    dz_oa = dpred @ net.W_pred.value
    dz0_oa, dxi_oa = phi_backward(net.blocks_oa, cache_oa, dz_oa)
    dz_o = dz0_oa[:, :z_o_dim(net)]
    _, dxi_o = phi_backward(net.blocks_o, cache_o, dz_o)

    if lam:
        for block in net.blocks_o + net.blocks_oa:
            block.W.grad += lam * block.W.value
            block.b.grad += lam * block.b.value
            block.V.grad += lam * block.V.value

    tg_o = [None if dxi_o[l] is None else theta_grad(GateGradients(
                dxi_o[l], np.full(len(dxi_o[l]), complexity.log_gamma_o(shape, l))))
            for l in range(len(net.blocks_o))]
    tg_oa = [None if dxi_oa[l] is None else theta_grad(GateGradients(
                dxi_oa[l], np.full(len(dxi_oa[l]), complexity.log_gamma_oa(shape, l))))
             for l in range(len(net.blocks_oa))]
    return AuxResult(loss=loss, mse=mse, weight_penalty=penalty, c_ofe=c_ofe,
                     theta_grads_o=tg_o, theta_grads_oa=tg_oa)


# ---------------------------------------------------------------------------
# structural pruning


def _delete(p: Param, idx, axis) -> None:
    p.value = np.delete(p.value, idx, axis=axis)
    p.grad = np.delete(p.grad, idx, axis=axis)
    p.adam_m = np.delete(p.adam_m, idx, axis=axis)
    p.adam_v = np.delete(p.adam_v, idx, axis=axis)


def _delete_own_unit(block: DenseBlock, unit: int) -> None:
    _delete(block.W, unit, 0)
    _delete(block.b, unit, 0)
    _delete(block.bn.scale, unit, 0)
    _delete(block.bn.shift, unit, 0)
    block.bn.running_mean = np.delete(block.bn.running_mean, unit)
    block.bn.running_var = np.delete(block.bn.running_var, unit)
    if block.gate is not None:
        remove_units(block.gate, unit)


def _delete_input_col(block: DenseBlock, col: int) -> None:
    _delete(block.W, col, 1)
    _delete(block.V, col, 0)


def prune_unit(net: OfeXiNet, which: str, layer: int, unit: int,
               theta_tol: float, zo_consumers=(), zoa_consumers=()) -> None:
    """Remove one gated unit and every weight that references it.

    which selects the stack ("o" or "oa"). Consumers are gated MLPs whose
    first layer reads z_o or z_oa; their input columns shrink accordingly.
    Refuses units whose inclusion probability is not safely below theta_tol.
    """
    blocks = net.blocks_o if which == "o" else net.blocks_oa
    if not 0 <= layer < len(blocks):
        raise IndexError(f"layer {layer} out of range for stack {which!r}")
    block = blocks[layer]
    if not 0 <= unit < block.width:
        raise IndexError(f"unit {unit} out of range for layer width {block.width}")
    if block.gate is not None and not block.gate.theta[unit] < theta_tol:
        raise ValueError(
            f"refusing to prune unit {unit} of {which}{layer}: "
            f"theta={block.gate.theta[unit]:.4f} >= tol={theta_tol}")

    widths = [b.width for b in blocks]
    # position of the unit inside z_m for m >= layer (newest block first)
    def pos_in(m):
        return sum(widths[layer + 1:m + 1]) + unit

    for m in range(len(blocks) - 1, layer, -1):
        _delete_input_col(blocks[m], pos_in(m - 1))
    _delete_own_unit(block, unit)

    if which == "o":
        pos_zo = pos_in(len(blocks) - 1)
        oa_widths = [b.width for b in net.blocks_oa]
        for m, oa_block in enumerate(net.blocks_oa):
            _delete_input_col(oa_block, sum(oa_widths[:m]) + pos_zo)
        pos_zoa = sum(oa_widths) + pos_zo
        _delete(net.W_pred, pos_zoa, 1)
        for consumer in zo_consumers:
            _delete(consumer.layers[0].W, pos_zo, 1)
        for consumer in zoa_consumers:
            _delete(consumer.layers[0].W, pos_zoa, 1)
    else:
        pos_zoa = pos_in(len(blocks) - 1)
        _delete(net.W_pred, pos_zoa, 1)
        for consumer in zoa_consumers:
            _delete(consumer.layers[0].W, pos_zoa, 1)
