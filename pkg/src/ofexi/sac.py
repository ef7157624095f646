"""Soft actor-critic on extracted features, with gated MLP heads.

Networks: a squashed-Gaussian policy pi(z_o), a state value net V(z_o) with a
Polyak-averaged target copy, and two Q nets on z_oa. Every hidden layer
carries a Bernoulli gate. The network being updated runs with sampled gates;
any other network involved in that update runs in eval mode (theta-scaled),
including the action branch of the extractor inside the policy update.

The target value net owns no gates: it scales by the live V net's theta, so
structural pruning of V keeps the target exactly consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import complexity
from .core import DimensionError, Param, activation, activation_grad, \
    affine_backward, affine_forward, uniform_fan_in
from .gates import GateGradients, GateVector, effective_theta, make_gate, \
    remove_units, sample, theta_grad
from .ofenet import OfeXiNet, phi_backward, phi_oa_forward, z_o_dim

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
SQUASH_EPS = 1e-6


@dataclass
class SacConfig:
    discount: float = 0.99
    polyak_tau: float = 0.005
    entropy_alpha: float = 0.2
    batch_size: int = 128
    lr: float = 3e-4


@dataclass
class MlpLayer:
    W: Param
    b: Param
    gate: GateVector = None

    @property
    def width(self) -> int:
        return self.W.value.shape[0]


@dataclass
class MlpXiNet:
    name: str
    layers: list
    head_W: Param
    head_b: Param


def build_mlp(rng: np.random.Generator, d_in: int, hidden, d_out: int,
              name: str, gated: bool = True) -> MlpXiNet:
    layers = []
    cur = d_in
    for l, width in enumerate(hidden):
        layers.append(MlpLayer(
            W=uniform_fan_in(rng, width, cur),
            b=Param(np.zeros(width)),
            gate=make_gate(width, f"{name}{l}") if gated else None,
        ))
        cur = width
    return MlpXiNet(name=name, layers=layers,
                    head_W=uniform_fan_in(rng, d_out, cur),
                    head_b=Param(np.zeros(d_out)))


def clone_for_target(net: MlpXiNet, name: str) -> MlpXiNet:
    """Weight copy that shares the source's gate objects (no own thetas)."""
    layers = [MlpLayer(W=Param(layer.W.value.copy()),
                       b=Param(layer.b.value.copy()),
                       gate=layer.gate)
              for layer in net.layers]
    return MlpXiNet(name=name, layers=layers,
                    head_W=Param(net.head_W.value.copy()),
                    head_b=Param(net.head_b.value.copy()))


def mlp_params(net: MlpXiNet) -> list:
    ps = []
    for layer in net.layers:
        ps.extend([layer.W, layer.b])
    ps.extend([net.head_W, net.head_b])
    return ps


# ---------------------------------------------------------------------------
# forward / backward


@dataclass
class MlpLayerCache:
    x_in: np.ndarray
    pre: np.ndarray
    act: np.ndarray
    mult: np.ndarray


@dataclass
class MlpCache:
    layers: list = field(default_factory=list)
    head_in: np.ndarray = None


def mlp_forward(net: MlpXiNet, x: np.ndarray, mode: str, rng=None, xi=None):
    """Returns (head output, cache). mode 'train' samples gates, 'eval' scales."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    x = np.asarray(x, dtype=np.float64)
    expect = net.layers[0].W.value.shape[1] if net.layers else net.head_W.value.shape[1]
    if x.ndim != 2 or x.shape[1] != expect:
        raise DimensionError(f"{net.name}: input {x.shape} vs width {expect}")
    cache = MlpCache()
    h = x
    for l, layer in enumerate(net.layers):
        pre = affine_forward(layer.W.value, layer.b.value, h)
        act = activation(pre)
        if layer.gate is None:
            mult = None
            h_next = act
        else:
            if xi is not None:
                mult = np.asarray(xi[l], dtype=np.float64)
            elif mode == "train":
                mult = sample(layer.gate, rng)
            else:
                mult = effective_theta(layer.gate)
            h_next = act * mult
        cache.layers.append(MlpLayerCache(x_in=h, pre=pre, act=act, mult=mult))
        h = h_next
    out = affine_forward(net.head_W.value, net.head_b.value, h)
    cache.head_in = h
    return out, cache


def mlp_backward(net: MlpXiNet, cache: MlpCache, dout: np.ndarray,
                 with_params: bool = True):
    """Returns (dx, [d loss / d xi_l]). Accumulates param grads when asked."""
    dh, dW_head, db_head = affine_backward(dout, cache.head_in, net.head_W.value)
    if with_params:
        net.head_W.grad += dW_head
        net.head_b.grad += db_head
    dxi = [None] * len(net.layers)
    for l in range(len(net.layers) - 1, -1, -1):
        layer, lc = net.layers[l], cache.layers[l]
        if lc.mult is None:
            dact = dh
        else:
            dxi[l] = (dh * lc.act).sum(axis=0)
            dact = dh * lc.mult
        dpre = dact * activation_grad(lc.pre)
        dh, dW, db = affine_backward(dpre, lc.x_in, layer.W.value)
        if with_params:
            layer.W.grad += dW
            layer.b.grad += db
    return dh, dxi


# ---------------------------------------------------------------------------
# policy distribution


@dataclass
class GaussianPolicyOutput:
    mean: np.ndarray
    log_std: np.ndarray
    presquash: np.ndarray
    action: np.ndarray


def policy_heads(out: np.ndarray, d_a: int):
    mean = out[:, :d_a]
    log_std = np.clip(out[:, d_a:], LOG_STD_MIN, LOG_STD_MAX)
    return mean, log_std


def act(policy: MlpXiNet, z_o: np.ndarray, mode: str, rng=None) -> GaussianPolicyOutput:
    """Select actions from features; the policy net itself runs in eval mode.

    mode 'sample' draws from the squashed Gaussian, 'mean' squashes the mean.
    """
    d_a = policy.head_W.value.shape[0] // 2
    out, _ = mlp_forward(policy, z_o, "eval")
    mean, log_std = policy_heads(out, d_a)
    if mode == "sample":
        u = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
    elif mode == "mean":
        u = mean
    else:
        raise ValueError(f"mode must be 'sample' or 'mean', got {mode!r}")
    return GaussianPolicyOutput(mean=mean, log_std=log_std, presquash=u,
                                action=np.tanh(u))


def log_prob(mean: np.ndarray, log_std: np.ndarray, presquash: np.ndarray) -> np.ndarray:
    """Log density of the squashed Gaussian at tanh(presquash), per sample."""
    std = np.exp(log_std)
    d = (presquash - mean) / std
    gauss = (-log_std - 0.5 * np.log(2.0 * np.pi) - 0.5 * d * d).sum(axis=1)
    squash = np.log(1.0 - np.tanh(presquash) ** 2 + SQUASH_EPS).sum(axis=1)
    return gauss - squash


# ---------------------------------------------------------------------------
# losses / updates


def weight_penalty(net: MlpXiNet, lam: float) -> float:
    if not lam:
        return 0.0
    total = 0.0
    for p in mlp_params(net):
        total += (p.value ** 2).sum()
    return float(0.5 * lam * total)


def add_weight_penalty_grads(net: MlpXiNet, lam: float) -> None:
    if not lam:
        return
    for p in mlp_params(net):
        p.grad += lam * p.value


def _theta_grads(net: MlpXiNet, dxi, shape, rl_shape) -> list:
    if any(layer.gate is None for layer in net.layers):
        return [None] * len(net.layers)
    lg = complexity.log_gamma_x_vector(shape, rl_shape)
    return [theta_grad(GateGradients(dxi[l], np.full(net.layers[l].width, lg[l])))
            for l in range(len(net.layers))]


def _rl_shape(shape: complexity.NetShape, name: str) -> complexity.RlNetShape:
    for r in shape.rl_nets:
        if r.name == name:
            return r
    raise KeyError(f"net {name!r} missing from shape")


@dataclass
class CriticUpdateResult:
    q1_loss: float
    q2_loss: float
    theta_grads_q1: list
    theta_grads_q2: list
    target: np.ndarray


def update_critics(q1: MlpXiNet, q2: MlpXiNet, v_target: MlpXiNet,
                   z_oa: np.ndarray, z_o_next: np.ndarray, reward: np.ndarray,
                   done_mask: np.ndarray, cfg: SacConfig, lam: float,
                   nu_q: float, shape: complexity.NetShape, rng=None,
                   xi_q1=None, xi_q2=None) -> CriticUpdateResult:
    """Bellman regression for both Q nets against the target value net.

    Each Q runs with its own sampled gates; the target net runs in eval mode.
    Gradients accumulate into the Q params, theta gradients are returned.
    """
    batch = z_oa.shape[0]
    v_next, _ = mlp_forward(v_target, z_o_next, "eval")
    y = reward + cfg.discount * (1.0 - done_mask) * v_next[:, 0]

    losses = []
    tgs = []
    for q, xi in ((q1, xi_q1), (q2, xi_q2)):
        out, cache = mlp_forward(q, z_oa, "train", rng, xi)
        diff = out[:, 0] - y
        c_q = complexity.c_rl_net(shape, _rl_shape(shape, q.name))
        loss = float(0.5 * (diff * diff).mean()) + weight_penalty(q, lam) \
            + nu_q * c_q
        dout = (diff / batch)[:, None]
        _, dxi = mlp_backward(q, cache, dout)
        add_weight_penalty_grads(q, lam)
        losses.append(loss)
        tgs.append(_theta_grads(q, dxi, shape, _rl_shape(shape, q.name)))
    return CriticUpdateResult(q1_loss=losses[0], q2_loss=losses[1],
                              theta_grads_q1=tgs[0], theta_grads_q2=tgs[1],
                              target=y)


@dataclass
class PolicyValueUpdateResult:
    policy_loss: float
    value_loss: float
    theta_grads_pi: list
    theta_grads_v: list
    mean_log_prob: float
    mean_q: float


def update_policy_and_value(pi: MlpXiNet, v: MlpXiNet, q1: MlpXiNet,
                            q2: MlpXiNet, ofe: OfeXiNet, z_o: np.ndarray,
                            cfg: SacConfig, lam: float, nu_pi: float,
                            nu_v: float, shape: complexity.NetShape,
                            rng=None, xi_pi=None, xi_v=None, eps=None
                            ) -> PolicyValueUpdateResult:
    """Reparameterized policy step and value regression on shared fresh actions.

    The policy runs with sampled gates; fresh actions flow through the eval-
    mode action branch into both eval-mode Q nets, and the resulting gradient
    is pushed back through tanh into the policy heads. The value net regresses
    onto min(Q) - alpha * log pi with that target held constant.
    """
    batch = z_o.shape[0]
    alpha = cfg.entropy_alpha
    d_a = pi.head_W.value.shape[0] // 2

    out, cache_pi = mlp_forward(pi, z_o, "train", rng, xi_pi)
    mean, log_std = policy_heads(out, d_a)
    std = np.exp(log_std)
    if eps is None:
        eps = rng.standard_normal(mean.shape)
    u = mean + std * eps
    a_new = np.tanh(u)
    logp = log_prob(mean, log_std, u)

    z_oa_new = None
    if ofe is not None:
        z_oa_new, cache_oa = phi_oa_forward(ofe, z_o, a_new, "eval")
        q_in = z_oa_new
    else:
        q_in = np.concatenate([z_o, a_new], axis=1)
    q1_out, q1_cache = mlp_forward(q1, q_in, "eval")
    q2_out, q2_cache = mlp_forward(q2, q_in, "eval")
    q_min = np.minimum(q1_out[:, 0], q2_out[:, 0])

    pi_shape = _rl_shape(shape, pi.name)
    c_pi = complexity.c_rl_net(shape, pi_shape)
    policy_loss = float((alpha * logp - q_min).mean()) \
        + weight_penalty(pi, lam) + nu_pi * c_pi

    # gradient of -mean(q_min) through the eval nets into the actions
    d_qmin = np.full(batch, -1.0 / batch)
    pick_q1 = (q1_out[:, 0] <= q2_out[:, 0]).astype(np.float64)
    dq1 = (d_qmin * pick_q1)[:, None]
    dq2 = (d_qmin * (1.0 - pick_q1))[:, None]
    dq_in, _ = mlp_backward(q1, q1_cache, dq1, with_params=False)
    dq_in2, _ = mlp_backward(q2, q2_cache, dq2, with_params=False)
    dq_in = dq_in + dq_in2
    if ofe is not None:
        dz0_oa, _ = phi_backward(ofe.blocks_oa, cache_oa, dq_in,
                                 with_params=False)
        da = dz0_oa[:, z_o_dim(ofe):]
    else:
        da = dq_in[:, z_o.shape[1]:]

    # log-prob pieces (d = eps by construction)
    dvec = (u - mean) / std
    t = np.tanh(u)
    dlogp = alpha / batch
    du = dlogp * (-dvec / std + 2.0 * t * (1.0 - t * t) / (1.0 - t * t + SQUASH_EPS))
    du += da * (1.0 - t * t)
    dmean = dlogp * (dvec / std) + du
    dlog_std = dlogp * (dvec * dvec - 1.0) + du * (u - mean)
    raw_log_std = out[:, d_a:]
    dlog_std *= (raw_log_std > LOG_STD_MIN) & (raw_log_std < LOG_STD_MAX)
    dout = np.concatenate([dmean, dlog_std], axis=1)
    _, dxi_pi = mlp_backward(pi, cache_pi, dout)
    add_weight_penalty_grads(pi, lam)
    tg_pi = _theta_grads(pi, dxi_pi, shape, pi_shape)

    # value regression onto the detached soft target
    v_shape = _rl_shape(shape, v.name)
    v_target_val = q_min - alpha * logp
    v_out, v_cache = mlp_forward(v, z_o, "train", rng, xi_v)
    v_diff = v_out[:, 0] - v_target_val
    value_loss = float(0.5 * (v_diff * v_diff).mean()) \
        + weight_penalty(v, lam) + nu_v * complexity.c_rl_net(shape, v_shape)
    _, dxi_v = mlp_backward(v, v_cache, (v_diff / batch)[:, None])
    add_weight_penalty_grads(v, lam)
    tg_v = _theta_grads(v, dxi_v, shape, v_shape)

    return PolicyValueUpdateResult(
        policy_loss=policy_loss, value_loss=value_loss,
        theta_grads_pi=tg_pi, theta_grads_v=tg_v,
        mean_log_prob=float(logp.mean()), mean_q=float(q_min.mean()))


def soft_update(target: MlpXiNet, live: MlpXiNet, tau: float) -> None:
    """Polyak-average live weights into the target copy."""
    for pt, pl in zip(mlp_params(target), mlp_params(live)):
        pt.value *= 1.0 - tau
        pt.value += tau * pl.value


# ---------------------------------------------------------------------------
# structural pruning


def prune_mlp_unit(net: MlpXiNet, layer: int, unit: int, theta_tol: float,
                   tied=()) -> None:
    """Remove one hidden unit from a gated MLP (and tied weight copies).

    Tied nets share the pruned net's gate objects, so only their weight
    arrays are cut.
    """
    if not 0 <= layer < len(net.layers):
        raise IndexError(f"layer {layer} out of range")
    lay = net.layers[layer]
    if not 0 <= unit < lay.width:
        raise IndexError(f"unit {unit} out of range for width {lay.width}")
    if lay.gate is not None and not lay.gate.theta[unit] < theta_tol:
        raise ValueError(
            f"refusing to prune unit {unit} of {net.name}[{layer}]: "
            f"theta={lay.gate.theta[unit]:.4f} >= tol={theta_tol}")
    if lay.gate is not None:
        remove_units(lay.gate, unit)
    for tgt in (net,) + tuple(tied):
        tlay = tgt.layers[layer]
        for p, axis in ((tlay.W, 0), (tlay.b, 0)):
            p.value = np.delete(p.value, unit, axis=axis)
            p.grad = np.delete(p.grad, unit, axis=axis)
            p.adam_m = np.delete(p.adam_m, unit, axis=axis)
            p.adam_v = np.delete(p.adam_v, unit, axis=axis)
        nxt = tgt.layers[layer + 1].W if layer + 1 < len(tgt.layers) else tgt.head_W
        nxt.value = np.delete(nxt.value, unit, axis=1)
        nxt.grad = np.delete(nxt.grad, unit, axis=1)
        nxt.adam_m = np.delete(nxt.adam_m, unit, axis=1)
        nxt.adam_v = np.delete(nxt.adam_v, unit, axis=1)
