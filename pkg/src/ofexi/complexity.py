"""Expected complexity of gated networks as multilinear functions of theta.

Every cost below is affine in each layer's theta mass ``||theta_l||_1`` with
the other layers held fixed, which makes the per-layer regularization weights
log gamma exactly extractable: evaluate the total cost at mass 0 and mass 1
and take the difference. The module also provides the corresponding closed
forms, exact parameter counting of realized architectures, and an independent
brute-force FLOP oracle that walks networks unit by unit.

All functions here are pure and operate either on plain shape summaries
(NetShape) or duck-typed network objects (anything exposing blocks_o,
blocks_oa, W_pred, layers, head_W, head_b and per-layer gates).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import gates as gates_mod


@dataclass
class RlNetShape:
    """Theta-mass summary of one gated MLP consuming extractor features."""

    name: str
    takes: str                  # "z_o" or "z_oa"
    theta_sums: list
    d_out: int
    nu: float
    is_policy: bool = False

    def __post_init__(self):
        if self.takes not in ("z_o", "z_oa"):
            raise ValueError(f"takes must be 'z_o' or 'z_oa', got {self.takes!r}")
        self.theta_sums = [float(s) for s in self.theta_sums]


@dataclass
class NetShape:
    """Theta-mass summary of the full model set.

    theta_sums_o / theta_sums_oa hold ||theta_l||_1 per extractor layer;
    rl_nets lists the consumer networks, exactly one of which is the policy.
    """

    d_o: int
    d_a: int
    theta_sums_o: list
    theta_sums_oa: list
    rho: float
    nu_ofe: float
    rl_nets: list = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        if self.nu_ofe < 0.0:
            raise ValueError(f"nu_ofe must be nonnegative, got {self.nu_ofe}")
        self.theta_sums_o = [float(s) for s in self.theta_sums_o]
        self.theta_sums_oa = [float(s) for s in self.theta_sums_oa]

    def policy(self) -> RlNetShape:
        """The deployed consumer, or None when no nets are attached."""
        hits = [r for r in self.rl_nets if r.is_policy]
        if len(hits) > 1:
            raise ValueError(f"expected at most one policy net, got {len(hits)}")
        return hits[0] if hits else None


# ---------------------------------------------------------------------------
# closed-form expected costs


def c_phi_o(shape: NetShape) -> float:
    """Cost of the observation extractor.

    Per layer: (input width so far) * (1 + ||theta_l||) + 3 ||theta_l||, where
    the 1+ pays for the diagonal pass-through weights and the +3 for bias and
    batch-norm constants.
    """
    total = 0.0
    prefix = float(shape.d_o)
    for s in shape.theta_sums_o:
        total += prefix * (1.0 + s) + 3.0 * s
        prefix += s
    return total


def c_phi_oa(shape: NetShape) -> float:
    """Cost of the observation-action extractor (same per-layer convention)."""
    total = 0.0
    prefix = float(shape.d_o + sum(shape.theta_sums_o) + shape.d_a)
    for t in shape.theta_sums_oa:
        total += prefix * (1.0 + t) + 3.0 * t
        prefix += t
    return total


def c_pred(shape: NetShape) -> float:
    """Cost of the next-observation predictor head read off z_oa."""
    width = 1.0 + shape.d_o + shape.d_a + sum(shape.theta_sums_o) + sum(shape.theta_sums_oa)
    return width * shape.d_o


def d_input_x(shape: NetShape, takes: str) -> float:
    """Expected input dimension of a consumer network."""
    d = shape.d_o + sum(shape.theta_sums_o)
    if takes == "z_o":
        return float(d)
    if takes == "z_oa":
        return float(d + shape.d_a + sum(shape.theta_sums_oa))
    raise ValueError(f"takes must be 'z_o' or 'z_oa', got {takes!r}")


def c_x_ofe(shape: NetShape, theta_1_x_sum: float, takes: str) -> float:
    """First-stage cost of a consumer network: (1 + D_i^x) * ||theta_1^x||."""
    return (1.0 + d_input_x(shape, takes)) * float(theta_1_x_sum)


def c_rl_net(shape: NetShape, rl: RlNetShape) -> float:
    """Full cost of a gated feed-forward consumer network."""
    sums = rl.theta_sums
    total = c_x_ofe(shape, sums[0], rl.takes)
    for prev, cur in zip(sums[:-1], sums[1:]):
        total += (1.0 + prev) * cur
    total += (1.0 + sums[-1]) * rl.d_out
    return total


def c_ofe_total(shape: NetShape) -> float:
    """Deployment-weighted extractor cost.

    The observation extractor and the policy's first stage are always paid;
    the action branch, predictor and remaining consumers' first stages are
    discounted by rho (they matter only while learning continues).
    """
    pol = shape.policy()
    total = c_phi_o(shape)
    if pol is not None:
        total += c_x_ofe(shape, pol.theta_sums[0], pol.takes)
    rho_block = c_phi_oa(shape) + c_pred(shape)
    for r in shape.rl_nets:
        if not r.is_policy:
            rho_block += c_x_ofe(shape, r.theta_sums[0], r.takes)
    return total + shape.rho * rho_block


# ---------------------------------------------------------------------------
# automatic log gamma selection


def _with_o_sum(shape: NetShape, l: int, value: float) -> NetShape:
    sums = list(shape.theta_sums_o)
    sums[l] = value
    return replace(shape, theta_sums_o=sums)


def _with_oa_sum(shape: NetShape, l: int, value: float) -> NetShape:
    sums = list(shape.theta_sums_oa)
    sums[l] = value
    return replace(shape, theta_sums_oa=sums)


def log_gamma_o(shape: NetShape, l: int) -> float:
    """Regularization weight for observation-extractor layer l (0-based).

    Defined as minus the exact multilinear coefficient of ||theta_l^o||_1 in
    nu_ofe * C_OFE, so that the theta regularizer tracks the weighted cost up
    to an additive constant by construction.
    """
    c1 = c_ofe_total(_with_o_sum(shape, l, 1.0))
    c0 = c_ofe_total(_with_o_sum(shape, l, 0.0))
    return -shape.nu_ofe * (c1 - c0)


def log_gamma_oa(shape: NetShape, l: int) -> float:
    """Regularization weight for action-branch layer l (0-based)."""
    c1 = c_ofe_total(_with_oa_sum(shape, l, 1.0))
    c0 = c_ofe_total(_with_oa_sum(shape, l, 0.0))
    return -shape.nu_ofe * (c1 - c0)


def log_gamma_o_closed(shape: NetShape, l: int) -> float:
    """Published closed form for log gamma of observation layer l (0-based).

    Kept verbatim as a cross-check against the coefficient definition above;
    see gamma_match_report for the comparison.
    """
    nu, rho = shape.nu_ofe, shape.rho
    L_o = len(shape.theta_sums_o)
    L_oa = len(shape.theta_sums_oa)
    pol = shape.policy()
    others_zo = sum(r.theta_sums[0] for r in shape.rl_nets
                    if not r.is_policy and r.takes == "z_o")
    val = ((1.0 + rho) * shape.d_o
           + sum(shape.theta_sums_o[:l])
           + (L_o - (l + 1))
           + rho * L_oa
           + 3.0
           + (pol.theta_sums[0] if pol is not None else 0.0)
           + rho * others_zo)
    return -nu * val


def log_gamma_oa_closed(shape: NetShape, l: int) -> float:
    """Published closed form for log gamma of action-branch layer l (0-based)."""
    nu, rho = shape.nu_ofe, shape.rho
    L_oa = len(shape.theta_sums_oa)
    zoa_nets = sum(r.theta_sums[0] for r in shape.rl_nets if r.takes == "z_oa")
    val = (2.0 * shape.d_o + shape.d_a
           + sum(shape.theta_sums_o)
           + sum(shape.theta_sums_oa[:l])
           + (L_oa - (l + 1))
           + 3.0
           + zoa_nets)
    return -nu * rho * val


@dataclass
class GammaMatchRow:
    branch: str
    layer: int
    coefficient_value: float
    closed_form_value: float

    @property
    def deviation(self) -> float:
        return self.closed_form_value - self.coefficient_value


def gamma_match_report(shape: NetShape) -> list:
    """Compare coefficient-derived log gamma against the closed forms.

    The two agree whenever later-layer masses and non-policy consumer terms
    vanish; any systematic deviation is surfaced here rather than silently
    folded into training.
    """
    rows = []
    for l in range(len(shape.theta_sums_o)):
        rows.append(GammaMatchRow("o", l, log_gamma_o(shape, l),
                                  log_gamma_o_closed(shape, l)))
    for l in range(len(shape.theta_sums_oa)):
        rows.append(GammaMatchRow("oa", l, log_gamma_oa(shape, l),
                                  log_gamma_oa_closed(shape, l)))
    return rows


def log_gamma_x(shape: NetShape, rl: RlNetShape, l: int) -> float:
    """Regularization weight for hidden layer l (0-based) of a consumer net."""
    if rl.nu < 0.0:
        raise ValueError(f"nu must be nonnegative, got {rl.nu}")
    L = len(rl.theta_sums)
    if L == 1:
        # both boundary contributions apply to the only hidden layer
        return -rl.nu * (1.0 + d_input_x(shape, rl.takes) + rl.d_out)
    if l == 0:
        return -rl.nu * (1.0 + d_input_x(shape, rl.takes))
    if l == L - 1:
        return -rl.nu * (rl.d_out + 1.0 + rl.theta_sums[L - 2])
    return -rl.nu * (1.0 + rl.theta_sums[l - 1])


def log_gamma_x_vector(shape: NetShape, rl: RlNetShape) -> np.ndarray:
    return np.array([log_gamma_x(shape, rl, l) for l in range(len(rl.theta_sums))])


# ---------------------------------------------------------------------------
# shape extraction from live networks


def _gate_mass(gate) -> float:
    return float(gates_mod.effective_theta(gate).sum())


def _block_mass(block) -> float:
    if block.gate is None:
        return float(block.width)
    return _gate_mass(block.gate)


def ofe_theta_sums(ofe) -> tuple:
    return ([_block_mass(b) for b in ofe.blocks_o],
            [_block_mass(b) for b in ofe.blocks_oa])


def mlp_theta_sums(net) -> list:
    if not net.layers or net.layers[0].gate is None:
        return [float(layer.W.value.shape[0]) for layer in net.layers]
    return [_gate_mass(layer.gate) for layer in net.layers]


def build_shape(ofe, rl_nets: dict, rho: float, nu_ofe: float, nus: dict,
                policy_name: str = "pi") -> NetShape:
    """Summarize live networks into a NetShape.

    rl_nets maps name -> (net, takes); nus maps name -> nu_x. Gate-free
    reference networks contribute their full widths.
    """
    if ofe is not None:
        sums_o, sums_oa = ofe_theta_sums(ofe)
        d_o, d_a = ofe.d_o, ofe.d_a
    else:
        sums_o, sums_oa, d_o, d_a = [], [], 0, 0
    shapes = []
    for name, (net, takes) in rl_nets.items():
        shapes.append(RlNetShape(
            name=name, takes=takes, theta_sums=mlp_theta_sums(net),
            d_out=net.head_W.value.shape[0], nu=nus[name],
            is_policy=(name == policy_name)))
    return NetShape(d_o=d_o, d_a=d_a, theta_sums_o=sums_o,
                    theta_sums_oa=sums_oa, rho=rho, nu_ofe=nu_ofe,
                    rl_nets=shapes)


# ---------------------------------------------------------------------------
# exact parameter counting of realized architectures


def _count_block(block) -> int:
    n = block.W.value.size + block.b.value.size + block.V.value.size
    n += block.bn.scale.value.size + block.bn.shift.value.size
    return n


def _count_mlp(net) -> int:
    n = 0
    for layer in net.layers:
        n += layer.W.value.size + layer.b.value.size
    n += net.head_W.value.size + net.head_b.value.size
    return n


def param_count(models: dict, group: str) -> int:
    """Exact parameter count of the current (possibly pruned) architecture.

    group "deploy" counts the observation extractor and policy; "train"
    counts every learned model including the action branch, predictor head
    and all consumer networks. Target copies are never counted.
    """
    ofe = models.get("ofe")
    if group == "deploy":
        n = 0
        if ofe is not None:
            n += sum(_count_block(b) for b in ofe.blocks_o)
        n += _count_mlp(models["pi"])
        return n
    if group == "train":
        n = 0
        if ofe is not None:
            n += sum(_count_block(b) for b in ofe.blocks_o)
            n += sum(_count_block(b) for b in ofe.blocks_oa)
            n += ofe.W_pred.value.size
        for name in ("pi", "v", "q1", "q2"):
            if models.get(name) is not None:
                n += _count_mlp(models[name])
        return n
    raise ValueError(f"group must be 'deploy' or 'train', got {group!r}")


# ---------------------------------------------------------------------------
# brute-force FLOP oracle


def _active_units(gate) -> np.ndarray:
    th = gates_mod.effective_theta(gate)
    if not np.all(np.isin(th, (0.0, 1.0))):
        raise ValueError(f"gate {gate.layer_id}: FLOP oracle needs binary theta")
    return th > 0.5


def _oracle_dense_blocks(blocks, d_in: int) -> int:
    """Walk dense blocks unit by unit.

    Each active unit pays one multiply-accumulate per realized input plus 3
    (bias, two batch-norm constants); the diagonal pass-through pays one
    multiply per realized input.
    """
    total = 0
    width = d_in
    for block in blocks:
        active = _active_units(block.gate)
        for unit_is_on in active:
            if unit_is_on:
                total += width + 3
        total += width  # diagonal pass-through of everything seen so far
        width += int(active.sum())
    return total


def oracle_phi_o(ofe) -> int:
    return _oracle_dense_blocks(ofe.blocks_o, ofe.d_o)


def oracle_phi_oa(ofe) -> int:
    active_o = sum(int(_active_units(b.gate).sum()) for b in ofe.blocks_o)
    return _oracle_dense_blocks(ofe.blocks_oa, ofe.d_o + active_o + ofe.d_a)


def oracle_pred(ofe) -> int:
    active_o = sum(int(_active_units(b.gate).sum()) for b in ofe.blocks_o)
    active_oa = sum(int(_active_units(b.gate).sum()) for b in ofe.blocks_oa)
    width = ofe.d_o + active_o + ofe.d_a + active_oa
    return (1 + width) * ofe.d_o


def oracle_mlp(net, d_in: int) -> int:
    """Walk a gated MLP unit by unit: one MAC per active input plus bias."""
    total = 0
    width = d_in
    for layer in net.layers:
        active = _active_units(layer.gate)
        for unit_is_on in active:
            if unit_is_on:
                total += width + 1
        width = int(active.sum())
    total += net.head_W.value.shape[0] * (width + 1)
    return total


def flop_oracle(models: dict) -> int:
    """Total realized cost of the full model set under binary gates."""
    total = 0
    ofe = models.get("ofe")
    d_zo = None
    d_zoa = None
    if ofe is not None:
        total += oracle_phi_o(ofe) + oracle_phi_oa(ofe) + oracle_pred(ofe)
        active_o = sum(int(_active_units(b.gate).sum()) for b in ofe.blocks_o)
        active_oa = sum(int(_active_units(b.gate).sum()) for b in ofe.blocks_oa)
        d_zo = ofe.d_o + active_o
        d_zoa = d_zo + ofe.d_a + active_oa
    for name, takes in (("pi", "z_o"), ("v", "z_o"), ("q1", "z_oa"), ("q2", "z_oa")):
        net = models.get(name)
        if net is None:
            continue
        d_in = d_zo if takes == "z_o" else d_zoa
        if d_in is None:
            d_in = net.layers[0].W.value.shape[1]
        total += oracle_mlp(net, d_in)
    return total


# ---------------------------------------------------------------------------
# snapshots


@dataclass
class ComplexitySnapshot:
    c_o: float
    c_oa: float
    c_pred: float
    c_x: dict
    c_ofe: float
    log_gamma_o: list
    log_gamma_oa: list
    params_deploy: int
    params_train: int
    dR: float
    tR: float


def make_snapshot(models: dict, shape: NetShape, baseline_deploy: int,
                  baseline_train: int) -> ComplexitySnapshot:
    deploy = param_count(models, "deploy")
    train = param_count(models, "train")
    return ComplexitySnapshot(
        c_o=c_phi_o(shape),
        c_oa=c_phi_oa(shape),
        c_pred=c_pred(shape),
        c_x={r.name: c_rl_net(shape, r) for r in shape.rl_nets},
        c_ofe=c_ofe_total(shape),
        log_gamma_o=[log_gamma_o(shape, l) for l in range(len(shape.theta_sums_o))],
        log_gamma_oa=[log_gamma_oa(shape, l) for l in range(len(shape.theta_sums_oa))],
        params_deploy=deploy,
        params_train=train,
        dR=deploy / max(baseline_deploy, 1),
        tR=train / max(baseline_train, 1),
    )
