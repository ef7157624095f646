"""Four-part training loop: collect, extractor update, agent update, prune.

Each environment step appends one transition (part I, all networks in eval
mode), then draws one minibatch for the extractor regression (part II) and a
fresh minibatch for the agent updates (part III) so the agent always sees
features from post-update extractor weights. Every prune_every steps gates
below theta_tol are removed structurally (part IV). Gate probabilities are
frozen at 1 for a warmup prefix of training and snapped to {0, 1} for the
final stretch.

Determinism contract: a (config, seed) pair fully determines every number
this module produces. Randomness is split into named streams (weight init,
env, gate sampling, minibatch draws, action noise, fill actions) so that
structural changes in one consumer never shift another stream.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, asdict

import numpy as np

from . import complexity, envs, gates, ofenet, sac
from .core import Param, adam_step


class ConfigError(ValueError):
    """Raised when a RunConfig violates a documented constraint."""


# ---------------------------------------------------------------------------
# configuration


@dataclass
class Schedule:
    total_steps: int
    theta_freeze_steps: int
    random_fill_steps: int
    ofe_pretrain_updates: int
    eval_every: int
    prune_every: int = 1000
    final_round_fraction: float = 0.2

    @classmethod
    def scaled(cls, total_steps: int) -> "Schedule":
        """Default schedule: 20% freeze, 1% random fill, eval every 2%."""
        return cls(
            total_steps=total_steps,
            theta_freeze_steps=total_steps // 5,
            random_fill_steps=max(total_steps // 100, 1),
            ofe_pretrain_updates=max(total_steps // 100, 1),
            eval_every=max(total_steps // 50, 1),
            prune_every=1000,
        )

    @property
    def round_start(self) -> int:
        return self.total_steps - int(self.final_round_fraction * self.total_steps)

    def validate(self) -> None:
        if self.total_steps < 0:
            raise ConfigError("total_steps must be nonnegative")
        if not 0.0 <= self.final_round_fraction < 1.0:
            raise ConfigError("final_round_fraction must lie in [0, 1)")
        if self.eval_every < 1 or self.prune_every < 1:
            raise ConfigError("eval_every and prune_every must be positive")
        # freeze_steps >= total_steps means "never unfreeze" (reference runs)
        if self.theta_freeze_steps < self.total_steps \
                and self.theta_freeze_steps >= self.round_start:
            raise ConfigError(
                "theta_freeze_steps + final_round_fraction * total_steps "
                "must stay below total_steps")


@dataclass
class Hyper:
    lam_ofe: float = 1e-6
    lam_rl: float = 1e-9
    nu_ofe: float = 1e-5
    nu_pi: float = 5e-6
    nu_v: float = 5e-6
    nu_q: float = 4e-4
    rho: float = 0.5
    theta_tol: float = 0.1
    theta_lr: float = 1e-2

    def validate(self) -> None:
        for name in ("lam_ofe", "lam_rl", "nu_ofe", "nu_pi", "nu_v", "nu_q"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"{name} must be nonnegative")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError("rho must lie in [0, 1]")
        if not 0.0 < self.theta_tol < 0.5:
            raise ConfigError("theta_tol must lie in (0, 0.5)")
        if self.theta_lr < 0.0:
            raise ConfigError("theta_lr must be nonnegative")


@dataclass
class Arch:
    units_o: tuple = (16, 16)
    units_oa: tuple = (16, 16)
    hidden: tuple = (48, 48)

    def validate(self) -> None:
        for name in ("units_o", "units_oa", "hidden"):
            widths = getattr(self, name)
            if not widths or any(int(w) < 1 for w in widths):
                raise ConfigError(f"{name} needs at least one positive width")


@dataclass
class RunConfig:
    env: str = "pendulum"
    seed: int = 0
    schedule: Schedule = None
    sac: sac.SacConfig = field(default_factory=sac.SacConfig)
    hyper: Hyper = field(default_factory=Hyper)
    arch: Arch = field(default_factory=Arch)
    baseline_deploy: int = None
    baseline_train: int = None
    gated: bool = True
    eval_episodes: int = 10
    out_dir: str = None

    def __post_init__(self):
        if self.schedule is None:
            self.schedule = Schedule.scaled(30_000)

    def validate(self) -> None:
        if self.env not in envs.ENV_NAMES:
            raise ConfigError(f"env must be one of {envs.ENV_NAMES}")
        self.schedule.validate()
        self.hyper.validate()
        self.arch.validate()
        if self.sac.batch_size < 2:
            raise ConfigError("batch_size must be at least 2")
        if self.eval_episodes < 1:
            raise ConfigError("eval_episodes must be positive")


# ---------------------------------------------------------------------------
# replay buffer


class ReplayBuffer:
    """Flat ring buffer of transitions with uniform sampling."""

    def __init__(self, capacity: int, d_o: int, d_a: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, d_o))
        self.act = np.zeros((capacity, d_a))
        self.rew = np.zeros(capacity)
        self.nxt = np.zeros((capacity, d_o))
        self.done = np.zeros(capacity)
        self.size = 0
        self.cursor = 0

    def __len__(self) -> int:
        return self.size

    def add(self, o, a, r, o_next, done) -> None:
        i = self.cursor
        self.obs[i] = o
        self.act[i] = a
        self.rew[i] = r
        self.nxt[i] = o_next
        self.done[i] = done
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, n: int):
        idx = rng.integers(0, self.size, size=n)
        return (self.obs[idx], self.act[idx], self.rew[idx], self.nxt[idx],
                self.done[idx])


# ---------------------------------------------------------------------------
# metrics


@dataclass
class MetricsRow:
    step: int
    eval_return: float
    l_aux: float
    c_ofe: float
    c_pi: float
    c_v: float
    c_q1: float
    c_q2: float
    params_deploy: int
    params_train: int
    dr: float
    tr: float
    theta_binary_fraction: float
    units_per_layer: str


@dataclass
class RunArtifacts:
    config: RunConfig
    metrics: list
    snapshots: list
    trainer: "Trainer"


# ---------------------------------------------------------------------------
# trainer


class Trainer:
    def __init__(self, config: RunConfig):
        config.validate()
        self.config = config
        self.h = config.hyper
        self.schedule = config.schedule

        ss = np.random.SeedSequence(config.seed)
        (s_init, s_env, s_eval, s_gate, s_batch, s_act, s_fill) = ss.spawn(7)
        self.rng_init = np.random.default_rng(s_init)
        self.rng_gate = np.random.default_rng(s_gate)
        self.rng_batch = np.random.default_rng(s_batch)
        self.rng_act = np.random.default_rng(s_act)
        self.rng_fill = np.random.default_rng(s_fill)
        self.env_seed = int(s_env.generate_state(1)[0])
        self.eval_seed = int(s_eval.generate_state(1)[0])

        self.env = envs.make_env(config.env)
        spec = self.env.spec
        self.d_o, self.d_a = spec.d_o, spec.d_a

        gated = config.gated
        self.ofe = ofenet.build_ofe(self.rng_init, self.d_o, self.d_a,
                                    config.arch.units_o, config.arch.units_oa,
                                    gated=gated)
        dim_zo = ofenet.z_o_dim(self.ofe)
        dim_zoa = ofenet.z_oa_dim(self.ofe)
        hidden = config.arch.hidden
        self.pi = sac.build_mlp(self.rng_init, dim_zo, hidden, 2 * self.d_a,
                                "pi", gated)
        self.v = sac.build_mlp(self.rng_init, dim_zo, hidden, 1, "v", gated)
        self.q1 = sac.build_mlp(self.rng_init, dim_zoa, hidden, 1, "q1", gated)
        self.q2 = sac.build_mlp(self.rng_init, dim_zoa, hidden, 1, "q2", gated)
        self.v_target = sac.clone_for_target(self.v, "v_target")
        if gated:
            # thetas stay pinned at 1 until the schedule unfreezes them
            for g in self.all_gates():
                g.frozen[:] = True

        self.buffer = ReplayBuffer(max(config.schedule.total_steps, 1),
                                   self.d_o, self.d_a)
        self.step = 0
        self.obs = self.env.reset(seed=self.env_seed)
        self.metrics = []
        self.snapshots = []
        self.last_eval_return = None
        self.last_aux = None
        self._pretrained = False

        self.baseline_deploy = config.baseline_deploy or self.param_count("deploy")
        self.baseline_train = config.baseline_train or self.param_count("train")

    # -- model plumbing ----------------------------------------------------

    def models(self) -> dict:
        return {"ofe": self.ofe, "pi": self.pi, "v": self.v,
                "q1": self.q1, "q2": self.q2}

    def param_count(self, group: str) -> int:
        return complexity.param_count(self.models(), group)

    def shape(self) -> complexity.NetShape:
        rl = {"pi": (self.pi, "z_o"), "v": (self.v, "z_o"),
              "q1": (self.q1, "z_oa"), "q2": (self.q2, "z_oa")}
        nus = {"pi": self.h.nu_pi, "v": self.h.nu_v,
               "q1": self.h.nu_q, "q2": self.h.nu_q}
        return complexity.build_shape(self.ofe, rl, self.h.rho, self.h.nu_ofe,
                                      nus)

    def current_snapshot(self) -> complexity.ComplexitySnapshot:
        return complexity.make_snapshot(self.models(), self.shape(),
                                        self.baseline_deploy,
                                        self.baseline_train)

    def all_gates(self) -> list:
        gs = []
        if self.config.gated:
            for block in self.ofe.blocks_o + self.ofe.blocks_oa:
                gs.append(block.gate)
            for net in (self.pi, self.v, self.q1, self.q2):
                for layer in net.layers:
                    gs.append(layer.gate)
        return gs

    def theta_binary_fraction(self) -> float:
        total, binary = 0, 0
        for g in self.all_gates():
            total += g.width
            binary += int(np.sum((g.theta == 0.0) | (g.theta == 1.0)))
        return binary / total if total else 1.0

    def _units_summary(self) -> str:
        parts = [
            "o=" + ",".join(str(b.width) for b in self.ofe.blocks_o),
            "oa=" + ",".join(str(b.width) for b in self.ofe.blocks_oa),
        ]
        for net in (self.pi, self.v, self.q1, self.q2):
            parts.append(net.name + "=" +
                         ",".join(str(l.width) for l in net.layers))
        return ";".join(parts)

    # -- environment interaction -------------------------------------------

    def _scale_action(self, a: np.ndarray) -> np.ndarray:
        spec = self.env.spec
        return spec.action_low + (a + 1.0) * 0.5 * (spec.action_high - spec.action_low)

    def _select_action(self) -> np.ndarray:
        if self.step < self.schedule.random_fill_steps:
            return self.rng_fill.uniform(-1.0, 1.0, size=self.d_a)
        z_o, _ = ofenet.phi_o_forward(self.ofe, self.obs[None, :], "eval")
        out = sac.act(self.pi, z_o, "sample", self.rng_act)
        return out.action[0]

    # -- updates -------------------------------------------------------------

    def _apply_adam(self, params: list) -> None:
        lr = self.config.sac.lr
        for p in params:
            adam_step(p, lr)

    def _ofe_update(self) -> None:
        o, a, _, o_next, _ = self.buffer.sample(self.rng_batch,
                                                self.config.sac.batch_size)
        shape = self.shape()
        aux = ofenet.aux_loss_and_grads(
            self.ofe, o, a, o_next, self.h.lam_ofe, self.h.nu_ofe, self.h.rho,
            shape.rl_nets, rng=self.rng_gate)
        self._apply_adam(ofenet.ofe_params(self.ofe))
        if self.config.gated:
            for l, block in enumerate(self.ofe.blocks_o):
                gates.apply_theta_step(block.gate, aux.theta_grads_o[l],
                                       self.h.theta_lr)
            for l, block in enumerate(self.ofe.blocks_oa):
                gates.apply_theta_step(block.gate, aux.theta_grads_oa[l],
                                       self.h.theta_lr)
        self.last_aux = aux

    def _rl_update(self) -> None:
        cfg = self.config.sac
        o, a, r, o_next, done = self.buffer.sample(self.rng_batch,
                                                   cfg.batch_size)
        z_o, _ = ofenet.phi_o_forward(self.ofe, o, "eval")
        z_oa, _ = ofenet.phi_oa_forward(self.ofe, z_o, a, "eval")
        z_o_next, _ = ofenet.phi_o_forward(self.ofe, o_next, "eval")
        shape = self.shape()

        cr = sac.update_critics(self.q1, self.q2, self.v_target, z_oa,
                                z_o_next, r, done, cfg, self.h.lam_rl,
                                self.h.nu_q, shape, rng=self.rng_gate)
        self._apply_adam(sac.mlp_params(self.q1))
        self._apply_adam(sac.mlp_params(self.q2))
        if self.config.gated:
            for net, tg in ((self.q1, cr.theta_grads_q1),
                            (self.q2, cr.theta_grads_q2)):
                for l, layer in enumerate(net.layers):
                    gates.apply_theta_step(layer.gate, tg[l], self.h.theta_lr)

        pv = sac.update_policy_and_value(
            self.pi, self.v, self.q1, self.q2, self.ofe, z_o, cfg,
            self.h.lam_rl, self.h.nu_pi, self.h.nu_v, shape,
            rng=self.rng_gate)
        self._apply_adam(sac.mlp_params(self.pi))
        self._apply_adam(sac.mlp_params(self.v))
        if self.config.gated:
            for net, tg in ((self.pi, pv.theta_grads_pi),
                            (self.v, pv.theta_grads_v)):
                for l, layer in enumerate(net.layers):
                    gates.apply_theta_step(layer.gate, tg[l], self.h.theta_lr)

        sac.soft_update(self.v_target, self.v, cfg.polyak_tau)

    # -- schedule ------------------------------------------------------------

    def _unfreeze_gates(self) -> None:
        for g in self.all_gates():
            g.frozen[:] = False

    def _round_and_freeze_gates(self) -> None:
        for g in self.all_gates():
            gates.round_and_freeze(g)

    def prune_sweep(self) -> int:
        """Remove every unit whose theta sits below theta_tol. Returns count."""
        if not self.config.gated:
            return 0
        tol = self.h.theta_tol
        removed = 0
        zo_consumers = (self.pi, self.v, self.v_target)
        zoa_consumers = (self.q1, self.q2)
        for which, blocks in (("o", self.ofe.blocks_o),
                              ("oa", self.ofe.blocks_oa)):
            for l, block in enumerate(blocks):
                idx = gates.prunable_indices(block.gate, tol)
                for unit in sorted(idx, reverse=True):
                    ofenet.prune_unit(self.ofe, which, l, int(unit), tol,
                                      zo_consumers, zoa_consumers)
                    removed += 1
        for net, tied in ((self.pi, ()), (self.v, (self.v_target,)),
                          (self.q1, ()), (self.q2, ())):
            for l, layer in enumerate(net.layers):
                idx = gates.prunable_indices(layer.gate, tol)
                for unit in sorted(idx, reverse=True):
                    sac.prune_mlp_unit(net, l, int(unit), tol, tied)
                    removed += 1
        if removed:
            self.snapshots.append(self.current_snapshot())
            self._emit_metrics()
        return removed

    # -- evaluation / metrics -------------------------------------------------

    def evaluate(self, n_episodes: int = None) -> float:
        """Mean return over fresh eval episodes with mean-mode actions."""
        n = n_episodes or self.config.eval_episodes
        env = envs.make_env(self.config.env)
        returns = []
        obs = env.reset(seed=self.eval_seed)
        for _ in range(n):
            total = 0.0
            while True:
                z_o, _ = ofenet.phi_o_forward(self.ofe, obs[None, :], "eval")
                out = sac.act(self.pi, z_o, "mean")
                result = env.step(self._scale_action(out.action[0]))
                total += result.reward
                obs = result.next_obs
                if result.done:
                    obs = env.reset()
                    break
            returns.append(total)
        return float(np.mean(returns))

    def _emit_metrics(self) -> None:
        if self.last_eval_return is None:
            self.last_eval_return = self.evaluate()
        snap = self.current_snapshot()
        self.metrics.append(MetricsRow(
            step=self.step,
            eval_return=self.last_eval_return,
            l_aux=self.last_aux.loss if self.last_aux else math.nan,
            c_ofe=snap.c_ofe,
            c_pi=snap.c_x["pi"],
            c_v=snap.c_x["v"],
            c_q1=snap.c_x["q1"],
            c_q2=snap.c_x["q2"],
            params_deploy=snap.params_deploy,
            params_train=snap.params_train,
            dr=snap.dR,
            tr=snap.tR,
            theta_binary_fraction=self.theta_binary_fraction(),
            units_per_layer=self._units_summary(),
        ))

    # -- main loop -------------------------------------------------------------

    def train_step(self) -> None:
        """One environment step running parts I-III plus schedule events."""
        sched = self.schedule
        action = self._select_action()
        result = self.env.step(self._scale_action(action))
        # both toy tasks end only by step limit, so bootstrapping never cuts
        self.buffer.add(self.obs, action, result.reward, result.next_obs, 0.0)
        self.obs = self.env.reset() if result.done else result.next_obs

        if self.step >= sched.random_fill_steps:
            if not self._pretrained:
                for _ in range(sched.ofe_pretrain_updates):
                    self._ofe_update()
                self._pretrained = True
            if len(self.buffer) >= self.config.sac.batch_size:
                self._ofe_update()
                self._rl_update()

        self.step += 1
        if self.config.gated:
            if self.step == sched.theta_freeze_steps \
                    and self.step < sched.round_start:
                self._unfreeze_gates()
            if self.step == sched.round_start:
                self._round_and_freeze_gates()
        if self.step % sched.prune_every == 0:
            self.prune_sweep()
        if self.step % sched.eval_every == 0:
            self.last_eval_return = self.evaluate()
            self._emit_metrics()

    def run(self) -> RunArtifacts:
        """Execute the full schedule and return the collected artifacts."""
        self.snapshots.append(self.current_snapshot())
        for _ in range(self.schedule.total_steps):
            self.train_step()
        return RunArtifacts(config=self.config, metrics=self.metrics,
                            snapshots=self.snapshots, trainer=self)


# ---------------------------------------------------------------------------
# state serialization (consumed by the report module's checkpoints)


def _pack(a: np.ndarray) -> dict:
    # plain bytes rather than ndarray objects: pickled ndarrays drag along
    # dtype instances whose identity varies with history, which would break
    # bit-identical save -> load -> save round trips
    return {"shape": tuple(int(s) for s in a.shape), "dtype": str(a.dtype),
            "data": a.tobytes()}


def _unpack(state: dict) -> np.ndarray:
    arr = np.frombuffer(state["data"], dtype=state["dtype"])
    return arr.reshape(state["shape"]).copy()


def _param_state(p: Param) -> dict:
    return {"value": _pack(p.value), "adam_m": _pack(p.adam_m),
            "adam_v": _pack(p.adam_v), "step_count": p.step_count}


def _load_param(state: dict) -> Param:
    return Param(_unpack(state["value"]), adam_m=_unpack(state["adam_m"]),
                 adam_v=_unpack(state["adam_v"]),
                 step_count=state["step_count"])


def _gate_state(g) -> dict:
    if g is None:
        return None
    return {"theta": _pack(g.theta), "frozen": _pack(g.frozen),
            "last_sample": _pack(g.last_sample), "layer_id": g.layer_id}


def _load_gate(state: dict):
    if state is None:
        return None
    return gates.GateVector(theta=_unpack(state["theta"]),
                            frozen=_unpack(state["frozen"]),
                            last_sample=_unpack(state["last_sample"]),
                            layer_id=state["layer_id"])


def _bn_state(bn) -> dict:
    return {"scale": _param_state(bn.scale), "shift": _param_state(bn.shift),
            "running_mean": _pack(bn.running_mean),
            "running_var": _pack(bn.running_var),
            "momentum": bn.momentum, "epsilon": bn.epsilon}


def _load_bn(state: dict):
    from .core import BatchNormState
    return BatchNormState(scale=_load_param(state["scale"]),
                          shift=_load_param(state["shift"]),
                          running_mean=_unpack(state["running_mean"]),
                          running_var=_unpack(state["running_var"]),
                          momentum=state["momentum"],
                          epsilon=state["epsilon"])


def _block_state(b) -> dict:
    return {"W": _param_state(b.W), "b": _param_state(b.b),
            "V": _param_state(b.V), "bn": _bn_state(b.bn),
            "gate": _gate_state(b.gate)}


def _load_block(state: dict):
    return ofenet.DenseBlock(W=_load_param(state["W"]),
                             b=_load_param(state["b"]),
                             V=_load_param(state["V"]),
                             bn=_load_bn(state["bn"]),
                             gate=_load_gate(state["gate"]))


def _mlp_state(net) -> dict:
    return {"name": net.name,
            "layers": [{"W": _param_state(l.W), "b": _param_state(l.b),
                        "gate": _gate_state(l.gate)} for l in net.layers],
            "head_W": _param_state(net.head_W),
            "head_b": _param_state(net.head_b)}


def _load_mlp(state: dict):
    layers = [sac.MlpLayer(W=_load_param(ls["W"]), b=_load_param(ls["b"]),
                           gate=_load_gate(ls["gate"]))
              for ls in state["layers"]]
    # intern so the rebuilt state dict shares name objects with its own keys,
    # keeping re-saved checkpoints byte-identical
    return sac.MlpXiNet(name=sys.intern(str(state["name"])), layers=layers,
                        head_W=_load_param(state["head_W"]),
                        head_b=_load_param(state["head_b"]))


def config_to_dict(config: RunConfig) -> dict:
    d = asdict(config)
    d["arch"] = {k: list(v) for k, v in d["arch"].items()}
    return d


def config_from_dict(d: dict) -> RunConfig:
    return RunConfig(
        env=d["env"], seed=d["seed"],
        schedule=Schedule(**d["schedule"]),
        sac=sac.SacConfig(**d["sac"]),
        hyper=Hyper(**d["hyper"]),
        arch=Arch(**{k: tuple(v) for k, v in d["arch"].items()}),
        baseline_deploy=d["baseline_deploy"],
        baseline_train=d["baseline_train"],
        gated=d["gated"], eval_episodes=d["eval_episodes"],
        out_dir=d["out_dir"])


def trainer_state(t: Trainer) -> dict:
    """Everything needed to rebuild the trainer at its current step."""
    return {
        "config": config_to_dict(t.config),
        "step": t.step,
        "ofe": {
            "d_o": t.ofe.d_o, "d_a": t.ofe.d_a,
            "blocks_o": [_block_state(b) for b in t.ofe.blocks_o],
            "blocks_oa": [_block_state(b) for b in t.ofe.blocks_oa],
            "W_pred": _param_state(t.ofe.W_pred),
        },
        "nets": {name: _mlp_state(net) for name, net in
                 (("pi", t.pi), ("v", t.v), ("q1", t.q1), ("q2", t.q2))},
        "v_target": _mlp_state(t.v_target),
        "rng": {name: getattr(t, name).bit_generator.state for name in
                ("rng_gate", "rng_batch", "rng_act", "rng_fill")},
        "env_seed": t.env_seed,
        "eval_seed": t.eval_seed,
        "env": {
            "rng": t.env._rng.bit_generator.state,
            "state": _pack(np.asarray(t.env._state, dtype=np.float64)),
            "steps": t.env._steps,
        },
        "obs": _pack(np.asarray(t.obs, dtype=np.float64)),
        "buffer": {
            "cursor": t.buffer.cursor,
            "size": t.buffer.size,
            "obs": _pack(t.buffer.obs[:t.buffer.size]),
            "act": _pack(t.buffer.act[:t.buffer.size]),
            "rew": _pack(t.buffer.rew[:t.buffer.size]),
            "nxt": _pack(t.buffer.nxt[:t.buffer.size]),
            "done": _pack(t.buffer.done[:t.buffer.size]),
        },
        "baseline_deploy": t.baseline_deploy,
        "baseline_train": t.baseline_train,
        "last_eval_return": t.last_eval_return,
        "pretrained": t._pretrained,
    }


def trainer_from_state(state: dict) -> Trainer:
    """Rebuild a trainer (without replay contents) from a saved state."""
    t = Trainer(config_from_dict(state["config"]))
    ofe_state = state["ofe"]
    t.ofe = ofenet.OfeXiNet(
        d_o=ofe_state["d_o"], d_a=ofe_state["d_a"],
        blocks_o=[_load_block(b) for b in ofe_state["blocks_o"]],
        blocks_oa=[_load_block(b) for b in ofe_state["blocks_oa"]],
        W_pred=_load_param(ofe_state["W_pred"]))
    t.pi = _load_mlp(state["nets"]["pi"])
    t.v = _load_mlp(state["nets"]["v"])
    t.q1 = _load_mlp(state["nets"]["q1"])
    t.q2 = _load_mlp(state["nets"]["q2"])
    t.v_target = _load_mlp(state["v_target"])
    # the target shares the live value net's gates by construction
    for tl, vl in zip(t.v_target.layers, t.v.layers):
        tl.gate = vl.gate
    for name in ("rng_gate", "rng_batch", "rng_act", "rng_fill"):
        getattr(t, name).bit_generator.state = state["rng"][name]
    t.step = state["step"]
    t.env_seed = state["env_seed"]
    t.eval_seed = state["eval_seed"]
    t.env._rng.bit_generator.state = state["env"]["rng"]
    t.env._state = _unpack(state["env"]["state"])
    t.env._steps = state["env"]["steps"]
    t.obs = _unpack(state["obs"])
    buf = state["buffer"]
    t.buffer.cursor = buf["cursor"]
    t.buffer.size = buf["size"]
    n = buf["size"]
    t.buffer.obs[:n] = _unpack(buf["obs"])
    t.buffer.act[:n] = _unpack(buf["act"])
    t.buffer.rew[:n] = _unpack(buf["rew"])
    t.buffer.nxt[:n] = _unpack(buf["nxt"])
    t.buffer.done[:n] = _unpack(buf["done"])
    t.baseline_deploy = state["baseline_deploy"]
    t.baseline_train = state["baseline_train"]
    t.last_eval_return = state["last_eval_return"]
    t._pretrained = state["pretrained"]
    return t
