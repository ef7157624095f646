"""Joint training and structured pruning of gated RL networks.

The library trains a soft actor-critic agent on top of a densely connected
feature extractor whose units carry Bernoulli gates. Expected inference cost
has a closed form in the gate probabilities, which yields per-unit shrinkage
pressures that are traded off against the task losses during training; units
whose gate probability collapses get removed from the weight matrices
outright.
"""

from .core import (Param, adam_step, affine_backward, affine_forward,
                   bn_backward, bn_forward, finite_diff_check, make_bn)
from .gates import (GateVector, apply_theta_step, make_gate, prunable_indices,
                    round_and_freeze)
from .complexity import (ComplexitySnapshot, NetShape, build_shape,
                         c_ofe_total, c_phi_o, c_phi_oa, c_pred, c_rl_net,
                         flop_oracle, gamma_match_report, log_gamma_o,
                         log_gamma_oa, log_gamma_x, make_snapshot,
                         param_count)
from .ofenet import (OfeXiNet, aux_loss_and_grads, build_ofe, phi_o_forward,
                     phi_oa_forward, predict_next, prune_unit)
from .sac import (MlpXiNet, SacConfig, act, build_mlp, clone_for_target,
                  log_prob, mlp_forward, prune_mlp_unit, soft_update,
                  update_critics, update_policy_and_value)
from .envs import ENV_NAMES, PendulumEnv, PointMassEnv, make_env
from .trainer import (Arch, ConfigError, Hyper, MetricsRow, ReplayBuffer,
                      RunConfig, Schedule, Trainer)
from .report import (CheckpointError, load_checkpoint, read_metrics,
                     save_checkpoint, write_architecture_report,
                     write_metrics)

__version__ = "0.1.0"
