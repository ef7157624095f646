"""Bernoulli unit gates with straight-through training.

Each gated layer owns a GateVector: per-unit inclusion probabilities theta,
trained by projected gradient descent on [0, 1]. Stochastic forwards multiply
unit outputs by a sampled binary vector, deterministic forwards scale by theta
itself. Frozen entries behave as constants equal to round(theta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionError, as_f64


@dataclass
class GateVector:
    theta: np.ndarray
    frozen: np.ndarray
    last_sample: np.ndarray
    layer_id: str

    @property
    def width(self) -> int:
        return self.theta.shape[0]


@dataclass
class GateGradients:
    """Per-unit ingredients of the theta gradient."""

    dC_dxi: np.ndarray
    log_gamma: np.ndarray


def make_gate(width: int, layer_id: str, theta_init: float = 1.0,
              frozen: bool = False) -> GateVector:
    return GateVector(
        theta=np.full(width, float(theta_init)),
        frozen=np.full(width, bool(frozen)),
        last_sample=np.ones(width),
        layer_id=layer_id,
    )


def sample(g: GateVector, rng: np.random.Generator) -> np.ndarray:
    """Draw a binary realization; P(xi_i = 1) = theta_i.

    Frozen entries return round(theta_i) without consuming randomness, so a
    fully frozen gate never touches the generator.
    """
    out = np.empty(g.width)
    fr = g.frozen
    out[fr] = (g.theta[fr] >= 0.5).astype(np.float64)
    live = ~fr
    k = int(live.sum())
    if k:
        out[live] = (rng.random(k) < g.theta[live]).astype(np.float64)
    g.last_sample = out
    return out


def eval_scale(g: GateVector, x: np.ndarray) -> np.ndarray:
    """Deterministic scaling by theta (frozen entries by round(theta))."""
    if x.shape[-1] != g.width:
        raise DimensionError(f"gate {g.layer_id}: x {x.shape} vs width {g.width}")
    return x * effective_theta(g)


def effective_theta(g: GateVector) -> np.ndarray:
    # ties round up, matching round_and_freeze
    th = g.theta.copy()
    th[g.frozen] = (th[g.frozen] >= 0.5).astype(np.float64)
    return th


def theta_grad(gg: GateGradients) -> np.ndarray:
    """d loss / d theta_k = straight-through dC/dxi_k minus log gamma_k."""
    return gg.dC_dxi - gg.log_gamma


def project(g: GateVector) -> None:
    np.clip(g.theta, 0.0, 1.0, out=g.theta)


def apply_theta_step(g: GateVector, grad: np.ndarray, lr: float) -> None:
    """Projected gradient step on the unfrozen entries."""
    live = ~g.frozen
    g.theta[live] -= lr * as_f64(grad)[live]
    project(g)


def prunable_indices(g: GateVector, theta_tol: float) -> np.ndarray:
    """Units safe to remove: theta strictly below the tolerance."""
    if not 0.0 < theta_tol < 0.5:
        raise ValueError(f"theta_tol must lie in (0, 0.5), got {theta_tol}")
    return np.flatnonzero(g.theta < theta_tol)


def round_and_freeze(g: GateVector) -> None:
    """Snap theta to {0, 1} (ties at 0.5 go up) and freeze the gate."""
    g.theta = (g.theta >= 0.5).astype(np.float64)
    g.frozen = np.ones(g.width, dtype=bool)


def remove_units(g: GateVector, idx) -> None:
    g.theta = np.delete(g.theta, idx)
    g.frozen = np.delete(g.frozen, idx)
    g.last_sample = np.delete(g.last_sample, idx)
