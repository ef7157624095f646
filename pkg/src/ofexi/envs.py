"""Deterministic, seedable toy continuous-control environments.

Two desk-scale tasks: a torque-limited pendulum swing-up and a planar point
mass with drag steering to the origin. Both integrate with semi-implicit
Euler at dt=0.05, run 200-step episodes and compute the step reward from the
pre-step state and the applied action.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class EnvSpec:
    d_o: int
    d_a: int
    action_low: np.ndarray
    action_high: np.ndarray
    max_episode_steps: int
    dt: float


@dataclass
class StepResult:
    next_obs: np.ndarray
    reward: float
    done: bool


PENDULUM_SPEC = EnvSpec(d_o=3, d_a=1, action_low=np.array([-2.0]),
                        action_high=np.array([2.0]), max_episode_steps=200,
                        dt=0.05)
POINTMASS_SPEC = EnvSpec(d_o=4, d_a=2, action_low=np.array([-1.0, -1.0]),
                         action_high=np.array([1.0, 1.0]),
                         max_episode_steps=200, dt=0.05)

_G, _M, _L = 10.0, 1.0, 1.0
_OMEGA_MAX = 8.0
_DRAG = 0.1


def wrap_angle(theta: float) -> float:
    return ((theta + np.pi) % (2.0 * np.pi)) - np.pi


def pendulum_obs(state) -> np.ndarray:
    theta, omega = state
    return np.array([np.cos(theta), np.sin(theta), omega])


def pendulum_step(state, torque: float, steps_taken: int = 0):
    """One swing-up step. Returns (next_state, StepResult).

    Angular acceleration (3g/2l) sin(theta) + (3/ml^2) u, torque clipped to
    [-2, 2], angular velocity clipped to [-8, 8], velocity updated first.
    """
    theta, omega = state
    u = float(np.clip(torque, -2.0, 2.0))
    reward = -(wrap_angle(theta) ** 2 + 0.1 * omega ** 2 + 0.001 * u ** 2)
    omega_dot = 1.5 * _G / _L * np.sin(theta) + 3.0 / (_M * _L ** 2) * u
    omega = float(np.clip(omega + omega_dot * PENDULUM_SPEC.dt, -_OMEGA_MAX, _OMEGA_MAX))
    theta = theta + omega * PENDULUM_SPEC.dt
    next_state = (theta, omega)
    done = steps_taken + 1 >= PENDULUM_SPEC.max_episode_steps
    return next_state, StepResult(next_obs=pendulum_obs(next_state),
                                  reward=float(reward), done=done)


def pointmass_step(state, force, steps_taken: int = 0):
    """One planar double-integrator step with linear drag.

    Returns (next_state, StepResult); reward is -(|pos|^2 + 0.01 |force|^2)
    for the pre-step position, goal at the origin.
    """
    state = np.asarray(state, dtype=np.float64)
    f = np.clip(np.asarray(force, dtype=np.float64), -1.0, 1.0)
    pos, vel = state[:2], state[2:]
    reward = -(pos @ pos + 0.01 * (f @ f))
    dt = POINTMASS_SPEC.dt
    vel = (1.0 - _DRAG * dt) * vel + dt * f
    pos = pos + dt * vel
    next_state = np.concatenate([pos, vel])
    done = steps_taken + 1 >= POINTMASS_SPEC.max_episode_steps
    return next_state, StepResult(next_obs=next_state.copy(),
                                  reward=float(reward), done=done)


class PendulumEnv:
    """Swing-up task: obs (cos theta, sin theta, omega), torque in [-2, 2].

    Initial angle uniform in [-pi, pi], initial velocity uniform in [-1, 1].
    """

    spec = PENDULUM_SPEC

    def __init__(self):
        self._rng = np.random.default_rng(0)
        self._state = (np.pi, 0.0)
        self._steps = 0

    def reset(self, seed=None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        theta = self._rng.uniform(-np.pi, np.pi)
        omega = self._rng.uniform(-1.0, 1.0)
        self._state = (theta, omega)
        self._steps = 0
        return pendulum_obs(self._state)

    def step(self, action) -> StepResult:
        self._state, result = pendulum_step(self._state, np.asarray(action).reshape(-1)[0],
                                            self._steps)
        self._steps += 1
        return result


class PointMassEnv:
    """Planar point mass with drag; start anywhere in the unit box, at rest."""

    spec = POINTMASS_SPEC

    def __init__(self):
        self._rng = np.random.default_rng(0)
        self._state = np.zeros(4)
        self._steps = 0

    def reset(self, seed=None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        pos = self._rng.uniform(-1.0, 1.0, size=2)
        self._state = np.concatenate([pos, np.zeros(2)])
        self._steps = 0
        return self._state.copy()

    def step(self, action) -> StepResult:
        self._state, result = pointmass_step(self._state, action, self._steps)
        self._steps += 1
        return result


ENV_NAMES = ("pendulum", "pointmass")


def make_env(name: str):
    if name == "pendulum":
        return PendulumEnv()
    if name == "pointmass":
        return PointMassEnv()
    raise ValueError(f"unknown env {name!r}; choose from {ENV_NAMES}")


def reset(env, seed=None) -> np.ndarray:
    """Seeded reset; identical seeds give identical initial states."""
    return env.reset(seed=seed)
